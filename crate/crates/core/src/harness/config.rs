use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::{CoefficientModel, ConstantCoefficients, IntegralDrift, MeanFieldOu, MeanFieldOuParams, Phi};
use crate::error::{Error, Result};
use crate::models::{JansenRit, JansenRitParams, KellerSegel, KellerSegelParams};
use crate::sim::InitialLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rate,
    Chaos,
    Oracle,
    Modulus,
    Moment,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Rate => "rate",
            ExperimentKind::Chaos => "chaos",
            ExperimentKind::Oracle => "oracle",
            ExperimentKind::Modulus => "modulus",
            ExperimentKind::Moment => "moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    Ou {
        a: f64,
        c: f64,
        s: f64,
        #[serde(default)]
        g: f64,
        #[serde(default = "one")]
        dim: usize,
    },
    Constant {
        drift: Vec<f64>,
        #[serde(default)]
        diffusion: f64,
    },
    Integral {
        phi: Phi,
        #[serde(default = "one")]
        dim: usize,
        #[serde(default)]
        diffusion: f64,
    },
    JansenRit(JansenRitParams),
    KellerSegel(KellerSegelParams),
}

fn one() -> usize {
    1
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn CoefficientModel>> {
        Ok(match self {
            ModelSpec::Ou { dim, .. } => {
                let params = self.ou_params().expect("ou spec");
                params.validate()?;
                if *dim == 0 {
                    return Err(Error::config("model dimension must be positive"));
                }
                Box::new(MeanFieldOu::new(params, *dim))
            }
            ModelSpec::Constant { drift, diffusion } => {
                if drift.is_empty() || !diffusion.is_finite() || drift.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("constant model needs a finite, non-empty drift"));
                }
                Box::new(ConstantCoefficients {
                    drift: drift.clone(),
                    diffusion: *diffusion,
                })
            }
            ModelSpec::Integral { phi, dim, diffusion } => {
                if *dim == 0 || !diffusion.is_finite() {
                    return Err(Error::config("integral model needs a positive dimension"));
                }
                Box::new(IntegralDrift {
                    phi: *phi,
                    dim: *dim,
                    diffusion: *diffusion,
                })
            }
            ModelSpec::JansenRit(p) => Box::new(JansenRit::new(p.clone())?),
            ModelSpec::KellerSegel(p) => Box::new(KellerSegel::new(*p)?),
        })
    }

    pub fn ou_params(&self) -> Option<MeanFieldOuParams> {
        match *self {
            ModelSpec::Ou { a, c, s, g, .. } => Some(MeanFieldOuParams { a, c, s, g }),
            _ => None,
        }
    }
}

/// Where the chaos study takes the law it compares against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// Closed-form Gaussian marginals of a one-dimensional OU model.
    Gaussian,
    /// A separately simulated ensemble on the same grid.
    Ensemble {
        particles: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub horizon: f64,
    /// Grid sizes `M`, strictly increasing.
    pub steps: Vec<usize>,
    /// Particle counts `N`, strictly increasing.
    pub particles: Vec<usize>,
    pub p: f64,
    pub replications: usize,
    /// Fine steps per coarse step in coupled pairs.
    pub refinement: usize,
    /// Accepted range for the fitted slope, when asserted.
    pub slope_band: Option<[f64; 2]>,
    /// Largest allowed ratio in modulus and moment studies.
    pub max_ratio: Option<f64>,
    pub output: Option<PathBuf>,
    pub model: ModelSpec,
    pub initial: InitialLaw,
    pub reference: Option<ReferenceSpec>,
}

impl ExperimentConfig {
    /// The default study for each kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let powers: Vec<usize> = (4..=9).map(|k| 1 << k).collect();
        let ou = |s: f64, g: f64| ModelSpec::Ou {
            a: -0.5,
            c: -0.5,
            s,
            g,
            dim: 1,
        };
        let base = Self {
            kind,
            seed: 1,
            horizon: 1.0,
            steps: powers.clone(),
            particles: vec![1000],
            p: 2.0,
            replications: 64,
            refinement: 16,
            slope_band: None,
            max_ratio: None,
            output: None,
            model: ou(0.0, 1.0),
            initial: InitialLaw::Gaussian {
                mean: vec![1.0],
                sd: vec![0.5],
            },
            reference: None,
        };
        match kind {
            ExperimentKind::Rate => Self {
                slope_band: Some([0.40, 0.60]),
                ..base
            },
            ExperimentKind::Chaos => Self {
                steps: vec![128],
                particles: (0..8).map(|k| 50 << k).collect(),
                replications: 32,
                model: ou(0.8, 0.0),
                reference: Some(ReferenceSpec::Gaussian),
                ..base
            },
            ExperimentKind::Oracle => Self {
                steps: vec![256],
                particles: vec![10_000],
                replications: 1,
                model: ou(0.8, 0.0),
                ..base
            },
            ExperimentKind::Modulus => Self {
                replications: 8,
                max_ratio: Some(3.0),
                model: ModelSpec::Constant {
                    drift: vec![0.0],
                    diffusion: 1.0,
                },
                initial: InitialLaw::dirac_origin(1),
                ..base
            },
            ExperimentKind::Moment => Self {
                replications: 8,
                max_ratio: Some(2.0),
                model: ou(0.8, 0.0),
                ..base
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form without the output location, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        let params = Self {
            output: None,
            ..self.clone()
        };
        Ok(hex::encode(Sha256::digest(params.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        increasing("steps", &self.steps)?;
        increasing("particles", &self.particles)?;
        if !(self.p.is_finite() && self.p >= 2.0) {
            return Err(Error::config(format!("p must be at least 2, got {}", self.p)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config("horizon must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::config("need at least one replication"));
        }
        let model = self.model.build()?;
        self.initial.validate()?;
        if self.initial.dim() != model.dim() {
            return Err(Error::config(format!(
                "initial law has dimension {} but the model has {}",
                self.initial.dim(),
                model.dim()
            )));
        }
        match self.kind {
            ExperimentKind::Rate => {
                if self.steps.len() < 4 {
                    return Err(Error::config("rate study needs at least 4 grid sizes"));
                }
                if self.refinement < 2 {
                    return Err(Error::config("refinement must be at least 2"));
                }
            }
            ExperimentKind::Chaos => {
                if self.particles.len() < 4 {
                    return Err(Error::config("chaos study needs at least 4 particle counts"));
                }
                self.check_reference(model.dim())?;
            }
            ExperimentKind::Oracle => {
                if self.model.ou_params().is_none() {
                    return Err(Error::config("oracle study needs the OU model"));
                }
                gaussian_start(&self.initial)?;
            }
            ExperimentKind::Modulus => {
                if self.steps[0] < 2 {
                    return Err(Error::config("modulus study needs at least 2 steps"));
                }
            }
            ExperimentKind::Moment => {}
        }
        Ok(())
    }

    fn check_reference(&self, dim: usize) -> Result<()> {
        match &self.reference {
            None => Err(Error::config("chaos study needs a reference law")),
            Some(ReferenceSpec::Gaussian) => {
                let ok = matches!(self.model.ou_params(), Some(p) if p.g == 0.0)
                    && dim == 1
                    && self.p == 2.0;
                if !ok {
                    return Err(Error::config(
                        "Gaussian reference needs a one-dimensional OU model with constant noise and p = 2",
                    ));
                }
                gaussian_start(&self.initial).map(|_| ())
            }
            Some(ReferenceSpec::Ensemble { particles, .. }) => {
                if *particles == 0 {
                    return Err(Error::config("reference ensemble needs particles"));
                }
                if dim > 1 && self.particles.iter().any(|n| n != particles) {
                    return Err(Error::config(
                        "multi-dimensional reference ensembles must match every particle count",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Mean and variance of each coordinate of a Gaussian or Dirac initial law.
pub(crate) fn gaussian_start(initial: &InitialLaw) -> Result<Vec<(f64, f64)>> {
    match initial {
        InitialLaw::Dirac { point } => Ok(point.iter().map(|&m| (m, 0.0)).collect()),
        InitialLaw::Gaussian { mean, sd } => Ok(mean.iter().zip(sd).map(|(&m, &s)| (m, s * s)).collect()),
        InitialLaw::Uniform { .. } => Err(Error::config(
            "closed-form references need a Gaussian or Dirac initial law",
        )),
    }
}

fn increasing(name: &str, xs: &[usize]) -> Result<()> {
    if xs.is_empty() || xs[0] == 0 {
        return Err(Error::config(format!("{name} must be a non-empty list of positive values")));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}
