use serde::{Deserialize, Serialize};

use crate::coefficients::TrapezoidAccumulator;
use crate::error::{Error, Result};
use crate::grid::{AffinePathView, TimeGrid};
use crate::transport::{EmpiricalMeasure, MeasurePathView};

use super::brownian::BrownianDriver;

/// Law of `X_0`, sampled deterministically per `(seed, particle)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    Dirac { point: Vec<f64> },
    /// Independent coordinates `N(mean_j, sd_j^2)`.
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl InitialLaw {
    pub fn dirac_origin(dim: usize) -> Self {
        InitialLaw::Dirac {
            point: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Dirac { point } => point.len(),
            InitialLaw::Gaussian { mean, .. } => mean.len(),
            InitialLaw::Uniform { low, .. } => low.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InitialLaw::Dirac { point } => point.iter().all(|v| v.is_finite()),
            InitialLaw::Gaussian { mean, sd } => {
                mean.len() == sd.len()
                    && mean.iter().all(|v| v.is_finite())
                    && sd.iter().all(|v| v.is_finite() && *v >= 0.0)
            }
            InitialLaw::Uniform { low, high } => {
                low.len() == high.len()
                    && low.iter().zip(high).all(|(a, b)| a.is_finite() && b.is_finite() && a <= b)
            }
        };
        if !ok || self.dim() == 0 {
            return Err(Error::config(format!("invalid initial law {self:?}")));
        }
        Ok(())
    }

    pub(crate) fn sample_into(&self, driver: &BrownianDriver, particle: usize, out: &mut [f64]) {
        match self {
            InitialLaw::Dirac { point } => out.copy_from_slice(point),
            InitialLaw::Gaussian { mean, sd } => {
                let mut rng = driver.initial_rng(particle);
                for ((o, m), s) in out.iter_mut().zip(mean).zip(sd) {
                    *o = m + s * rng.next_normal();
                }
            }
            InitialLaw::Uniform { low, high } => {
                let mut rng = driver.initial_rng(particle);
                for ((o, a), b) in out.iter_mut().zip(low).zip(high) {
                    *o = a + (b - a) * rng.next_uniform();
                }
            }
        }
    }
}

/// Knot-major particle states `X^i_{t_m}`, `m = 0..=M`, with the running
/// integrals the scheme keeps for each particle and for the ensemble.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub(crate) particles: usize,
    pub(crate) dim: usize,
    pub(crate) grid: TimeGrid,
    pub(crate) seed: u64,
    pub(crate) noise_stride: usize,
    pub(crate) model_id: String,
    pub(crate) states: Vec<f64>,
    pub(crate) filled: usize,
    pub(crate) particle_integrals: Vec<TrapezoidAccumulator>,
    pub(crate) measure_integrals: Vec<TrapezoidAccumulator>,
}

impl ParticleEnsemble {
    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fine Brownian steps consumed per step of this ensemble's grid.
    pub fn noise_stride(&self) -> usize {
        self.noise_stride
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Number of populated knots.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn is_complete(&self) -> bool {
        self.filled == self.grid.steps() + 1
    }

    /// Raw knot-major buffer of populated knots.
    pub fn states(&self) -> &[f64] {
        &self.states[..self.filled * self.width()]
    }

    pub(crate) fn width(&self) -> usize {
        self.particles * self.dim
    }

    /// All particle states at knot `m`.
    pub fn column(&self, m: usize) -> &[f64] {
        assert!(m < self.filled, "knot {m} not populated");
        let w = self.width();
        &self.states[m * w..(m + 1) * w]
    }

    pub fn state(&self, particle: usize, m: usize) -> &[f64] {
        let start = particle * self.dim;
        &self.column(m)[start..start + self.dim]
    }

    /// Empirical measure `μ^N_{t_m}`.
    pub fn measure(&self, m: usize) -> EmpiricalMeasure<'_> {
        EmpiricalMeasure::from_slice_unchecked(self.dim, self.column(m))
    }

    /// Interpolated path of `particle` through the populated knots.
    pub fn path(&self, particle: usize) -> AffinePathView<'_> {
        AffinePathView::new(
            self.states(),
            particle * self.dim,
            self.width(),
            self.dim,
            self.filled,
            self.grid,
        )
        .expect("ensemble layout is consistent")
    }

    /// Interpolated path of empirical measures through the populated knots.
    pub fn measure_path(&self) -> MeasurePathView<'_> {
        MeasurePathView::new(self.states(), self.particles, self.dim, self.filled, self.grid)
            .expect("ensemble layout is consistent")
    }

    /// Continuous extension `i_M(X^i)` at time `t`.
    pub fn continuous_eval(&self, particle: usize, t: f64) -> Result<Vec<f64>> {
        if particle >= self.particles {
            return Err(Error::domain(format!(
                "particle {particle} out of range for {} particles",
                self.particles
            )));
        }
        self.path(particle).eval(t)
    }

    /// Particle `particle`'s trapezoid integrals at the last populated knot.
    pub fn particle_integrals(&self, particle: usize) -> Vec<f64> {
        let p = self.particle_integrals.len() / self.particles;
        self.particle_integrals[particle * p..(particle + 1) * p]
            .iter()
            .map(TrapezoidAccumulator::value)
            .collect()
    }

    pub fn measure_integrals(&self) -> Vec<f64> {
        self.measure_integrals.iter().map(TrapezoidAccumulator::value).collect()
    }
}
