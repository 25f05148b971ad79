use serde::{Deserialize, Serialize};

use super::{CoefficientInput, CoefficientModel};
use crate::error::{Error, Result};
use crate::grid::AffinePathView;
use crate::transport::MeasurePathView;

/// Drift `v` (constant) and diffusion `s I`. Covers the zero model, constant
/// drift and plain Brownian motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCoefficients {
    pub drift: Vec<f64>,
    pub diffusion: f64,
}

impl ConstantCoefficients {
    pub fn zero(dim: usize) -> Self {
        Self {
            drift: vec![0.0; dim],
            diffusion: 0.0,
        }
    }

    pub fn brownian(dim: usize) -> Self {
        Self {
            drift: vec![0.0; dim],
            diffusion: 1.0,
        }
    }

    pub fn constant_drift(v: Vec<f64>) -> Self {
        Self {
            drift: v,
            diffusion: 0.0,
        }
    }
}

impl CoefficientModel for ConstantCoefficients {
    fn id(&self) -> String {
        "constant".into()
    }

    fn dim(&self) -> usize {
        self.drift.len()
    }

    fn noise_dim(&self) -> usize {
        self.drift.len()
    }

    fn lipschitz_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn drift(&self, _input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.drift);
        Ok(())
    }

    fn diffusion(&self, _input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        let d = self.drift.len();
        out.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..d {
            out[i * d + i] = self.diffusion;
        }
        Ok(())
    }
}

/// Parameters of `dX = (a X + c E[X]) dt + (s + g X) dB`, applied
/// coordinate-wise. With `g = 0` the marginals are Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldOuParams {
    /// State feedback rate.
    pub a: f64,
    /// Mean-field feedback rate.
    pub c: f64,
    /// Additive diffusion.
    pub s: f64,
    /// State-proportional diffusion.
    #[serde(default)]
    pub g: f64,
}

impl MeanFieldOuParams {
    pub fn validate(&self) -> Result<()> {
        if [self.a, self.c, self.s, self.g].iter().any(|v| !v.is_finite()) {
            return Err(Error::config("mean-field OU parameters must be finite"));
        }
        if self.s < 0.0 {
            return Err(Error::config("additive diffusion s must be nonnegative"));
        }
        Ok(())
    }
}

/// `a · x(t) + c · mean(i_m(μ)_t)`.
pub fn ou_drift(
    params: &MeanFieldOuParams,
    t: f64,
    path: &AffinePathView<'_>,
    measures: &MeasurePathView<'_>,
) -> Result<Vec<f64>> {
    let x = path.eval(t)?;
    let mean = measures.at(t)?.mean();
    Ok(x.iter()
        .zip(&mean)
        .map(|(xi, mi)| params.a * xi + params.c * mi)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldOu {
    pub params: MeanFieldOuParams,
    pub dim: usize,
}

impl MeanFieldOu {
    pub fn new(params: MeanFieldOuParams, dim: usize) -> Self {
        Self { params, dim }
    }
}

impl CoefficientModel for MeanFieldOu {
    fn id(&self) -> String {
        "ou".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.dim
    }

    /// Drift: `|a| + |c|` (the mean is 1-Lipschitz in `W_1 <= W_p`);
    /// diffusion: `|g|`.
    fn lipschitz_constant(&self) -> Option<f64> {
        let p = &self.params;
        Some((p.a.abs() + p.c.abs()).max(p.g.abs()))
    }

    fn summarize(&self, t: f64, _step: usize, measures: &MeasurePathView<'_>) -> Result<Vec<f64>> {
        Ok(measures.at(t)?.mean())
    }

    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        input.path.eval_into(input.t, out)?;
        for (o, m) in out.iter_mut().zip(input.summary) {
            *o = self.params.a * *o + self.params.c * m;
        }
        Ok(())
    }

    fn diffusion(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        out.iter_mut().for_each(|x| *x = 0.0);
        if self.params.g == 0.0 {
            for i in 0..d {
                out[i * d + i] = self.params.s;
            }
            return Ok(());
        }
        let mut stack = [0.0; 8];
        let mut heap = Vec::new();
        let x = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap[..]
        };
        input.path.eval_into(input.t, x)?;
        for i in 0..d {
            out[i * d + i] = self.params.s + self.params.g * x[i];
        }
        Ok(())
    }
}

/// First two moments of one coordinate of the mean-field OU law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMoments {
    pub mean: f64,
    pub second: f64,
}

impl OuMoments {
    pub fn from_mean_variance(mean: f64, variance: f64) -> Self {
        Self {
            mean,
            second: variance + mean * mean,
        }
    }

    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }

    fn rate(p: &MeanFieldOuParams, y: [f64; 2]) -> [f64; 2] {
        let [m, s2] = y;
        [
            (p.a + p.c) * m,
            (2.0 * p.a + p.g * p.g) * s2 + 2.0 * p.c * m * m + p.s * p.s + 2.0 * p.s * p.g * m,
        ]
    }

    /// Integrates the closed moment system
    /// `m' = (a + c) m`, `S' = (2a + g^2) S + 2c m^2 + s^2 + 2 s g m`
    /// with classical RK4.
    pub fn evolve(self, p: &MeanFieldOuParams, t: f64, steps: usize) -> Self {
        let h = t / steps as f64;
        let mut y = [self.mean, self.second];
        for _ in 0..steps {
            let k1 = Self::rate(p, y);
            let k2 = Self::rate(p, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = Self::rate(p, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = Self::rate(p, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Self {
            mean: y[0],
            second: y[1],
        }
    }

    /// Closed-form Gaussian marginal `(mean, variance)` at time `t` when `g = 0`.
    pub fn gaussian_marginal(p: &MeanFieldOuParams, mean0: f64, var0: f64, t: f64) -> Result<(f64, f64)> {
        if p.g != 0.0 {
            return Err(Error::config("marginals are Gaussian only when g = 0"));
        }
        let mean = mean0 * ((p.a + p.c) * t).exp();
        let var = if p.a == 0.0 {
            var0 + p.s * p.s * t
        } else {
            let e = (2.0 * p.a * t).exp();
            var0 * e + p.s * p.s * (e - 1.0) / (2.0 * p.a)
        };
        Ok((mean, var))
    }
}

/// Bounded test functions applied coordinate-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    Zero,
    One,
    /// Unbounded; only for consistency checks.
    Identity,
    Tanh,
    Clamp { bound: f64 },
}

impl Phi {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Phi::Zero => 0.0,
            Phi::One => 1.0,
            Phi::Identity => x,
            Phi::Tanh => x.tanh(),
            Phi::Clamp { bound } => x.clamp(-bound, bound),
        }
    }

    /// `sup |φ|`, infinite for the identity.
    pub fn sup(&self) -> f64 {
        match *self {
            Phi::Zero => 0.0,
            Phi::One | Phi::Tanh => 1.0,
            Phi::Identity => f64::INFINITY,
            Phi::Clamp { bound } => bound.abs(),
        }
    }
}

/// `b(t, X, μ) = ∫_0^t E[φ(X_s)] ds`, with the expectation replaced by the
/// ensemble average and the integral by the composite trapezoid rule on the
/// knots; diffusion `s I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralDrift {
    pub phi: Phi,
    pub dim: usize,
    #[serde(default)]
    pub diffusion: f64,
}

impl CoefficientModel for IntegralDrift {
    fn id(&self) -> String {
        "integral".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.dim
    }

    fn measure_integrands(&self) -> usize {
        self.dim
    }

    fn measure_integrand(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.phi.apply(*v);
        }
    }

    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        if input.measure_integrals.len() != self.dim {
            return Err(Error::Internal("integral drift received no accumulator values".into()));
        }
        out.copy_from_slice(input.measure_integrals);
        Ok(())
    }

    fn diffusion(&self, _input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        out.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..d {
            out[i * d + i] = self.diffusion;
        }
        Ok(())
    }
}
