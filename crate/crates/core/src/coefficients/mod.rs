//! Drift/diffusion contract for path-dependent mean-field models, plus the
//! synthetic built-in models used as oracles.
//!
//! A model sees, at time `t`, the interpolated path of one particle and the
//! interpolated path of empirical measures, both frozen at the current step.
//! Running time integrals are owned by the simulator: a model declares how
//! many integrands it needs (per particle, or averaged over the ensemble)
//! and receives their trapezoid values through [`CoefficientInput`].

mod builtin;
mod trapezoid;

pub use builtin::{
    ou_drift, ConstantCoefficients, IntegralDrift, MeanFieldOu, MeanFieldOuParams, OuMoments, Phi,
};
pub use trapezoid::TrapezoidAccumulator;

use crate::error::Result;
use crate::grid::AffinePathView;
use crate::transport::MeasurePathView;

/// Everything a coefficient evaluation may read.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientInput<'a> {
    pub t: f64,
    /// Index `m` of the last populated knot.
    pub step: usize,
    pub path: AffinePathView<'a>,
    pub measures: MeasurePathView<'a>,
    /// Output of [`CoefficientModel::summarize`] for this step.
    pub summary: &'a [f64],
    /// Trapezoid integrals of [`CoefficientModel::particle_integrand`] along this particle's path.
    pub particle_integrals: &'a [f64],
    /// Trapezoid integrals of the ensemble average of [`CoefficientModel::measure_integrand`].
    pub measure_integrals: &'a [f64],
}

pub trait CoefficientModel: Send + Sync {
    /// Stable identifier written into output headers.
    fn id(&self) -> String;

    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Noise dimension `q`.
    fn noise_dim(&self) -> usize;

    /// Hölder exponent in time.
    fn holder_exponent(&self) -> f64 {
        1.0
    }

    /// Lipschitz constant in the path and measure arguments, when known.
    fn lipschitz_constant(&self) -> Option<f64> {
        None
    }

    fn particle_integrands(&self) -> usize {
        0
    }

    fn particle_integrand(&self, _t: f64, _x: &[f64], _out: &mut [f64]) {}

    fn measure_integrands(&self) -> usize {
        0
    }

    fn measure_integrand(&self, _t: f64, _x: &[f64], _out: &mut [f64]) {}

    /// Per-step reduction over the frozen measure path, shared by all particles.
    fn summarize(&self, _t: f64, _step: usize, _measures: &MeasurePathView<'_>) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }

    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()>;

    /// Row-major `d x q` diffusion matrix.
    fn diffusion(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()>;
}

impl<M: CoefficientModel + ?Sized> CoefficientModel for Box<M> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn holder_exponent(&self) -> f64 {
        (**self).holder_exponent()
    }
    fn lipschitz_constant(&self) -> Option<f64> {
        (**self).lipschitz_constant()
    }
    fn particle_integrands(&self) -> usize {
        (**self).particle_integrands()
    }
    fn particle_integrand(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (**self).particle_integrand(t, x, out)
    }
    fn measure_integrands(&self) -> usize {
        (**self).measure_integrands()
    }
    fn measure_integrand(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (**self).measure_integrand(t, x, out)
    }
    fn summarize(&self, t: f64, step: usize, measures: &MeasurePathView<'_>) -> Result<Vec<f64>> {
        (**self).summarize(t, step, measures)
    }
    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        (**self).drift(input, out)
    }
    fn diffusion(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        (**self).diffusion(input, out)
    }
}
