//! Regularized two-dimensional parabolic-parabolic Keller-Segel drift.
//!
//! ```text
//! b(t, x, μ) = b0(t, x) + χ ∫_0^t e^{-λ(t-s)} (K_{t-s} * μ_s)(x) ds
//! K_t(x)     = -x / (2π (t+ε)^2) exp(-|x|^2 / 2t),   K_0 = 0
//! b0(t, x)   = χ e^{-λt} (∇c_0 * g_t)(x),            b0(0, ·) = 0
//! g_t(x)     = exp(-|x|^2 / 2t) / (2π (t+ε))
//! ```
//!
//! The initial concentration is the Gaussian bump
//! `c_0(y) = A exp(-|y|^2 / 2 s0^2)`, for which
//! `(∇c_0 * g_t)(x) = -(t/(t+ε)) A s0^2 / (s0^2+t)^2 · x · exp(-|x|^2 / 2(s0^2+t))`.
//! The memory integral is discretized with trapezoid weights on the knots.
//! Diffusion is the identity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientInput, CoefficientModel};
use crate::error::{Error, Result};
use crate::transport::MeasurePathView;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KellerSegelParams {
    /// Regularization `ε`.
    pub epsilon: f64,
    /// Chemotactic sensitivity `χ`.
    pub chi: f64,
    /// Chemical decay rate `λ`.
    pub lambda: f64,
    /// Amplitude `A` of the initial concentration bump.
    pub amplitude: f64,
    /// Width `s0` of the initial concentration bump.
    pub width: f64,
}

impl Default for KellerSegelParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            chi: 1.0,
            lambda: 1.0,
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

impl KellerSegelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.epsilon, self.chi, self.lambda, self.width];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("epsilon, chi, lambda and width must be positive"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("amplitude must be finite"));
        }
        Ok(())
    }

    /// `sup_{t >= 0, x} |K_t(x)|`, attained at `t = ε/3`, `|x| = sqrt(t)`.
    pub fn kernel_bound(&self) -> f64 {
        let t = self.epsilon / 3.0;
        t.sqrt() * (-0.5f64).exp() / (2.0 * PI * (t + self.epsilon).powi(2))
    }

    /// `sup_{t >= 0, x} |b0(t, x)|` bound `χ |A| e^{-1/2} / s0`.
    pub fn b0_bound(&self) -> f64 {
        self.chi * self.amplitude.abs() * (-0.5f64).exp() / self.width
    }
}

pub fn ks_kernel(t: f64, x: [f64; 2], epsilon: f64) -> [f64; 2] {
    if t <= 0.0 {
        return [0.0, 0.0];
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    let scale = -(-r2 / (2.0 * t)).exp() / (2.0 * PI * (t + epsilon).powi(2));
    [scale * x[0], scale * x[1]]
}

pub fn ks_b0(t: f64, x: [f64; 2], p: &KellerSegelParams) -> [f64; 2] {
    if t <= 0.0 {
        return [0.0, 0.0];
    }
    let s2 = p.width * p.width;
    let spread = s2 + t;
    let r2 = x[0] * x[0] + x[1] * x[1];
    let scale = -p.chi * (-p.lambda * t).exp() * (t / (t + p.epsilon)) * p.amplitude * s2
        / (spread * spread)
        * (-r2 / (2.0 * spread)).exp();
    [scale * x[0], scale * x[1]]
}

/// Per-lag factors `(χ w_k e^{-λ τ_k} / (2π (τ_k+ε)^2), 1 / 2τ_k)` for
/// `τ_k = t - t_k`, `k = 0..m-1`. The lag-zero term vanishes.
fn lag_factors(t: f64, measures: &MeasurePathView<'_>, p: &KellerSegelParams) -> Vec<f64> {
    let grid = measures.grid();
    let h = grid.step_size();
    let m = measures.len() - 1;
    let mut out = Vec::with_capacity(2 * m);
    for k in 0..m {
        let tau = t - grid.knot(k);
        let w = if k == 0 { h / 2.0 } else { h };
        if tau <= 0.0 {
            out.extend_from_slice(&[0.0, 0.0]);
            continue;
        }
        let coef = p.chi * w * (-p.lambda * tau).exp() / (2.0 * PI * (tau + p.epsilon).powi(2));
        out.extend_from_slice(&[coef, 1.0 / (2.0 * tau)]);
    }
    out
}

fn memory_from_factors(x: [f64; 2], measures: &MeasurePathView<'_>, factors: &[f64]) -> [f64; 2] {
    let n = measures.particles() as f64;
    let mut acc = [0.0, 0.0];
    for (k, f) in factors.chunks_exact(2).enumerate() {
        let (coef, inv2tau) = (f[0], f[1]);
        if coef == 0.0 {
            continue;
        }
        let mut sum = [0.0, 0.0];
        for y in measures.knot(k).atoms() {
            let dx = x[0] - y[0];
            let dy = x[1] - y[1];
            let e = (-(dx * dx + dy * dy) * inv2tau).exp();
            sum[0] += e * dx;
            sum[1] += e * dy;
        }
        acc[0] -= coef * sum[0] / n;
        acc[1] -= coef * sum[1] / n;
    }
    acc
}

/// `χ Σ_{k<m} w_k e^{-λ(t-t_k)} (1/N) Σ_j K_{t-t_k}(x - Y^j_{t_k})` over the
/// knots of `history`.
pub fn ks_memory_drift(t: f64, x: [f64; 2], history: &MeasurePathView<'_>, p: &KellerSegelParams) -> Result<[f64; 2]> {
    if history.dim() != 2 {
        return Err(Error::domain("Keller-Segel history must live in R^2"));
    }
    let factors = lag_factors(t, history, p);
    Ok(memory_from_factors(x, history, &factors))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KellerSegel {
    pub params: KellerSegelParams,
}

impl KellerSegel {
    pub fn new(params: KellerSegelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl CoefficientModel for KellerSegel {
    fn id(&self) -> String {
        "keller_segel".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn summarize(&self, t: f64, _step: usize, measures: &MeasurePathView<'_>) -> Result<Vec<f64>> {
        Ok(lag_factors(t, measures, &self.params))
    }

    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        let mut x = [0.0; 2];
        input.path.eval_into(input.t, &mut x)?;
        let b0 = ks_b0(input.t, x, &self.params);
        let mem = memory_from_factors(x, &input.measures, input.summary);
        out[0] = b0[0] + mem[0];
        out[1] = b0[1] + mem[1];
        Ok(())
    }

    fn diffusion(&self, _input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::transport::{stack_measures, EmpiricalMeasure};
    use rand::{Rng, SeedableRng};

    #[test]
    fn kernel_zero_cases() {
        assert_eq!(ks_kernel(0.0, [1.0, -2.0], 0.1), [0.0, 0.0]);
        assert_eq!(ks_kernel(0.7, [0.0, 0.0], 0.1), [0.0, 0.0]);
    }

    #[test]
    fn kernel_bound_holds_on_random_probes() {
        let p = KellerSegelParams::default();
        let bound = p.kernel_bound();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut sup = 0.0f64;
        for _ in 0..100_000 {
            let t = rng.gen_range(0.0..2.0);
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let k = ks_kernel(t, x, p.epsilon);
            sup = sup.max(k[0].hypot(k[1]));
        }
        assert!(sup <= bound);
        assert!(sup > 0.9 * bound, "probe sup {sup} far below bound {bound}");
    }

    #[test]
    fn b0_zero_cases_and_bound() {
        let p = KellerSegelParams::default();
        assert_eq!(ks_b0(0.0, [1.0, 1.0], &p), [0.0, 0.0]);
        assert_eq!(ks_b0(0.4, [0.0, 0.0], &p), [0.0, 0.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let t = rng.gen_range(0.0..3.0);
            let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let b = ks_b0(t, x, &p);
            assert!(b[0].hypot(b[1]) <= p.b0_bound());
        }
    }

    fn random_history(rng: &mut impl Rng, n: usize, knots: usize) -> Vec<f64> {
        let ms: Vec<_> = (0..knots)
            .map(|_| EmpiricalMeasure::new(2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap())
            .collect();
        stack_measures(&ms).unwrap()
    }

    #[test]
    fn memory_drift_cases() {
        let p = KellerSegelParams::default();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let data = random_history(&mut rng, 3, 1);
        let mv = MeasurePathView::new(&data, 3, 2, 1, grid).unwrap();
        assert_eq!(ks_memory_drift(0.0, [0.3, 0.1], &mv, &p).unwrap(), [0.0, 0.0]);

        // every particle sitting at x: zero displacement
        let x = [0.4, -0.2];
        let data: Vec<f64> = (0..3 * 5).flat_map(|_| x).collect();
        let mv = MeasurePathView::new(&data, 5, 2, 3, grid).unwrap();
        assert_eq!(ks_memory_drift(grid.knot(2), x, &mv, &p).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn memory_drift_matches_nested_loops() {
        let p = KellerSegelParams { chi: 1.3, lambda: 0.7, epsilon: 0.2, ..Default::default() };
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let h = grid.step_size();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (n, m) = (3, 2);
        let data = random_history(&mut rng, n, m + 1);
        let mv = MeasurePathView::new(&data, n, 2, m + 1, grid).unwrap();
        let x = [0.25, -0.6];
        let t = grid.knot(m);
        let got = ks_memory_drift(t, x, &mv, &p).unwrap();

        let mut expect = [0.0, 0.0];
        for k in 0..=m {
            let w = if k == 0 || k == m { h / 2.0 } else { h };
            let tau = t - grid.knot(k);
            for j in 0..n {
                let y = &data[(k * n + j) * 2..(k * n + j) * 2 + 2];
                let kv = ks_kernel(tau, [x[0] - y[0], x[1] - y[1]], p.epsilon);
                for c in 0..2 {
                    expect[c] += p.chi * w * (-p.lambda * tau).exp() * kv[c] / n as f64;
                }
            }
        }
        for c in 0..2 {
            assert!((got[c] - expect[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn memory_drift_cost_is_n_times_m() {
        let p = KellerSegelParams::default();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for (n, m) in [(3, 1), (4, 5), (7, 9)] {
            let data = random_history(&mut rng, n, m + 1);
            let mv = MeasurePathView::new(&data, n, 2, m + 1, grid).unwrap();
            let factors = lag_factors(grid.knot(m), &mv, &p);
            let live = factors.chunks_exact(2).filter(|f| f[0] != 0.0).count();
            assert_eq!(live * n, n * m);
        }
    }

    #[test]
    fn total_drift_bound() {
        let p = KellerSegelParams::default();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let bound = p.b0_bound() + p.chi / p.lambda * p.kernel_bound();
        for _ in 0..50 {
            let m = rng.gen_range(1..=16);
            let data = random_history(&mut rng, 6, m + 1);
            let mv = MeasurePathView::new(&data, 6, 2, m + 1, grid).unwrap();
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let t = grid.knot(m);
            let mem = ks_memory_drift(t, x, &mv, &p).unwrap();
            let b0 = ks_b0(t, x, &p);
            assert!((mem[0] + b0[0]).hypot(mem[1] + b0[1]) <= bound);
        }
    }
}
