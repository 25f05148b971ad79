//! Three-population neural mass model with intrinsic excitability and a
//! uniform transmission delay.
//!
//! State `V = (V_1, V_2, V_3)`: pyramidal, excitatory feedback and inhibitory
//! interneuron potentials. Component `j` of the drift is
//!
//! ```text
//! -V_j / τ_j + Σ_k D_{jk} (1 + ε ∫_0^t φ(V_s) ds) ∫ S(y_k) μ_{t-Δ}(dy) + I_j(t)
//! ```
//!
//! where `μ_{t-Δ}` is the Dirac mass at the origin for `t <= Δ`. Noise is
//! diagonal with amplitudes `f_j(t)`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientInput, CoefficientModel};
use crate::error::{Error, Result};
use crate::grid::{AffinePathView, TimeGrid};
use crate::transport::{MeasureAt, MeasurePathView};

/// Logistic firing-rate function `S(v) = v_m / (1 + exp(r (v_0 - v)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub vm: f64,
    pub r: f64,
    pub v0: f64,
}

impl Sigmoid {
    pub fn eval(&self, v: f64) -> f64 {
        self.vm / (1.0 + (self.r * (self.v0 - v)).exp())
    }

    pub fn lipschitz(&self) -> f64 {
        self.vm * self.r
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && 0.0 < self.v0 && self.v0 < self.vm) {
            return Err(Error::config(format!(
                "sigmoid needs r > 0 and 0 < v0 < vm, got r={}, v0={}, vm={}",
                self.r, self.v0, self.vm
            )));
        }
        Ok(())
    }
}

pub fn sigmoid_s(v: f64, vm: f64, r: f64, v0: f64) -> f64 {
    Sigmoid { vm, r, v0 }.eval(v)
}

/// Lipschitz functions of time used for inputs `I_j` and noise amplitudes `f_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    Sine { offset: f64, amplitude: f64, frequency: f64 },
}

impl TimeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::Linear { offset, slope } => offset + slope * t,
            TimeFunction::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin(),
        }
    }

    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }
}

/// Bounded Lipschitz path functional `φ: R^3 -> R` driving excitability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Excitability {
    Zero,
    ClampCoordinate { index: usize, bound: f64 },
    TanhCoordinate { index: usize },
}

impl Excitability {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Excitability::Zero => 0.0,
            Excitability::ClampCoordinate { index, bound } => x[index].clamp(-bound, bound),
            Excitability::TanhCoordinate { index } => x[index].tanh(),
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Excitability::Zero => 0.0,
            Excitability::ClampCoordinate { bound, .. } => bound.abs(),
            Excitability::TanhCoordinate { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JansenRitParams {
    /// Shared membrane time constant of populations 1 and 2.
    pub tau_excitatory: f64,
    /// Membrane time constant of population 3.
    pub tau_inhibitory: f64,
    /// Coupling strengths `D_{jk}`; only (1,2), (1,3), (2,1), (3,1) may be nonzero.
    pub coupling: [[f64; 3]; 3],
    /// Plasticity rate `ε`.
    pub epsilon: f64,
    pub sigmoid: Sigmoid,
    /// Transmission delay `Δ` in time units.
    pub delay: f64,
    pub input: [TimeFunction; 3],
    pub noise: [TimeFunction; 3],
    pub excitability: Excitability,
    /// Look up non-knot delayed times through the interpolated measure path
    /// instead of rejecting delays that are not a multiple of the step.
    #[serde(default)]
    pub interpolate_delay: bool,
}

impl Default for JansenRitParams {
    fn default() -> Self {
        Self {
            tau_excitatory: 1.0,
            tau_inhibitory: 2.0,
            coupling: [[0.0, 1.0, 0.5], [0.8, 0.0, 0.0], [0.25, 0.0, 0.0]],
            epsilon: 0.05,
            sigmoid: Sigmoid {
                vm: 5.0,
                r: 0.56,
                v0: 2.5,
            },
            delay: 0.0,
            input: [
                TimeFunction::constant(1.0),
                TimeFunction::constant(0.0),
                TimeFunction::constant(0.0),
            ],
            noise: [TimeFunction::constant(0.5); 3],
            excitability: Excitability::ClampCoordinate { index: 0, bound: 1.0 },
            interpolate_delay: false,
        }
    }
}

const ALLOWED_COUPLING: [(usize, usize); 4] = [(0, 1), (0, 2), (1, 0), (2, 0)];

impl JansenRitParams {
    pub fn tau(&self, j: usize) -> f64 {
        if j < 2 {
            self.tau_excitatory
        } else {
            self.tau_inhibitory
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_excitatory > 0.0 && self.tau_inhibitory > 0.0) {
            return Err(Error::config("membrane time constants must be positive"));
        }
        for (j, row) in self.coupling.iter().enumerate() {
            for (k, &d) in row.iter().enumerate() {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::config(format!("coupling D[{j}][{k}] must be nonnegative")));
                }
                if d != 0.0 && !ALLOWED_COUPLING.contains(&(j, k)) {
                    return Err(Error::config(format!(
                        "coupling D[{j}][{k}] must vanish in the three-population pattern"
                    )));
                }
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config("plasticity rate must be nonnegative"));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::config("delay must be nonnegative"));
        }
        if let Excitability::ClampCoordinate { index, .. } | Excitability::TanhCoordinate { index } =
            self.excitability
        {
            if index >= 3 {
                return Err(Error::config("excitability reads a coordinate of R^3"));
            }
        }
        self.sigmoid.validate()
    }

    /// Delay in whole grid steps; errors if it is not a multiple of the step
    /// unless interpolated lookups are enabled.
    pub fn delay_steps(&self, grid: &TimeGrid) -> Result<Option<usize>> {
        if self.delay >= grid.horizon() {
            return Err(Error::config(format!(
                "delay {} must be smaller than the horizon {}",
                self.delay,
                grid.horizon()
            )));
        }
        let ratio = self.delay / grid.step_size();
        let k = ratio.round();
        if (ratio - k).abs() <= 1e-9 * ratio.max(1.0) {
            return Ok(Some(k as usize));
        }
        if self.interpolate_delay {
            Ok(None)
        } else {
            Err(Error::config(format!(
                "delay {} is not a multiple of the step {}",
                self.delay,
                grid.step_size()
            )))
        }
    }

    /// `∫ S(y_k) μ_{t-Δ}(dy)` for `k = 1, 2, 3`, with `μ = δ_0` for `t <= Δ`.
    pub fn delayed_rates(&self, t: f64, measures: &MeasurePathView<'_>) -> Result<[f64; 3]> {
        let grid = measures.grid();
        let at_origin = [self.sigmoid.eval(0.0); 3];
        let (m, w) = grid.locate(t);
        let delayed = match self.delay_steps(&grid)? {
            Some(k) if w == 0.0 => {
                if m <= k {
                    return Ok(at_origin);
                }
                MeasureAt::Pure(measures.knot((m - k).min(measures.len() - 1)))
            }
            _ => {
                if t <= self.delay {
                    return Ok(at_origin);
                }
                measures.at(t - self.delay)?
            }
        };
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = delayed.average(|y| self.sigmoid.eval(y[k]));
        }
        Ok(out)
    }
}

/// Drift given the current state, the excitability integral and the
/// delayed population rates.
fn drift_from_parts(p: &JansenRitParams, t: f64, v: &[f64], excitability: f64, rates: &[f64; 3], out: &mut [f64]) {
    let gain = 1.0 + p.epsilon * excitability;
    for j in 0..3 {
        let coupling: f64 = (0..3).map(|k| p.coupling[j][k] * gain * rates[k]).sum();
        out[j] = -v[j] / p.tau(j) + coupling + p.input[j].eval(t);
    }
}

/// Jansen-Rit drift at time `t` for one particle whose excitability integral
/// `∫_0^t φ(V_s) ds` is `excitability`.
pub fn jansen_rit_drift(
    params: &JansenRitParams,
    t: f64,
    path: &AffinePathView<'_>,
    measures: &MeasurePathView<'_>,
    excitability: f64,
) -> Result<[f64; 3]> {
    let v = path.eval(t)?;
    let rates = params.delayed_rates(t, measures)?;
    let mut out = [0.0; 3];
    drift_from_parts(params, t, &v, excitability, &rates, &mut out);
    Ok(out)
}

/// `diag(f_1(t), f_2(t), f_3(t))`, row-major.
pub fn jansen_rit_diffusion(params: &JansenRitParams, t: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    for j in 0..3 {
        out[j * 3 + j] = params.noise[j].eval(t);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct JansenRit {
    pub params: JansenRitParams,
}

impl JansenRit {
    pub fn new(params: JansenRitParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl CoefficientModel for JansenRit {
    fn id(&self) -> String {
        "jansen_rit".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn particle_integrands(&self) -> usize {
        1
    }

    fn particle_integrand(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.params.excitability.eval(x);
    }

    fn summarize(&self, t: f64, _step: usize, measures: &MeasurePathView<'_>) -> Result<Vec<f64>> {
        Ok(self.params.delayed_rates(t, measures)?.to_vec())
    }

    fn drift(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        let excitability = *input
            .particle_integrals
            .first()
            .ok_or_else(|| Error::Internal("missing excitability accumulator".into()))?;
        let rates: [f64; 3] = input
            .summary
            .try_into()
            .map_err(|_| Error::Internal("missing delayed population rates".into()))?;
        let mut v = [0.0; 3];
        input.path.eval_into(input.t, &mut v)?;
        drift_from_parts(&self.params, input.t, &v, excitability, &rates, out);
        Ok(())
    }

    fn diffusion(&self, input: &CoefficientInput<'_>, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&jansen_rit_diffusion(&self.params, input.t));
        Ok(())
    }
}
