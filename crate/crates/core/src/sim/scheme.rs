use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientInput, CoefficientModel, TrapezoidAccumulator};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

use super::brownian::{BrownianDriver, NormalStream};
use super::ensemble::{InitialLaw, ParticleEnsemble};

const MIN_CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: TimeGrid,
    pub particles: usize,
    pub seed: u64,
    /// Fine Brownian steps per step of `grid`; `1` unless part of a coupled pair.
    #[serde(default = "one")]
    pub noise_stride: usize,
}

fn one() -> usize {
    1
}

impl SimulationConfig {
    pub fn new(grid: TimeGrid, particles: usize, seed: u64) -> Self {
        Self {
            grid,
            particles,
            seed,
            noise_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::config("need at least one particle"));
        }
        if self.noise_stride == 0 {
            return Err(Error::config("noise stride must be positive"));
        }
        Ok(())
    }
}

/// Per-particle Brownian readers for one run.
#[derive(Debug, Clone)]
pub struct NoiseCursor {
    streams: Vec<NormalStream>,
    stride: usize,
    fine_h: f64,
    noise_dim: usize,
}

impl NoiseCursor {
    pub fn new(driver: &BrownianDriver, particles: usize, grid: TimeGrid, stride: usize) -> Self {
        Self {
            streams: (0..particles).map(|i| driver.stream(i)).collect(),
            stride,
            fine_h: grid.horizon() / (grid.steps() * stride) as f64,
            noise_dim: driver.noise_dim(),
        }
    }
}

/// Populates knot 0 and the integrals at `t_0`.
pub fn initialize(
    model: &dyn CoefficientModel,
    config: &SimulationConfig,
    initial: &InitialLaw,
) -> Result<ParticleEnsemble> {
    config.validate()?;
    initial.validate()?;
    let d = model.dim();
    if initial.dim() != d {
        return Err(Error::config(format!(
            "initial law has dimension {} but model `{}` has {d}",
            initial.dim(),
            model.id()
        )));
    }
    let n = config.particles;
    let width = n
        .checked_mul(d)
        .and_then(|w| w.checked_mul(config.grid.steps() + 1))
        .ok_or_else(|| Error::Resource("ensemble size overflows".into()))?;
    let driver = BrownianDriver::new(config.seed, model.noise_dim());
    let mut states = vec![0.0; width];
    states[..n * d]
        .par_chunks_mut(d)
        .with_min_len(MIN_CHUNK)
        .enumerate()
        .for_each(|(i, x)| initial.sample_into(&driver, i, x));
    let mut ens = ParticleEnsemble {
        particles: n,
        dim: d,
        grid: config.grid,
        seed: config.seed,
        noise_stride: config.noise_stride,
        model_id: model.id(),
        states,
        filled: 1,
        particle_integrals: vec![TrapezoidAccumulator::new(); n * model.particle_integrands()],
        measure_integrals: vec![TrapezoidAccumulator::new(); model.measure_integrands()],
    };
    push_integrands(&mut ens, model, 0);
    Ok(ens)
}

/// Advances the ensemble from knot `m` to `m + 1`.
///
/// Every particle reads the same frozen columns `0..=m`; the new column and
/// the integrals are published only after all particles have been updated.
pub fn euler_step(
    ens: &mut ParticleEnsemble,
    model: &dyn CoefficientModel,
    noise: &mut NoiseCursor,
) -> Result<()> {
    let m = ens.filled - 1;
    if m >= ens.grid.steps() {
        return Err(Error::domain("ensemble is already complete"));
    }
    check_integrals(ens, m + 1)?;
    let (n, d, q) = (ens.particles, ens.dim, model.noise_dim());
    if noise.streams.len() != n || noise.noise_dim != q || noise.stride != ens.noise_stride {
        return Err(Error::Internal("noise cursor does not match the ensemble".into()));
    }
    let grid = ens.grid;
    let h = grid.step_size();
    let t = grid.knot(m);
    let width = ens.width();
    let p_int = model.particle_integrands();
    let particle_values: Vec<f64> = ens.particle_integrals.iter().map(|a| a.value()).collect();
    let measure_values = ens.measure_integrals();

    let (done, rest) = ens.states.split_at_mut((m + 1) * width);
    let done: &[f64] = done;
    let next = &mut rest[..width];
    let measures = crate::transport::MeasurePathView::new(done, n, d, m + 1, grid)?;
    let summary = model.summarize(t, m, &measures)?;
    let (stride, fine_h) = (noise.stride, noise.fine_h);

    let failure = next
        .par_chunks_mut(d)
        .zip(noise.streams.par_iter_mut())
        .with_min_len(MIN_CHUNK)
        .enumerate()
        .map_init(
            || (vec![0.0; d], vec![0.0; d * q], vec![0.0; q]),
            |(b, sigma, db), (i, (out, stream))| -> Option<(usize, Error)> {
                let input = CoefficientInput {
                    t,
                    step: m,
                    path: match crate::grid::AffinePathView::new(done, i * d, width, d, m + 1, grid) {
                        Ok(p) => p,
                        Err(e) => return Some((i, e)),
                    },
                    measures,
                    summary: &summary,
                    particle_integrals: &particle_values[i * p_int..(i + 1) * p_int],
                    measure_integrals: &measure_values,
                };
                if let Err(e) = model.drift(&input, b) {
                    return Some((i, e));
                }
                if let Err(e) = model.diffusion(&input, sigma) {
                    return Some((i, e));
                }
                stream.increment(stride, fine_h, db);
                let x = input.path.last();
                for a in 0..d {
                    let mut v = x[a] + h * b[a];
                    for j in 0..q {
                        v += sigma[a * q + j] * db[j];
                    }
                    if !v.is_finite() {
                        return Some((i, divergence(model, i, m + 1)));
                    }
                    out[a] = v;
                }
                None
            },
        )
        .filter_map(|failure| failure)
        .min_by_key(|(i, _)| *i);
    if let Some((_, e)) = failure {
        return Err(e);
    }
    ens.filled += 1;
    push_integrands(ens, model, m + 1);
    Ok(())
}

fn divergence(model: &dyn CoefficientModel, particle: usize, step: usize) -> Error {
    Error::Divergence {
        particle,
        step,
        model: model.id(),
    }
}

fn check_integrals(ens: &ParticleEnsemble, expected: usize) -> Result<()> {
    let stale = ens
        .particle_integrals
        .iter()
        .chain(&ens.measure_integrals)
        .any(|a| a.count() != expected);
    if stale {
        return Err(Error::Internal(format!(
            "integrals out of sync with the ensemble at knot {}",
            expected - 1
        )));
    }
    Ok(())
}

fn push_integrands(ens: &mut ParticleEnsemble, model: &dyn CoefficientModel, m: usize) {
    let h = ens.grid.step_size();
    let t = ens.grid.knot(m);
    let (d, w) = (ens.dim, ens.width());
    let column = &ens.states[m * w..(m + 1) * w];
    let p = model.particle_integrands();
    if p > 0 {
        ens.particle_integrals
            .par_chunks_mut(p)
            .zip(column.par_chunks(d))
            .with_min_len(MIN_CHUNK)
            .for_each_init(
                || vec![0.0; p],
                |g, (acc, x)| {
                    model.particle_integrand(t, x, g);
                    for (a, v) in acc.iter_mut().zip(g.iter()) {
                        a.push(*v, h);
                    }
                },
            );
    }
    let q = model.measure_integrands();
    if q > 0 {
        let mut values = vec![0.0; ens.particles * q];
        values
            .par_chunks_mut(q)
            .zip(column.par_chunks(d))
            .with_min_len(MIN_CHUNK)
            .for_each(|(g, x)| model.measure_integrand(t, x, g));
        let mut avg = vec![0.0; q];
        for g in values.chunks(q) {
            for (a, v) in avg.iter_mut().zip(g) {
                *a += v;
            }
        }
        for (acc, a) in ens.measure_integrals.iter_mut().zip(avg) {
            acc.push(a / ens.particles as f64, h);
        }
    }
}

pub fn simulate_with(
    model: &dyn CoefficientModel,
    config: &SimulationConfig,
    initial: &InitialLaw,
) -> Result<ParticleEnsemble> {
    let mut ens = initialize(model, config, initial)?;
    let driver = BrownianDriver::new(config.seed, model.noise_dim());
    let mut noise = NoiseCursor::new(&driver, config.particles, config.grid, config.noise_stride);
    for _ in 0..config.grid.steps() {
        euler_step(&mut ens, model, &mut noise)?;
    }
    Ok(ens)
}

pub fn simulate(
    model: &dyn CoefficientModel,
    grid: TimeGrid,
    particles: usize,
    seed: u64,
    initial: &InitialLaw,
) -> Result<ParticleEnsemble> {
    simulate_with(model, &SimulationConfig::new(grid, particles, seed), initial)
}

/// Coarse run on `grid` and fine run on the `refinement`-times finer grid,
/// driven by the same Brownian path and the same initial draws.
pub fn coupled_pair(
    model: &dyn CoefficientModel,
    grid: TimeGrid,
    refinement: usize,
    particles: usize,
    seed: u64,
    initial: &InitialLaw,
) -> Result<(ParticleEnsemble, ParticleEnsemble)> {
    if refinement < 2 {
        return Err(Error::config("refinement factor must be at least 2"));
    }
    let coarse = SimulationConfig {
        grid,
        particles,
        seed,
        noise_stride: refinement,
    };
    let fine = SimulationConfig::new(grid.refine(refinement)?, particles, seed);
    let (c, f) = rayon::join(
        || simulate_with(model, &coarse, initial),
        || simulate_with(model, &fine, initial),
    );
    Ok((c?, f?))
}
