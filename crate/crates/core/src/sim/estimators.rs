use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::euclidean_norm;

use super::ensemble::ParticleEnsemble;

/// Monte Carlo estimate of `E[e^p]^{1/p}` from samples `e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMean {
    pub p: f64,
    /// Sample mean of `e^p`.
    pub mean_pow: f64,
    /// Standard error of `mean_pow`.
    pub stderr_pow: f64,
    pub samples: usize,
}

impl PowerMean {
    pub fn from_samples(errors: &[f64], p: f64) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::domain("no samples"));
        }
        if !(p >= 1.0) {
            return Err(Error::domain(format!("p must be at least 1, got {p}")));
        }
        let pow: Vec<f64> = errors.iter().map(|e| e.powf(p)).collect();
        let (mean, se) = mean_stderr(&pow);
        Ok(Self {
            p,
            mean_pow: mean,
            stderr_pow: se,
            samples: pow.len(),
        })
    }

    /// Combines independent replications: the mean of their `mean_pow`,
    /// with the standard error taken across replications.
    pub fn pool(reps: &[PowerMean]) -> Result<Self> {
        let first = reps.first().ok_or_else(|| Error::domain("no replications"))?;
        if reps.iter().any(|r| r.p != first.p) {
            return Err(Error::domain("replications use different p"));
        }
        if reps.len() == 1 {
            return Ok(*first);
        }
        let means: Vec<f64> = reps.iter().map(|r| r.mean_pow).collect();
        let (mean, se) = mean_stderr(&means);
        Ok(Self {
            p: first.p,
            mean_pow: mean,
            stderr_pow: se,
            samples: reps.len(),
        })
    }

    pub fn estimate(&self) -> f64 {
        self.mean_pow.powf(1.0 / self.p)
    }

    /// Delta-method standard error of [`PowerMean::estimate`].
    pub fn stderr(&self) -> f64 {
        if self.mean_pow == 0.0 {
            return 0.0;
        }
        self.mean_pow.powf(1.0 / self.p - 1.0) * self.stderr_pow / self.p
    }
}

/// Mean and standard error of the mean (0 for a single sample), summed in order.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `E[max_m |X^fine_{t_m} - X^coarse_{t_m}|^p]^{1/p}` over the coarse knots.
pub fn strong_error(coarse: &ParticleEnsemble, fine: &ParticleEnsemble, p: f64) -> Result<PowerMean> {
    let ratio = check_lineage(coarse, fine)?;
    let errors: Vec<f64> = (0..coarse.particles)
        .map(|i| {
            (0..=coarse.grid.steps())
                .map(|m| distance(fine.state(i, m * ratio), coarse.state(i, m)))
                .fold(0.0, f64::max)
        })
        .collect();
    PowerMean::from_samples(&errors, p)
}

fn check_lineage(coarse: &ParticleEnsemble, fine: &ParticleEnsemble) -> Result<usize> {
    if !coarse.is_complete() || !fine.is_complete() {
        return Err(Error::domain("strong error needs complete ensembles"));
    }
    let (mc, mf) = (coarse.grid.steps(), fine.grid.steps());
    let same_path = coarse.seed == fine.seed
        && coarse.particles == fine.particles
        && coarse.dim == fine.dim
        && coarse.model_id == fine.model_id
        && coarse.grid.horizon() == fine.grid.horizon()
        && mf % mc == 0
        && mc * coarse.noise_stride == mf * fine.noise_stride;
    if !same_path {
        return Err(Error::domain(
            "ensembles are not a coupled pair (seed, size, model or grids differ)",
        ));
    }
    Ok(mf / mc)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `E[max_m |X_{t_{m+1}} - X_{t_m}|^p]^{1/p}`: the knot proxy of the path modulus.
pub fn path_modulus(ens: &ParticleEnsemble, p: f64) -> Result<PowerMean> {
    path_modulus_refined(ens, 1, p)
}

/// Path modulus of the coarse grid with `refinement - 1` interior points per
/// coarse step read from a finer ensemble: `max_m max_r |X_{t_m + r h'} - X_{t_m}|`.
pub fn path_modulus_refined(fine: &ParticleEnsemble, refinement: usize, p: f64) -> Result<PowerMean> {
    if !fine.is_complete() {
        return Err(Error::domain("path modulus needs a complete ensemble"));
    }
    if refinement == 0 || !fine.grid.steps().is_multiple_of(refinement) {
        return Err(Error::domain("refinement must divide the number of steps"));
    }
    let coarse_steps = fine.grid.steps() / refinement;
    if coarse_steps < 2 {
        return Err(Error::domain("path modulus is degenerate for fewer than 2 steps"));
    }
    let errors: Vec<f64> = (0..fine.particles)
        .map(|i| {
            let mut worst = 0.0f64;
            for m in 0..coarse_steps {
                let base = fine.state(i, m * refinement);
                for r in 1..=refinement {
                    worst = worst.max(distance(fine.state(i, m * refinement + r), base));
                }
            }
            worst
        })
        .collect();
    PowerMean::from_samples(&errors, p)
}

/// `E[max_m |X_{t_m}|^p]^{1/p}`.
pub fn sup_moment(ens: &ParticleEnsemble, p: f64) -> Result<PowerMean> {
    let sups: Vec<f64> = (0..ens.particles)
        .map(|i| {
            (0..ens.filled)
                .map(|m| euclidean_norm(ens.state(i, m)))
                .fold(0.0, f64::max)
        })
        .collect();
    PowerMean::from_samples(&sups, p)
}

/// Componentwise sample mean and unbiased variance of the ensemble at knot `m`.
pub fn column_moments(ens: &ParticleEnsemble, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (ens.particles, ens.dim);
    let col = ens.column(m);
    let mut mean = vec![0.0; d];
    for x in col.chunks(d) {
        for (a, v) in mean.iter_mut().zip(x) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut var = vec![0.0; d];
    if n > 1 {
        for x in col.chunks(d) {
            for ((s, v), mu) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - mu) * (v - mu);
            }
        }
        var.iter_mut().for_each(|s| *s /= (n - 1) as f64);
    }
    (mean, var)
}
