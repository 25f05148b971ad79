//! Wasserstein distances between uniform empirical measures.
//!
//! For two measures with the same number of atoms the optimal coupling can
//! be taken to be a permutation, so `W_p` reduces to a linear assignment
//! problem on the cost matrix `|a_i - b_j|^p`. In one dimension the sorted
//! (quantile) coupling is optimal and much cheaper.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use super::assignment::solve_assignment;
use super::measure::{norm_pow, EmpiricalMeasure, MeasurePathView};
use crate::error::{Error, Result};

pub const DEFAULT_ASSIGNMENT_CAP: usize = 4096;

const PARALLEL_COST_ROWS: usize = 128;

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::domain(format!("Wasserstein order must be >= 1, got {p}")));
    }
    Ok(())
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `W_p` between two equal-size samples on the line via order statistics.
pub fn wasserstein_1d(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Wasserstein distance of an empty sample"));
    }
    if a.len() != b.len() {
        return Err(Error::Unsupported(format!(
            "order-statistic coupling needs equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (a, b) = (sorted(a), sorted(b));
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    Ok((total / a.len() as f64).powf(1.0 / p))
}

/// `W_p` between two samples on the line of possibly different sizes, by
/// integrating `|F^{-1}(u) - G^{-1}(u)|^p` over the merged quantile breakpoints.
pub fn wasserstein_1d_quantile(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("Wasserstein distance of an empty sample"));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len(), b.len());
    // Walk breakpoints i/na and j/nb using integer cross-multiplication.
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let denom = (na as u128) * (nb as u128);
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i as u128 + 1) * nb as u128;
        let next_b = (j as u128 + 1) * na as u128;
        let next = next_a.min(next_b);
        let width = (next - prev) as f64 / denom as f64;
        total += width * (a[i] - b[j]).abs().powf(p);
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    Ok(total.powf(1.0 / p))
}

/// Exact `W_p` between equal-size uniform empirical measures.
#[derive(Debug, Clone, Copy)]
pub struct WassersteinSolver {
    pub cap: usize,
}

impl Default for WassersteinSolver {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ASSIGNMENT_CAP,
        }
    }
}

impl WassersteinSolver {
    pub fn new(cap: usize) -> Self {
        Self { cap }
    }

    fn check_pair(&self, a: &EmpiricalMeasure<'_>, b: &EmpiricalMeasure<'_>, p: f64) -> Result<()> {
        check_p(p)?;
        if a.dim() != b.dim() {
            return Err(Error::domain("measures live in different dimensions"));
        }
        if a.len() != b.len() {
            return Err(Error::Unsupported(format!(
                "assignment coupling needs equal atom counts, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(())
    }

    /// Optimal permutation `i -> π(i)` and the summed cost `Σ |a_i - b_π(i)|^p`.
    pub fn plan(
        &self,
        a: &EmpiricalMeasure<'_>,
        b: &EmpiricalMeasure<'_>,
        p: f64,
    ) -> Result<(f64, Vec<usize>)> {
        self.check_pair(a, b, p)?;
        let n = a.len();
        if n > self.cap {
            return Err(Error::Resource(format!(
                "assignment with {n} atoms exceeds the cap of {}",
                self.cap
            )));
        }
        let cost = cost_matrix(a, b, p);
        let perm = solve_assignment(n, &cost);
        let total = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
        Ok((total, perm))
    }

    pub fn distance(&self, a: &EmpiricalMeasure<'_>, b: &EmpiricalMeasure<'_>, p: f64) -> Result<f64> {
        self.check_pair(a, b, p)?;
        if a.len() > self.cap && a.dim() == 1 {
            return wasserstein_1d(a.coords(), b.coords(), p);
        }
        let (total, _) = self.plan(a, b, p)?;
        Ok((total / a.len() as f64).powf(1.0 / p))
    }
}

fn cost_matrix(a: &EmpiricalMeasure<'_>, b: &EmpiricalMeasure<'_>, p: f64) -> Vec<f64> {
    let n = a.len();
    let dim = a.dim();
    let mut cost = vec![0.0; n * n];
    let fill_row = |(i, row): (usize, &mut [f64])| {
        let x = a.atom(i);
        let mut diff = vec![0.0; dim];
        for (j, c) in row.iter_mut().enumerate() {
            for (d, (u, v)) in diff.iter_mut().zip(x.iter().zip(b.atom(j))) {
                *d = u - v;
            }
            *c = norm_pow(&diff, p);
        }
    };
    if n >= PARALLEL_COST_ROWS {
        cost.par_chunks_mut(n).enumerate().for_each(fill_row);
    } else {
        cost.chunks_mut(n).enumerate().for_each(fill_row);
    }
    cost
}

/// `W_p(a, b)` with the default assignment cap.
pub fn wasserstein_assignment(a: &EmpiricalMeasure<'_>, b: &EmpiricalMeasure<'_>, p: f64) -> Result<f64> {
    WassersteinSolver::default().distance(a, b, p)
}

/// `W_p(m, δ_0)`, the `p`-th root of the `p`-th moment.
pub fn wasserstein_to_dirac0(m: &EmpiricalMeasure<'_>, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(m.moment(p).powf(1.0 / p))
}

/// `max_k W_p(μ_k, ν_k)` over the shared knots of two measure paths.
///
/// Between knots each path is a mixture whose deviation from the knot
/// measures is bounded by [`interval_slack`]; that slack is not added here.
pub fn d_p_sup(left: &MeasurePathView<'_>, right: &MeasurePathView<'_>, p: f64) -> Result<f64> {
    d_p_sup_with(&WassersteinSolver::default(), left, right, p)
}

pub fn d_p_sup_with(
    solver: &WassersteinSolver,
    left: &MeasurePathView<'_>,
    right: &MeasurePathView<'_>,
    p: f64,
) -> Result<f64> {
    if left.grid() != right.grid() || left.len() != right.len() {
        return Err(Error::domain("measure paths are not on the same grid"));
    }
    let mut best = 0.0f64;
    for k in 0..left.len() {
        best = best.max(solver.distance(&left.knot(k), &right.knot(k), p)?);
    }
    Ok(best)
}

/// `max_k W_p(μ_k, μ_{k+1})`: bounds how far an interpolated measure path
/// can move inside one grid interval.
pub fn interval_slack(path: &MeasurePathView<'_>, p: f64) -> Result<f64> {
    let solver = WassersteinSolver::default();
    let mut best = 0.0f64;
    for k in 1..path.len() {
        best = best.max(solver.distance(&path.knot(k - 1), &path.knot(k), p)?);
    }
    Ok(best)
}

/// Exact `W_2` between a sample on the line and the Gaussian `N(mean, sd^2)`.
///
/// The quantile function of the sample is constant on `((i-1)/N, i/N]`, so
/// each slab contributes `∫ (x_(i) - Q(u))^2 du` with closed-form Gaussian
/// partial moments.
pub fn w2_to_gaussian_1d(samples: &[f64], mean: f64, sd: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("Wasserstein distance of an empty sample"));
    }
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(Error::domain(format!("invalid standard deviation {sd}")));
    }
    let xs = sorted(samples);
    let n = xs.len();
    if sd == 0.0 {
        let total: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        return Ok((total / n as f64).sqrt());
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let density = |z: f64| {
        if z.is_infinite() {
            0.0
        } else {
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    // z_i = Φ^{-1}(i/N); partial moments over [z_{i-1}, z_i]:
    //   ∫ z φ(z) dz   = φ(z_{i-1}) - φ(z_i)
    //   ∫ z^2 φ(z) dz = (u_i - u_{i-1}) - [z φ(z)]_{z_{i-1}}^{z_i}
    let zphi = |z: f64| if z.is_infinite() { 0.0 } else { z * density(z) };
    let mut total = 0.0;
    let mut z_prev = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let z_next = if i + 1 == n {
            f64::INFINITY
        } else {
            std_normal.inverse_cdf((i + 1) as f64 / n as f64)
        };
        let width = 1.0 / n as f64;
        let first = density(z_prev) - density(z_next);
        let second = width - (zphi(z_next) - zphi(z_prev));
        let c = x - mean;
        total += c * c * width - 2.0 * c * sd * first + sd * sd * second;
        z_prev = z_next;
    }
    Ok(total.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(dim: usize, v: &[f64]) -> EmpiricalMeasure<'static> {
        EmpiricalMeasure::new(dim, v.to_vec()).unwrap()
    }

    #[test]
    fn one_d_examples() {
        assert_eq!(wasserstein_1d(&[1.0, 2.0], &[2.0, 1.0], 2.0).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0], &[3.0], 2.0).unwrap(), 3.0);
        assert!(matches!(
            wasserstein_1d(&[0.0], &[1.0, 2.0], 2.0),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(wasserstein_1d(&[], &[], 2.0), Err(Error::Domain(_))));
        assert!(wasserstein_1d(&[0.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn quantile_form_matches_equal_size_case() {
        let a = [0.3, -1.2, 2.0, 0.7];
        let b = [1.1, 0.0, -0.4, 5.0];
        let x = wasserstein_1d(&a, &b, 3.0).unwrap();
        let y = wasserstein_1d_quantile(&a, &b, 3.0).unwrap();
        assert!((x - y).abs() < 1e-12);
        // a duplicated sample is the same measure
        let a2: Vec<f64> = a.iter().chain(a.iter()).copied().collect();
        assert!((wasserstein_1d_quantile(&a2, &b, 3.0).unwrap() - x).abs() < 1e-12);
    }

    #[test]
    fn two_point_example() {
        let a = measure(2, &[0.0, 0.0, 1.0, 0.0]);
        let b = measure(2, &[1.0, 0.0, 0.0, 1.0]);
        let w = wasserstein_assignment(&a, &b, 2.0).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn permutation_is_zero() {
        let a = measure(2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = measure(2, &[4.0, 5.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(wasserstein_assignment(&a, &b, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cap_and_size_errors() {
        let a = measure(2, &[0.0; 6]);
        let b = measure(2, &[0.0; 4]);
        assert!(matches!(wasserstein_assignment(&a, &b, 2.0), Err(Error::Unsupported(_))));
        let solver = WassersteinSolver::new(2);
        assert!(matches!(solver.distance(&a, &a, 2.0), Err(Error::Resource(_))));
        // one-dimensional measures above the cap use the quantile coupling
        let a = measure(1, &[0.0, 1.0, 2.0]);
        let b = measure(1, &[1.0, 2.0, 3.0]);
        assert!((solver.distance(&a, &b, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirac_examples() {
        assert_eq!(wasserstein_to_dirac0(&measure(1, &[0.0, 0.0]), 2.0).unwrap(), 0.0);
        assert!((wasserstein_to_dirac0(&measure(2, &[3.0, 4.0]), 3.0).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_reference_matches_quadrature() {
        let nd = Normal::new(0.0, 1.0).unwrap();
        let xs = [0.4, -1.3, 2.2, 0.0, 0.9];
        let (mean, sd) = (0.3, 1.7);
        // midpoint rule in u on ∫_0^1 (F_N^{-1}(u) - Q(u))^2 du
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let k = 2_000_000;
        let mut acc = 0.0;
        for i in 0..k {
            let u = (i as f64 + 0.5) / k as f64;
            let x = s[((u * 5.0) as usize).min(4)];
            let q = mean + sd * nd.inverse_cdf(u);
            acc += (x - q).powi(2);
        }
        let oracle = (acc / k as f64).sqrt();
        let w = w2_to_gaussian_1d(&xs, mean, sd).unwrap();
        assert!((w - oracle).abs() < 1e-4, "{w} vs {oracle}");

        // single atom: W_2^2 = (x - m)^2 + sd^2
        let w = w2_to_gaussian_1d(&[1.0], 0.0, 2.0).unwrap();
        assert!((w - 5f64.sqrt()).abs() < 1e-12);
        let w = w2_to_gaussian_1d(&[1.0], 4.0, 0.0).unwrap();
        assert!((w - 3.0).abs() < 1e-15);
    }
}
