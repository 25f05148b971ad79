#![allow(dead_code)]

use itertools::Itertools;
use mvsim::models::KellerSegelParams;
use rand::Rng;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[lo, hi]` with `panels` equal panels.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let a = lo + k as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((a + 0.5 * width * (xi + 1.0), 0.5 * width * wi));
        }
    }
    out
}

/// `χ e^{-λt} ∫ ∇c_0(y) g_t(x - y) dy` with `c_0(y) = A exp(-|y|²/2s0²)` and
/// `g_t(z) = exp(-|z|²/2t) / (2π(t+ε))`, by tensor quadrature on `[-8, 8]²`.
pub fn b0_quadrature(t: f64, x: [f64; 2], p: &KellerSegelParams, rule: &[(f64, f64)]) -> [f64; 2] {
    let s2 = p.width * p.width;
    let mut acc = [0.0, 0.0];
    for &(y1, w1) in rule {
        let mut row = [0.0, 0.0];
        let gx = (-(x[0] - y1).powi(2) / (2.0 * t)).exp();
        if gx == 0.0 {
            continue;
        }
        for &(y2, w2) in rule {
            let c = p.amplitude * (-(y1 * y1 + y2 * y2) / (2.0 * s2)).exp() / s2;
            let g = (-(x[1] - y2).powi(2) / (2.0 * t)).exp();
            row[0] -= w2 * c * y1 * g;
            row[1] -= w2 * c * y2 * g;
        }
        acc[0] += w1 * gx * row[0];
        acc[1] += w1 * gx * row[1];
    }
    let scale = p.chi * (-p.lambda * t).exp() / (2.0 * std::f64::consts::PI * (t + p.epsilon));
    [scale * acc[0], scale * acc[1]]
}

pub fn random_atoms(rng: &mut impl Rng, n: usize, d: usize, spread: f64) -> Vec<f64> {
    (0..n * d).map(|_| rng.gen_range(-spread..spread)).collect()
}

/// `W_p` between equal-size uniform measures by enumerating all permutations.
pub fn brute_force_wasserstein(a: &[f64], b: &[f64], d: usize, p: f64) -> f64 {
    let n = a.len() / d;
    let cost = |i: usize, j: usize| -> f64 {
        let sq: f64 = (0..d).map(|k| (a[i * d + k] - b[j * d + k]).powi(2)).sum();
        sq.sqrt().powf(p)
    };
    let best = (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (best / n as f64).powf(1.0 / p)
}
