//! Uniform time grids and piecewise-affine interpolation of discrete paths.
//!
//! A path recorded at knots `t_0..t_m` is extended to all of `[0, T]` by
//! affine blending between consecutive knots and by holding `x_m` constant
//! on `[t_m, T]`. A single-knot path is constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[0, T]` into `M` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::config("grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Knot time `m T / M`. Never accumulated, so `knot(M) == T` exactly.
    pub fn knot(&self, m: usize) -> f64 {
        debug_assert!(m <= self.steps);
        if m == self.steps {
            return self.horizon;
        }
        m as f64 * self.horizon / self.steps as f64
    }

    pub fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |m| self.knot(m))
    }

    /// Grid with `factor` times as many steps over the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::config("refinement factor must be positive"));
        }
        Self::new(self.horizon, self.steps * factor)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Index `k` with `knot(k) <= t < knot(k + 1)` (or `k = M` at `t = T`)
    /// and the fractional position of `t` inside that interval.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.steps;
        if t >= self.horizon {
            return (m, 0.0);
        }
        let guess = (t.max(0.0) / self.horizon * m as f64) as usize;
        let mut k = guess.min(m - 1);
        while k > 0 && self.knot(k) > t {
            k -= 1;
        }
        while k + 1 < m && self.knot(k + 1) <= t {
            k += 1;
        }
        let frac = ((t - self.knot(k)) / self.step_size()).clamp(0.0, 1.0);
        (k, frac)
    }
}

/// Knot values `x_0..x_m` of one trajectory in `R^d`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    dim: usize,
    values: Vec<f64>,
}

impl DiscretePath {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("path dimension must be positive"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} values do not split into points of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    /// Scalar path from a list of values.
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { dim: 1, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of knots, `m + 1`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn view(&self, grid: TimeGrid) -> Result<AffinePathView<'_>> {
        AffinePathView::new(&self.values, 0, self.dim, self.dim, self.len(), grid)
    }

    /// Largest Euclidean norm over the knots; equals the sup norm of the
    /// interpolated path on `[0, T]`.
    pub fn sup_norm(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::domain("sup norm of an empty path"));
        }
        Ok((0..self.len())
            .map(|k| euclidean_norm(self.point(k)))
            .fold(0.0, f64::max))
    }
}

/// Borrowed view of knots `x_0..x_m` that evaluates `i_m(x_{0:m})` on `[0, T]`.
///
/// Knots are read from a strided buffer so that a single particle's history
/// can be viewed in place inside a knot-major ensemble array.
#[derive(Debug, Clone, Copy)]
pub struct AffinePathView<'a> {
    data: &'a [f64],
    offset: usize,
    stride: usize,
    dim: usize,
    len: usize,
    grid: TimeGrid,
}

impl<'a> AffinePathView<'a> {
    pub fn new(
        data: &'a [f64],
        offset: usize,
        stride: usize,
        dim: usize,
        len: usize,
        grid: TimeGrid,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::domain("path view needs at least one knot"));
        }
        if len > grid.steps() + 1 {
            return Err(Error::domain(format!(
                "path has {len} knots but the grid only has {}",
                grid.steps() + 1
            )));
        }
        if dim == 0 || stride < dim || offset + (len - 1) * stride + dim > data.len() {
            return Err(Error::domain("path view does not fit its buffer"));
        }
        Ok(Self {
            data,
            offset,
            stride,
            dim,
            len,
            grid,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of knots, `m + 1`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn knot(&self, k: usize) -> &'a [f64] {
        let start = self.offset + k * self.stride;
        &self.data[start..start + self.dim]
    }

    /// Most recent knot value `x_m`.
    pub fn last(&self) -> &'a [f64] {
        self.knot(self.len - 1)
    }

    /// Evaluates the interpolated path at `t`, writing into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        self.grid.check_time(t)?;
        if t >= self.grid.knot(self.len - 1) {
            out[..self.dim].copy_from_slice(self.last());
            return Ok(());
        }
        let (k, w) = self.grid.locate(t);
        if k + 1 >= self.len || w == 0.0 {
            let src = self.knot(k.min(self.len - 1));
            out[..self.dim].copy_from_slice(src);
            return Ok(());
        }
        let (a, b) = (self.knot(k), self.knot(k + 1));
        for i in 0..self.dim {
            let v = (1.0 - w) * a[i] + w * b[i];
            out[i] = v.clamp(a[i].min(b[i]), a[i].max(b[i]));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len)
            .map(|k| euclidean_norm(self.knot(k)))
            .fold(0.0, f64::max)
    }

    pub fn to_path(&self) -> DiscretePath {
        let mut values = Vec::with_capacity(self.len * self.dim);
        for k in 0..self.len {
            values.extend_from_slice(self.knot(k));
        }
        DiscretePath {
            dim: self.dim,
            values,
        }
    }
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_knots() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let knots: Vec<f64> = g.knots().collect();
        assert_eq!(knots, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = TimeGrid::new(2.0, 1).unwrap();
        assert_eq!(g.knots().collect::<Vec<_>>(), vec![0.0, 2.0]);
    }

    #[test]
    fn last_knot_is_horizon_where_repeated_addition_drifts() {
        let g = TimeGrid::new(0.3, 3).unwrap();
        let summed = (0..3).fold(0.0, |acc, _| acc + 0.1);
        assert_ne!(summed, 0.3);
        assert_eq!(g.knot(3), 0.3);
        for m in 0..3 {
            assert!(g.knot(m) < g.knot(m + 1));
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(TimeGrid::new(0.0, 3), Err(Error::Config(_))));
        assert!(matches!(TimeGrid::new(-1.0, 3), Err(Error::Config(_))));
        assert!(matches!(TimeGrid::new(1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn locate_is_half_open() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        for m in 0..10 {
            assert_eq!(g.locate(g.knot(m)), (m, 0.0));
        }
        assert_eq!(g.locate(1.0), (10, 0.0));
        let (k, w) = g.locate(0.35);
        assert_eq!(k, 3);
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eval_midpoint_and_clamp() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let p = DiscretePath::scalar(vec![0.0, 1.0]);
        assert_eq!(p.view(g).unwrap().eval(0.5).unwrap(), vec![0.5]);

        let g = TimeGrid::new(5.0, 5).unwrap();
        let p = DiscretePath::scalar(vec![0.0, 2.0, -1.0]);
        let v = p.view(g).unwrap();
        assert_eq!(v.eval(4.0).unwrap(), vec![-1.0]);
        assert_eq!(v.eval(5.0).unwrap(), vec![-1.0]);
        assert_eq!(v.eval(2.0).unwrap(), vec![-1.0]);
        assert_eq!(v.eval(1.5).unwrap(), vec![0.5]);
    }

    #[test]
    fn single_knot_is_constant() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let p = DiscretePath::new(2, vec![3.0, -4.0]).unwrap();
        let v = p.view(g).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(v.eval(t).unwrap(), vec![3.0, -4.0]);
        }
    }

    #[test]
    fn constant_path() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = DiscretePath::scalar(vec![1.25; 5]);
        let v = p.view(g).unwrap();
        for i in 0..=40 {
            assert_eq!(v.eval(i as f64 / 40.0).unwrap(), vec![1.25]);
        }
    }

    #[test]
    fn eval_out_of_range() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let p = DiscretePath::scalar(vec![0.0, 1.0]);
        let v = p.view(g).unwrap();
        assert!(matches!(v.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(v.eval(1.1), Err(Error::Domain(_))));
        assert!(v.eval(f64::NAN).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let p = DiscretePath::scalar(vec![1.0, -3.0, 2.0]);
        assert_eq!(p.sup_norm().unwrap(), 3.0);
        let p = DiscretePath::new(2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.sup_norm().unwrap(), 5.0);
        assert!(DiscretePath::scalar(vec![]).sup_norm().is_err());
    }

    #[test]
    fn too_many_knots_for_grid() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let p = DiscretePath::scalar(vec![0.0, 1.0, 2.0]);
        assert!(p.view(g).is_err());
    }

    #[test]
    fn strided_view_reads_one_particle() {
        // knot-major layout, 2 particles, d = 1
        let data = [0.0, 10.0, 1.0, 11.0, 2.0, 12.0];
        let g = TimeGrid::new(1.0, 2).unwrap();
        let v = AffinePathView::new(&data, 1, 2, 1, 3, g).unwrap();
        assert_eq!(v.to_path().values(), &[10.0, 11.0, 12.0]);
        assert_eq!(v.eval(0.25).unwrap(), vec![10.5]);
    }
}
