//! Uniform empirical measures, their two-component mixtures, and the
//! piecewise-affine interpolation of a sequence of measures in time.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// `N` atoms in `R^d` with uniform weights `1/N`, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<'a> {
    dim: usize,
    atoms: Cow<'a, [f64]>,
}

impl<'a> EmpiricalMeasure<'a> {
    pub fn new(dim: usize, atoms: impl Into<Cow<'a, [f64]>>) -> Result<Self> {
        let atoms = atoms.into();
        if dim == 0 {
            return Err(Error::domain("measure dimension must be positive"));
        }
        if atoms.is_empty() || atoms.len() % dim != 0 {
            return Err(Error::domain(format!(
                "{} coordinates do not form a non-empty set of points in R^{dim}",
                atoms.len()
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("measure atoms must be finite"));
        }
        Ok(Self { dim, atoms })
    }

    /// Borrowed measure without the finiteness scan; used on simulator columns.
    pub(crate) fn from_slice_unchecked(dim: usize, atoms: &'a [f64]) -> Self {
        Self {
            dim,
            atoms: Cow::Borrowed(atoms),
        }
    }

    pub fn scalar(values: Vec<f64>) -> Result<EmpiricalMeasure<'static>> {
        EmpiricalMeasure::new(1, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.atoms
    }

    pub fn into_owned(self) -> EmpiricalMeasure<'static> {
        EmpiricalMeasure {
            dim: self.dim,
            atoms: Cow::Owned(self.atoms.into_owned()),
        }
    }

    /// `(1/N) Σ f(x_i)`, summed in atom order.
    pub fn average(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.atoms().map(&mut f).sum::<f64>() / self.len() as f64
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for x in self.atoms() {
            for (o, v) in out.iter_mut().zip(x) {
                *o += v;
            }
        }
        let n = self.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// `p`-th moment `(1/N) Σ |x_i|^p`.
    pub fn moment(&self, p: f64) -> f64 {
        self.average(|x| norm_pow(x, p))
    }
}

/// `lambda * left + (1 - lambda) * right`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMeasure<'a> {
    left: EmpiricalMeasure<'a>,
    right: EmpiricalMeasure<'a>,
    lambda: f64,
}

impl<'a> MixtureMeasure<'a> {
    pub fn new(left: EmpiricalMeasure<'a>, right: EmpiricalMeasure<'a>, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::domain(format!("mixture weight {lambda} outside [0, 1]")));
        }
        if left.dim() != right.dim() {
            return Err(Error::domain("mixture components live in different dimensions"));
        }
        Ok(Self { left, right, lambda })
    }

    pub fn left(&self) -> &EmpiricalMeasure<'a> {
        &self.left
    }

    pub fn right(&self) -> &EmpiricalMeasure<'a> {
        &self.right
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn average(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.lambda * self.left.average(&mut f) + (1.0 - self.lambda) * self.right.average(&mut f)
    }

    pub fn mean(&self) -> Vec<f64> {
        let l = self.left.mean();
        let r = self.right.mean();
        l.iter()
            .zip(&r)
            .map(|(a, b)| self.lambda * a + (1.0 - self.lambda) * b)
            .collect()
    }

    /// Exact `p`-th moment as the convex combination of component moments.
    pub fn moment(&self, p: f64) -> f64 {
        self.lambda * self.left.moment(p) + (1.0 - self.lambda) * self.right.moment(p)
    }

    /// Draws from the mixture given a uniform `u` and an atom index used on
    /// whichever side is selected. Sharing `u` and `index` between two
    /// mixtures of the same components couples them.
    pub fn sample(&self, u: f64, index: usize) -> &[f64] {
        if u < self.lambda {
            self.left.atom(index % self.left.len())
        } else {
            self.right.atom(index % self.right.len())
        }
    }
}

/// Value of an interpolated measure path at one time.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureAt<'a> {
    Pure(EmpiricalMeasure<'a>),
    Mixture(MixtureMeasure<'a>),
}

impl<'a> MeasureAt<'a> {
    pub fn dim(&self) -> usize {
        match self {
            MeasureAt::Pure(m) => m.dim(),
            MeasureAt::Mixture(m) => m.dim(),
        }
    }

    pub fn average(&self, f: impl FnMut(&[f64]) -> f64) -> f64 {
        match self {
            MeasureAt::Pure(m) => m.average(f),
            MeasureAt::Mixture(m) => m.average(f),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            MeasureAt::Pure(m) => m.mean(),
            MeasureAt::Mixture(m) => m.mean(),
        }
    }

    pub fn moment(&self, p: f64) -> f64 {
        match self {
            MeasureAt::Pure(m) => m.moment(p),
            MeasureAt::Mixture(m) => m.moment(p),
        }
    }

    pub fn as_pure(&self) -> Option<&EmpiricalMeasure<'a>> {
        match self {
            MeasureAt::Pure(m) => Some(m),
            MeasureAt::Mixture(_) => None,
        }
    }
}

/// Measures `μ_0..μ_m` of equal size `N`, stored knot-major, evaluated as
/// `i_m(μ_{0:m})` on `[0, T]`.
#[derive(Debug, Clone, Copy)]
pub struct MeasurePathView<'a> {
    data: &'a [f64],
    n: usize,
    dim: usize,
    len: usize,
    grid: TimeGrid,
}

impl<'a> MeasurePathView<'a> {
    pub fn new(data: &'a [f64], n: usize, dim: usize, len: usize, grid: TimeGrid) -> Result<Self> {
        if n == 0 || dim == 0 || len == 0 {
            return Err(Error::domain("measure path needs atoms, dimension and knots"));
        }
        if len > grid.steps() + 1 {
            return Err(Error::domain(format!(
                "measure path has {len} knots but the grid only has {}",
                grid.steps() + 1
            )));
        }
        if data.len() < len * n * dim {
            return Err(Error::domain("measure path does not fit its buffer"));
        }
        Ok(Self {
            data,
            n,
            dim,
            len,
            grid,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Number of knots, `m + 1`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knot(&self, k: usize) -> EmpiricalMeasure<'a> {
        let width = self.n * self.dim;
        EmpiricalMeasure::from_slice_unchecked(self.dim, &self.data[k * width..(k + 1) * width])
    }

    /// `i_m(μ_{0:m})_t`: the pure knot measure at knots and on `[t_m, T]`,
    /// otherwise the mixture with weight `(t_{k+1} - t)/h` on `μ_k`.
    pub fn at(&self, t: f64) -> Result<MeasureAt<'a>> {
        self.grid.check_time(t)?;
        if t >= self.grid.knot(self.len - 1) {
            return Ok(MeasureAt::Pure(self.knot(self.len - 1)));
        }
        let (k, w) = self.grid.locate(t);
        if k + 1 >= self.len {
            return Ok(MeasureAt::Pure(self.knot(self.len - 1)));
        }
        if w == 0.0 {
            return Ok(MeasureAt::Pure(self.knot(k)));
        }
        Ok(MeasureAt::Mixture(MixtureMeasure {
            left: self.knot(k),
            right: self.knot(k + 1),
            lambda: 1.0 - w,
        }))
    }
}

/// Concatenates equal-size measures into the knot-major buffer used by
/// [`MeasurePathView`].
pub fn stack_measures(measures: &[EmpiricalMeasure<'_>]) -> Result<Vec<f64>> {
    let first = measures
        .first()
        .ok_or_else(|| Error::domain("no measures to stack"))?;
    let mut out = Vec::with_capacity(measures.len() * first.coords().len());
    for m in measures {
        if m.len() != first.len() || m.dim() != first.dim() {
            return Err(Error::domain("stacked measures must share size and dimension"));
        }
        out.extend_from_slice(m.coords());
    }
    Ok(out)
}

pub(crate) fn norm_pow(x: &[f64], p: f64) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if p == 2.0 {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(v: &[f64]) -> EmpiricalMeasure<'static> {
        EmpiricalMeasure::scalar(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_invalid_atoms() {
        assert!(EmpiricalMeasure::new(1, Vec::<f64>::new()).is_err());
        assert!(EmpiricalMeasure::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![f64::NAN]).is_err());
        assert!(MixtureMeasure::new(measure(&[0.0]), measure(&[1.0]), 1.5).is_err());
    }

    #[test]
    fn path_knots_mixtures_and_clamp() {
        let data = stack_measures(&[measure(&[0.0, 1.0]), measure(&[2.0, 3.0])]).unwrap();
        let grid = TimeGrid::new(1.0, 1).unwrap();
        let view = MeasurePathView::new(&data, 2, 1, 2, grid).unwrap();
        assert_eq!(view.at(0.0).unwrap(), MeasureAt::Pure(measure(&[0.0, 1.0])));
        assert_eq!(view.at(1.0).unwrap(), MeasureAt::Pure(measure(&[2.0, 3.0])));
        match view.at(0.25).unwrap() {
            MeasureAt::Mixture(m) => {
                assert_eq!(m.lambda(), 0.75);
                assert_eq!(m.left(), &measure(&[0.0, 1.0]));
                assert_eq!(m.right(), &measure(&[2.0, 3.0]));
            }
            other => panic!("expected mixture, got {other:?}"),
        }
        assert!(view.at(1.5).is_err());

        let grid = TimeGrid::new(4.0, 4).unwrap();
        let view = MeasurePathView::new(&data, 2, 1, 2, grid).unwrap();
        for t in [1.0, 2.5, 4.0] {
            assert_eq!(view.at(t).unwrap(), MeasureAt::Pure(measure(&[2.0, 3.0])));
        }
        let single = MeasurePathView::new(&data, 2, 1, 1, grid).unwrap();
        assert_eq!(single.at(3.3).unwrap(), MeasureAt::Pure(measure(&[0.0, 1.0])));
    }

    #[test]
    fn degenerate_mixtures_sample_one_side() {
        let l = measure(&[1.0, 2.0]);
        let r = measure(&[-1.0, -2.0]);
        let all_left = MixtureMeasure::new(l.clone(), r.clone(), 1.0).unwrap();
        let all_right = MixtureMeasure::new(l, r, 0.0).unwrap();
        for u in [0.0, 0.3, 0.999_999] {
            assert!(all_left.sample(u, 1)[0] > 0.0);
            assert!(all_right.sample(u, 1)[0] < 0.0);
        }
    }

    #[test]
    fn mixture_moment_is_convex_combination() {
        let l = measure(&[1.0, 3.0]);
        let r = measure(&[0.0, 2.0]);
        let m = MixtureMeasure::new(l, r, 0.25).unwrap();
        assert!((m.moment(2.0) - (0.25 * 5.0 + 0.75 * 2.0)).abs() < 1e-15);
        assert_eq!(m.mean(), vec![0.25 * 2.0 + 0.75 * 1.0]);
    }
}
