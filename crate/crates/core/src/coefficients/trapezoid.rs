/// Running composite-trapezoid integral of a sequence `g_0, g_1, ...` sampled
/// on a uniform grid with step `h`.
///
/// After `g_0..g_m` have been pushed the value is
/// `(h/2)(g_0 + g_m) + h Σ_{k=1}^{m-1} g_k`, with the interior sum
/// accumulated in push order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrapezoidAccumulator {
    count: usize,
    first: f64,
    last: f64,
    interior: f64,
    h: f64,
}

impl TrapezoidAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn update(mut self, g_new: f64, h: f64) -> Self {
        self.push(g_new, h);
        self
    }

    pub fn push(&mut self, g_new: f64, h: f64) {
        debug_assert!(h > 0.0);
        debug_assert!(self.count == 0 || self.h == h, "step size changed mid-integral");
        match self.count {
            0 => self.first = g_new,
            1 => {}
            _ => self.interior += self.last,
        }
        self.last = g_new;
        self.h = h;
        self.count += 1;
    }

    /// Number of samples pushed so far (`m + 1` after knot `m`).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Most recent sample.
    pub fn last(&self) -> f64 {
        self.last
    }

    pub fn value(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.h / 2.0 * (self.first + self.last) + self.h * self.interior
    }
}
