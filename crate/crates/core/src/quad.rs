use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;

/// Composite Gauss–Legendre rule on `panels` equal sub-intervals.
pub(crate) struct Composite {
    rule: GaussLegendre,
}

impl Composite {
    pub(crate) fn new(degree: usize) -> Self {
        let degree = NonZeroUsize::new(degree.max(2)).expect("degree is at least 2");
        Self { rule: GaussLegendre::new(degree) }
    }

    pub(crate) fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.rule.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}
