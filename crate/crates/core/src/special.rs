//! Hyperbolic functions written as entire functions of a squared argument.
//!
//! Every closed form in the crate depends on the propagation constant only
//! through cosh(w) and sinh(w)/w, which are even in w. Taking w² as input
//! means no square-root branch is ever chosen and the band edge (w = 0) is
//! an ordinary point.

use num_complex::Complex64;

/// Below this |w²| the two-term Taylor series is exact to double precision.
const TAYLOR_W2: f64 = 1e-8;

/// Returns (cosh w, sinh(w)/w) for w² = `w2`.
pub(crate) fn cosh_sinhc(w2: Complex64) -> (Complex64, Complex64) {
    if w2.norm() < TAYLOR_W2 {
        let c = 1.0 + w2 * (0.5 + w2 / 24.0);
        let s = 1.0 + w2 * (1.0 / 6.0 + w2 / 120.0);
        return (c, s);
    }
    let w = w2.sqrt();
    (w.cosh(), w.sinh() / w)
}

/// Returns (sinh(2w)/(2w) − 1)/w² for w² = `w2`.
///
/// The direct form cancels catastrophically near w = 0, so small arguments
/// go through the power series Σ 4ⁿ w^{2n−2}/(2n+1)!.
pub(crate) fn sinhc2_excess(w2: Complex64) -> Complex64 {
    if w2.norm() < 1.0 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(4.0 / 6.0, 0.0);
        for n in 1..=18_u32 {
            sum += term;
            let m = f64::from(2 * n + 2) * f64::from(2 * n + 3);
            term = term * w2 * (4.0 / m);
        }
        return sum;
    }
    let (_, s2) = cosh_sinhc(4.0 * w2);
    (s2 - 1.0) / w2
}
