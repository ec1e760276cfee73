use num_complex::Complex64;
use proptest::prelude::*;

use evlab_core::cmt::{self, BarrierSpec, Detuning, FdQuality};

const KAPPA_L: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 6.0];
const OMEGA_OVER_KAPPA_V: [f64; 9] = [0.0, 0.5, -0.5, 0.99, -0.99, 1.5, -1.5, 3.0, -3.0];

fn grid() -> impl Iterator<Item = (BarrierSpec, Detuning)> {
    KAPPA_L.iter().flat_map(|&kl| {
        let spec = BarrierSpec::normalized(kl).unwrap();
        OMEGA_OVER_KAPPA_V.iter().map(move |&r| (spec, Detuning::new(r * kl).unwrap()))
    })
}

/// Fields written exactly as the textbook steady state, on a caller-chosen
/// square-root branch of γ² = κ² − δ²:
/// E_F = [γ cosh γ(z−L) + iδ sinh γ(z−L)]/g, E_B = −iκ sinh γ(z−L)/g,
/// g = γ cosh γL − iδ sinh γL.
fn textbook_fields(kappa: f64, delta: f64, length: f64, gamma: Complex64, z: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let g = gamma * (gamma * length).cosh() - i * delta * (gamma * length).sinh();
    let y = z - length;
    let ef = (gamma * (gamma * y).cosh() + i * delta * (gamma * y).sinh()) / g;
    let eb = -i * kappa * (gamma * y).sinh() / g;
    (ef, eb)
}

fn textbook_gamma(kappa: f64, delta: f64) -> Complex64 {
    Complex64::new(kappa * kappa - delta * delta, 0.0).sqrt()
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|j| f(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn quadrature_energy_ratio(spec: &BarrierSpec, det: Detuning) -> f64 {
    let (k, l) = (spec.kappa(), spec.length());
    let delta = det.omega() / spec.group_speed();
    let gamma = textbook_gamma(k, delta);
    simpson(4000, 0.0, l, |z| {
        let (ef, eb) = textbook_fields(k, delta, l, gamma, z);
        ef.norm_sqr() + eb.norm_sqr()
    }) / l
}

/// The stored-energy bracket in its printed form, with the sign in front of
/// the sech² term left as a parameter.
fn printed_bracket(spec: &BarrierSpec, det: Detuning, sign: f64) -> f64 {
    let (k, l) = (spec.kappa(), spec.length());
    let delta = det.omega() / spec.group_speed();
    let gamma = textbook_gamma(k, delta);
    let x = gamma * l;
    let th = x.tanh();
    let sech2 = x.cosh().powi(-2);
    let dg2 = delta * delta / (gamma * gamma);
    let num = k * k / (gamma * gamma) * th / x + sign * dg2 * sech2;
    let den = 1.0 + dg2 * th * th;
    (num / den).re
}

#[test]
fn stored_energy_matches_field_quadrature() {
    let mut worst: f64 = 0.0;
    for (spec, det) in grid() {
        let closed = cmt::stored_energy_ratio(&spec, det);
        let oracle = quadrature_energy_ratio(&spec, det);
        let rel = (closed - oracle).abs() / oracle;
        assert!(rel < 1e-8, "κL={} Ω={}: {closed} vs {oracle}", spec.kappa_length(), det.omega());
        worst = worst.max(rel);
    }
    println!("stored energy vs quadrature: worst relative deviation {worst:.2e}");
}

#[test]
fn library_quadrature_route_agrees() {
    for (spec, det) in grid() {
        let lib = cmt::stored_energy_ratio_quadrature(&spec, det);
        let oracle = quadrature_energy_ratio(&spec, det);
        assert!((lib - oracle).abs() < 1e-9 * oracle);
        assert!((lib - cmt::stored_energy_ratio(&spec, det)).abs() < 1e-12 * oracle);
    }
}

#[test]
fn printed_bracket_needs_the_minus_sign() {
    for (spec, det) in grid() {
        let oracle = quadrature_energy_ratio(&spec, det);
        let minus = printed_bracket(&spec, det, -1.0);
        assert!((minus - oracle).abs() < 1e-8 * oracle, "κL={} Ω={}", spec.kappa_length(), det.omega());
        // The sech² term only matters away from the opaque limit.
        if det.omega() != 0.0 && spec.kappa_length() <= 2.0 {
            let plus = printed_bracket(&spec, det, 1.0);
            assert!((plus - oracle).abs() > 1e-3 * oracle, "κL={} Ω={}", spec.kappa_length(), det.omega());
        }
    }
}

#[test]
fn closed_and_phase_derivative_delays_agree() {
    for (spec, det) in grid() {
        let closed = cmt::group_delay_closed(&spec, det);
        let fd = cmt::group_delay_fd(&spec, det, cmt::default_fd_step(&spec)).unwrap();
        assert!((fd.tau_g - closed).abs() < 1e-6 * closed, "κL={} Ω={}", spec.kappa_length(), det.omega());
        assert_eq!(fd.quality, FdQuality::Resolved);
        let u = cmt::stored_energy(&spec, det, 1.0).unwrap();
        assert!((u - closed).abs() < 1e-6 * closed);
    }
}

#[test]
fn phase_derivative_sweep_at_kappa_l_4() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let step = cmt::default_fd_step(&spec);
    let worst = (0..=1200)
        .map(|i| Detuning::new(-12.0 + 0.02 * f64::from(i)).unwrap())
        .map(|d| {
            let c = cmt::group_delay_closed(&spec, d);
            (cmt::group_delay_fd(&spec, d, step).unwrap().tau_g - c).abs() / c
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "worst {worst:e}");
}

#[test]
fn coarse_step_is_flagged_not_failed() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let res = cmt::resonance_detunings(&spec, 1).unwrap()[0];
    let fd = cmt::group_delay_fd(&spec, res, 0.3).unwrap();
    assert_eq!(fd.quality, FdQuality::StepTooCoarse);
    assert!(fd.tau_g.is_finite());
    assert!(cmt::group_delay_fd(&spec, res, 0.0).is_err());
}

#[test]
fn midgap_delay_values() {
    for (kl, expected) in [
        (0.5, 0.924_234_314_520_019_7),
        (1.0, 0.761_594_155_955_765_1),
        (2.0, 0.482_013_790_037_908_56),
        (4.0, 0.249_832_324_934_766_76),
        (6.0, 0.166_664_618_608_466_01),
    ] {
        let spec = BarrierSpec::normalized(kl).unwrap();
        assert!((cmt::midgap_delay(&spec) - expected).abs() < 1e-15);
        let closed = cmt::group_delay_closed(&spec, Detuning::MIDGAP);
        assert!((closed - expected).abs() < 1e-10 * expected);
    }
    // Strong barrier: U/U₀ ≈ 1/κL.
    let spec = BarrierSpec::normalized(40.0).unwrap();
    assert!((cmt::stored_energy_ratio(&spec, Detuning::MIDGAP) * 40.0 - 1.0).abs() < 1e-15);
}

#[test]
fn resonance_delays() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    for (m, d) in cmt::resonance_detunings(&spec, 2).unwrap().into_iter().enumerate() {
        let m = (m + 1) as f64;
        let expected = 1.0 + (4.0 / (m * std::f64::consts::PI)).powi(2);
        assert!((cmt::group_delay_closed(&spec, d) - expected).abs() < 1e-6 * expected);
        assert!((cmt::transmission(&spec, d).norm() - 1.0).abs() < 1e-9);
        assert!(cmt::reflection(&spec, d).norm() < 1e-7);
    }
    let first = cmt::resonance_detunings(&spec, 1).unwrap()[0];
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((first.normalized(&spec) - (16.0 + pi2).sqrt()).abs() < 1e-12);
    assert!((first.normalized(&spec) - 5.0862).abs() < 1e-4);
    assert!((cmt::group_delay_closed(&spec, first) - 2.621).abs() < 1e-3);
}

#[test]
fn high_order_resonances_approach_free_spacing() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let om = cmt::resonance_detunings(&spec, 2000).unwrap();
    let m = 2000.0 * std::f64::consts::PI;
    assert!((om[1999].omega() - m) / m < 1e-6);
}

#[test]
fn stop_band_is_fast_and_resonances_are_slow() {
    for &kl in &KAPPA_L {
        let spec = BarrierSpec::normalized(kl).unwrap();
        for i in 0..50 {
            let d = Detuning::new(kl * f64::from(i) / 50.0).unwrap();
            assert!(cmt::group_delay_closed(&spec, d) < spec.transit_time());
        }
        for d in cmt::resonance_detunings(&spec, 3).unwrap() {
            assert!(cmt::group_delay_closed(&spec, d) > spec.transit_time());
        }
    }
}

#[test]
fn textbook_fields_agree_with_regularized_fields() {
    for (spec, det) in grid() {
        let delta = det.omega() / spec.group_speed();
        let gamma = textbook_gamma(spec.kappa(), delta);
        for j in 0..=10 {
            let z = f64::from(j) / 10.0;
            let (ef, eb) = cmt::steady_fields(&spec, det, z, Complex64::new(1.0, 0.0)).unwrap();
            for g in [gamma, -gamma] {
                let (tf, tb) = textbook_fields(spec.kappa(), delta, 1.0, g, z);
                assert!((ef - tf).norm() < 1e-12 * ef.norm().max(1.0));
                assert!((eb - tb).norm() < 1e-12 * eb.norm().max(1.0));
            }
        }
    }
}

#[test]
fn scatter_fields_are_consistent() {
    let spec = BarrierSpec::normalized(2.5).unwrap();
    let det = Detuning::new(1.1).unwrap();
    let s = cmt::scatter(&spec, det);
    let g2 = s.gamma * s.gamma;
    assert_eq!(g2.re, 2.5 * 2.5 - 1.1 * 1.1);
    assert_eq!(g2.im, 0.0);
    let literal_t = s.gamma / s.g;
    assert!((literal_t - s.transmission).norm() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn unitarity(kl in 0.0..12.0_f64, x in -40.0..40.0_f64) {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let s = cmt::scatter(&spec, Detuning::new(x).unwrap());
        prop_assert!((s.t2() + s.r2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_symmetry(kl in 0.0..12.0_f64, x in 0.0..40.0_f64) {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let (p, m) = (Detuning::new(x).unwrap(), Detuning::new(-x).unwrap());
        prop_assert!((cmt::transmission(&spec, m) - cmt::transmission(&spec, p).conj()).norm() < 1e-14);
        prop_assert_eq!(cmt::group_delay_closed(&spec, m), cmt::group_delay_closed(&spec, p));
    }

    #[test]
    fn branch_independence(kl in 0.1..8.0_f64, r in -3.0..3.0_f64) {
        prop_assume!((r.abs() - 1.0).abs() > 1e-3);
        let spec = BarrierSpec::normalized(kl).unwrap();
        let det = Detuning::new(r * kl).unwrap();
        let delta = det.omega();
        let gamma = textbook_gamma(kl, delta);
        let t = cmt::transmission(&spec, det);
        let (tp, _) = textbook_fields(kl, delta, 1.0, gamma, 1.0);
        let (tm, _) = textbook_fields(kl, delta, 1.0, -gamma, 1.0);
        prop_assert!((tp - tm).norm() < 1e-12 * t.norm().max(1e-300) + 1e-300);
        prop_assert!((tp - t).norm() < 1e-12 * t.norm().max(1e-300) + 1e-300);
        let (up, um) = (printed_bracket(&spec, det, -1.0), {
            let (k, l) = (kl, 1.0);
            let g = -gamma;
            let x = g * l;
            let dg2 = delta * delta / (g * g);
            ((k * k / (g * g) * x.tanh() / x - dg2 * x.cosh().powi(-2)) / (1.0 + dg2 * x.tanh() * x.tanh())).re
        });
        prop_assert!((up - um).abs() < 1e-12 * up.abs());
    }

    #[test]
    fn band_edge_is_continuous(kl in 0.5..8.0_f64, eps in 1e-10..1e-7_f64) {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let at = cmt::group_delay_closed(&spec, Detuning::new(kl).unwrap());
        for side in [kl + eps, kl - eps] {
            let near = cmt::group_delay_closed(&spec, Detuning::new(side).unwrap());
            prop_assert!((near - at).abs() < 1e-5 * at);
        }
    }

    #[test]
    fn midgap_delay_decreases_with_kappa_l(a in 0.0..50.0_f64, b in 0.0..50.0_f64) {
        prop_assume!(a < b);
        let da = cmt::midgap_delay(&BarrierSpec::normalized(a).unwrap());
        let db = cmt::midgap_delay(&BarrierSpec::normalized(b).unwrap());
        prop_assert!(db <= da);
    }

    #[test]
    fn steady_reflection_is_field_at_entry(kl in 0.0..8.0_f64, x in -20.0..20.0_f64) {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let det = Detuning::new(x).unwrap();
        let (ef, eb) = cmt::steady_fields(&spec, det, 0.0, Complex64::new(1.0, 0.0)).unwrap();
        prop_assert!((ef - 1.0).norm() < 1e-12);
        prop_assert!((eb - cmt::reflection(&spec, det)).norm() < 1e-12);
    }
}
