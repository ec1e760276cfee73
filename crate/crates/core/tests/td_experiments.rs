use num_complex::Complex64;
use proptest::prelude::*;

use evlab_core::cmt::{self, BarrierSpec, Detuning};
use evlab_core::delay::{self, DecayShape};
use evlab_core::td::{self, Grid, PulseWarning, Simulation, Snapshot, SourceShape, SourceSpec};
use evlab_core::EvlabError;

/// Transmission and reflection straight from the textbook fields, on the
/// principal square root of γ².
fn textbook_t_r(kappa: f64, delta: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let gamma = Complex64::new(kappa * kappa - delta * delta, 0.0).sqrt();
    if gamma.norm() < 1e-12 {
        let g = 1.0 - i * delta;
        return (1.0 / g, i * kappa / g);
    }
    let g = gamma * gamma.cosh() - i * delta * gamma.sinh();
    (gamma / g, i * kappa * gamma.sinh() / g)
}

fn steady_run(kl: f64, omega: f64, n_z: usize) -> Simulation {
    let spec = BarrierSpec::normalized(kl).unwrap();
    let grid = Grid::new(&spec, n_z).unwrap();
    let src = SourceSpec::step(1e9, td::DEFAULT_RISE, Detuning::new(omega).unwrap()).unwrap();
    let mut sim = Simulation::new(spec, grid, src);
    sim.record_until(20.0);
    sim
}

#[test]
fn free_line_delays_a_pulse_by_one_transit_exactly() {
    let spec = BarrierSpec::normalized(0.0).unwrap();
    let grid = Grid::new(&spec, 257).unwrap();
    let pulse = SourceSpec::gaussian(5.0, 1e-8, Detuning::MIDGAP).unwrap();
    let run = td::pulse_experiment(&spec, &pulse, &grid, None).unwrap();
    let r = &run.report;
    assert!((r.peak_delay_transmitted - 1.0).abs() < 1e-9, "{}", r.peak_delay_transmitted);
    assert!(r.shape_deviation < 1e-12, "{}", r.shape_deviation);
    assert!((r.t2_measured - 1.0).abs() < 1e-12);
    assert_eq!(r.peak_delay_reflected, None);

    // Cell-exact: the exit sample n steps later equals the entry sample.
    let n = grid.n_z - 1;
    let s = &run.history.samples;
    for k in 0..s.len() - n {
        assert_eq!(s[k + n].p_transmitted, s[k].p_incident);
    }
}

#[test]
fn steady_state_matches_the_closed_form() {
    let mut worst: f64 = 0.0;
    for (kl, ratio) in [(2.0, 0.0), (4.0, 0.0), (6.0, 0.0), (4.0, 0.5), (2.0, -0.5), (2.0, 1.5)] {
        for n_z in [512, 1024] {
            let sim = steady_run(kl, ratio * kl, n_z);
            let st = sim.state();
            let (t, r) = textbook_t_r(kl, ratio * kl);
            let exit = st.forward[n_z - 1].norm();
            let back = st.backward[0].norm();
            let (et, er) = ((exit - t.norm()).abs() / t.norm(), (back - r.norm()).abs() / r.norm());
            assert!(et < 1e-4 && er < 1e-4, "κL={kl} Ω/κv={ratio} n_z={n_z}: {et:e} {er:e}");
            worst = worst.max(et).max(er);
        }
    }
    println!("steady state vs closed form: worst relative deviation {worst:.2e}");
}

#[test]
fn midgap_steady_fields_have_the_expected_phase() {
    let sim = steady_run(4.0, 0.0, 1024);
    let st = sim.state();
    let sech = 1.0 / 4.0_f64.cosh();
    assert!((st.forward[1023] - sech).norm() < 1e-4 * sech);
    assert!((st.backward[0] - Complex64::new(0.0, 4.0_f64.tanh())).norm() < 1e-4);
}

#[test]
fn steady_stored_energy_and_snapshot() {
    let sim = steady_run(4.0, 0.0, 1024);
    let u = td::stored_energy_of(sim.state(), sim.spec(), sim.grid());
    assert!((u - 0.249_832_324_934_766_76).abs() < 1e-3 * 0.2498);

    let snap = Snapshot::of(sim.state(), sim.spec(), sim.grid());
    assert!((snap.integrated_energy() - u).abs() < 1e-14);

    // Interior log-linear fit of u(z).
    let pts: Vec<(f64, f64)> = snap
        .z
        .iter()
        .zip(&snap.energy_density)
        .filter(|(&z, _)| z > 0.05 && z < 0.8)
        .map(|(&z, &e)| (z, e.ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.99, "R² = {r2}");
    assert!(sxy / sxx < 0.0);
    let (first, last) = (snap.energy_density[0], snap.energy_density[1023]);
    assert!(last < first * 1e-2);
    // Steady flux is uniform: |T|² everywhere.
    let t2 = 4.0_f64.cosh().powi(-2);
    assert!(snap.flux.iter().all(|s| (s - t2).abs() < 1e-4 * t2 + 1e-9));
}

#[test]
fn energy_balance_converges() {
    let mut prev = f64::INFINITY;
    for n_z in [512, 1024, 2048] {
        let spec = BarrierSpec::normalized(4.0).unwrap();
        let grid = Grid::new(&spec, n_z).unwrap();
        let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
        let rel = td::energy_balance_residual(&run.history).unwrap().relative();
        assert!(rel < 1e-3, "n_z={n_z}: {rel:e}");
        assert!(rel <= 0.5 * prev, "n_z={n_z}: {rel:e} vs {prev:e}");
        prev = rel;
    }
}

#[test]
fn free_line_balance_is_exact() {
    let spec = BarrierSpec::normalized(0.0).unwrap();
    let grid = Grid::new(&spec, 512).unwrap();
    let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
    assert!(td::energy_balance_residual(&run.history).unwrap().relative() < 1e-6);
}

#[test]
fn balance_holds_after_turn_off() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 1024).unwrap();
    let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
    let bal = td::energy_balance_residual(&run.history).unwrap();
    let after: Vec<f64> = bal
        .times
        .iter()
        .zip(&bal.residual)
        .zip(&bal.masked)
        .filter(|((&t, _), &m)| t > 20.0 && !m)
        .map(|((_, &r), _)| r.abs())
        .collect();
    assert!(after.len() > 1000);
    assert!(after.iter().all(|&r| r < 1e-3 * bal.peak_incident));
}

#[test]
fn coarse_grid_fails_the_balance() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 64).unwrap();
    let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
    assert!(td::energy_balance_residual(&run.history).unwrap().relative() > 1e-3);
}

#[test]
fn response_never_outruns_the_characteristic() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 256).unwrap();
    let cut = grid.time_of(grid.steps_to(3.0));
    let drive = |t_off| SourceSpec::new(SourceShape::Step { t_on: 0.0, rise: 1.0, t_off }, 1.0, 0.0).unwrap();
    let mut a = Simulation::new(spec, grid, drive(Some(cut)));
    let mut b = Simulation::new(spec, grid, drive(None));
    let start = grid.steps_to(cut) - 1;
    for step in 0..start + 200 {
        let elapsed = step.saturating_sub(start);
        let (sa, sb) = (a.state(), b.state());
        for j in elapsed + 1..grid.n_z {
            assert_eq!(sa.forward[j], sb.forward[j], "step {step} cell {j}");
            assert_eq!(sa.backward[j], sb.backward[j], "step {step} cell {j}");
        }
        if elapsed > 2 {
            assert_ne!(sa.forward[elapsed - 1], sb.forward[elapsed - 1]);
        }
        a.advance();
        b.advance();
    }
}

#[test]
fn step_advance_agrees_with_the_simulation() {
    let spec = BarrierSpec::normalized(3.0).unwrap();
    let grid = Grid::new(&spec, 128).unwrap();
    let src = SourceSpec::step(5.0, 2.0, Detuning::new(1.0).unwrap()).unwrap();
    let mut sim = Simulation::new(spec, grid, src);
    let mut state = sim.state().clone();
    for _ in 0..900 {
        state = td::step_advance(&state, &spec, &src, &grid);
        sim.advance();
    }
    assert_eq!(&state, sim.state());
}

#[test]
fn ring_down_is_monotone() {
    for kl in [2.0, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let grid = Grid::new(&spec, 1024).unwrap();
        let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
        let e = run.trace.energy();
        let t = run.trace.times();
        for k in 1..e.len() {
            if t[k - 1] >= run.t_off + grid.dt {
                assert!(e[k] <= e[k - 1] * (1.0 + 1e-13), "κL={kl} t={}", t[k]);
            }
        }
    }
}

#[test]
fn free_line_drains_linearly_in_one_transit() {
    let spec = BarrierSpec::normalized(0.0).unwrap();
    let grid = Grid::new(&spec, 1024).unwrap();
    let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 2.0).unwrap();
    let tr = &run.trace;
    // The sample at t_off carries the half-height edge.
    let u0 = tr.energy_at(run.t_off - grid.dt);
    assert!((u0 - 1.0).abs() < 1e-9, "{u0}");
    for f in [0.25, 0.5, 0.75] {
        assert!((tr.energy_at(run.t_off + f) - (1.0 - f)).abs() < 2e-3, "f={f}");
    }
    assert_eq!(tr.energy_at(run.t_off + 1.0 + 2.0 * grid.dt), 0.0);
    assert!(tr.energy_at(run.t_off + 1.0 - 3.0 * grid.dt) > 0.0);
    assert!(!DecayShape::of(tr, 1.0).unwrap().has_plateau());
}

#[test]
fn stronger_barriers_empty_faster() {
    let traces: Vec<_> = [2.0, 4.0, 6.0]
        .iter()
        .map(|&kl| {
            let spec = BarrierSpec::normalized(kl).unwrap();
            let grid = Grid::new(&spec, 1024).unwrap();
            td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 2.0).unwrap()
        })
        .collect();
    for k in 1..=30 {
        let t = 20.0 + 0.01 * f64::from(k);
        let frac: Vec<f64> = traces.iter().map(|r| r.trace.energy_at(t) / r.trace.energy_at(r.t_off)).collect();
        assert!(frac[0] > frac[1] && frac[1] > frac[2], "t={t}: {frac:?}");
    }
}

#[test]
fn ring_down_starts_at_the_group_delay_rate() {
    for kl in [2.0, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let grid = Grid::new(&spec, 2048).unwrap();
        let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 2.0).unwrap();
        let tr = &run.trace;
        let h = 8.0 * grid.dt;
        let rate = (tr.energy_at(run.t_off + 2.0 * grid.dt) / tr.energy_at(run.t_off + 2.0 * grid.dt + h)).ln() / h;
        let tau_g = cmt::midgap_delay(&spec);
        assert!((rate * tau_g - 1.0).abs() < 0.02, "κL={kl}: rate·τ_g = {}", rate * tau_g);
    }
}

#[test]
fn ring_down_shape_and_lifetimes() {
    for kl in [2.0, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let grid = Grid::new(&spec, 1024).unwrap();
        let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
        let shape = DecayShape::of(&run.trace, 1.0).unwrap();
        let life = delay::cavity_lifetime(&run.trace).unwrap();
        let tau_g = cmt::midgap_delay(&spec);
        println!(
            "κL={kl}: τ_c={:.4} exp_fit={:.4} τ_g={tau_g:.4} dev={:+.1}% rates early={:.3} plateau={:.3} transit={:.3}",
            life.one_over_e,
            life.exp_fit.unwrap_or(f64::NAN),
            100.0 * (life.one_over_e / tau_g - 1.0),
            shape.early_rate,
            shape.plateau_rate,
            shape.transit_rate
        );
        assert!(shape.has_plateau(), "κL={kl}: {shape:?}");
        assert!(life.one_over_e > tau_g);
    }
    let spec = BarrierSpec::normalized(2.0).unwrap();
    let grid = Grid::new(&spec, 1024).unwrap();
    let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 20.0, 3.0).unwrap();
    let life = delay::cavity_lifetime(&run.trace).unwrap();
    assert!((life.one_over_e / cmt::midgap_delay(&spec) - 1.0).abs() < 0.1);
}

#[test]
fn short_drive_is_not_steady() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 256).unwrap();
    let err = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, 2.0, 1.0).unwrap_err();
    assert!(matches!(err, EvlabError::NotSteady { .. }));
}

#[test]
fn grid_rejects_too_few_points() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    assert!(Grid::new(&spec, td::MIN_POINTS - 1).is_err());
    let g = Grid::new(&spec, td::MIN_POINTS).unwrap();
    assert_eq!(g.dt * spec.group_speed(), g.dz);
}

#[test]
fn long_pulse_tunnels_without_reshaping() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 1024).unwrap();
    let pulse = SourceSpec::gaussian(40.0, td::DEFAULT_FRONT_LEVEL, Detuning::MIDGAP).unwrap();
    let run = td::pulse_experiment(&spec, &pulse, &grid, None).unwrap();
    let r = &run.report;
    let tau_g = cmt::midgap_delay(&spec);
    let sech2 = 4.0_f64.cosh().powi(-2);
    println!("pulse κL=4: {r:?}");
    assert!((r.peak_delay_transmitted / tau_g - 1.0).abs() < 0.02);
    assert!((r.t2_measured / sech2 - 1.0).abs() < 0.01);
    assert!(r.shape_deviation < 1e-3);
    assert!((r.front_transit.unwrap() - spec.transit_time()).abs() <= grid.dt);
    assert!(r.warnings.is_empty());
    // The front is orders of magnitude below the bulk transmitted power.
    assert!(r.front_window_level < 1e-3 * sech2 * 10.0);
}

#[test]
fn short_pulse_is_flagged() {
    let spec = BarrierSpec::normalized(4.0).unwrap();
    let grid = Grid::new(&spec, 256).unwrap();
    let pulse = SourceSpec::gaussian(2.0, 1e-5, Detuning::MIDGAP).unwrap();
    let r = td::pulse_experiment(&spec, &pulse, &grid, None).unwrap().report;
    assert_eq!(r.warnings, vec![PulseWarning::NotQuasiStatic]);
    // Half the power spectral width 4 ln2/fwhm passes κv = 4.
    let pulse = SourceSpec::gaussian(0.3, 1e-5, Detuning::MIDGAP).unwrap();
    let r = td::pulse_experiment(&spec, &pulse, &grid, None).unwrap().report;
    assert!(r.warnings.contains(&PulseWarning::NotQuasiStatic));
    assert!(r.warnings.contains(&PulseWarning::BandwidthExceedsStopBand));
}

#[test]
fn front_moves_at_the_group_speed_for_any_coupling() {
    for kl in [0.0, 1.0, 4.0, 8.0] {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let grid = Grid::new(&spec, 512).unwrap();
        let pulse = SourceSpec::gaussian(20.0, 1e-5, Detuning::MIDGAP).unwrap();
        let r = td::pulse_experiment(&spec, &pulse, &grid, None).unwrap().report;
        assert!((r.front_transit.unwrap() - 1.0).abs() <= grid.dt, "κL={kl}");
    }
}

fn raw_energy(f: &[Complex64], b: &[Complex64]) -> f64 {
    f.iter().chain(b).map(|x| x.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lattice_step_is_unitary(kl in 0.0..10.0_f64, seed in proptest::collection::vec(-1.0..1.0_f64, 4 * 64)) {
        let spec = BarrierSpec::normalized(kl).unwrap();
        let grid = Grid::new(&spec, 64).unwrap();
        let mut state = td::FieldState::quiescent(&grid);
        for j in 0..64 {
            state.forward[j] = Complex64::new(seed[4 * j], seed[4 * j + 1]);
            state.backward[j] = Complex64::new(seed[4 * j + 2], seed[4 * j + 3]);
        }
        let dark = SourceSpec::new(SourceShape::Step { t_on: 1e6, rise: 0.0, t_off: None }, 1.0, 0.0).unwrap();
        let next = td::step_advance(&state, &spec, &dark, &grid);
        let leaving = state.forward[63].norm_sqr() + state.backward[0].norm_sqr();
        let before = raw_energy(&state.forward, &state.backward) - leaving;
        let after = raw_energy(&next.forward, &next.backward);
        prop_assert!((before - after).abs() < 1e-12 * before.max(1.0));
    }

    #[test]
    fn sampled_drive_is_bounded(t in -5.0..60.0_f64, fwhm in 1.0..80.0_f64, omega in -5.0..5.0_f64) {
        let pulse = SourceSpec::gaussian(fwhm, 1e-5, Detuning::new(omega).unwrap()).unwrap();
        let step = SourceSpec::step(30.0, 4.0, Detuning::new(omega).unwrap()).unwrap();
        for s in [pulse, step] {
            let v = s.sample(t, 0.01).norm();
            prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
        }
    }
}
