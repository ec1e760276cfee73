//! Every identity and experiment check in one run. Suites run in parallel
//! and report in a fixed order; a suite whose computation fails turns into
//! a failed check instead of aborting the rest.

use std::path::PathBuf;

use rayon::prelude::*;

use evlab_core::cmt::{self, BarrierSpec, Detuning};
use evlab_core::delay::{self, DecayShape, DelayReport};
use evlab_core::quantum::{self, QBarrierSpec, QDelayReport};
use evlab_core::td::{self, Grid, Simulation, SourceShape, SourceSpec};
use evlab_core::{EvlabError, Result};

use crate::args::{Cli, VerifyArgs};
use crate::config::Resolver;
use crate::error::CliError;
use crate::output::{Check, Manifest};
use crate::scenarios::{pulse_checks, PULSE_TOLERANCES};
use crate::tolerances as tol;

type Suite = (&'static str, bool, fn(usize) -> Result<Vec<Check>>);

const SUITES: [Suite; 15] = [
    ("phase_delay", false, phase_delay),
    ("stored_energy", false, stored_energy),
    ("midgap", false, midgap),
    ("resonances", false, resonances),
    ("sum_rules", false, sum_rules),
    ("ring_down", false, ring_down),
    ("energy_balance", false, energy_balance),
    ("steady_state", false, steady_state),
    ("pulse", false, pulse),
    ("causality", false, causality),
    ("quantum_flux", true, quantum_flux),
    ("quantum_decomposition", true, quantum_decomposition),
    ("quantum_dwell", true, quantum_dwell),
    ("hartman", true, hartman),
    ("barrier_top", true, barrier_top),
];

/// κL ∈ {0.5, 1, 2, 4, 6} against Ω/κv ∈ {0, ±0.5, ±0.99, ±1.5, ±3}, plus
/// the first resonance on either side of each stop band.
fn photonic_points() -> Result<Vec<(BarrierSpec, Detuning)>> {
    let mut out = Vec::new();
    for kl in [0.5_f64, 1.0, 2.0, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl)?;
        let first = (kl * kl + std::f64::consts::PI.powi(2)).sqrt();
        let ratios = [0.0, 0.5, -0.5, 0.99, -0.99, 1.5, -1.5, 3.0, -3.0];
        for x in ratios.iter().map(|r| r * kl).chain([first, -first]) {
            out.push((spec, Detuning::from_normalized(&spec, x)?));
        }
    }
    Ok(out)
}

fn worst(points: &[(BarrierSpec, Detuning)], f: impl Fn(&BarrierSpec, Detuning) -> Result<f64>) -> Result<f64> {
    points.iter().try_fold(0.0_f64, |acc, (s, d)| Ok(acc.max(f(s, *d)?)))
}

fn phase_delay(_: usize) -> Result<Vec<Check>> {
    let pts = photonic_points()?;
    let fd = |s: &BarrierSpec, d| cmt::group_delay_fd(s, d, cmt::default_fd_step(s)).map(|p| p.tau_g);
    let closed = worst(&pts, |s, d| {
        let c = cmt::group_delay_closed(s, d);
        Ok((fd(s, d)? - c).abs() / c)
    })?;
    let dwell = worst(&pts, |s, d| {
        let u = cmt::stored_energy_ratio_quadrature(s, d) * s.transit_time();
        Ok((fd(s, d)? - u).abs() / u)
    })?;
    Ok(vec![
        Check::below("fd_matches_closed_form", closed, tol::GROUP_DELAY_IDENTITY),
        Check::below("fd_matches_stored_energy_over_power", dwell, tol::GROUP_DELAY_IDENTITY),
    ])
}

fn stored_energy(_: usize) -> Result<Vec<Check>> {
    let pts = photonic_points()?;
    let dev = worst(&pts, |s, d| {
        let c = cmt::stored_energy_ratio(s, d);
        Ok((cmt::stored_energy_ratio_quadrature(s, d) - c).abs() / c)
    })?;
    Ok(vec![Check::below("closed_form_matches_quadrature", dev, tol::STORED_ENERGY_ORACLE)])
}

fn midgap(_: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for kl in [1.0_f64, 2.0, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl)?;
        let want = kl.tanh() / kl * spec.transit_time();
        let dev = (cmt::group_delay_closed(&spec, Detuning::MIDGAP) - want).abs() / want;
        out.push(Check::below(format!("kL{kl}_tanh"), dev, tol::MIDGAP_CLOSED_FORM));
    }
    Ok(out)
}

fn resonances(_: usize) -> Result<Vec<Check>> {
    let spec = BarrierSpec::normalized(4.0)?;
    let tau0 = spec.transit_time();
    let mut out = Vec::new();
    for (i, det) in cmt::resonance_detunings(&spec, 2)?.into_iter().enumerate() {
        let m = (i + 1) as f64;
        let want = tau0 * (1.0 + (4.0 / (m * std::f64::consts::PI)).powi(2));
        let got = cmt::group_delay_closed(&spec, det);
        out.push(Check::below(format!("m{}_delay", i + 1), (got - want).abs() / want, tol::RESONANCE_DELAY));
        let t = cmt::transmission(&spec, det).norm();
        out.push(Check::below(
            format!("m{}_unit_transmission", i + 1),
            (1.0 - t).abs(),
            tol::RESONANCE_UNIT_TRANSMISSION,
        ));
    }
    Ok(out)
}

fn sum_rules(_: usize) -> Result<Vec<Check>> {
    let (mut rules, mut reciprocal) = (0.0_f64, 0.0_f64);
    for (s, d) in photonic_points()? {
        let r = delay::verify_sum_rules(&DelayReport::for_barrier(&s, d)?);
        rules =
            rules.max(r.weighted_delay.abs()).max(r.escape_rate.abs()).max(r.dwell.abs()).max(r.weighted_dwell.abs());
        reciprocal = reciprocal.max(r.reciprocal.abs());
    }
    Ok(vec![
        Check::below("weighted_and_rate_rules", rules, tol::SUM_RULE),
        Check::below("reciprocal_rule", reciprocal, tol::RECIPROCAL_RULE),
    ])
}

fn decay_run(kl: f64, nz: usize) -> Result<td::DecayRun> {
    let spec = BarrierSpec::normalized(kl)?;
    td::decay_experiment(&spec, &Grid::new(&spec, nz)?, Detuning::MIDGAP, 20.0, 3.0)
}

fn ring_down(nz: usize) -> Result<Vec<Check>> {
    let kls = [2.0, 4.0, 6.0];
    let runs = kls.par_iter().map(|&kl| decay_run(kl, nz)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (kl, run) in kls.iter().zip(&runs) {
        let life = delay::cavity_lifetime(&run.trace)?;
        let dev = (life.one_over_e / run.group_delay - 1.0).abs();
        out.push(Check::below(format!("kL{kl}_lifetime_near_group_delay"), dev, tol::LIFETIME_DEVIATION));
        let shape = DecayShape::of(&run.trace, 1.0)?;
        out.push(Check::holds(format!("kL{kl}_drop_plateau_drop"), shape.has_plateau()));
    }
    let faster = (1..=30).all(|k| {
        let frac: Vec<f64> = runs
            .iter()
            .map(|r| r.trace.energy_at(r.t_off + 0.01 * f64::from(k)) / r.trace.energy_at(r.t_off))
            .collect();
        frac.windows(2).all(|w| w[1] < w[0])
    });
    out.push(Check::holds("larger_kappa_decays_faster", faster));
    Ok(out)
}

fn energy_balance(nz: usize) -> Result<Vec<Check>> {
    let rel = [nz, 2 * nz]
        .par_iter()
        .map(|&n| Ok(td::energy_balance_residual(&decay_run(4.0, n)?.history)?.relative()))
        .collect::<Result<Vec<f64>>>()?;
    let free = td::energy_balance_residual(&decay_run(0.0, nz)?.history)?.relative();
    Ok(vec![
        Check::below("kL4_residual", rel[0], tol::ENERGY_BALANCE),
        Check::below("kL4_residual_refined", rel[1], tol::ENERGY_BALANCE),
        Check::at_most("kL4_refinement_ratio", rel[1] / rel[0], tol::REFINEMENT_RATIO),
        Check::below("free_line_residual", free, tol::FREE_LINE_BALANCE),
    ])
}

fn steady_state(nz: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for kl in [2.0_f64, 4.0, 6.0] {
        let spec = BarrierSpec::normalized(kl)?;
        let grid = Grid::new(&spec, nz)?;
        let mut sim = Simulation::new(spec, grid, SourceSpec::step(1e9, td::DEFAULT_RISE, Detuning::MIDGAP)?);
        sim.record_until(20.0 * spec.transit_time());
        let st = sim.state();
        let s = cmt::scatter(&spec, Detuning::MIDGAP);
        let (t, r) = (s.transmission.norm(), s.reflection.norm());
        let fields = ((st.forward[nz - 1].norm() - t).abs() / t).max((st.backward[0].norm() - r).abs() / r);
        out.push(Check::below(format!("kL{kl}_exit_and_entry_fields"), fields, tol::STEADY_FIELDS));
        let u = td::stored_energy_of(st, &spec, &grid);
        let want = cmt::stored_energy(&spec, Detuning::MIDGAP, 1.0)?;
        out.push(Check::below(format!("kL{kl}_stored_energy"), (u - want).abs() / want, tol::STEADY_STORED_ENERGY));
    }
    Ok(out)
}

fn pulse(nz: usize) -> Result<Vec<Check>> {
    let spec = BarrierSpec::normalized(4.0)?;
    let grid = Grid::new(&spec, nz)?;
    let source = SourceSpec::gaussian(40.0 * spec.transit_time(), td::DEFAULT_FRONT_LEVEL, Detuning::MIDGAP)?;
    let run = td::pulse_experiment(&spec, &source, &grid, None)?;
    Ok(pulse_checks(&spec, &grid, Detuning::MIDGAP, &run))
}

/// A drive cut at t_c must leave every cell ahead of the characteristic
/// from the entry at t_c bit-identical to an uncut run.
fn causality(nz: usize) -> Result<Vec<Check>> {
    let spec = BarrierSpec::normalized(4.0)?;
    let grid = Grid::new(&spec, nz.min(512))?;
    let cut = grid.time_of(grid.steps_to(3.0));
    let drive = |t_off| SourceSpec::new(SourceShape::Step { t_on: 0.0, rise: 1.0, t_off }, 1.0, 0.0);
    let mut a = Simulation::new(spec, grid, drive(Some(cut))?);
    let mut b = Simulation::new(spec, grid, drive(None)?);
    let start = grid.steps_to(cut) - 1;
    let mut ahead_identical = true;
    let mut behind_differs = true;
    for step in 0..start + grid.n_z / 2 {
        let elapsed = step.saturating_sub(start);
        let (sa, sb) = (a.state(), b.state());
        ahead_identical &=
            (elapsed + 1..grid.n_z).all(|j| sa.forward[j] == sb.forward[j] && sa.backward[j] == sb.backward[j]);
        if elapsed > 2 {
            behind_differs &= sa.forward[elapsed - 1] != sb.forward[elapsed - 1];
        }
        a.advance();
        b.advance();
    }
    Ok(vec![
        Check::holds("untouched_ahead_of_characteristic", ahead_identical),
        Check::holds("changed_behind_characteristic", behind_differs),
    ])
}

fn quantum_flux(_: usize) -> Result<Vec<Check>> {
    let mut dev = 0.0_f64;
    for v0 in [0.5, 1.0, 4.0] {
        for l in [0.5, 3.0, 8.0] {
            let spec = QBarrierSpec::normalized(v0, l)?;
            for i in 1..=300 {
                let s = quantum::scatter(&spec, v0 * f64::from(i) / 100.0)?;
                dev = dev.max((s.t2() + s.r2() - 1.0).abs());
            }
        }
    }
    Ok(vec![Check::below("T2_plus_R2_is_one", dev, tol::FLUX_CONSERVATION)])
}

fn quantum_decomposition(_: usize) -> Result<Vec<Check>> {
    let (mut dec, mut rule) = (0.0_f64, 0.0_f64);
    for a in 0..10 {
        let v0 = 0.5 + 0.5 * f64::from(a);
        let spec = QBarrierSpec::normalized(v0, 2.0)?;
        for b in 0..10 {
            let e = v0 * (0.05 + 0.09 * f64::from(b));
            dec = dec.max(QDelayReport::compute(&spec, e, None)?.decomposition_residual().abs());
            rule = rule.max(quantum::sum_rule_q(&spec, e)?.abs());
        }
    }
    Ok(vec![
        Check::below("group_delay_is_dwell_plus_interference", dec, tol::DECOMPOSITION),
        Check::below("generalized_sum_rule", rule, tol::SUM_RULE),
    ])
}

fn quantum_dwell(_: usize) -> Result<Vec<Check>> {
    let mut dev = 0.0_f64;
    for v0 in [0.5, 1.0, 2.0, 3.5, 5.0] {
        for frac in [0.1, 0.35, 0.6, 0.85, 1.4] {
            let spec = QBarrierSpec::normalized(v0, 0.5 + frac)?;
            let e = frac * v0;
            let tau = quantum::dwell_time_q(&spec, e)?;
            dev = dev.max((quantum::integrate_stationary(&spec, e, 8192)?.dwell_time - tau).abs() / tau);
        }
    }
    Ok(vec![Check::below("transfer_matrix_matches_integration", dev, tol::DWELL_ORACLE)])
}

fn hartman(_: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let photonic = |l: f64| -> Result<f64> {
        let s = BarrierSpec::normalized(1.0)?.with_length(l)?;
        Ok(cmt::group_delay_closed(&s, Detuning::MIDGAP))
    };
    let quantum = |ql: f64| -> Result<f64> {
        let probe = QBarrierSpec::normalized(2.0, 1.0)?;
        let q = probe.decay_constant(1.0).expect("E below V0");
        quantum::group_delay_q(&probe.with_length(ql / q)?, 1.0)
    };
    let (mut p, mut q) = (0.0_f64, 0.0_f64);
    for l in [5.0, 6.0, 8.0, 10.0] {
        p = p.max((photonic(2.0 * l)? / photonic(l)? - 1.0).abs());
        q = q.max((quantum(2.0 * l)? / quantum(l)? - 1.0).abs());
    }
    out.push(Check::below("photonic_saturates", p, tol::HARTMAN_SATURATION));
    out.push(Check::below("quantum_saturates", q, tol::HARTMAN_SATURATION));
    Ok(out)
}

fn barrier_top(_: usize) -> Result<Vec<Check>> {
    let mut dev = 0.0_f64;
    for (v0, l) in [(1.0, 1.0), (3.0, 2.0), (0.5, 5.0)] {
        let spec = QBarrierSpec::normalized(v0, l)?;
        let at = QDelayReport::compute(&spec, v0, None)?;
        for side in [v0 * (1.0 - 1e-9), v0 * (1.0 + 1e-9)] {
            let near = QDelayReport::compute(&spec, side, None)?;
            for (x, y) in [(at.tau_g, near.tau_g), (at.tau_d, near.tau_d), (at.tau_i, near.tau_i)] {
                dev = dev.max((x - y).abs() / x.abs().max(1e-3));
            }
        }
    }
    Ok(vec![Check::below("delays_continuous_at_V0", dev, tol::BARRIER_TOP_CONTINUITY)])
}

fn run_suite(suite: &Suite, nz: usize) -> Vec<Check> {
    let (name, _, f) = *suite;
    match f(nz) {
        Ok(checks) => checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{name}.{}", c.name);
                c
            })
            .collect(),
        Err(e) => vec![Check::errored(name, e)],
    }
}

pub fn verify(a: &VerifyArgs, cli: &Cli, mut r: Resolver) -> std::result::Result<(Manifest, PathBuf), CliError> {
    let nz = r.usize("nz", a.nz, td::DEFAULT_POINTS)?;
    let quantum_only = r.bool("quantum-only", a.quantum_only, false)?;
    let out = r.string("out", cli.out.as_ref().map(|p| p.display().to_string()), "evlab_verify.manifest.json")?;
    let mut m = Manifest::new("verify", r.finish()?);
    if nz < td::MIN_POINTS {
        return Err(EvlabError::TooFewSamples { needed: td::MIN_POINTS, got: nz }.into());
    }
    for (name, value) in [
        ("group_delay_identity", tol::GROUP_DELAY_IDENTITY),
        ("stored_energy_oracle", tol::STORED_ENERGY_ORACLE),
        ("midgap_closed_form", tol::MIDGAP_CLOSED_FORM),
        ("resonance_delay", tol::RESONANCE_DELAY),
        ("resonance_unit_transmission", tol::RESONANCE_UNIT_TRANSMISSION),
        ("sum_rule", tol::SUM_RULE),
        ("reciprocal_rule", tol::RECIPROCAL_RULE),
        ("lifetime_deviation", tol::LIFETIME_DEVIATION),
        ("drop_contrast", delay::DROP_CONTRAST),
        ("energy_balance", tol::ENERGY_BALANCE),
        ("refinement_ratio", tol::REFINEMENT_RATIO),
        ("free_line_balance", tol::FREE_LINE_BALANCE),
        ("steady_fields", tol::STEADY_FIELDS),
        ("steady_stored_energy", tol::STEADY_STORED_ENERGY),
        ("flux_conservation", tol::FLUX_CONSERVATION),
        ("decomposition", tol::DECOMPOSITION),
        ("dwell_oracle", tol::DWELL_ORACLE),
        ("hartman_saturation", tol::HARTMAN_SATURATION),
        ("barrier_top_continuity", tol::BARRIER_TOP_CONTINUITY),
    ]
    .into_iter()
    .chain(PULSE_TOLERANCES)
    {
        m.tolerance(name, value);
    }
    let selected: Vec<&Suite> = SUITES.iter().filter(|s| s.1 || !quantum_only).collect();
    m.result("suites", selected.iter().map(|s| s.0).collect::<Vec<_>>());
    let checks: Vec<Vec<Check>> = selected.par_iter().map(|s| run_suite(s, nz)).collect();
    for c in checks.into_iter().flatten() {
        m.check(c);
    }
    Ok((m, PathBuf::from(out)))
}
