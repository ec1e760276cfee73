use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use evlab_core::cmt::{self, BarrierSpec, Detuning};
use evlab_core::delay::{self, DecayShape, DelayReport, FluxDelay};
use evlab_core::quantum::{self, QBarrierSpec, QDelayReport};
use evlab_core::td::{self, Grid, PulseRun, SourceSpec};
use evlab_core::EvlabError;

use crate::args::{Cli, DecayArgs, Format, HartmanArgs, PulseArgs, QuantumArgs, SpectrumArgs};
use crate::config::Resolver;
use crate::error::CliError;
use crate::output::{manifest_path, sibling, write_text, Cell, Check, Manifest, Table};
use crate::tolerances as tol;

/// Where a data scenario writes, resolved like any other parameter.
pub struct Sink {
    pub path: PathBuf,
    pub format: Format,
    pub gnuplot: bool,
}

impl Sink {
    pub fn resolve(r: &mut Resolver, cli: &Cli, scenario: &str) -> Result<Self, CliError> {
        let format = r.string("format", cli.format.map(|f| f.extension().to_owned()), "csv")?;
        let format = Format::parse(&format).ok_or_else(|| CliError::Config(format!("unknown format `{format}`")))?;
        let default = format!("evlab_{scenario}.{}", format.extension());
        let path = r.string("out", cli.out.as_ref().map(|p| p.display().to_string()), &default)?;
        let gnuplot = r.bool("gnuplot", cli.gnuplot, false)?;
        Ok(Self { path: PathBuf::from(path), format, gnuplot })
    }

    pub fn manifest_path(&self) -> PathBuf {
        manifest_path(&self.path)
    }

    fn emit_at(&self, path: PathBuf, table: &Table, m: &mut Manifest) -> Result<(), CliError> {
        table.write(&path, self.format)?;
        m.files.push(path.display().to_string());
        if self.gnuplot {
            if let Some(script) = table.gnuplot(&path, self.format) {
                let gp = path.with_extension("gp");
                write_text(&gp, &script)?;
                m.files.push(gp.display().to_string());
            }
        }
        Ok(())
    }

    pub fn emit(&self, table: &Table, m: &mut Manifest) -> Result<(), CliError> {
        self.emit_at(self.path.clone(), table, m)
    }

    pub fn emit_sibling(&self, suffix: &str, table: &Table, m: &mut Manifest) -> Result<(), CliError> {
        self.emit_at(sibling(&self.path, suffix, self.format.extension()), table, m)
    }
}

fn flux_cell(d: FluxDelay, scale: f64) -> Cell {
    match d {
        FluxDelay::Finite(x) => Cell::Num(x / scale),
        FluxDelay::NoFlux => Cell::Inf,
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl IndexedParallelIterator<Item = f64> {
    (0..n).into_par_iter().map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn require_range(name: &str, lo: f64, hi: f64, points: usize) -> Result<(), CliError> {
    if points < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Config(format!("{name} range must satisfy min < max with at least 2 points")));
    }
    Ok(())
}

pub fn spectrum(a: &SpectrumArgs, cli: &Cli, mut r: Resolver) -> Result<(Manifest, PathBuf), CliError> {
    let kl = r.f64("kappa-L", a.kappa_l, 4.0)?;
    let lo = r.f64("detuning-min", a.detuning_min, -8.0)?;
    let hi = r.f64("detuning-max", a.detuning_max, 8.0)?;
    let n = r.usize("detuning-points", a.detuning_points, 801)?;
    let sink = Sink::resolve(&mut r, cli, "spectrum")?;
    require_range("detuning", lo, hi, n)?;
    let mut m = Manifest::new("spectrum", r.finish()?);
    let identity = m.tolerance("group_delay_identity", tol::GROUP_DELAY_IDENTITY);

    let spec = BarrierSpec::normalized(kl)?;
    let tau0 = spec.transit_time();
    let step = cmt::default_fd_step(&spec);
    let rows: Vec<(f64, DelayReport, bool, f64)> = linspace(lo, hi, n)
        .map(|x| {
            let det = Detuning::from_normalized(&spec, x)?;
            let coarse = cmt::group_delay_fd(&spec, det, step)?.quality != cmt::FdQuality::Resolved;
            Ok((x, DelayReport::for_barrier(&spec, det)?, coarse, cmt::stored_energy_ratio(&spec, det)))
        })
        .collect::<Result<_, EvlabError>>()?;

    let mut table = Table::new(&[
        "detuning_norm",
        "T_mag2",
        "R_mag2",
        "group_delay_norm",
        "dwell_norm",
        "stored_energy_norm",
        "tau_t_norm",
        "tau_r_norm",
        "lifetime_norm",
    ]);
    table.plot = (0, vec![1, 3, 4]);
    let mut worst: f64 = 0.0;
    for (x, rep, _, u) in &rows {
        worst = worst.max((rep.tau_g - rep.tau_d).abs() / rep.tau_d);
        table.push(vec![
            Cell::Num(*x),
            rep.t2.into(),
            rep.r2.into(),
            (rep.tau_g / tau0).into(),
            (rep.tau_d / tau0).into(),
            (*u).into(),
            flux_cell(rep.tau_t, tau0),
            flux_cell(rep.tau_r, tau0),
            (rep.tau_c / tau0).into(),
        ]);
    }
    m.check(Check::below("group_delay_equals_dwell", worst, identity));
    m.result("coarse_fd_points", rows.iter().filter(|r| r.2).count());

    let (x_min, g_min) = rows
        .iter()
        .map(|(x, rep, ..)| (*x, rep.tau_g / tau0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two rows");
    m.result("min_group_delay_norm", g_min);
    m.result("min_group_delay_at_detuning_norm", x_min);
    if kl > 0.0 && lo <= 0.0 && hi >= 0.0 {
        let half_step = 0.5 * (hi - lo) / (n - 1) as f64;
        m.check(Check::holds("minimum_at_midgap", x_min.abs() <= half_step * (1.0 + 1e-9)));
        let want = kl.tanh() / kl;
        m.check(Check::below("minimum_matches_tanh", (g_min / want - 1.0).abs(), identity));
    }
    if kl == 0.0 {
        let off = rows.iter().map(|(_, rep, ..)| (rep.tau_g / tau0 - 1.0).abs()).fold(0.0, f64::max);
        m.check(Check::below("free_line_delays_are_unity", off, identity));
    }

    let reach = lo.abs().max(hi.abs());
    let m_max = ((reach * reach - kl * kl).max(0.0).sqrt() / std::f64::consts::PI).floor() as usize;
    let mut resonances = Vec::new();
    if kl > 0.0 && m_max > 0 {
        let unit = m.tolerance("resonance_unit_transmission", tol::RESONANCE_UNIT_TRANSMISSION);
        let mut worst_t: f64 = 0.0;
        let mut all_slow = true;
        for (i, det) in cmt::resonance_detunings(&spec, m_max.min(10_000))?.into_iter().enumerate() {
            for sign in [1.0, -1.0] {
                let x = sign * det.normalized(&spec);
                if x < lo || x > hi {
                    continue;
                }
                let d = Detuning::from_normalized(&spec, x)?;
                let t = cmt::transmission(&spec, d).norm();
                let g = cmt::group_delay_closed(&spec, d) / tau0;
                worst_t = worst_t.max((1.0 - t).abs());
                all_slow &= g > 1.0;
                resonances.push(json!({ "m": i + 1, "detuning_norm": x, "T_mag": t, "group_delay_norm": g }));
            }
        }
        if !resonances.is_empty() {
            m.check(Check::below("resonances_transmit_fully", worst_t, unit));
            m.check(Check::holds("resonances_slower_than_free_transit", all_slow));
        }
    }
    m.result("resonances", resonances);
    sink.emit(&table, &mut m)?;
    Ok((m, sink.manifest_path()))
}

fn label(kl: f64) -> String {
    format!("U_over_taug_kL{kl}")
}

pub fn decay(a: &DecayArgs, cli: &Cli, mut r: Resolver) -> Result<(Manifest, PathBuf), CliError> {
    let kls = r.f64_list("kappa-L", a.kappa_l.clone(), &[2.0, 4.0, 6.0])?;
    let nz = r.usize("nz", a.nz, td::DEFAULT_POINTS)?;
    let t_off = r.f64("t-off", a.t_off, 20.0)?;
    let duration = r.f64("duration", a.duration, 3.0)?;
    let sink = Sink::resolve(&mut r, cli, "decay")?;
    let mut m = Manifest::new("decay", r.finish()?);
    let life_tol = m.tolerance("lifetime_deviation", tol::LIFETIME_DEVIATION);
    let balance_tol = m.tolerance("energy_balance", tol::ENERGY_BALANCE);
    m.tolerance("steady_rate", td::STEADY_RATE);
    m.tolerance("drop_contrast", delay::DROP_CONTRAST);

    let mut all = kls.clone();
    all.push(0.0);
    let runs = all
        .par_iter()
        .map(|&kl| {
            let spec = BarrierSpec::normalized(kl)?;
            let grid = Grid::new(&spec, nz)?;
            let run = td::decay_experiment(&spec, &grid, Detuning::MIDGAP, t_off, duration)?;
            let balance = td::energy_balance_residual(&run.history)?.relative();
            Ok((spec, grid, run, balance))
        })
        .collect::<Result<Vec<_>, EvlabError>>()?;

    let times = runs[0].2.trace.times();
    if runs.iter().any(|r| r.2.trace.times().len() != times.len()) {
        return Err(CliError::Config("decay runs ended on different time grids".to_owned()));
    }
    let mut columns = vec!["vt_over_L".to_owned()];
    columns.extend(kls.iter().map(|&k| label(k)));
    columns.push("U_over_taug_reference".to_owned());
    let mut table = Table::new(&columns.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Num(t / runs[0].0.transit_time())];
        row.extend(runs.iter().map(|r| Cell::Num(r.2.trace.energy()[i])));
        table.push(row);
    }

    let mut summaries = Vec::new();
    for (spec, _, run, balance) in &runs[..kls.len()] {
        let kl = spec.kappa_length();
        let tau0 = spec.transit_time();
        let life = delay::cavity_lifetime(&run.trace)?;
        let shape = DecayShape::of(&run.trace, tau0)?;
        let deviation = life.one_over_e / run.group_delay - 1.0;
        summaries.push(json!({
            "kappa_L": kl,
            "lifetime_norm": life.one_over_e / tau0,
            "exp_fit_lifetime_norm": life.exp_fit.map(|x| x / tau0),
            "group_delay_norm": run.group_delay / tau0,
            "deviation": deviation,
            "early_rate": shape.early_rate,
            "plateau_rate": shape.plateau_rate,
            "transit_rate": shape.transit_rate,
            "steady_rate": run.steady_rate,
            "energy_balance": balance,
        }));
        m.check(Check::below(format!("kL{kl}_lifetime_near_group_delay"), deviation.abs(), life_tol));
        m.check(Check::holds(format!("kL{kl}_drop_plateau_drop"), shape.has_plateau()));
        m.check(Check::below(format!("kL{kl}_energy_balance"), *balance, balance_tol));
    }
    m.result("runs", summaries);

    let (rspec, rgrid, rrun, _) = &runs[kls.len()];
    let tr = &rrun.trace;
    let full = tr.energy_at(rrun.t_off - rgrid.dt);
    let empty = tr.energy_at(rrun.t_off + rspec.transit_time() + 2.0 * rgrid.dt);
    m.result("reference_energy_before_turn_off", full);
    m.result("reference_energy_after_one_transit", empty);
    m.check(Check::holds("reference_drains_in_one_transit", empty == 0.0 && (full - 1.0).abs() < 1e-9));

    let mut order: Vec<usize> = (0..kls.len()).filter(|&i| kls[i] > 0.0).collect();
    order.sort_by(|&i, &j| kls[i].total_cmp(&kls[j]));
    order.dedup_by(|a, b| kls[*a] == kls[*b]);
    if order.len() > 1 {
        let faster = (1..=30).all(|k| {
            let frac: Vec<f64> = order
                .iter()
                .map(|&i| {
                    let tr = &runs[i].2.trace;
                    let t = runs[i].2.t_off + 0.01 * f64::from(k) * runs[i].0.transit_time();
                    tr.energy_at(t) / tr.energy_at(runs[i].2.t_off)
                })
                .collect();
            frac.windows(2).all(|w| w[1] < w[0])
        });
        m.check(Check::holds("larger_kappa_decays_faster", faster));
    }
    sink.emit(&table, &mut m)?;
    Ok((m, sink.manifest_path()))
}

pub fn pulse(a: &PulseArgs, cli: &Cli, mut r: Resolver) -> Result<(Manifest, PathBuf), CliError> {
    let kl = r.f64("kappa-L", a.kappa_l, 4.0)?;
    let nz = r.usize("nz", a.nz, td::DEFAULT_POINTS)?;
    let fwhm = r.f64("fwhm", a.fwhm, 40.0)?;
    let x = r.f64("detuning", a.detuning, 0.0)?;
    let front_level = r.f64("front-level", a.front_level, td::DEFAULT_FRONT_LEVEL)?;
    let sink = Sink::resolve(&mut r, cli, "pulse")?;
    let mut m = Manifest::new("pulse", r.finish()?);

    let spec = BarrierSpec::normalized(kl)?;
    let tau0 = spec.transit_time();
    let grid = Grid::new(&spec, nz)?;
    let det = Detuning::from_normalized(&spec, x)?;
    let source = SourceSpec::gaussian(fwhm * tau0, front_level, det)?;
    let run = td::pulse_experiment(&spec, &source, &grid, None)?;
    let rep = &run.report;
    let s = &run.history.samples;

    let lag = nz - 1;
    let reference = |k: usize| if k >= lag { s[k - lag].p_incident } else { 0.0 };
    let peak_i = s.iter().map(|x| x.p_incident).fold(0.0, f64::max);
    let peak_t = s.iter().map(|x| x.p_transmitted).fold(0.0, f64::max);
    let mut table = Table::new(&[
        "t_norm",
        "P_incident",
        "P_reference",
        "P_transmitted",
        "P_reflected",
        "P_incident_norm",
        "P_transmitted_norm",
    ]);
    table.plot = (0, vec![5, 6]);
    for (k, x) in s.iter().enumerate() {
        table.push(vec![
            Cell::Num(x.t / tau0),
            x.p_incident.into(),
            reference(k).into(),
            x.p_transmitted.into(),
            x.p_reflected.into(),
            (x.p_incident / peak_i).into(),
            (x.p_transmitted / peak_t).into(),
        ]);
    }

    let mut front = Table::new(&["t_norm", "P_transmitted_over_peak_incident", "P_reference_over_peak_incident"]);
    front.log_y = true;
    if let Some(ft) = rep.front_transit {
        let t_in = s.iter().find(|x| x.p_incident > td::FRONT_THRESHOLD * peak_i).map_or(0.0, |x| x.t);
        let (from, to) = (t_in + ft - tau0, t_in + ft + td::FRONT_EXCLUSION * tau0);
        for (k, x) in s.iter().enumerate().filter(|(_, x)| x.t >= from && x.t <= to) {
            front.push(vec![Cell::Num(x.t / tau0), (x.p_transmitted / peak_i).into(), (reference(k) / peak_i).into()]);
        }
    }

    m.result("report", rep);
    m.result("group_delay_closed_norm", cmt::group_delay_closed(&spec, det) / tau0);
    m.result("T2_closed", cmt::transmission(&spec, det).norm_sqr());
    m.result("time_step_norm", grid.dt / tau0);
    let front_ratio = front_window_ratio(&run);
    m.result("front_window_over_transmitted_peak", front_ratio);
    m.result("front_orders_below_transmitted_peak", -front_ratio.log10());
    for (name, value) in PULSE_TOLERANCES {
        m.tolerance(name, value);
    }
    for c in pulse_checks(&spec, &grid, det, &run) {
        m.check(c);
    }

    sink.emit(&table, &mut m)?;
    sink.emit_sibling("_front", &front, &mut m)?;
    Ok((m, sink.manifest_path()))
}

pub const PULSE_TOLERANCES: [(&str, f64); 7] = [
    ("peak_delay", tol::PEAK_DELAY),
    ("pulse_transmittance", tol::PULSE_TRANSMITTANCE),
    ("shape_deviation", tol::SHAPE_DEVIATION),
    ("front_transit_steps", tol::FRONT_TRANSIT_STEPS),
    ("front_window_ratio", tol::FRONT_WINDOW_RATIO),
    ("front_threshold", td::FRONT_THRESHOLD),
    ("shape_floor", td::SHAPE_FLOOR),
];

/// Largest transmitted power in the front window over the transmitted peak.
pub fn front_window_ratio(run: &PulseRun) -> f64 {
    let s = &run.history.samples;
    let peak_i = s.iter().map(|x| x.p_incident).fold(0.0, f64::max);
    let peak_t = s.iter().map(|x| x.p_transmitted).fold(0.0, f64::max);
    run.report.front_window_level * peak_i / peak_t
}

pub fn pulse_checks(spec: &BarrierSpec, grid: &Grid, det: Detuning, run: &PulseRun) -> Vec<Check> {
    let rep = &run.report;
    let tau_g = cmt::group_delay_closed(spec, det);
    let t2 = cmt::transmission(spec, det).norm_sqr();
    let front_steps = rep.front_transit.map_or(f64::INFINITY, |ft| (ft - spec.transit_time()).abs() / grid.dt);
    vec![
        Check::below(
            "peak_delay_matches_group_delay",
            (rep.peak_delay_transmitted / tau_g - 1.0).abs(),
            tol::PEAK_DELAY,
        ),
        Check::below("transmittance_matches_closed_form", (rep.t2_measured / t2 - 1.0).abs(), tol::PULSE_TRANSMITTANCE),
        Check::below("no_reshaping", rep.shape_deviation, tol::SHAPE_DEVIATION),
        Check::at_most("front_moves_at_group_speed", front_steps, tol::FRONT_TRANSIT_STEPS),
        Check::below("front_far_below_bulk", front_window_ratio(run), tol::FRONT_WINDOW_RATIO),
    ]
}

/// Opaque-limit group delays used to normalize the Hartman sweep:
/// 1/(κv) for the grating and 2/(qv) for the quantum barrier at E = V0/2.
const HARTMAN_V0: f64 = 2.0;
const HARTMAN_E: f64 = 1.0;

fn photonic_delays(l: f64) -> Result<(f64, f64), EvlabError> {
    let spec = BarrierSpec::normalized(1.0)?.with_length(l)?;
    let g = cmt::group_delay_fd(&spec, Detuning::MIDGAP, cmt::default_fd_step(&spec))?.tau_g;
    let d = delay::dwell_time(cmt::stored_energy(&spec, Detuning::MIDGAP, 1.0)?, 1.0)?;
    let sat = 1.0 / (spec.kappa() * spec.group_speed());
    Ok((g / sat, d / sat))
}

fn quantum_delays(ql: f64) -> Result<(f64, f64), EvlabError> {
    let probe = QBarrierSpec::normalized(HARTMAN_V0, 1.0)?;
    let q = probe.decay_constant(HARTMAN_E).expect("E below V0");
    let spec = probe.with_length(ql / q)?;
    let sat = 2.0 / (q * spec.velocity(HARTMAN_E));
    Ok((quantum::group_delay_q(&spec, HARTMAN_E)? / sat, quantum::dwell_time_q(&spec, HARTMAN_E)? / sat))
}

pub fn hartman(a: &HartmanArgs, cli: &Cli, mut r: Resolver) -> Result<(Manifest, PathBuf), CliError> {
    let lo = r.f64("length-min", a.length_min, 1.0)?;
    let hi = r.f64("length-max", a.length_max, 10.0)?;
    let n = r.usize("length-points", a.length_points, 37)?;
    let from = r.f64("saturation-from", a.saturation_from, 5.0)?;
    let sink = Sink::resolve(&mut r, cli, "hartman")?;
    require_range("length", lo, hi, n)?;
    if lo <= 0.0 {
        return Err(CliError::Config("length-min must be positive".to_owned()));
    }
    let mut m = Manifest::new("hartman", r.finish()?);
    let sat_tol = m.tolerance("hartman_saturation", tol::HARTMAN_SATURATION);
    let identity = m.tolerance("group_delay_identity", tol::GROUP_DELAY_IDENTITY);
    m.result("quantum_energy_over_V0", HARTMAN_E / HARTMAN_V0);

    let lengths: Vec<f64> = linspace(lo, hi, n).collect();
    let mut table = Table::new(&["model", "length_norm", "group_delay_norm", "dwell_norm"]);
    table.plot = (1, vec![2, 3]);
    for (name, model) in
        [("photonic", photonic_delays as fn(f64) -> Result<(f64, f64), EvlabError>), ("quantum", quantum_delays)]
    {
        let rows: Vec<(f64, f64)> = lengths.par_iter().map(|&l| model(l)).collect::<Result<_, _>>()?;
        let doubled: Vec<Option<f64>> = lengths
            .par_iter()
            .map(|&l| if l >= from { model(2.0 * l).map(|p| Some(p.0)) } else { Ok(None) })
            .collect::<Result<_, EvlabError>>()?;
        for (&l, &(g, d)) in lengths.iter().zip(&rows) {
            table.push(vec![Cell::Text(name), l.into(), g.into(), d.into()]);
        }
        let change = rows
            .iter()
            .zip(&doubled)
            .filter_map(|(&(g, _), d)| d.map(|g2| (g2 / g - 1.0).abs()))
            .fold(f64::NAN, f64::max);
        if !change.is_nan() {
            m.check(Check::below(format!("{name}_saturates"), change, sat_tol));
        }
        m.check(Check::holds(format!("{name}_monotone_in_length"), rows.windows(2).all(|w| w[1].0 >= w[0].0)));
        m.result(format!("{name}_max_change_per_doubling"), change);
        m.result(format!("{name}_group_delay_at_max_length"), rows[n - 1].0);
        if name == "photonic" {
            let off = lengths.iter().zip(&rows).map(|(&l, &(g, _))| (g / l.tanh() - 1.0).abs()).fold(0.0, f64::max);
            m.check(Check::below("photonic_matches_tanh", off, identity));
        }
    }
    sink.emit(&table, &mut m)?;
    Ok((m, sink.manifest_path()))
}

pub fn quantum(a: &QuantumArgs, cli: &Cli, mut r: Resolver) -> Result<(Manifest, PathBuf), CliError> {
    let v0 = r.f64("v0", a.v0, 1.0)?;
    let length = r.f64("length", a.length, 3.0)?;
    let lo = r.f64("energy-min", a.energy_min, 0.02)?;
    let hi = r.f64("energy-max", a.energy_max, 2.0)?;
    let n = r.usize("energy-points", a.energy_points, 100)?;
    let delta_e = r.f64("delta-e", a.delta_e, 0.01)?;
    let sink = Sink::resolve(&mut r, cli, "quantum")?;
    require_range("energy", lo, hi, n)?;
    if lo <= 0.0 {
        return Err(CliError::Config("energy-min must be positive".to_owned()));
    }
    let mut m = Manifest::new("quantum", r.finish()?);
    let flux_tol = m.tolerance("flux_conservation", tol::FLUX_CONSERVATION);
    let dec_tol = m.tolerance("decomposition", tol::DECOMPOSITION);
    let rule_tol = m.tolerance("sum_rule", tol::SUM_RULE);
    m.tolerance("energy_step", quantum::ENERGY_STEP);

    let spec = QBarrierSpec::normalized(v0, length)?;
    let rows = linspace(lo, hi, n)
        .map(|frac| {
            let e = frac * v0;
            let s = quantum::scatter(&spec, e)?;
            let rep = QDelayReport::compute(&spec, e, Some(delta_e * v0))?;
            Ok((frac, s.t2(), s.r2(), rep, quantum::sum_rule_q(&spec, e)?))
        })
        .collect::<Result<Vec<_>, EvlabError>>()?;

    let mut table = Table::new(&[
        "E_over_V0",
        "T_mag2",
        "R_mag2",
        "tau_g",
        "tau_d",
        "tau_i",
        "tau_d_tilde",
        "decomposition_residual",
        "sum_rule_residual",
        "packet_tau_ratio",
    ]);
    table.plot = (0, vec![3, 4, 5]);
    let (mut flux, mut dec, mut rule) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (frac, t2, r2, rep, sr) in &rows {
        flux = flux.max((t2 + r2 - 1.0).abs());
        dec = dec.max(rep.decomposition_residual().abs());
        rule = rule.max(sr.abs());
        table.push(vec![
            Cell::Num(*frac),
            (*t2).into(),
            (*r2).into(),
            rep.tau_g.into(),
            rep.tau_d.into(),
            rep.tau_i.into(),
            rep.tau_d_tilde.into(),
            rep.decomposition_residual().into(),
            (*sr).into(),
            rep.ratio_check.map_or(Cell::Num(f64::NAN), |p| Cell::Num(p.tau_ratio)),
        ]);
    }
    m.check(Check::below("flux_conservation", flux, flux_tol));
    m.check(Check::below("group_delay_is_dwell_plus_interference", dec, dec_tol));
    m.check(Check::below("generalized_sum_rule", rule, rule_tol));

    let crossings: Vec<f64> = rows
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0].3.tau_i - w[0].3.tau_d, w[1].3.tau_i - w[1].3.tau_d);
            (a.signum() != b.signum()).then(|| w[0].0 + (w[1].0 - w[0].0) * a / (a - b))
        })
        .collect();
    m.result("interference_dwell_crossover_E_over_V0", crossings);
    sink.emit(&table, &mut m)?;
    Ok((m, sink.manifest_path()))
}
