//! Delay-time algebra: dwell time, flux delays, sum rules, cavity Q and the
//! extraction of a lifetime from a ring-down trace.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::cmt::{self, BarrierSpec, Detuning};
use crate::error::{invalid, require_positive, EvlabError, Result};

/// Tolerance on |T|² + |R|² − 1 accepted by [`flux_delays`].
const UNITARITY_SLACK: f64 = 1e-9;

/// A flux delay τ_d/|T|² or τ_d/|R|², which is unbounded when its channel
/// carries no flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxDelay {
    Finite(f64),
    NoFlux,
}

impl FluxDelay {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(t) => t,
            Self::NoFlux => f64::INFINITY,
        }
    }

    /// Escape rate through the channel; zero when there is no flux.
    pub fn rate(self) -> f64 {
        match self {
            Self::Finite(t) => 1.0 / t,
            Self::NoFlux => 0.0,
        }
    }
}

impl fmt::Display for FluxDelay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(t) => write!(f, "{t:.16e}"),
            Self::NoFlux => f.write_str("inf"),
        }
    }
}

impl Serialize for FluxDelay {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(t) => s.serialize_f64(*t),
            Self::NoFlux => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayReport {
    pub tau_g: f64,
    pub tau_d: f64,
    pub tau_t: FluxDelay,
    pub tau_r: FluxDelay,
    pub tau_c: f64,
    pub tau_0: f64,
    pub t2: f64,
    pub r2: f64,
}

impl DelayReport {
    /// All delays of a symmetric coupled-mode barrier at one detuning.
    ///
    /// τ_g comes from the phase derivative of T and τ_d from the stored
    /// energy, so the two reach the report by independent routes. τ_c is the
    /// steady-state lifetime Q/ω.
    pub fn for_barrier(spec: &BarrierSpec, det: Detuning) -> Result<Self> {
        let s = cmt::scatter(spec, det);
        let tau_g = cmt::group_delay_fd(spec, det, cmt::default_fd_step(spec))?.tau_g;
        let tau_d = dwell_time(cmt::stored_energy(spec, det, 1.0)?, 1.0)?;
        let (tau_t, tau_r) = flux_delays(tau_d, s.t2(), s.r2())?;
        let omega = spec.omega_bragg() + det.omega();
        Ok(Self {
            tau_g,
            tau_d,
            tau_t,
            tau_r,
            tau_c: q_factor(spec, det)? / omega,
            tau_0: spec.transit_time(),
            t2: s.t2(),
            r2: s.r2(),
        })
    }
}

/// τ_d = U/P_i.
pub fn dwell_time(stored_energy: f64, incident_power: f64) -> Result<f64> {
    require_positive("P_i", incident_power)?;
    if !(stored_energy.is_finite() && stored_energy >= 0.0) {
        return Err(invalid("U", format!("must be finite and ≥ 0, got {stored_energy}")));
    }
    Ok(stored_energy / incident_power)
}

/// (τ_t, τ_r) = (τ_d/|T|², τ_d/|R|²). A channel with zero flux reports
/// [`FluxDelay::NoFlux`].
pub fn flux_delays(tau_d: f64, t2: f64, r2: f64) -> Result<(FluxDelay, FluxDelay)> {
    if !(tau_d.is_finite() && tau_d >= 0.0) {
        return Err(invalid("tau_d", format!("must be finite and ≥ 0, got {tau_d}")));
    }
    for (name, p) in [("T2", t2), ("R2", r2)] {
        // Rounding can push |T|² of a lossless line a few ulps past 1.
        if !(0.0..=1.0 + UNITARITY_SLACK).contains(&p) {
            return Err(invalid(name, format!("must lie in [0, 1], got {p}")));
        }
    }
    if (t2 + r2 - 1.0).abs() > UNITARITY_SLACK {
        return Err(invalid("T2 + R2", format!("must equal 1, got {}", t2 + r2)));
    }
    let channel = |p: f64| if p > 0.0 { FluxDelay::Finite(tau_d / p) } else { FluxDelay::NoFlux };
    Ok((channel(t2), channel(r2)))
}

/// Signed relative residuals of the delay identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRuleResiduals {
    /// 1 − τ_g/τ_r − τ_g/τ_t.
    pub weighted_delay: f64,
    /// (1/τ_g − 1/τ_r − 1/τ_t)·τ_g.
    pub escape_rate: f64,
    /// (τ_g − τ_d)/τ_d.
    pub dwell: f64,
    /// (1/τ_r + 1/τ_t − 1/τ_d)·τ_d.
    pub reciprocal: f64,
    /// (|R|²τ_g + |T|²τ_g − τ_d)/τ_d.
    pub weighted_dwell: f64,
}

impl SumRuleResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.weighted_delay, self.escape_rate, self.dwell, self.weighted_dwell]
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Residuals of the symmetric-barrier identities for a report, with
/// τ_gr = τ_gt = τ_g.
pub fn verify_sum_rules(report: &DelayReport) -> SumRuleResiduals {
    let (g, d) = (report.tau_g, report.tau_d);
    let (rt, rr) = (report.tau_t.rate(), report.tau_r.rate());
    SumRuleResiduals {
        weighted_delay: 1.0 - g * rr - g * rt,
        escape_rate: (1.0 / g - rr - rt) * g,
        dwell: (g - d) / d,
        reciprocal: (rr + rt - 1.0 / d) * d,
        weighted_dwell: (report.r2 * g + report.t2 * g - d) / d,
    }
}

/// Q = ω·τ_d with ω = ω_B + Ω.
pub fn q_factor(spec: &BarrierSpec, det: Detuning) -> Result<f64> {
    let tau_d = dwell_time(cmt::stored_energy(spec, det, 1.0)?, 1.0)?;
    Ok((spec.omega_bragg() + det.omega()) * tau_d)
}

/// Stored energy sampled across a source turn-off.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTrace {
    times: Vec<f64>,
    energy: Vec<f64>,
    t_off: f64,
}

impl DecayTrace {
    pub fn new(times: Vec<f64>, energy: Vec<f64>, t_off: f64) -> Result<Self> {
        if times.len() != energy.len() {
            return Err(invalid("energy", "must have one sample per time"));
        }
        if times.len() < 2 {
            return Err(EvlabError::TooFewSamples { needed: 2, got: times.len() });
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
            return Err(invalid("times", "must increase strictly"));
        }
        if energy.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(invalid("energy", "must be finite and ≥ 0"));
        }
        if !(times[0] <= t_off && t_off < times[times.len() - 1]) {
            return Err(invalid("t_off", "must lie inside the trace"));
        }
        Ok(Self { times, energy, t_off })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn t_off(&self) -> f64 {
        self.t_off
    }

    /// Linear interpolation of the energy; clamps outside the trace.
    pub fn energy_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.energy[0];
        }
        if i == self.times.len() {
            return self.energy[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.energy[i - 1] * (1.0 - w) + self.energy[i] * w
    }

    /// Same trace with the energy axis scaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        require_positive("factor", factor)?;
        Self::new(self.times.clone(), self.energy.iter().map(|u| u * factor).collect(), self.t_off)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifetime {
    /// First time after turn-off at which U/U(t_off) = 1/e.
    pub one_over_e: f64,
    /// 1/rate of a least-squares exponential fit over U/U(t_off) ∈ [1/e, 1];
    /// `None` when fewer than two samples fall in that range.
    pub exp_fit: Option<f64>,
}

/// Ring-down lifetime of a decay trace.
///
/// The 1/e crossing is located by linear interpolation of ln U between the
/// bracketing samples, which is exact for an exponential.
pub fn cavity_lifetime(trace: &DecayTrace) -> Result<Lifetime> {
    let u_off = trace.energy_at(trace.t_off);
    if u_off <= 0.0 {
        return Err(invalid("energy", "trace holds no energy at turn-off"));
    }
    let target = (-1.0_f64).exp();
    let start = trace.times.partition_point(|&t| t <= trace.t_off);
    let mut prev: (f64, f64) = (trace.t_off, 1.0);
    let mut lowest = 1.0_f64;
    let mut crossing = None;
    for (&t, &u) in trace.times[start..].iter().zip(&trace.energy[start..]) {
        let ratio = u / u_off;
        lowest = lowest.min(ratio);
        if ratio <= target {
            let (ta, ua) = prev;
            let w = if ratio > 0.0 {
                (target.ln() - ua.ln()) / (ratio.ln() - ua.ln())
            } else {
                (ua - target) / (ua - ratio)
            };
            crossing = Some(ta + w * (t - ta));
            break;
        }
        prev = (t, ratio);
    }
    let t_cross = crossing.ok_or(EvlabError::NoOneOverECrossing { lowest })?;

    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &u) in trace.times.iter().zip(&trace.energy) {
        if t < trace.t_off || t > t_cross {
            continue;
        }
        let (x, y) = (t - trace.t_off, (u / u_off).ln());
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    let exp_fit = (n >= 2.0 && denom > 0.0).then(|| {
        let slope = (n * sxy - sx * sy) / denom;
        -1.0 / slope
    });
    Ok(Lifetime { one_over_e: t_cross - trace.t_off, exp_fit })
}

/// Coarse shape of a ring-down, measured as mean logarithmic decay rates
/// over windows placed relative to the transit time τ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayShape {
    /// Mean rate over [0, 0.2]·τ₀ after turn-off.
    pub early_rate: f64,
    /// Mean rate over [0.6, 0.9]·τ₀.
    pub plateau_rate: f64,
    /// Mean rate over [0.95, 1.15]·τ₀, when the last field injected before
    /// turn-off reaches the exit face.
    pub transit_rate: f64,
}

/// Rates faster than the plateau by at least this factor count as a drop.
/// A single exponential or a linear drain never exceeds 1.
pub const DROP_CONTRAST: f64 = 1.5;

impl DecayShape {
    pub fn of(trace: &DecayTrace, transit_time: f64) -> Result<Self> {
        require_positive("transit_time", transit_time)?;
        let end = trace.t_off + 1.15 * transit_time;
        if trace.times[trace.times.len() - 1] < end {
            return Err(invalid("trace", "must extend at least 1.15 transit times past turn-off"));
        }
        let u = |f: f64| trace.energy_at(trace.t_off + f * transit_time);
        let rate = |a: f64, b: f64| (u(a) / u(b)).ln() / ((b - a) * transit_time);
        Ok(Self { early_rate: rate(0.0, 0.2), plateau_rate: rate(0.6, 0.9), transit_rate: rate(0.95, 1.15) })
    }

    pub fn has_early_drop(&self) -> bool {
        self.early_rate > DROP_CONTRAST * self.plateau_rate
    }

    pub fn has_second_drop(&self) -> bool {
        self.transit_rate > DROP_CONTRAST * self.plateau_rate
    }

    pub fn has_plateau(&self) -> bool {
        self.has_early_drop() && self.has_second_drop()
    }
}
