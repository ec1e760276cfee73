//! Stationary scattering from a rectangular potential barrier of height V₀
//! on 0 ≤ x ≤ L, and the delay times built from it.
//!
//! Outside the barrier ψ = e^{ikx} + R e^{−ikx} (x < 0) and
//! ψ = T e^{ik(x−L)} (x > L). Inside, with K² = 2m(E − V₀)/ħ², the
//! solution is carried by cos(Ky) and sin(Ky)/K, entire in K², so energies
//! below, at and above V₀ share one code path.
//!
//! T is referenced across the barrier, so V₀ = 0 gives T = e^{ikL} and a
//! phase delay of L/v; R is referenced to the entry face x = 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};
use crate::quad::Composite;
use crate::special::cosh_sinhc;

/// Relative energy step of the phase derivatives.
pub const ENERGY_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBarrierSpec {
    height: f64,
    length: f64,
    mass: f64,
    hbar: f64,
}

impl QBarrierSpec {
    /// Barrier in units with ħ = m = 1.
    pub fn normalized(height: f64, length: f64) -> Result<Self> {
        Self::new(height, length, 1.0, 1.0)
    }

    pub fn new(height: f64, length: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(height.is_finite() && height >= 0.0) {
            return Err(invalid("V0", format!("must be finite and ≥ 0, got {height}")));
        }
        require_positive("length_L", length)?;
        require_positive("mass", mass)?;
        require_positive("hbar", hbar)?;
        Ok(Self { height, length, mass, hbar })
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.height, length, self.mass, self.hbar)
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// k = √(2mE)/ħ.
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (2.0 * self.mass * energy).sqrt() / self.hbar
    }

    /// q = √(2m(V₀ − E))/ħ below the barrier top, `None` above it.
    pub fn decay_constant(&self, energy: f64) -> Option<f64> {
        (energy < self.height).then(|| (2.0 * self.mass * (self.height - energy)).sqrt() / self.hbar)
    }

    /// K² = 2m(E − V₀)/ħ², negative under the barrier.
    pub fn interior_k2(&self, energy: f64) -> f64 {
        2.0 * self.mass * (energy - self.height) / (self.hbar * self.hbar)
    }

    /// Particle velocity ħk/m.
    pub fn velocity(&self, energy: f64) -> f64 {
        self.hbar * self.wavenumber(energy) / self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QScatter {
    pub reflection: Complex64,
    pub transmission: Complex64,
    pub energy: f64,
    pub k: f64,
    pub velocity: f64,
}

impl QScatter {
    pub fn r2(&self) -> f64 {
        self.reflection.norm_sqr()
    }

    pub fn t2(&self) -> f64 {
        self.transmission.norm_sqr()
    }
}

/// Maps (ψ, ψ′) at x to (ψ, ψ′) at x + span inside the barrier:
/// [[C, S], [−K²S, C]] with C = cos(K·span), S = sin(K·span)/K. Its
/// determinant is 1.
#[derive(Debug, Clone, Copy)]
struct TransferMatrix {
    c: Complex64,
    s: Complex64,
    k2: f64,
}

impl TransferMatrix {
    fn across(k2: f64, span: f64) -> Self {
        let (c, sc) = cosh_sinhc(Complex64::new(-k2 * span * span, 0.0));
        Self { c, s: span * sc, k2 }
    }

    fn apply(&self, psi: Complex64, dpsi: Complex64) -> (Complex64, Complex64) {
        (self.c * psi + self.s * dpsi, -self.k2 * self.s * psi + self.c * dpsi)
    }
}

fn check_energy(energy: f64) -> Result<f64> {
    require_positive("E", energy)
}

/// Scattering amplitudes at energy E > 0.
///
/// The outgoing wave T e^{ik(x−L)} is carried back to x = 0 by the inverse
/// transfer matrix, then split into incident and reflected parts.
pub fn scatter(spec: &QBarrierSpec, energy: f64) -> Result<QScatter> {
    check_energy(energy)?;
    let k = spec.wavenumber(energy);
    let ik = Complex64::new(0.0, k);
    let back = TransferMatrix::across(spec.interior_k2(energy), -spec.length);
    let (psi0, dpsi0) = back.apply(Complex64::new(1.0, 0.0), ik);
    let incident = 0.5 * (psi0 + dpsi0 / ik);
    let transmission = incident.inv();
    let reflection = psi0 * transmission - 1.0;
    Ok(QScatter { reflection, transmission, energy, k, velocity: spec.velocity(energy) })
}

/// Scattering state with unit incident amplitude, at any x.
pub fn wavefunction(spec: &QBarrierSpec, energy: f64, x: f64) -> Result<Complex64> {
    let s = scatter(spec, energy)?;
    Ok(wavefunction_from(spec, &s, x))
}

fn wavefunction_from(spec: &QBarrierSpec, s: &QScatter, x: f64) -> Complex64 {
    let ik = Complex64::new(0.0, s.k);
    if x < 0.0 {
        (ik * x).exp() + s.reflection * (-ik * x).exp()
    } else if x > spec.length {
        s.transmission * (ik * (x - spec.length)).exp()
    } else {
        let m = TransferMatrix::across(spec.interior_k2(s.energy), x - spec.length);
        s.transmission * m.apply(Complex64::new(1.0, 0.0), ik).0
    }
}

/// W = ∫₀ᴸ |ψ|² dx for unit incident amplitude.
pub fn barrier_probability(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    let s = scatter(spec, energy)?;
    let scale = spec.interior_k2(energy).abs().sqrt() * spec.length;
    let panels = 4 + (4.0 * scale).ceil().min(4096.0) as usize;
    Ok(Composite::new(16).integrate(0.0, spec.length, panels, |x| wavefunction_from(spec, &s, x).norm_sqr()))
}

/// Dwell time τ_d = W/j_i with incident flux j_i = ħk/m.
pub fn dwell_time_q(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    Ok(barrier_probability(spec, energy)? / spec.velocity(energy))
}

/// Returns (A(E), ħ·dA/dE) by central differences with ΔE = 1e-7·E.
fn energy_derivative(
    spec: &QBarrierSpec,
    energy: f64,
    amplitude: impl Fn(&QScatter) -> Complex64,
) -> Result<(Complex64, Complex64)> {
    let h = ENERGY_STEP * energy;
    let (e_up, e_down) = (energy + h, energy - h);
    let a = amplitude(&scatter(spec, energy)?);
    let up = amplitude(&scatter(spec, e_up)?);
    let down = amplitude(&scatter(spec, e_down)?);
    Ok((a, spec.hbar * (up - down) / (e_up - e_down)))
}

/// Transmission group delay ħ·d(arg T)/dE, evaluated as ħ·Im[T′/T].
pub fn group_delay_q(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    let (t, dt) = energy_derivative(spec, energy, |s| s.transmission)?;
    Ok((dt / t).im)
}

/// Reflection group delay ħ·d(arg R)/dE with R referenced at x = 0.
pub fn reflection_group_delay_q(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    let (r, dr) = energy_derivative(spec, energy, |s| s.reflection)?;
    Ok((dr / r).im)
}

/// τ_i = −Im(R)/(k·v), the delay from interference of incident and
/// reflected waves in front of the barrier.
pub fn self_interference_delay(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    let s = scatter(spec, energy)?;
    Ok(-s.reflection.im / (s.k * s.velocity))
}

/// Residual of |R|²τ_gr + |T|²τ_gt = τ_d + τ_i, relative to τ_g.
///
/// The weighted phase delays are formed as ħ·Im(conj(A)·A′), which stays
/// finite where |R| → 0 above the barrier.
pub fn sum_rule_q(spec: &QBarrierSpec, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    let (t, dt) = energy_derivative(spec, energy, |s| s.transmission)?;
    let (r, dr) = energy_derivative(spec, energy, |s| s.reflection)?;
    let weighted = (t.conj() * dt).im + (r.conj() * dr).im;
    let overall = dwell_time_q(spec, energy)? + self_interference_delay(spec, energy)?;
    Ok((weighted - overall) / (dt / t).im)
}

/// Packet-scale comparison: τ_g against τ_p = ħ/ΔE, and the matching
/// length ratio δx/Δx = v·τ_g/(v·τ_p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketRatio {
    pub tau_ratio: f64,
    pub length_ratio: f64,
    /// ΔE/V₀.
    pub energy_ratio: f64,
    /// Opaque-barrier value ΔE/√(E(V₀ − E)), which is 2ΔE/V₀ at E = V₀/2.
    pub opaque_estimate: f64,
}

pub fn packet_ratio(spec: &QBarrierSpec, energy: f64, delta_e: f64) -> Result<PacketRatio> {
    require_positive("delta_E", delta_e)?;
    if delta_e >= spec.height {
        return Err(invalid("delta_E", format!("{delta_e} is not small against V0 = {}", spec.height)));
    }
    let tau_g = group_delay_q(spec, energy)?;
    let tau_p = spec.hbar / delta_e;
    let v = spec.velocity(energy);
    Ok(PacketRatio {
        tau_ratio: tau_g / tau_p,
        length_ratio: (v * tau_g) / (v * tau_p),
        energy_ratio: delta_e / spec.height,
        opaque_estimate: delta_e / (energy * (spec.height - energy)).abs().sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QDelayReport {
    pub tau_d: f64,
    pub tau_i: f64,
    pub tau_g: f64,
    /// τ_d + τ_i.
    pub tau_d_tilde: f64,
    pub ratio_check: Option<PacketRatio>,
}

impl QDelayReport {
    pub fn compute(spec: &QBarrierSpec, energy: f64, delta_e: Option<f64>) -> Result<Self> {
        let tau_d = dwell_time_q(spec, energy)?;
        let tau_i = self_interference_delay(spec, energy)?;
        let ratio_check = delta_e.map(|d| packet_ratio(spec, energy, d)).transpose()?;
        Ok(Self { tau_d, tau_i, tau_g: group_delay_q(spec, energy)?, tau_d_tilde: tau_d + tau_i, ratio_check })
    }

    /// (τ_g − τ_d − τ_i)/τ_g.
    pub fn decomposition_residual(&self) -> f64 {
        (self.tau_g - self.tau_d_tilde) / self.tau_g
    }
}

/// Amplitudes and barrier probability from direct RK4 integration of
/// ψ″ = (2m/ħ²)(V₀ − E)ψ, independent of the transfer-matrix path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarySolution {
    pub transmission: Complex64,
    pub reflection: Complex64,
    pub probability: f64,
    pub dwell_time: f64,
}

/// Integrates from x = L (where ψ = 1, ψ′ = ik) back to x = 0 in `steps`
/// RK4 steps, accumulating ∫|ψ|² by Simpson's rule on the same nodes, then
/// rescales to unit incident amplitude.
pub fn integrate_stationary(spec: &QBarrierSpec, energy: f64, steps: usize) -> Result<StationarySolution> {
    check_energy(energy)?;
    if steps < 2 || steps % 2 != 0 {
        return Err(invalid("steps", format!("must be even and ≥ 2, got {steps}")));
    }
    let k = spec.wavenumber(energy);
    let ik = Complex64::new(0.0, k);
    let w = -spec.interior_k2(energy);
    let h = -spec.length / steps as f64;
    let rhs = |p: Complex64, d: Complex64| (d, w * p);

    let (mut psi, mut dpsi) = (Complex64::new(1.0, 0.0), ik);
    let mut simpson = psi.norm_sqr();
    for n in 1..=steps {
        let (k1p, k1d) = rhs(psi, dpsi);
        let (k2p, k2d) = rhs(psi + 0.5 * h * k1p, dpsi + 0.5 * h * k1d);
        let (k3p, k3d) = rhs(psi + 0.5 * h * k2p, dpsi + 0.5 * h * k2d);
        let (k4p, k4d) = rhs(psi + h * k3p, dpsi + h * k3d);
        psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dpsi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        let weight = if n == steps {
            1.0
        } else if n % 2 == 1 {
            4.0
        } else {
            2.0
        };
        simpson += weight * psi.norm_sqr();
    }
    let incident = 0.5 * (psi + dpsi / ik);
    let reflected = 0.5 * (psi - dpsi / ik);
    let probability = simpson * h.abs() / 3.0 / incident.norm_sqr();
    Ok(StationarySolution {
        transmission: incident.inv(),
        reflection: reflected / incident,
        probability,
        dwell_time: probability / spec.velocity(energy),
    })
}
