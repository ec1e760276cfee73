//! Steady-state coupled-mode analytics of a uniform bandgap barrier.
//!
//! Forward and backward envelopes E_F, E_B couple through κ inside
//! 0 ≤ z ≤ L. With detuning Ω from the Bragg frequency and δ = Ω/v the
//! propagation parameter is γ = √(κ² − δ²), real inside the stop band and
//! imaginary outside it.
//!
//! All closed forms are evaluated through cosh(γL) and sinh(γL)/(γL), which
//! are entire functions of γ². The square-root branch therefore never enters
//! an observable and the band edge γ = 0 needs no special casing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, require_positive, Result};
use crate::quad::Composite;
use crate::special::{cosh_sinhc, sinhc2_excess};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier used by [`BarrierSpec::normalized`]: ω_B·τ₀ = 100.
pub const NORMALIZED_BRAGG_FREQUENCY: f64 = 100.0;

/// Largest κL accepted. Beyond this cosh(2κL) overflows a double.
pub const MAX_KAPPA_LENGTH: f64 = 300.0;

/// Relative size of the imaginary part tolerated when a real observable is
/// evaluated in complex arithmetic.
const REAL_RESIDUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    kappa: f64,
    length: f64,
    n0: f64,
    n1: f64,
    omega_bragg: f64,
    area: f64,
    light_speed: f64,
}

impl BarrierSpec {
    /// Normalized barrier: L = 1, v = c = 1, n₀ = 1, ω_B = 100. Times come
    /// out in units of τ₀ = L/v and detunings in units of v/L.
    pub fn normalized(kappa_l: f64) -> Result<Self> {
        let kappa = require_finite("kappa_L", kappa_l)?;
        Self::build(kappa, 1.0, 1.0, NORMALIZED_BRAGG_FREQUENCY, 1.0, 1.0)
    }

    /// Physical barrier in SI units; κ = n₁·n₀·ω_B/(2c).
    pub fn from_physical(n0: f64, n1: f64, omega_bragg: f64, length: f64, area: f64) -> Result<Self> {
        require_finite("n1", n1)?;
        require_positive("omega_B", omega_bragg)?;
        let kappa = n1 * n0 * omega_bragg / (2.0 * SPEED_OF_LIGHT);
        let spec = Self::build(kappa, length, n0, omega_bragg, area, SPEED_OF_LIGHT)?;
        if (spec.n1 - n1).abs() > 1e-12 * n1.abs().max(1e-300) {
            return Err(invalid("n1", "index perturbation does not survive the κ round trip"));
        }
        Ok(spec)
    }

    /// Same medium, different length (κ held fixed).
    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::build(self.kappa, length, self.n0, self.omega_bragg, self.area, self.light_speed)
    }

    /// Same medium, different coupling (n₁ follows κ).
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::build(kappa, self.length, self.n0, self.omega_bragg, self.area, self.light_speed)
    }

    fn build(kappa: f64, length: f64, n0: f64, omega_bragg: f64, area: f64, light_speed: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(invalid("kappa", format!("must be finite and ≥ 0, got {kappa}")));
        }
        require_positive("length_L", length)?;
        require_positive("omega_B", omega_bragg)?;
        require_positive("area_A", area)?;
        require_positive("c", light_speed)?;
        if !(n0.is_finite() && n0 >= 1.0) {
            return Err(invalid("n0", format!("must be ≥ 1, got {n0}")));
        }
        if kappa * length > MAX_KAPPA_LENGTH {
            return Err(invalid("kappa", format!("κL = {} exceeds {MAX_KAPPA_LENGTH}", kappa * length)));
        }
        let n1 = 2.0 * kappa * light_speed / (n0 * omega_bragg);
        if n1 >= n0 {
            return Err(invalid("n1", format!("derived n1 = {n1} must stay below n0 = {n0}")));
        }
        Ok(Self { kappa, length, n0, n1, omega_bragg, area, light_speed })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn omega_bragg(&self) -> f64 {
        self.omega_bragg
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn kappa_length(&self) -> f64 {
        self.kappa * self.length
    }

    /// Envelope speed v = c/n₀.
    pub fn group_speed(&self) -> f64 {
        self.light_speed / self.n0
    }

    /// τ₀ = L/v, the barrier-free transit time.
    pub fn transit_time(&self) -> f64 {
        self.length / self.group_speed()
    }

    /// Δβ = n₀Ω/c.
    pub fn delta_beta(&self, det: Detuning) -> f64 {
        self.n0 * det.omega() / self.light_speed
    }

    /// Relative mismatch between κ and n₁·n₀·ω_B/(2c).
    pub fn kappa_consistency(&self) -> f64 {
        let derived = self.n1 * self.n0 * self.omega_bragg / (2.0 * self.light_speed);
        (derived - self.kappa).abs() / self.kappa.max(f64::MIN_POSITIVE)
    }
}

/// Offset Ω = ω − ω_B of the carrier from the Bragg frequency.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Detuning(f64);

impl Detuning {
    pub const MIDGAP: Detuning = Detuning(0.0);

    pub fn new(omega_offset: f64) -> Result<Self> {
        require_finite("omega_offset", omega_offset).map(Self)
    }

    /// Detuning given in units of v/L, the axis used for spectra.
    pub fn from_normalized(spec: &BarrierSpec, omega_l_over_v: f64) -> Result<Self> {
        Self::new(omega_l_over_v * spec.group_speed() / spec.length())
    }

    pub fn omega(self) -> f64 {
        self.0
    }

    pub fn normalized(self, spec: &BarrierSpec) -> f64 {
        self.0 * spec.length() / spec.group_speed()
    }

    fn shifted(self, h: f64) -> Self {
        Self(self.0 + h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterCoeffs {
    pub transmission: Complex64,
    pub reflection: Complex64,
    /// Principal root of κ² − δ².
    pub gamma: Complex64,
    /// g = γ cosh γL − iδ sinh γL (vanishes with γ at the band edge).
    pub g: Complex64,
}

impl ScatterCoeffs {
    pub fn t2(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    pub fn r2(&self) -> f64 {
        self.reflection.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdQuality {
    Resolved,
    /// Halving the step would move the result by more than the tolerance.
    StepTooCoarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDelay {
    pub tau_g: f64,
    pub step: f64,
    /// Richardson estimate of the truncation error, relative to τ_g.
    pub estimated_error: f64,
    pub quality: FdQuality,
}

fn gamma_sq(spec: &BarrierSpec, det: Detuning) -> f64 {
    let delta = det.omega() / spec.group_speed();
    spec.kappa * spec.kappa - delta * delta
}

pub fn propagation_gamma(spec: &BarrierSpec, det: Detuning) -> Complex64 {
    Complex64::new(gamma_sq(spec, det), 0.0).sqrt()
}

/// D = cosh γL − iδL·sinh(γL)/(γL), so that T = 1/D.
fn denominator(spec: &BarrierSpec, det: Detuning) -> (Complex64, Complex64) {
    let l = spec.length;
    let delta_l = det.omega() / spec.group_speed() * l;
    let (ch, sc) = cosh_sinhc(Complex64::new(gamma_sq(spec, det) * l * l, 0.0));
    (ch - Complex64::i() * delta_l * sc, sc)
}

pub fn scatter(spec: &BarrierSpec, det: Detuning) -> ScatterCoeffs {
    let (d, sc) = denominator(spec, det);
    let transmission = d.inv();
    let reflection = Complex64::i() * spec.kappa * spec.length * sc * transmission;
    let gamma = propagation_gamma(spec, det);
    ScatterCoeffs { transmission, reflection, gamma, g: gamma * d }
}

/// Complex transmission of the envelope across [0, L]. Includes the
/// propagation phase, so κ = 0 gives e^{iΩL/v}.
pub fn transmission(spec: &BarrierSpec, det: Detuning) -> Complex64 {
    denominator(spec, det).0.inv()
}

/// Complex reflection referenced to the input plane z = 0.
pub fn reflection(spec: &BarrierSpec, det: Detuning) -> Complex64 {
    scatter(spec, det).reflection
}

/// Envelopes (E_F, E_B) at position z for incident amplitude `e0`, with
/// E_B(L) = 0.
pub fn steady_fields(spec: &BarrierSpec, det: Detuning, z: f64, e0: Complex64) -> Result<(Complex64, Complex64)> {
    if !(0.0..=spec.length).contains(&z) {
        return Err(invalid("z", format!("{z} lies outside [0, {}]", spec.length)));
    }
    let (forward, backward) = unit_fields(spec, det, z);
    Ok((e0 * forward, e0 * backward))
}

fn unit_fields(spec: &BarrierSpec, det: Detuning, z: f64) -> (Complex64, Complex64) {
    let (d, _) = denominator(spec, det);
    let y = z - spec.length;
    let delta = det.omega() / spec.group_speed();
    let (ch, sc) = cosh_sinhc(Complex64::new(gamma_sq(spec, det) * y * y, 0.0));
    let i = Complex64::i();
    ((ch + i * delta * y * sc) / d, -i * spec.kappa * y * sc / d)
}

fn real_part(value: Complex64) -> f64 {
    debug_assert!(
        value.im.abs() <= REAL_RESIDUE * value.re.abs().max(f64::MIN_POSITIVE),
        "imaginary residue {} on real observable {}",
        value.im,
        value.re
    );
    value.re
}

/// U/U₀: stored energy relative to an empty barrier of the same length at
/// the same incident power.
///
/// Written as |T|²·[sinh(2γL)/(2γL) + (δL)²·(sinh(2γL)/(2γL) − 1)/(γL)²],
/// which is the usual bracket
/// [(κ/γ)²·tanh(γL)/(γL) − (δ/γ)²·sech²(γL)] / [1 + (δ/γ)²·tanh²(γL)]
/// multiplied through by cosh²(γL) and free of 0/0 at γ = 0.
pub fn stored_energy_ratio(spec: &BarrierSpec, det: Detuning) -> f64 {
    let l = spec.length;
    let x2 = Complex64::new(gamma_sq(spec, det) * l * l, 0.0);
    let delta_l = det.omega() / spec.group_speed() * l;
    let (_, sinhc_2x) = cosh_sinhc(4.0 * x2);
    let bracket = sinhc_2x + delta_l * delta_l * sinhc2_excess(x2);
    transmission(spec, det).norm_sqr() * real_part(bracket)
}

/// U/U₀ by Gauss–Legendre quadrature of |E_F|² + |E_B|² over the steady
/// fields, an independent route to [`stored_energy_ratio`].
pub fn stored_energy_ratio_quadrature(spec: &BarrierSpec, det: Detuning) -> f64 {
    let scale = (spec.kappa + (det.omega() / spec.group_speed()).abs()) * spec.length;
    let panels = 8 + (2.0 * scale).ceil().min(4096.0) as usize;
    let integral = Composite::new(16).integrate(0.0, spec.length, panels, |z| {
        let (f, b) = unit_fields(spec, det, z);
        f.norm_sqr() + b.norm_sqr()
    });
    integral / spec.length
}

/// Stored energy U for incident power P_i, in units where U₀ = P_i·τ₀.
pub fn stored_energy(spec: &BarrierSpec, det: Detuning, incident_power: f64) -> Result<f64> {
    require_positive("P_i", incident_power)?;
    Ok(incident_power * spec.transit_time() * stored_energy_ratio(spec, det))
}

/// Closed-form group delay τ_g = τ₀·U/U₀.
pub fn group_delay_closed(spec: &BarrierSpec, det: Detuning) -> f64 {
    spec.transit_time() * stored_energy_ratio(spec, det)
}

/// Default detuning step for [`group_delay_fd`]: 1e-6·max(κv, v/L).
pub fn default_fd_step(spec: &BarrierSpec) -> f64 {
    let v = spec.group_speed();
    1e-6 * (spec.kappa * v).max(v / spec.length)
}

fn central_phase_derivative(spec: &BarrierSpec, det: Detuning, h: f64) -> f64 {
    let (up, down) = (det.shifted(h), det.shifted(-h));
    // Divide by the span actually represented, not by 2h.
    let span = up.omega() - down.omega();
    let dt = (transmission(spec, up) - transmission(spec, down)) / span;
    (dt / transmission(spec, det)).im
}

/// Group delay as Im[(dT/dΩ)/T] by central differences on the complex
/// transmission, so no phase unwrapping is involved.
pub fn group_delay_fd(spec: &BarrierSpec, det: Detuning, step: f64) -> Result<PhaseDelay> {
    require_positive("step", step)?;
    let tau_g = central_phase_derivative(spec, det, step);
    let coarse = central_phase_derivative(spec, det, 2.0 * step);
    // The leading error term is O(h²), so the 2h estimate carries four times it.
    let estimated_error = (coarse - tau_g).abs() / 3.0 / tau_g.abs().max(f64::MIN_POSITIVE);
    let quality = if estimated_error > 1e-6 { FdQuality::StepTooCoarse } else { FdQuality::Resolved };
    Ok(PhaseDelay { tau_g, step, estimated_error, quality })
}

/// τ_g at Ω = 0: τ₀·tanh(κL)/(κL).
pub fn midgap_delay(spec: &BarrierSpec) -> f64 {
    let x = spec.kappa_length();
    let ratio = if x < 1e-4 { 1.0 - x * x / 3.0 } else { x.tanh() / x };
    spec.transit_time() * ratio
}

/// Transmission resonances Ω_m = v·√(κ² + (mπ/L)²), m = 1..=m_max.
pub fn resonance_detunings(spec: &BarrierSpec, m_max: usize) -> Result<Vec<Detuning>> {
    if m_max == 0 {
        return Err(invalid("m_max", "must be at least 1"));
    }
    let v = spec.group_speed();
    Ok((1..=m_max)
        .map(|m| {
            let k_m = m as f64 * std::f64::consts::PI / spec.length;
            Detuning(v * spec.kappa.hypot(k_m))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_examples() {
        let spec = BarrierSpec::normalized(4.0).unwrap();
        assert_eq!(propagation_gamma(&spec, Detuning::MIDGAP), Complex64::new(4.0, 0.0));
        assert_eq!(propagation_gamma(&spec, Detuning::new(4.0).unwrap()).norm(), 0.0);
        let g = propagation_gamma(&spec, Detuning::new(4.0 * 2f64.sqrt()).unwrap());
        assert!((g - Complex64::new(0.0, 4.0)).norm() < 1e-14);
    }

    #[test]
    fn midgap_reflection_and_transmission() {
        let spec = BarrierSpec::normalized(4.0).unwrap();
        let s = scatter(&spec, Detuning::MIDGAP);
        assert!(rel(s.transmission.re, 1.0 / 4f64.cosh()) < 1e-14);
        assert!(s.transmission.im.abs() < 1e-16);
        assert!(rel(s.r2(), 1.0 - 1.0 / 4f64.cosh().powi(2)) < 1e-14);
        let (_, eb0) = steady_fields(&spec, Detuning::MIDGAP, 0.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(rel(eb0.norm(), 4f64.tanh()) < 1e-14);
        assert!((eb0 - s.reflection).norm() < 1e-15);
    }

    #[test]
    fn field_boundaries() {
        let spec = BarrierSpec::normalized(3.0).unwrap();
        for &omega in &[0.0, 2.9, 3.0, 5.0] {
            let det = Detuning::new(omega).unwrap();
            let (ef, eb) = steady_fields(&spec, det, 1.0, Complex64::new(1.0, 0.0)).unwrap();
            assert_eq!(eb, Complex64::new(0.0, 0.0));
            assert!((ef - transmission(&spec, det)).norm() < 1e-15);
            let (ef0, _) = steady_fields(&spec, det, 0.0, Complex64::new(1.0, 0.0)).unwrap();
            assert!((ef0 - 1.0).norm() < 1e-13);
        }
        assert!(steady_fields(&spec, Detuning::MIDGAP, 1.5, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn free_line_is_a_pure_delay() {
        let spec = BarrierSpec::normalized(0.0).unwrap();
        for &omega in &[-7.0, -0.3, 0.0, 1.1, 20.0] {
            let det = Detuning::new(omega).unwrap();
            let t = transmission(&spec, det);
            assert!((t - Complex64::from_polar(1.0, omega)).norm() < 1e-14);
            assert_eq!(reflection(&spec, det).norm(), 0.0);
            assert!((stored_energy_ratio(&spec, det) - 1.0).abs() < 1e-14);
            let fd = group_delay_fd(&spec, det, default_fd_step(&spec)).unwrap();
            assert!((fd.tau_g - 1.0).abs() < 1e-10);
            let (ef, eb) = steady_fields(&spec, det, 0.37, Complex64::new(0.0, 2.0)).unwrap();
            assert!((ef.norm() - 2.0).abs() < 1e-14 && eb.norm() == 0.0);
        }
    }

    #[test]
    fn band_edge_is_regular() {
        let spec = BarrierSpec::normalized(4.0).unwrap();
        let edge = group_delay_closed(&spec, Detuning::new(4.0).unwrap());
        for &eps in &[1e-9, -1e-9, 1e-6, -1e-6] {
            let near = group_delay_closed(&spec, Detuning::new(4.0 + eps).unwrap());
            assert!(rel(near, edge) < 1e-5, "{eps}: {near} vs {edge}");
        }
        // At γ = 0 the denominator is 1 − iδL with δL = κL.
        let t = transmission(&spec, Detuning::new(4.0).unwrap());
        assert!((t - Complex64::new(1.0, -4.0).inv()).norm() < 1e-15);
    }

    #[test]
    fn resonances() {
        let spec = BarrierSpec::normalized(4.0).unwrap();
        let om = resonance_detunings(&spec, 3).unwrap();
        assert!((om[0].omega() - (16.0 + std::f64::consts::PI.powi(2)).sqrt()).abs() < 1e-14);
        for d in &om {
            assert!((transmission(&spec, *d).norm() - 1.0).abs() < 1e-9);
        }
        let free = BarrierSpec::normalized(0.0).unwrap();
        let om = resonance_detunings(&free, 1).unwrap();
        assert!((om[0].omega() - std::f64::consts::PI).abs() < 1e-15);
        assert!(resonance_detunings(&spec, 0).is_err());
    }

    #[test]
    fn midgap_limit_values() {
        assert_eq!(midgap_delay(&BarrierSpec::normalized(0.0).unwrap()), 1.0);
        let spec = BarrierSpec::normalized(4.0).unwrap();
        assert!((midgap_delay(&spec) - 0.249_832_324_934_766_76).abs() < 1e-15);
        // Long barrier at fixed κ: τ_g → 1/(κv).
        let long = BarrierSpec::normalized(2.0).unwrap().with_length(20.0).unwrap();
        assert!(rel(midgap_delay(&long), 0.5) < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(BarrierSpec::normalized(-1.0).is_err());
        assert!(BarrierSpec::normalized(f64::NAN).is_err());
        assert!(BarrierSpec::normalized(400.0).is_err());
        assert!(BarrierSpec::normalized(4.0).unwrap().with_length(0.0).is_err());
        assert!(Detuning::new(f64::INFINITY).is_err());
        assert!(stored_energy(&BarrierSpec::normalized(1.0).unwrap(), Detuning::MIDGAP, 0.0).is_err());
    }

    #[test]
    fn physical_constructor_is_consistent() {
        // Fiber grating: n0 = 1.45, n1 = 1e-4, λ_B = 1550 nm, L = 1 cm.
        let omega_b = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / 1.55e-6;
        let spec = BarrierSpec::from_physical(1.45, 1e-4, omega_b, 0.01, 1e-10).unwrap();
        assert!(spec.kappa_consistency() < 1e-14);
        assert!(rel(spec.n1(), 1e-4) < 1e-12);
        assert!(rel(spec.group_speed(), SPEED_OF_LIGHT / 1.45) < 1e-15);
        let det = Detuning::new(1e9).unwrap();
        assert!(rel(spec.delta_beta(det), 1.45 * 1e9 / SPEED_OF_LIGHT) < 1e-15);
        assert!(BarrierSpec::from_physical(1.45, 1.5, omega_b, 0.01, 1e-10).is_err());
        assert!(BarrierSpec::from_physical(0.5, 1e-4, omega_b, 0.01, 1e-10).is_err());
    }
}
