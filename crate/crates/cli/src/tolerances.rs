//! Thresholds used by scenario checks and by `verify`. Every one that a run
//! consults is copied into its manifest.

/// Phase-derivative τ_g against the closed form, and against U/P_i.
pub const GROUP_DELAY_IDENTITY: f64 = 1e-6;
/// Closed-form stored energy against quadrature of the steady fields.
pub const STORED_ENERGY_ORACLE: f64 = 1e-8;
/// Midgap τ_g against tanh(κL)/(κL).
pub const MIDGAP_CLOSED_FORM: f64 = 1e-10;
/// Resonant τ_g against τ₀(1 + (κL/mπ)²).
pub const RESONANCE_DELAY: f64 = 1e-6;
pub const RESONANCE_UNIT_TRANSMISSION: f64 = 1e-9;

pub const SUM_RULE: f64 = 1e-6;
pub const RECIPROCAL_RULE: f64 = 1e-12;

/// Relative distance of the 1/e ring-down time from τ_g.
pub const LIFETIME_DEVIATION: f64 = 0.10;
/// Largest unmasked |P_i − P_r − P_t − dU/dt| over peak P_i.
pub const ENERGY_BALANCE: f64 = 1e-3;
/// Balance residual ratio after doubling n_z.
pub const REFINEMENT_RATIO: f64 = 0.5;
pub const FREE_LINE_BALANCE: f64 = 1e-6;
/// |E_F(L)| and |E_B(0)| after 20 transit times of step drive.
pub const STEADY_FIELDS: f64 = 1e-4;
pub const STEADY_STORED_ENERGY: f64 = 1e-3;

pub const PEAK_DELAY: f64 = 0.02;
pub const PULSE_TRANSMITTANCE: f64 = 0.01;
pub const SHAPE_DEVIATION: f64 = 1e-3;
/// Front arrival error, in time steps.
pub const FRONT_TRANSIT_STEPS: f64 = 1.0;
/// Front-window power over the transmitted peak.
pub const FRONT_WINDOW_RATIO: f64 = 1e-2;

pub const FLUX_CONSERVATION: f64 = 1e-12;
pub const DECOMPOSITION: f64 = 1e-6;
/// Transfer-matrix dwell time against RK4 integration.
pub const DWELL_ORACLE: f64 = 1e-8;
/// Change of τ_g per doubling of the length past the saturation point.
pub const HARTMAN_SATURATION: f64 = 0.01;
pub const BARRIER_TOP_CONTINUITY: f64 = 1e-6;
