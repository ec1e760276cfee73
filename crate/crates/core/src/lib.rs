//! Delay times of tunneling barriers.
//!
//! Two barrier models share one vocabulary of delays:
//!
//! * [`cmt`]: a uniform photonic bandgap grating in the coupled-mode
//!   picture, with closed-form fields, scattering amplitudes, stored energy
//!   and group delay.
//! * [`quantum`]: the rectangular potential barrier, with stationary
//!   scattering, dwell time, self-interference delay and phase delays.
//!
//! [`delay`] holds the delay algebra (dwell time, flux delays, sum rules,
//! lifetime extraction) and [`td`] integrates the coupled-mode equations in
//! time to watch energy enter and leave the barrier.

pub mod cmt;
pub mod delay;
pub mod error;
pub mod quantum;
pub mod td;

mod quad;
mod special;

pub use cmt::{BarrierSpec, Detuning, FdQuality, PhaseDelay, ScatterCoeffs};
pub use delay::{DecayShape, DecayTrace, DelayReport, FluxDelay, Lifetime, SumRuleResiduals};
pub use error::{EvlabError, Result};
pub use quantum::{PacketRatio, QBarrierSpec, QDelayReport, QScatter, StationarySolution};
pub use td::{
    BalanceReport, FieldState, Grid, History, PulseReport, PulseRun, PulseWarning, Sample, Simulation, Snapshot,
    SourceShape, SourceSpec,
};
