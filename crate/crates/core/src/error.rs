use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvlabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error(
        "steady state not reached before turn-off at t = {t_off}: max |dU/dt| = {max_rate:.3e} \
         over the last transit time (threshold {threshold:.1e})"
    )]
    NotSteady { t_off: f64, max_rate: f64, threshold: f64 },

    #[error("decay trace never reaches 1/e of its turn-off energy (lowest ratio {lowest:.4}); run longer")]
    NoOneOverECrossing { lowest: f64 },
}

pub type Result<T> = std::result::Result<T, EvlabError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> EvlabError {
    EvlabError::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn require_finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(name, format!("must be finite, got {x}")))
    }
}

pub(crate) fn require_positive(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}
