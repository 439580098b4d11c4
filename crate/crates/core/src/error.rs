use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot parse manifold '{input}': {reason}")]
    Parse { input: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("shooting did not converge (best end-point gap {gap:.3e})")]
    ShootingFailed { gap: f64 },
    #[error("riccati solution left the admissible range at t = {t}")]
    RiccatiBlowUp { t: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, Error>;
