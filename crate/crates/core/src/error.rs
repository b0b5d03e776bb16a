//! Shared solver error type.

use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::NumericsError;
use crate::sdp::SdpError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("node budget exceeded: {pushed} nodes pushed, cap {cap}")]
    NodeBudgetExceeded { pushed: u64, cap: u64 },
    #[error("search space too large: {candidates:e} candidates exceed the {cap:e} guard")]
    SearchSpaceExceeded { candidates: f64, cap: f64 },
}
