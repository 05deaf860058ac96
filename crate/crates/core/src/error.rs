use alloc::string::String;

/// Errors raised by the solver, the false-alarm machinery and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model or solver parameter is outside its admissible domain.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A function was evaluated outside its domain.
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    /// A cumulative integral came out non-finite.
    #[error("quadrature failed near y = {at}; achieved estimate {estimate}")]
    Quadrature { at: f64, estimate: f64 },

    /// A structural property that the theory guarantees was violated beyond
    /// tolerance (sign conditions at the threshold bracket, bounds, ...).
    #[error("solver inconsistency: {0}")]
    Inconsistent(String),

    /// The caller asked for an iterate that was never computed.
    #[error("need {needed} iterates but only {available} are available")]
    InsufficientIterates { needed: usize, available: usize },

    /// A bracketing search found no sign change.
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;
