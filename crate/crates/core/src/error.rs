//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or schema check rejected a value. The message names
    /// exactly one offending key.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Subsystem indices are 1 or 2.
    #[error("invalid subsystem index {0} (expected 1 or 2)")]
    InvalidSubsystem(usize),

    /// A drive set must contain one probe, one coupling and one trigger.
    #[error("invalid drive set: {0}")]
    InvalidDrives(String),

    /// A composite denominator of the susceptibility crossed the
    /// singularity guard. Only reachable when some decay rates are zero.
    #[error(
        "singular point in `{denominator}` at (dp, dt, dc) = \
         ({dp_mhz}, {dt_mhz}, {dc_mhz}) MHz"
    )]
    SingularPoint {
        denominator: &'static str,
        dp_mhz: f64,
        dt_mhz: f64,
        dc_mhz: f64,
    },

    /// Error raised while evaluating one grid point of a scan.
    #[error("scan point at axis value {axis_mhz} MHz: {source}")]
    ScanPoint {
        axis_mhz: f64,
        #[source]
        source: Box<Error>,
    },

    /// Susceptibility extraction needs a finite drive on the field.
    #[error("cannot convert coherence to susceptibility: {0} field has zero Rabi frequency")]
    ZeroField(&'static str),

    #[error("perturbing intensity must be positive (got {0} W/cm^2)")]
    ZeroIntensity(f64),

    /// The Liouvillian kernel is more than one-dimensional, so the steady
    /// state is not unique (typically a ground-mixing rate of zero).
    #[error("ambiguous steady state: Liouvillian kernel dimension {kernel_dim} > 1")]
    AmbiguousSteadyState { kernel_dim: usize },

    /// A solve produced a state violating density-matrix invariants.
    #[error("steady-state solve failed: {0}")]
    SteadyStateSolve(String),

    /// Feature extraction preconditions.
    #[error("no transparency dip found in scanned table")]
    NoDipFound,

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("fit rejected: {0}")]
    InvalidFit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors of numerical origin (as opposed to i/o or schema).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularPoint { .. }
            | Error::ScanPoint { .. }
            | Error::AmbiguousSteadyState { .. }
            | Error::SteadyStateSolve(_)
            | Error::NoDipFound
            | Error::ZeroField(_)
            | Error::ZeroIntensity(_)
            | Error::InsufficientSamples { .. } => true,
            Error::InvalidParameter { .. }
            | Error::InvalidSubsystem(_)
            | Error::InvalidDrives(_)
            | Error::InvalidFit(_)
            | Error::Io(_)
            | Error::Schema(_) => false,
        }
    }
}
