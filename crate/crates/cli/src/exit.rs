//! Exit-code taxonomy and the mapping from library errors onto it.

use std::fmt;

use specnet::charges::ChargeError;
use specnet::groupoid::ChartError;
use specnet::network::NetworkError;
use specnet::nonabelianize::NonabError;
use specnet::qdiff::QdError;
use specnet::trajectory::TraceError;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Parse = 1,
    Construction = 2,
    Numeric = 3,
    Io = 4,
    NotExact = 5,
    Flatness = 6,
    VerifyFailed = 7,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        CliError { exit, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<QdError> for CliError {
    fn from(e: QdError) -> Self {
        let exit = match e {
            QdError::EmptyPolynomial
            | QdError::ZeroLeadingCoefficient(_)
            | QdError::NonSimpleZero(_)
            | QdError::CommonFactor(_)
            | QdError::NotGMN(_)
            | QdError::NotComplete
            | QdError::DegenerateZero(_) => Exit::Construction,
            _ => Exit::Numeric,
        };
        CliError::new(exit, e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Qd(q) => q.into(),
            TraceError::InvalidParams(_) => CliError::new(Exit::Parse, e.to_string()),
            _ => CliError::new(Exit::Numeric, e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Qd(q) => q.into(),
            NetworkError::Trace(t) => t.into(),
            NetworkError::ZeroAtInfinity => CliError::new(Exit::Construction, e.to_string()),
            _ => CliError::new(Exit::Numeric, e.to_string()),
        }
    }
}

impl From<ChargeError> for CliError {
    fn from(e: ChargeError) -> Self {
        match e {
            ChargeError::Qd(q) => q.into(),
            ChargeError::Trace(t) => t.into(),
            ChargeError::Network(n) => n.into(),
            _ => CliError::new(Exit::Numeric, e.to_string()),
        }
    }
}

impl From<ChartError> for CliError {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::Qd(q) => q.into(),
            ChartError::Trace(t) => t.into(),
            ChartError::Network(n) => n.into(),
            _ => CliError::new(Exit::Construction, e.to_string()),
        }
    }
}

impl From<NonabError> for CliError {
    fn from(e: NonabError) -> Self {
        match e {
            NonabError::Network(n) => n.into(),
            NonabError::Chart(c) => c.into(),
            NonabError::MissingGenerator { .. }
            | NonabError::ZeroValue { .. }
            | NonabError::UnexpectedSwapPattern { .. }
            | NonabError::DeterminantMismatch { .. } => CliError::new(Exit::Flatness, e.to_string()),
            NonabError::UnknownArc(_) | NonabError::EmptyPath | NonabError::PathNotComposable { .. } => {
                CliError::new(Exit::Parse, e.to_string())
            }
            _ => CliError::new(Exit::Numeric, e.to_string()),
        }
    }
}
