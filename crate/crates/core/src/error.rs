use thiserror::Error;

/// Malformed textual input (times, signals, netlists, flags).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error: {message}")]
pub struct ParseError {
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        ParseError {
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SignalError {
    #[error("time {t} lies outside the signal domain {domain}")]
    OutOfDomain { t: String, domain: String },
    #[error("interval {inner} is not contained in {outer}")]
    NotSubinterval { inner: String, outer: String },
    #[error("invalid signal: {0}")]
    Invalid(String),
    #[error("covering error: {0}")]
    Covering(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("netlist `{name}` is malformed: {}", .violations.join("; "))]
    Malformed { name: String, violations: Vec<String> },
    #[error("zero-delay cycle through {}", .cycle.join(" -> "))]
    ZeroDelayCycle { cycle: Vec<String> },
    #[error("unknown module kind `{0}`")]
    UnknownKind(String),
    #[error("bad parameter for `{id}`: {message}")]
    BadParam { id: String, message: String },
    #[error("missing signal for port `{0}`")]
    MissingSignal(String),
    #[error("invalid initial condition for `{id}`: {message}")]
    BadInit { id: String, message: String },
    #[error("event budget of {budget} exhausted; most active port `{hot_port}`")]
    BudgetExceeded { budget: usize, hot_port: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("interface mismatch: {0}")]
    Interface(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}
