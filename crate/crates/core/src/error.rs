use std::fmt;

/// Error type shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// Configuration file or parameter problem.
    Config(String),
    /// Physical address outside device capacity.
    Capacity(String),
    /// Malformed or misaligned request.
    Request(String),
    /// A DRAM command that is illegal in the current bank state regardless
    /// of timing (e.g. RD to an Idle bank).
    Protocol(String),
    /// Trace input problem (parse error, non-monotone arrivals).
    Trace(String),
    /// Workload / parallelism plan problem (indivisible shard, bad batch).
    Workload(String),
    /// I/O error wrapper.
    Io(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(m) => write!(f, "config error: {m}"),
            SimError::Capacity(m) => write!(f, "capacity error: {m}"),
            SimError::Request(m) => write!(f, "request error: {m}"),
            SimError::Protocol(m) => write!(f, "protocol error: {m}"),
            SimError::Trace(m) => write!(f, "trace error: {m}"),
            SimError::Workload(m) => write!(f, "workload error: {m}"),
            SimError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
