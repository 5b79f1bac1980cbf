use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed arguments: length mismatches, indices out of range, bad sizes.
    #[error("invalid input: {0}")]
    Input(String),

    /// A key whose fields violate the key-circuit invariants.
    #[error("invalid key: {0}")]
    Key(String),

    /// A request exceeding the simulator's size caps.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A state that should be a computational basis state is not.
    #[error("integrity check failed for {context}: dominant basis probability {max_probability:.12}")]
    Integrity { context: String, max_probability: f64 },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn key(msg: impl Into<String>) -> Self {
        Error::Key(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
