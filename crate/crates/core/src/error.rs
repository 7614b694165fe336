use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("numerical decomposition failed: {0}")]
    Decomposition(String),
    #[error("measurement geometry undefined: {0}")]
    Geometry(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
}
