use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or experiment parameters.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A caller broke a documented precondition (bad indices, unnormalised weights, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// The arguments are well formed but the quantity is undefined for them.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("out of range: {0}")]
    Range(String),
    /// The request is too large for an enumeration-based routine.
    #[error("resource limit: {0}")]
    Resource(String),
    /// Rejection sampling kept no replicate at all.
    #[error("no replicate hit the conditioning event out of {raw_reps} runs")]
    ZeroSupport { raw_reps: u64 },
    /// A statistical test could not be formed from the data.
    #[error("diagnostic error: {0}")]
    Diagnostic(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the request shape.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroSupport { .. }
                | Error::Diagnostic(_)
                | Error::Domain(_)
                | Error::Resource(_)
        )
    }
}
