use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] treerecon::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    /// 2 for invalid input, 3 for resource limits, 4 for bracketing
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use treerecon::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::DegenerateChannel(_)
                | E::InvalidParameter(_)
                | E::UndefinedLimit(_)
                | E::PreconditionViolation(_)
                | E::DegenerateEvent(_)
                | E::NotInterior(_)
                | E::Parse(_) => 2,
                E::AtomExplosion { .. } | E::ResourceLimit(_) => 3,
                E::BadBracket(_) | E::MonotonicityViolation(_) => 4,
                E::DominanceViolation { .. } => 1,
            },
            CliError::Io(_) | CliError::Json(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}
