use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The network description is inconsistent.
    #[error("invalid network specification: {0}")]
    Spec(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown queue ({0}, {1})")]
    UnknownQueue(String, String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A decision would drive a queue negative. Policies are expected to
    /// return feasible decisions, so this points at a policy bug.
    #[error("infeasible decision at queue {queue}: needs {required} but only {available} available")]
    InfeasibleDecision {
        queue: String,
        required: u64,
        available: u64,
    },

    #[error("integer program exceeded its node budget of {0}")]
    SolverBudget(usize),

    #[error("simulation failed at step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(step: u64, source: Error) -> Self {
        Error::AtStep {
            step,
            source: Box::new(source),
        }
    }
}
