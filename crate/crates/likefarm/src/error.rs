//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("dangling reference: {kind} {id:?} is not defined")]
    DanglingReference { kind: &'static str, id: String },

    #[error("graph is empty after degree filtering")]
    EmptyGraph,

    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    #[error("svd did not converge after {iterations} iterations (residual {residual:.3e})")]
    SvdDidNotConverge { iterations: usize, residual: f64 },

    #[error("cluster {0} has no labeled members")]
    UnlabeledCluster(usize),

    #[error("nu = {nu} is infeasible: the class balance requires nu <= {bound:.6}")]
    NuInfeasible { nu: f64, bound: f64 },

    #[error(
        "smo did not converge after {iterations} iterations (kkt violation {violation:.3e})"
    )]
    SmoDidNotConverge { iterations: usize, violation: f64 },

    #[error("invalid generator config: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in field {field:?} for user {user:?}")]
    NonFinite { field: String, user: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
