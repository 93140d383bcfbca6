use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Diagnostic, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base quantities: kV = {kv}, MVA = {mva} (both must be positive)")]
    InvalidBase { kv: f64, mva: f64 },

    #[error("transformer {transformer}: {reason}")]
    IncompleteTransformer { transformer: u32, reason: String },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("unknown AC line {0} in induced-voltage table")]
    UnknownLine(u32),

    #[error("branch {branch}: {reason}")]
    Assembly { branch: u32, reason: String },

    #[error("singular conductance system: {}", describe_singular(.isolated, .condition_estimate))]
    SingularSystem {
        isolated: Vec<Vec<NodeId>>,
        condition_estimate: Option<f64>,
    },

    #[error("transformer {transformer}: mapped branch {branch} has no solved current")]
    Mapping { transformer: u32, branch: u32 },

    #[error("blocker scenario: {0}")]
    Scenario(String),

    #[error("{path}:{line}: [{section}] column {column}: {message}")]
    Parse {
        path: String,
        section: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error("case failed validation:\n{}", join_diagnostics(.0))]
    InvalidCase(Vec<Diagnostic>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn describe_singular(isolated: &[Vec<NodeId>], cond: &Option<f64>) -> String {
    let mut parts = Vec::new();
    for component in isolated {
        let ids: Vec<String> = component.iter().map(|n| n.0.to_string()).collect();
        parts.push(format!("isolated component {{{}}}", ids.join(", ")));
    }
    if let Some(c) = cond {
        parts.push(format!("condition estimate {c:.3e}"));
    }
    if parts.is_empty() {
        "matrix is not positive definite".to_string()
    } else {
        parts.join("; ")
    }
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}
