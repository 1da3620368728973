use std::path::PathBuf;

use crate::network::{EdgeId, NodeId};

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A row of an input file could not be parsed or failed validation.
    /// `row` is 1-based and counts the header line.
    #[error("malformed file {path}, row {row}: {message}")]
    MalformedFile {
        path: PathBuf,
        row: u64,
        message: String,
    },

    #[error("edge {edge} references unknown node {node}")]
    DanglingEdge { edge: EdgeId, node: NodeId },

    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),

    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),

    #[error("invalid edge {edge}: {message}")]
    InvalidEdge { edge: EdgeId, message: String },

    #[error("invalid node {node}: {message}")]
    InvalidNode { node: NodeId, message: String },

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),

    #[error("no directed path from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },

    #[error("road network is empty")]
    EmptyNetwork,

    #[error("need at least {needed} distinct demand points, found {found}")]
    NotEnoughPoints { needed: usize, found: usize },

    #[error("window length mismatch: {left} s vs {right} s")]
    WindowMismatch { left: f64, right: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error on {path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, row: u64, message: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            row,
            message: message.into(),
        }
    }

    /// Convert a csv error into `MalformedFile`, keeping the row number when
    /// the reader knows it.
    pub(crate) fn from_csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        let path = path.into();
        let row = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path, source },
            kind => Error::MalformedFile {
                path,
                row,
                message: csv_kind_message(kind),
            },
        }
    }
}

fn csv_kind_message(kind: csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        csv::ErrorKind::Utf8 { err, .. } => err.to_string(),
        other => format!("{other:?}"),
    }
}
