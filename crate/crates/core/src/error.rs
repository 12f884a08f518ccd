use std::path::PathBuf;

use thiserror::Error;

/// Grid coordinates of a lattice state, attached to errors raised mid-sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRef {
    pub j: usize,
    pub up: usize,
    pub jumps: usize,
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(j={}, up={}, jumps={})", self.j, self.up, self.jumps)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("barrier violation at node {node}: lower {lower} > upper {upper}")]
    BarrierViolation { node: NodeRef, lower: f64, upper: f64 },

    #[error("terminal barriers differ at node {node}: lower {lower} != upper {upper}")]
    TerminalMismatch { node: NodeRef, lower: f64, upper: f64 },

    #[error("root finding failed{}: {reason} after {iterations} iterations (residual {residual:e})",
        .node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    RootFind {
        node: Option<NodeRef>,
        reason: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach lattice coordinates to a root-finding failure.
    pub(crate) fn at_node(self, at: NodeRef) -> Self {
        match self {
            Error::RootFind {
                reason,
                iterations,
                residual,
                ..
            } => Error::RootFind {
                node: Some(at),
                reason,
                iterations,
                residual,
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
