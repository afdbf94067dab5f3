use std::path::PathBuf;

use thiserror::Error;

/// Which mesh invariant a validation failure violated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    IndexOutOfRange { face: usize, index: usize },
    RepeatedVertex { face: usize },
    DegenerateFace { face: usize },
    NonTriangularFace { record: usize, arity: usize },
    NonManifoldEdge { a: usize, b: usize },
    NonManifoldVertex { vertex: usize },
    InconsistentOrientation { a: usize, b: usize },
    IsolatedVertex { vertex: usize },
    Disconnected { components: usize },
    NoBoundaryLoop,
    MultipleBoundaryLoops { loops: usize },
    Empty,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::IndexOutOfRange { face, index } => {
                write!(f, "face {face} references vertex {index}, which does not exist")
            }
            Violation::RepeatedVertex { face } => write!(f, "face {face} repeats a vertex"),
            Violation::DegenerateFace { face } => write!(f, "degenerate face {face} (zero area)"),
            Violation::NonTriangularFace { record, arity } => {
                write!(f, "non-triangular face (record {record} has {arity} vertices)")
            }
            Violation::NonManifoldEdge { a, b } => {
                write!(f, "non-manifold or disconnected: edge ({a}, {b}) has more than two faces")
            }
            Violation::NonManifoldVertex { vertex } => write!(
                f,
                "non-manifold or disconnected: vertex {vertex} joins several boundary fans"
            ),
            Violation::InconsistentOrientation { a, b } => write!(
                f,
                "inconsistent face orientation across edge ({a}, {b}); flip faces so that \
                 neighbouring faces traverse shared edges in opposite directions"
            ),
            Violation::IsolatedVertex { vertex } => {
                write!(f, "non-manifold or disconnected: vertex {vertex} belongs to no face")
            }
            Violation::Disconnected { components } => write!(
                f,
                "non-manifold or disconnected: faces form {components} edge-connected components"
            ),
            Violation::NoBoundaryLoop => {
                write!(f, "no boundary loop (closed surface; an open disk is required)")
            }
            Violation::MultipleBoundaryLoops { loops } => write!(
                f,
                "multiple boundary loops ({loops}); a simply connected open surface is required"
            ),
            Violation::Empty => write!(f, "mesh has no faces"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    Validation(Violation),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("boundary partition: {0}")]
    Partition(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(self.root(), Error::Singular(_))
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Validation(v)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
