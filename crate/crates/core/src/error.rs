//! Error type shared by every module of the library.

use crate::index::{IndexWidth, WidthState};
use thiserror::Error;

/// All fallible library operations return this error.
#[derive(Debug, Error)]
pub enum Error {
    /// An accessor tied to one index width was called against an object of
    /// the other width. Raised unconditionally, even when the value at hand
    /// would fit the narrower type.
    #[error("width error: {0}")]
    WrongWidth(String),

    /// The object has no valid global index width (default-constructed map).
    #[error("invalid global index width state: {0}")]
    InvalidWidthState(String),

    /// Two objects with different global index widths were combined.
    #[error("global index widths do not match: {0}")]
    WidthMix(String),

    /// A value or extent does not fit the requested index width.
    #[error("value {value} does not fit a 32-bit global index")]
    WidthRange { value: i64 },

    /// The requested width was excluded from this build by a compilation
    /// mode feature.
    #[error("{width} global indices are excluded by this build configuration")]
    WidthExcluded { width: IndexWidth },

    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An operation was called in the wrong object lifecycle phase, e.g.
    /// inserting into a fill-completed graph.
    #[error("lifecycle error: {0}")]
    Lifecycle(String),

    /// A row (or element) addressed by global index is not owned by the
    /// calling rank.
    #[error("global index {gid} is not owned by this rank")]
    NotOwned { gid: i64 },

    /// A stated global count disagrees with the count computed collectively.
    #[error("stated global count {stated} != computed global count {computed}")]
    CountMismatch { stated: i64, computed: i64 },

    /// A caller-provided buffer is too small; carries the required length.
    #[error("buffer too small: {required} entries required")]
    Capacity { required: usize },

    /// A column index encountered at fill time could not be resolved to an
    /// owning rank anywhere.
    #[error("column global index {gid} is not owned by any rank")]
    InvalidColumn { gid: i64 },

    /// File parse failure; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn wrong_width(what: &str, found: WidthState) -> Error {
        Error::WrongWidth(format!("{what} (object width is {found})"))
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
