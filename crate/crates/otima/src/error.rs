//! Error type shared by every module of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the simulation library.
///
/// The variants are deliberately coarse: callers (in particular the
/// command-line tool) map them onto distinct exit codes, so each variant
/// represents one externally meaningful class of failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the supported domain of an operation
    /// (e.g. a Bessel order beyond the implemented range, a negative mass).
    #[error("domain error: {0}")]
    Domain(String),

    /// A material parameter combination sits on a pole of the optical
    /// response (e.g. ε ≈ −2) where the requested quantity diverges.
    #[error("singular parameters: {0}")]
    Singular(String),

    /// An iterative or truncated computation failed to reach its accuracy
    /// target; the message carries the diagnostic (orders, residuals).
    #[error("precision failure: {0}")]
    Precision(String),

    /// A derived quantity is undefined because the signal it normalises by
    /// vanished (e.g. visibility of an identically zero signal).
    #[error("degenerate signal: {0}")]
    Degenerate(String),

    /// A structured text input (material database, scan configuration)
    /// failed to parse or violated a record invariant.
    #[error("{path}:{line}: {msg}")]
    Parse {
        /// Originating file (or a synthetic label for in-memory text).
        path: String,
        /// 1-based line number of the offending record.
        line: usize,
        /// Description of the violation.
        msg: String,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Parse`].
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
