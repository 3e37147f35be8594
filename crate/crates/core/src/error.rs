//! Error type shared across the crate.
//!
//! Everything here is a domain error: the caller asked for a quantity at a
//! point where it is mathematically undefined, or handed us inconsistent
//! dimensions. IO errors are wrapped where they occur (trace export, record
//! import) rather than given their own variants per call site.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Complete elliptic integrals are only defined for parameter m in [0, 1].
    #[error("elliptic integral parameter {0} lies outside [0, 1]")]
    EllipticDomain(f64),

    /// The series form of the objective needs a finite condition number,
    /// i.e. a strictly positive second singular value.
    #[error("series expansion requires s2 > 0 (got s2 = {0})")]
    SeriesDegenerate(f64),

    /// The smooth gradient formula breaks down at the zero matrix.
    #[error("gradient undefined at s = (0, 0)")]
    GradientAtZero,

    /// Classification and error metrics divide by norms of the ground truth,
    /// so a truth pair with a zero factor is rejected up front.
    #[error("ground-truth pair has a zero factor")]
    DegenerateTruth,

    /// The sample-size rate is only meaningful in the overdetermined regime.
    #[error("rate requires m > d1 + d2 + 1 (got m = {m}, d1 + d2 + 1 = {threshold})")]
    RateUndefined { m: usize, threshold: usize },

    /// Every probe point had a zero residual matrix, so the relative gap is
    /// undefined at all of them.
    #[error("all probe points were skipped (zero residual)")]
    NoUsableProbes,

    /// Ordered singular values must satisfy s1 >= s2 >= 0.
    #[error("singular values out of order or negative: ({0}, {1})")]
    UnorderedSingularValues(f64, f64),

    /// A serialized measurement-ensemble record failed to parse or was
    /// internally inconsistent.
    #[error("ensemble record: {0}")]
    Record(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
