use thiserror::Error;

/// Failure modes shared across construction, estimation and diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid map descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid atom measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Probe orbits failed to coalesce; the requested random point is not
    /// empirically well defined for this realization.
    #[error("estimate did not converge: probe spread {spread:.3e} exceeds tol {tol:.3e}")]
    NonConvergence { spread: f64, tol: f64 },

    /// A ball or preimage arc carried no sample mass where the estimator
    /// needed a ratio.
    #[error("degenerate ball: {0}")]
    DegenerateBall(String),

    /// Singular values of the matrix product are too close to trust the
    /// singular directions.
    #[error("degenerate singular gap: log(sigma1/sigma2) = {log_gap:.3} after {n} steps")]
    DegenerateGap { log_gap: f64, n: u64 },

    #[error("matrix atom is not unimodular: |det| = {0}")]
    NonUnimodular(f64),

    /// The standing hypotheses (no common fixed point, proximality,
    /// synchronization) could not be certified, so the requested quantity is
    /// not meaningful.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
