use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series did not converge within {terms} terms (|z| = {modulus})")]
    NonConvergence { terms: usize, modulus: f64 },

    #[error("eigenvalue {lambda} is outside the {expected} sector for p = {p}")]
    SectorError {
        lambda: String,
        expected: &'static str,
        p: f64,
    },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("non-hyperbolic eigenvalue {lambda}: |arg| is within 1e-12 of p*pi/2 (p = {p})")]
    NonHyperbolic { lambda: String, p: f64 },

    #[error("transform matrix is singular or ill-conditioned (sigma_min/sigma_max = {ratio:e})")]
    SingularTransform { ratio: f64 },

    #[error("tail envelope cannot certify tolerance {tol:e} at any cut <= {max_cut}")]
    TailNotDecaying { tol: f64, max_cut: f64 },

    #[error("trajectory diverged: |x| = {norm:e} at t = {time}")]
    DivergedTrajectory { norm: f64, time: f64 },

    #[error("fixed-point iteration is not contracting (update ratio {ratio:.3} at iteration {iteration})")]
    NoContraction { ratio: f64, iteration: usize },

    #[error("simulation escaped: |x| = {norm:e} at t = {time}")]
    StepOverflow { norm: f64, time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error signals bad user input rather than a numerical failure.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::NonHyperbolic { .. }
                | Error::SingularTransform { .. }
                | Error::SectorError { .. }
                | Error::DomainError(_)
        )
    }
}
