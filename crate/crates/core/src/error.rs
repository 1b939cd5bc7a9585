use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mode count {0}: at least one mode is required")]
    InvalidModeCount(usize),
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    InvalidModeIndex { index: usize, n_modes: usize },
    #[error("mode {0} selected more than once")]
    DuplicateMode(usize),
    #[error("empty mode selection")]
    EmptySelection,
    #[error("covariance matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("state violates the uncertainty principle (smallest symplectic eigenvalue {min_symplectic_eigenvalue})")]
    Unphysical { min_symplectic_eigenvalue: f64 },
    #[error("transformation is not canonical (|MM†−LL†−I| = {unitarity:e}, |MLᵀ−LMᵀ| = {symmetry:e})")]
    NonCanonical { unitarity: f64, symmetry: f64 },
    #[error("channel is not completely positive (smallest eigenvalue {min_eigenvalue:e})")]
    UnphysicalChannel { min_eigenvalue: f64 },
    #[error("dilation does not act as a Gaussian channel without displacement (residual {residual:e})")]
    NonAffine { residual: f64 },
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("at least {min} shots are required, got {shots}")]
    TooFewShots { shots: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Errors raised because a requested parameter describes a physically
    /// impossible state or channel, as opposed to malformed input.
    pub fn is_unphysical(&self) -> bool {
        matches!(
            self,
            Error::Unphysical { .. } | Error::UnphysicalChannel { .. } | Error::NonCanonical { .. }
        )
    }
}
