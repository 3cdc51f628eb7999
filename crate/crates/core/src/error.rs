use thiserror::Error;

/// Everything that can go wrong, split into input problems and numerical
/// failures so the CLI can map them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("λ = {lambda} lies within {guard:e} of threshold {threshold}; use the threshold cascade")]
    ThresholdGuard { lambda: f64, threshold: f64, guard: f64 },

    #[error("near-singular boundary operator at λ = {lambda}: σ_min = {sigma_min:e}, cond = {cond:e}")]
    NearSingular { lambda: f64, sigma_min: f64, cond: f64 },

    #[error("Neumann series diverges: ‖z·A1·(A0+S)⁻¹‖ = {norm}")]
    SeriesDiverged { norm: f64 },

    #[error("projection is incompatible with A0: ‖S(A0+S)⁻¹S − S‖ = {residual:e}")]
    Incompatible { residual: f64 },

    #[error("ambiguous rank at {level}: singular value {sigma:e} inside gray zone [{lo:e}, {hi:e}]")]
    RankAmbiguous { level: String, sigma: f64, lo: f64, hi: f64 },

    #[error("{0} is not a threshold of this fiber")]
    NotAThreshold(f64),

    #[error("unperturbed problem (V ≡ 0): nothing to expand")]
    Unperturbed,

    #[error("I₃(0) is numerically singular (σ_min = {0:e})")]
    SingularI3(f64),

    #[error("κ = 0 limit is not finite at this threshold (S₁ ≠ 0)")]
    SingularLimit,

    #[error("channel {0} lies outside the retained Fourier basis")]
    ChannelOutOfBasis(i64),

    #[error("grid escape: {what} carries relative energy {energy:e} outside the window")]
    GridEscape { what: String, energy: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root refinement failed near λ = {0}")]
    Refinement(f64),

    #[error("commutator derivative mismatch: analytic vs finite difference differ by {0:e}")]
    DerivativeMismatch(f64),
}

impl Error {
    /// Input errors are the caller's fault; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::NotAThreshold(_) | Error::Unperturbed | Error::ChannelOutOfBasis(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
