use thiserror::Error;

/// Every failure the library can signal. Mathematical negatives (an axiom
/// that does not hold, a certificate verdict of `false`) are reported through
/// residuals, not through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("antilinear operator is not antiunitary (residual {residual:.3e})")]
    NotAntiunitary { residual: f64 },

    #[error("operand does not belong to the expected algebra: {0}")]
    AlgebraMismatch(String),

    #[error("twist is not regular: rho(a*) differs from (rho^-1(a))* by {residual:.3e}")]
    IrregularTwist { residual: f64 },

    #[error("identity violated: {name} residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    IdentityViolation {
        name: String,
        residual: f64,
        threshold: f64,
    },

    #[error("projection is not invariant under the twist (residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("numerical rank is ambiguous: Gram eigenvalue gap {gap:.3e} at threshold {threshold:.3e}")]
    RankDeficiency { gap: f64, threshold: f64 },

    #[error("covariant operator does not annihilate the relation span (residual {residual:.3e}, threshold {threshold:.3e})")]
    NotWellDefined { residual: f64, threshold: f64 },

    #[error("precheck failed: {0}")]
    Precheck(String),

    #[error("self-adjointness certificate is inconsistent: {0}")]
    InconsistentCertificate(String),

    #[error("no charge conjugation found: {0}")]
    NoSuchConjugation(String),

    #[error("unsupported lattice configuration: {0}")]
    UnsupportedDimension(String),

    #[error("element is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
