//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Chart point outside the model space's domain (e.g. y ≤ 0 in the
    /// upper half-space chart).
    #[error("chart point out of domain: {0}")]
    OutOfDomain(String),

    /// Distance jets requested at the reference point itself, where the
    /// gradient of r is undefined.
    #[error("degenerate point: distance jets are undefined at the base point")]
    DegeneratePoint,

    /// The weight |ψ|^(p−2) is singular at a zero of ψ when p < 2.
    #[error("singular weight |psi|^(p-2): psi vanishes and p = {p} < 2")]
    SingularWeight { p: f64 },

    /// Wedge product would exceed the ambient dimension.
    #[error("degree overflow: {k1} + {k2} > {n}")]
    DegreeOverflow { k1: usize, k2: usize, n: usize },

    /// Interior product or codifferential applied to a 0-form.
    #[error("operation requires form degree >= 1")]
    ZeroDegree,

    /// Mismatched degrees, ranks or vector lengths.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Invalid run or energy configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Perturbed metric g + t·h lost positive definiteness.
    #[error("perturbed metric is not positive definite")]
    NotPositiveDefinite,

    /// Compact support assumption violated: the field is not negligible on
    /// the integration box boundary.
    #[error("support leak: field magnitude {magnitude:e} on the box boundary")]
    SupportLeak { magnitude: f64 },

    /// The sampled inhomogeneity bound exceeds the supplied Γ.
    #[error("sampled q_psi = {q:e} exceeds Gamma = {gamma:e} at {at:?}")]
    GammaExceeded { q: f64, gamma: f64, at: Vec<f64> },

    /// A catalog field failed one of its registration tag checks.
    #[error("example '{example}' failed its '{tag}' check: residual {residual:e}")]
    TagCheckFailed {
        example: String,
        tag: String,
        residual: f64,
    },

    /// Catalog lookup failure.
    #[error("unknown example '{0}'")]
    UnknownExample(String),

    /// An integrand evaluation failed inside a quadrature sweep.
    #[error("integrand failed at {at:?}: {source}")]
    IntegrandFailed {
        at: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}
