use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantity outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    /// δ = d = Γ = 0: the stationary state is not unique.
    #[error("degenerate parameters: δ = d = Γ = 0 has no unique equilibrium")]
    DegenerateParameters,

    #[error("eigenvalue z{nu} is within the coalescence threshold of another eigenvalue (|Φ^L·Φ^R| = {overlap:e})")]
    NearDegenerate { nu: usize, overlap: f64 },

    #[error("closed-form eigenvector for z{nu} vanishes at these parameters")]
    VanishingEigenvector { nu: usize },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("no discriminant root in Γ > 0 for d̃ = {d_tilde}")]
    NoRoot { d_tilde: f64 },

    #[error("splitting-exponent fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("trace deviation {deviation:e} at t = {time} exceeds {limit:e}; reduce dt (try {suggested_dt:e})")]
    StepSize {
        time: f64,
        deviation: f64,
        limit: f64,
        suggested_dt: f64,
    },
}
