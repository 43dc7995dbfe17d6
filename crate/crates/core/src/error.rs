use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("edge count q = {0} is below 2; a star needs at least two edges")]
    TooFewEdges(usize),

    #[error("edge length L = {0} must be positive and finite")]
    NonPositiveLength(f64),

    #[error("coupling alpha is zero; the branch equations are ill-posed at beta = 0")]
    ZeroCoupling,

    #[error("coupling alpha = {0} is not finite")]
    NonFiniteCoupling(Complex64),

    #[error("q = {q} gives p = 0; the complex-subset machinery needs p >= 1 (use the special p = 0 root)")]
    NeedsPositiveP { q: usize },

    #[error("branch index n = {n} is outside [0, {p})")]
    BranchOutOfRange { n: usize, p: usize },

    #[error("pole-adjacent evaluation at kappa = {0}: within 1e-9 of an odd multiple of pi/2")]
    PoleAdjacent(Complex64),

    #[error("window escape: |epsilon| = {modulus:.3e} >= pi/4 for M = {m}, n = {n}")]
    WindowEscape { m: u64, n: usize, modulus: f64 },

    #[error("resonant denominator in the second-order estimate for M = {m}, n = {n}")]
    ResonantDenominator { m: u64, n: usize },

    #[error("no convergence after {iterations} iterations (last two iterates {previous} and {last})")]
    NoConvergence {
        iterations: usize,
        previous: Complex64,
        last: Complex64,
    },

    #[error("boundary too close to root: phase tracking did not settle within {samples} samples")]
    BoundaryTooClose { samples: usize },

    #[error("special p = 0 root requires q = 2, got q = {0}")]
    NotTwoStar(usize),

    #[error("special p = 0 root requires real positive beta, got {0}")]
    NonRealBeta(Complex64),

    #[error("degenerate coincidence: beta = {0} sits on an odd multiple of pi/2")]
    DegenerateCoincidence(f64),

    #[error("order fit needs at least 5 usable samples with distinct M, got {0}")]
    InsufficientSamples(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
