use thiserror::Error;

/// Errors surfaced by ring arithmetic, ideal computations and the
/// factorization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must be at least 2")]
    AlphaTooSmall,
    #[error("alpha must be square-free ({0}^2 divides it)")]
    AlphaNotSquareFree(u64),
    #[error("alpha is divisible by 4")]
    AlphaDivisibleByFour,
    #[error("elements belong to different rings (alpha {0} vs alpha {1})")]
    RingMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not divisible by {1}")]
    NotDivisible(String, String),
    #[error("moduli are not pairwise coprime")]
    ModuliNotCoprime,
    #[error("zero has no prime factorization")]
    ZeroFactorization,
    #[error("arithmetic progression requires coprime step and offset")]
    GcdNotOne,
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("all generators are zero")]
    AllGeneratorsZero,
    #[error("target is not in the ideal generated by the given elements")]
    NotInIdeal,
    #[error("the zero ideal has no inverse")]
    ZeroIdeal,
    #[error("matrix is not in SL2 (determinant is not 1)")]
    NotInSl2,
    #[error("matrix is not idempotent")]
    NotIdempotent,
    #[error("row is not unimodular: {0}")]
    NotUnimodular(String),
    #[error("euclidean remainder chain did not terminate at zero")]
    ChainBroken,
    #[error("{0} does not witness principality")]
    NotPrincipalWitness(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no unimodular solution within the kernel-shift budget")]
    NoUnimodularSolution,
    #[error("pipeline invariant violated at {0}")]
    PipelineInvariant(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("certificate verification failed: {0}")]
    VerifyFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
