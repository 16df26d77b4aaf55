use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("aggregate must contain at least one monomer")]
    EmptyAggregate,
    #[error("invalid aggregate: {0}")]
    InvalidAggregate(String),
    #[error("dark initial state: every transition dipole is orthogonal to the polarization")]
    DarkInitialState,
    #[error("invalid bath term (monomer {monomer}, term {term}): {reason}")]
    InvalidBathTerm {
        monomer: usize,
        term: usize,
        reason: &'static str,
    },
    #[error("bath describes {found} monomers, aggregate has {expected}")]
    BathSizeMismatch { expected: usize, found: usize },
    #[error("bath correlation requested at negative time {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid propagation config: {0}")]
    InvalidConfig(String),
    #[error("state norm grew to {norm} at t = {time}: dt too large")]
    NormGrowth { norm: f64, time: f64 },
    #[error("pseudomode basis of dimension {dimension} exceeds the budget of {budget} states")]
    BasisTooLarge { dimension: usize, budget: usize },
    #[error("invalid pseudomode basis: {0}")]
    InvalidBasis(String),
    #[error("doubling requires real initial state")]
    ComplexInitialState,
    #[error("trace too short: |M(t_max)| e^(-eta t_max) = {residual} exceeds 1e-4 mu_tot^2 = {limit}; increase t_max or eta")]
    Ringing { residual: f64, limit: f64 },
    #[error("invalid spectrum request: {0}")]
    InvalidSpectrum(String),
    #[error("spectrum has non-positive area {0}")]
    NonPositiveArea(f64),
    #[error(
        "memory budget exceeded before caps converged (last overlaps: {previous:?}%, {last:?}%)"
    )]
    NotConverged {
        previous: Option<f64>,
        last: Option<f64>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
