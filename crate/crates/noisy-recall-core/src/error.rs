use thiserror::Error;

/// Violations of the network model invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cluster {cluster}: {reason}")]
    InvalidCluster { cluster: usize, reason: &'static str },
    #[error("pattern neuron {0} is not a member of any cluster")]
    Uncovered(usize),
    #[error("member id {id} out of range for n = {n}")]
    MemberOutOfRange { id: usize, n: usize },
    #[error("weight {weight} is below the recorded minimum magnitude {eta}")]
    WeightBelowEta { weight: f64, eta: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Reasons the generator cannot satisfy a specification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(&'static str),
    #[error("construction infeasible: {0}")]
    Infeasible(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no training patterns")]
    NoPatterns,
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
    #[error("no converged dual vector after {iterations} iterations (residual {residual})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid regime: eta ({eta}) must be at least psi ({psi})")]
    InvalidRegime { eta: f64, psi: f64 },
    #[error("degenerate degree distribution")]
    DegenerateDistribution,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
