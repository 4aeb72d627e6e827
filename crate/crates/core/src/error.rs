use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sensing receive beamformer undefined: {0}")]
    DegenerateSensing(&'static str),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("rank certificate violated: lambda2/lambda1 = {ratio:.3e} > {threshold:.3e} (numerical rank {rank})")]
    RankCertificate {
        ratio: f64,
        threshold: f64,
        rank: usize,
    },
    #[error("baseline {name} undefined: {reason}")]
    BaselineUndefined {
        name: &'static str,
        reason: &'static str,
    },
    #[error("UE index {index} out of range for {count} users")]
    IndexOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
