use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("jet degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("insufficient jet degree: need {need}, have {have}")]
    InsufficientDegree { need: usize, have: usize },
    #[error("singular point: {0}")]
    Singular(&'static str),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("quadrature not converged: relative drift {drift:.3e} exceeds {tol:.1e}")]
    Quadrature { drift: f64, tol: f64 },
    #[error("matrix asymmetry {0:.3e} exceeds 1e-6")]
    Asymmetry(f64),
    #[error("eigensolver: {0}")]
    Eigen(String),
    #[error("degenerate discriminant D = {0:.3e}")]
    Degenerate(f64),
    #[error("root not bracketed: {0}")]
    NoRoot(&'static str),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
