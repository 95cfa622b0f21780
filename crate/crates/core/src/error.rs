use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    InvalidGrid(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid null curve: {0}")]
    InvalidNullCurve(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("prescribed curvature failed at ({x}, {y}, {z}): {reason}")]
    Curvature {
        x: f64,
        y: f64,
        z: f64,
        reason: String,
    },

    #[error("expression error at offset {offset}: {msg}")]
    Expression { offset: usize, msg: String },

    #[error("state is degraded (conformality residual {residual:e} > budget {budget:e})")]
    Degraded { residual: f64, budget: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("reconstruction failure: {0}")]
    Reconstruction(String),

    #[error("ellipticity violated at {count} samples (first: row {row}, node {node}, |grad z|^2 = {grad_sq})")]
    Ellipticity {
        count: usize,
        row: usize,
        node: usize,
        grad_sq: f64,
    },

    #[error("config error on line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed input {path}: {msg}")]
    Input { path: String, msg: String },

    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

impl Error {
    /// Stable machine-readable code, written into diagnostic reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "E_GRID",
            Error::Domain(_) => "E_DOMAIN",
            Error::InvalidNullCurve(_) => "E_NULL_CURVE",
            Error::InvalidConfig(_) => "E_SOLVER_CONFIG",
            Error::Curvature { .. } => "E_CURVATURE",
            Error::Expression { .. } => "E_EXPRESSION",
            Error::Degraded { .. } => "E_DEGRADED",
            Error::SolverFailure(_) => "E_SOLVER",
            Error::Reconstruction(_) => "E_RECONSTRUCTION",
            Error::Ellipticity { .. } => "E_ELLIPTICITY",
            Error::Config { .. } => "E_CONFIG",
            Error::Input { .. } => "E_INPUT",
            Error::Io { .. } => "E_IO",
        }
    }
}
