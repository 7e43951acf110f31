use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate tangent at parameter {theta}")]
    DegenerateTangent { theta: f64 },

    #[error("offset {rho} leaves the tubular neighborhood (limit {limit})")]
    OutsideTubularNeighborhood { rho: f64, limit: f64 },

    #[error("element edges do not meet at corner {corner} (gap {gap:e})")]
    CornerMismatch { corner: usize, gap: f64 },

    #[error("domain is not star-shaped with respect to the origin near parameter {theta}")]
    NotStarShaped { theta: f64 },

    #[error("nonpositive Jacobian determinant {det:e} in element {element}")]
    NonPositiveJacobian { element: usize, det: f64 },

    #[error("inconsistent mesh topology: {0}")]
    Topology(String),

    #[error("point ({x}, {y}) is not contained in any element")]
    PointNotFound { x: f64, y: f64 },

    #[error("structurally zero {kind} {index}")]
    StructurallyZero { kind: &'static str, index: usize },

    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("relative residual {residual:e} exceeds the accepted bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("coefficient c = {value} at ({x}, {y}) is not bounded away from zero")]
    CoefficientNotPositive { value: f64, x: f64, y: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("p = {p}, eps1 = {eps1:e}, eps2 = {eps2:e}: {source}")]
    AtParameters { p: usize, eps1: f64, eps2: f64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::CoefficientNotPositive { .. }
            | Error::Parse(_)
            | Error::NotStarShaped { .. }
            | Error::OutsideTubularNeighborhood { .. } => 1,
            Error::Io(_) => 3,
            Error::AtParameters { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
