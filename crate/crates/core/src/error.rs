use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Variants fall into two families: input validation (bad parameters, unknown
/// catalog entries, grids that cannot resolve what was asked of them) and
/// numeric failures discovered while computing (degenerate metrics, tail mass
/// that escapes a truncated domain, a collapsing curve).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("degenerate metric at node {node} (parameter {param:?}): det(J^T J) = {det:e}")]
    DegenerateMetric { node: usize, param: Vec<f64>, det: f64 },

    #[error("mean curvature unavailable: {0}")]
    MissingCurvature(String),

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("tail mass {tail:e} outside the grid exceeds tolerance {tol:e}")]
    TailMass { tail: f64, tol: f64 },

    #[error("no grid node above the floor {floor:e}")]
    EmptyScan { floor: f64 },

    #[error("ball of radius {radius} around {center:?} leaves the grid")]
    BallOutsideGrid { center: Vec<f64>, radius: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    Stability { dt: f64, bound: f64 },

    #[error("curve collapsed: length {0:e}")]
    Collapse(f64),

    #[error("coincident points at index {0}")]
    CoincidentPoints(usize),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::UnknownCatalog(_)
                | Error::Resolution(_)
                | Error::BallOutsideGrid { .. }
                | Error::Stability { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err($crate::error::Error::InvalidParameter(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
