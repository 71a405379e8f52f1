use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("consistent splitting fails at sigma={sigma}, k={k}: spatial root {root} within {tol:e} of the imaginary axis")]
    Splitting {
        sigma: Complex64,
        k: f64,
        root: Complex64,
        tol: f64,
    },

    #[error("no quadrature circle separates the targeted spatial roots (separation ratio {ratio:.3})")]
    ContourPlacement { ratio: f64 },

    #[error("step size underflow at x={x} (h={h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("overflow at x={x} despite renormalisation (log scale {log_scale})")]
    Overflow { x: f64, log_scale: f64 },

    #[error("smallest singular value of the matching matrix is not isolated (ratio {ratio:e})")]
    Multiplicity { ratio: f64 },

    #[error("winding number {count} at k={k} contradicts uniqueness of the unstable mode")]
    UniquenessViolated { k: f64, count: i64 },

    #[error("argument refinement did not converge along the contour: {0}")]
    Refinement(String),

    #[error("root refinement failed: {0}")]
    RootRefinement(String),

    #[error("eigen-solver failed: {0}")]
    Eigen(String),

    #[error("dispersion curve jumps by {jump} between k={k0} and k={k1}")]
    CurveJump { k0: f64, k1: f64, jump: f64 },

    #[error("phase alignment failed between successive modes at k={k} (angle {angle:.3} rad)")]
    PhaseAlignment { k: f64, angle: f64 },

    #[error("solution blew up at t={t}")]
    BlowUp { t: f64 },

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    /// Numerical failures map to CLI exit code 2, bad inputs to 1.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidParam(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
