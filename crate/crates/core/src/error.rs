use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("grid shape: {0}")]
    GridShape(String),

    #[error("invalid momentum p = {0} (must be positive and finite)")]
    InvalidMomentum(f64),

    #[error("p = {p} lies outside the tunnelling regime p^2 < 2W (W = {w})")]
    OutsideTunnellingRegime { p: f64, w: f64 },

    #[error("p = {p} sits on the branch point p^2 = 2W (W = {w})")]
    BranchPointSingularity { p: f64, w: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: relative change {rel_change:e} at n = {n_points} (tolerance {tolerance:e})")]
    QuadratureNotConverged {
        rel_change: f64,
        n_points: usize,
        tolerance: f64,
    },

    #[error("shift window [{y_min}, {y_max}] does not contain the pointer support needed at X = {x_rel}")]
    ShiftWindowTooNarrow { y_min: f64, y_max: f64, x_rel: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("selection is nearly orthogonal: |<psi_F|psi_I>| = {overlap:e}")]
    NearOrthogonalSelection { overlap: f64 },

    #[error("schedule parameters out of domain: {0}")]
    ScheduleDomain(String),

    #[error("peak sits on the window boundary: {0}")]
    WindowTooNarrow(String),
}

impl Error {
    /// True for failures of the convergence-controlled quadrature, as opposed
    /// to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::QuadratureNotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
