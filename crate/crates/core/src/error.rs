use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("window needs {modes} modes, mode cap is {cap}")]
    ModeCapExceeded { modes: usize, cap: usize },

    #[error("mode ({site:?}, {spin}) is not in the window")]
    ModeOutOfRange { site: Vec<i32>, spin: String },

    #[error("unknown spin label `{0}`")]
    UnknownSpin(String),

    #[error("site {site:?} has dimension {got}, lattice dimension is {expected}")]
    DimensionMismatch { site: Vec<i32>, expected: usize, got: usize },

    #[error("window of half-width {requested} does not fit in half-width {available}")]
    WindowTooSmall { requested: usize, available: usize },

    #[error("spin set has {have} labels, at least {need} are required")]
    SpinSetTooSmall { have: usize, need: usize },

    #[error("interaction range {range} exceeds torus period {period}")]
    RangeExceedsWindow { range: i32, period: i32 },

    #[error("anchor term `{0}` is not even")]
    NotEven(String),

    #[error("monomial refers to site {site:?} outside its anchor set")]
    SiteOutsideAnchor { site: Vec<i32> },

    #[error("operator is not self-adjoint (residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("state is not faithful (smallest eigenvalue {min_eigenvalue:.3e})")]
    StateNotFaithful { min_eigenvalue: f64 },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operator shapes differ: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("term {index} has interaction norm {norm}, expected 1")]
    NotUnitNorm { index: usize, norm: f64 },

    #[error("long-range weight {index} is zero")]
    ZeroWeight { index: usize },

    #[error("fixed-point iteration stopped after {iterations} steps with residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("decision rule output is not a local maximum (gain {gain:.3e})")]
    MaximalityCheckFailed { gain: f64 },

    #[error("grid has {cells} cells, cap is {cap}")]
    GridTooLarge { cells: usize, cap: usize },

    #[error("integrator drift {drift:.3e} persists after {halvings} step halvings")]
    StepTooLarge { drift: f64, halvings: usize },

    #[error("state lost positivity (eigenvalue {min_eigenvalue:.3e})")]
    NonPhysicalState { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ModeCapExceeded { .. } => "mode_cap_exceeded",
            Error::ModeOutOfRange { .. } => "mode_out_of_range",
            Error::UnknownSpin { .. } => "unknown_spin",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::SpinSetTooSmall { .. } => "spin_set_too_small",
            Error::RangeExceedsWindow { .. } => "range_exceeds_window",
            Error::NotEven { .. } => "not_even",
            Error::SiteOutsideAnchor { .. } => "site_outside_anchor",
            Error::NonHermitian { .. } => "non_hermitian",
            Error::StateNotFaithful { .. } => "state_not_faithful",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NotUnitNorm { .. } => "not_unit_norm",
            Error::ZeroWeight { .. } => "zero_weight",
            Error::NoConvergence { .. } => "no_convergence",
            Error::MaximalityCheckFailed { .. } => "maximality_check_failed",
            Error::GridTooLarge { .. } => "grid_too_large",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::NonPhysicalState { .. } => "non_physical_state",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Parse { .. } => "parse",
            Error::Eigen { .. } => "eigen",
        }
    }
}
