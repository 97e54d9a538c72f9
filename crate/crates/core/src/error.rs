use thiserror::Error;

/// Errors raised by the simulation modules.
///
/// Every variant carries enough context to be reported verbatim by the CLI
/// (see [`Error::kind`] for the machine-readable tag).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("radius {r} outside the allowed interval [{lo}, {hi}]")]
    OutOfDomain { r: f64, lo: f64, hi: f64 },

    #[error("WKB guard reached at r = {r}: radial momentum {p0:e}, guard threshold {p_min:e}")]
    WkbGuard { r: f64, p0: f64, p_min: f64 },

    #[error("singular phase configuration: b = 0 with A = {a_coord:e} (gamma = 0, lambda != 0)")]
    SingularConfiguration { a_coord: f64 },

    #[error("amplitude underflow: envelope ratio {ratio:e} below threshold {threshold:e}")]
    AmplitudeUnderflow { ratio: f64, threshold: f64 },

    #[error("loss of significance in {quantity}: central difference {coarse:e} vs Richardson {refined:e}")]
    LossOfSignificance { quantity: &'static str, coarse: f64, refined: f64 },

    #[error("gradient cross-check failed for {component}: analytic {analytic:e} vs numerical {numerical:e}")]
    CrossCheck { component: &'static str, analytic: f64, numerical: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("Kepler equation iteration failed for mean anomaly {mean_anomaly}, e = {eccentricity}")]
    KeplerIteration { mean_anomaly: f64, eccentricity: f64 },

    #[error("insufficient arc for conic fit: {0}")]
    InsufficientArc(String),

    #[error("conic fit did not converge after {iterations} iterations")]
    FitNonConvergence { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },

    #[error("config validation error in `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    ConfigValidation { field: String, line: Option<usize>, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable tag used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::WkbGuard { .. } => "wkb_guard",
            Error::SingularConfiguration { .. } => "singular_configuration",
            Error::AmplitudeUnderflow { .. } => "amplitude_underflow",
            Error::LossOfSignificance { .. } => "loss_of_significance",
            Error::CrossCheck { .. } => "cross_check",
            Error::Quadrature { .. } => "quadrature",
            Error::StepFailure { .. } => "step_failure",
            Error::KeplerIteration { .. } => "kepler_iteration",
            Error::InsufficientArc(_) => "insufficient_arc",
            Error::FitNonConvergence { .. } => "fit_non_convergence",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ConfigParse { .. } => "config_parse",
            Error::ConfigValidation { .. } => "config_validation",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
