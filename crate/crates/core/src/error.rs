use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {expected}")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The ODE step controller gave up. Never expected for the bump field.
    #[error("ODE solver failed to meet tolerance (t = {t}, x = {x})")]
    SolverFailure { t: f64, x: f64 },

    #[error("certification failed: flow derivative {derivative} < 2/3 at t = {t}, x = {x}")]
    Certification { t: f64, x: f64, derivative: f64 },

    #[error("orbit entered the hole (1/3, 2/3) after {step} steps")]
    Escape { step: usize },

    #[error("depth {depth} exceeds the cap {cap}")]
    DepthCap { depth: usize, cap: usize },

    #[error("distortion {observed} at depth {depth} exceeds the theoretical bound {bound}")]
    BoundViolation { depth: usize, observed: f64, bound: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    Precondition(String),
}
