use thiserror::Error;

/// Every failure the library reports. Variants carry enough context to
/// reproduce the offending call.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("flow is not strictly monotone: min b' = {min_db:.3e} at y = {at:.4}")]
    NotMonotone { min_db: f64, at: f64 },

    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("epsilon {epsilon:.3e} under-resolved: needs >= {kappa} * dv = {required:.3e}")]
    Resolution { epsilon: f64, kappa: f64, required: f64 },

    #[error("near-singular system at w = {w:.6}, epsilon = {epsilon:.3e}")]
    SingularSystem { w: f64, epsilon: f64 },

    #[error("epsilon ladder is not Cauchy: successive differences {differences:?}")]
    NonCauchyLadder { differences: Vec<f64> },

    #[error("oscillation under-resolved at t = {t}: dw = {dw:.3e} but at most {required:.3e} allowed")]
    UnderResolvedOscillation { t: f64, dw: f64, required: f64 },

    #[error("time step {dt:.3e} exceeds the stability guard {limit:.3e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("vorticity norm grew by {growth:.2}x at t = {t:.3}; spectral instability or bug")]
    BlowUp { t: f64, growth: f64 },

    #[error("ill-conditioned fit (condition {condition:.3e} > cap {cap:.3e}): {context}")]
    IllConditioned { condition: f64, cap: f64, context: String },

    #[error("derivative of order {order} is noise dominated (roughness {roughness:.3})")]
    Roughness { order: usize, roughness: f64 },

    #[error("spectrum not decayed at Nyquist (relative level {level:.3e})")]
    Aliasing { level: f64 },

    #[error("operation requires Couette flow")]
    NotCouette,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("scenario refused: {0}")]
    Refused(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
