use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient {coefficient} is not finite at t = {t}, v = {v}")]
    NonFinite { coefficient: &'static str, t: f64, v: f64 },

    #[error("derivative of order {order} requested but the multiplier is only declared {available}-times smooth")]
    UnsupportedOrder { order: usize, available: usize },

    #[error("simulation diverged at step {step}{}", replicate.map(|r| format!(" of replicate {r}")).unwrap_or_default())]
    Diverged { step: usize, replicate: Option<usize> },

    #[error("kernel window [{lo}, {hi}] at t = {t} (bandwidth {bandwidth}) leaves [0, {horizon}]; shrink the bandwidth or the evaluation window")]
    Boundary {
        t: f64,
        bandwidth: f64,
        lo: f64,
        hi: f64,
        horizon: f64,
    },

    #[error("observed state {value} at t = {t} is too close to zero to divide by")]
    DegenerateState { t: f64, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel construction failed: {0}")]
    Kernel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config serialize error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}
