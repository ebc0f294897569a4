use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("photon cutoff {cutoff} retains mass {retained:.12}, below 1 - {tol:e}")]
    CutoffTooSmall { cutoff: u32, retained: f64, tol: f64 },

    #[error("{series} series did not converge within {max_index} terms")]
    SeriesNotConverged { series: &'static str, max_index: usize },

    #[error("log-magnitude {log_magnitude:.1} exceeds the f64 range; use exact arithmetic or a smaller problem")]
    NumericOverflow { log_magnitude: f64 },

    #[error("dropped probability mass {dropped:.3e} exceeds budget {budget:.3e}")]
    CutoffBudgetExceeded { dropped: f64, budget: f64 },

    #[error("oracle block dimension {dim} exceeds limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("post-selected event has zero probability")]
    EmptySlice,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::SeriesNotConverged { .. } => "SeriesNotConverged",
            Error::NumericOverflow { .. } => "NumericOverflow",
            Error::CutoffBudgetExceeded { .. } => "CutoffBudgetExceeded",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::UnknownAxis(_) => "UnknownAxis",
            Error::EmptySlice => "EmptySlice",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Config(_) => "ConfigError",
            Error::Scenario { source, .. } => source.kind(),
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::TomlDe(_) | Error::TomlSer(_) => "ConfigError",
        }
    }

    pub(crate) fn in_scenario(self, scenario: &str) -> Error {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario {
                scenario: scenario.to_string(),
                source: Box::new(e),
            },
        }
    }
}
