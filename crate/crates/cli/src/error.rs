use dla_core::beurling::BeurlingError;
use dla_core::bounds::BoundsError;
use dla_core::dla::DlaError;
use dla_core::growth::GrowthError;
use dla_core::potential::PotentialError;
use dla_core::GraphError;
use serde::Serialize;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 1.
    #[error("{0}")]
    Runtime(String),
    /// Exit code 2.
    #[error("{0}")]
    Config(String),
    /// Exit code 3.
    #[error("{0}")]
    Resource(String),
    /// Exit code 4.
    #[error("{0}")]
    Io(String),
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    code: i32,
    message: &'a str,
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Runtime(_) => "runtime",
            CliError::Config(_) => "config",
            CliError::Resource(_) => "resource",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Runtime(m) | CliError::Config(m) | CliError::Resource(m) | CliError::Io(m) => m,
        }
    }

    /// One-line JSON form written to stderr.
    pub fn to_json(&self) -> String {
        let line = ErrorLine { error: ErrorBody { kind: self.kind(), code: self.code(), message: self.message() } };
        serde_json::to_string(&line).expect("error line serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Resource(_) => CliError::Resource(e.to_string()),
            GraphError::Construction { .. } | GraphError::Internal(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DlaError> for CliError {
    fn from(e: DlaError) -> Self {
        match e {
            DlaError::Graph(g) => g.into(),
            DlaError::StepBudget(_) => CliError::Resource(e.to_string()),
            DlaError::Config(_) | DlaError::Aggregate(_) => CliError::Config(e.to_string()),
            DlaError::Io(_) => CliError::Io(e.to_string()),
            DlaError::Sampling(_) | DlaError::Internal(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::Graph(g) => g.into(),
            PotentialError::StepBudget(_) | PotentialError::Resource(_) => CliError::Resource(e.to_string()),
            PotentialError::Domain(_) => CliError::Config(e.to_string()),
            PotentialError::Solver(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Domain(_) => CliError::Config(e.to_string()),
            BoundsError::Numeric(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<BeurlingError> for CliError {
    fn from(e: BeurlingError) -> Self {
        match e {
            BeurlingError::Graph(g) => g.into(),
            BeurlingError::Budget { .. } => CliError::Resource(e.to_string()),
            BeurlingError::Domain(_) => CliError::Config(e.to_string()),
        }
    }
}
