use std::fmt;

use vesselrbf::dataio::DataError;
use vesselrbf::metrics::MetricsError;
use vesselrbf::model::ModelError;
use vesselrbf::numerics::NumericsError;
use vesselrbf::training::TrainError;

/// Failure category; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, overrides or incompatible configurations.
    Usage,
    /// Missing files, malformed inputs, I/O failures.
    Data,
    /// Non-finite losses or parameters, failed numerical routines.
    Numerical,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numerical => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self { kind: Kind::Usage, error: anyhow::anyhow!("{msg}") }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self { kind: Kind::Data, error: anyhow::anyhow!("{msg}") }
    }

    pub fn context(mut self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(ctx);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn model_kind(e: &ModelError) -> Kind {
    match e {
        ModelError::Numerics(n) => numerics_kind(n),
        ModelError::InvalidConfig(_) => Kind::Usage,
        _ => Kind::Data,
    }
}

fn numerics_kind(e: &NumericsError) -> Kind {
    match e {
        NumericsError::NonFinite(_) => Kind::Numerical,
        _ => Kind::Data,
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let kind = match &e {
            DataError::Model(m) => model_kind(m),
            DataError::Numerics(n) => numerics_kind(n),
            _ => Kind::Data,
        };
        Self { kind, error: e.into() }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let kind = match &e {
            TrainError::NonFinite { .. } => Kind::Numerical,
            TrainError::InvalidConfig(_) => Kind::Usage,
            TrainError::Model(m) => model_kind(m),
            TrainError::Numerics(n) => numerics_kind(n),
            _ => Kind::Data,
        };
        Self { kind, error: e.into() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self { kind: model_kind(&e), error: e.into() }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self { kind: Kind::Data, error: e.into() }
    }
}

impl From<vesselrbf::lowfi::LowFiError> for CliError {
    fn from(e: vesselrbf::lowfi::LowFiError) -> Self {
        Self { kind: Kind::Data, error: e.into() }
    }
}

impl From<vesselrbf::geometry::GeometryError> for CliError {
    fn from(e: vesselrbf::geometry::GeometryError) -> Self {
        Self { kind: Kind::Data, error: e.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { kind: Kind::Data, error: e.into() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self { kind: Kind::Data, error: e.into() }
    }
}
