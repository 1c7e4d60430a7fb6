use std::fmt;

/// The module an error originated from; used to build module-qualified codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Sieve,
    MultFunc,
    LogMeasure,
    Entropy,
    GraphModel,
    Circle,
    Cli,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Sieve => "sieve",
            Module::MultFunc => "multfunc",
            Module::LogMeasure => "logmeasure",
            Module::Entropy => "entropy",
            Module::GraphModel => "graphmodel",
            Module::Circle => "circle",
            Module::Cli => "cli",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{module}: invalid argument: {message}")]
    InvalidArgument { module: Module, message: String },

    #[error("{module}: budget exceeded: {message}")]
    Budget { module: Module, message: String },

    #[error("graphmodel: no primes in ({lo}, {hi}]")]
    EmptyPrimeWindow { lo: f64, hi: f64 },

    #[error("entropy: support of p is not contained in support of q")]
    SupportMismatch,

    #[error("{module}: i/o error: {message}")]
    Io { module: Module, message: String },
}

impl Error {
    pub(crate) fn arg(module: Module, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn budget(module: Module, message: impl Into<String>) -> Self {
        Error::Budget {
            module,
            message: message.into(),
        }
    }

    pub fn module(&self) -> Module {
        match self {
            Error::InvalidArgument { module, .. } | Error::Budget { module, .. } | Error::Io { module, .. } => *module,
            Error::EmptyPrimeWindow { .. } => Module::GraphModel,
            Error::SupportMismatch => Module::Entropy,
        }
    }

    /// Module-qualified code such as `sieve.budget`.
    pub fn code(&self) -> String {
        let kind = match self {
            Error::InvalidArgument { .. } => "argument",
            Error::Budget { .. } => "budget",
            Error::EmptyPrimeWindow { .. } => "empty-prime-window",
            Error::SupportMismatch => "support",
            Error::Io { .. } => "io",
        };
        format!("{}.{}", self.module(), kind)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
