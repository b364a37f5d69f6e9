use thiserror::Error;

/// Position of a trajectory inside an ensemble: `(master seed, trajectory index)`.
pub type SeedPath = (u64, u64);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: exponent {exponent} overflows f64")]
    Range { exponent: f64 },

    /// A domain-type invariant does not hold.
    #[error("invalid {field}: {constraint}")]
    Invalid {
        field: &'static str,
        constraint: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    /// `rate * dt` is outside the first-order flip regime.
    #[error("precision error: rate*dt = {rate_dt} exceeds 0.1, subdivide the step")]
    Precision { rate_dt: f64 },

    #[error("integration blowup at step {step}{}", fmt_path(.seed_path))]
    Blowup {
        step: u64,
        seed_path: Option<SeedPath>,
    },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

fn fmt_path(path: &Option<SeedPath>) -> String {
    match path {
        Some((seed, idx)) => format!(" (seed {seed}, trajectory {idx})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            constraint: constraint.into(),
        }
    }

    /// Process exit status for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Blowup { .. } => 3,
            Error::Inconclusive(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    /// Attach a seed path to a blowup raised deeper in the stack.
    pub fn with_seed_path(self, path: SeedPath) -> Self {
        match self {
            Error::Blowup { step, .. } => Error::Blowup {
                step,
                seed_path: Some(path),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
