use std::path::Path;

use accsev::forest::ForestError;
use accsev::prep::PrepError;
use accsev::table::TableError;

/// A failed command. `Usage` covers bad flags, configs and inputs (exit 2);
/// `Compute` covers failures inside a pipeline stage (exit 1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn compute(msg: impl Into<String>) -> Self {
        CliError::Compute(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => m,
        }
    }

    /// Upstream artifact not found.
    pub fn missing_artifact(path: &Path, producer: &str) -> Self {
        CliError::Usage(format!(
            "missing {}: run `accsev {producer}` first",
            path.display()
        ))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Compute(format!("cannot write {}: {e}", path.display()))
    }

    /// Wraps a library error from `stage`, sorting input problems from
    /// computation failures.
    pub fn stage(stage: &str, e: impl Into<accsev::Error>) -> Self {
        let e = e.into();
        let msg = format!("{stage}: {e}");
        let input_problem = match &e {
            accsev::Error::Table(_) => true,
            accsev::Error::Prep(p) => matches!(
                p,
                PrepError::Table(_)
                    | PrepError::Config(_)
                    | PrepError::MissingColumn(_)
                    | PrepError::SeverityDomain { .. }
                    | PrepError::ConfigFile { .. }
            ),
            accsev::Error::Forest(f) => matches!(
                f,
                ForestError::Table(TableError::UnknownColumn(_))
                    | ForestError::Config(_)
                    | ForestError::Version { .. }
                    | ForestError::Corrupt { .. }
                    | ForestError::SchemaMismatch(_)
                    | ForestError::UnknownPositive { .. }
                    | ForestError::Io { .. }
            ),
            _ => false,
        };
        if input_problem {
            CliError::Usage(msg)
        } else {
            CliError::Compute(msg)
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}
