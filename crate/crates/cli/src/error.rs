use std::path::PathBuf;

use phaseforge::io::FormatError;

use crate::config::Origin;

/// Exit status for input, configuration and schema problems.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for failures during computation or while writing results.
pub const EXIT_COMPUTE: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}:{line}: `{field}`: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{}: {message}", describe(*field, *origin))]
    Invalid {
        field: &'static str,
        origin: Origin,
        message: String,
    },

    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Schema { path: PathBuf, source: FormatError },

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: FormatError },

    #[error(transparent)]
    Compute(#[from] phaseforge::Error),
}

fn describe(field: &str, origin: Origin) -> String {
    match origin {
        Origin::Flag => format!("--{field}"),
        Origin::ConfigLine(line) => format!("config line {line}: `{field}`"),
        Origin::Default => format!("`{field}`"),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config { .. } | Self::Invalid { .. } | Self::Input { .. } | Self::Schema { .. } => {
                EXIT_INPUT
            }
            Self::Compute(phaseforge::Error::InvalidParameter { .. } | phaseforge::Error::NonPositiveAlpha(_)) => {
                EXIT_INPUT
            }
            Self::Output { .. } | Self::Compute(_) => EXIT_COMPUTE,
        }
    }
}
