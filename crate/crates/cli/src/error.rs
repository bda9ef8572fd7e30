use std::io;
use std::path::Path;

use mallows_dpm::dpm::DpmError;
use mallows_dpm::eval::EvalError;
use mallows_dpm::gm::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A bad line in an input file, reported as `path:line: message`.
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for usage errors, 3 for data errors, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Malformed { .. } | CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        CliError::Malformed {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

impl From<DpmError> for CliError {
    fn from(e: DpmError) -> Self {
        match e {
            DpmError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            DpmError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let nan: CliError = DpmError::NonFinite {
            sweep: 3,
            what: "assignment weight",
        }
        .into();
        assert_eq!(nan.exit_code(), 4);
        assert_eq!(
            CliError::from(DpmError::InvalidConfig("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(DpmError::ItemCountMismatch {
                expected: 3,
                found: 4
            })
            .exit_code(),
            3
        );
        assert_eq!(
            CliError::from(EvalError::LengthMismatch(1, 2)).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(EvalError::InvalidSpec("k".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::malformed(Path::new("f"), 7, "bad").to_string(),
            "f:7: bad"
        );
    }
}
