use std::fmt;

use kobalt_core::Error;

/// Why a run stopped, mapped onto the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad config, bad parameters or inputs the domain rejects.
    Validation(String),
    /// The numerics contradicted themselves, e.g. a lower end above an upper end.
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Numerical(m) => write!(f, "numerical inconsistency: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InternalInconsistency(_) | Error::NoConvergence(_) | Error::BracketFailure => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::PointOutsideDomain { r: 0.1 }).exit_code(), 2);
        assert_eq!(Failure::from(Error::EscapeDetected { step: 1, r: 0.3 }).exit_code(), 2);
        assert_eq!(Failure::from(Error::InternalInconsistency("lower > upper".into())).exit_code(), 3);
        assert_eq!(Failure::from(Error::NoConvergence("x".into())).exit_code(), 3);
    }
}
