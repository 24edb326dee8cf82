//! CLI-level errors. Everything here maps to exit code 2 with a diagnostic
//! on the error stream.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Usage(String),
    Lib(phiconvex::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! from_lib {
    ($($ty:ty),+) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::Lib(e.into())
            }
        }
    )+};
}

from_lib!(
    phiconvex::Error,
    phiconvex::DomainError,
    phiconvex::ConvexityError,
    phiconvex::HadamardError,
    phiconvex::NormGeomError,
    phiconvex::QuadError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e)
    }
}
