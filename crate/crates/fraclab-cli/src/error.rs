use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error, Serialize)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        Self {
            kind: "validation",
            message,
            exit_code: EXIT_VALIDATION,
        }
    }

    pub fn property(message: String) -> Self {
        Self {
            kind: "property_violation",
            message,
            exit_code: EXIT_PROPERTY,
        }
    }

    pub fn no_convergence(message: String) -> Self {
        Self {
            kind: "no_convergence",
            message,
            exit_code: EXIT_NO_CONVERGENCE,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {e}", path.display()),
            exit_code: EXIT_IO,
        }
    }

    /// Prefixes the message with the stage that failed.
    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<fraclab::Error> for CliError {
    fn from(e: fraclab::Error) -> Self {
        use fraclab::Error as E;
        let message = e.to_string();
        let (kind, exit_code) = match e {
            E::InvalidParameter(_)
            | E::GridMismatch(_)
            | E::SymmetryMisaligned { .. }
            | E::ArcMisaligned(_)
            | E::OutOfRange { .. }
            | E::Precondition(_) => ("validation", EXIT_VALIDATION),
            E::Parse { .. } => ("parse", EXIT_VALIDATION),
            E::NoConvergence { .. } | E::Singular(_) => ("no_convergence", EXIT_NO_CONVERGENCE),
            E::PropertyViolation(_) | E::Degenerate { .. } => ("property_violation", EXIT_PROPERTY),
            E::Io(_) => ("io", EXIT_IO),
        };
        Self {
            kind,
            message,
            exit_code,
        }
    }
}
