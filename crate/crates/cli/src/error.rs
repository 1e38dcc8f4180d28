use std::fmt;

use labournet_core::ErrorKind;

/// A failure raised by the command layer itself (as opposed to the core
/// library), tagged with the exit-code class it belongs to.
#[derive(Debug)]
pub struct Failure {
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn input_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        kind: ErrorKind::Input,
        message: message.into(),
    }
    .into()
}

pub fn constraint_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        kind: ErrorKind::Constraint,
        message: message.into(),
    }
    .into()
}

pub fn internal_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        kind: ErrorKind::Internal,
        message: message.into(),
    }
    .into()
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Exit code for an error: 2 input, 3 constraint violation, 4 internal
/// fault. Anything unclassified counts as an input problem.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        let kind = if let Some(e) = cause.downcast_ref::<labournet_core::Error>() {
            Some(e.kind())
        } else {
            cause.downcast_ref::<Failure>().map(|f| f.kind)
        };
        match kind {
            Some(ErrorKind::Input) => return EXIT_INPUT,
            Some(ErrorKind::Constraint) => return EXIT_CONSTRAINT,
            Some(ErrorKind::Internal) => return EXIT_INTERNAL,
            None => {}
        }
    }
    EXIT_INPUT
}
