use std::fmt;

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_NEVER_SATISFIED: u8 = 4;

/// Failures with a dedicated exit code. Anything else exits with 1.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    NeverSatisfied(Vec<String>),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::NeverSatisfied(seqs) => write!(
                f,
                "encoder thresholds never satisfied in {}",
                seqs.join(", ")
            ),
        }
    }
}

impl std::error::Error for Failure {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Failure>() {
        Some(Failure::Validation(_)) => EXIT_VALIDATION,
        Some(Failure::NeverSatisfied(_)) => EXIT_NEVER_SATISFIED,
        None => EXIT_ERROR,
    }
}

pub fn invalid(message: impl Into<String>) -> anyhow::Error {
    Failure::Validation(message.into()).into()
}
