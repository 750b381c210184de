use std::fmt;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const PARSE: u8 = 2;
pub const FIT: u8 = 3;
pub const NO_ROWS: u8 = 4;
pub const NO_FEASIBLE: u8 = 5;
pub const SCHEMA: u8 = 6;
pub const INTERNAL: u8 = 1;

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(PARSE, message)
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(SCHEMA, message)
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        Self::new(INTERNAL, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Maps a core error from a fitting step to an exit code.
pub fn from_fit(context: &str, e: eislife_core::Error) -> Failure {
    use eislife_core::Error;
    let code = match e {
        Error::NoFeasibleSubset => NO_FEASIBLE,
        Error::NonPositiveFrequency { .. }
        | Error::MismatchedLengths { .. }
        | Error::NonFiniteValue { .. }
        | Error::DuplicateFrequency { .. }
        | Error::InvalidAge(_)
        | Error::InvalidConfig(_) => PARSE,
        _ => FIT,
    };
    Failure::new(code, format!("{context}: {e}"))
}

pub type CmdResult<T = ()> = Result<T, Failure>;
