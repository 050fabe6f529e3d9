use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Inputs violate a precondition.
    Validation(String),
    /// A solver could not produce a finite answer.
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {}", m),
            CliError::Numerical(m) => write!(f, "numerical failure: {}", m),
            CliError::Io(m) => write!(f, "i/o error: {}", m),
        }
    }
}

impl From<rankrace::Error> for CliError {
    fn from(e: rankrace::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
