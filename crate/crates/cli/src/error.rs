use thiserror::Error;

/// Failures of the command-line front end. Exit status: validation failures
/// (a residual above tolerance, a failed assertion) exit with 1, everything
/// that prevents a run from starting exits with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("environment: {0}")]
    Environment(String),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: qlevy::Error,
    },
}

impl CliError {
    pub fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        let pointer = pointer.into();
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer };
        CliError::Schema { pointer, message: message.into() }
    }

    pub fn io(path: impl Into<String>, e: std::io::Error) -> Self {
        CliError::Io { path: path.into(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Attaches experiment context to library errors.
pub trait Context<T> {
    fn context<S: Into<String>>(self, what: impl FnOnce() -> S) -> Result<T, CliError>;
}

impl<T> Context<T> for qlevy::Result<T> {
    fn context<S: Into<String>>(self, what: impl FnOnce() -> S) -> Result<T, CliError> {
        self.map_err(|source| CliError::Module { context: what().into(), source })
    }
}

/// Escapes one JSON-pointer reference token.
pub fn pointer_token(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}
