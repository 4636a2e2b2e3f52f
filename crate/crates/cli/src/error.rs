use std::fmt::Display;

/// Why a command failed; decides the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Bad flags, config or input files.
    Input(String),
    /// Anything that went wrong after the inputs were accepted.
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Context<T> {
    fn input(self, what: impl Display) -> CmdResult<T>;
    fn internal(self, what: impl Display) -> CmdResult<T>;
}

impl<T, E: Display> Context<T> for Result<T, E> {
    fn input(self, what: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Input(format!("{what}: {e}")))
    }

    fn internal(self, what: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Internal(format!("{what}: {e}")))
    }
}
