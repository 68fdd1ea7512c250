use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Unsupported(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Unsupported(m) => write!(f, "unsupported: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<opgrowth::Error> for CliError {
    fn from(e: opgrowth::Error) -> Self {
        use opgrowth::Error as E;
        match e {
            E::Domain(m) => CliError::Config(m),
            E::Unsupported(m) => CliError::Unsupported(m),
            E::Resource(m) => CliError::Unsupported(format!("resource guard: {m}")),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
