use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime { message: String, path: Option<String> },
}

impl CliError {
    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime {
            message: message.into(),
            path: None,
        }
    }

    pub fn at(path: impl std::fmt::Display, message: impl Into<String>) -> Self {
        CliError::Runtime {
            message: message.into(),
            path: Some(path.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let value = match self {
            CliError::Usage(message) => json!({"error": {"kind": "usage", "message": message}}),
            CliError::Runtime { message, path } => {
                json!({"error": {"kind": "runtime", "message": message, "path": path}})
            }
        };
        value.to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Runtime { message, path: Some(p) } => write!(f, "{p}: {message}"),
            CliError::Runtime { message, path: None } => f.write_str(message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<capforge_core::Error> for CliError {
    fn from(e: capforge_core::Error) -> Self {
        use capforge_core::Error;
        match &e {
            Error::Io { path, source } => CliError::at(path.display(), source.to_string()),
            Error::Malformed { source_name, .. } => CliError::at(source_name, e.to_string()),
            Error::InvalidFractions(_) | Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

impl From<capforge_core::annotation::AnnotationError> for CliError {
    fn from(e: capforge_core::annotation::AnnotationError) -> Self {
        CliError::runtime(e.to_string())
    }
}
