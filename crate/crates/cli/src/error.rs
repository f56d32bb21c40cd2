use serde::Serialize;

pub const ERROR_SCHEMA: &str = "sepeval.error/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Usage,
    Data,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Internal => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Data, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Internal, message: message.into() }
    }

    /// The machine-readable record written to stderr on failure.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            schema: &'a str,
            kind: Kind,
            exit_code: i32,
            message: &'a str,
        }
        serde_json::to_string(&Record {
            schema: ERROR_SCHEMA,
            kind: self.kind,
            exit_code: self.kind.exit_code(),
            message: &self.message,
        })
        .expect("plain record serializes")
    }
}

impl From<sepeval::Error> for CliError {
    fn from(e: sepeval::Error) -> Self {
        let kind = match e {
            sepeval::Error::InvalidParameter { .. } => Kind::Usage,
            sepeval::Error::Numerical(_) => Kind::Internal,
            _ => Kind::Data,
        };
        CliError { kind, message: e.to_string() }
    }
}

/// Attaches the failing path to an I/O error.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}
