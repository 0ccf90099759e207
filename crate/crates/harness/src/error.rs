use thiserror::Error;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data validation error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 data validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(_) | HarnessError::Io { .. } => 2,
            HarnessError::Numerical(_) => 3,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<sparse_hawkes::Error> for HarnessError {
    fn from(e: sparse_hawkes::Error) -> Self {
        use sparse_hawkes::Error as E;
        match e {
            E::Usage(_) | E::ParameterDomain(_) | E::Supercritical(_) => {
                HarnessError::Usage(e.to_string())
            }
            E::InsufficientData(_) | E::InvalidSeries(_) => HarnessError::Data(e.to_string()),
            E::Numerical(_) => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => HarnessError::Data(format!("csv i/o: {e}")),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Data(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
