use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },

    #[error("no sample is predicted as class {0}")]
    EmptyClass(usize),

    #[error("feature {feature} out of range for input length {length}")]
    FeatureOutOfRange { feature: usize, length: usize },

    #[error("invalid filter range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("filter selects no samples")]
    EmptySelection,

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("unsupported capture format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed data at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid weight file: {0}")]
    InvalidWeights(String),

    #[error("{file}: {source}")]
    InFile {
        file: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_file(self, file: impl Into<String>) -> Self {
        Error::InFile { file: file.into(), source: Box::new(self) }
    }

    /// Innermost error, looking through file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }
}
