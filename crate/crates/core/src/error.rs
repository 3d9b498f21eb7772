use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("png error: {0}")]
    Png(#[from] image::ImageError),

    #[error("unsupported png layout for {path}: expected 8-bit rgb")]
    UnsupportedPng { path: PathBuf },

    #[error("pfm parse error at byte {offset}: {message}")]
    PfmParse { offset: usize, message: String },

    #[error("pfm data is not finite at sample {index}")]
    PfmNotFinite { index: usize },

    #[error("crf csv parse error at line {line}: {message}")]
    CrfCsvParse { line: usize, message: String },

    #[error("crf table is not monotone non-decreasing (channel {channel}, row {row})")]
    NonMonotoneCrf { channel: usize, row: usize },

    #[error("invalid crf table: {0}")]
    InvalidCrf(String),

    #[error("image dimensions mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("feature map shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("tensor file parse error at line {line}: {message}")]
    TensorParse { line: usize, message: String },

    #[error("missing tensor entry `{0}`")]
    MissingTensor(String),

    #[error("attention map too large: {positions} spatial positions (limit {limit})")]
    AttentionTooLarge { positions: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exposure time must be positive, got {0}")]
    NonPositiveExposure(f64),

    #[error("unknown refiner `{0}`")]
    UnknownRefiner(String),

    #[error("image too small: {got:?}, need at least {min:?}")]
    ImageTooSmall {
        got: (usize, usize),
        min: (usize, usize),
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a pipeline stage name to an error bubbling up through the
    /// restoration pipeline.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
