use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: image is {image_w}x{image_h}, mask is {mask_w}x{mask_h}")]
    DimensionMismatch {
        image_w: u32,
        image_h: u32,
        mask_w: u32,
        mask_h: u32,
    },

    #[error("every pixel is excluded by the mask; no skin region left")]
    EmptyRegion,

    #[error("ITA is undefined at L = 50, b = 0")]
    DegeneratePoint,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("label `{0}` is not in the declared label set")]
    UnknownLabel(String),

    #[error("no ITA result for image id(s): {}", .0.join(", "))]
    MissingIta(Vec<String>),

    #[error("duplicate record for image `{image_id}` in split `{split_id}`")]
    DuplicateRecord { image_id: String, split_id: String },

    #[error("trend fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),

    #[error("trend fit needs distinct x values")]
    DegenerateX,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("Lab ({l:.3}, {a:.3}, {b:.3}) is outside the sRGB gamut")]
    Unrepresentable { l: f64, a: f64, b: f64 },

    #[error("image decode failed: {0}")]
    Decode(String),

    #[error("{what} line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: u64,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no evaluable pairs")]
    NoEvaluablePairs,

    #[error("image `{image_id}`: {source}")]
    Image {
        image_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn for_image(self, image_id: &str) -> Self {
        Error::Image {
            image_id: image_id.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag, used in skip records and CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptyRegion => "empty_region",
            Error::DegeneratePoint => "degenerate_point",
            Error::EmptyInput(_) => "empty_input",
            Error::UnknownLabel(_) => "unknown_label",
            Error::MissingIta(_) => "missing_ita",
            Error::DuplicateRecord { .. } => "duplicate_record",
            Error::InsufficientPoints(_) => "insufficient_points",
            Error::DegenerateX => "degenerate_x",
            Error::ZeroVariance(_) => "zero_variance",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Unrepresentable { .. } => "unrepresentable_color",
            Error::Decode(_) => "decode_error",
            Error::Parse { .. } => "parse_error",
            Error::Config(_) => "config_error",
            Error::NoEvaluablePairs => "no_evaluable_pairs",
            Error::Image { source, .. } => source.kind(),
            Error::Io { .. } => "io_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
        }
    }
}
