use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("not a P6 PPM (magic {0:?})")]
    NotP6(String),

    #[error("malformed PPM header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0}: only 16-bit PPM (maxval 65535) is accepted")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("missing sidecar metadata {0}")]
    MissingSidecar(PathBuf),

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("black level already subtracted; subtracting twice would corrupt the data")]
    AlreadySubtracted,

    #[error(
        "refusing to run {operation} on an image whose black level has not been subtracted; \
         subtract the black level first (or pass --unsafe-allow-unsubtracted to reproduce the wrong pipeline deliberately)"
    )]
    BlackLevelNotSubtracted { operation: &'static str },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("invalid illuminant {0}")]
    InvalidIlluminant(String),

    #[error("all pixels are masked out")]
    AllMasked,

    #[error("invalid estimator: {0}")]
    InvalidEstimator(String),

    #[error("derivative order {0} requires sigma > 0")]
    SigmaRequired(u8),

    #[error("no usable achromatic patch (all patches clipped)")]
    NoUsablePatch,

    #[error("region {index} of {image_id} lies outside the {width}x{height} image")]
    OutOfBounds {
        image_id: String,
        index: usize,
        width: usize,
        height: usize,
    },

    #[error("region {index} of {image_id} covers no pixel centre")]
    EmptyRegion { image_id: String, index: usize },

    #[error("region {label:?} contains clipped pixels")]
    ClippedRegion { label: String },

    #[error("the two inputs share no image id")]
    EmptyIntersection,

    #[error("empty input")]
    EmptyInput,

    #[error("duplicate image id {0:?}")]
    DuplicateId(String),

    #[error("unknown image id {0:?}")]
    UnknownId(String),

    #[error("camera {camera_id:?} has {count} point(s); at least 2 are required")]
    TooFewPoints { camera_id: String, count: usize },

    #[error("invalid folds: {0}")]
    InvalidFolds(String),

    #[error("runs use different ground truths ({0}); refusing to tabulate them together without --force-mixed")]
    MixedGroundTruth(String),

    #[error("correlated colour temperature {0} K outside [1000, 20000] K")]
    CctOutOfRange(f64),

    #[error("render is saturated everywhere; lower the gain")]
    AllSaturated,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
