use std::path::PathBuf;

use crate::tensor::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("transform `{name}` is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { name: String, deviation: f64 },

    #[error("bad magic: expected \"LICW\", found {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported LICW version {0} (expected 1)")]
    UnsupportedVersion(u32),

    #[error("header length {declared} exceeds file size {available}")]
    HeaderLength { declared: u64, available: u64 },

    #[error("payload length mismatch: header declares {expected} bytes, file holds {actual}")]
    PayloadLength { expected: u64, actual: u64 },

    #[error("shape inconsistency: {0}")]
    ShapeInconsistency(String),

    #[error("malformed weight header")]
    Header(#[from] serde_json::Error),

    #[error("decoding channel {channel} failed")]
    Channel {
        channel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("png encoding failed")]
    PngEncode(#[from] png::EncodingError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
