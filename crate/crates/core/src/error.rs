use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    Range(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("patterns are over different alphabets")]
    AlphabetMismatch,
    #[error("symbol {symbol} is not in an alphabet of size {alphabet_size}")]
    InvalidSymbol { symbol: u8, alphabet_size: usize },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
