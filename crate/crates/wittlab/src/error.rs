use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("Morse violation: {0}")]
    MorseViolation(String),
    #[error("transversality: {0}")]
    Transversality(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("hbar too small for mesh: max |df|/hbar = {ratio:.3e}")]
    HbarTooSmall { ratio: f64 },
    #[error("cutoff too large: more than {limit} resonance entries")]
    CutoffTooLarge { limit: usize },
    #[error("window error: {0}")]
    Window(String),
    #[error("fit window error: {0}")]
    FitWindow(String),
    #[error("ill-conditioned basis: {0}")]
    Conditioning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
