use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameter, unknown key, or an undefined flow-matrix cell.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("initialization error: {0}")]
    Initialization(String),

    /// Stock-flow identity violated beyond tolerance.
    #[error("stock-flow consistency violated at step {step}: {label} residual {residual:e}")]
    Consistency {
        step: u32,
        label: String,
        residual: f64,
    },

    /// The model reached a state its equations cannot represent.
    #[error("structural error at step {step}: {message}")]
    Structural { step: u32, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
