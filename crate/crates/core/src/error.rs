use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported parameter {name} = {value}")]
    Unsupported { name: &'static str, value: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("model {model} produced a non-finite value")]
    NonFinite { model: String },

    #[error("blow-up at step {step} (t = {t}, |x|_H = {norm})")]
    BlowUp { step: usize, t: f64, norm: f64 },
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
