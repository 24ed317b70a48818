use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] spca_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Process exit code for an error: 2 invalid config, 3 combinatorial guard,
/// 4 I/O, 1 anything else.
pub fn exit_code(err: &HarnessError) -> i32 {
    use spca_core::Error as Core;
    match err {
        HarnessError::Config(_) => 2,
        HarnessError::Io(_) => 4,
        HarnessError::Core(core) => match core {
            Core::InvalidParam(_) | Core::Parse(_) | Core::DimensionMismatch(_) => 2,
            Core::CombinatorialGuard { .. } => 3,
            Core::Io(_) => 4,
            _ => 1,
        },
    }
}
