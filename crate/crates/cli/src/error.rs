use thiserror::Error;

/// Harness failures, each with its own process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cache version mismatch in {path}: found '{found}'")]
    CacheVersion { path: String, found: String },
    #[error("corrupt cache file {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error("computation failed: {0}")]
    Compute(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Compute(_) => 1,
            HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::CacheVersion { .. } => 4,
            HarnessError::CacheCorrupt { .. } => 5,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

macro_rules! compute_error {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Compute(e.to_string())
            }
        }
    )*};
}

compute_error!(
    ffmoments_core::ffpoly::PolyError,
    ffmoments_core::lfunction::LFunctionError,
    ffmoments_core::moments::MomentsError,
    ffmoments_core::randommodel::ModelError,
    ffmoments_core::complexmoments::ComplexMomentError,
    serde_json::Error
);
