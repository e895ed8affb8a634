use thiserror::Error;

/// A parameter block failed validation. `key` is the config key of the
/// offending value.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid value for `{key}`: {reason}")]
pub struct ParamError {
    pub key: &'static str,
    pub reason: String,
}

impl ParamError {
    pub fn new(key: &'static str, reason: impl Into<String>) -> Self {
        Self {
            key,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RbfError {
    #[error("network needs at least one neuron")]
    Empty,
    #[error("width of neuron {index} must be positive, got {width}")]
    BadWidth { index: usize, width: f64 },
    #[error("neurons {first} and {second} share the same center")]
    DuplicateCenter { first: usize, second: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set has {inputs} inputs but {targets} targets")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("training input {0} is not finite")]
    NonFiniteInput(usize),
    #[error("singular value decomposition did not produce factors")]
    Decomposition,
    #[error("network text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    Params(#[from] ParamError),
    #[error("non-finite integrator stage at t = {t:.6} s")]
    NonFinite { t: f64 },
    #[error("state diverged at t = {t:.6} s: |x| = {x:e} m exceeds {limit:e} m")]
    Diverged { t: f64, x: f64, limit: f64 },
    #[error("network training failed at t = {t:.3} s: {reason}")]
    Training { t: f64, reason: String },
    #[error("empty metrics window [{start}, {end}] s")]
    EmptyWindow { start: f64, end: f64 },
}

pub type SimResult<T> = Result<T, SimError>;
