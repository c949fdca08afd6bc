use thiserror::Error;

/// Errors produced by formation construction, characterization, and the
/// optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested formation or subproblem start violates the active
    /// constraint set.
    #[error("infeasible ({constraint}): {detail}")]
    Infeasible { constraint: String, detail: String },

    /// Direction placement ran out of candidates after the documented
    /// relaxation attempts; `placed` users already hold assignments.
    #[error("direction search exhausted after placing {placed} of {total} users: {detail}")]
    SearchExhausted {
        placed: usize,
        total: usize,
        detail: String,
    },

    /// The interior-point kernel stopped without reaching its tolerance.
    /// The partial objective trace is attached for diagnosis.
    #[error("convex kernel failed to converge: {detail}")]
    KernelDiverged { detail: String, trace: Vec<f64> },

    /// More users were requested than mutually non-interfering directions
    /// exist for the array/sector combination.
    #[error("requested {requested} users but only {available} interference-free directions exist")]
    NotEnoughDirections { requested: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
