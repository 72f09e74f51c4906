use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration, arguments or input files are malformed.
    #[error("invalid input: {0}")]
    Input(String),

    /// A library routine failed on valid input.
    #[error("{0}")]
    Compute(#[from] matphi::Error),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 3 for invalid input, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 3,
            Self::Compute(e) if is_input_error(e) => 3,
            _ => 1,
        }
    }
}

fn is_input_error(e: &matphi::Error) -> bool {
    use matphi::Error::*;
    matches!(
        e,
        NotSquare(..)
            | DimensionMismatch { .. }
            | SpaceMismatch
            | InvalidMeasure(_)
            | InvalidEnsemble(_)
            | InvalidArgument(_)
            | NotUnital(_)
            | MassNotConserved(_)
            | Reducible(_)
            | Io(_)
            | Json(_)
    )
}

pub type Result<T> = std::result::Result<T, CliError>;
