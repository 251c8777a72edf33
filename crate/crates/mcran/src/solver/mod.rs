use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("placeholder")] Placeholder,
}
