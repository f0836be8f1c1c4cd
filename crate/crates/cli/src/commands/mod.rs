pub mod eval;
pub mod kg;
pub mod retrieval;
pub mod signal;

use thiserror::Error;

/// A result that should be impossible for any input. Maps to exit code 2.
#[derive(Debug, Error)]
#[error("internal invariant violated: {0}")]
pub struct Internal(pub String);

pub fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}
