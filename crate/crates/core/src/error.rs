use alloc::string::String;
use alloc::vec::Vec;

use crate::model::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidScenario(Vec<Violation>),
    #[error("visitor count must be at least 1")]
    NoVisitors,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("degenerate scenario: {0}")]
    Degenerate(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("matrix is not positive semi-definite (minimum eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),
    #[error("unknown scenario id {id:?}; known ids: {known}")]
    UnknownScenario { id: String, known: String },
    #[error("parameter mismatch: {0}")]
    Mismatch(String),
    #[error("empty batch")]
    EmptyBatch,
}

fn format_violations(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{x}"));
    }
    out
}
