use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("division by zero in F_{0}")]
    DivisionByZero(u64),

    #[error("function lives on the {found} side, expected {expected}")]
    WrongSide {
        expected: &'static str,
        found: &'static str,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension {0} outside the supported range 1..=6")]
    DimensionOutOfRange(usize),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate quadratic: leading coefficient is zero")]
    DegenerateQuadratic,

    #[error("variety is empty")]
    EmptyVariety,

    #[error("grid size q^d = {size} for q = {q}, d = {d} exceeds the cap {cap}")]
    CapExceeded {
        q: u64,
        d: usize,
        size: u128,
        cap: u128,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
