// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(u64),

    #[error("{0} is not a prime")]
    InvalidPrime(u64),

    #[error("dimension {dim} exceeds the configured limit of {limit}")]
    DimensionLimit { dim: u64, limit: u64 },

    #[error("invalid field modulus: {0}")]
    InvalidModulus(String),

    #[error("field mismatch: element does not belong to this field")]
    FieldMismatch,

    #[error("invalid field element: {0}")]
    InvalidElement(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension {0} is not a prime power; use the composite pipeline")]
    UnsupportedDimension(u64),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("probability table is missing settings: {}", .0.join(", "))]
    MissingSettings(Vec<String>),

    #[error("setting {setting}: expected {expected} outcomes, found {found}")]
    LengthMismatch {
        setting: String,
        expected: usize,
        found: usize,
    },

    #[error("inconsistent probability table: {0}")]
    InconsistentTable(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("slot {slot} out of range for {slots} tensor factors")]
    SlotOutOfRange { slot: usize, slots: usize },

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
