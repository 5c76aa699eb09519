//! Shared domain types: constellation, beliefs, configuration and the
//! sub-array partition.

mod belief;
mod config;
mod constellation;
mod partition;

pub use belief::{gaussian_to_belief, normalize, DiscreteBelief};
pub(crate) use belief::{neg_inf, pos_inf, safe_ln};
pub use config::{
    parse_key_values, parse_real, parse_real_list, ConfigEntry, LambdaInit, Schedule,
    SystemConfig, VrLengthModel, SYSTEM_KEYS,
};
pub use constellation::Constellation;
pub use partition::{partition, SubArrayIndexing};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("probability mass underflowed to zero")]
    Underflow,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}
