//! Synthetic probabilistic-reasoning datasets with oracle labels.

mod config;
mod generate;
mod instance;

use thiserror::Error;

use crate::inference::{InferenceError, NetworkKind};
use crate::rules::RuleError;
use crate::textio::TextError;

pub use config::{
    sample_rule_probability, snap_draw, DatasetStyle, DepthCell, DepthProfile, GenConfig, ProbabilitySampler,
    TrainingSet, DEFAULT_ENTITIES,
};
pub use generate::{
    complex_quota, derive_seed, generate_instance, generate_instance_of_kind, generate_split, rulebert_pool, Target,
};
pub use instance::{read_instances, write_instances, FactRecord, Instance, InstanceRecord, RuleRecord};

#[derive(Debug, Error)]
pub enum DataGenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("depth {depth} is above the configured max_depth {max}")]
    DepthAboveMax { depth: usize, max: usize },
    #[error("no instance found for depth {depth}, label {label}, kind {kind:?} after {attempts} attempts")]
    BudgetExhausted { depth: usize, label: bool, kind: Option<NetworkKind>, attempts: usize },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}
