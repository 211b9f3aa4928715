//! Probabilistic reasoning over textual rules: exact inference, dataset
//! generation, step constraints, constrained training and evaluation.
//!
//! Numeric kernels (constraint violations, losses, the predictor) are
//! generic over [`Scalar`]; the aliases below fix the precision.

pub mod constraints;
pub mod datagen;
pub mod inference;
pub mod metrics;
pub mod rules;
pub mod scalar;
pub mod textio;
pub mod trainer;

pub use constraints::{build_constraints, AugmentedInstance, Constraint, Query};
pub use datagen::{generate_instance, generate_split, GenConfig, Instance};
pub use inference::{infer_exact, infer_simple, solve, NetworkKind, Solution};
pub use metrics::{evaluate, EvalReport};
pub use rules::{Adverb, Atom, Entity, Fact, Predicate, Rule, Theory};
pub use scalar::Scalar;
pub use textio::{RuleStyle, Vocabulary};
pub use trainer::{train, LossKind, TrainConfig, TrainReport};

pub type Predictor = trainer::Predictor<f64>;
pub type Predictor32 = trainer::Predictor<f32>;
pub type Trainer = trainer::Trainer<f64>;
pub type Trainer32 = trainer::Trainer<f32>;
pub type TrainerState = trainer::TrainerState<f64>;
