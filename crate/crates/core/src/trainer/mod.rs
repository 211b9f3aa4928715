//! Probability predictor trained on task loss plus weighted constraint
//! violations (`task + Σ λ_i C_i`), with warm-up epochs and multipliers
//! that grow with their violation.

mod features;
mod network;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{AugmentedInstance, Constraint, ConstraintError};
use crate::datagen::{derive_seed, Instance};
use crate::rules::Atom;
use crate::scalar::Scalar;
use crate::textio::Vocabulary;

pub use features::{FeatureMap, SparseVec};
pub use network::{Gradient, Layer, OutputInit, Predictor, Trace};

/// Clamp applied to predictions inside the cross-entropy.
pub const CE_EPSILON: f64 = 1e-7;

/// Format tag and version written into predictor files.
pub const PREDICTOR_FORMAT: &str = "pct-predictor";
pub const PREDICTOR_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("augmented record {0} has no instance in the training set")]
    MissingBase(String),
    #[error("{left} violations but {right} multipliers")]
    Misaligned { left: usize, right: usize },
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("unsupported predictor file: {0}")]
    Format(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Soft-target binary cross-entropy.
    #[default]
    Ce,
    Mse,
}

impl FromStr for LossKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" => Ok(LossKind::Ce),
            "mse" => Ok(LossKind::Mse),
            other => Err(TrainError::InvalidConfig(format!("unknown loss kind {other:?}"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Ce => "ce",
            LossKind::Mse => "mse",
        })
    }
}

fn ce_clamp<T: Scalar>(pred: T) -> (T, bool) {
    let eps = T::of(CE_EPSILON);
    let hi = T::one() - eps;
    if pred < eps {
        (eps, true)
    } else if pred > hi {
        (hi, true)
    } else {
        (pred, false)
    }
}

pub fn task_loss<T: Scalar>(pred: T, gold: T, kind: LossKind) -> T {
    match kind {
        LossKind::Ce => {
            let (p, _) = ce_clamp(pred);
            -(gold * p.ln() + (T::one() - gold) * (T::one() - p).ln())
        }
        LossKind::Mse => (pred - gold) * (pred - gold),
    }
}

/// Derivative of [`task_loss`] in `pred`; zero where the CE clamp is active.
pub fn task_loss_grad<T: Scalar>(pred: T, gold: T, kind: LossKind) -> T {
    match kind {
        LossKind::Ce => match ce_clamp(pred) {
            (_, true) => T::zero(),
            (p, false) => -gold / p + (T::one() - gold) / (T::one() - p),
        },
        LossKind::Mse => T::of(2.0) * (pred - gold),
    }
}

/// `task + Σ λ_i C_i`.
pub fn pct_loss<T: Scalar>(task: T, violations: &[T], lambdas: &[T]) -> Result<T> {
    if violations.len() != lambdas.len() {
        return Err(TrainError::Misaligned { left: violations.len(), right: lambdas.len() });
    }
    Ok(task + violations.iter().zip(lambdas).map(|(&c, &l)| l * c).sum::<T>())
}

/// `λ_i += α·C_i` for every `C_i ≥ threshold`, then `α *= decay`.
pub fn update_lambdas<T: Scalar>(
    lambdas: &mut [T],
    alpha: &mut T,
    violations: &[T],
    threshold: T,
    decay: T,
) -> Result<()> {
    if violations.len() != lambdas.len() {
        return Err(TrainError::Misaligned { left: violations.len(), right: lambdas.len() });
    }
    for (l, &c) in lambdas.iter_mut().zip(violations) {
        if c >= threshold {
            *l = *l + *alpha * c;
        }
    }
    *alpha = *alpha * decay;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Add the constraint term after warm-up.
    pub pct: bool,
    pub hidden: Vec<usize>,
    pub output_init: OutputInit,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_epochs: usize,
    pub epochs: usize,
    pub alpha0: f64,
    pub decay: f64,
    /// Violations below this leave their multiplier alone.
    pub lambda_threshold: f64,
    /// Augmented instances sampled per step; `None` means `batch_size`.
    pub constraint_batch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Ce,
            pct: false,
            hidden: vec![64],
            output_init: OutputInit::Xavier,
            learning_rate: 0.1,
            batch_size: 16,
            warmup_epochs: 10,
            epochs: 40,
            alpha0: 0.1,
            decay: 0.9,
            lambda_threshold: 0.01,
            constraint_batch: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.warmup_epochs > self.epochs {
            return bad("warmup_epochs exceeds epochs");
        }
        if self.batch_size == 0 || self.constraint_batch == Some(0) {
            return bad("batch sizes must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.001..=1.0).contains(&self.alpha0) {
            return bad("alpha0 must lie in [0.001, 1.0]");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda_threshold) {
            return bad("lambda_threshold must lie in [0, 1]");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be nonempty");
        }
        Ok(())
    }

    fn m(&self) -> usize {
        self.constraint_batch.unwrap_or(self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub constrained: bool,
    /// Mean task loss over the training set after the epoch.
    pub task_loss: f64,
    pub mean_violation: Option<f64>,
    pub cs10: Option<f64>,
    /// α after this epoch's decay.
    pub alpha: f64,
    pub lambda_sum: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub parameter_count: usize,
    pub examples: usize,
    pub constraints: usize,
    pub epochs: Vec<EpochRecord>,
    pub final_task_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainerState<T: Scalar> {
    /// One multiplier per constraint, in augmented-file order.
    pub lambdas: Vec<T>,
    pub alpha: T,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

struct Group<T> {
    queries: Vec<SparseVec<T>>,
    constraints: Vec<Constraint>,
    lambda_offset: usize,
}

/// Training loop with its data pre-encoded. Warm-up epochs never touch the
/// constraint sampler, so a run that stops at the end of warm-up matches a
/// plain task-loss run bit for bit.
pub struct Trainer<T: Scalar> {
    cfg: TrainConfig,
    predictor: Predictor<T>,
    examples: Vec<(SparseVec<T>, T)>,
    groups: Vec<Group<T>>,
    constrained_groups: Vec<usize>,
    state: TrainerState<T>,
    task_rng: ChaCha8Rng,
    constraint_rng: ChaCha8Rng,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(
        cfg: TrainConfig,
        dataset: &[Instance],
        augmented: &[AugmentedInstance],
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        cfg.validate()?;
        if dataset.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        let features = FeatureMap::new(vocabulary);
        let predictor = Predictor::new(features, &cfg.hidden, cfg.output_init, derive_seed(cfg.seed, 0));
        let fm = predictor.feature_map();
        let examples = dataset
            .iter()
            .map(|i| (fm.encode(&i.theory, i.rules_in_context, &i.hypothesis), T::of(i.gold_probability)))
            .collect();
        let by_id: BTreeMap<&str, &Instance> = dataset.iter().map(|i| (i.id.as_str(), i)).collect();
        let mut groups = Vec::with_capacity(augmented.len());
        let mut offset = 0;
        for a in augmented {
            a.validate()?;
            let base = by_id.get(a.base_id.as_str()).ok_or_else(|| TrainError::MissingBase(a.base_id.clone()))?;
            groups.push(Group {
                queries: a.queries.iter().map(|q| fm.encode(&base.theory, base.rules_in_context, &q.atom)).collect(),
                constraints: a.constraints.clone(),
                lambda_offset: offset,
            });
            offset += a.constraints.len();
        }
        let constrained_groups = (0..groups.len()).filter(|&g| !groups[g].constraints.is_empty()).collect();
        let state =
            TrainerState { lambdas: vec![T::zero(); offset], alpha: T::of(cfg.alpha0), epoch: 0, history: Vec::new() };
        Ok(Trainer {
            task_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1)),
            constraint_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2)),
            cfg,
            predictor,
            examples,
            groups,
            constrained_groups,
            state,
        })
    }

    pub fn predictor(&self) -> &Predictor<T> {
        &self.predictor
    }

    pub fn state(&self) -> &TrainerState<T> {
        &self.state
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn example_count(&self) -> usize {
        self.examples.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.state.lambdas.len()
    }

    /// Groups (augmented instances) that carry at least one constraint.
    pub fn constrained_groups(&self) -> &[usize] {
        &self.constrained_groups
    }

    pub fn is_done(&self) -> bool {
        self.state.epoch >= self.cfg.epochs
    }

    /// Mean task loss over `batch` plus the mean over `groups` of
    /// `Σ λ_i C_i`, and its gradient, for the given parameters.
    pub fn objective(&self, predictor: &Predictor<T>, batch: &[usize], groups: &[usize]) -> (T, Gradient<T>) {
        let mut grad = predictor.zero_gradient();
        let mut loss = T::zero();
        let scale = T::one() / T::of(batch.len().max(1) as f64);
        for &i in batch {
            let (x, gold) = &self.examples[i];
            let trace = predictor.trace(x);
            let p = trace.output();
            loss = loss + scale * task_loss(p, *gold, self.cfg.loss);
            predictor.backward(x, &trace, scale * task_loss_grad(p, *gold, self.cfg.loss), &mut grad);
        }
        let scale = T::one() / T::of(groups.len().max(1) as f64);
        for &g in groups {
            let group = &self.groups[g];
            let traces: Vec<Trace<T>> = group.queries.iter().map(|x| predictor.trace(x)).collect();
            let preds: Vec<T> = traces.iter().map(Trace::output).collect();
            let mut d_preds = vec![T::zero(); preds.len()];
            for (k, c) in group.constraints.iter().enumerate() {
                let lambda = self.state.lambdas[group.lambda_offset + k];
                let (v, partials) = c.violation_gradient(&preds).expect("validated references");
                loss = loss + scale * lambda * v;
                for (q, d) in partials {
                    d_preds[q] = d_preds[q] + scale * lambda * d;
                }
            }
            for (q, &d) in d_preds.iter().enumerate() {
                if d != T::zero() {
                    predictor.backward(&group.queries[q], &traces[q], d, &mut grad);
                }
            }
        }
        (loss, grad)
    }

    pub fn mean_task_loss(&self) -> T {
        let total: T =
            self.examples.iter().map(|(x, gold)| task_loss(self.predictor.forward(x), *gold, self.cfg.loss)).sum();
        total / T::of(self.examples.len() as f64)
    }

    /// Current violation of every constraint, in multiplier order.
    pub fn violations(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.state.lambdas.len());
        for group in &self.groups {
            let preds: Vec<T> = group.queries.iter().map(|x| self.predictor.forward(x)).collect();
            for c in &group.constraints {
                out.push(c.violation(&preds).expect("validated references"));
            }
        }
        out
    }

    /// One pass over the training set in shuffled mini-batches.
    pub fn step_epoch(&mut self) -> Result<&EpochRecord> {
        let epoch = self.state.epoch;
        let constrained = self.cfg.pct && epoch >= self.cfg.warmup_epochs;
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.shuffle(&mut self.task_rng);
        let rate = T::of(self.cfg.learning_rate);
        for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            let groups: Vec<usize> = if constrained && !self.constrained_groups.is_empty() {
                (0..self.cfg.m())
                    .map(|_| {
                        let k = self.constraint_rng.random_range(0..self.constrained_groups.len());
                        self.constrained_groups[k]
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let (loss, grad) = self.objective(&self.predictor, batch, &groups);
            if !loss.is_finite() || !grad.is_finite() {
                return Err(TrainError::NonFinite { epoch, batch: b });
            }
            self.predictor.descend(&grad, rate);
        }

        let violations = self.violations();
        if constrained {
            let threshold = T::of(self.cfg.lambda_threshold);
            let decay = T::of(self.cfg.decay);
            update_lambdas(&mut self.state.lambdas, &mut self.state.alpha, &violations, threshold, decay)?;
        }
        let (mean_violation, cs10) = if violations.is_empty() {
            (None, None)
        } else {
            let n = violations.len() as f64;
            let sum: f64 = violations.iter().map(|v| v.as_f64()).sum();
            let hits = violations.iter().filter(|v| v.as_f64() < 0.10).count();
            (Some(sum / n), Some(100.0 * hits as f64 / n))
        };
        let task = self.mean_task_loss().as_f64();
        if !task.is_finite() {
            return Err(TrainError::NonFinite { epoch, batch: order.len().div_ceil(self.cfg.batch_size) });
        }
        self.state.history.push(EpochRecord {
            epoch,
            constrained,
            task_loss: task,
            mean_violation,
            cs10,
            alpha: self.state.alpha.as_f64(),
            lambda_sum: self.state.lambdas.iter().map(|l| l.as_f64()).sum(),
            lambda_max: self.state.lambdas.iter().map(|l| l.as_f64()).fold(0.0, f64::max),
        });
        self.state.epoch += 1;
        Ok(self.state.history.last().expect("just pushed"))
    }

    pub fn run(mut self) -> Result<(Predictor<T>, TrainReport)> {
        while !self.is_done() {
            self.step_epoch()?;
        }
        let report = TrainReport {
            config: self.cfg.clone(),
            parameter_count: self.predictor.parameter_count(),
            examples: self.examples.len(),
            constraints: self.state.lambdas.len(),
            final_task_loss: self.state.history.last().map_or(f64::NAN, |r| r.task_loss),
            epochs: self.state.history,
        };
        Ok((self.predictor, report))
    }
}

/// Trains on the main questions of `dataset`; `augmented` supplies the
/// constraints used after warm-up when `cfg.pct` is set.
pub fn train<T: Scalar>(
    cfg: &TrainConfig,
    dataset: &[Instance],
    augmented: &[AugmentedInstance],
    vocabulary: Vocabulary,
) -> Result<(Predictor<T>, TrainReport)> {
    Trainer::new(cfg.clone(), dataset, augmented, vocabulary)?.run()
}

/// Probability the predictor assigns to `query` against `inst`'s context.
/// Only the theory and the query are consulted.
pub fn predict<T: Scalar>(p: &Predictor<T>, inst: &Instance, query: &Atom) -> T {
    p.forward(&p.feature_map().encode(&inst.theory, inst.rules_in_context, query))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct PredictorFile<T: Scalar> {
    format: String,
    version: u32,
    predictor: Predictor<T>,
}

/// Versioned JSON with the feature vocabulary embedded.
pub fn save_predictor<T: Scalar>(p: &Predictor<T>) -> String {
    serde_json::to_string(&PredictorFile {
        format: PREDICTOR_FORMAT.to_string(),
        version: PREDICTOR_VERSION,
        predictor: p.clone(),
    })
    .expect("predictor serializes")
}

pub fn load_predictor<T: Scalar>(text: &str) -> Result<Predictor<T>> {
    let file: PredictorFile<T> = serde_json::from_str(text).map_err(|e| TrainError::Format(e.to_string()))?;
    if file.format != PREDICTOR_FORMAT || file.version != PREDICTOR_VERSION {
        return Err(TrainError::Format(format!("{} v{}", file.format, file.version)));
    }
    let dim = file.predictor.feature_map().dim();
    let layers = file.predictor.layers();
    let chained = layers.windows(2).all(|w| w[0].outputs == w[1].inputs);
    let shaped = layers.iter().all(|l| l.weights.len() == l.inputs * l.outputs && l.bias.len() == l.outputs);
    if layers.first().is_none_or(|l| l.inputs != dim)
        || layers.last().is_none_or(|l| l.outputs != 1)
        || !chained
        || !shaped
    {
        return Err(TrainError::Format("layer shapes do not fit the feature map".into()));
    }
    Ok(file.predictor)
}
