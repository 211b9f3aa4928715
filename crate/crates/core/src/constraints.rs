//! Reasoning-step equality constraints and their violations.
//!
//! A step `p_1 & ... & p_n --Pr--> q` asks predicted probabilities to obey
//! `P(q) = Pr * P(p_1) * ... * P(p_n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::Instance;
use crate::inference::{derive_closure, infer_exact_in, InferenceError, DEFAULT_WORLD_CAP};
use crate::rules::Atom;
use crate::scalar::Scalar;
use crate::textio::{render_hypothesis, TextError, Vocabulary};

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("no prediction for query {0}")]
    MissingPrediction(usize),
    #[error("constraint refers to query {index} but the instance has {len} queries")]
    BadReference { index: usize, len: usize },
    #[error("constraint has no premises")]
    NoPremises,
    #[error("rule probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Text(#[from] TextError),
}

pub type Result<T, E = ConstraintError> = std::result::Result<T, E>;

/// A fact in an instance's derivation cone, asked as its own question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub atom: Atom,
    pub gold_prob: f64,
    pub depth: usize,
}

/// `P(queries[conclusion_idx]) = pr * Π P(queries[premise_idxs[i]])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub premise_idxs: Vec<usize>,
    pub pr: f64,
    pub conclusion_idx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedInstance {
    pub base_id: String,
    pub queries: Vec<Query>,
    pub constraints: Vec<Constraint>,
}

/// Prediction-file key of query `k` of instance `base_id`.
pub fn query_id(base_id: &str, k: usize) -> String {
    format!("{base_id}/q{k}")
}

fn lookup<T: Scalar>(preds: &[T], i: usize) -> Result<T> {
    preds.get(i).copied().ok_or(ConstraintError::MissingPrediction(i))
}

impl Constraint {
    fn signed_gap<T: Scalar>(&self, preds: &[T]) -> Result<(T, T, Vec<T>)> {
        let q = lookup(preds, self.conclusion_idx)?;
        let premises = self.premise_idxs.iter().map(|&i| lookup(preds, i)).collect::<Result<Vec<T>>>()?;
        let product = premises.iter().fold(T::of(self.pr), |acc, &p| acc * p);
        Ok((q - product, product, premises))
    }

    /// `|P(q) − Pr·Π P(p_i)|`, with `preds` indexed like the queries.
    pub fn violation<T: Scalar>(&self, preds: &[T]) -> Result<T> {
        Ok(self.signed_gap(preds)?.0.abs())
    }

    /// The violation and its partial derivatives as `(query index, ∂C)`;
    /// a query used twice gets two entries. The subgradient at 0 is 0.
    pub fn violation_gradient<T: Scalar>(&self, preds: &[T]) -> Result<(T, Vec<(usize, T)>)> {
        let (gap, _, premises) = self.signed_gap(preds)?;
        let sign = if gap > T::zero() {
            T::one()
        } else if gap < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        let mut grads = vec![(self.conclusion_idx, sign)];
        for (i, &idx) in self.premise_idxs.iter().enumerate() {
            let others =
                premises.iter().enumerate().filter(|&(j, _)| j != i).fold(T::of(self.pr), |acc, (_, &p)| acc * p);
            grads.push((idx, -sign * others));
        }
        Ok((gap.abs(), grads))
    }

    pub fn is_satisfied<T: Scalar>(&self, preds: &[T], threshold: T) -> Result<bool> {
        Ok(self.violation(preds)? < threshold)
    }

    pub fn validate(&self, queries: usize) -> Result<()> {
        if self.premise_idxs.is_empty() {
            return Err(ConstraintError::NoPremises);
        }
        if !(0.0..=1.0).contains(&self.pr) {
            return Err(ConstraintError::BadProbability(self.pr));
        }
        for &index in self.premise_idxs.iter().chain([&self.conclusion_idx]) {
            if index >= queries {
                return Err(ConstraintError::BadReference { index, len: queries });
            }
        }
        Ok(())
    }
}

pub fn constraint_violation<T: Scalar>(preds: &[T], c: &Constraint) -> Result<T> {
    c.violation(preds)
}

pub fn is_satisfied<T: Scalar>(preds: &[T], c: &Constraint, threshold: T) -> Result<bool> {
    c.is_satisfied(preds, threshold)
}

/// `|1 − min(1, P(q) / Π P(p_i))|`, the product-surrogate reading of an
/// implication. A zero premise product gives 1 when `P(q) > 0`, else 0.
pub fn product_implication_violation<T: Scalar>(premises: &[T], q: T) -> T {
    let product = premises.iter().fold(T::one(), |acc, &p| acc * p);
    if product == T::zero() {
        return if q > T::zero() { T::one() } else { T::zero() };
    }
    (T::one() - (q / product).min(T::one())).abs()
}

/// Queries for every fact in the hypothesis's derivation cone (ordered by
/// depth, then atom) and one constraint per ground derivation among them.
/// Underivable hypotheses and depth-0 facts yield no constraints.
pub fn build_constraints(inst: &Instance, vocab: &Vocabulary) -> Result<AugmentedInstance> {
    let closure = derive_closure(&inst.theory);
    let mut atoms: Vec<(usize, Atom)> = closure
        .cone(&inst.hypothesis)
        .into_iter()
        .map(|a| (closure.depth(&a).expect("cone facts are derivable"), a))
        .collect();
    atoms.sort();
    let queries = atoms
        .iter()
        .map(|(depth, atom)| {
            Ok(Query {
                text: render_hypothesis(vocab, atom)?,
                atom: atom.clone(),
                gold_prob: infer_exact_in(&inst.theory, &closure, atom, DEFAULT_WORLD_CAP)?,
                depth: *depth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let index_of = |a: &Atom| atoms.iter().position(|(_, x)| x == a).expect("derivation inside the cone");
    let constraints = closure
        .cone_derivations(&inst.hypothesis)
        .into_iter()
        .map(|d| {
            let d = &closure.derivations()[d];
            Constraint {
                premise_idxs: d.premises.iter().map(index_of).collect(),
                pr: inst.theory.rules()[d.rule].probability(),
                conclusion_idx: index_of(&d.conclusion),
            }
        })
        .collect();
    Ok(AugmentedInstance { base_id: inst.id.clone(), queries, constraints })
}

/// [`build_constraints`] over a dataset, in input order.
pub fn augment(instances: &[Instance], vocab: &Vocabulary) -> Result<Vec<AugmentedInstance>> {
    instances.par_iter().map(|i| build_constraints(i, vocab)).collect()
}

impl AugmentedInstance {
    pub fn validate(&self) -> Result<()> {
        self.constraints.iter().try_for_each(|c| c.validate(self.queries.len()))
    }

    pub fn gold(&self) -> Vec<f64> {
        self.queries.iter().map(|q| q.gold_prob).collect()
    }

    /// Index of `atom` among the queries.
    pub fn position(&self, atom: &Atom) -> Option<usize> {
        self.queries.iter().position(|q| &q.atom == atom)
    }
}

pub fn read_augmented(text: &str) -> Result<Vec<AugmentedInstance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: AugmentedInstance = serde_json::from_str(line)
                .map_err(|e| ConstraintError::Record { line: i + 1, message: e.to_string() })?;
            record.validate().map_err(|e| ConstraintError::Record { line: i + 1, message: e.to_string() })?;
            Ok(record)
        })
        .collect()
}

pub fn write_augmented(augmented: &[AugmentedInstance]) -> String {
    augmented.iter().map(|a| serde_json::to_string(a).expect("augmented records serialize") + "\n").collect()
}
