use serde::{Deserialize, Serialize};

use super::DataGenError;
use crate::inference::{NetworkKind, ProofRecord};
use crate::rules::{Adverb, Atom, Fact, Rule, RuleAtom, Theory};
use crate::textio::{render_fact, render_rule, RuleStyle, Vocabulary};

/// One dataset row: a theory, a question about it and the oracle's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub theory: Theory,
    pub context: String,
    pub hypothesis: Atom,
    pub question: String,
    pub gold_probability: f64,
    pub gold_label: bool,
    /// Minimal derivation depth; 0 for given facts and for underivable
    /// (closed-world false) questions.
    pub depth: usize,
    pub kind: NetworkKind,
    pub proof: Vec<ProofRecord>,
    pub style: RuleStyle,
    pub rules_in_context: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactRecord {
    #[serde(default)]
    pub text: String,
    pub atom: Atom,
    #[serde(default = "certain")]
    pub prob: f64,
}

fn certain() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    #[serde(default)]
    pub text: String,
    pub premises: Vec<RuleAtom>,
    pub conclusion: RuleAtom,
    pub prob: f64,
    #[serde(default)]
    pub adverb: Option<Adverb>,
}

/// JSON-lines form of an [`Instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub context: String,
    pub question: String,
    pub query: Atom,
    pub facts: Vec<FactRecord>,
    pub rules: Vec<RuleRecord>,
    pub gold_prob: f64,
    pub gold_label: bool,
    pub depth: usize,
    pub kind: NetworkKind,
    pub proof: Vec<ProofRecord>,
    pub style: RuleStyle,
    pub rules_in_context: bool,
}

impl Instance {
    pub fn to_record(&self, vocab: &Vocabulary) -> Result<InstanceRecord, DataGenError> {
        let facts = self
            .theory
            .facts()
            .iter()
            .map(|f| Ok(FactRecord { text: render_fact(vocab, f)?, atom: f.atom.clone(), prob: f.probability }))
            .collect::<Result<Vec<_>, DataGenError>>()?;
        let rules = self
            .theory
            .rules()
            .iter()
            .map(|r| {
                Ok(RuleRecord {
                    text: render_rule(vocab, r, self.style)?,
                    premises: r.premises().to_vec(),
                    conclusion: r.conclusion().clone(),
                    prob: r.probability(),
                    adverb: r.adverb(),
                })
            })
            .collect::<Result<Vec<_>, DataGenError>>()?;
        Ok(InstanceRecord {
            id: self.id.clone(),
            context: self.context.clone(),
            question: self.question.clone(),
            query: self.hypothesis.clone(),
            facts,
            rules,
            gold_prob: self.gold_probability,
            gold_label: self.gold_label,
            depth: self.depth,
            kind: self.kind,
            proof: self.proof.clone(),
            style: self.style,
            rules_in_context: self.rules_in_context,
        })
    }

    /// Rebuilds the formal theory from the record's structured fields.
    pub fn from_record(record: InstanceRecord) -> Result<Instance, DataGenError> {
        let facts =
            record.facts.iter().map(|f| Fact::uncertain(f.atom.clone(), f.prob)).collect::<Result<Vec<_>, _>>()?;
        let rules = record
            .rules
            .iter()
            .map(|r| Rule::from_parts(r.premises.clone(), r.conclusion.clone(), r.prob, r.adverb))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Instance {
            id: record.id,
            theory: Theory::new(facts, rules)?,
            context: record.context,
            hypothesis: record.query,
            question: record.question,
            gold_probability: record.gold_prob,
            gold_label: record.gold_label,
            depth: record.depth,
            kind: record.kind,
            proof: record.proof,
            style: record.style,
            rules_in_context: record.rules_in_context,
        })
    }
}

/// Reads instances from JSON lines, skipping blank lines.
pub fn read_instances(text: &str) -> Result<Vec<Instance>, DataGenError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let record: InstanceRecord =
                serde_json::from_str(line).map_err(|e| DataGenError::Record { line: i + 1, message: e.to_string() })?;
            Instance::from_record(record)
        })
        .collect()
}

pub fn write_instances(instances: &[Instance], vocab: &Vocabulary) -> Result<String, DataGenError> {
    let mut out = String::new();
    for inst in instances {
        let record = inst.to_record(vocab)?;
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    Ok(out)
}
