use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, TextError, Vocabulary, MAX_PREMISES};
use crate::rules::{Arity, Atom, Fact, Rule, RuleAtom, Term, Theory};

/// How a rule's probability appears in its sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleStyle {
    /// `Usually, If someone is big then they are green.`
    Adverb,
    /// `With the probability of 15%, if someone is green, then they are sad.`
    Numeric,
    /// Rule text only; the probability stays implicit.
    Bare,
}

fn atom_text(vocab: &Vocabulary, atom: &Atom) -> Result<String> {
    let phrase = vocab.phrase(atom.predicate())?;
    let args = atom.args();
    Ok(match atom.predicate().arity() {
        Arity::Unary => format!("{} is {phrase}", args[0]),
        Arity::Binary => format!("{} is {phrase} {}", args[0], args[1]),
    })
}

pub fn render_fact(vocab: &Vocabulary, fact: &Fact) -> Result<String> {
    render_hypothesis(vocab, &fact.atom)
}

pub fn render_hypothesis(vocab: &Vocabulary, atom: &Atom) -> Result<String> {
    Ok(format!("{}.", atom_text(vocab, atom)?))
}

/// `0.15` → `15`, `0.135` → `13.5`.
pub fn format_percent(p: f64) -> String {
    let pct = p * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        let s = format!("{pct:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Rules over a single variable with attribute-only atoms use the
/// `someone ... they` template.
pub(super) fn is_attribute_rule(rule: &Rule) -> bool {
    rule.premises()
        .iter()
        .chain(std::iter::once(rule.conclusion()))
        .all(|a| a.predicate().arity() == Arity::Unary && a.args() == [Term::Var(0)])
}

fn rule_atom_text(vocab: &Vocabulary, atom: &RuleAtom) -> Result<String> {
    let phrase = vocab.phrase(atom.predicate())?;
    let args = atom.args();
    Ok(match atom.predicate().arity() {
        Arity::Unary => format!("{} is {phrase}", args[0]),
        Arity::Binary => format!("{} is {phrase} {}", args[0], args[1]),
    })
}

fn rule_body(vocab: &Vocabulary, rule: &Rule, numeric: bool) -> Result<String> {
    if is_attribute_rule(rule) {
        let premises =
            rule.premises().iter().map(|p| vocab.phrase(p.predicate())).collect::<Result<Vec<_>>>()?.join(" and ");
        let conclusion = vocab.phrase(rule.conclusion().predicate())?;
        let sep = if numeric { ", then" } else { " then" };
        Ok(format!("someone is {premises}{sep} they are {conclusion}"))
    } else {
        let premises =
            rule.premises().iter().map(|p| rule_atom_text(vocab, p)).collect::<Result<Vec<_>>>()?.join(" and ");
        let conclusion = rule_atom_text(vocab, rule.conclusion())?;
        Ok(format!("{premises}, then {conclusion}"))
    }
}

pub fn render_rule(vocab: &Vocabulary, rule: &Rule, style: RuleStyle) -> Result<String> {
    if rule.premises().len() > MAX_PREMISES {
        return Err(TextError::TooManyPremises(rule.premises().len()));
    }
    Ok(match style {
        RuleStyle::Adverb => {
            let adverb = rule.adverb().ok_or(TextError::MissingAdverb)?;
            format!("{}, If {}.", adverb.capitalized(), rule_body(vocab, rule, false)?)
        }
        RuleStyle::Numeric => format!(
            "With the probability of {}%, if {}.",
            format_percent(rule.probability()),
            rule_body(vocab, rule, true)?
        ),
        RuleStyle::Bare => format!("If {}.", rule_body(vocab, rule, false)?),
    })
}

/// Rule sentences (when `include_rules`) and fact sentences in an order
/// shuffled deterministically by `seed`, separated by single spaces.
pub fn render_context(
    vocab: &Vocabulary,
    theory: &Theory,
    include_rules: bool,
    style: RuleStyle,
    seed: u64,
) -> Result<String> {
    let mut sentences = Vec::new();
    if include_rules {
        for rule in theory.rules() {
            sentences.push(render_rule(vocab, rule, style)?);
        }
    }
    for fact in theory.facts() {
        sentences.push(render_fact(vocab, fact)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sentences.shuffle(&mut rng);
    Ok(sentences.join(" "))
}
