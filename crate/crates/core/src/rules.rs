//! Probabilistic facts, rules and theories, plus the adverb-of-uncertainty
//! vocabulary that encodes rule probabilities in text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when comparing stored probabilities.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("unknown adverb of uncertainty `{0}`")]
    UnknownAdverb(String),
    #[error("invalid entity identifier `{0}`")]
    InvalidEntity(String),
    #[error("invalid predicate name `{0}`")]
    InvalidPredicate(String),
    #[error("arity {0} is not supported (expected 1 or 2)")]
    InvalidArity(usize),
    #[error("predicate `{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("predicate `{0}` is used with two different arities")]
    InconsistentArity(String),
    #[error("a rule needs at least one premise")]
    NoPremises,
    #[error("conclusion variable {0} does not occur in any premise")]
    UnboundVariable(String),
    #[error("rule probability {probability} disagrees with adverb `{adverb}`")]
    AdverbMismatch { probability: f64, adverb: Adverb },
    #[error("duplicate fact {0}")]
    DuplicateFact(Atom),
    #[error("too many distinct variables in one rule")]
    TooManyVariables,
    #[error("cannot parse `{0}`")]
    Syntax(String),
}

pub type Result<T, E = RuleError> = std::result::Result<T, E>;

fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(RuleError::ProbabilityOutOfRange(p))
    }
}

/// Frequency adverbs, in declared (descending probability) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adverb {
    Always,
    Usually,
    Normally,
    Often,
    Sometimes,
    Occasionally,
    Seldom,
    Never,
}

impl Adverb {
    pub const ALL: [Adverb; 8] = [
        Adverb::Always,
        Adverb::Usually,
        Adverb::Normally,
        Adverb::Often,
        Adverb::Sometimes,
        Adverb::Occasionally,
        Adverb::Seldom,
        Adverb::Never,
    ];

    pub fn probability(self) -> f64 {
        match self {
            Adverb::Always => 1.00,
            Adverb::Usually => 0.90,
            Adverb::Normally => 0.80,
            Adverb::Often => 0.65,
            Adverb::Sometimes => 0.50,
            Adverb::Occasionally => 0.30,
            Adverb::Seldom => 0.15,
            Adverb::Never => 0.00,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Adverb::Always => "always",
            Adverb::Usually => "usually",
            Adverb::Normally => "normally",
            Adverb::Often => "often",
            Adverb::Sometimes => "sometimes",
            Adverb::Occasionally => "occasionally",
            Adverb::Seldom => "seldom",
            Adverb::Never => "never",
        }
    }

    /// Sentence-initial form, e.g. `Usually`.
    pub fn capitalized(self) -> String {
        let word = self.word();
        let mut out = word[..1].to_ascii_uppercase();
        out.push_str(&word[1..]);
        out
    }

    /// The adverb whose table probability is closest to `p`. Exact
    /// midpoints resolve to the lower-probability adverb.
    pub fn nearest(p: f64) -> Result<Adverb> {
        let p = check_probability(p)?;
        let mut best = Adverb::Always;
        let mut best_gap = f64::INFINITY;
        for adverb in Adverb::ALL {
            let gap = (p - adverb.probability()).abs();
            // later entries have lower probability, so `<=` breaks ties downward
            if gap <= best_gap + 1e-12 {
                best = adverb;
                best_gap = gap.min(best_gap);
            }
        }
        Ok(best)
    }

    /// The adverb whose table value equals `p` (within tolerance), if any.
    pub fn exact(p: f64) -> Option<Adverb> {
        Adverb::ALL.into_iter().find(|a| (a.probability() - p).abs() <= PROBABILITY_TOLERANCE)
    }
}

impl fmt::Display for Adverb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

impl FromStr for Adverb {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Adverb::ALL.into_iter().find(|a| a.word() == lower).ok_or_else(|| RuleError::UnknownAdverb(s.to_string()))
    }
}

pub fn adverb_for_probability(p: f64) -> Result<Adverb> {
    Adverb::nearest(p)
}

pub fn probability_for_adverb(word: &str) -> Result<f64> {
    word.parse::<Adverb>().map(Adverb::probability)
}

/// Canonical textual form of a rule probability: the adverb word when one
/// matches exactly, otherwise a two-digit decimal.
pub fn canonical_probability(p: f64) -> String {
    match Adverb::exact(p) {
        Some(adverb) => adverb.word().to_string(),
        None => format!("{p:.2}"),
    }
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// A named individual such as `Dave`. Must start with an uppercase ASCII
/// letter and be at least two characters long; single capitals are
/// reserved for rule variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Entity(String);

impl Entity {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let valid = is_word(&name) && name.len() >= 2 && name.as_bytes()[0].is_ascii_uppercase();
        if valid {
            Ok(Entity(name))
        } else {
            Err(RuleError::InvalidEntity(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Entity {
    type Error = RuleError;

    fn try_from(value: String) -> Result<Self> {
        Entity::new(value)
    }
}

impl From<Entity> for String {
    fn from(e: Entity) -> String {
        e.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Arity {
    /// Attribute, e.g. `Big(Dave)`.
    Unary,
    /// Relation, e.g. `Child(Mike,Ann)`.
    Binary,
}

impl Arity {
    pub fn count(self) -> usize {
        match self {
            Arity::Unary => 1,
            Arity::Binary => 2,
        }
    }
}

impl TryFrom<usize> for Arity {
    type Error = RuleError;

    fn try_from(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Arity::Unary),
            2 => Ok(Arity::Binary),
            other => Err(RuleError::InvalidArity(other)),
        }
    }
}

impl From<Arity> for usize {
    fn from(a: Arity) -> usize {
        a.count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    name: String,
    arity: Arity,
}

impl Predicate {
    pub fn new(name: impl Into<String>, arity: usize) -> Result<Self> {
        let name = name.into();
        if !is_word(&name) || !name.as_bytes()[0].is_ascii_alphabetic() {
            return Err(RuleError::InvalidPredicate(name));
        }
        Ok(Predicate { name, arity: Arity::try_from(arity)? })
    }

    pub fn unary(name: impl Into<String>) -> Result<Self> {
        Predicate::new(name, 1)
    }

    pub fn binary(name: impl Into<String>) -> Result<Self> {
        Predicate::new(name, 2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }
}

/// A ground atom. Doubles as the hypothesis type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    predicate: Predicate,
    args: Vec<Entity>,
}

/// The query whose probability is asked for.
pub type Hypothesis = Atom;

impl Atom {
    pub fn new(predicate: Predicate, args: Vec<Entity>) -> Result<Self> {
        if args.len() != predicate.arity.count() {
            return Err(RuleError::ArityMismatch {
                name: predicate.name.clone(),
                expected: predicate.arity.count(),
                got: args.len(),
            });
        }
        Ok(Atom { predicate, args })
    }

    /// Builds an atom from string parts, inferring the arity from `args`.
    pub fn parts(name: &str, args: &[&str]) -> Result<Self> {
        let predicate = Predicate::new(name, args.len())?;
        let args = args.iter().map(|a| Entity::new(*a)).collect::<Result<Vec<_>>>()?;
        Atom::new(predicate, args)
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn args(&self) -> &[Entity] {
        &self.args
    }
}

fn split_call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| RuleError::Syntax(s.to_string()))?;
    if !s.ends_with(')') {
        return Err(RuleError::Syntax(s.to_string()));
    }
    let name = &s[..open];
    let inner = &s[open + 1..s.len() - 1];
    let args = inner.split(',').map(str::trim).collect();
    Ok((name, args))
}

impl FromStr for Atom {
    type Err = RuleError;

    /// Formal syntax `Name(Arg1,Arg2)`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        Atom::parts(name, &args)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub atom: Atom,
    pub probability: f64,
}

impl Fact {
    /// A given fact; always certain.
    pub fn given(atom: Atom) -> Self {
        Fact { atom, probability: 1.0 }
    }

    pub fn uncertain(atom: Atom, probability: f64) -> Result<Self> {
        Ok(Fact { atom, probability: check_probability(probability)? })
    }
}

/// Argument of a rule atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Variable index: 0 is `A`, 1 is `B`, ...
    Var(u8),
    Const(Entity),
}

impl Term {
    pub fn var_letter(index: u8) -> char {
        (b'A' + index) as char
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "{}", Term::var_letter(*i)),
            Term::Const(e) => write!(f, "{e}"),
        }
    }
}

impl FromStr for Term {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() == 1 && b[0].is_ascii_uppercase() {
            Ok(Term::Var(b[0] - b'A'))
        } else {
            Entity::new(s).map(Term::Const)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleAtom {
    predicate: Predicate,
    args: Vec<Term>,
}

impl RuleAtom {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Result<Self> {
        if args.len() != predicate.arity.count() {
            return Err(RuleError::ArityMismatch {
                name: predicate.name.clone(),
                expected: predicate.arity.count(),
                got: args.len(),
            });
        }
        Ok(RuleAtom { predicate, args })
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    fn vars(&self) -> impl Iterator<Item = u8> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }
}

impl FromStr for RuleAtom {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let predicate = Predicate::new(name, args.len())?;
        let args = args.into_iter().map(str::parse).collect::<Result<Vec<Term>>>()?;
        RuleAtom::new(predicate, args)
    }
}

impl fmt::Display for RuleAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for RuleAtom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RuleAtom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `(p_1, ..., p_n) -> q` holding with probability `probability`.
///
/// Variables are renamed on construction so that they appear as `A, B, C, ...`
/// in order of first occurrence (premises left to right, then conclusion);
/// rules equal up to variable renaming therefore compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    premises: Vec<RuleAtom>,
    conclusion: RuleAtom,
    probability: f64,
    adverb: Option<Adverb>,
}

impl Rule {
    pub fn new(premises: Vec<RuleAtom>, conclusion: RuleAtom, probability: f64) -> Result<Self> {
        let probability = check_probability(probability)?;
        Rule::build(premises, conclusion, probability, None)
    }

    pub fn with_adverb(premises: Vec<RuleAtom>, conclusion: RuleAtom, adverb: Adverb) -> Result<Self> {
        Rule::build(premises, conclusion, adverb.probability(), Some(adverb))
    }

    /// Validates an explicit (probability, adverb) pair, as read from a file.
    pub fn from_parts(
        premises: Vec<RuleAtom>,
        conclusion: RuleAtom,
        probability: f64,
        adverb: Option<Adverb>,
    ) -> Result<Self> {
        let probability = check_probability(probability)?;
        if let Some(a) = adverb {
            if a.probability() != probability {
                return Err(RuleError::AdverbMismatch { probability, adverb: a });
            }
        }
        Rule::build(premises, conclusion, probability, adverb)
    }

    fn build(
        mut premises: Vec<RuleAtom>,
        mut conclusion: RuleAtom,
        probability: f64,
        adverb: Option<Adverb>,
    ) -> Result<Self> {
        if premises.is_empty() {
            return Err(RuleError::NoPremises);
        }
        let bound: BTreeSet<u8> = premises.iter().flat_map(RuleAtom::vars).collect();
        if let Some(v) = conclusion.vars().find(|v| !bound.contains(v)) {
            return Err(RuleError::UnboundVariable(Term::var_letter(v).to_string()));
        }

        let mut renaming: BTreeMap<u8, u8> = BTreeMap::new();
        for atom in premises.iter().chain(std::iter::once(&conclusion)) {
            for v in atom.vars() {
                let next = renaming.len();
                renaming.entry(v).or_insert(next as u8);
            }
        }
        if renaming.len() > 26 {
            return Err(RuleError::TooManyVariables);
        }
        for atom in premises.iter_mut().chain(std::iter::once(&mut conclusion)) {
            for term in &mut atom.args {
                if let Term::Var(v) = term {
                    *v = renaming[v];
                }
            }
        }
        Ok(Rule { premises, conclusion, probability, adverb })
    }

    pub fn premises(&self) -> &[RuleAtom] {
        &self.premises
    }

    pub fn conclusion(&self) -> &RuleAtom {
        &self.conclusion
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn adverb(&self) -> Option<Adverb> {
        self.adverb
    }

    pub fn variable_count(&self) -> usize {
        self.premises
            .iter()
            .chain(std::iter::once(&self.conclusion))
            .flat_map(RuleAtom::vars)
            .map(|v| v as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Same shape, different probability and no adverb.
    pub fn reweighted(&self, probability: f64) -> Result<Rule> {
        Ok(Rule { probability: check_probability(probability)?, adverb: None, ..self.clone() })
    }
}

impl fmt::Display for Rule {
    /// Formal syntax `Big(A) & Green(A) -> Round(A) @ usually`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, " -> {} @ ", self.conclusion)?;
        match self.adverb {
            Some(a) => write!(f, "{a}"),
            None => write!(f, "{}", self.probability),
        }
    }
}

impl FromStr for Rule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self> {
        let syntax = || RuleError::Syntax(s.to_string());
        let (body, prob) = s.rsplit_once('@').ok_or_else(syntax)?;
        let (lhs, rhs) = body.split_once("->").ok_or_else(syntax)?;
        let premises = lhs.split('&').map(|p| p.trim().parse()).collect::<Result<Vec<RuleAtom>>>()?;
        let conclusion = rhs.trim().parse()?;
        let prob = prob.trim();
        match prob.parse::<f64>() {
            Ok(p) => Rule::new(premises, conclusion, p),
            Err(_) => Rule::with_adverb(premises, conclusion, prob.parse()?),
        }
    }
}

/// A set of facts `F`, a set of rules `R`, and the entities they mention.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Theory {
    facts: Vec<Fact>,
    rules: Vec<Rule>,
    entities: Vec<Entity>,
}

impl Theory {
    pub fn new(facts: Vec<Fact>, rules: Vec<Rule>) -> Result<Self> {
        Theory::with_entities(facts, rules, Vec::new())
    }

    /// `extra` lists entities that occur in no fact, e.g. distractors.
    pub fn with_entities(facts: Vec<Fact>, rules: Vec<Rule>, extra: Vec<Entity>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut arities: BTreeMap<&str, Arity> = BTreeMap::new();
        for fact in &facts {
            check_probability(fact.probability)?;
            if !seen.insert(&fact.atom) {
                return Err(RuleError::DuplicateFact(fact.atom.clone()));
            }
        }
        let mut all_preds: Vec<&Predicate> = facts.iter().map(|f| f.atom.predicate()).collect();
        for rule in &rules {
            all_preds.extend(rule.premises.iter().map(RuleAtom::predicate));
            all_preds.push(rule.conclusion.predicate());
        }
        for p in all_preds {
            if *arities.entry(p.name()).or_insert(p.arity()) != p.arity() {
                return Err(RuleError::InconsistentArity(p.name().to_string()));
            }
        }

        let mut entities: BTreeSet<Entity> = extra.into_iter().collect();
        for fact in &facts {
            entities.extend(fact.atom.args().iter().cloned());
        }
        for rule in &rules {
            for atom in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
                for t in atom.args() {
                    if let Term::Const(e) = t {
                        entities.insert(e.clone());
                    }
                }
            }
        }
        Ok(Theory { facts, rules, entities: entities.into_iter().collect() })
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.rules.is_empty()
    }

    pub fn fact(&self, atom: &Atom) -> Option<&Fact> {
        self.facts.iter().find(|f| &f.atom == atom)
    }

    /// Every predicate used by a fact or rule, deduplicated.
    pub fn predicates(&self) -> BTreeSet<Predicate> {
        let mut out: BTreeSet<Predicate> = self.facts.iter().map(|f| f.atom.predicate().clone()).collect();
        for rule in &self.rules {
            out.extend(rule.premises.iter().map(|p| p.predicate().clone()));
            out.insert(rule.conclusion.predicate().clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adverb_table_values() {
        assert_eq!(probability_for_adverb("seldom").unwrap(), 0.15);
        assert_eq!(probability_for_adverb("always").unwrap(), 1.00);
        assert_eq!(probability_for_adverb("Normally").unwrap(), 0.80);
        assert!(matches!(probability_for_adverb("perhaps"), Err(RuleError::UnknownAdverb(_))));
    }

    #[test]
    fn nearest_adverb() {
        assert_eq!(adverb_for_probability(0.90).unwrap(), Adverb::Usually);
        assert_eq!(adverb_for_probability(0.00).unwrap(), Adverb::Never);
        assert_eq!(adverb_for_probability(0.55).unwrap(), Adverb::Sometimes);
        assert!(adverb_for_probability(1.2).is_err());
        assert!(adverb_for_probability(-0.01).is_err());
        assert!(adverb_for_probability(f64::NAN).is_err());
    }

    #[test]
    fn midpoints_go_down() {
        assert_eq!(adverb_for_probability(0.725).unwrap(), Adverb::Often);
        assert_eq!(adverb_for_probability(0.95).unwrap(), Adverb::Usually);
        assert_eq!(adverb_for_probability(0.075).unwrap(), Adverb::Never);
        assert_eq!(adverb_for_probability(0.575).unwrap(), Adverb::Sometimes);
    }

    #[test]
    fn table_is_strictly_descending() {
        for pair in Adverb::ALL.windows(2) {
            assert!(pair[0].probability() > pair[1].probability());
        }
    }

    #[test]
    fn canonical_probability_form() {
        assert_eq!(canonical_probability(0.9), "usually");
        assert_eq!(canonical_probability(0.135), "0.14");
        assert_eq!(canonical_probability(0.0), "never");
    }

    #[test]
    fn entity_validation() {
        assert!(Entity::new("Dave").is_ok());
        assert!(Entity::new("A").is_err());
        assert!(Entity::new("dave").is_err());
        assert!(Entity::new("Da ve").is_err());
        assert!(Entity::new("").is_err());
    }

    #[test]
    fn atom_round_trips_formal_syntax() {
        let a: Atom = "Child(Mike,Ann)".parse().unwrap();
        assert_eq!(a.predicate().arity(), Arity::Binary);
        assert_eq!(a.to_string(), "Child(Mike,Ann)");
        assert!("Child(Mike,Ann,Dave)".parse::<Atom>().is_err());
        assert!("Big Dave".parse::<Atom>().is_err());
    }

    #[test]
    fn rule_variables_are_canonicalized() {
        let r: Rule = "Spouse(X,Y) & Child(Z,Y) -> Child(Z,X) @ 0.9".parse().unwrap();
        assert_eq!(r.to_string(), "Spouse(A,B) & Child(C,B) -> Child(C,A) @ 0.9");
        let s: Rule = "Spouse(A,B) & Child(C,B) -> Child(C,A) @ 0.9".parse().unwrap();
        assert_eq!(r, s);
        assert_eq!(r.variable_count(), 3);
    }

    #[test]
    fn rule_invariants() {
        let big: RuleAtom = "Big(A)".parse().unwrap();
        let green: RuleAtom = "Green(B)".parse().unwrap();
        assert!(matches!(Rule::new(vec![big.clone()], green, 0.5), Err(RuleError::UnboundVariable(_))));
        let green: RuleAtom = "Green(A)".parse().unwrap();
        assert!(Rule::new(vec![], green.clone(), 0.5).is_err());
        assert!(Rule::new(vec![big.clone()], green.clone(), 1.5).is_err());
        let r = Rule::with_adverb(vec![big.clone()], green.clone(), Adverb::Seldom).unwrap();
        assert_eq!(r.probability(), 0.15);
        assert!(Rule::from_parts(vec![big], green, 0.2, Some(Adverb::Seldom)).is_err());
    }

    #[test]
    fn theory_rejects_duplicates_and_arity_clashes() {
        let f = Fact::given("Big(Dave)".parse().unwrap());
        assert!(matches!(Theory::new(vec![f.clone(), f.clone()], vec![]), Err(RuleError::DuplicateFact(_))));
        let g = Fact::given("Big(Dave,Erin)".parse().unwrap());
        assert!(matches!(Theory::new(vec![f, g], vec![]), Err(RuleError::InconsistentArity(_))));
    }

    #[test]
    fn uncertain_fact_range() {
        let a: Atom = "Big(Dave)".parse().unwrap();
        assert!(Fact::uncertain(a.clone(), 0.3).is_ok());
        assert!(Fact::uncertain(a, 1.3).is_err());
    }
}
