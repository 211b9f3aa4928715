//! Exact probabilistic inference over negation-free theories.
//!
//! Each rule is an independent Bernoulli switch shared by all of its ground
//! instances; each uncertain given fact is a switch of its own. The
//! probability of a hypothesis is the total weight of the switch settings
//! (worlds) in which it is derivable by ordinary forward chaining. Facts
//! that cannot be derived have probability 0.

mod closure;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Atom, Fact, Rule, Theory};

pub use closure::{derive_closure, Closure, ClosureEntry, Derivation, NetworkKind};

/// Default bound on the number of probabilistic switches enumerated.
pub const DEFAULT_WORLD_CAP: usize = 24;

/// Below this many switches the worlds are summed on the calling thread.
const PARALLEL_THRESHOLD: usize = 16;
const PARALLEL_CHUNKS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("hypothesis {0} has more than one derivation path; use exact inference")]
    NotSimple(Atom),
    #[error("{switches} probabilistic rules/facts bear on the query, above the enumeration cap of {cap}")]
    CapExceeded { switches: usize, cap: usize },
}

pub type Result<T, E = InferenceError> = std::result::Result<T, E>;

/// `premise_facts & rule ⟹ inferred_fact`, with the probabilities that
/// hold on a simple network.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofStep {
    pub rule_index: usize,
    pub rule: Rule,
    pub premise_facts: Vec<Fact>,
    pub inferred_fact: Atom,
    pub inferred_probability: f64,
}

/// Serializable form of one reasoning step. `prob` is the exact
/// probability of the conclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofRecord {
    pub rule: usize,
    pub premises: Vec<Atom>,
    pub conclusion: Atom,
    pub prob: f64,
}

/// Everything the oracle says about one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub gold_prob: f64,
    /// `None` when the query cannot be derived.
    pub depth: Option<usize>,
    pub kind: NetworkKind,
    pub proof: Vec<ProofRecord>,
}

/// Gold probability, depth, kind and proof of `h`. Simple queries list
/// their chain premises-first; Complex ones list every derivation in the
/// cone ordered by the depth of its conclusion.
pub fn solve(theory: &Theory, closure: &Closure, h: &Atom, cap: usize) -> Result<Solution> {
    let gold_prob = infer_exact_in(theory, closure, h, cap)?;
    let kind = closure.classify(h);
    let proof = match kind {
        NetworkKind::Simple => infer_simple_in(theory, closure, h)?
            .1
            .into_iter()
            .map(|step| ProofRecord {
                rule: step.rule_index,
                premises: step.premise_facts.into_iter().map(|f| f.atom).collect(),
                conclusion: step.inferred_fact,
                prob: step.inferred_probability,
            })
            .collect(),
        NetworkKind::Complex => {
            let mut steps = closure.cone_derivations(h);
            steps.sort_by_key(|&d| (closure.depth(&closure.derivations()[d].conclusion), d));
            steps
                .into_iter()
                .map(|d| {
                    let derivation = &closure.derivations()[d];
                    Ok(ProofRecord {
                        rule: derivation.rule,
                        premises: derivation.premises.clone(),
                        conclusion: derivation.conclusion.clone(),
                        prob: infer_exact_in(theory, closure, &derivation.conclusion, cap)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(Solution { gold_prob, depth: closure.depth(h), kind, proof })
}

pub fn classify(theory: &Theory, h: &Atom) -> NetworkKind {
    derive_closure(theory).classify(h)
}

/// Minimal derivation depth of `h`, or `None` if it cannot be derived.
pub fn depth(theory: &Theory, h: &Atom) -> Option<usize> {
    derive_closure(theory).depth(h)
}

pub fn infer_simple(theory: &Theory, h: &Atom) -> Result<(f64, Vec<ProofStep>)> {
    infer_simple_in(theory, &derive_closure(theory), h)
}

/// Chained product along the unique derivation of `h`; the chain lists
/// steps premises-first.
pub fn infer_simple_in(theory: &Theory, closure: &Closure, h: &Atom) -> Result<(f64, Vec<ProofStep>)> {
    if closure.classify(h) == NetworkKind::Complex {
        return Err(InferenceError::NotSimple(h.clone()));
    }
    if !closure.contains(h) {
        return Ok((0.0, Vec::new()));
    }
    let mut chain = Vec::new();
    let p = chain_product(theory, closure, h, &mut chain);
    Ok((p, chain))
}

fn chain_product(theory: &Theory, closure: &Closure, fact: &Atom, chain: &mut Vec<ProofStep>) -> f64 {
    let entry = closure.get(fact).expect("cone facts are in the closure");
    if let Some(p) = entry.given {
        return p;
    }
    let derivation = &closure.derivations()[entry.derivations[0]];
    let rule = &theory.rules()[derivation.rule];
    let mut premise_facts = Vec::with_capacity(derivation.premises.len());
    let mut p = rule.probability();
    for premise in &derivation.premises {
        let q = chain_product(theory, closure, premise, chain);
        p *= q;
        premise_facts.push(Fact { atom: premise.clone(), probability: q });
    }
    chain.push(ProofStep {
        rule_index: derivation.rule,
        rule: rule.clone(),
        premise_facts,
        inferred_fact: fact.clone(),
        inferred_probability: p,
    });
    p
}

pub fn infer_exact(theory: &Theory, h: &Atom) -> Result<f64> {
    infer_exact_in(theory, &derive_closure(theory), h, DEFAULT_WORLD_CAP)
}

/// How a node of the compiled cone is switched on.
#[derive(Debug, Clone, Copy)]
enum Switch {
    Always,
    Never,
    Bit(usize),
}

/// The cone of one query, flattened for world enumeration.
struct Network {
    facts: Vec<Switch>,
    derivations: Vec<(Switch, Vec<usize>, usize)>,
    target: usize,
    probabilities: Vec<f64>,
}

impl Network {
    fn compile(theory: &Theory, closure: &Closure, h: &Atom) -> Network {
        let cone: Vec<Atom> = closure.cone(h).into_iter().collect();
        let index: BTreeMap<&Atom, usize> = cone.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut probabilities = Vec::new();
        let mut classify = |p: f64| {
            if p >= 1.0 {
                Switch::Always
            } else if p <= 0.0 {
                Switch::Never
            } else {
                probabilities.push(p);
                Switch::Bit(probabilities.len() - 1)
            }
        };

        let facts: Vec<Switch> = cone
            .iter()
            .map(|a| match closure.get(a).and_then(|e| e.given) {
                Some(p) => classify(p),
                None => Switch::Never,
            })
            .collect();
        let mut rule_switch: BTreeMap<usize, Switch> = BTreeMap::new();
        let mut derivations = Vec::new();
        for d in closure.cone_derivations(h) {
            let derivation = &closure.derivations()[d];
            let switch = *rule_switch
                .entry(derivation.rule)
                .or_insert_with(|| classify(theory.rules()[derivation.rule].probability()));
            let premises = derivation.premises.iter().map(|p| index[p]).collect();
            derivations.push((switch, premises, index[&derivation.conclusion]));
        }
        Network { facts, derivations, target: index[h], probabilities }
    }

    fn on(switch: Switch, world: u64) -> bool {
        match switch {
            Switch::Always => true,
            Switch::Never => false,
            Switch::Bit(b) => world >> b & 1 == 1,
        }
    }

    fn derivable(&self, world: u64, truth: &mut [bool]) -> bool {
        for (slot, &s) in truth.iter_mut().zip(&self.facts) {
            *slot = Network::on(s, world);
        }
        let mut changed = true;
        while changed && !truth[self.target] {
            changed = false;
            for (switch, premises, conclusion) in &self.derivations {
                if !truth[*conclusion] && Network::on(*switch, world) && premises.iter().all(|&p| truth[p]) {
                    truth[*conclusion] = true;
                    changed = true;
                }
            }
        }
        truth[self.target]
    }

    fn weight(&self, world: u64) -> f64 {
        self.probabilities.iter().enumerate().map(|(b, &p)| if world >> b & 1 == 1 { p } else { 1.0 - p }).product()
    }

    fn sum_range(&self, worlds: std::ops::Range<u64>) -> f64 {
        let mut truth = vec![false; self.facts.len()];
        worlds.filter(|&w| self.derivable(w, &mut truth)).map(|w| self.weight(w)).sum()
    }
}

/// Sums the weight of every world in which `h` is derivable. Rules and
/// facts with probability 0 or 1 are fixed rather than enumerated, so the
/// cap applies to the genuinely uncertain switches in the cone of `h`.
pub fn infer_exact_in(theory: &Theory, closure: &Closure, h: &Atom, cap: usize) -> Result<f64> {
    if !closure.contains(h) {
        return Ok(0.0);
    }
    let network = Network::compile(theory, closure, h);
    let switches = network.probabilities.len();
    if switches > cap {
        return Err(InferenceError::CapExceeded { switches, cap });
    }
    let worlds = 1u64 << switches;
    let total = if switches < PARALLEL_THRESHOLD {
        network.sum_range(0..worlds)
    } else {
        let chunk = worlds / PARALLEL_CHUNKS;
        let partial: Vec<f64> =
            (0..PARALLEL_CHUNKS).into_par_iter().map(|c| network.sum_range(c * chunk..(c + 1) * chunk)).collect();
        // fixed chunking and in-order reduction keep the result deterministic
        partial.into_iter().sum()
    };
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theory(facts: &[&str], rules: &[&str]) -> Theory {
        Theory::new(
            facts.iter().map(|f| Fact::given(f.parse().unwrap())).collect(),
            rules.iter().map(|r| r.parse().unwrap()).collect(),
        )
        .unwrap()
    }

    fn atom(s: &str) -> Atom {
        s.parse().unwrap()
    }

    fn ruletaker_pro() -> Theory {
        theory(
            &["Big(Dave)", "Sad(Erin)"],
            &["Big(A) -> Green(A) @ usually", "Green(A) -> Round(A) @ normally", "Sad(A) -> Round(A) @ seldom"],
        )
    }

    fn rulebert() -> Theory {
        theory(
            &["Cousin(David,Ann)", "Child(Mike,Ann)"],
            &["Spouse(A,B) & Child(C,B) -> Child(C,A) @ 0.9", "Cousin(A,B) -> Spouse(A,B) @ 0.15"],
        )
    }

    #[test]
    fn closure_depths_ruletaker_pro() {
        let c = derive_closure(&ruletaker_pro());
        let depths: Vec<(String, usize)> = c.entries().iter().map(|(a, e)| (a.to_string(), e.depth)).collect();
        assert_eq!(
            depths,
            vec![
                ("Big(Dave)".to_string(), 0),
                ("Green(Dave)".to_string(), 1),
                ("Round(Dave)".to_string(), 2),
                ("Round(Erin)".to_string(), 1),
                ("Sad(Erin)".to_string(), 0),
            ]
        );
    }

    #[test]
    fn closure_depths_rulebert() {
        let c = derive_closure(&rulebert());
        assert_eq!(c.depth(&atom("Spouse(David,Ann)")), Some(1));
        assert_eq!(c.depth(&atom("Child(Mike,David)")), Some(2));
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn no_rules_means_facts_only() {
        let t = theory(&["Big(Dave)", "Red(Erin)"], &[]);
        let c = derive_closure(&t);
        assert_eq!(c.len(), 2);
        assert!(c.entries().values().all(|e| e.depth == 0));
        assert_eq!(classify(&t, &atom("Big(Dave)")), NetworkKind::Simple);
        assert_eq!(infer_exact(&t, &atom("Big(Dave)")).unwrap(), 1.0);
    }

    #[test]
    fn empty_theory() {
        let t = Theory::default();
        assert!(derive_closure(&t).is_empty());
        assert_eq!(infer_exact(&t, &atom("Big(Dave)")).unwrap(), 0.0);
    }

    #[test]
    fn worked_chain_answers() {
        let t = ruletaker_pro();
        let (p, chain) = infer_simple(&t, &atom("Round(Dave)")).unwrap();
        assert!((p - 0.72).abs() < 1e-9);
        assert_eq!(chain.len(), 2);
        assert_eq!(chain[0].inferred_fact, atom("Green(Dave)"));
        assert!((chain[0].inferred_probability - 0.9).abs() < 1e-12);
        assert!((infer_exact(&t, &atom("Round(Dave)")).unwrap() - 0.72).abs() < 1e-9);

        let (p, chain) = infer_simple(&rulebert(), &atom("Child(Mike,David)")).unwrap();
        assert!((p - 0.135).abs() < 1e-9);
        assert_eq!(chain.len(), 2);
        assert_eq!(chain[1].premise_facts.len(), 2);
    }

    #[test]
    fn complex_variant() {
        let t = theory(
            &["Big(Dave)", "Sad(Dave)"],
            &["Big(A) -> Green(A) @ usually", "Green(A) -> Round(A) @ normally", "Sad(A) -> Round(A) @ seldom"],
        );
        let h = atom("Round(Dave)");
        assert_eq!(classify(&t, &h), NetworkKind::Complex);
        assert!((infer_exact(&t, &h).unwrap() - 0.762).abs() < 1e-9);
        assert!(matches!(infer_simple(&t, &h), Err(InferenceError::NotSimple(_))));
        assert_eq!(classify(&ruletaker_pro(), &h), NetworkKind::Simple);
    }

    #[test]
    fn underivable_is_zero() {
        let t = ruletaker_pro();
        let h = atom("Round(Fiona)");
        assert_eq!(infer_simple(&t, &h).unwrap(), (0.0, vec![]));
        assert_eq!(infer_exact(&t, &h).unwrap(), 0.0);
        assert_eq!(depth(&t, &h), None);
    }

    #[test]
    fn depths() {
        let t = ruletaker_pro();
        assert_eq!(depth(&t, &atom("Big(Dave)")), Some(0));
        assert_eq!(depth(&t, &atom("Green(Dave)")), Some(1));
        assert_eq!(depth(&t, &atom("Round(Dave)")), Some(2));
    }

    #[test]
    fn shared_rule_switch_is_counted_once() {
        // both premises come from the same rule; the product would square 0.5
        let t =
            theory(&["Red(Dave)", "Red(Erin)"], &["Red(A) -> Cold(A) @ 0.5", "Cold(A) & Cold(B) -> Friend(A,B) @ 1.0"]);
        let h = atom("Friend(Dave,Erin)");
        assert_eq!(classify(&t, &h), NetworkKind::Complex);
        assert!((infer_exact(&t, &h).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cyclic_rules_terminate() {
        let t = theory(
            &["Big(Dave)"],
            &["Big(A) -> Green(A) @ 0.5", "Green(A) -> Round(A) @ 0.5", "Round(A) -> Green(A) @ 0.5"],
        );
        let h = atom("Round(Dave)");
        assert_eq!(depth(&t, &h), Some(2));
        assert_eq!(classify(&t, &h), NetworkKind::Complex);
        assert!((infer_exact(&t, &h).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uncertain_facts_are_switches() {
        let t = Theory::new(
            vec![Fact::uncertain(atom("Big(Dave)"), 0.5).unwrap()],
            vec!["Big(A) -> Green(A) @ 0.8".parse().unwrap()],
        )
        .unwrap();
        assert!((infer_exact(&t, &atom("Green(Dave)")).unwrap() - 0.4).abs() < 1e-12);
        let (p, _) = infer_simple(&t, &atom("Green(Dave)")).unwrap();
        assert!((p - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let rules: Vec<String> = (0..5).map(|i| format!("Big(A) -> Green(A) @ 0.{}", i + 1)).collect();
        let refs: Vec<&str> = rules.iter().map(String::as_str).collect();
        let t = theory(&["Big(Dave)"], &refs);
        let c = derive_closure(&t);
        let err = infer_exact_in(&t, &c, &atom("Green(Dave)"), 4).unwrap_err();
        assert_eq!(err, InferenceError::CapExceeded { switches: 5, cap: 4 });
        let p = infer_exact_in(&t, &c, &atom("Green(Dave)"), 5).unwrap();
        let expected = 1.0 - (0.9 * 0.8 * 0.7 * 0.6 * 0.5);
        assert!((p - expected).abs() < 1e-12);
    }

    #[test]
    fn parallel_path_agrees_with_noisy_or() {
        // 17 independent single-step paths exceed the sequential threshold
        let mut facts = Vec::new();
        let mut rules = Vec::new();
        let attrs = [
            "Big", "Blue", "Cold", "Furry", "Green", "Kind", "Nice", "Quiet", "Red", "Rough", "Sad", "Smart", "White",
            "Young", "Rich", "Tall", "Short",
        ];
        let mut miss = 1.0;
        for (i, a) in attrs.iter().enumerate() {
            facts.push(format!("{a}(Dave)"));
            let p = 0.05 + 0.05 * (i % 10) as f64;
            rules.push(format!("{a}(A) -> Round(A) @ {p}"));
            miss *= 1.0 - p;
        }
        let f: Vec<&str> = facts.iter().map(String::as_str).collect();
        let r: Vec<&str> = rules.iter().map(String::as_str).collect();
        let t = theory(&f, &r);
        let p = infer_exact(&t, &atom("Round(Dave)")).unwrap();
        assert!((p - (1.0 - miss)).abs() < 1e-9);
    }
}
