#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pct_core::rules::{Adverb, Atom, Entity, Fact, Predicate, Rule, RuleAtom, Term, Theory};
use pct_core::textio::Vocabulary;
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

pub const NAMES: [&str; 4] = ["Anne", "Bob", "Dave", "Erin"];
const UNARY: [&str; 5] = ["Big", "Green", "Round", "Red", "Kind"];
const BINARY: [&str; 3] = ["Friend", "Spouse", "Relative"];

fn random_atom<R: Rng>(rng: &mut R, vars: u8, binary_share: f64) -> RuleAtom {
    let term = |rng: &mut R| Term::Var(rng.random_range(0..vars));
    if rng.random_bool(binary_share) {
        let p = Predicate::binary(*BINARY.choose(rng).unwrap()).unwrap();
        RuleAtom::new(p, vec![term(rng), term(rng)]).unwrap()
    } else {
        let p = Predicate::unary(*UNARY.choose(rng).unwrap()).unwrap();
        RuleAtom::new(p, vec![term(rng)]).unwrap()
    }
}

/// A random range-restricted rule with 1–2 premises over at most three
/// variables and a probability drawn from a 0.05 grid.
pub fn random_rule<R: Rng>(rng: &mut R) -> Rule {
    loop {
        let vars = rng.random_range(1..=3);
        let premises: Vec<RuleAtom> = (0..rng.random_range(1..=2)).map(|_| random_atom(rng, vars, 0.5)).collect();
        let conclusion = random_atom(rng, vars, 0.4);
        let p = rng.random_range(1..=19) as f64 * 0.05;
        if let Ok(rule) = Rule::new(premises, conclusion, p) {
            return rule;
        }
    }
}

pub fn random_ground_atom<R: Rng>(rng: &mut R, entities: &[&str]) -> Atom {
    if rng.random_bool(0.4) {
        Atom::parts(BINARY.choose(rng).unwrap(), &[entities.choose(rng).unwrap(), entities.choose(rng).unwrap()])
            .unwrap()
    } else {
        Atom::parts(UNARY.choose(rng).unwrap(), &[entities.choose(rng).unwrap()]).unwrap()
    }
}

/// Random theory with `1..=max_rules` rules over three entities; about a
/// third of the facts are uncertain.
pub fn random_theory<R: Rng>(rng: &mut R, max_rules: usize) -> Theory {
    let entities = &NAMES[..3];
    let rules = (0..rng.random_range(1..=max_rules)).map(|_| random_rule(rng)).collect();
    let mut atoms = BTreeSet::new();
    for _ in 0..rng.random_range(2..=5) {
        atoms.insert(random_ground_atom(rng, entities));
    }
    let facts = atoms
        .into_iter()
        .map(|a| {
            if rng.random_bool(0.3) {
                Fact::uncertain(a, rng.random_range(1..=19) as f64 * 0.05).unwrap()
            } else {
                Fact::given(a)
            }
        })
        .collect();
    Theory::new(facts, rules).unwrap()
}

/// Ground program produced by brute-force substitution of every entity for
/// every variable, restricted to the atoms derivable with all switches on.
pub struct Grounded {
    pub atoms: Vec<Atom>,
    /// `(atom, probability)` for given facts.
    pub facts: Vec<(usize, f64)>,
    /// `(rule, premise bitmask, conclusion)`.
    pub derivations: Vec<(usize, u128, usize)>,
}

fn substitute(atom: &RuleAtom, binding: &[&Entity]) -> Atom {
    let args = atom
        .args()
        .iter()
        .map(|t| match t {
            Term::Var(v) => binding[*v as usize].clone(),
            Term::Const(c) => c.clone(),
        })
        .collect();
    Atom::new(atom.predicate().clone(), args).unwrap()
}

pub fn ground(theory: &Theory) -> Grounded {
    let entities = theory.entities();
    let mut all: Vec<(usize, Vec<Atom>, Atom)> = Vec::new();
    for (r, rule) in theory.rules().iter().enumerate() {
        let n = rule.variable_count() as u32;
        for code in 0..entities.len().pow(n) {
            let mut c = code;
            let binding: Vec<&Entity> = (0..n)
                .map(|_| {
                    let e = &entities[c % entities.len()];
                    c /= entities.len();
                    e
                })
                .collect();
            let premises = rule.premises().iter().map(|p| substitute(p, &binding)).collect();
            all.push((r, premises, substitute(rule.conclusion(), &binding)));
        }
    }
    let mut known: BTreeSet<Atom> = theory.facts().iter().map(|f| f.atom.clone()).collect();
    loop {
        let before = known.len();
        for (_, premises, conclusion) in &all {
            if premises.iter().all(|p| known.contains(p)) {
                known.insert(conclusion.clone());
            }
        }
        if known.len() == before {
            break;
        }
    }
    assert!(known.len() <= 128, "ground program too large for bitmasks");
    let atoms: Vec<Atom> = known.into_iter().collect();
    let index: BTreeMap<&Atom, usize> = atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut derivations: BTreeSet<(usize, u128, usize)> = BTreeSet::new();
    for (r, premises, conclusion) in &all {
        if premises.iter().all(|p| index.contains_key(p)) {
            let mask = premises.iter().fold(0u128, |m, p| m | 1 << index[p]);
            derivations.insert((*r, mask, index[conclusion]));
        }
    }
    let facts = theory.facts().iter().map(|f| (index[&f.atom], f.probability)).collect();
    Grounded { atoms, facts, derivations: derivations.into_iter().collect() }
}

impl Grounded {
    pub fn index(&self, atom: &Atom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Derivations that can matter for `target`: backward reachability.
    fn relevant(&self, target: usize) -> Vec<(usize, u128, usize)> {
        let mut needed = 1u128 << target;
        loop {
            let before = needed;
            for &(_, premises, conclusion) in &self.derivations {
                if needed >> conclusion & 1 == 1 {
                    needed |= premises;
                }
            }
            if needed == before {
                break;
            }
        }
        self.derivations.iter().copied().filter(|&(_, _, c)| needed >> c & 1 == 1).collect()
    }

    /// Fraction of `samples` sampled worlds in which `target` is derivable.
    pub fn monte_carlo<R: RngCore>(&self, theory: &Theory, target: usize, samples: u64, rng: &mut R) -> f64 {
        let derivations = self.relevant(target);
        let threshold = |p: f64| (p * 2f64.powi(64)).min(u64::MAX as f64) as u64;
        let rules: Vec<(usize, u64, bool)> = theory
            .rules()
            .iter()
            .enumerate()
            .map(|(i, r)| (i, threshold(r.probability()), r.probability() >= 1.0))
            .collect();
        let facts: Vec<(usize, u64, bool)> = self.facts.iter().map(|&(a, p)| (a, threshold(p), p >= 1.0)).collect();
        let mut hits = 0u64;
        let mut on = vec![false; rules.len()];
        for _ in 0..samples {
            for &(i, t, certain) in &rules {
                on[i] = certain || rng.next_u64() < t;
            }
            let mut known = 0u128;
            for &(a, t, certain) in &facts {
                if certain || rng.next_u64() < t {
                    known |= 1 << a;
                }
            }
            loop {
                let before = known;
                for &(r, premises, conclusion) in &derivations {
                    if on[r] && known & premises == premises {
                        known |= 1 << conclusion;
                    }
                }
                if known == before {
                    break;
                }
            }
            hits += (known >> target & 1) as u64;
        }
        hits as f64 / samples as f64
    }
}

/// A fixed attribute rule in adverb form.
pub fn adverb_rule(premises: &[&str], conclusion: &str, adverb: Adverb) -> Rule {
    let atom = |n: &str| RuleAtom::new(Predicate::unary(n).unwrap(), vec![Term::Var(0)]).unwrap();
    Rule::with_adverb(premises.iter().map(|p| atom(p)).collect(), atom(conclusion), adverb).unwrap()
}

/// Random fact or rule over the builtin vocabulary, renderable in every
/// style. Rules carry an adverb when `adverb` is set, otherwise a
/// probability on a 0.001 grid.
pub fn random_text_rule<R: Rng>(rng: &mut R, vocab: &Vocabulary, adverb: bool) -> Rule {
    let attributes: Vec<&Predicate> = vocab.attributes().collect();
    let relations: Vec<&Predicate> = vocab.relations().collect();
    loop {
        let vars = rng.random_range(1..=3u8);
        let term = |rng: &mut R| {
            if rng.random_bool(0.1) {
                Term::Const(Entity::new(*NAMES.choose(rng).unwrap()).unwrap())
            } else {
                Term::Var(rng.random_range(0..vars))
            }
        };
        let atom = |rng: &mut R| {
            if rng.random_bool(0.5) {
                RuleAtom::new((*relations.choose(rng).unwrap()).clone(), vec![term(rng), term(rng)]).unwrap()
            } else {
                RuleAtom::new((*attributes.choose(rng).unwrap()).clone(), vec![term(rng)]).unwrap()
            }
        };
        let premises: Vec<RuleAtom> = (0..rng.random_range(1..=3)).map(|_| atom(rng)).collect();
        let conclusion = atom(rng);
        let rule = if adverb {
            Rule::with_adverb(premises, conclusion, *Adverb::ALL.choose(rng).unwrap())
        } else {
            Rule::new(premises, conclusion, rng.random_range(0..=1000) as f64 / 1000.0)
        };
        if let Ok(rule) = rule {
            return rule;
        }
    }
}

pub fn random_text_fact<R: Rng>(rng: &mut R, vocab: &Vocabulary) -> Fact {
    let p = *vocab.entries().iter().map(|e| &e.predicate).collect::<Vec<_>>().choose(rng).unwrap();
    let args: Vec<&str> = (0..p.arity().count()).map(|_| *NAMES.choose(rng).unwrap()).collect();
    Fact::given(Atom::parts(p.name(), &args).unwrap())
}
