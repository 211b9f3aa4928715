use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::rules::{Atom, Entity, Rule, RuleAtom, Term, Theory};

/// One ground application of a rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Derivation {
    /// Index into the theory's rule list.
    pub rule: usize,
    pub premises: Vec<Atom>,
    pub conclusion: Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureEntry {
    /// Probability of the fact when it is given, `None` when only derived.
    pub given: Option<f64>,
    /// Fewest consecutive rule applications needed; 0 for given facts.
    pub depth: usize,
    /// Indices into [`Closure::derivations`] concluding this fact.
    pub derivations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    Simple,
    Complex,
}

/// Least fixed point of rule application over a theory, with every ground
/// derivation that holds in it.
#[derive(Debug, Clone, Default)]
pub struct Closure {
    entries: BTreeMap<Atom, ClosureEntry>,
    derivations: Vec<Derivation>,
}

/// Extends `binding` so that `pattern` matches `atom`.
fn unify(pattern: &RuleAtom, atom: &Atom, binding: &mut [Option<Entity>]) -> bool {
    if pattern.predicate() != atom.predicate() {
        return false;
    }
    for (term, value) in pattern.args().iter().zip(atom.args()) {
        match term {
            Term::Const(c) if c != value => return false,
            Term::Const(_) => {}
            Term::Var(v) => match &binding[*v as usize] {
                Some(bound) if bound != value => return false,
                Some(_) => {}
                None => binding[*v as usize] = Some(value.clone()),
            },
        }
    }
    true
}

fn instantiate(pattern: &RuleAtom, binding: &[Option<Entity>]) -> Atom {
    let args = pattern
        .args()
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => {
                binding[*v as usize].clone().expect("range-restricted rule binds every conclusion variable")
            }
        })
        .collect();
    Atom::new(pattern.predicate().clone(), args).expect("arity checked on construction")
}

/// Every ground instance of `rule` whose premises are all in `known`.
fn matches(rule_index: usize, rule: &Rule, by_predicate: &BTreeMap<&str, Vec<&Atom>>, out: &mut BTreeSet<Derivation>) {
    fn go(
        rule_index: usize,
        rule: &Rule,
        by_predicate: &BTreeMap<&str, Vec<&Atom>>,
        depth: usize,
        binding: &mut Vec<Option<Entity>>,
        chosen: &mut Vec<Atom>,
        out: &mut BTreeSet<Derivation>,
    ) {
        if depth == rule.premises().len() {
            out.insert(Derivation {
                rule: rule_index,
                premises: chosen.clone(),
                conclusion: instantiate(rule.conclusion(), binding),
            });
            return;
        }
        let pattern = &rule.premises()[depth];
        let Some(candidates) = by_predicate.get(pattern.predicate().name()) else {
            return;
        };
        for atom in candidates {
            let saved = binding.clone();
            if unify(pattern, atom, binding) {
                chosen.push((*atom).clone());
                go(rule_index, rule, by_predicate, depth + 1, binding, chosen, out);
                chosen.pop();
            }
            *binding = saved;
        }
    }
    let mut binding = vec![None; rule.variable_count()];
    go(rule_index, rule, by_predicate, 0, &mut binding, &mut Vec::new(), out);
}

impl Closure {
    pub fn entries(&self) -> &BTreeMap<Atom, ClosureEntry> {
        &self.entries
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    pub fn get(&self, atom: &Atom) -> Option<&ClosureEntry> {
        self.entries.get(atom)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.entries.contains_key(atom)
    }

    pub fn depth(&self, atom: &Atom) -> Option<usize> {
        self.entries.get(atom).map(|e| e.depth)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.entries.values().map(|e| e.depth).max().unwrap_or(0)
    }

    /// Facts in the derivation cone of `h`: `h` itself and, recursively,
    /// the premises of every derivation of a fact already in the cone.
    /// Empty when `h` is not derivable.
    pub fn cone(&self, h: &Atom) -> BTreeSet<Atom> {
        let mut cone = BTreeSet::new();
        if !self.contains(h) {
            return cone;
        }
        let mut queue = VecDeque::from([h.clone()]);
        while let Some(fact) = queue.pop_front() {
            if !cone.insert(fact.clone()) {
                continue;
            }
            for &d in &self.entries[&fact].derivations {
                queue.extend(self.derivations[d].premises.iter().cloned());
            }
        }
        cone
    }

    /// Indices of the derivations inside the cone of `h`, ascending.
    pub fn cone_derivations(&self, h: &Atom) -> Vec<usize> {
        let cone = self.cone(h);
        let mut out: Vec<usize> = cone.iter().flat_map(|f| self.entries[f].derivations.iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// `Simple` when `h` is underivable, or when every fact in its cone has
    /// a single support (a given fact counts as one) and the resulting proof
    /// tree uses each rule and each uncertain fact at most once. The second
    /// condition is what makes the chained product exact.
    pub fn classify(&self, h: &Atom) -> NetworkKind {
        let cone = self.cone(h);
        for fact in &cone {
            let entry = &self.entries[fact];
            if entry.derivations.len() + usize::from(entry.given.is_some()) > 1 {
                return NetworkKind::Complex;
            }
        }
        if cone.is_empty() {
            return NetworkKind::Simple;
        }
        let mut rule_uses: BTreeMap<usize, usize> = BTreeMap::new();
        let mut fact_uses: BTreeMap<&Atom, usize> = BTreeMap::new();
        let mut stack = vec![h];
        while let Some(fact) = stack.pop() {
            let entry = &self.entries[fact];
            let random = entry.given.is_none_or(|p| p < 1.0);
            if random {
                *fact_uses.entry(fact).or_default() += 1;
            }
            if let Some(&d) = entry.derivations.first() {
                let derivation = &self.derivations[d];
                *rule_uses.entry(derivation.rule).or_default() += 1;
                stack.extend(derivation.premises.iter());
            }
        }
        if rule_uses.values().chain(fact_uses.values()).any(|&n| n > 1) {
            NetworkKind::Complex
        } else {
            NetworkKind::Simple
        }
    }
}

/// Forward-chains `theory` to its fixed point, recording every derivation
/// and the minimal depth of each fact.
pub fn derive_closure(theory: &Theory) -> Closure {
    let mut known: BTreeSet<Atom> = theory.facts().iter().map(|f| f.atom.clone()).collect();
    let mut derivations;
    loop {
        let mut by_predicate: BTreeMap<&str, Vec<&Atom>> = BTreeMap::new();
        for atom in &known {
            by_predicate.entry(atom.predicate().name()).or_default().push(atom);
        }
        let mut round = BTreeSet::new();
        for (i, rule) in theory.rules().iter().enumerate() {
            matches(i, rule, &by_predicate, &mut round);
        }
        let fresh: Vec<Atom> = round.iter().map(|d| &d.conclusion).filter(|c| !known.contains(*c)).cloned().collect();
        derivations = round;
        if fresh.is_empty() {
            break;
        }
        known.extend(fresh);
    }

    let derivations: Vec<Derivation> = derivations.into_iter().collect();
    let mut entries: BTreeMap<Atom, ClosureEntry> = known
        .into_iter()
        .map(|a| {
            let given = theory.fact(&a).map(|f| f.probability);
            let depth = if given.is_some() { 0 } else { usize::MAX };
            (a, ClosureEntry { given, depth, derivations: Vec::new() })
        })
        .collect();
    for (i, d) in derivations.iter().enumerate() {
        entries.get_mut(&d.conclusion).expect("conclusions are in the fixed point").derivations.push(i);
    }

    // Bellman-Ford style relaxation; depths only decrease.
    let mut changed = true;
    while changed {
        changed = false;
        for d in &derivations {
            let premise_depth = d.premises.iter().map(|p| entries[p].depth).max().unwrap_or(0);
            if premise_depth == usize::MAX {
                continue;
            }
            let entry = entries.get_mut(&d.conclusion).expect("present");
            if premise_depth + 1 < entry.depth {
                entry.depth = premise_depth + 1;
                changed = true;
            }
        }
    }
    Closure { entries, derivations }
}
