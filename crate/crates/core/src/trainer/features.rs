use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rules::{Arity, Atom, Entity, Rule, RuleAtom, Term, Theory};
use crate::scalar::Scalar;
use crate::textio::Vocabulary;

/// Sparse input vector: `(index, value)` pairs in ascending index order.
pub type SparseVec<T> = Vec<(usize, T)>;

/// Deterministic encoding of (theory, query) pairs into a fixed-length
/// vector sized by the vocabulary. With `P` predicates the blocks are:
///
/// * query predicate one-hot (`P`)
/// * probability of each given fact on the query's arguments (`P`)
/// * the same on the reversed arguments of a binary query (`P`)
/// * share of given facts per predicate (`P`)
/// * rule edges premise → conclusion carrying the rule probability (`P·P`),
///   only when the rules are part of the context
/// * the row of that matrix ending in the query predicate (`P`)
/// * rules-present flag and query-arguments-mentioned flag
/// * probability of the query as a given fact, and the best one-step
///   support for it: rule probability times its premises' given
///   probabilities, maximised over matching rules
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    vocabulary: Vocabulary,
}

impl FeatureMap {
    pub fn new(vocabulary: Vocabulary) -> Self {
        FeatureMap { vocabulary }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn predicates(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn dim(&self) -> usize {
        let p = self.predicates();
        5 * p + p * p + 4
    }

    fn index(&self, atom_predicate: &str) -> Option<usize> {
        self.vocabulary.index_of(atom_predicate)
    }

    /// Predicates outside the vocabulary are ignored.
    pub fn encode<T: Scalar>(&self, theory: &Theory, rules_in_context: bool, query: &Atom) -> SparseVec<T> {
        let p = self.predicates();
        let mut x: BTreeMap<usize, f64> = BTreeMap::new();
        if let Some(q) = self.index(query.predicate().name()) {
            x.insert(q, 1.0);
        }
        let reversed: Vec<_> = query.args().iter().rev().cloned().collect();
        let facts = theory.facts();
        for fact in facts {
            let Some(i) = self.index(fact.atom.predicate().name()) else {
                continue;
            };
            if fact.atom.args() == query.args() {
                x.insert(p + i, fact.probability);
            }
            if query.predicate().arity() == Arity::Binary && fact.atom.args() == reversed.as_slice() {
                x.insert(2 * p + i, fact.probability);
            }
            *x.entry(3 * p + i).or_default() += 1.0 / facts.len() as f64;
        }
        if rules_in_context {
            for rule in theory.rules() {
                let Some(c) = self.index(rule.conclusion().predicate().name()) else {
                    continue;
                };
                for premise in rule.premises() {
                    if let Some(a) = self.index(premise.predicate().name()) {
                        let slot = x.entry(4 * p + a * p + c).or_default();
                        *slot = slot.max(rule.probability());
                        if rule.conclusion().predicate() == query.predicate() {
                            let slot = x.entry(4 * p + p * p + a).or_default();
                            *slot = slot.max(rule.probability());
                        }
                    }
                }
            }
            if !theory.rules().is_empty() {
                x.insert(5 * p + p * p, 1.0);
            }
        }
        let mentioned = query.args().iter().all(|e| facts.iter().any(|f| f.atom.args().contains(e)));
        if mentioned {
            x.insert(5 * p + p * p + 1, 1.0);
        }
        let base = 5 * p + p * p + 2;
        if let Some(f) = theory.fact(query) {
            x.insert(base, f.probability);
        }
        if rules_in_context {
            let support = theory.rules().iter().map(|r| one_step_support(theory, r, query)).fold(0.0, f64::max);
            x.insert(base + 1, support);
        }
        x.into_iter().filter(|&(_, v)| v != 0.0).map(|(i, v)| (i, T::of(v))).collect()
    }

    /// Dense form of [`FeatureMap::encode`].
    pub fn encode_dense<T: Scalar>(&self, theory: &Theory, rules_in_context: bool, query: &Atom) -> Vec<T> {
        let mut dense = vec![T::zero(); self.dim()];
        for (i, v) in self.encode::<T>(theory, rules_in_context, query) {
            dense[i] = v;
        }
        dense
    }
}

/// Best `Pr · Π P(premise)` over groundings of `rule` that conclude `query`
/// from given facts.
fn one_step_support(theory: &Theory, rule: &Rule, query: &Atom) -> f64 {
    let mut binding: Vec<Option<&Entity>> = vec![None; rule.variable_count()];
    if !bind(rule.conclusion(), query, &mut binding) {
        return 0.0;
    }
    fn go<'a>(theory: &'a Theory, premises: &[RuleAtom], binding: &mut Vec<Option<&'a Entity>>) -> f64 {
        let Some((first, rest)) = premises.split_first() else {
            return 1.0;
        };
        let mut best = 0.0;
        for fact in theory.facts() {
            let saved = binding.clone();
            if bind(first, &fact.atom, binding) {
                best = f64::max(best, fact.probability * go(theory, rest, binding));
            }
            *binding = saved;
        }
        best
    }
    rule.probability() * go(theory, rule.premises(), &mut binding)
}

fn bind<'a>(pattern: &RuleAtom, atom: &'a Atom, binding: &mut [Option<&'a Entity>]) -> bool {
    if pattern.predicate() != atom.predicate() {
        return false;
    }
    for (term, value) in pattern.args().iter().zip(atom.args()) {
        match term {
            Term::Const(c) if c != value => return false,
            Term::Const(_) => {}
            Term::Var(v) => match binding[*v as usize] {
                Some(bound) if bound != value => return false,
                Some(_) => {}
                None => binding[*v as usize] = Some(value),
            },
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Fact;

    fn theory() -> Theory {
        Theory::new(
            vec![
                Fact::given("Big(Dave)".parse().unwrap()),
                Fact::uncertain("Cousin(David,Ann)".parse().unwrap(), 0.5).unwrap(),
            ],
            vec!["Big(A) -> Green(A) @ usually".parse().unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn encoding_is_deterministic_and_in_range() {
        let fm = FeatureMap::new(Vocabulary::builtin());
        let q: Atom = "Green(Dave)".parse().unwrap();
        let a = fm.encode::<f64>(&theory(), true, &q);
        assert_eq!(a, fm.encode::<f64>(&theory(), true, &q));
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(a.iter().all(|&(i, _)| i < fm.dim()));
        let without = fm.encode::<f64>(&theory(), false, &q);
        assert!(without.len() < a.len());
        assert_eq!(fm.encode_dense::<f64>(&theory(), true, &q).len(), fm.dim());
    }

    #[test]
    fn reversed_block_for_relations() {
        let fm = FeatureMap::new(Vocabulary::builtin());
        let p = Vocabulary::builtin().len();
        let cousin = Vocabulary::builtin().index_of("Cousin").unwrap();
        let x = fm.encode::<f64>(&theory(), true, &"Spouse(Ann,David)".parse().unwrap());
        assert!(x.contains(&(2 * p + cousin, 0.5)));
        let x = fm.encode::<f64>(&theory(), true, &"Spouse(David,Ann)".parse().unwrap());
        assert!(x.contains(&(p + cousin, 0.5)));
    }
}
