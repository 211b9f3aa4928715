use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DataGenError, DatasetStyle, GenConfig, Instance};
use crate::inference::{derive_closure, infer_exact_in, solve, Closure, NetworkKind, DEFAULT_WORLD_CAP};
use crate::rules::{Atom, Entity, Fact, Predicate, Rule, RuleAtom, Term, Theory};
use crate::textio::{render_context, render_hypothesis};

/// What a rejection-sampling loop is looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub depth: usize,
    pub label: bool,
    /// `None` accepts either kind.
    pub kind: Option<NetworkKind>,
}

/// SplitMix64 finalizer; derives independent per-cell seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn var_atom(p: &Predicate) -> RuleAtom {
    RuleAtom::new(p.clone(), vec![Term::Var(0)]).expect("attribute arity")
}

fn ground(p: &Predicate, args: &[&Entity]) -> Atom {
    Atom::new(p.clone(), args.iter().map(|e| (*e).clone()).collect()).expect("arity matches")
}

fn sampled_rule<R: Rng>(cfg: &GenConfig, premises: Vec<RuleAtom>, conclusion: RuleAtom, rng: &mut R) -> Rule {
    let (_, adverb) = cfg.sampler.sample(rng);
    Rule::with_adverb(premises, conclusion, adverb).expect("well-formed attribute rule")
}

/// A planted attribute chain `a0 -> a1 -> ... -> a_d` on one entity, an
/// optional parallel branch joining the chain (Complex), and distractors
/// that cannot reach the chain's derivation cone.
fn propose_ruletaker<R: Rng>(cfg: &GenConfig, target: Target, rng: &mut R) -> (Theory, Vec<Atom>) {
    let mut pool: Vec<Predicate> = cfg.vocabulary.attributes().cloned().collect();
    pool.shuffle(rng);
    let mut entities: Vec<&Entity> = cfg.entities.iter().collect();
    entities.shuffle(rng);
    entities.truncate(rng.random_range(2..=3usize.min(cfg.entities.len())));
    let main = entities[0];

    let d = target.depth;
    let chain_len = if d == 0 { rng.random_range(0..=cfg.max_depth.clamp(1, 2)) } else { d };
    let chain: Vec<Predicate> = pool.drain(..=chain_len).collect();
    let mut protected: BTreeSet<Predicate> = chain.iter().cloned().collect();
    let mut facts = vec![Fact::given(ground(&chain[0], &[main]))];
    let mut rules = Vec::new();
    for i in 1..=chain_len {
        let mut premises = vec![var_atom(&chain[i - 1])];
        if rng.random_bool(0.25) {
            let extra = pool.pop().expect("validated vocabulary size");
            facts.push(Fact::given(ground(&extra, &[main])));
            premises.push(var_atom(&extra));
            protected.insert(extra);
        }
        rules.push(sampled_rule(cfg, premises, var_atom(&chain[i]), rng));
    }
    let wants_complex = target.kind == Some(NetworkKind::Complex) && d > 0;
    if wants_complex {
        let k = rng.random_range(1..=d);
        let branch: Vec<Predicate> = pool.drain(..k).collect();
        facts.push(Fact::given(ground(&branch[0], &[main])));
        for j in 1..k {
            rules.push(sampled_rule(cfg, vec![var_atom(&branch[j - 1])], var_atom(&branch[j]), rng));
        }
        rules.push(sampled_rule(cfg, vec![var_atom(&branch[k - 1])], var_atom(&chain[k]), rng));
        protected.extend(branch);
    }

    let all: Vec<Predicate> = cfg.vocabulary.attributes().cloned().collect();
    let free: Vec<Predicate> = pool;
    let mut seen: BTreeSet<Atom> = facts.iter().map(|f| f.atom.clone()).collect();
    for other in &entities[1..] {
        for _ in 0..rng.random_range(1..=2) {
            let atom = ground(all.choose(rng).expect("nonempty vocabulary"), &[other]);
            if seen.insert(atom.clone()) {
                facts.push(Fact::given(atom));
            }
        }
    }
    if rng.random_bool(0.5) {
        if let Some(p) = free.choose(rng) {
            let atom = ground(p, &[main]);
            if seen.insert(atom.clone()) {
                facts.push(Fact::given(atom));
            }
        }
    }
    for _ in 0..rng.random_range(1..=2) {
        let premise = all.choose(rng).expect("nonempty vocabulary");
        let Some(conclusion) = free.choose(rng) else { break };
        if premise != conclusion {
            rules.push(sampled_rule(cfg, vec![var_atom(premise)], var_atom(conclusion), rng));
        }
    }

    let hypothesis = if d == 0 && !target.label {
        let entity = entities.choose(rng).expect("nonempty");
        let p = if rng.random_bool(0.5) {
            chain.choose(rng).expect("nonempty chain")
        } else {
            all.choose(rng).expect("nonempty vocabulary")
        };
        ground(p, &[entity])
    } else {
        ground(&chain[d.min(chain_len)], &[main])
    };
    facts.shuffle(rng);
    rules.shuffle(rng);
    let theory = Theory::new(facts, rules).expect("generated theory is well formed");
    (theory, vec![hypothesis])
}

/// The fixed relational rule pool; the probabilities are implicit and
/// reused by every instance.
pub fn rulebert_pool() -> Vec<Rule> {
    [
        "Sibling(A,B) -> Friend(A,B) @ 0.6",
        "Cousin(A,B) -> Spouse(A,B) @ 0.15",
        "Friend(A,B) -> Spouse(A,B) @ 0.3",
        "Spouse(A,B) & Child(C,B) -> Child(C,A) @ 0.9",
        "Child(A,B) -> Parent(B,A) @ 0.95",
        "Parent(A,B) & Parent(B,C) -> Grandparent(A,C) @ 0.85",
        "Grandparent(A,B) -> Relative(A,B) @ 0.9",
        "Parent(A,B) -> Relative(A,B) @ 0.8",
        "Sibling(A,B) & Child(C,A) -> Relative(B,C) @ 0.7",
        "Parent(C,A) & Sibling(A,B) -> Parent(C,B) @ 0.95",
        "Grandparent(C,A) & Sibling(A,B) -> Grandparent(C,B) @ 0.9",
    ]
    .iter()
    .map(|r| r.parse().expect("pool rule parses"))
    .collect()
}

const RULEBERT_BASE: [&str; 5] = ["Sibling", "Cousin", "Friend", "Child", "Parent"];

/// Backward plan for relational theories: the rules used and the given
/// facts needed to derive each planned atom.
#[derive(Default)]
struct Plan {
    rules: Vec<usize>,
    facts: BTreeSet<Atom>,
    derived: Vec<(Atom, usize)>,
}

impl Plan {
    /// Plants a derivation of `goal` that is `depth` rule applications
    /// deep. Rule choice leans towards high probabilities for True targets.
    fn derive<R: Rng>(
        &mut self,
        pool: &[Rule],
        goal: &Atom,
        depth: usize,
        entities: &[&Entity],
        label: bool,
        rng: &mut R,
    ) -> bool {
        if depth == 0 {
            self.facts.insert(goal.clone());
            return true;
        }
        let concludes = |p: &Predicate| pool.iter().any(|r| r.conclusion().predicate() == p);
        let options: Vec<usize> =
            (0..pool.len()).filter(|&i| pool[i].conclusion().predicate() == goal.predicate()).collect();
        let weight = |&i: &usize| if label { pool[i].probability().powi(6) } else { 1.0 };
        let Ok(&k) = options.choose_weighted(rng, weight) else {
            return false;
        };
        let rule = &pool[k];
        let mut binding: Vec<Option<&Entity>> = vec![None; rule.variable_count()];
        for (term, arg) in rule.conclusion().args().iter().zip(goal.args()) {
            match term {
                Term::Var(v) => match binding[*v as usize] {
                    Some(e) if e != arg => return false,
                    _ => binding[*v as usize] = Some(arg),
                },
                Term::Const(c) if c != arg => return false,
                Term::Const(_) => {}
            }
        }
        for slot in binding.iter_mut().filter(|b| b.is_none()) {
            let fresh: Vec<&&Entity> = entities.iter().filter(|e| !goal.args().contains(e)).collect();
            let Some(e) = fresh.choose(rng) else { return false };
            *slot = Some(**e);
        }
        let premises: Vec<Atom> = rule
            .premises()
            .iter()
            .map(|p| {
                let args: Vec<&Entity> = p
                    .args()
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => binding[*v as usize].expect("all variables bound"),
                        Term::Const(c) => c,
                    })
                    .collect();
                ground(p.predicate(), &args)
            })
            .collect();
        let cyclic = |p: &Atom| p == goal || self.derived.iter().any(|(d, _)| d == p);
        if premises.iter().any(|p| cyclic(p) || p.args().windows(2).any(|w| w[0] == w[1])) {
            return false;
        }
        let deep: Vec<usize> = (0..premises.len()).filter(|&i| concludes(premises[i].predicate())).collect();
        let Some(&next) = deep.choose(rng) else { return false };
        self.rules.push(k);
        self.derived.push((goal.clone(), depth));
        for (i, p) in premises.iter().enumerate() {
            let ok = if i == next {
                self.derive(pool, p, depth - 1, entities, label, rng)
            } else {
                self.derive(pool, p, 0, entities, label, rng)
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Relational theories over the fixed pool. Inference targets are planted
/// by backward chaining from a random goal; depth-0 targets come from
/// random facts.
fn propose_rulebert<R: Rng>(cfg: &GenConfig, target: Target, pool: &[Rule], rng: &mut R) -> (Theory, Vec<Atom>) {
    let mut entities: Vec<&Entity> = cfg.entities.iter().collect();
    entities.shuffle(rng);
    entities.truncate(rng.random_range(4..=6usize.min(cfg.entities.len())));
    let base: Vec<Predicate> = RULEBERT_BASE.iter().map(|n| Predicate::binary(*n).expect("valid name")).collect();
    let random_pair = |rng: &mut R| -> (&Entity, &Entity) {
        let pair: Vec<&&Entity> = entities.choose_multiple(rng, 2).collect();
        (*pair[0], *pair[1])
    };

    let mut plan = Plan::default();
    let mut goal = None;
    if target.depth > 0 {
        let heads: Vec<&Predicate> = pool.iter().map(|r| r.conclusion().predicate()).collect();
        let (x, y) = random_pair(rng);
        let h = ground(heads.choose(rng).expect("nonempty pool"), &[x, y]);
        if !plan.derive(pool, &h, target.depth, &entities, target.label, rng) {
            return (Theory::default(), vec![]);
        }
        if target.kind == Some(NetworkKind::Complex) {
            let (again, depth) = plan.derived.choose(rng).expect("goal is derived").clone();
            let mut alternative = Plan::default();
            if alternative.derive(pool, &again, depth, &entities, target.label, rng) {
                plan.rules.extend(alternative.rules);
                plan.facts.extend(alternative.facts);
            }
        }
        goal = Some(h);
    }
    for _ in 0..rng.random_range(1..=3) {
        let (x, y) = random_pair(rng);
        plan.facts.insert(ground(base.choose(rng).expect("nonempty"), &[x, y]));
    }
    let mut used: BTreeSet<usize> = plan.rules.into_iter().collect();
    for _ in 0..rng.random_range(1..=3) {
        used.insert(rng.random_range(0..pool.len()));
    }
    let mut facts: Vec<Fact> = plan.facts.into_iter().map(Fact::given).collect();
    let mut rules: Vec<Rule> = used.into_iter().map(|i| pool[i].clone()).collect();
    facts.shuffle(rng);
    rules.shuffle(rng);
    let theory = Theory::new(facts, rules).expect("generated theory is well formed");

    let mut candidates: Vec<Atom> = match goal {
        Some(h) => vec![h],
        None if target.label => theory.facts().iter().map(|f| f.atom.clone()).collect(),
        None => {
            let closure = derive_closure(&theory);
            let relations: Vec<&Predicate> = cfg.vocabulary.relations().collect();
            (0..4)
                .map(|_| {
                    let (x, y) = random_pair(rng);
                    ground(relations.choose(rng).expect("nonempty"), &[x, y])
                })
                .filter(|a| !closure.contains(a))
                .collect()
        }
    };
    candidates.shuffle(rng);
    (theory, candidates)
}

/// Labels `h` with the oracle and keeps it only if it matches `target`.
fn finish<R: Rng>(
    cfg: &GenConfig,
    theory: &Theory,
    closure: &Closure,
    h: &Atom,
    target: Target,
    id: &str,
    rng: &mut R,
) -> Result<Option<Instance>, DataGenError> {
    let depth = closure.depth(h);
    let depth_ok = if target.depth == 0 && !target.label { depth.is_none() } else { depth == Some(target.depth) };
    if !depth_ok {
        return Ok(None);
    }
    let kind = closure.classify(h);
    let wanted_kind = if target.depth == 0 { Some(NetworkKind::Simple) } else { target.kind };
    if wanted_kind.is_some_and(|k| k != kind) {
        return Ok(None);
    }
    let gold = match infer_exact_in(theory, closure, h, DEFAULT_WORLD_CAP) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    // exactly 0.5 sits on the boundary of both label conventions
    if gold == 0.5 || (gold > 0.5) != target.label {
        return Ok(None);
    }
    let solution = solve(theory, closure, h, DEFAULT_WORLD_CAP)?;
    let context = render_context(&cfg.vocabulary, theory, cfg.include_rules_in_text, cfg.style, rng.random())?;
    Ok(Some(Instance {
        id: id.to_string(),
        theory: theory.clone(),
        context,
        hypothesis: h.clone(),
        question: render_hypothesis(&cfg.vocabulary, h)?,
        gold_probability: gold,
        gold_label: gold > 0.5,
        depth: depth.unwrap_or(0),
        kind,
        proof: solution.proof,
        style: cfg.style,
        rules_in_context: cfg.include_rules_in_text,
    }))
}

fn sample_instance<R: Rng>(
    cfg: &GenConfig,
    target: Target,
    id: &str,
    pool: &[Rule],
    rng: &mut R,
) -> Result<Instance, DataGenError> {
    for _ in 0..cfg.attempt_budget {
        let (theory, candidates) = match cfg.dataset {
            DatasetStyle::RuleTakerPro => propose_ruletaker(cfg, target, rng),
            DatasetStyle::RuleBert => propose_rulebert(cfg, target, pool, rng),
        };
        let closure = derive_closure(&theory);
        for h in &candidates {
            if let Some(inst) = finish(cfg, &theory, &closure, h, target, id, rng)? {
                return Ok(inst);
            }
        }
    }
    Err(DataGenError::BudgetExhausted {
        depth: target.depth,
        label: target.label,
        kind: target.kind,
        attempts: cfg.attempt_budget,
    })
}

/// Rejection-samples one instance whose question has `target_depth` and a
/// gold probability on the requested side of 0.5.
pub fn generate_instance<R: Rng>(
    cfg: &GenConfig,
    target_depth: usize,
    target_label: bool,
    rng: &mut R,
) -> Result<Instance, DataGenError> {
    generate_instance_of_kind(cfg, target_depth, target_label, None, rng)
}

pub fn generate_instance_of_kind<R: Rng>(
    cfg: &GenConfig,
    target_depth: usize,
    target_label: bool,
    kind: Option<NetworkKind>,
    rng: &mut R,
) -> Result<Instance, DataGenError> {
    cfg.validate()?;
    if target_depth > cfg.max_depth {
        return Err(DataGenError::DepthAboveMax { depth: target_depth, max: cfg.max_depth });
    }
    let target = Target { depth: target_depth, label: target_label, kind };
    let id = format!("d{target_depth}-{}", if target_label { "t" } else { "f" });
    sample_instance(cfg, target, &id, &rulebert_pool(), rng)
}

/// Number of Complex instances required in a (depth, label) cell.
pub fn complex_quota(depth: usize, count: usize, fraction: f64) -> usize {
    if depth == 0 {
        0
    } else {
        (count as f64 * fraction).round() as usize
    }
}

/// A whole split: cells are generated independently from derived seeds and
/// concatenated in profile order (depth ascending, True before False).
pub fn generate_split(cfg: &GenConfig) -> Result<Vec<Instance>, DataGenError> {
    cfg.validate()?;
    let prefix = match cfg.dataset {
        DatasetStyle::RuleTakerPro => "rtp",
        DatasetStyle::RuleBert => "rb",
    };
    let pool = rulebert_pool();
    let cells: Vec<(usize, bool, usize)> = cfg
        .profile
        .cells
        .iter()
        .flat_map(|c| [(c.depth, true, c.true_count), (c.depth, false, c.false_count)])
        .filter(|&(_, _, n)| n > 0)
        .collect();
    let generated: Vec<Vec<Instance>> = cells
        .par_iter()
        .map(|&(depth, label, count)| {
            let tag = (depth as u64) << 1 | u64::from(label);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, tag));
            let complex = complex_quota(depth, count, cfg.complex_fraction);
            (0..count)
                .map(|i| {
                    let kind = if i < complex { NetworkKind::Complex } else { NetworkKind::Simple };
                    let target = Target { depth, label, kind: Some(kind) };
                    let id = format!("{prefix}-d{depth}-{}-{i:05}", if label { "t" } else { "f" });
                    sample_instance(cfg, target, &id, &pool, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(generated.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{read_instances, write_instances, DepthProfile, TrainingSet};
    use crate::inference::infer_exact;

    fn small(set: TrainingSet) -> GenConfig {
        GenConfig::ruletaker_pro(DepthProfile::ruletaker_pro(set).scaled_to_total(60), 7)
    }

    #[test]
    fn split_matches_profile_and_oracle() {
        let cfg = small(TrainingSet::Mmax);
        let split = generate_split(&cfg).unwrap();
        assert_eq!(split.len(), 60);
        for cell in &cfg.profile.cells {
            for (label, n) in [(true, cell.true_count), (false, cell.false_count)] {
                let got = split.iter().filter(|i| i.depth == cell.depth && i.gold_label == label).count();
                assert_eq!(got, n, "depth {} label {label}", cell.depth);
            }
        }
        for inst in &split {
            let p = infer_exact(&inst.theory, &inst.hypothesis).unwrap();
            assert_eq!(p, inst.gold_probability);
            assert_eq!(inst.gold_label, p > 0.5);
            assert_eq!(classify_of(inst), inst.kind);
        }
    }

    fn classify_of(inst: &Instance) -> NetworkKind {
        derive_closure(&inst.theory).classify(&inst.hypothesis)
    }

    #[test]
    fn split_is_deterministic_and_round_trips() {
        let cfg = small(TrainingSet::M2);
        let a = generate_split(&cfg).unwrap();
        let b = generate_split(&cfg).unwrap();
        assert_eq!(a, b);
        let text = write_instances(&a, &cfg.vocabulary).unwrap();
        let back = read_instances(&text).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rulebert_instances() {
        let profile = DepthProfile::ruletaker_pro(TrainingSet::M2).scaled_to_total(30);
        let cfg = GenConfig::rulebert(profile, 3);
        let split = generate_split(&cfg).unwrap();
        assert_eq!(split.len(), 30);
        assert!(split.iter().all(|i| i.id.starts_with("rb-")));
        assert!(split.iter().any(|i| i.depth == 2));
    }

    #[test]
    fn single_instance_and_depth_limit() {
        let cfg = small(TrainingSet::M2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = generate_instance(&cfg, 2, false, &mut rng).unwrap();
        assert_eq!(inst.depth, 2);
        assert!(inst.gold_probability < 0.5);
        assert!(matches!(generate_instance(&cfg, 9, true, &mut rng), Err(DataGenError::DepthAboveMax { .. })));
    }

    #[test]
    fn quota() {
        assert_eq!(complex_quota(0, 50, 0.2), 0);
        assert_eq!(complex_quota(2, 38, 0.2), 8);
    }
}
