mod common;

use common::{random_text_fact, random_text_rule};
use pct_core::rules::Theory;
use pct_core::textio::{
    parse_bare_rule, parse_fact, parse_hypothesis, parse_rule, render_context, render_fact, render_hypothesis,
    render_rule, RuleStyle, Vocabulary,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn adverb_rules_round_trip(seed in any::<u64>()) {
        let vocab = Vocabulary::builtin();
        let rule = random_text_rule(&mut ChaCha8Rng::seed_from_u64(seed), &vocab, true);
        let text = render_rule(&vocab, &rule, RuleStyle::Adverb).unwrap();
        prop_assert_eq!(parse_rule(&vocab, &text).unwrap(), rule);
    }

    #[test]
    fn numeric_rules_round_trip(seed in any::<u64>()) {
        let vocab = Vocabulary::builtin();
        let rule = random_text_rule(&mut ChaCha8Rng::seed_from_u64(seed), &vocab, false);
        let text = render_rule(&vocab, &rule, RuleStyle::Numeric).unwrap();
        prop_assert_eq!(parse_rule(&vocab, &text).unwrap(), rule);
    }

    #[test]
    fn bare_rules_round_trip(seed in any::<u64>()) {
        let vocab = Vocabulary::builtin();
        let rule = random_text_rule(&mut ChaCha8Rng::seed_from_u64(seed), &vocab, false);
        let text = render_rule(&vocab, &rule, RuleStyle::Bare).unwrap();
        prop_assert!(parse_rule(&vocab, &text).is_err());
        let back = parse_bare_rule(&vocab, &text, rule.probability()).unwrap();
        prop_assert_eq!(back, rule);
    }

    #[test]
    fn facts_round_trip(seed in any::<u64>()) {
        let vocab = Vocabulary::builtin();
        let fact = random_text_fact(&mut ChaCha8Rng::seed_from_u64(seed), &vocab);
        let text = render_fact(&vocab, &fact).unwrap();
        prop_assert_eq!(parse_fact(&vocab, &text).unwrap(), fact.clone());
        prop_assert_eq!(parse_hypothesis(&vocab, &render_hypothesis(&vocab, &fact.atom).unwrap()).unwrap(), fact.atom);
    }

    #[test]
    fn bare_context_without_rules_has_no_rule_sentences(seed in any::<u64>()) {
        let vocab = Vocabulary::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let facts = (0..3).map(|_| random_text_fact(&mut rng, &vocab)).collect::<Vec<_>>();
        let mut unique = facts.clone();
        unique.sort_by(|a, b| a.atom.cmp(&b.atom));
        unique.dedup_by(|a, b| a.atom == b.atom);
        let rules = (0..3).map(|_| random_text_rule(&mut rng, &vocab, true)).collect();
        let theory = Theory::new(unique.clone(), rules).unwrap();
        let text = render_context(&vocab, &theory, false, RuleStyle::Bare, seed).unwrap();
        prop_assert!(!text.contains("If ") && !text.contains(" then "));
        prop_assert_eq!(text.matches(". ").count() + 1, unique.len());
    }
}
