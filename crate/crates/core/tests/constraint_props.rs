use pct_core::constraints::{augment, product_implication_violation, Constraint};
use pct_core::datagen::{generate_split, DepthProfile, GenConfig, TrainingSet};
use pct_core::inference::NetworkKind;
use proptest::collection::vec;
use proptest::prelude::*;

fn constraint(premises: usize, pr: f64) -> Constraint {
    Constraint { premise_idxs: (1..=premises).collect(), pr, conclusion_idx: 0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn violation_lies_in_unit_interval(preds in vec(0.0f64..=1.0, 4), pr in 0.0f64..=1.0, n in 1usize..=3) {
        let v = constraint(n, pr).violation(&preds).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn violation_gradient_matches_central_differences(
        preds in vec(0.05f64..0.95, 4),
        pr in 0.05f64..=1.0,
        n in 1usize..=3,
    ) {
        let c = constraint(n, pr);
        let (v, grads) = c.violation_gradient(&preds).unwrap();
        prop_assume!(v > 1e-3);
        let h = 1e-6;
        for i in 0..=n {
            let mut up = preds.clone();
            let mut down = preds.clone();
            up[i] += h;
            down[i] -= h;
            let numeric = (c.violation(&up).unwrap() - c.violation(&down).unwrap()) / (2.0 * h);
            let analytic: f64 = grads.iter().filter(|(q, _)| *q == i).map(|(_, d)| d).sum();
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            prop_assert!(rel < 1e-4, "query {i}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn satisfaction_is_monotone_in_threshold(preds in vec(0.0f64..=1.0, 4), pr in 0.0f64..=1.0, n in 1usize..=3) {
        let c = constraint(n, pr);
        let at = |t: f64| c.is_satisfied(&preds, t).unwrap();
        prop_assert!(!at(0.01) || at(0.10));
        prop_assert!(!at(0.10) || at(0.25));
    }

    #[test]
    fn product_surrogate_is_zero_when_conclusion_dominates(p in vec(0.01f64..=1.0, 1..4), slack in 0.0f64..=1.0) {
        let product: f64 = p.iter().product();
        let q = product + slack * (1.0 - product);
        prop_assert!(product_implication_violation(&p, q).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&product_implication_violation(&p, slack * product)));
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let c = constraint(2, 0.9);
    let v64 = c.violation(&[0.7f64, 0.8, 0.6]).unwrap();
    let v32 = c.violation(&[0.7f32, 0.8, 0.6]).unwrap();
    assert!((v64 - f64::from(v32)).abs() < 1e-6);
}

#[test]
fn gold_probabilities_satisfy_every_simple_constraint() {
    let profile = DepthProfile::ruletaker_pro(TrainingSet::Mmax).scaled_to_total(120);
    let cfg = GenConfig::ruletaker_pro(profile, 5);
    let split = generate_split(&cfg).unwrap();
    let aug = augment(&split, &cfg.vocabulary).unwrap();
    let mut checked = 0;
    for (inst, a) in split.iter().zip(&aug) {
        if inst.kind != NetworkKind::Simple {
            continue;
        }
        assert_eq!(a.constraints.len(), inst.proof.len(), "{}", inst.id);
        for c in &a.constraints {
            assert!(c.violation(&a.gold()).unwrap() < 1e-9, "{}", inst.id);
            checked += 1;
        }
        if inst.depth == 0 {
            assert!(a.constraints.is_empty());
        }
    }
    assert!(checked > 100);
}
