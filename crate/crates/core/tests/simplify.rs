mod common;

use std::sync::OnceLock;

use common::{diabetes_forest, random_forest};
use forest_explain::rules::{extract_rules, Consequent};
use forest_explain::simplify::{filter_nodes, simp, ExplanationParams, Simplifier};
use forest_explain::Model;
use proptest::prelude::*;

fn diabetes_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| diabetes_forest(7).0)
}

#[test]
fn diabetes_rule_set_is_near_published_size() {
    let rules = extract_rules(diabetes_model());
    // published: 11106 rules, 102584 conjuncts; the trainer differs, so +-50%
    assert!((5_553..=16_659).contains(&rules.rules.len()), "{}", rules.rules.len());
    assert!((51_292..=153_876).contains(&rules.scale()), "{}", rules.scale());
}

#[test]
fn published_parameters_stay_small() {
    let model = diabetes_model();
    let expl = simp(&extract_rules(model), model, &ExplanationParams::new(0.55, 0.45, 0.83, 3).unwrap()).unwrap();
    assert!(expl.scale() <= 12, "{}", expl.scale());
    assert!(expl.groups.iter().all(|g| g.rules.len() <= 3));
}

#[test]
fn zero_thresholds_only_merge() {
    let model = diabetes_model();
    let rules = extract_rules(model);
    let expl = simp(&rules, model, &ExplanationParams::new(0.0, 0.0, 0.5, usize::MAX).unwrap()).unwrap();
    assert_eq!(expl.rule_count(), rules.rules.len());
    assert!(expl.scale() < rules.scale());
    assert_eq!(expl.provenance.source_scale, rules.scale());
}

#[test]
fn node_filter_extremes() {
    let model = diabetes_model();
    let rules = extract_rules(model);
    assert_eq!(filter_nodes(&rules, model, 0.0).unwrap().scale(), rules.scale());
    let bare = filter_nodes(&rules, model, 1.0 + 1e-9).unwrap();
    assert_eq!(bare.scale(), 0);
    assert_eq!(bare.rules.len(), rules.rules.len());
}

#[test]
fn full_rule_threshold_keeps_only_perfect_rules() {
    let (model, _) = random_forest(11);
    let rules = extract_rules(&model);
    let expl = simp(&rules, &model, &ExplanationParams::new(0.0, 1.0, 1.0, usize::MAX).unwrap()).unwrap();
    for rule in expl.rules() {
        let tree = &model.trees[rule.origin.tree];
        let q: f64 = forest_explain::simplify::rule_quality(rule, tree).unwrap_or(0.0);
        assert_eq!(q, 1.0);
    }
    assert!(ExplanationParams::new(0.0, 1.0 + 1e-9, 1.0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stricter_thresholds_never_grow_scale(
        seed in 0u64..5_000,
        phi in 0.0f64..1.2, dphi in 0.0f64..0.5,
        theta in 0.0f64..0.9, dtheta in 0.0f64..0.1,
        psi in 0.05f64..1.0, k in 1usize..30,
    ) {
        let (model, _) = random_forest(seed);
        let s = Simplifier::new(&extract_rules(&model), &model).unwrap();
        let loose = s.simplify(&ExplanationParams::new(phi, theta, psi, k).unwrap()).unwrap();
        let strict = s.simplify(&ExplanationParams::new(phi + dphi, theta + dtheta, psi, k).unwrap()).unwrap();
        prop_assert!(strict.scale() <= loose.scale());
    }

    #[test]
    fn groups_respect_cap_and_signature(seed in 0u64..5_000, psi in 0.05f64..=1.0, k in 1usize..8) {
        let (model, _) = random_forest(seed);
        let rules = extract_rules(&model);
        let expl = simp(&rules, &model, &ExplanationParams::new(0.0, 0.0, psi, k).unwrap()).unwrap();
        let mut total = 0;
        for group in &expl.groups {
            prop_assert!(!group.rules.is_empty() && group.rules.len() <= k);
            for (i, rule) in group.rules.iter().enumerate() {
                prop_assert_eq!(&rule.consequent, &Consequent::Signature(group.signature.0.clone()));
                if i > 0 {
                    prop_assert!(group.rules[i - 1].weight >= rule.weight);
                }
                total += rule.conjuncts.len();
            }
        }
        prop_assert_eq!(expl.scale(), total);
        if psi == 1.0 {
            prop_assert!(expl.groups.iter().all(|g| g.signature.0.iter().all(|&e| e <= 1)));
            prop_assert!(expl.groups.len() < 1 << model.n_classes());
        }
    }
}
