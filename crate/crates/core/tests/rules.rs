mod common;

use std::collections::BTreeSet;

use common::{random_forest, random_point};
use forest_explain::model::{FeatureDecl, FeatureSpace};
use forest_explain::rules::{extract_rules, merge_conjuncts, predict_ruleset, Conjunct, Constraint, RuleSet};
use forest_explain::Model;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIG1: &str = r#"{
  "schema_version": 1,
  "features": [
    {"name": "f0", "kind": "numeric"},
    {"name": "f1", "kind": "numeric"},
    {"name": "f2", "kind": "numeric"}
  ],
  "classes": ["class0", "class1"],
  "trees": [{
    "weight": 1.0,
    "root": 0,
    "nodes": [
      {"id": 0, "kind": "internal", "feature": 1, "threshold": 5.0, "left": 1, "right": 2, "counts": [5, 8]},
      {"id": 1, "kind": "leaf", "counts": [0, 6]},
      {"id": 2, "kind": "internal", "feature": 2, "threshold": 2.0, "left": 3, "right": 4, "counts": [5, 2]},
      {"id": 3, "kind": "leaf", "counts": [2, 1]},
      {"id": 4, "kind": "leaf", "counts": [3, 1]}
    ]
  }]
}"#;

#[test]
fn example_tree_gives_three_rules() {
    let model: Model = Model::from_json(FIG1).unwrap();
    let rules = extract_rules(&model);
    let shown: Vec<(String, Vec<f64>)> = rules
        .rules
        .iter()
        .map(|r| {
            (
                r.antecedent_text(&model.space),
                r.consequent.contribution(1.0),
            )
        })
        .collect();
    assert_eq!(
        shown,
        vec![
            ("f1 < 5".to_string(), vec![0.0, 6.0]),
            ("f1 >= 5 and f2 < 2".to_string(), vec![2.0, 1.0]),
            ("f1 >= 5 and f2 >= 2".to_string(), vec![3.0, 1.0]),
        ]
    );
    // x reaching the (2, 1) leaf
    assert_eq!(predict_ruleset(&rules, &[0.0, 6.0, 1.0]), (vec![2.0, 1.0], 0));
}

#[test]
fn jsonl_round_trip_on_trained_forest() {
    let (model, _) = random_forest(3);
    let rules = extract_rules(&model);
    let mut buf = Vec::new();
    rules.write_jsonl(&mut buf).unwrap();
    let back = RuleSet::read_jsonl(buf.as_slice(), &model).unwrap();
    assert_eq!(back, rules);
}

#[test]
fn merge_examples_from_the_proof() {
    let space = FeatureSpace::new(
        vec![FeatureDecl::numeric("v"), FeatureDecl::nominal("w", ["a", "b", "c", "d"])],
        vec!["x".into(), "y".into()],
    )
    .unwrap();
    let merged = |atoms: &[Conjunct<f64>]| merge_conjuncts(atoms).unwrap();
    assert_eq!(merged(&[Conjunct::at_least(0, 3.0), Conjunct::at_least(0, 5.0)]), vec![Conjunct::at_least(0, 5.0)]);
    assert_eq!(merged(&[Conjunct::at_least(0, 3.0), Conjunct::below(0, 5.0)]), vec![Conjunct::interval(0, 3.0, 5.0)]);
    assert_eq!(merged(&[Conjunct::below(0, 3.0), Conjunct::below(0, 5.0)]), vec![Conjunct::below(0, 3.0)]);
    // w in {a, b} and not (w in {b, c})
    let in_ab = Conjunct::categories(1, [0, 1]);
    let not_bc = Conjunct::from_split(
        1,
        &forest_explain::model::Predicate::InSet(BTreeSet::from([1, 2])),
        false,
        &space,
    );
    assert_eq!(merged(&[in_ab, not_bc]), vec![Conjunct::categories(1, [0])]);
    assert!(merge_conjuncts(&[Conjunct::at_least(0, 5.0), Conjunct::below(0, 5.0)]).is_err());
}

#[test]
fn satisfies_matches_table_rules() {
    let x = common::diabetes_point(&[("plas", 120.0)]);
    let plas = forest_explain::synth::diabetes_space().feature_index("plas").unwrap();
    let rule = |c| forest_explain::rules::DecisionRule {
        conjuncts: vec![c],
        consequent: forest_explain::rules::Consequent::Signature(vec![1, 0]),
        weight: 1.0,
        origin: forest_explain::rules::Origin { tree: 0, leaf: 0 },
    };
    assert!(rule(Conjunct::below(plas, 130.0)).satisfies(&x));
    assert!(!rule(Conjunct::at_least(plas, 122.5)).satisfies(&x));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ruleset_reproduces_ensemble_votes(seed in 0u64..10_000, point_seed in any::<u64>()) {
        let (model, data) = random_forest(seed);
        let rules = extract_rules(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
        let points = data.rows.iter().map(|r| r.values.clone())
            .chain((0..40).map(|_| random_point(&model.space, &mut rng)));
        for x in points {
            let (votes, class) = model.predict(&x);
            let (rvotes, rclass) = predict_ruleset(&rules, &x);
            prop_assert_eq!(class, rclass);
            for (a, b) in votes.iter().zip(&rvotes) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
            // one satisfied rule per tree, never two from the same tree
            let fired: Vec<usize> = rules.rules.iter().filter(|r| r.satisfies(&x)).map(|r| r.origin.tree).collect();
            let trees: BTreeSet<usize> = fired.iter().copied().collect();
            prop_assert_eq!(fired.len(), model.trees.len());
            prop_assert_eq!(trees.len(), model.trees.len());
        }
    }

    #[test]
    fn merged_branches_keep_their_region(seed in 0u64..10_000, point_seed in any::<u64>()) {
        let (model, _) = random_forest(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
        for (t, tree) in model.trees.iter().enumerate() {
            for leaf in tree.leaves() {
                let atoms: Vec<Conjunct<f64>> = tree
                    .path_to(leaf)
                    .iter()
                    .map(|&(pos, right)| match &tree.node(pos).kind {
                        forest_explain::model::NodeKind::Internal { feature, predicate, .. } =>
                            Conjunct::from_split(*feature, predicate, right, &model.space),
                        _ => unreachable!("path steps are internal nodes"),
                    })
                    .collect();
                let merged = merge_conjuncts(&atoms).map_err(|e| TestCaseError::fail(format!("tree {t}: {e:?}")))?;
                let distinct: BTreeSet<usize> = atoms.iter().map(|a| a.feature).collect();
                prop_assert_eq!(merged.len(), distinct.len());
                for _ in 0..25 {
                    let x = random_point(&model.space, &mut rng);
                    prop_assert_eq!(merged.iter().all(|c| c.holds(&x)), atoms.iter().all(|c| c.holds(&x)));
                }
            }
        }
    }

    #[test]
    fn intervals_intersect_like_sets(a in -5i32..5, b in -5i32..5, c in -5i32..5, d in -5i32..5, v in -6i32..6) {
        let (lo1, hi1) = (a.min(b) as f64, a.max(b) as f64 + 1.0);
        let (lo2, hi2) = (c.min(d) as f64, c.max(d) as f64 + 1.0);
        let x = Conjunct::interval(0, lo1, hi1);
        let y = Conjunct::interval(0, lo2, hi2);
        let v = v as f64;
        match x.intersect(&y) {
            Some(z) => {
                prop_assert_eq!(z.contains(v), x.contains(v) && y.contains(v));
                let is_interval = matches!(z.constraint, Constraint::Interval { .. });
                prop_assert!(is_interval);
            }
            None => prop_assert!(!(x.contains(v) && y.contains(v))),
        }
    }
}
