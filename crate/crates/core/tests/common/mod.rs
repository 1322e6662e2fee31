#![allow(dead_code)]

use std::path::PathBuf;

use forest_explain::dataset::{load_dataset, split_dataset};
use forest_explain::model::{FeatureKind, FeatureSpace};
use forest_explain::rules::{Conjunct, Consequent, DecisionRule, Origin};
use forest_explain::simplify::{ClassSignature, ExplanationParams, GroupedRuleSet, Provenance, RuleGroup};
use forest_explain::synth::{diabetes_space, random_dataset};
use forest_explain::trainer::{train_forest, TrainConfig};
use forest_explain::{Data, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn diabetes_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/diabetes.csv")
}

pub fn diabetes() -> Data {
    load_dataset(diabetes_path(), &diabetes_space(), Some("class")).expect("data/diabetes.csv loads")
}

/// The 668/100 split and 100-tree unlimited-depth forest for one seed.
pub fn diabetes_forest(seed: u64) -> (Model, Data, Data) {
    let (train, test) = split_dataset(&diabetes(), 100.0 / 768.0, seed).unwrap();
    let model = train_forest(
        &train,
        &TrainConfig {
            trees: 100,
            seed,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    (model, train, test)
}

/// Small forest on mixed synthetic data: at most 10 trees, depth at most 6.
pub fn random_forest(seed: u64) -> (Model, Data) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let numeric = rng.random_range(1..=4);
    let nominal = rng.random_range(0..=2);
    let classes = rng.random_range(2..=3);
    let data: Data = random_dataset(rng.random_range(30..=80), numeric, nominal, classes, seed);
    let n = numeric + nominal;
    let model = train_forest(
        &data,
        &TrainConfig {
            trees: rng.random_range(1..=10),
            max_depth: Some(rng.random_range(1..=6)),
            features_per_split: Some(rng.random_range(1..=n)),
            min_samples_leaf: 1,
            seed,
        },
    )
    .unwrap();
    (model, data)
}

/// Uniform point over the space, with numeric values slightly wider than the
/// data range and landing on common split values now and then.
pub fn random_point(space: &FeatureSpace, rng: &mut impl Rng) -> Vec<f64> {
    space
        .features()
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => {
                if rng.random_bool(0.2) {
                    rng.random_range(-24..=24) as f64 / 4.0 + 0.125
                } else {
                    rng.random_range(-6.0..6.0)
                }
            }
            FeatureKind::Nominal => rng.random_range(0..f.categories.len()) as f64,
        })
        .collect()
}

/// Class signature and its (antecedent, weight) rules.
pub type GroupSpec = (Vec<u32>, Vec<(Vec<Conjunct<f64>>, f64)>);

pub fn explanation(space: FeatureSpace, groups: Vec<GroupSpec>) -> GroupedRuleSet<f64> {
    GroupedRuleSet {
        space,
        params: ExplanationParams::new(0.55, 0.45, 0.83, 3).unwrap(),
        groups: groups
            .into_iter()
            .map(|(sig, rules)| RuleGroup {
                signature: ClassSignature(sig.clone()),
                rules: rules
                    .into_iter()
                    .enumerate()
                    .map(|(i, (conjuncts, weight))| DecisionRule {
                        conjuncts,
                        consequent: Consequent::Signature(sig.clone()),
                        weight,
                        origin: Origin { tree: i, leaf: 0 },
                    })
                    .collect(),
            })
            .collect(),
        provenance: Provenance {
            model_fingerprint: String::new(),
            oob_missing: false,
            empty: false,
            source_rules: 0,
            source_scale: 0,
        },
    }
}

/// Two-group diabetes explanation used as a worked example.
pub fn two_group_explanation() -> GroupedRuleSet<f64> {
    let space = diabetes_space();
    let f = |name: &str| space.feature_index(name).unwrap();
    explanation(
        space.clone(),
        vec![
            (
                vec![2, 0],
                vec![
                    (vec![Conjunct::below(f("pedi"), 0.7)], 30.0),
                    (vec![Conjunct::below(f("plas"), 130.0)], 23.0),
                    (vec![Conjunct::below(f("plas"), 157.5)], 21.0),
                ],
            ),
            (
                vec![0, 2],
                vec![
                    (vec![Conjunct::at_least(f("mass"), 28.7)], 30.0),
                    (vec![Conjunct::at_least(f("age"), 27.5)], 22.0),
                    (vec![Conjunct::at_least(f("plas"), 122.5)], 20.0),
                ],
            ),
        ],
    )
}

/// Diabetes-space vector from (name, value) pairs, zeros elsewhere.
pub fn diabetes_point(values: &[(&str, f64)]) -> Vec<f64> {
    let space = diabetes_space();
    let mut x = vec![0.0; space.n_features()];
    for (name, v) in values {
        x[space.feature_index(name).unwrap()] = *v;
    }
    x
}

/// Random MAX-SAT instance: up to `max_len` single-feature conjuncts over
/// `features` features (the last one nominal with five categories when
/// `features > 1`), with integer endpoints in [-3, 3].
pub fn random_max_sat(rng: &mut impl Rng, max_len: usize, features: usize) -> (FeatureSpace, Vec<forest_explain::profile::WeightedConjunct<f64>>) {
    use forest_explain::model::FeatureDecl;
    let nominal = features > 1;
    let mut decls: Vec<FeatureDecl> = (0..features - usize::from(nominal)).map(|i| FeatureDecl::numeric(format!("x{i}"))).collect();
    if nominal {
        decls.push(FeatureDecl::nominal("c", ["a", "b", "c", "d", "e"]));
    }
    let space = FeatureSpace::new(decls, vec!["p".into(), "q".into()]).unwrap();
    let len = rng.random_range(0..=max_len);
    let conjuncts = (0..len)
        .map(|_| {
            let feature = rng.random_range(0..features);
            let conjunct = if nominal && feature == features - 1 {
                let set: Vec<usize> = (0..5).filter(|_| rng.random_bool(0.4)).collect();
                let set = if set.is_empty() { vec![rng.random_range(0..5)] } else { set };
                Conjunct::categories(feature, set)
            } else {
                let a = rng.random_range(-3..=3) as f64;
                let b = rng.random_range(-3..=3) as f64;
                match rng.random_range(0..3) {
                    0 => Conjunct::below(feature, a),
                    1 => Conjunct::at_least(feature, a),
                    _ => Conjunct::interval(feature, a.min(b), a.max(b) + 1.0),
                }
            };
            forest_explain::profile::WeightedConjunct {
                conjunct,
                weight: rng.random_range(1..=30) as f64,
            }
        })
        .collect();
    (space, conjuncts)
}

/// Best total weight over every witness in the product of per-feature
/// candidate grids: half-integers covering every gap between endpoints, and
/// every category.
pub fn brute_force_max_sat(space: &FeatureSpace, conjuncts: &[forest_explain::profile::WeightedConjunct<f64>]) -> f64 {
    let grids: Vec<Vec<f64>> = space
        .features()
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => (-9..=9).map(|i| i as f64 / 2.0).collect(),
            FeatureKind::Nominal => (0..f.categories.len()).map(|c| c as f64).collect(),
        })
        .collect();
    let mut best = 0.0f64;
    let mut index = vec![0usize; grids.len()];
    loop {
        let x: Vec<f64> = index.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
        let w: f64 = conjuncts.iter().filter(|c| c.conjunct.holds(&x)).map(|c| c.weight).sum();
        best = best.max(w);
        let mut d = 0;
        loop {
            if d == grids.len() {
                return best;
            }
            index[d] += 1;
            if index[d] < grids[d].len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
    }
}
