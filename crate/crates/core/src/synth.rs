//! Seeded synthetic datasets for examples, tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson};

use crate::dataset::{Dataset, Instance};
use crate::model::{FeatureDecl, FeatureSpace};
use crate::scalar::Scalar;

pub const DIABETES_FEATURES: [&str; 8] = ["preg", "plas", "pres", "skin", "insu", "mass", "pedi", "age"];
pub const DIABETES_CLASSES: [&str; 2] = ["negative", "positive"];

pub fn diabetes_space() -> FeatureSpace {
    FeatureSpace::new(
        DIABETES_FEATURES.iter().map(|&f| FeatureDecl::numeric(f)).collect(),
        DIABETES_CLASSES.iter().map(|&c| c.to_string()).collect(),
    )
    .expect("static space is valid")
}

/// Diabetes-screening-like table: eight clinical measurements and a binary
/// outcome with roughly 35% positives.
///
/// Rows are drawn class-conditionally so that glucose dominates, body mass,
/// age, pedigree and pregnancies carry weaker signal, and the classes
/// overlap enough to cap attainable accuracy near 75-80%. Value formats
/// follow the usual encoding of this kind of table (integers except mass and
/// pedigree; zeros standing for unrecorded skin, insulin and pressure values).
pub fn diabetes_like<S: Scalar>(rows: usize, seed: u64) -> Dataset<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |mean: f64, sd: f64| Normal::new(mean, sd).expect("valid normal");
    let round_to = |v: f64, digits: i32| {
        let p = 10f64.powi(digits);
        (v * p).round() / p
    };
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let positive = rng.random_bool(0.349);
        let age_excess: f64 = if positive {
            Gamma::new(2.1, 7.6).expect("gamma").sample(&mut rng)
        } else {
            Gamma::new(0.8, 12.8).expect("gamma").sample(&mut rng)
        };
        let age = (21.0 + age_excess).round().min(81.0);
        let preg_rate = 1.1 + 0.2 * (age - 21.0) + if positive { 0.6 } else { 0.0 };
        let preg = Poisson::new(preg_rate.min(12.0)).expect("poisson").sample(&mut rng).min(17.0);
        let plas = if rng.random_bool(0.007) {
            0.0
        } else if positive {
            normal(141.0, 31.0).sample(&mut rng).clamp(56.0, 199.0).round()
        } else {
            normal(110.0, 25.0).sample(&mut rng).clamp(44.0, 197.0).round()
        };
        let pres = if rng.random_bool(0.045) {
            0.0
        } else {
            let mean = if positive { 71.0 } else { 68.0 } + 0.15 * (age - 33.0);
            normal(mean, 12.0).sample(&mut rng).clamp(24.0, 122.0).round()
        };
        let mass = if rng.random_bool(0.014) {
            0.0
        } else if positive {
            round_to(normal(35.3, 6.8).sample(&mut rng).clamp(22.9, 67.1), 1)
        } else {
            round_to(normal(30.6, 7.1).sample(&mut rng).clamp(18.2, 57.3), 1)
        };
        let skin = if rng.random_bool(0.296) {
            0.0
        } else {
            let base = if mass > 0.0 { 0.9 * mass } else { 29.0 };
            normal(base, 8.0).sample(&mut rng).clamp(7.0, 99.0).round()
        };
        let insu = if rng.random_bool(0.487) {
            0.0
        } else {
            let median = if positive { 170.0 } else { 125.0 } + 0.8 * (plas - 120.0).max(-60.0);
            LogNormal::new(median.max(20.0).ln(), 0.55)
                .expect("lognormal")
                .sample(&mut rng)
                .clamp(14.0, 846.0)
                .round()
        };
        let pedi = if positive {
            LogNormal::new(0.45f64.ln(), 0.58)
        } else {
            LogNormal::new(0.36f64.ln(), 0.56)
        }
        .expect("lognormal")
        .sample(&mut rng)
        .clamp(0.078, 2.42);
        let values = [preg, plas, pres, skin, insu, mass, round_to(pedi, 3), age]
            .iter()
            .map(|&v| S::lit(v))
            .collect();
        out.push(Instance {
            values,
            label: Some(usize::from(positive)),
        });
    }
    Dataset {
        space: diabetes_space(),
        rows: out,
    }
}

/// Random dataset with `numeric` continuous features, `nominal` three-valued
/// features and `classes` classes whose labels depend on a random linear
/// score plus noise. Every class appears at least once when `rows >= classes`.
pub fn random_dataset<S: Scalar>(rows: usize, numeric: usize, nominal: usize, classes: usize, seed: u64) -> Dataset<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features: Vec<FeatureDecl> = (0..numeric).map(|i| FeatureDecl::numeric(format!("x{i}"))).collect();
    features.extend((0..nominal).map(|i| FeatureDecl::nominal(format!("c{i}"), ["a", "b", "c"])));
    let space = FeatureSpace::new(features, (0..classes).map(|c| format!("k{c}")).collect())
        .expect("generated space is valid");
    let n = numeric + nominal;
    let weights: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut out: Vec<Instance<S>> = (0..rows)
        .map(|_| {
            let mut values: Vec<f64> = (0..numeric).map(|_| (rng.random_range(-5.0..5.0) * 4.0f64).round() / 4.0).collect();
            values.extend((0..nominal).map(|_| rng.random_range(0..3) as f64));
            let label = (0..classes)
                .map(|c| {
                    let s: f64 = weights[c].iter().zip(&values).map(|(w, v)| w * v).sum();
                    s + rng.random_range(-1.0..1.0)
                })
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(c, _)| c)
                .expect("classes >= 2");
            Instance {
                values: values.into_iter().map(S::lit).collect(),
                label: Some(label),
            }
        })
        .collect();
    if (0..classes).any(|c| !out.iter().any(|r| r.label == Some(c))) {
        for (class, row) in out.iter_mut().take(classes).enumerate() {
            row.label = Some(class);
        }
    }
    Dataset { space, rows: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diabetes_like_shape() {
        let data: Dataset<f64> = diabetes_like(768, 1);
        assert_eq!(data.len(), 768);
        assert_eq!(data.space.n_features(), 8);
        let positives = data.rows.iter().filter(|r| r.label == Some(1)).count();
        assert!((200..340).contains(&positives), "{positives}");
        assert_eq!(data, diabetes_like(768, 1));
        assert!(Dataset::new(data.space.clone(), data.rows.clone()).is_ok());
    }

    #[test]
    fn random_dataset_is_valid() {
        let data: Dataset<f64> = random_dataset(50, 3, 2, 3, 9);
        assert!(Dataset::new(data.space.clone(), data.rows.clone()).is_ok());
        assert_eq!(data.space.n_features(), 5);
    }
}
