//! Trains a forest on the diabetes table, searches explanations for a few
//! seeds and prints fidelity, scale and accuracy next to the model's.
//!
//! `cargo run --release -p forest-explain --example diabetes`

use std::time::Instant;

use forest_explain::dataset::{load_dataset, split_dataset};
use forest_explain::explain::accuracy;
use forest_explain::optimize::{ExplanationSearch, SearchBounds};
use forest_explain::profile::{build_profile, profiles_table};
use forest_explain::synth::diabetes_space;
use forest_explain::trainer::{train_forest, TrainConfig};
use forest_explain::{Data, Model};

fn main() -> forest_explain::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/diabetes.csv");
    let data: Data = load_dataset(path, &diabetes_space(), Some("class"))?;
    let (train, test) = split_dataset(&data, 100.0 / 768.0, 7)?;
    let start = Instant::now();
    let model: Model = train_forest(&train, &TrainConfig { trees: 100, seed: 7, ..TrainConfig::default() })?;
    let rules = forest_explain::rules::extract_rules(&model);
    println!(
        "trained {} trees in {:.2?}: {} rules, scale {}, test accuracy {:.3}",
        model.trees.len(),
        start.elapsed(),
        rules.rules.len(),
        rules.scale(),
        accuracy(&model, &test).unwrap_or(f64::NAN)
    );
    let search = ExplanationSearch::new(&model, &test)?;
    for alpha in [0.9, 0.5] {
        for seed in 0..5 {
            let start = Instant::now();
            let pso = SearchBounds::opt(2).pso_config().with_seed(seed);
            let out = search.optimal(alpha, &pso)?;
            println!(
                "alpha {alpha} seed {seed}: fidelity {:.3} scale {} accuracy {:.3} params {:?} ({:.2?})",
                out.metrics.fidelity,
                out.metrics.scale,
                out.metrics.accuracy.unwrap_or(f64::NAN),
                out.params.to_vec(),
                start.elapsed()
            );
        }
    }
    let pro = search.for_profile(&SearchBounds::pro(2).pso_config().with_seed(0))?;
    println!("{}", pro.explanation.table());
    println!("{}", profiles_table(&build_profile(&pro.explanation)?, &model.space));
    Ok(())
}
