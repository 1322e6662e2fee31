use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use forest_explain::dataset::{infer_space_from_path, load_dataset, read_dataset, split_dataset};
use forest_explain::explain::{self, accuracy, confusion, evaluate_ruleset, predict_explanation, ExplanationMetrics};
use forest_explain::model::{load_model, FeatureSpace};
use forest_explain::optimize::{ExplanationSearch, PsoConfig, SearchBounds, SearchOutcome, TraceEntry};
use forest_explain::profile::{build_profile, profiles_from_json, profiles_table, profiles_to_json, render_profile_grid};
use forest_explain::rules::{extract_rules, RuleSet};
use forest_explain::simplify::{ExplanationParams, Simplifier};
use forest_explain::trainer::{train_forest, TrainConfig};
use forest_explain::{Data, Error, Explanation, Model, Result};
use serde::Serialize;
use serde_json::json;

use crate::{EvaluateArgs, ExplainArgs, ExtractArgs, Manual, PredictArgs, ProfileArgs, RenderArgs, Search, TrainArgs};

#[derive(Clone, Copy)]
pub struct Log(pub u8);

impl Log {
    fn info(self, msg: impl AsRef<str>) {
        if self.0 > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_artifact(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn pretty(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// Rows of `path` in the model's feature space, labeled when the label column exists.
fn load_rows(path: &Path, space: &FeatureSpace, label: &str) -> Result<Data> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let header = text.lines().next().unwrap_or_default();
    let labeled = header.split(',').any(|c| c.trim().trim_matches('"') == label);
    read_dataset(text.as_bytes(), space, labeled.then_some(label))
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn optional_percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), percent)
}

fn params_text(p: &ExplanationParams) -> String {
    format!(
        "({:.2}, {:.2}, {:.2}, {})",
        p.node_threshold, p.rule_threshold, p.merge_granularity, p.group_cap
    )
}

fn summary(p: &ExplanationParams, m: &ExplanationMetrics) -> String {
    format!(
        "(φ, θ, ψ, k) | scale | accuracy | fidelity\n{} | {} | {} | {}\n",
        params_text(p),
        m.scale,
        optional_percent(m.accuracy),
        percent(m.fidelity)
    )
}

fn trace_jsonl(trace: &[TraceEntry]) -> String {
    trace
        .iter()
        .map(|t| serde_json::to_string(t).expect("trace serializes") + "\n")
        .collect()
}

impl Manual {
    fn params(&self) -> Result<Option<ExplanationParams>> {
        match (self.phi, self.theta, self.psi, self.cap) {
            (None, None, None, None) => Ok(None),
            (Some(phi), Some(theta), Some(psi), Some(k)) => ExplanationParams::new(phi, theta, psi, k).map(Some),
            _ => Err(Error::InvalidInput("--phi, --theta, --psi and --cap go together".into())),
        }
    }
}

impl Search {
    fn pso(&self, bounds: SearchBounds) -> PsoConfig {
        bounds.pso_config().with_swarm(self.swarm, self.iters).with_seed(self.seed)
    }
}

pub fn train(args: TrainArgs, log: Log) -> Result<()> {
    let space = infer_space_from_path(&args.train, &args.label)?;
    let data: Data = load_dataset(&args.train, &space, Some(&args.label))?;
    let (train, test) = match args.holdout {
        Some(fraction) => {
            let (train, test) = split_dataset(&data, fraction, args.seed)?;
            (train, Some(test))
        }
        None => (data, None),
    };
    let config = TrainConfig {
        trees: args.trees,
        max_depth: args.max_depth,
        features_per_split: args.features_per_split,
        min_samples_leaf: args.min_leaf,
        seed: args.seed,
    };
    log.info(format!("training {} trees on {} rows", config.trees, train.len()));
    let model = train_forest(&train, &config)?;
    if let Some(test) = &test {
        let mut buf = Vec::new();
        train.write_csv(&mut buf, &args.label)?;
        write_artifact(&args.out, "train.csv", buf)?;
        let mut buf = Vec::new();
        test.write_csv(&mut buf, &args.label)?;
        write_artifact(&args.out, "test.csv", buf)?;
    }
    write_artifact(&args.out, "model.json", model.to_json())?;

    println!(
        "trained {} trees on {} rows ({} features, {} classes)",
        model.trees.len(),
        train.len(),
        space.n_features(),
        space.n_classes()
    );
    if let Some(test) = &test {
        println!("test accuracy {} on {} rows", optional_percent(accuracy(&model, test)), test.len());
    }
    Ok(())
}

pub fn extract(args: ExtractArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let rules = extract_rules(&model);
    log.info(format!("{} rules from {} trees", rules.rules.len(), model.trees.len()));
    let mut buf = Vec::new();
    rules.write_jsonl(&mut buf)?;
    write_artifact(&args.out, "rules.jsonl", buf)?;
    let report = json!({
        "model_fingerprint": model.fingerprint(),
        "trees": model.trees.len(),
        "rules": rules.rules.len(),
        "scale": rules.scale(),
    });
    write_artifact(&args.out, "extract.json", pretty(&report))?;
    println!("{} rules, scale {}", rules.rules.len(), rules.scale());
    Ok(())
}

fn print_metrics(what: &str, m: &ExplanationMetrics) {
    println!("{what}");
    println!("  rows      {}", m.n_rows);
    println!("  scale     {}", m.scale);
    println!("  fidelity  {}", percent(m.fidelity));
    println!("  accuracy  {}", optional_percent(m.accuracy));
    println!("  no rule   {}", percent(m.no_rule_rate));
}

pub fn evaluate(args: EvaluateArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let data = load_rows(&args.test, &model.space, &args.label)?;
    let manual = args.manual.params()?;
    let model_accuracy = accuracy(&model, &data);

    let (source, metrics, expl) = if let Some(path) = &args.explanation {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let expl = Explanation::from_json(&text, &model.space)?;
        ("explanation", explain::evaluate(&expl, &model, &data)?, Some(expl))
    } else {
        let rules = match &args.rules {
            Some(path) => {
                let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
                RuleSet::read_jsonl(BufReader::new(file), &model)?
            }
            None => extract_rules(&model),
        };
        match manual {
            Some(params) => {
                log.info(format!("simplifying with {}", params_text(&params)));
                let expl = Simplifier::new(&rules, &model)?.simplify(&params)?;
                ("simplified", explain::evaluate(&expl, &model, &data)?, Some(expl))
            }
            None => ("rules", evaluate_ruleset(&rules, &model, &data)?, None),
        }
    };

    let mut report = json!({
        "source": source,
        "metrics": metrics,
        "model_accuracy": model_accuracy,
    });
    if let Some(expl) = &expl {
        report["params"] = json!(expl.params);
        report["confusion"] = json!(confusion(expl, &model, &data));
    }
    write_artifact(&args.out, "report.json", pretty(&report))?;

    print_metrics(&format!("{source} on {}", args.test.display()), &metrics);
    println!("  model     {}", optional_percent(model_accuracy));
    if let (Some(expl), true) = (&expl, log.0 > 0) {
        println!("confusion (rows: model class, columns: explanation class)");
        for (class, row) in model.space.classes().iter().zip(confusion(expl, &model, &data)) {
            println!("  {class}: {row:?}");
        }
    }
    Ok(())
}

fn run_search(
    args: &ExplainArgs,
    model: &Model,
    data: &Data,
    profile: bool,
    log: Log,
) -> Result<(SearchOutcome<f64>, serde_json::Value)> {
    let search = ExplanationSearch::new(model, data)?;
    let m = model.n_classes();
    let mut report = json!({
        "model_fingerprint": model.fingerprint(),
        "source": {
            "rules": search.simplifier().rule_count(),
            "scale": search.simplifier().source_scale(),
        },
        "model_accuracy": accuracy(model, data),
    });
    let outcome = match args.manual.params()? {
        Some(params) => {
            let (explanation, metrics) = search.evaluate_params(&params)?;
            report["mode"] = json!("manual");
            SearchOutcome {
                explanation,
                metrics,
                params,
                score: f64::NAN,
                trace: Vec::new(),
            }
        }
        None => {
            let s = &args.search;
            log.info(format!("searching with {} particles for {} iterations", s.swarm, s.iters));
            let outcome = if profile {
                search.for_profile(&s.pso(SearchBounds::pro(m)))?
            } else {
                search.optimal(s.alpha, &s.pso(SearchBounds::opt(m)))?
            };
            for t in &outcome.trace {
                log.info(format!("iteration {:>3}  best {:.6}", t.iteration, t.gbest_score));
            }
            report["mode"] = json!("search");
            report["score"] = json!(outcome.score);
            report["pso"] = json!({"swarm": s.swarm, "iterations": s.iters, "seed": s.seed});
            if !profile {
                report["alpha"] = json!(s.alpha);
            }
            outcome
        }
    };
    report["params"] = json!(outcome.params);
    report["metrics"] = json!(outcome.metrics);
    Ok((outcome, report))
}

fn write_search(args: &ExplainArgs, name: &str, outcome: &SearchOutcome<f64>, report: &serde_json::Value) -> Result<()> {
    write_artifact(&args.out, name, outcome.explanation.to_json())?;
    write_artifact(&args.out, "report.json", pretty(report))?;
    if !outcome.trace.is_empty() {
        write_artifact(&args.out, "trace.jsonl", trace_jsonl(&outcome.trace))?;
    }
    Ok(())
}

pub fn optexplain(args: ExplainArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let data = load_rows(&args.test, &model.space, &args.label)?;
    let (outcome, report) = run_search(&args, &model, &data, false, log)?;
    write_search(&args, "explanation.json", &outcome, &report)?;
    print!("{}", summary(&outcome.params, &outcome.metrics));
    println!();
    print!("{}", outcome.explanation.table());
    Ok(())
}

pub fn proexplain(args: ExplainArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let data = load_rows(&args.test, &model.space, &args.label)?;
    let (outcome, report) = run_search(&args, &model, &data, true, log)?;
    write_search(&args, "pro_explanation.json", &outcome, &report)?;
    println!(
        "{} | {} groups | scale {}",
        params_text(&outcome.params),
        outcome.explanation.group_count(),
        outcome.metrics.scale
    );
    println!();
    print!("{}", outcome.explanation.table());
    Ok(())
}

pub fn profile(args: ProfileArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let expl = match (&args.explanation, &args.test) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            Explanation::from_json(&text, &model.space)?
        }
        (None, Some(test)) => {
            let data = load_rows(test, &model.space, &args.label)?;
            let search = ExplanationSearch::new(&model, &data)?;
            log.info("searching for profile parameters");
            let outcome = search.for_profile(&args.search.pso(SearchBounds::pro(model.n_classes())))?;
            write_artifact(&args.out, "pro_explanation.json", outcome.explanation.to_json())?;
            outcome.explanation
        }
        (None, None) => return Err(Error::InvalidInput("profile needs --explanation or --test".into())),
    };
    let profiles = build_profile(&expl)?;
    write_artifact(&args.out, "profile.json", profiles_to_json(&profiles, &model.space))?;
    print!("{}", profiles_table(&profiles, &model.space));
    Ok(())
}

pub fn predict(args: PredictArgs, _log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let text = fs::read_to_string(&args.explanation).map_err(|e| io_err(&args.explanation, e))?;
    let expl = Explanation::from_json(&text, &model.space)?;
    let data = load_rows(&args.test, &model.space, &args.label)?;
    let classes = model.space.classes();

    let mut lines = String::new();
    for (i, row) in data.rows.iter().enumerate() {
        let p = predict_explanation(&expl, &row.values);
        let scores: Vec<String> = classes.iter().zip(&p.scores).map(|(c, s)| format!("{c} {s}")).collect();
        println!("row {}: {} ({})", i + 1, classes[p.class], scores.join(", "));
        if p.no_rule {
            println!("  no rule fired, fallback class");
        }
        for r in &p.fired {
            let rule = &expl.groups[r.group].rules[r.rule];
            println!(
                "  Group{} rule {}: {}  weight {}",
                r.group + 1,
                r.rule + 1,
                rule.antecedent_text(&model.space),
                rule.weight
            );
        }
        let record = json!({
            "row": i + 1,
            "class": classes[p.class],
            "scores": p.scores,
            "fired": p.fired,
            "no_rule": p.no_rule,
            "model_class": classes[model.predict_class(&row.values)],
        });
        lines.push_str(&serde_json::to_string(&record).expect("prediction serializes"));
        lines.push('\n');
    }
    if let Some(out) = &args.out {
        write_artifact(out, "predictions.jsonl", lines)?;
    }
    Ok(())
}

fn file_stem(class: &str) -> String {
    class
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn render(args: RenderArgs, log: Log) -> Result<()> {
    let model: Model = load_model(&args.model)?;
    let text = fs::read_to_string(&args.profile).map_err(|e| io_err(&args.profile, e))?;
    let profiles = profiles_from_json::<f64>(&text, &model.space)?;
    let n = model.space.n_features();
    let (width, height) = match (args.width, args.height) {
        (Some(w), Some(h)) => (w, h),
        (Some(w), None) if w > 0 => (w, n / w),
        (None, Some(h)) if h > 0 => (n / h, h),
        _ => {
            let side = (n as f64).sqrt().round() as usize;
            (side, side)
        }
    };
    let ranges = match &args.train {
        Some(path) => load_rows(path, &model.space, &args.label)?.ranges(),
        None => vec![None; n],
    };
    for p in &profiles {
        let image = render_profile_grid(p, &model.space, &ranges, width, height)?;
        let name = format!("{}.ppm", file_stem(&model.space.classes()[p.class]));
        let path = write_artifact(&args.out, &name, image.to_ppm())?;
        log.info(format!("wrote {}", path.display()));
        println!("{}", path.display());
    }
    Ok(())
}
