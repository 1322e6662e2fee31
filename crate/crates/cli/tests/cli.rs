use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forest_explain::model::FeatureSpace;
use forest_explain::rules::{Conjunct, Consequent, DecisionRule, Origin};
use forest_explain::simplify::{ClassSignature, ExplanationParams, GroupedRuleSet, Provenance, RuleGroup};
use forest_explain::synth::diabetes_space;
use tempfile::TempDir;

fn diabetes_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/diabetes.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forest-explain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 20-tree diabetes forest with a 100-row holdout.
fn small_run(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("run");
    ok(&["train", "--train", s(&diabetes_csv()), "--holdout", "0.1302", "--trees", "20", "--seed", "3", "--out", s(&out)]);
    (out.join("model.json"), out.join("test.csv"))
}

fn two_groups(space: &FeatureSpace) -> GroupedRuleSet<f64> {
    let f = |name: &str| space.feature_index(name).unwrap();
    let group = |sig: Vec<u32>, rules: Vec<(Conjunct<f64>, f64)>| RuleGroup {
        signature: ClassSignature(sig.clone()),
        rules: rules
            .into_iter()
            .enumerate()
            .map(|(i, (c, weight))| DecisionRule {
                conjuncts: vec![c],
                consequent: Consequent::Signature(sig.clone()),
                weight,
                origin: Origin { tree: i, leaf: 0 },
            })
            .collect(),
    };
    GroupedRuleSet {
        space: space.clone(),
        params: ExplanationParams::new(0.55, 0.45, 0.83, 3).unwrap(),
        groups: vec![
            group(
                vec![2, 0],
                vec![
                    (Conjunct::below(f("pedi"), 0.7), 30.0),
                    (Conjunct::below(f("plas"), 130.0), 23.0),
                    (Conjunct::below(f("plas"), 157.5), 21.0),
                ],
            ),
            group(
                vec![0, 2],
                vec![
                    (Conjunct::at_least(f("mass"), 28.7), 30.0),
                    (Conjunct::at_least(f("age"), 27.5), 22.0),
                    (Conjunct::at_least(f("plas"), 122.5), 20.0),
                ],
            ),
        ],
        provenance: Provenance {
            model_fingerprint: String::new(),
            oob_missing: false,
            empty: false,
            source_rules: 0,
            source_scale: 0,
        },
    }
}

#[test]
fn extract_then_evaluate_is_faithful() {
    let dir = TempDir::new().unwrap();
    let (model, test) = small_run(dir.path());
    let ex = dir.path().join("ex");
    let text = ok(&["extract", "--model", s(&model), "--out", s(&ex)]);
    assert!(text.contains("rules, scale"));
    let ev = dir.path().join("ev");
    ok(&["evaluate", "--model", s(&model), "--test", s(&test), "--rules", s(&ex.join("rules.jsonl")), "--out", s(&ev)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["fidelity"], 1.0);
    assert_eq!(report["metrics"]["accuracy"], report["model_accuracy"]);
    let extracted: serde_json::Value = serde_json::from_str(&fs::read_to_string(ex.join("extract.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["scale"], extracted["scale"]);
}

#[test]
fn predict_lists_fired_rules() {
    let dir = TempDir::new().unwrap();
    let (model, _) = small_run(dir.path());
    let space = diabetes_space();
    let expl = dir.path().join("two_groups.json");
    fs::write(&expl, two_groups(&space).to_json()).unwrap();
    let rows = dir.path().join("rows.csv");
    fs::write(&rows, "preg,plas,pres,skin,insu,mass,pedi,age\n0,120,0,0,0,30,0.5,30\n").unwrap();
    let out = dir.path().join("pred");
    let text = ok(&["predict", "--model", s(&model), "--explanation", s(&expl), "--test", s(&rows), "--out", s(&out)]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row 1: negative (negative 148, positive 104)");
    assert_eq!(lines.len(), 6, "{text}");
    assert!(lines[1..].iter().all(|l| l.starts_with("  Group")));
    assert!(text.contains("Group1 rule 1: pedi < 0.7  weight 30"));
    let record: serde_json::Value =
        serde_json::from_str(fs::read_to_string(out.join("predictions.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(record["class"], "negative");
    assert_eq!(record["fired"].as_array().unwrap().len(), 5);
}

#[test]
fn optexplain_prints_a_summary_row() {
    let dir = TempDir::new().unwrap();
    let (model, test) = small_run(dir.path());
    let out = dir.path().join("opt");
    let text = ok(&["optexplain", "--model", s(&model), "--test", s(&test), "--swarm", "6", "--iters", "4", "--out", s(&out)]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("(φ, θ, ψ, k) | scale | accuracy | fidelity"));
    let row: Vec<&str> = lines.next().unwrap().split(" | ").collect();
    assert_eq!(row.len(), 4, "{row:?}");
    assert!(row[0].starts_with('(') && row[0].ends_with(')') && row[0].split(", ").count() == 4);
    assert!(row[1].parse::<usize>().is_ok());
    assert!(row[2].ends_with('%') && row[3].ends_with('%'));
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 4);
}

#[test]
fn manual_parameters_skip_the_search() {
    let dir = TempDir::new().unwrap();
    let (model, test) = small_run(dir.path());
    let out = dir.path().join("manual");
    let args = ["--model", s(&model), "--test", s(&test), "--phi", "0.1", "--theta", "0.2", "--psi", "0.5", "--cap", "3", "--out", s(&out)];
    let text = ok(&[&["optexplain"], &args[..]].concat());
    assert!(text.lines().nth(1).unwrap().starts_with("(0.10, 0.20, 0.50, 3) | "));
    assert!(!out.join("trace.jsonl").exists());
    let ev = dir.path().join("ev");
    ok(&["evaluate", "--model", s(&model), "--test", s(&test), "--explanation", s(&out.join("explanation.json")), "--out", s(&ev)]);
    let a: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    assert_eq!(a["metrics"], b["metrics"]);
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (model, test) = small_run(dir.path());
    let out = dir.path().join("x");
    let code = |args: &[&str]| run(args).status.code().unwrap();

    assert_eq!(code(&["extract", "--model", "missing.json", "--out", s(&out)]), 3);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{").unwrap();
    assert_eq!(code(&["extract", "--model", s(&bad), "--out", s(&out)]), 4);
    let rows = dir.path().join("rows.csv");
    fs::write(&rows, "preg,plas,pres,skin,insu,mass,pedi,age\n1,x,0,0,0,0,0,0\n").unwrap();
    assert_eq!(code(&["evaluate", "--model", s(&model), "--test", s(&rows), "--out", s(&out)]), 5);
    assert_eq!(code(&["optexplain", "--model", s(&model), "--test", s(&test), "--cap", "3", "--out", s(&out)]), 8);
    assert_eq!(code(&["optexplain", "--model", s(&model), "--test", s(&test), "--alpha", "2", "--out", s(&out)]), 8);
    assert_eq!(code(&["optexplain", "--model", s(&model)]), 2);
    let failed = run(&["extract", "--model", "missing.json", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&failed.stderr).starts_with("error: "));
    assert!(failed.stdout.is_empty());
}

#[test]
fn profile_and_render_write_one_image_per_class() {
    let dir = TempDir::new().unwrap();
    let (model, test) = small_run(dir.path());
    let out = dir.path().join("prof");
    let text = ok(&["profile", "--model", s(&model), "--test", s(&test), "--swarm", "6", "--iters", "4", "--out", s(&out)]);
    assert!(text.starts_with("negative"));
    let img = dir.path().join("img");
    let train = dir.path().join("run/train.csv");
    ok(&["render", "--model", s(&model), "--profile", s(&out.join("profile.json")), "--train", s(&train), "--width", "4", "--height", "2", "--out", s(&img)]);
    for class in ["negative", "positive"] {
        let ppm = fs::read(img.join(format!("{class}.ppm"))).unwrap();
        assert!(ppm.starts_with(b"P6\n4 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 8 * 3);
    }
}
