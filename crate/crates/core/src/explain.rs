//! Classification with a simplified explanation and the two evaluation
//! measures, fidelity and scale.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::EnsembleModel;
use crate::rules::RuleSet;
use crate::scalar::{argmax, Scalar};
use crate::simplify::GroupedRuleSet;

/// Anything that maps a feature vector to a class index.
pub trait Classifier<S> {
    fn classify(&self, x: &[S]) -> usize;
}

impl<S: Scalar> Classifier<S> for EnsembleModel<S> {
    fn classify(&self, x: &[S]) -> usize {
        self.predict_class(x)
    }
}

impl<S: Scalar> Classifier<S> for RuleSet<S> {
    fn classify(&self, x: &[S]) -> usize {
        self.predict(x).1
    }
}

impl<S: Scalar> Classifier<S> for GroupedRuleSet<S> {
    fn classify(&self, x: &[S]) -> usize {
        predict_explanation(self, x).class
    }
}

/// Reference to a rule inside a grouped explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRef {
    pub group: usize,
    pub rule: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationPrediction<S> {
    pub scores: Vec<S>,
    pub class: usize,
    pub fired: Vec<RuleRef>,
    /// No rule fired and `class` is the explanation's fallback class.
    pub no_rule: bool,
}

/// Class carrying the largest total `weight * signature` mass over the whole
/// explanation; used when an instance satisfies no rule.
pub fn fallback_class<S: Scalar>(expl: &GroupedRuleSet<S>) -> usize {
    let mut mass = vec![S::zero(); expl.space.n_classes()];
    for rule in expl.rules() {
        for (m, c) in mass.iter_mut().zip(rule.consequent.contribution(rule.weight)) {
            *m += c;
        }
    }
    argmax(&mass)
}

/// Sums `weight * signature` over every satisfied rule.
pub fn predict_explanation<S: Scalar>(expl: &GroupedRuleSet<S>, x: &[S]) -> ExplanationPrediction<S> {
    let mut scores = vec![S::zero(); expl.space.n_classes()];
    let mut fired = Vec::new();
    for (g, group) in expl.groups.iter().enumerate() {
        for (r, rule) in group.rules.iter().enumerate() {
            if rule.satisfies(x) {
                for (s, c) in scores.iter_mut().zip(rule.consequent.contribution(rule.weight)) {
                    *s += c;
                }
                fired.push(RuleRef { group: g, rule: r });
            }
        }
    }
    let no_rule = fired.is_empty();
    let class = if no_rule { fallback_class(expl) } else { argmax(&scores) };
    ExplanationPrediction {
        scores,
        class,
        fired,
        no_rule,
    }
}

/// Fraction of rows on which `expl` and `model` predict the same class.
pub fn fidelity<S: Scalar, C: Classifier<S> + ?Sized>(
    expl: &C,
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("fidelity over an empty dataset".into()));
    }
    let agree = data
        .rows
        .iter()
        .filter(|r| expl.classify(&r.values) == model.predict_class(&r.values))
        .count();
    Ok(agree as f64 / data.len() as f64)
}

/// Fraction of labeled rows classified correctly, `None` without labels.
pub fn accuracy<S: Scalar, C: Classifier<S> + ?Sized>(clf: &C, data: &Dataset<S>) -> Option<f64> {
    if !data.is_labeled() {
        return None;
    }
    let correct = data
        .rows
        .iter()
        .filter(|r| Some(clf.classify(&r.values)) == r.label)
        .count();
    Some(correct as f64 / data.len() as f64)
}

pub fn scale<S: Scalar>(expl: &GroupedRuleSet<S>) -> usize {
    expl.scale()
}

/// Evaluation report; serializes to the report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMetrics {
    pub fidelity: f64,
    pub scale: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub n_rows: usize,
    pub no_rule_rate: f64,
}

pub fn evaluate<S: Scalar>(
    expl: &GroupedRuleSet<S>,
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
) -> Result<ExplanationMetrics> {
    if data.is_empty() {
        return Err(Error::InvalidInput("evaluation over an empty dataset".into()));
    }
    let fallback = fallback_class(expl);
    let mut agree = 0;
    let mut correct = 0;
    let mut no_rule = 0;
    for row in &data.rows {
        let p = predict_with_fallback(expl, &row.values, fallback);
        if p.no_rule {
            no_rule += 1;
        }
        if p.class == model.predict_class(&row.values) {
            agree += 1;
        }
        if Some(p.class) == row.label {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok(ExplanationMetrics {
        fidelity: agree as f64 / n,
        scale: expl.scale(),
        accuracy: data.is_labeled().then(|| correct as f64 / n),
        n_rows: data.len(),
        no_rule_rate: no_rule as f64 / n,
    })
}

/// Same report for an unsimplified rule set, which always fires.
pub fn evaluate_ruleset<S: Scalar>(
    rules: &RuleSet<S>,
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
) -> Result<ExplanationMetrics> {
    Ok(ExplanationMetrics {
        fidelity: fidelity(rules, model, data)?,
        scale: rules.scale(),
        accuracy: accuracy(rules, data),
        n_rows: data.len(),
        no_rule_rate: 0.0,
    })
}

/// `matrix[model class][explanation class]` row counts.
pub fn confusion<S: Scalar>(
    expl: &GroupedRuleSet<S>,
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
) -> Vec<Vec<usize>> {
    let m = model.n_classes();
    let mut matrix = vec![vec![0; m]; m];
    for row in &data.rows {
        matrix[model.predict_class(&row.values)][expl.classify(&row.values)] += 1;
    }
    matrix
}

fn predict_with_fallback<S: Scalar>(expl: &GroupedRuleSet<S>, x: &[S], fallback: usize) -> ExplanationPrediction<S> {
    let mut scores = vec![S::zero(); expl.space.n_classes()];
    let mut any = false;
    for rule in expl.rules() {
        if rule.satisfies(x) {
            any = true;
            for (s, c) in scores.iter_mut().zip(rule.consequent.contribution(rule.weight)) {
                *s += c;
            }
        }
    }
    let class = if any { argmax(&scores) } else { fallback };
    ExplanationPrediction {
        scores,
        class,
        fired: Vec::new(),
        no_rule: !any,
    }
}
