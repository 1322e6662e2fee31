//! Explanation scores and the parameter search over (φ, θ, ψ, k).

mod pso;

pub use pso::{pso_optimize, PsoConfig, PsoResult, TraceEntry};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{evaluate, ExplanationMetrics};
use crate::model::EnsembleModel;
use crate::rules::extract_rules;
use crate::scalar::Scalar;
use crate::simplify::{ExplanationParams, GroupedRuleSet, Simplifier};

/// Fidelity-weighted score with a sigmoid penalty on scale:
/// `α·fidelity + (1 − α) / (1 + e^{5(scale/(m·n) − 1)})`.
pub fn score_opt(fidelity: f64, scale: usize, alpha: f64, classes: usize, features: usize) -> f64 {
    let budget = (classes * features).max(1) as f64;
    let penalty = 1.0 / (1.0 + (5.0 * (scale as f64 / budget - 1.0)).exp());
    fidelity * alpha + (1.0 - alpha) * penalty
}

/// `(m − groups + 1) × scale`, with the group factor clamped at zero.
pub fn score_pro<S: Scalar>(expl: &GroupedRuleSet<S>, classes: usize) -> f64 {
    let factor = (classes as f64 - expl.group_count() as f64 + 1.0).max(0.0);
    factor * expl.scale() as f64
}

/// Classes that own at least one group (by signature argmax).
pub fn covered_classes<S: Scalar>(expl: &GroupedRuleSet<S>) -> BTreeSet<usize> {
    expl.groups.iter().map(|g| g.signature.class()).collect()
}

/// Every class owns at least one group.
pub fn covers_all_classes<S: Scalar>(expl: &GroupedRuleSet<S>) -> bool {
    covered_classes(expl).len() == expl.space.n_classes()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitnessKind {
    /// Optimal explanations, weighted by α.
    Opt { alpha: f64 },
    /// Inputs for class profiles.
    Pro,
}

/// Box for (φ, θ, ψ, k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub phi: (f64, f64),
    pub theta: (f64, f64),
    pub psi: (f64, f64),
    pub k: (f64, f64),
}

impl SearchBounds {
    /// φ ∈ [0, log2 m], θ ∈ [0, 1], ψ ∈ [0.01, 1], k ∈ [1, 50].
    pub fn opt(classes: usize) -> Self {
        SearchBounds {
            phi: (0.0, (classes as f64).log2()),
            theta: (0.0, 1.0),
            psi: (0.01, 1.0),
            k: (1.0, 50.0),
        }
    }

    /// As [`SearchBounds::opt`] with k ∈ [1, 200].
    pub fn pro(classes: usize) -> Self {
        SearchBounds {
            k: (1.0, 200.0),
            ..Self::opt(classes)
        }
    }

    pub fn to_vec(&self) -> Vec<(f64, f64)> {
        vec![self.phi, self.theta, self.psi, self.k]
    }

    /// PSO settings over this box, k marked integer.
    pub fn pso_config(&self) -> PsoConfig {
        let mut config = PsoConfig::new(self.to_vec());
        config.integer = vec![false, false, false, true];
        config
    }
}

pub fn params_from_point(point: &[f64]) -> Result<ExplanationParams> {
    match point {
        [phi, theta, psi, k] => ExplanationParams::new(*phi, *theta, *psi, k.round().max(1.0) as usize),
        _ => Err(Error::InvalidInput(format!(
            "expected 4 parameters (phi, theta, psi, k), got {}",
            point.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<S> {
    pub explanation: GroupedRuleSet<S>,
    pub metrics: ExplanationMetrics,
    pub params: ExplanationParams,
    pub score: f64,
    pub trace: Vec<TraceEntry>,
}

/// Parameter search bound to one model and one evaluation dataset D.
///
/// Holds the precomputed [`Simplifier`] so repeated searches (several α
/// values or seeds) share the extraction work.
pub struct ExplanationSearch<'a, S> {
    model: &'a EnsembleModel<S>,
    data: &'a Dataset<S>,
    simplifier: Simplifier<S>,
}

impl<'a, S: Scalar> ExplanationSearch<'a, S> {
    pub fn new(model: &'a EnsembleModel<S>, data: &'a Dataset<S>) -> Result<Self> {
        let rules = extract_rules(model);
        Self::with_simplifier(model, data, Simplifier::new(&rules, model)?)
    }

    pub fn with_simplifier(
        model: &'a EnsembleModel<S>,
        data: &'a Dataset<S>,
        simplifier: Simplifier<S>,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("evaluation dataset is empty".into()));
        }
        if data.space != model.space {
            return Err(Error::InvalidInput("dataset and model feature spaces differ".into()));
        }
        Ok(ExplanationSearch {
            model,
            data,
            simplifier,
        })
    }

    pub fn simplifier(&self) -> &Simplifier<S> {
        &self.simplifier
    }

    /// Simplifies with fixed parameters and evaluates on D.
    pub fn evaluate_params(&self, params: &ExplanationParams) -> Result<(GroupedRuleSet<S>, ExplanationMetrics)> {
        let expl = self.simplifier.simplify(params)?;
        let metrics = evaluate(&expl, self.model, self.data)?;
        Ok((expl, metrics))
    }

    pub fn fitness(&self, kind: FitnessKind, params: &ExplanationParams) -> Result<f64> {
        let m = self.model.n_classes();
        let n = self.model.space.n_features();
        match kind {
            FitnessKind::Opt { alpha } => {
                let (_, metrics) = self.evaluate_params(params)?;
                Ok(score_opt(metrics.fidelity, metrics.scale, alpha, m, n))
            }
            FitnessKind::Pro => {
                let expl = self.simplifier.simplify(params)?;
                Ok(if covers_all_classes(&expl) {
                    score_pro(&expl, m)
                } else {
                    f64::NEG_INFINITY
                })
            }
        }
    }

    /// Runs the swarm with the given fitness and rebuilds the winner.
    pub fn search(&self, kind: FitnessKind, pso: &PsoConfig) -> Result<SearchOutcome<S>> {
        if let FitnessKind::Opt { alpha } = kind {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
            }
        }
        let result = pso_optimize(|point| self.fitness(kind, &params_from_point(point)?), pso)?;
        let params = params_from_point(&result.best_params)?;
        let (explanation, metrics) = self.evaluate_params(&params)?;
        Ok(SearchOutcome {
            explanation,
            metrics,
            params,
            score: result.best_score,
            trace: result.trace,
        })
    }

    /// Best explanation under the α-weighted score.
    pub fn optimal(&self, alpha: f64, pso: &PsoConfig) -> Result<SearchOutcome<S>> {
        self.search(FitnessKind::Opt { alpha }, pso)
    }

    /// Explanation to feed class profiles: maximises the profile score among
    /// parameter tuples that give every class its own group.
    pub fn for_profile(&self, pso: &PsoConfig) -> Result<SearchOutcome<S>> {
        let outcome = self.search(FitnessKind::Pro, pso)?;
        if outcome.score == f64::NEG_INFINITY {
            let covered = covered_classes(&outcome.explanation);
            let missing: Vec<&str> = self
                .model
                .space
                .classes()
                .iter()
                .enumerate()
                .filter(|(c, _)| !covered.contains(c))
                .map(|(_, name)| name.as_str())
                .collect();
            return Err(Error::Infeasible(format!(
                "no parameters within the search box give every class a group; \
                 best candidate {:?} leaves {missing:?} uncovered",
                outcome.params.to_vec()
            )));
        }
        Ok(outcome)
    }
}

/// Searches (φ, θ, ψ, k) for the explanation maximising the α-weighted score
/// on `data`.
pub fn opt_explain<S: Scalar>(
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
    alpha: f64,
    pso: &PsoConfig,
) -> Result<SearchOutcome<S>> {
    ExplanationSearch::new(model, data)?.optimal(alpha, pso)
}

/// Searches (φ, θ, ψ, k) for the explanation used to build class profiles.
pub fn pro_explain_params<S: Scalar>(
    model: &EnsembleModel<S>,
    data: &Dataset<S>,
    pso: &PsoConfig,
) -> Result<GroupedRuleSet<S>> {
    Ok(ExplanationSearch::new(model, data)?.for_profile(pso)?.explanation)
}
