//! Rule-set simplification: node filter, per-feature merge, rule filter,
//! grouping by class signature and the per-group size cap.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DecisionTreeModel, EnsembleModel, FeatureSpace, NodeKind};
use crate::rules::{merge_conjuncts, Conjunct, Consequent, DecisionRule, Origin, RuleLine, RuleSet};
use crate::scalar::{argmax, entropy, Scalar};

/// Tuple (φ, θ, ψ, k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplanationParams {
    /// Minimum information gain (bits) for a node to stay in a rule.
    #[serde(rename = "phi")]
    pub node_threshold: f64,
    /// Minimum rule quality in [0, 1].
    #[serde(rename = "theta")]
    pub rule_threshold: f64,
    /// Ratio bucket width in (0, 1] used for class signatures.
    #[serde(rename = "psi")]
    pub merge_granularity: f64,
    /// Rules kept per group.
    #[serde(rename = "k")]
    pub group_cap: usize,
}

impl ExplanationParams {
    pub fn new(phi: f64, theta: f64, psi: f64, k: usize) -> Result<Self> {
        let p = ExplanationParams {
            node_threshold: phi,
            rule_threshold: theta,
            merge_granularity: psi,
            group_cap: k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.node_threshold >= 0.0) {
            return Err(Error::InvalidInput(format!("phi {} must be >= 0", self.node_threshold)));
        }
        if !(0.0..=1.0).contains(&self.rule_threshold) {
            return Err(Error::InvalidInput(format!("theta {} outside [0, 1]", self.rule_threshold)));
        }
        if !(self.merge_granularity > 0.0 && self.merge_granularity <= 1.0) {
            return Err(Error::InvalidInput(format!("psi {} outside (0, 1]", self.merge_granularity)));
        }
        if self.group_cap == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.node_threshold,
            self.rule_threshold,
            self.merge_granularity,
            self.group_cap as f64,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassSignature(pub Vec<u32>);

impl ClassSignature {
    /// Class with the largest entry, lowest index on ties.
    pub fn class(&self) -> usize {
        let as_f64: Vec<f64> = self.0.iter().map(|&e| f64::from(e)).collect();
        argmax(&as_f64)
    }
}

/// Information gain of an internal node's split, in bits.
pub fn information_gain<S: Scalar>(parent: &[u64], left: &[u64], right: &[u64]) -> Result<S> {
    let total: u64 = parent.iter().sum();
    if total == 0 {
        return Err(Error::Validation("information gain of a node with no instances".into()));
    }
    let as_s = |c: &[u64]| c.iter().map(|&v| S::from_count(v)).collect::<Vec<S>>();
    let n = S::from_count(total);
    let mut gain = entropy(&as_s(parent));
    for child in [left, right] {
        let size: u64 = child.iter().sum();
        if size > 0 {
            gain -= S::from_count(size) / n * entropy(&as_s(child));
        }
    }
    // Rounding can leave a tiny negative residue for uninformative splits.
    Ok(gain.max(S::zero()))
}

/// Node quality: information gain of the split at node position `pos`.
pub fn node_quality<S: Scalar>(tree: &DecisionTreeModel<S>, pos: usize) -> Result<S> {
    let node = tree.node(pos);
    match &node.kind {
        NodeKind::Internal { left, right, .. } => information_gain(
            &node.counts,
            &tree.node(*left).counts,
            &tree.node(*right).counts,
        ),
        NodeKind::Leaf => Err(Error::InvalidInput(format!("node {} is a leaf", node.id))),
    }
}

/// `((log2 m - H(leaf)) / log2 m) * accuracy`.
pub fn leaf_quality<S: Scalar>(counts: &[S], accuracy: S) -> S {
    let m = S::from_usize(counts.len()).expect("class count");
    let max_entropy = m.log2();
    ((max_entropy - entropy(counts)) / max_entropy).max(S::zero()) * accuracy
}

/// Rule quality of `rule`, whose origin leaf lives in `tree`. Accuracy is the
/// tree's OOB accuracy, 1.0 when absent.
pub fn rule_quality<S: Scalar>(rule: &DecisionRule<S>, tree: &DecisionTreeModel<S>) -> Result<S> {
    let pos = tree
        .position_of(rule.origin.leaf)
        .ok_or_else(|| Error::InvalidInput(format!("leaf {} not in tree", rule.origin.leaf)))?;
    let counts: Vec<S> = tree.node(pos).counts.iter().map(|&c| S::from_count(c)).collect();
    Ok(leaf_quality(&counts, tree.accuracy_or_one()))
}

/// `ceil(ratio_i / psi)` per class.
pub fn class_signature<S: Scalar>(counts: &[S], psi: f64) -> Result<ClassSignature> {
    if !(psi > 0.0 && psi <= 1.0) {
        return Err(Error::InvalidInput(format!("psi {psi} outside (0, 1]")));
    }
    let total: f64 = counts.iter().map(|c| c.as_f64()).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("class signature of an all-zero distribution".into()));
    }
    Ok(ClassSignature(
        counts
            .iter()
            .map(|c| {
                let q = c.as_f64() / total / psi;
                // Absorb floating-point residue such as 0.2 / 0.1 = 2.0000000000000004.
                (q - 1e-9 * q.max(1.0)).ceil().max(0.0) as u32
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleGroup<S> {
    pub signature: ClassSignature,
    /// Rules in weight-first order; each consequent is the group signature.
    pub rules: Vec<DecisionRule<S>>,
}

impl<S: Scalar> RuleGroup<S> {
    pub fn total_weight(&self) -> S {
        self.rules.iter().map(|r| r.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_fingerprint: String,
    /// Some tree lacked OOB accuracy and 1.0 was used instead.
    pub oob_missing: bool,
    /// Every rule was filtered out.
    pub empty: bool,
    pub source_rules: usize,
    pub source_scale: usize,
}

/// The simplified explanation: rules grouped by class signature.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedRuleSet<S> {
    pub space: FeatureSpace,
    pub params: ExplanationParams,
    pub groups: Vec<RuleGroup<S>>,
    pub provenance: Provenance,
}

impl<S: Scalar> GroupedRuleSet<S> {
    pub fn rules(&self) -> impl Iterator<Item = &DecisionRule<S>> {
        self.groups.iter().flat_map(|g| g.rules.iter())
    }

    pub fn rule_count(&self) -> usize {
        self.groups.iter().map(|g| g.rules.len()).sum()
    }

    /// Total conjunct count.
    pub fn scale(&self) -> usize {
        self.rules().map(DecisionRule::len).sum()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn to_json(&self) -> String {
        let file = ExplanationFile {
            params: self.params,
            groups: self
                .groups
                .iter()
                .map(|g| GroupEntry {
                    signature: g.signature.clone(),
                    rules: g.rules.iter().map(RuleLine::from_rule).collect(),
                })
                .collect(),
            provenance: self.provenance.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("explanation serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, space: &FeatureSpace) -> Result<Self> {
        let file: ExplanationFile<S> =
            serde_json::from_str(text).map_err(|e| Error::parse("explanation file", e))?;
        file.params.validate()?;
        let mut groups = Vec::with_capacity(file.groups.len());
        for (g, entry) in file.groups.into_iter().enumerate() {
            if entry.signature.0.len() != space.n_classes() {
                return Err(Error::parse("explanation file", format!("group {g}: signature length")));
            }
            let rules = entry
                .rules
                .into_iter()
                .map(|r| r.into_rule(space))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|msg| Error::parse("explanation file", format!("group {g}: {msg}")))?;
            groups.push(RuleGroup {
                signature: entry.signature,
                rules,
            });
        }
        Ok(GroupedRuleSet {
            space: space.clone(),
            params: file.params,
            groups,
            provenance: file.provenance,
        })
    }

    /// Groups / Class Signature / Rules / Weight table.
    pub fn table(&self) -> String {
        let classes = self.space.classes().join(", ");
        let header = [
            "Groups".to_string(),
            format!("Class Signature ({classes})"),
            "Rules".to_string(),
            "Weight".to_string(),
        ];
        let mut rows: Vec<[String; 4]> = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            let sig = format!(
                "({})",
                group.signature.0.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
            );
            for (i, rule) in group.rules.iter().enumerate() {
                rows.push([
                    if i == 0 { format!("Group{}", g + 1) } else { String::new() },
                    if i == 0 { sig.clone() } else { String::new() },
                    rule.antecedent_text(&self.space),
                    rule.weight.to_string(),
                ]);
            }
        }
        render_table(&header, &rows)
    }
}

pub(crate) fn render_table(header: &[String], rows: &[[String; 4]]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str(" | ");
            }
            let _ = write!(s, "{cell:<w$}");
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GroupEntry<S> {
    signature: ClassSignature,
    rules: Vec<RuleLine<S>>,
}

#[derive(Serialize, Deserialize)]
struct ExplanationFile<S> {
    params: ExplanationParams,
    groups: Vec<GroupEntry<S>>,
    provenance: Provenance,
}

/// Per-rule data that does not depend on the parameters.
#[derive(Debug, Clone)]
struct Candidate<S> {
    /// Path atoms with the information gain of their source node.
    atoms: Vec<(Conjunct<S>, S)>,
    leaf_counts: Vec<S>,
    quality: S,
    weight: S,
    origin: Origin,
}

/// Precomputed view of R_E that answers `simp` for any parameter tuple.
///
/// Node qualities, rule qualities and leaf distributions are computed once;
/// each [`Simplifier::simplify`] call only filters, groups and merges.
#[derive(Debug, Clone)]
pub struct Simplifier<S> {
    space: FeatureSpace,
    candidates: Vec<Candidate<S>>,
    fingerprint: String,
    oob_missing: bool,
    source_scale: usize,
}

impl<S: Scalar> Simplifier<S> {
    /// `rules` must come from [`crate::rules::extract_rules`] on `model`:
    /// every rule's conjuncts are the raw atoms of its origin leaf's path.
    pub fn new(rules: &RuleSet<S>, model: &EnsembleModel<S>) -> Result<Self> {
        let mut node_gain: Vec<Vec<Option<S>>> = model.trees.iter().map(|t| vec![None; t.nodes().len()]).collect();
        let mut candidates = Vec::with_capacity(rules.rules.len());
        for rule in &rules.rules {
            let tree = model.trees.get(rule.origin.tree).ok_or_else(|| {
                Error::InvalidInput(format!("rule origin tree {} not in model", rule.origin.tree))
            })?;
            let leaf = tree
                .position_of(rule.origin.leaf)
                .filter(|&p| tree.node(p).is_leaf())
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "rule origin leaf {} not in tree {}",
                        rule.origin.leaf, rule.origin.tree
                    ))
                })?;
            let path = tree.path_to(leaf);
            if path.len() != rule.conjuncts.len() {
                return Err(Error::InvalidInput(format!(
                    "rule from tree {} leaf {} is not an unmerged branch",
                    rule.origin.tree, rule.origin.leaf
                )));
            }
            let mut atoms = Vec::with_capacity(path.len());
            for ((pos, _), conjunct) in path.iter().zip(&rule.conjuncts) {
                let cache = &mut node_gain[rule.origin.tree][*pos];
                let gain = match cache {
                    Some(g) => *g,
                    None => *cache.insert(node_quality(tree, *pos)?),
                };
                atoms.push((conjunct.clone(), gain));
            }
            let leaf_counts: Vec<S> = tree.node(leaf).counts.iter().map(|&c| S::from_count(c)).collect();
            candidates.push(Candidate {
                quality: leaf_quality(&leaf_counts, tree.accuracy_or_one()),
                weight: rule.weight,
                origin: rule.origin,
                leaf_counts,
                atoms,
            });
        }
        Ok(Simplifier {
            space: rules.space.clone(),
            candidates,
            fingerprint: model.fingerprint(),
            oob_missing: model.has_missing_oob(),
            source_scale: rules.scale(),
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn source_scale(&self) -> usize {
        self.source_scale
    }

    pub fn rule_count(&self) -> usize {
        self.candidates.len()
    }

    /// Applies the node filter to every rule (atoms of nodes with gain < φ
    /// are dropped), keeping antecedents unmerged.
    pub fn filter_nodes(&self, phi: S) -> RuleSet<S> {
        RuleSet {
            space: self.space.clone(),
            rules: self
                .candidates
                .iter()
                .map(|c| DecisionRule {
                    conjuncts: c
                        .atoms
                        .iter()
                        .filter(|(_, gain)| *gain >= phi)
                        .map(|(a, _)| a.clone())
                        .collect(),
                    consequent: Consequent::Votes(c.leaf_counts.clone()),
                    weight: c.weight,
                    origin: c.origin,
                })
                .collect(),
            tree_weights: Vec::new(),
        }
    }

    pub fn simplify(&self, params: &ExplanationParams) -> Result<GroupedRuleSet<S>> {
        params.validate()?;
        let phi = S::lit(params.node_threshold);
        let theta = S::lit(params.rule_threshold);

        // Merging only rewrites antecedents and never changes quality,
        // signature or weight, so it is applied to the survivors of the
        // rule filter and size cap; the output equals merging every rule first.
        let mut by_signature: BTreeMap<ClassSignature, Vec<usize>> = BTreeMap::new();
        for (i, c) in self.candidates.iter().enumerate() {
            if c.quality >= theta {
                let sig = class_signature(&c.leaf_counts, params.merge_granularity)?;
                by_signature.entry(sig).or_default().push(i);
            }
        }

        let mut groups = Vec::with_capacity(by_signature.len());
        for (signature, mut members) in by_signature {
            members.sort_by(|&a, &b| {
                let (ca, cb) = (&self.candidates[a], &self.candidates[b]);
                cb.weight
                    .partial_cmp(&ca.weight)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(cb.quality.partial_cmp(&ca.quality).unwrap_or(std::cmp::Ordering::Equal))
                    .then(ca.origin.cmp(&cb.origin))
            });
            members.truncate(params.group_cap);
            let mut rules = Vec::with_capacity(members.len());
            for i in members {
                let c = &self.candidates[i];
                let kept: Vec<Conjunct<S>> = c
                    .atoms
                    .iter()
                    .filter(|(_, gain)| *gain >= phi)
                    .map(|(a, _)| a.clone())
                    .collect();
                let conjuncts = merge_conjuncts(&kept).map_err(|e| Error::Contradiction {
                    tree: c.origin.tree,
                    leaf: c.origin.leaf,
                    feature: e.feature,
                })?;
                rules.push(DecisionRule {
                    conjuncts,
                    consequent: Consequent::Signature(signature.0.clone()),
                    weight: c.weight,
                    origin: c.origin,
                });
            }
            groups.push(RuleGroup { signature, rules });
        }
        // Signature class first, then larger signatures first.
        groups.sort_by(|a, b| {
            a.signature
                .class()
                .cmp(&b.signature.class())
                .then_with(|| b.signature.cmp(&a.signature))
        });

        Ok(GroupedRuleSet {
            space: self.space.clone(),
            params: *params,
            provenance: Provenance {
                model_fingerprint: self.fingerprint.clone(),
                oob_missing: self.oob_missing,
                empty: groups.is_empty(),
                source_rules: self.candidates.len(),
                source_scale: self.source_scale,
            },
            groups,
        })
    }
}

/// Node filter over an unmerged rule set.
pub fn filter_nodes<S: Scalar>(rules: &RuleSet<S>, model: &EnsembleModel<S>, phi: S) -> Result<RuleSet<S>> {
    let mut out = Simplifier::new(rules, model)?.filter_nodes(phi);
    for (new, old) in out.rules.iter_mut().zip(&rules.rules) {
        new.consequent = old.consequent.clone();
    }
    out.tree_weights = rules.tree_weights.clone();
    Ok(out)
}

/// One-shot simplification of `rules` (= R_E of `model`).
pub fn simp<S: Scalar>(
    rules: &RuleSet<S>,
    model: &EnsembleModel<S>,
    params: &ExplanationParams,
) -> Result<GroupedRuleSet<S>> {
    Simplifier::new(rules, model)?.simplify(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::example_model;
    use crate::rules::extract_rules;

    #[test]
    fn information_gain_values() {
        // H(5/13, 8/13) - 6/13 * 0 - 7/13 * H(5/7, 2/7), evaluated independently.
        let ig: f64 = information_gain(&[5, 8], &[0, 6], &[5, 2]).unwrap();
        assert!((ig - 0.496_479_375_494_690).abs() < 1e-12, "{ig}");
        let same_ratio: f64 = information_gain(&[4, 2], &[2, 1], &[2, 1]).unwrap();
        assert!(same_ratio.abs() < 1e-12);
        let pure: f64 = information_gain(&[7, 0], &[3, 0], &[4, 0]).unwrap();
        assert_eq!(pure, 0.0);
        assert!(information_gain::<f64>(&[0, 0], &[0, 0], &[0, 0]).is_err());
    }

    #[test]
    fn node_quality_of_example_root() {
        let model = example_model();
        let tree = &model.trees[0];
        let q = node_quality(tree, tree.root()).unwrap();
        assert!((q - 0.496_479_375_494_690).abs() < 1e-12);
        assert!(node_quality(tree, 1).is_err());
    }

    #[test]
    fn leaf_quality_values() {
        assert!((leaf_quality(&[4.0_f64, 0.0], 0.8) - 0.8).abs() < 1e-12);
        assert_eq!(leaf_quality(&[1.0_f64, 1.0], 0.9), 0.0);
        // 1 - H(0.75, 0.25) computed independently.
        assert!((leaf_quality(&[3.0_f64, 1.0], 1.0) - 0.188_721_875_540_867).abs() < 1e-12);
    }

    #[test]
    fn signatures() {
        assert_eq!(class_signature(&[30.0_f64, 0.0], 0.83).unwrap(), ClassSignature(vec![2, 0]));
        assert_eq!(class_signature(&[1.0_f64, 1.0], 0.5).unwrap(), ClassSignature(vec![1, 1]));
        assert_eq!(class_signature(&[7.0_f64, 3.0], 0.25).unwrap(), ClassSignature(vec![3, 2]));
        assert_eq!(class_signature(&[2.0_f64, 8.0], 0.1).unwrap(), ClassSignature(vec![2, 8]));
        assert!(class_signature(&[0.0_f64, 0.0], 0.5).is_err());
        assert!(class_signature(&[1.0_f64, 0.0], 0.0).is_err());
    }

    #[test]
    fn simp_on_example_tree() {
        let model = example_model();
        let rules = extract_rules(&model);
        let params = ExplanationParams::new(0.0, 0.0, 0.5, 10).unwrap();
        let expl = simp(&rules, &model, &params).unwrap();
        // (0,6) -> (0,2); (2,1) -> (2,1); (3,1) -> (2,1).
        let sigs: Vec<_> = expl.groups.iter().map(|g| g.signature.0.clone()).collect();
        assert_eq!(sigs, vec![vec![2, 1], vec![0, 2]]);
        assert_eq!(expl.groups[0].rules[0].weight, 4.0);
        assert_eq!(expl.scale(), 5);

        let capped = simp(&rules, &model, &ExplanationParams::new(0.0, 0.0, 0.5, 1).unwrap()).unwrap();
        assert_eq!(capped.rule_count(), 2);

        // Only the pure leaf has RQ = 1 (OOB missing counts as 1.0).
        let strict = simp(&rules, &model, &ExplanationParams::new(0.0, 1.0, 0.5, 10).unwrap()).unwrap();
        assert_eq!(strict.rule_count(), 1);
        assert!(strict.provenance.oob_missing);

        let everything_dropped =
            simp(&rules, &model, &ExplanationParams::new(2.0, 0.0, 0.5, 10).unwrap()).unwrap();
        assert_eq!(everything_dropped.scale(), 0);
        assert_eq!(everything_dropped.rule_count(), 3);
    }

    #[test]
    fn filter_nodes_extremes() {
        let model = example_model();
        let rules = extract_rules(&model);
        assert_eq!(filter_nodes(&rules, &model, 0.0).unwrap(), rules);
        let all_gone = filter_nodes(&rules, &model, 1.0 + 1e-9).unwrap();
        assert_eq!(all_gone.scale(), 0);
        assert_eq!(all_gone.rules.len(), 3);
    }

    #[test]
    fn explanation_json_round_trip() {
        let model = example_model();
        let rules = extract_rules(&model);
        let expl = simp(&rules, &model, &ExplanationParams::new(0.0, 0.0, 0.5, 10).unwrap()).unwrap();
        let again = GroupedRuleSet::<f64>::from_json(&expl.to_json(), &model.space).unwrap();
        assert_eq!(expl, again);
        let table = expl.table();
        assert!(table.starts_with("Groups | Class Signature (class0, class1)"));
        assert!(table.contains("Group2 | (0, 2)"));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ExplanationParams::new(-0.1, 0.0, 0.5, 1).is_err());
        assert!(ExplanationParams::new(0.0, 1.1, 0.5, 1).is_err());
        assert!(ExplanationParams::new(0.0, 0.0, 0.0, 1).is_err());
        assert!(ExplanationParams::new(0.0, 0.0, 0.5, 0).is_err());
    }
}
