//! Conjunct algebra, tree-to-rule conversion and rule-set prediction.
//!
//! Every conjunct is a single-feature region: a half-open numeric interval
//! `[lo, hi)` (either side may be infinite) or a set of nominal category
//! indices. A node predicate `v >= t` on the right branch becomes `[t, +inf)`
//! and its negation on the left branch becomes `[-inf, t)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnsembleModel, FeatureKind, FeatureSpace, NodeKind, Predicate};
use crate::scalar::{argmax, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint<S> {
    /// `lo <= v < hi`
    Interval { lo: S, hi: S },
    /// `v in set`
    Categories(BTreeSet<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct<S> {
    pub feature: usize,
    pub constraint: Constraint<S>,
}

impl<S: Scalar> Conjunct<S> {
    pub fn interval(feature: usize, lo: S, hi: S) -> Self {
        Conjunct {
            feature,
            constraint: Constraint::Interval { lo, hi },
        }
    }

    pub fn at_least(feature: usize, t: S) -> Self {
        Self::interval(feature, t, S::infinity())
    }

    pub fn below(feature: usize, t: S) -> Self {
        Self::interval(feature, S::neg_infinity(), t)
    }

    pub fn categories(feature: usize, set: impl IntoIterator<Item = usize>) -> Self {
        Conjunct {
            feature,
            constraint: Constraint::Categories(set.into_iter().collect()),
        }
    }

    /// The atom contributed by an internal node: the predicate itself when
    /// the path goes right, its complement when it goes left.
    pub fn from_split(
        feature: usize,
        predicate: &Predicate<S>,
        went_right: bool,
        space: &FeatureSpace,
    ) -> Self {
        match (predicate, went_right) {
            (Predicate::AtLeast(t), true) => Self::at_least(feature, *t),
            (Predicate::AtLeast(t), false) => Self::below(feature, *t),
            (Predicate::InSet(set), true) => Self::categories(feature, set.iter().copied()),
            (Predicate::InSet(set), false) => {
                let all = space.feature(feature).categories.len();
                Self::categories(feature, (0..all).filter(|c| !set.contains(c)))
            }
        }
    }

    pub fn holds(&self, x: &[S]) -> bool {
        self.contains(x[self.feature])
    }

    pub fn contains(&self, v: S) -> bool {
        match &self.constraint {
            Constraint::Interval { lo, hi } => *lo <= v && v < *hi,
            Constraint::Categories(set) => v.to_usize().is_some_and(|c| set.contains(&c)),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.constraint {
            Constraint::Interval { lo, hi } => !(lo < hi),
            Constraint::Categories(set) => set.is_empty(),
        }
    }

    /// Region intersection; `None` for different features or kinds.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        if self.feature != other.feature {
            return None;
        }
        let constraint = match (&self.constraint, &other.constraint) {
            (Constraint::Interval { lo: a, hi: b }, Constraint::Interval { lo: c, hi: d }) => {
                Constraint::Interval {
                    lo: a.max(*c),
                    hi: b.min(*d),
                }
            }
            (Constraint::Categories(a), Constraint::Categories(b)) => {
                Constraint::Categories(a.intersection(b).copied().collect())
            }
            _ => return None,
        };
        Some(Conjunct {
            feature: self.feature,
            constraint,
        })
    }

    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> ConjunctDisplay<'a, S> {
        ConjunctDisplay { conjunct: self, space }
    }
}

pub struct ConjunctDisplay<'a, S> {
    conjunct: &'a Conjunct<S>,
    space: &'a FeatureSpace,
}

impl<S: Scalar> fmt::Display for ConjunctDisplay<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decl = self.space.feature(self.conjunct.feature);
        let name = &decl.name;
        match &self.conjunct.constraint {
            Constraint::Interval { lo, hi } => match (lo.is_finite(), hi.is_finite()) {
                (false, false) => write!(f, "{name} any"),
                (true, false) => write!(f, "{name} >= {}", lo.short()),
                (false, true) => write!(f, "{name} < {}", hi.short()),
                (true, true) => write!(f, "{} <= {name} < {}", lo.short(), hi.short()),
            },
            Constraint::Categories(set) => {
                let names: Vec<&str> = set.iter().map(|&c| decl.categories[c].as_str()).collect();
                if names.len() == 1 {
                    write!(f, "{name} = {}", names[0])
                } else {
                    write!(f, "{name} in {{{}}}", names.join(", "))
                }
            }
        }
    }
}

/// A conjunction came out empty on `feature`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyRegion {
    pub feature: usize,
}

/// Intersects atoms feature by feature, producing exactly one conjunct per
/// mentioned feature, ordered by feature index.
pub fn merge_conjuncts<S: Scalar>(atoms: &[Conjunct<S>]) -> std::result::Result<Vec<Conjunct<S>>, EmptyRegion> {
    let mut merged: BTreeMap<usize, Conjunct<S>> = BTreeMap::new();
    for atom in atoms {
        let next = match merged.get(&atom.feature) {
            None => atom.clone(),
            Some(prev) => prev.intersect(atom).ok_or(EmptyRegion { feature: atom.feature })?,
        };
        if next.is_empty() {
            return Err(EmptyRegion { feature: atom.feature });
        }
        merged.insert(atom.feature, next);
    }
    Ok(merged.into_values().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Consequent<S> {
    /// Leaf vote counts scaled by the tree weight.
    Votes(Vec<S>),
    /// Class signature of the leaf's class ratios.
    Signature(Vec<u32>),
}

impl<S: Scalar> Consequent<S> {
    pub fn len(&self) -> usize {
        match self {
            Consequent::Votes(v) => v.len(),
            Consequent::Signature(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Score vector this consequent adds when its rule fires.
    pub fn contribution(&self, weight: S) -> Vec<S> {
        match self {
            Consequent::Votes(v) => v.clone(),
            Consequent::Signature(s) => s.iter().map(|&e| weight * S::from_count(e as u64)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub tree: usize,
    pub leaf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule<S> {
    pub conjuncts: Vec<Conjunct<S>>,
    pub consequent: Consequent<S>,
    pub weight: S,
    pub origin: Origin,
}

impl<S: Scalar> DecisionRule<S> {
    pub fn satisfies(&self, x: &[S]) -> bool {
        self.conjuncts.iter().all(|c| c.holds(x))
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn antecedent_text(&self, space: &FeatureSpace) -> String {
        if self.conjuncts.is_empty() {
            return "true".to_string();
        }
        self.conjuncts
            .iter()
            .map(|c| c.display(space).to_string())
            .collect::<Vec<_>>()
            .join(" and ")
    }
}

/// Free function form of [`DecisionRule::satisfies`].
pub fn satisfies<S: Scalar>(rule: &DecisionRule<S>, x: &[S]) -> bool {
    rule.satisfies(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet<S> {
    pub space: FeatureSpace,
    pub rules: Vec<DecisionRule<S>>,
    pub tree_weights: Vec<S>,
}

impl<S: Scalar> RuleSet<S> {
    /// Total conjunct count.
    pub fn scale(&self) -> usize {
        self.rules.iter().map(DecisionRule::len).sum()
    }

    /// Sum of the contributions of every satisfied rule, and its argmax.
    pub fn predict(&self, x: &[S]) -> (Vec<S>, usize) {
        let mut votes = vec![S::zero(); self.space.n_classes()];
        for rule in self.rules.iter().filter(|r| r.satisfies(x)) {
            for (v, c) in votes.iter_mut().zip(rule.consequent.contribution(rule.weight)) {
                *v += c;
            }
        }
        let class = argmax(&votes);
        (votes, class)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for rule in &self.rules {
            let line = serde_json::to_string(&RuleLine::from_rule(rule)).expect("rule serializes");
            writeln!(out, "{line}").map_err(|e| Error::io("rule output", e))?;
        }
        Ok(())
    }

    /// Reads rules written by [`RuleSet::write_jsonl`], validating them
    /// against the model they were extracted from.
    pub fn read_jsonl<R: BufRead>(input: R, model: &EnsembleModel<S>) -> Result<Self> {
        let space = &model.space;
        let mut rules = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("rule input", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RuleLine<S> =
                serde_json::from_str(&line).map_err(|e| Error::parse(format!("rule line {}", i + 1), e))?;
            let rule = parsed
                .into_rule(space)
                .map_err(|msg| Error::parse(format!("rule line {}", i + 1), msg))?;
            if rule.origin.tree >= model.trees.len() {
                return Err(Error::parse(
                    format!("rule line {}", i + 1),
                    format!("origin tree {} not in model", rule.origin.tree),
                ));
            }
            rules.push(rule);
        }
        Ok(RuleSet {
            space: space.clone(),
            rules,
            tree_weights: model.trees.iter().map(|t| t.weight).collect(),
        })
    }
}

/// Free function form of [`RuleSet::predict`].
pub fn predict_ruleset<S: Scalar>(rules: &RuleSet<S>, x: &[S]) -> (Vec<S>, usize) {
    rules.predict(x)
}

/// Converts every root-to-leaf branch of every tree into a rule whose
/// antecedent is the raw, unmerged list of path atoms. Rules are ordered by
/// tree index, then leaf id.
pub fn extract_rules<S: Scalar>(model: &EnsembleModel<S>) -> RuleSet<S> {
    let space = &model.space;
    let mut rules = Vec::new();
    for (t, tree) in model.trees.iter().enumerate() {
        let mut leaves: Vec<usize> = tree.leaves().collect();
        leaves.sort_by_key(|&p| tree.node(p).id);
        for leaf in leaves {
            let conjuncts = tree
                .path_to(leaf)
                .into_iter()
                .map(|(pos, went_right)| match &tree.node(pos).kind {
                    NodeKind::Internal {
                        feature, predicate, ..
                    } => Conjunct::from_split(*feature, predicate, went_right, space),
                    NodeKind::Leaf => unreachable!("leaf on a path"),
                })
                .collect();
            let node = tree.node(leaf);
            rules.push(DecisionRule {
                conjuncts,
                consequent: Consequent::Votes(
                    node.counts.iter().map(|&c| tree.weight * S::from_count(c)).collect(),
                ),
                weight: S::from_count(node.total()),
                origin: Origin { tree: t, leaf: node.id },
            });
        }
    }
    RuleSet {
        space: space.clone(),
        rules,
        tree_weights: model.trees.iter().map(|t| t.weight).collect(),
    }
}

// ---- JSON lines encoding ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConjunctEntry<S> {
    feature: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<S>,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<usize>>,
}

impl<S: Scalar> ConjunctEntry<S> {
    pub(crate) fn from_conjunct(c: &Conjunct<S>) -> Self {
        match &c.constraint {
            Constraint::Interval { lo, hi } => ConjunctEntry {
                feature: c.feature,
                lo: lo.is_finite().then_some(*lo),
                hi: hi.is_finite().then_some(*hi),
                categories: None,
            },
            Constraint::Categories(set) => ConjunctEntry {
                feature: c.feature,
                lo: None,
                hi: None,
                categories: Some(set.iter().copied().collect()),
            },
        }
    }

    pub(crate) fn into_conjunct(self, space: &FeatureSpace) -> std::result::Result<Conjunct<S>, String> {
        let decl = space
            .features()
            .get(self.feature)
            .ok_or_else(|| format!("undeclared feature {}", self.feature))?;
        let c = match (decl.kind, self.categories) {
            (FeatureKind::Nominal, Some(set)) => {
                if self.lo.is_some() || self.hi.is_some() {
                    return Err("nominal conjunct with bounds".into());
                }
                if set.iter().any(|&c| c >= decl.categories.len()) {
                    return Err(format!("undeclared category for {:?}", decl.name));
                }
                Conjunct::categories(self.feature, set)
            }
            (FeatureKind::Numeric, None) => Conjunct::interval(
                self.feature,
                self.lo.unwrap_or_else(S::neg_infinity),
                self.hi.unwrap_or_else(S::infinity),
            ),
            _ => return Err(format!("conjunct does not fit feature {:?}", decl.name)),
        };
        if c.is_empty() {
            return Err(format!("empty region on feature {:?}", decl.name));
        }
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub(crate) enum ConsequentEntry<S> {
    Votes(Vec<S>),
    Signature(Vec<u32>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RuleLine<S> {
    conjuncts: Vec<ConjunctEntry<S>>,
    consequent: ConsequentEntry<S>,
    weight: S,
    origin: (usize, u32),
}

impl<S: Scalar> RuleLine<S> {
    pub(crate) fn from_rule(rule: &DecisionRule<S>) -> Self {
        RuleLine {
            conjuncts: rule.conjuncts.iter().map(ConjunctEntry::from_conjunct).collect(),
            consequent: match &rule.consequent {
                Consequent::Votes(v) => ConsequentEntry::Votes(v.clone()),
                Consequent::Signature(s) => ConsequentEntry::Signature(s.clone()),
            },
            weight: rule.weight,
            origin: (rule.origin.tree, rule.origin.leaf),
        }
    }

    pub(crate) fn into_rule(self, space: &FeatureSpace) -> std::result::Result<DecisionRule<S>, String> {
        let conjuncts = self
            .conjuncts
            .into_iter()
            .map(|c| c.into_conjunct(space))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let consequent = match self.consequent {
            ConsequentEntry::Votes(v) => Consequent::Votes(v),
            ConsequentEntry::Signature(s) => Consequent::Signature(s),
        };
        if consequent.len() != space.n_classes() {
            return Err(format!(
                "consequent has {} entries for {} classes",
                consequent.len(),
                space.n_classes()
            ));
        }
        if !(self.weight >= S::zero()) {
            return Err("negative rule weight".into());
        }
        Ok(DecisionRule {
            conjuncts,
            consequent,
            weight: self.weight,
            origin: Origin {
                tree: self.origin.0,
                leaf: self.origin.1,
            },
        })
    }
}
