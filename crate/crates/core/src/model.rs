//! Feature spaces, decision trees and weighted tree ensembles, plus the
//! portable JSON model schema.
//!
//! Internal nodes route an instance to the right child when their predicate
//! holds (`value >= threshold` for numeric features, `value in set` for
//! nominal ones) and to the left child otherwise. Nominal values are carried
//! in feature vectors as the category's index in its declaration.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::{argmax, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub kind: FeatureKind,
    /// Declared category names, empty for numeric features.
    pub categories: Vec<String>,
}

impl FeatureDecl {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureDecl {
            name: name.into(),
            kind: FeatureKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn nominal<I, T>(name: impl Into<String>, categories: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        FeatureDecl {
            name: name.into(),
            kind: FeatureKind::Nominal,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == FeatureKind::Numeric
    }
}

/// Ordered features plus ordered class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<FeatureDecl>,
    classes: Vec<String>,
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDecl>, classes: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Validation("feature with empty name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Validation(format!("duplicate feature name {:?}", f.name)));
            }
            match f.kind {
                FeatureKind::Numeric if !f.categories.is_empty() => {
                    return Err(Error::Validation(format!(
                        "numeric feature {:?} declares categories",
                        f.name
                    )));
                }
                FeatureKind::Nominal => {
                    if f.categories.is_empty() {
                        return Err(Error::Validation(format!(
                            "nominal feature {:?} has no categories",
                            f.name
                        )));
                    }
                    let distinct: BTreeSet<_> = f.categories.iter().collect();
                    if distinct.len() != f.categories.len() {
                        return Err(Error::Validation(format!(
                            "nominal feature {:?} repeats a category",
                            f.name
                        )));
                    }
                }
                _ => {}
            }
        }
        if classes.len() < 2 {
            return Err(Error::Validation(format!(
                "at least 2 classes required, found {}",
                classes.len()
            )));
        }
        let distinct: BTreeSet<_> = classes.iter().collect();
        if distinct.len() != classes.len() {
            return Err(Error::Validation("duplicate class name".into()));
        }
        Ok(FeatureSpace { features, classes })
    }

    pub fn features(&self) -> &[FeatureDecl] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &FeatureDecl {
        &self.features[index]
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Feature count `n`.
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Class count `m`.
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Checks that `x` has length `n` and that nominal entries are valid
    /// category indices.
    pub fn check_vector<S: Scalar>(&self, x: &[S]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::InvalidInput(format!(
                "feature vector has {} entries, space has {}",
                x.len(),
                self.n_features()
            )));
        }
        for (f, &v) in self.features.iter().zip(x) {
            match f.kind {
                FeatureKind::Numeric if v.is_nan() => {
                    return Err(Error::InvalidInput(format!("feature {:?} is NaN", f.name)));
                }
                FeatureKind::Nominal => {
                    let ok = v >= S::zero()
                        && v.fract() == S::zero()
                        && v.to_usize().is_some_and(|i| i < f.categories.len());
                    if !ok {
                        return Err(Error::InvalidInput(format!(
                            "feature {:?} value {v} is not a category index",
                            f.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Split test of an internal node. The instance goes right when it holds.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate<S> {
    /// `value >= threshold`
    AtLeast(S),
    /// `value in categories` (category indices)
    InSet(BTreeSet<usize>),
}

impl<S: Scalar> Predicate<S> {
    pub fn holds(&self, value: S) -> bool {
        match self {
            Predicate::AtLeast(t) => value >= *t,
            Predicate::InSet(set) => value.to_usize().is_some_and(|c| set.contains(&c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<S> {
    Internal {
        feature: usize,
        predicate: Predicate<S>,
        /// Position of the child taken when the predicate fails.
        left: usize,
        /// Position of the child taken when the predicate holds.
        right: usize,
    },
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<S> {
    pub id: u32,
    pub kind: NodeKind<S>,
    /// Instances per class that reached this node.
    pub counts: Vec<u64>,
}

impl<S> TreeNode<S> {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One tree of an ensemble. Nodes live in a flat store; child links are
/// positions in that store, `id` is the identifier used in files and rule
/// origins.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel<S> {
    nodes: Vec<TreeNode<S>>,
    root: usize,
    pub weight: S,
    pub oob_accuracy: Option<S>,
    parents: Vec<Option<usize>>,
}

impl<S: Scalar> DecisionTreeModel<S> {
    /// Builds a tree from a node store and validates it against `space`.
    pub fn new(
        nodes: Vec<TreeNode<S>>,
        root: usize,
        weight: S,
        oob_accuracy: Option<S>,
        space: &FeatureSpace,
    ) -> Result<Self> {
        let parents = validate_tree(&nodes, root, space)?;
        if !(weight >= S::zero() && weight.is_finite()) {
            return Err(Error::Validation(format!("tree weight {weight} is not a non-negative real")));
        }
        if let Some(acc) = oob_accuracy {
            if !(acc >= S::zero() && acc <= S::one()) {
                return Err(Error::Validation(format!("oob_accuracy {acc} outside [0, 1]")));
            }
        }
        Ok(DecisionTreeModel {
            nodes,
            root,
            weight,
            oob_accuracy,
            parents,
        })
    }

    pub fn with_oob_accuracy(mut self, accuracy: Option<S>) -> Result<Self> {
        if let Some(acc) = accuracy {
            if !(acc >= S::zero() && acc <= S::one()) {
                return Err(Error::Validation(format!("oob_accuracy {acc} outside [0, 1]")));
            }
        }
        self.oob_accuracy = accuracy;
        Ok(self)
    }

    pub fn nodes(&self) -> &[TreeNode<S>] {
        &self.nodes
    }

    pub fn node(&self, pos: usize) -> &TreeNode<S> {
        &self.nodes[pos]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn parent(&self, pos: usize) -> Option<usize> {
        self.parents[pos]
    }

    /// Position of the leaf that `x` reaches.
    pub fn leaf_for(&self, x: &[S]) -> usize {
        let mut pos = self.root;
        loop {
            match &self.nodes[pos].kind {
                NodeKind::Leaf => return pos,
                NodeKind::Internal {
                    feature,
                    predicate,
                    left,
                    right,
                } => {
                    pos = if predicate.holds(x[*feature]) { *right } else { *left };
                }
            }
        }
    }

    /// Root-to-`pos` path as (internal node position, went right) pairs.
    pub fn path_to(&self, pos: usize) -> Vec<(usize, bool)> {
        let mut path = Vec::new();
        let mut child = pos;
        while let Some(parent) = self.parents[child] {
            let went_right = match &self.nodes[parent].kind {
                NodeKind::Internal { right, .. } => *right == child,
                NodeKind::Leaf => unreachable!("leaf as parent"),
            };
            path.push((parent, went_right));
            child = parent;
        }
        path.reverse();
        path
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_leaf())
            .map(|(i, _)| i)
    }

    /// Out-of-bag accuracy, or 1.0 when the source did not provide one.
    pub fn accuracy_or_one(&self) -> S {
        self.oob_accuracy.unwrap_or_else(S::one)
    }
}

fn validate_tree<S: Scalar>(
    nodes: &[TreeNode<S>],
    root: usize,
    space: &FeatureSpace,
) -> Result<Vec<Option<usize>>> {
    let m = space.n_classes();
    if root >= nodes.len() {
        return Err(Error::Validation("root is not a node of the tree".into()));
    }
    let mut ids = BTreeSet::new();
    for node in nodes {
        if !ids.insert(node.id) {
            return Err(Error::Validation(format!("duplicate node id {}", node.id)));
        }
    }
    let mut parents: Vec<Option<usize>> = vec![None; nodes.len()];
    for (pos, node) in nodes.iter().enumerate() {
        if node.counts.len() != m {
            return Err(Error::Validation(format!(
                "node {}: {} class counts for {m} classes",
                node.id,
                node.counts.len()
            )));
        }
        match &node.kind {
            NodeKind::Leaf => {
                if node.total() == 0 {
                    return Err(Error::Validation(format!("node {}: leaf holds no instances", node.id)));
                }
            }
            NodeKind::Internal {
                feature,
                predicate,
                left,
                right,
            } => {
                let decl = space.features().get(*feature).ok_or_else(|| {
                    Error::Validation(format!("node {}: undeclared feature {feature}", node.id))
                })?;
                match (predicate, decl.kind) {
                    (Predicate::AtLeast(t), FeatureKind::Numeric) if t.is_finite() => {}
                    (Predicate::InSet(set), FeatureKind::Nominal)
                        if !set.is_empty() && set.iter().all(|&c| c < decl.categories.len()) => {}
                    _ => {
                        return Err(Error::Validation(format!(
                            "node {}: predicate does not fit feature {:?}",
                            node.id, decl.name
                        )))
                    }
                }
                for &child in [left, right] {
                    if child >= nodes.len() {
                        return Err(Error::Validation(format!("node {}: dangling child", node.id)));
                    }
                    if child == root || parents[child].is_some() {
                        return Err(Error::Validation(format!(
                            "node {}: more than one parent",
                            nodes[child].id
                        )));
                    }
                    parents[child] = Some(pos);
                }
                if left == right {
                    return Err(Error::Validation(format!("node {}: both children equal", node.id)));
                }
                let sum: Vec<u64> = nodes[*left]
                    .counts
                    .iter()
                    .zip(&nodes[*right].counts)
                    .map(|(a, b)| a + b)
                    .collect();
                if nodes[*left].counts.len() == m && nodes[*right].counts.len() == m && sum != node.counts {
                    return Err(Error::Validation(format!(
                        "node {}: counts {:?} differ from children sum {:?}",
                        node.id, node.counts, sum
                    )));
                }
            }
        }
    }
    // Every non-root node has exactly one parent; reachability from the root
    // rules out cycles detached from it.
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![root];
    while let Some(pos) = stack.pop() {
        if std::mem::replace(&mut seen[pos], true) {
            return Err(Error::Validation(format!("node {}: cycle", nodes[pos].id)));
        }
        if let NodeKind::Internal { left, right, .. } = &nodes[pos].kind {
            stack.push(*left);
            stack.push(*right);
        }
    }
    if let Some(pos) = seen.iter().position(|s| !s) {
        return Err(Error::Validation(format!(
            "node {}: unreachable from root",
            nodes[pos].id
        )));
    }
    Ok(parents)
}

/// A weighted set of decision trees over one feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<S> {
    pub space: FeatureSpace,
    pub trees: Vec<DecisionTreeModel<S>>,
}

impl<S: Scalar> EnsembleModel<S> {
    pub fn new(space: FeatureSpace, trees: Vec<DecisionTreeModel<S>>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Validation("ensemble has no trees".into()));
        }
        Ok(EnsembleModel { space, trees })
    }

    pub fn n_classes(&self) -> usize {
        self.space.n_classes()
    }

    /// Weighted vote sum over all trees and its argmax.
    pub fn predict(&self, x: &[S]) -> (Vec<S>, usize) {
        let mut votes = vec![S::zero(); self.n_classes()];
        for tree in &self.trees {
            let leaf = tree.node(tree.leaf_for(x));
            for (v, &c) in votes.iter_mut().zip(&leaf.counts) {
                *v += tree.weight * S::from_count(c);
            }
        }
        let class = argmax(&votes);
        (votes, class)
    }

    pub fn predict_class(&self, x: &[S]) -> usize {
        self.predict(x).1
    }

    /// Conformance-checked prediction.
    pub fn predict_checked(&self, x: &[S]) -> Result<(Vec<S>, usize)> {
        self.space.check_vector(x)?;
        Ok(self.predict(x))
    }

    pub fn has_missing_oob(&self) -> bool {
        self.trees.iter().any(|t| t.oob_accuracy.is_none())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&ModelFile::from_model(self))
            .expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile<S> = serde_json::from_str(text).map_err(|e| Error::parse("model file", e))?;
        file.into_model()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a model file.
pub fn load_model<S: Scalar>(path: impl AsRef<Path>) -> Result<EnsembleModel<S>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EnsembleModel::from_json(&text)
}

// ---- on-disk schema ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureEntry {
    name: String,
    kind: FeatureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeTag {
    Internal,
    Leaf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry<S> {
    id: u32,
    kind: NodeTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right: Option<u32>,
    counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeEntry<S> {
    weight: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    oob_accuracy: Option<S>,
    nodes: Vec<NodeEntry<S>>,
    root: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile<S> {
    schema_version: u32,
    features: Vec<FeatureEntry>,
    classes: Vec<String>,
    trees: Vec<TreeEntry<S>>,
}

impl<S: Scalar> ModelFile<S> {
    fn from_model(model: &EnsembleModel<S>) -> Self {
        let space = &model.space;
        let features = space
            .features()
            .iter()
            .map(|f| FeatureEntry {
                name: f.name.clone(),
                kind: f.kind,
                categories: (!f.is_numeric()).then(|| f.categories.clone()),
            })
            .collect();
        let trees = model
            .trees
            .iter()
            .map(|tree| TreeEntry {
                weight: tree.weight,
                oob_accuracy: tree.oob_accuracy,
                root: tree.node(tree.root()).id,
                nodes: tree
                    .nodes()
                    .iter()
                    .map(|node| match &node.kind {
                        NodeKind::Leaf => NodeEntry {
                            id: node.id,
                            kind: NodeTag::Leaf,
                            feature: None,
                            threshold: None,
                            categories: None,
                            left: None,
                            right: None,
                            counts: node.counts.clone(),
                        },
                        NodeKind::Internal {
                            feature,
                            predicate,
                            left,
                            right,
                        } => {
                            let (threshold, categories) = match predicate {
                                Predicate::AtLeast(t) => (Some(*t), None),
                                Predicate::InSet(set) => (
                                    None,
                                    Some(
                                        set.iter()
                                            .map(|&c| space.feature(*feature).categories[c].clone())
                                            .collect(),
                                    ),
                                ),
                            };
                            NodeEntry {
                                id: node.id,
                                kind: NodeTag::Internal,
                                feature: Some(*feature),
                                threshold,
                                categories,
                                left: Some(tree.node(*left).id),
                                right: Some(tree.node(*right).id),
                                counts: node.counts.clone(),
                            }
                        }
                    })
                    .collect(),
            })
            .collect();
        ModelFile {
            schema_version: SCHEMA_VERSION,
            features,
            classes: space.classes().to_vec(),
            trees,
        }
    }

    fn into_model(self) -> Result<EnsembleModel<S>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let features = self
            .features
            .into_iter()
            .map(|f| FeatureDecl {
                name: f.name,
                kind: f.kind,
                categories: f.categories.unwrap_or_default(),
            })
            .collect();
        let space = FeatureSpace::new(features, self.classes)?;
        let mut trees = Vec::with_capacity(self.trees.len());
        for (t, entry) in self.trees.into_iter().enumerate() {
            let tree = tree_from_entry(entry, &space)
                .map_err(|e| match e {
                    Error::Validation(msg) => Error::Validation(format!("tree {t}: {msg}")),
                    other => other,
                })?;
            trees.push(tree);
        }
        EnsembleModel::new(space, trees)
    }
}

fn tree_from_entry<S: Scalar>(entry: TreeEntry<S>, space: &FeatureSpace) -> Result<DecisionTreeModel<S>> {
    let positions: HashMap<u32, usize> = entry
        .nodes
        .iter()
        .enumerate()
        .map(|(pos, n)| (n.id, pos))
        .collect();
    if positions.len() != entry.nodes.len() {
        return Err(Error::Validation("duplicate node id".into()));
    }
    let lookup = |owner: u32, id: Option<u32>, side: &str| -> Result<usize> {
        let id = id.ok_or_else(|| Error::Validation(format!("node {owner}: missing {side} child")))?;
        positions
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Validation(format!("node {owner}: unknown {side} child {id}")))
    };
    let mut nodes = Vec::with_capacity(entry.nodes.len());
    for n in &entry.nodes {
        let kind = match n.kind {
            NodeTag::Leaf => {
                if n.feature.is_some() || n.left.is_some() || n.right.is_some() {
                    return Err(Error::Validation(format!("node {}: leaf carries a split", n.id)));
                }
                NodeKind::Leaf
            }
            NodeTag::Internal => {
                let feature = n
                    .feature
                    .ok_or_else(|| Error::Validation(format!("node {}: missing feature", n.id)))?;
                let decl = space.features().get(feature).ok_or_else(|| {
                    Error::Validation(format!("node {}: undeclared feature {feature}", n.id))
                })?;
                let predicate = match (&n.threshold, &n.categories) {
                    (Some(t), None) => Predicate::AtLeast(*t),
                    (None, Some(names)) => {
                        let mut set = BTreeSet::new();
                        for name in names {
                            let c = decl.categories.iter().position(|c| c == name).ok_or_else(|| {
                                Error::Validation(format!(
                                    "node {}: category {name:?} not declared for {:?}",
                                    n.id, decl.name
                                ))
                            })?;
                            set.insert(c);
                        }
                        Predicate::InSet(set)
                    }
                    _ => {
                        return Err(Error::Validation(format!(
                            "node {}: needs exactly one of threshold or categories",
                            n.id
                        )))
                    }
                };
                NodeKind::Internal {
                    feature,
                    predicate,
                    left: lookup(n.id, n.left, "left")?,
                    right: lookup(n.id, n.right, "right")?,
                }
            }
        };
        nodes.push(TreeNode {
            id: n.id,
            kind,
            counts: n.counts.clone(),
        });
    }
    let root = *positions
        .get(&entry.root)
        .ok_or_else(|| Error::Validation(format!("root {} is not a node", entry.root)))?;
    DecisionTreeModel::new(nodes, root, entry.weight, entry.oob_accuracy, space)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn example_tree_loads_with_expected_leaves() {
        let model = example_model();
        let tree = &model.trees[0];
        let leaves: Vec<_> = tree.leaves().map(|p| tree.node(p).counts.clone()).collect();
        assert_eq!(leaves, vec![vec![0, 6], vec![2, 1], vec![3, 1]]);
    }

    #[test]
    fn example_tree_predictions() {
        let model = example_model();
        assert_eq!(model.predict(&[1.0, 9.0]), (vec![0.0, 6.0], 1));
        assert_eq!(model.predict(&[6.0, 3.0]), (vec![3.0, 1.0], 0));
        assert_eq!(model.predict(&[6.0, 1.0]), (vec![2.0, 1.0], 0));
    }

    #[test]
    fn single_leaf_tree_predicts_constant() {
        let text = r#"{"schema_version":1,"features":[{"name":"a","kind":"numeric"}],
            "classes":["x","y"],"trees":[{"weight":1,"root":7,"nodes":[{"id":7,"kind":"leaf","counts":[1,0]}]}]}"#;
        let model: EnsembleModel<f64> = EnsembleModel::from_json(text).unwrap();
        for v in [-1e9, 0.0, 3.5] {
            assert_eq!(model.predict_class(&[v]), 0);
        }
    }

    #[test]
    fn counts_mismatch_is_rejected() {
        let bad = example_tree_json().replace("[5, 8]", "[5, 9]");
        let err = EnsembleModel::<f64>::from_json(&bad).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("node 0")), "{err}");
    }

    #[test]
    fn structural_violations_are_rejected() {
        let two_parents = example_tree_json().replace(r#""left": 3, "right": 4"#, r#""left": 1, "right": 4"#);
        assert!(EnsembleModel::<f64>::from_json(&two_parents).is_err());
        let unknown_feature = example_tree_json().replace(r#""feature": 1"#, r#""feature": 5"#);
        assert!(EnsembleModel::<f64>::from_json(&unknown_feature).is_err());
        let bad_version = example_tree_json().replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
        assert!(EnsembleModel::<f64>::from_json(&bad_version).is_err());
        assert!(matches!(
            EnsembleModel::<f64>::from_json("{not json"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn doubling_trees_doubles_votes() {
        let mut model = example_model();
        model.trees.push(model.trees[0].clone());
        assert_eq!(model.predict(&[1.0, 0.0]), (vec![0.0, 12.0], 1));
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let model = example_model();
        let again: EnsembleModel<f64> = EnsembleModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, again);
        assert_eq!(model.fingerprint(), again.fingerprint());
    }

    #[test]
    fn nominal_predicates_round_trip() {
        let text = r#"{"schema_version":1,
            "features":[{"name":"colour","kind":"nominal","categories":["red","green","blue"]}],
            "classes":["no","yes"],
            "trees":[{"weight":0.5,"oob_accuracy":0.75,"root":0,"nodes":[
              {"id":0,"kind":"internal","feature":0,"categories":["blue","red"],"left":1,"right":2,"counts":[3,3]},
              {"id":1,"kind":"leaf","counts":[3,0]},
              {"id":2,"kind":"leaf","counts":[0,3]}]}]}"#;
        let model: EnsembleModel<f32> = EnsembleModel::from_json(text).unwrap();
        assert_eq!(model.predict_class(&[0.0]), 1);
        assert_eq!(model.predict_class(&[1.0]), 0);
        let again: EnsembleModel<f32> = EnsembleModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn feature_space_invariants() {
        assert!(FeatureSpace::new(vec![FeatureDecl::numeric("a")], vec!["only".into()]).is_err());
        assert!(FeatureSpace::new(
            vec![FeatureDecl::numeric("a"), FeatureDecl::numeric("a")],
            vec!["x".into(), "y".into()]
        )
        .is_err());
        assert!(FeatureSpace::new(
            vec![FeatureDecl::nominal("c", Vec::<String>::new())],
            vec!["x".into(), "y".into()]
        )
        .is_err());
    }
}
