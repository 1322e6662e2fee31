//! Global explanations for tree-ensemble classifiers.
//!
//! The pipeline turns every root-to-leaf branch of an ensemble into a
//! decision rule ([`rules`]), shrinks that rule set with a four-stage
//! parameterised simplification ([`simplify`]), scores the result by
//! fidelity and size ([`explain`]), searches the simplification parameters
//! with particle swarm optimisation ([`optimize`]) and condenses each class
//! into a single profile rule via weighted MAX-SAT ([`profile`]).
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod explain;
pub mod model;
pub mod optimize;
pub mod profile;
pub mod rules;
pub mod scalar;
pub mod simplify;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model = model::EnsembleModel<f64>;
pub type Tree = model::DecisionTreeModel<f64>;
pub type Data = dataset::Dataset<f64>;
pub type Rule = rules::DecisionRule<f64>;
pub type Rules = rules::RuleSet<f64>;
pub type Explanation = simplify::GroupedRuleSet<f64>;
pub type Profile = profile::ClassProfile<f64>;
