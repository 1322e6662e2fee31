//! Class profiles: one merged rule per class, built from the maximum-weight
//! simultaneously satisfiable subset of a group's conjuncts.
//!
//! Every conjunct constrains a single feature, so conjuncts on different
//! features never conflict and weighted MAX-SAT splits into one independent
//! problem per feature. Each of those is solved exactly: a sweep over
//! interval endpoints for numeric features, a count per category for nominal
//! ones.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureSpace;
use crate::rules::{merge_conjuncts, Conjunct, ConjunctEntry, Constraint};
use crate::scalar::Scalar;
use crate::simplify::{GroupedRuleSet, RuleGroup};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedConjunct<S> {
    pub conjunct: Conjunct<S>,
    pub weight: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSatSolution<S> {
    /// Indices into the input, ascending.
    pub chosen: Vec<usize>,
    /// Value per feature satisfying every chosen conjunct; `None` for
    /// features no conjunct mentions.
    pub witness: Vec<Option<S>>,
    pub weight: S,
}

/// Weighted MAX-SAT over single-feature conjuncts.
pub trait MaxSatSolver<S> {
    fn solve(&self, conjuncts: &[WeightedConjunct<S>], n_features: usize) -> Result<MaxSatSolution<S>>;
}

/// Exact per-feature sweep. Ties go to the smallest witness value or the
/// lowest category index.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSweep;

impl<S: Scalar> MaxSatSolver<S> for ExactSweep {
    fn solve(&self, conjuncts: &[WeightedConjunct<S>], n_features: usize) -> Result<MaxSatSolution<S>> {
        let mut by_feature: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, wc) in conjuncts.iter().enumerate() {
            if wc.conjunct.feature >= n_features {
                return Err(Error::InvalidInput(format!(
                    "conjunct on feature {} beyond {n_features} features",
                    wc.conjunct.feature
                )));
            }
            if !(wc.weight >= S::zero()) {
                return Err(Error::InvalidInput("negative conjunct weight".into()));
            }
            by_feature.entry(wc.conjunct.feature).or_default().push(i);
        }
        let mut witness = vec![None; n_features];
        let mut chosen = Vec::new();
        let mut weight = S::zero();
        for (feature, members) in by_feature {
            let value = best_point(conjuncts, &members)?;
            witness[feature] = Some(value);
            for i in members {
                if conjuncts[i].conjunct.contains(value) {
                    chosen.push(i);
                    weight += conjuncts[i].weight;
                }
            }
        }
        chosen.sort_unstable();
        Ok(MaxSatSolution {
            chosen,
            witness,
            weight,
        })
    }
}

/// Smallest value of maximum covering weight among conjuncts on one feature.
fn best_point<S: Scalar>(conjuncts: &[WeightedConjunct<S>], members: &[usize]) -> Result<S> {
    let numeric = matches!(conjuncts[members[0]].conjunct.constraint, Constraint::Interval { .. });
    let mut candidates: Vec<S> = Vec::new();
    if numeric {
        // Coverage is piecewise constant and only rises at a lower bound, so
        // every optimum is attained at some finite lower bound or, for
        // intervals open to the left, anywhere below all finite endpoints.
        let mut lowest_end: Option<S> = None;
        let mut open_left = false;
        for &i in members {
            match &conjuncts[i].conjunct.constraint {
                Constraint::Interval { lo, hi } => {
                    for e in [*lo, *hi] {
                        if e.is_finite() {
                            lowest_end = Some(lowest_end.map_or(e, |l: S| l.min(e)));
                        }
                    }
                    if lo.is_finite() {
                        candidates.push(*lo);
                    } else {
                        open_left = true;
                    }
                }
                Constraint::Categories(_) => {
                    return Err(Error::InvalidInput("feature mixes interval and set conjuncts".into()))
                }
            }
        }
        if open_left {
            candidates.push(lowest_end.map_or(S::zero(), |l| l - S::one()));
        }
    } else {
        for &i in members {
            match &conjuncts[i].conjunct.constraint {
                Constraint::Categories(set) => {
                    candidates.extend(set.iter().map(|&c| S::from_usize(c).expect("category index")))
                }
                Constraint::Interval { .. } => {
                    return Err(Error::InvalidInput("feature mixes interval and set conjuncts".into()))
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    candidates.dedup();
    let mut best: Option<(S, S)> = None;
    for v in candidates {
        let w: S = members
            .iter()
            .filter(|&&i| conjuncts[i].conjunct.contains(v))
            .map(|&i| conjuncts[i].weight)
            .sum();
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((v, w));
        }
    }
    best.map(|(v, _)| v)
        .ok_or_else(|| Error::InvalidInput("conjunct with an empty region".into()))
}

/// [`ExactSweep`] as a free function.
pub fn max_sat<S: Scalar>(conjuncts: &[WeightedConjunct<S>], n_features: usize) -> Result<MaxSatSolution<S>> {
    ExactSweep.solve(conjuncts, n_features)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile<S> {
    pub class: usize,
    /// One conjunct per feature, ascending feature order.
    pub conjuncts: Vec<Conjunct<S>>,
    pub satisfied_weight: S,
    pub total_weight: S,
}

impl<S: Scalar> ClassProfile<S> {
    pub fn text(&self, space: &FeatureSpace) -> Vec<String> {
        self.conjuncts.iter().map(|c| c.display(space).to_string()).collect()
    }
}

/// Profiles one group: every rule's weight is attached to each of its
/// conjuncts, the max-weight satisfiable subset is kept and merged.
pub fn profile_group<S: Scalar>(
    group: &RuleGroup<S>,
    space: &FeatureSpace,
    solver: &dyn MaxSatSolver<S>,
) -> Result<ClassProfile<S>> {
    if group.rules.is_empty() {
        return Err(Error::InvalidInput("cannot profile an empty group".into()));
    }
    let weighted: Vec<WeightedConjunct<S>> = group
        .rules
        .iter()
        .flat_map(|r| {
            r.conjuncts.iter().map(|c| WeightedConjunct {
                conjunct: c.clone(),
                weight: r.weight,
            })
        })
        .collect();
    let solution = solver.solve(&weighted, space.n_features())?;
    let subset: Vec<Conjunct<S>> = solution.chosen.iter().map(|&i| weighted[i].conjunct.clone()).collect();
    let conjuncts = merge_conjuncts(&subset).map_err(|e| {
        Error::InvalidInput(format!("solver returned an unsatisfiable subset on feature {}", e.feature))
    })?;
    Ok(ClassProfile {
        class: group.signature.class(),
        conjuncts,
        satisfied_weight: solution.weight,
        total_weight: weighted.iter().map(|w| w.weight).sum(),
    })
}

/// One profile per class, in class order. A class owning several groups is
/// profiled from its heaviest group (total rule weight, earlier group on ties).
pub fn build_profile<S: Scalar>(expl: &GroupedRuleSet<S>) -> Result<Vec<ClassProfile<S>>> {
    build_profile_with(expl, &ExactSweep)
}

pub fn build_profile_with<S: Scalar>(
    expl: &GroupedRuleSet<S>,
    solver: &dyn MaxSatSolver<S>,
) -> Result<Vec<ClassProfile<S>>> {
    let m = expl.space.n_classes();
    let mut heaviest: Vec<Option<&RuleGroup<S>>> = vec![None; m];
    for group in expl.groups.iter().filter(|g| !g.rules.is_empty()) {
        let slot = &mut heaviest[group.signature.class()];
        if slot.is_none_or(|g| group.total_weight() > g.total_weight()) {
            *slot = Some(group);
        }
    }
    heaviest
        .into_iter()
        .enumerate()
        .map(|(class, group)| {
            let group = group.ok_or_else(|| {
                Error::Infeasible(format!("class {:?} has no group to profile", expl.space.classes()[class]))
            })?;
            profile_group(group, &expl.space, solver)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ProfileEntry<S> {
    class: String,
    conjuncts: Vec<ConjunctEntry<S>>,
    satisfied_weight: S,
    total_weight: S,
}

pub fn profiles_to_json<S: Scalar>(profiles: &[ClassProfile<S>], space: &FeatureSpace) -> String {
    let entries: Vec<ProfileEntry<S>> = profiles
        .iter()
        .map(|p| ProfileEntry {
            class: space.classes()[p.class].clone(),
            conjuncts: p.conjuncts.iter().map(ConjunctEntry::from_conjunct).collect(),
            satisfied_weight: p.satisfied_weight,
            total_weight: p.total_weight,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&entries).expect("profile serializes");
    text.push('\n');
    text
}

pub fn profiles_from_json<S: Scalar>(text: &str, space: &FeatureSpace) -> Result<Vec<ClassProfile<S>>> {
    let entries: Vec<ProfileEntry<S>> = serde_json::from_str(text).map_err(|e| Error::parse("profile file", e))?;
    entries
        .into_iter()
        .map(|e| {
            let class = space
                .class_index(&e.class)
                .ok_or_else(|| Error::parse("profile file", format!("unknown class {:?}", e.class)))?;
            let conjuncts = e
                .conjuncts
                .into_iter()
                .map(|c| c.into_conjunct(space))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|msg| Error::parse("profile file", msg))?;
            Ok(ClassProfile {
                class,
                conjuncts,
                satisfied_weight: e.satisfied_weight,
                total_weight: e.total_weight,
            })
        })
        .collect()
}

/// Side-by-side text with one column per class.
pub fn profiles_table<S: Scalar>(profiles: &[ClassProfile<S>], space: &FeatureSpace) -> String {
    let columns: Vec<(String, Vec<String>)> = profiles
        .iter()
        .map(|p| (space.classes()[p.class].clone(), p.text(space)))
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .map(|(h, lines)| lines.iter().map(|l| l.chars().count()).chain([h.chars().count()]).max().unwrap_or(0))
        .collect();
    let height = columns.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    let join = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    out.push_str(&join(columns.iter().map(|(h, _)| h.clone()).collect()));
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for row in 0..height {
        out.push_str(&join(
            columns.iter().map(|(_, lines)| lines.get(row).cloned().unwrap_or_default()).collect(),
        ));
        out.push('\n');
    }
    out
}

/// Colour of pixels the profile leaves unconstrained (light blue).
pub const BACKGROUND: [u8; 3] = [173, 216, 230];

/// RGB raster of a profile over a `width × height` grid of numeric features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl GridImage {
    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        for px in &self.pixels {
            out.write_all(px)?;
        }
        Ok(())
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_ppm(&mut buf).expect("write to vec");
        buf
    }
}

/// Paints every constrained feature grey at the median of its interval;
/// unbounded sides are clamped to the feature's observed range. Values are
/// rounded and clamped to 0..=255.
pub fn render_profile_grid<S: Scalar>(
    profile: &ClassProfile<S>,
    space: &FeatureSpace,
    ranges: &[Option<(S, S)>],
    width: usize,
    height: usize,
) -> Result<GridImage> {
    if width * height != space.n_features() || width == 0 {
        return Err(Error::InvalidInput(format!(
            "{} features do not form a {width}x{height} grid",
            space.n_features()
        )));
    }
    if space.features().iter().any(|f| !f.is_numeric()) {
        return Err(Error::InvalidInput("grid rendering needs numeric features".into()));
    }
    let mut pixels = vec![BACKGROUND; width * height];
    for c in &profile.conjuncts {
        if let Constraint::Interval { lo, hi } = c.constraint {
            let (min, max) = ranges.get(c.feature).copied().flatten().unwrap_or((lo, hi));
            let lo = if lo.is_finite() { lo } else { min.min(hi) };
            let hi = if hi.is_finite() { hi } else { max.max(lo) };
            let mid = ((lo + hi) / S::lit(2.0)).as_f64();
            let v = if mid.is_finite() { mid.round().clamp(0.0, 255.0) as u8 } else { 0 };
            pixels[c.feature] = [v, v, v];
        }
    }
    Ok(GridImage {
        width,
        height,
        pixels,
    })
}
