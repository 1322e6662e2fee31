//! Global-best particle swarm optimisation with linearly decreasing inertia.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia_start: f64,
    pub inertia_end: f64,
    /// Cognitive coefficient c1.
    pub cognitive: f64,
    /// Social coefficient c2.
    pub social: f64,
    /// Per-dimension search box.
    pub bounds: Vec<(f64, f64)>,
    /// Dimensions rounded to the nearest integer before evaluation.
    pub integer: Vec<bool>,
    /// Maximum speed per dimension as a fraction of that dimension's range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl PsoConfig {
    /// 20 particles, 20 iterations, inertia 0.9 -> 0.4, c1 = c2 = 2,
    /// velocity clamp 0.5 of the range, seed 0, all dimensions continuous.
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        let dims = bounds.len();
        PsoConfig {
            particles: 20,
            iterations: 20,
            inertia_start: 0.9,
            inertia_end: 0.4,
            cognitive: 2.0,
            social: 2.0,
            bounds,
            integer: vec![false; dims],
            velocity_clamp: 0.5,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_swarm(mut self, particles: usize, iterations: usize) -> Self {
        self.particles = particles;
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.particles == 0 || self.iterations == 0 {
            return bad("particle and iteration counts must be >= 1".into());
        }
        if !(self.inertia_start >= self.inertia_end && self.inertia_end > 0.0) {
            return bad(format!(
                "inertia must satisfy start >= end > 0, got {} -> {}",
                self.inertia_start, self.inertia_end
            ));
        }
        if self.bounds.is_empty() || self.integer.len() != self.bounds.len() {
            return bad("bounds and integer flags must be non-empty and equally long".into());
        }
        for (d, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return bad(format!("dimension {d}: bounds ({lo}, {hi}) need lo < hi"));
            }
            if self.integer[d] && lo.ceil() > hi.floor() {
                return bad(format!("dimension {d}: no integer inside ({lo}, {hi})"));
            }
        }
        if !(self.velocity_clamp > 0.0) || self.cognitive < 0.0 || self.social < 0.0 {
            return bad("velocity clamp must be > 0 and coefficients >= 0".into());
        }
        Ok(())
    }

    fn inertia(&self, iteration: usize) -> f64 {
        if self.iterations <= 1 {
            return self.inertia_start;
        }
        let t = iteration as f64 / (self.iterations - 1) as f64;
        self.inertia_start - (self.inertia_start - self.inertia_end) * t
    }

    /// The point handed to the fitness function for a particle position.
    pub fn evaluation_point(&self, position: &[f64]) -> Vec<f64> {
        position
            .iter()
            .zip(&self.bounds)
            .zip(&self.integer)
            .map(|((&x, &(lo, hi)), &int)| {
                if int {
                    x.round().clamp(lo.ceil(), hi.floor())
                } else {
                    x.clamp(lo, hi)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub gbest_params: Vec<f64>,
    pub gbest_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best_params: Vec<f64>,
    pub best_score: f64,
    pub trace: Vec<TraceEntry>,
}

fn sanitize(score: f64) -> f64 {
    if score.is_nan() {
        f64::NEG_INFINITY
    } else {
        score
    }
}

/// `Greater` when (a_score, a_params) beats (b_score, b_params): higher
/// score, then lexicographically smaller parameters.
fn better(a_score: f64, a_params: &[f64], b_score: f64, b_params: &[f64]) -> bool {
    match a_score.partial_cmp(&b_score).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            for (x, y) in a_params.iter().zip(b_params) {
                match x.total_cmp(y) {
                    Ordering::Less => return true,
                    Ordering::Greater => return false,
                    Ordering::Equal => {}
                }
            }
            false
        }
    }
}

/// Maximises `fitness` over the configured box.
///
/// Iteration 0 evaluates the random initial swarm; each later iteration moves
/// every particle once. Fitness calls within an iteration run in parallel and
/// are merged in particle order, so results depend only on the seed.
pub fn pso_optimize<F>(fitness: F, config: &PsoConfig) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    config.validate()?;
    let dims = config.bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax: Vec<f64> = config
        .bounds
        .iter()
        .map(|(lo, hi)| config.velocity_clamp * (hi - lo))
        .collect();

    let mut positions: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| config.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| vmax.iter().map(|&v| rng.random_range(-v..=v)).collect())
        .collect();

    let evaluate = |positions: &[Vec<f64>]| -> Result<Vec<(Vec<f64>, f64)>> {
        positions
            .par_iter()
            .map(|p| {
                let point = config.evaluation_point(p);
                let score = fitness(&point).map_err(|e| Error::Fitness {
                    params: point.clone(),
                    source: Box::new(e),
                })?;
                Ok((point, sanitize(score)))
            })
            .collect()
    };

    let scored = evaluate(&positions)?;
    let mut pbest_pos = positions.clone();
    let mut pbest_point: Vec<Vec<f64>> = scored.iter().map(|(p, _)| p.clone()).collect();
    let mut pbest_score: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();

    let mut g = 0;
    for i in 1..config.particles {
        if better(pbest_score[i], &pbest_point[i], pbest_score[g], &pbest_point[g]) {
            g = i;
        }
    }
    let mut gbest_pos = pbest_pos[g].clone();
    let mut gbest_point = pbest_point[g].clone();
    let mut gbest_score = pbest_score[g];
    let mut trace = vec![TraceEntry {
        iteration: 0,
        gbest_params: gbest_point.clone(),
        gbest_score,
    }];

    for iteration in 1..config.iterations {
        let w = config.inertia(iteration);
        for (p, (x, v)) in positions.iter_mut().zip(velocities.iter_mut()).enumerate() {
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let (lo, hi) = config.bounds[d];
                let speed = w * v[d]
                    + config.cognitive * r1 * (pbest_pos[p][d] - x[d])
                    + config.social * r2 * (gbest_pos[d] - x[d]);
                v[d] = speed.clamp(-vmax[d], vmax[d]);
                x[d] = (x[d] + v[d]).clamp(lo, hi);
            }
        }
        let scored = evaluate(&positions)?;
        for (p, (point, score)) in scored.into_iter().enumerate() {
            if score > pbest_score[p] {
                pbest_score[p] = score;
                pbest_pos[p] = positions[p].clone();
                pbest_point[p] = point;
            }
        }
        for p in 0..config.particles {
            if better(pbest_score[p], &pbest_point[p], gbest_score, &gbest_point) {
                gbest_score = pbest_score[p];
                gbest_pos = pbest_pos[p].clone();
                gbest_point = pbest_point[p].clone();
            }
        }
        trace.push(TraceEntry {
            iteration,
            gbest_params: gbest_point.clone(),
            gbest_score,
        });
    }

    Ok(PsoResult {
        best_params: gbest_point,
        best_score: gbest_score,
        trace,
    })
}
