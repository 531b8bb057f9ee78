//! Crow search.
//!
//! Each crow keeps a position and a memory (its best position so far). Every
//! iteration crow `i` picks a random crow `j`. If `j` is unaware
//! (`r >= awareness_probability`) crow `i` flies toward `j`'s memory:
//!
//! ```text
//! x_i <- x_i + r * fl * (m_j - x_i),   r ~ U[0, 1)
//! ```
//!
//! otherwise it lands on a uniformly random point. Moves are clamped to the
//! bounds and a crow's memory is replaced only by a strictly better cost.
//!
//! Per-step draw order on crow `i`'s stream: `j`, the awareness draw, then
//! either the step fraction `r` or one uniform per dimension.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objective::PlanEvaluator;
use crate::search::{
    evaluate_batch, finish_run, individual_streams, Algorithm, ConvergenceHistory, Objective,
    OptimizerRun, PlanObjective, PlanSpace, SearchResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsaConfig {
    pub n_crows: usize,
    pub max_iter: usize,
    pub flight_length: f64,
    pub awareness_probability: f64,
    pub seed: u64,
    /// Evaluate each step's candidates on the rayon pool.
    pub parallel: bool,
}

impl Default for CsaConfig {
    fn default() -> Self {
        Self {
            n_crows: 20,
            max_iter: 100,
            flight_length: 2.0,
            awareness_probability: 0.1,
            seed: 1,
            parallel: true,
        }
    }
}

impl CsaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_crows < 2 {
            return Err(format!("n_crows must be at least 2, got {}", self.n_crows));
        }
        if !(self.flight_length.is_finite() && self.flight_length >= 0.0) {
            return Err(format!("flight_length must be >= 0, got {}", self.flight_length));
        }
        if !(0.0..=1.0).contains(&self.awareness_probability) {
            return Err(format!(
                "awareness_probability must be in [0, 1], got {}",
                self.awareness_probability
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrowState {
    pub position: Vec<f64>,
    pub memory: Vec<f64>,
    pub memory_cost: f64,
}

/// Population plus the RNG streams that drive it.
#[derive(Debug, Clone)]
pub struct Flock {
    pub crows: Vec<CrowState>,
    streams: Vec<ChaCha8Rng>,
}

impl Flock {
    /// Index of the crow holding the best memory (lowest index on ties).
    pub fn best(&self) -> usize {
        self.crows
            .iter()
            .enumerate()
            .fold(0, |best, (i, c)| if c.memory_cost < self.crows[best].memory_cost { i } else { best })
    }

    pub fn best_cost(&self) -> f64 {
        self.crows[self.best()].memory_cost
    }
}

/// Fly from `position` toward `target`: `x + r * fl * (target - x)`.
pub fn follow_move(position: &[f64], target: &[f64], flight_length: f64, r: f64) -> Vec<f64> {
    position
        .iter()
        .zip(target)
        .map(|(x, m)| x + r * flight_length * (m - x))
        .collect()
}

pub fn init_population<O: Objective + ?Sized>(config: &CsaConfig, objective: &O) -> Flock {
    let bounds = objective.bounds();
    let mut streams = individual_streams(config.seed, config.n_crows);
    let positions: Vec<Vec<f64>> = streams.iter_mut().map(|rng| bounds.sample(rng)).collect();
    let costs = evaluate_batch(objective, &positions, config.parallel);
    let crows = positions
        .into_iter()
        .zip(costs)
        .map(|(p, c)| CrowState { memory: p.clone(), position: p, memory_cost: c })
        .collect();
    Flock { crows, streams }
}

/// Proposes the next position of every crow, reading memories as they were
/// at the start of the step.
fn propose<O: Objective + ?Sized>(flock: &mut Flock, config: &CsaConfig, objective: &O) -> Vec<Vec<f64>> {
    let bounds = objective.bounds();
    let n = flock.crows.len();
    let crows = &flock.crows;
    flock
        .streams
        .iter_mut()
        .zip(crows)
        .map(|(rng, crow)| {
            let j = rng.random_range(0..n);
            let awareness: f64 = rng.random();
            let mut next = if awareness >= config.awareness_probability {
                let r: f64 = rng.random();
                follow_move(&crow.position, &crows[j].memory, config.flight_length, r)
            } else {
                bounds.sample(rng)
            };
            bounds.repair(&mut next);
            next
        })
        .collect()
}

/// One synchronous iteration over the whole flock.
pub fn csa_step<O: Objective + ?Sized>(flock: &mut Flock, config: &CsaConfig, objective: &O) {
    let proposals = propose(flock, config, objective);
    let costs = evaluate_batch(objective, &proposals, config.parallel);
    for ((crow, next), cost) in flock.crows.iter_mut().zip(proposals).zip(costs) {
        if cost < crow.memory_cost {
            crow.memory.clone_from(&next);
            crow.memory_cost = cost;
        }
        crow.position = next;
    }
}

/// Runs `max_iter` steps and returns the best memory.
pub fn minimize<O: Objective + ?Sized>(config: &CsaConfig, objective: &O) -> Result<SearchResult, String> {
    config.validate()?;
    let mut flock = init_population(config, objective);
    let mut history = ConvergenceHistory::default();
    for _ in 0..config.max_iter {
        csa_step(&mut flock, config, objective);
        history.push(flock.best_cost());
    }
    let best = &flock.crows[flock.best()];
    Ok(SearchResult {
        best_position: best.memory.clone(),
        best_cost: best.memory_cost,
        history,
        evaluations: config.n_crows * (config.max_iter + 1),
    })
}

/// Crow search over capacitor plans.
pub fn run_csa(
    config: &CsaConfig,
    evaluator: &PlanEvaluator,
    space: &PlanSpace,
) -> Result<OptimizerRun, String> {
    let objective = PlanObjective::new(evaluator, space.clone())?;
    let result = minimize(config, &objective)?;
    Ok(finish_run(Algorithm::Csa, evaluator, space, result))
}
