//! Particle swarm baseline over the same plan encoding as crow search.
//!
//! ```text
//! v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x),  clamped to +-v_max
//! x <- x + v,                                         clamped to bounds
//! ```
//!
//! `r1` and `r2` are drawn per dimension from the particle's own stream
//! (all of `r1`, then all of `r2`). Velocities start at zero. The global
//! best used in a step is the one known at the start of that step.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objective::PlanEvaluator;
use crate::search::{
    evaluate_batch, finish_run, individual_streams, Algorithm, ConvergenceHistory, Objective,
    OptimizerRun, PlanObjective, PlanSpace, SearchResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub n_particles: usize,
    pub max_iter: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-dimension velocity limit as a fraction of that dimension's range.
    pub v_max_fraction: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            n_particles: 20,
            max_iter: 100,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            v_max_fraction: 0.2,
            seed: 1,
            parallel: true,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_particles < 2 {
            return Err(format!("n_particles must be at least 2, got {}", self.n_particles));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("v_max_fraction", self.v_max_fraction),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest: Vec<f64>,
    pub pbest_cost: f64,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<ParticleState>,
    pub gbest: Vec<f64>,
    pub gbest_cost: f64,
    v_max: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
}

/// Velocity update for one particle with explicit random factors.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    position: &[f64],
    velocity: &[f64],
    pbest: &[f64],
    gbest: &[f64],
    config: &PsoConfig,
    r1: &[f64],
    r2: &[f64],
    v_max: &[f64],
) -> Vec<f64> {
    (0..position.len())
        .map(|d| {
            let v = config.inertia * velocity[d]
                + config.cognitive * r1[d] * (pbest[d] - position[d])
                + config.social * r2[d] * (gbest[d] - position[d]);
            v.clamp(-v_max[d], v_max[d])
        })
        .collect()
}

fn argmin(costs: impl Iterator<Item = f64>) -> usize {
    costs
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, c)| if c < best.1 { (i, c) } else { best })
        .0
}

pub fn init_swarm<O: Objective + ?Sized>(config: &PsoConfig, objective: &O) -> Swarm {
    let bounds = objective.bounds();
    let mut streams = individual_streams(config.seed, config.n_particles);
    let positions: Vec<Vec<f64>> = streams.iter_mut().map(|rng| bounds.sample(rng)).collect();
    let costs = evaluate_batch(objective, &positions, config.parallel);
    let particles: Vec<ParticleState> = positions
        .into_iter()
        .zip(costs)
        .map(|(p, c)| ParticleState {
            velocity: vec![0.0; p.len()],
            pbest: p.clone(),
            position: p,
            pbest_cost: c,
        })
        .collect();
    let g = argmin(particles.iter().map(|p| p.pbest_cost));
    let v_max = (0..bounds.dim()).map(|d| config.v_max_fraction * bounds.range(d)).collect();
    Swarm {
        gbest: particles[g].pbest.clone(),
        gbest_cost: particles[g].pbest_cost,
        particles,
        v_max,
        streams,
    }
}

/// One synchronous swarm update.
pub fn pso_step<O: Objective + ?Sized>(swarm: &mut Swarm, config: &PsoConfig, objective: &O) {
    let bounds = objective.bounds();
    let dim = bounds.dim();
    let (gbest, v_max) = (&swarm.gbest, &swarm.v_max);
    for (p, rng) in swarm.particles.iter_mut().zip(swarm.streams.iter_mut()) {
        let r1: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        let r2: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        p.velocity = velocity_update(&p.position, &p.velocity, &p.pbest, gbest, config, &r1, &r2, v_max);
        for (x, v) in p.position.iter_mut().zip(&p.velocity) {
            *x += v;
        }
        bounds.repair(&mut p.position);
    }
    let positions: Vec<Vec<f64>> = swarm.particles.iter().map(|p| p.position.clone()).collect();
    let costs = evaluate_batch(objective, &positions, config.parallel);
    for (p, c) in swarm.particles.iter_mut().zip(costs) {
        if c < p.pbest_cost {
            p.pbest.clone_from(&p.position);
            p.pbest_cost = c;
        }
    }
    let g = argmin(swarm.particles.iter().map(|p| p.pbest_cost));
    if swarm.particles[g].pbest_cost < swarm.gbest_cost {
        swarm.gbest = swarm.particles[g].pbest.clone();
        swarm.gbest_cost = swarm.particles[g].pbest_cost;
    }
}

pub fn minimize<O: Objective + ?Sized>(config: &PsoConfig, objective: &O) -> Result<SearchResult, String> {
    config.validate()?;
    let mut swarm = init_swarm(config, objective);
    let mut history = ConvergenceHistory::default();
    for _ in 0..config.max_iter {
        pso_step(&mut swarm, config, objective);
        history.push(swarm.gbest_cost);
    }
    Ok(SearchResult {
        best_position: swarm.gbest,
        best_cost: swarm.gbest_cost,
        history,
        evaluations: config.n_particles * (config.max_iter + 1),
    })
}

/// Particle swarm over capacitor plans.
pub fn run_pso(
    config: &PsoConfig,
    evaluator: &PlanEvaluator,
    space: &PlanSpace,
) -> Result<OptimizerRun, String> {
    let objective = PlanObjective::new(evaluator, space.clone())?;
    let result = minimize(config, &objective)?;
    Ok(finish_run(Algorithm::Pso, evaluator, space, result))
}
