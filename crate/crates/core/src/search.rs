//! Pieces shared by the population optimizers: the continuous encoding of
//! capacitor plans, box bounds, seeded per-individual RNG streams and batch
//! evaluation.
//!
//! Every individual `i` owns its own ChaCha8 stream (`seed`, stream `i`) and
//! draws from nothing else. Positions for a step are generated first, then
//! the whole batch is evaluated (optionally on the rayon pool), then
//! memories are updated in index order. Results therefore do not depend on
//! worker scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::network::Network;
use crate::objective::{CapacitorPlan, Placement, PlanEvaluator};

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, String> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err("bounds need matching, non-empty lower and upper vectors".into());
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(format!("dimension {i}: invalid range [{lo}, {hi}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Clamps in place; NaN goes to the lower bound.
    pub fn repair(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = if v.is_nan() { *lo } else { v.clamp(*lo, *hi) };
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    /// One uniform draw per dimension, in dimension order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let u: f64 = rng.random();
                (lo + (hi - lo) * u).min(*hi)
            })
            .collect()
    }
}

/// Something the optimizers can minimize.
pub trait Objective: Sync {
    fn bounds(&self) -> &Bounds;
    fn evaluate(&self, position: &[f64]) -> f64;
}

/// RNG stream owned by individual `index`.
pub fn individual_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn individual_streams(seed: u64, count: usize) -> Vec<ChaCha8Rng> {
    (0..count).map(|i| individual_stream(seed, i)).collect()
}

/// Evaluates positions in order. NaN costs are reported as +inf.
pub fn evaluate_batch<O: Objective + ?Sized>(objective: &O, positions: &[Vec<f64>], parallel: bool) -> Vec<f64> {
    let eval = |x: &Vec<f64>| {
        let c = objective.evaluate(x);
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    };
    if parallel {
        positions.par_iter().map(eval).collect()
    } else {
        positions.iter().map(eval).collect()
    }
}

/// Running global-best cost, one entry per completed iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub best_cost_per_iteration: Vec<f64>,
}

impl ConvergenceHistory {
    pub fn push(&mut self, cost: f64) {
        self.best_cost_per_iteration.push(cost);
    }

    pub fn len(&self) -> usize {
        self.best_cost_per_iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best_cost_per_iteration.is_empty()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.best_cost_per_iteration.windows(2).all(|w| w[1] <= w[0])
    }

    /// `iter,best_cost` CSV with header; iterations count from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,best_cost\n");
        for (i, c) in self.best_cost_per_iteration.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, c));
        }
        out
    }
}

/// Outcome of a raw minimization over an [`Objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    pub history: ConvergenceHistory,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Csa,
    Pso,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Csa => "csa",
            Algorithm::Pso => "pso",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csa" => Ok(Algorithm::Csa),
            "pso" => Ok(Algorithm::Pso),
            other => Err(format!("unknown optimizer {other:?} (expected csa or pso)")),
        }
    }
}

/// Capacitor plans as flat vectors `[loc_1, size_1, loc_2, size_2, ...]`.
///
/// Locations are relaxed to `[2, L_max]` and rounded to the nearest bus on
/// decode; sizes live in `[0, max_kvar]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpace {
    pub n_capacitors: usize,
    pub l_max: usize,
    pub max_kvar: f64,
}

impl PlanSpace {
    /// Size range defaults to the feeder's total reactive load.
    pub fn for_network(network: &Network, n_capacitors: usize) -> Self {
        Self { n_capacitors, l_max: network.max_bus_id(), max_kvar: network.total_load_kvar() }
    }

    pub fn with_max_kvar(mut self, max_kvar: f64) -> Self {
        self.max_kvar = max_kvar;
        self
    }

    pub fn bounds(&self) -> Result<Bounds, String> {
        if self.n_capacitors == 0 {
            return Err("at least one capacitor is required".into());
        }
        if self.l_max < 2 {
            return Err("network has no bus eligible for a capacitor".into());
        }
        let mut lower = Vec::with_capacity(2 * self.n_capacitors);
        let mut upper = Vec::with_capacity(2 * self.n_capacitors);
        for _ in 0..self.n_capacitors {
            lower.extend([2.0, 0.0]);
            upper.extend([self.l_max as f64, self.max_kvar]);
        }
        Bounds::new(lower, upper)
    }

    pub fn encode_plan(&self, plan: &CapacitorPlan) -> Vec<f64> {
        plan.placements().iter().flat_map(|p| [p.bus as f64, p.size_kvar]).collect()
    }

    /// Out-of-range entries are clamped; never fails.
    pub fn decode_position(&self, position: &[f64]) -> CapacitorPlan {
        let l_max = self.l_max as f64;
        CapacitorPlan::new(
            position
                .chunks(2)
                .take(self.n_capacitors)
                .map(|pair| {
                    let loc = if pair[0].is_nan() { 2.0 } else { pair[0].clamp(2.0, l_max) };
                    let size = pair.get(1).copied().unwrap_or(0.0);
                    let size = if size.is_nan() { 0.0 } else { size.clamp(0.0, self.max_kvar) };
                    Placement { bus: loc.round() as usize, size_kvar: size }
                })
                .collect(),
        )
    }
}

/// Penalized plan cost as an [`Objective`].
pub struct PlanObjective<'a> {
    evaluator: &'a PlanEvaluator,
    space: PlanSpace,
    bounds: Bounds,
}

impl<'a> PlanObjective<'a> {
    pub fn new(evaluator: &'a PlanEvaluator, space: PlanSpace) -> Result<Self, String> {
        let bounds = space.bounds()?;
        Ok(Self { evaluator, space, bounds })
    }

    pub fn space(&self) -> &PlanSpace {
        &self.space
    }
}

impl Objective for PlanObjective<'_> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        self.evaluator.cost(&self.space.decode_position(position))
    }
}

/// Best plan found by an optimizer, with its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub algorithm: Algorithm,
    pub plan: CapacitorPlan,
    pub best_cost: f64,
    pub best_position: Vec<f64>,
    pub history: ConvergenceHistory,
    pub evaluations: usize,
    /// Whether the best plan satisfies every constraint with a converged flow.
    pub feasible: bool,
}

pub(crate) fn finish_run(
    algorithm: Algorithm,
    evaluator: &PlanEvaluator,
    space: &PlanSpace,
    result: SearchResult,
) -> OptimizerRun {
    let plan = space.decode_position(&result.best_position);
    let eval = evaluator.evaluate(&plan);
    let feasible = eval.report.is_feasible() && eval.solution.as_ref().is_some_and(|s| s.converged);
    OptimizerRun {
        algorithm,
        plan,
        best_cost: result.best_cost,
        best_position: result.best_position,
        history: result.history,
        evaluations: result.evaluations,
        feasible,
    }
}
