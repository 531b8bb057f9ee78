//! Capacitor plans, the cost function and constraint handling.
//!
//! Cost of a converged plan:
//!
//! ```text
//! p_cost * sum(P_loss) + q_cost * sum(Q_loss) + cap_cost * sum(cap) + sum |1 - |V_k||
//! ```
//!
//! Constraint violations are added on top by [`penalize`]; an invalid
//! location makes the cost infinite.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::loadflow::{solve_loadflow, voltage_deviation, LoadFlowSolution, SolverSettings};
use crate::network::PerUnitNetwork;

/// Allowed bus voltage band (p.u.).
pub const V_MIN_PU: f64 = 0.9;
pub const V_MAX_PU: f64 = 1.0;

/// Added to the cost of any candidate whose load flow did not converge.
pub const DIVERGENCE_PENALTY: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub bus: usize,
    pub size_kvar: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CapacitorPlan {
    placements: Vec<Placement>,
}

impl CapacitorPlan {
    pub fn new(placements: Vec<Placement>) -> Self {
        Self { placements }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn total_kvar(&self) -> f64 {
        self.placements.iter().map(|p| p.size_kvar).sum()
    }

    /// One placement per bus, sizes summed, sorted by bus.
    pub fn merged(&self) -> CapacitorPlan {
        let mut by_bus: BTreeMap<usize, f64> = BTreeMap::new();
        for p in &self.placements {
            *by_bus.entry(p.bus).or_default() += p.size_kvar;
        }
        CapacitorPlan {
            placements: by_bus
                .into_iter()
                .map(|(bus, size_kvar)| Placement { bus, size_kvar })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub p_cost_per_kw: f64,
    pub q_cost_per_kvar: f64,
    pub cap_cost_per_kvar: f64,
    pub penalty_voltage_per_pu: f64,
    pub penalty_capsize_per_kvar: f64,
}

impl Default for ObjectiveWeights {
    /// Puts the uncompensated 33-bus feeder at 11 kV near 4.2 p.u.
    fn default() -> Self {
        Self {
            p_cost_per_kw: 0.004,
            q_cost_per_kvar: 0.004,
            cap_cost_per_kvar: 0.00025,
            penalty_voltage_per_pu: 1000.0,
            penalty_capsize_per_kvar: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("p_cost_per_kw", self.p_cost_per_kw),
            ("q_cost_per_kvar", self.q_cost_per_kvar),
            ("cap_cost_per_kvar", self.cap_cost_per_kvar),
            ("penalty_voltage_per_pu", self.penalty_voltage_per_pu),
            ("penalty_capsize_per_kvar", self.penalty_capsize_per_kvar),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p_cost_per_kw: self.p_cost_per_kw * factor,
            q_cost_per_kvar: self.q_cost_per_kvar * factor,
            cap_cost_per_kvar: self.cap_cost_per_kvar * factor,
            penalty_voltage_per_pu: self.penalty_voltage_per_pu * factor,
            penalty_capsize_per_kvar: self.penalty_capsize_per_kvar * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Sum over buses of how far |V| sits outside the allowed band (p.u.).
    pub voltage_violation_pu: f64,
    /// Installed kvar in excess of total load kvar.
    pub capsize_violation_kvar: f64,
    /// Every placement lies on a bus in `2..=L_max`.
    pub location_valid: bool,
}

impl ConstraintReport {
    pub fn is_feasible(&self) -> bool {
        self.voltage_violation_pu == 0.0 && self.capsize_violation_kvar == 0.0 && self.location_valid
    }
}

/// Unpenalized cost of a converged solution.
pub fn fitness(solution: &LoadFlowSolution, plan: &CapacitorPlan, weights: &ObjectiveWeights) -> f64 {
    weights.p_cost_per_kw * solution.total_p_loss_kw
        + weights.q_cost_per_kvar * solution.total_q_loss_kvar
        + weights.cap_cost_per_kvar * plan.total_kvar()
        + voltage_deviation(solution)
}

pub fn voltage_violation(magnitudes: impl IntoIterator<Item = f64>) -> f64 {
    magnitudes
        .into_iter()
        .map(|v| (V_MIN_PU - v).max(0.0) + (v - V_MAX_PU).max(0.0))
        .sum()
}

pub fn check_constraints(
    plan: &CapacitorPlan,
    network: &PerUnitNetwork,
    solution: &LoadFlowSolution,
) -> ConstraintReport {
    let net = network.network();
    let l_max = net.max_bus_id();
    ConstraintReport {
        voltage_violation_pu: voltage_violation(solution.voltages.iter().map(|v| v.norm())),
        capsize_violation_kvar: (plan.total_kvar() - net.total_load_kvar()).max(0.0),
        location_valid: plan.placements().iter().all(|p| (2..=l_max).contains(&p.bus)),
    }
}

pub fn penalize(
    raw_cost: f64,
    report: &ConstraintReport,
    weights: &ObjectiveWeights,
    converged: bool,
) -> f64 {
    if !report.location_valid {
        return f64::INFINITY;
    }
    if converged && report.is_feasible() {
        return raw_cost;
    }
    let mut cost = raw_cost
        + weights.penalty_voltage_per_pu * report.voltage_violation_pu
        + weights.penalty_capsize_per_kvar * report.capsize_violation_kvar;
    if !converged {
        cost += DIVERGENCE_PENALTY;
    }
    cost
}

/// A fully evaluated plan.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: f64,
    pub raw_cost: f64,
    pub report: ConstraintReport,
    /// `None` when the sweep collapsed or the location was invalid.
    pub solution: Option<LoadFlowSolution>,
}

/// Network, solver settings and weights bundled so that a plan maps to a
/// single penalized cost. Shared read-only across optimizer workers.
#[derive(Debug, Clone)]
pub struct PlanEvaluator {
    network: PerUnitNetwork,
    settings: SolverSettings,
    weights: ObjectiveWeights,
}

impl PlanEvaluator {
    pub fn new(network: PerUnitNetwork, settings: SolverSettings, weights: ObjectiveWeights) -> Self {
        Self { network, settings, weights }
    }

    pub fn network(&self) -> &PerUnitNetwork {
        &self.network
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn weights(&self) -> &ObjectiveWeights {
        &self.weights
    }

    pub fn evaluate(&self, plan: &CapacitorPlan) -> Evaluation {
        let plan = plan.merged();
        let l_max = self.network.network().max_bus_id();
        let location_valid = plan.placements().iter().all(|p| (2..=l_max).contains(&p.bus));
        let capsize =
            (plan.total_kvar() - self.network.network().total_load_kvar()).max(0.0);
        if !location_valid {
            return Evaluation {
                cost: f64::INFINITY,
                raw_cost: f64::INFINITY,
                report: ConstraintReport {
                    voltage_violation_pu: 0.0,
                    capsize_violation_kvar: capsize,
                    location_valid,
                },
                solution: None,
            };
        }
        match solve_loadflow(&self.network, &plan, &self.settings) {
            Ok(solution) => {
                let report = check_constraints(&plan, &self.network, &solution);
                let raw_cost = fitness(&solution, &plan, &self.weights);
                let mut cost = penalize(raw_cost, &report, &self.weights, solution.converged);
                if cost.is_nan() {
                    cost = f64::INFINITY;
                }
                Evaluation { cost, raw_cost, report, solution: Some(solution) }
            }
            Err(_) => Evaluation {
                cost: f64::INFINITY,
                raw_cost: f64::INFINITY,
                report: ConstraintReport {
                    voltage_violation_pu: 0.0,
                    capsize_violation_kvar: capsize,
                    location_valid,
                },
                solution: None,
            },
        }
    }

    pub fn cost(&self, plan: &CapacitorPlan) -> f64 {
        self.evaluate(plan).cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use num_complex::Complex64;

    fn ieee33() -> PerUnitNetwork {
        data::ieee33(11.0, 1.0).unwrap().to_per_unit()
    }

    fn flat_solution(n: usize) -> LoadFlowSolution {
        LoadFlowSolution {
            voltages: vec![Complex64::new(1.0, 0.0); n],
            branch_currents: vec![Complex64::new(0.0, 0.0); n - 1],
            p_loss_kw: vec![0.0; n - 1],
            q_loss_kvar: vec![0.0; n - 1],
            total_p_loss_kw: 0.0,
            total_q_loss_kvar: 0.0,
            slack_power_pu: Complex64::new(0.0, 0.0),
            iterations: 1,
            converged: true,
            max_delta_v: 0.0,
        }
    }

    #[test]
    fn zero_everything_costs_nothing() {
        let sol = flat_solution(33);
        assert_eq!(fitness(&sol, &CapacitorPlan::empty(), &ObjectiveWeights::default()), 0.0);
    }

    #[test]
    fn active_loss_term_is_linear_in_its_weight() {
        let net = ieee33();
        let sol = solve_loadflow(&net, &CapacitorPlan::empty(), &SolverSettings::default()).unwrap();
        let w = ObjectiveWeights::default();
        let w2 = ObjectiveWeights { p_cost_per_kw: 2.0 * w.p_cost_per_kw, ..w };
        let plan = CapacitorPlan::empty();
        let diff = fitness(&sol, &plan, &w2) - fitness(&sol, &plan, &w);
        assert!((diff - w.p_cost_per_kw * sol.total_p_loss_kw).abs() < 1e-12);
    }

    #[test]
    fn base_case_cost_regression() {
        // Terms summed by hand from the converged base case:
        // 0.004 * 283.2217 + 0.004 * 189.0042 + 0 + 2.3160 = 4.2049
        let net = ieee33();
        let sol = solve_loadflow(&net, &CapacitorPlan::empty(), &SolverSettings::default()).unwrap();
        let w = ObjectiveWeights::default();
        let raw = fitness(&sol, &CapacitorPlan::empty(), &w);
        let by_hand = 0.004 * sol.total_p_loss_kw + 0.004 * sol.total_q_loss_kvar + voltage_deviation(&sol);
        assert_eq!(raw, by_hand);
        assert!((raw - 4.20494).abs() < 1e-4, "{raw}");
    }

    #[test]
    fn reference_csa_plan_respects_capacity() {
        let net = ieee33();
        let plan = CapacitorPlan::new(vec![Placement { bus: 30, size_kvar: 1579.0 }]);
        let sol = solve_loadflow(&net, &plan, &SolverSettings::default()).unwrap();
        let report = check_constraints(&plan, &net, &sol);
        assert_eq!(report.capsize_violation_kvar, 0.0);
        assert!(report.location_valid);
    }

    #[test]
    fn oversize_plan_violation() {
        let net = ieee33();
        let plan = CapacitorPlan::new(vec![
            Placement { bus: 30, size_kvar: 1500.0 },
            Placement { bus: 12, size_kvar: 1000.0 },
        ]);
        let sol = flat_solution(33);
        let report = check_constraints(&plan, &net, &sol);
        assert!((report.capsize_violation_kvar - 200.0).abs() < 1e-9);
    }

    #[test]
    fn slack_location_invalid() {
        let net = ieee33();
        let plan = CapacitorPlan::new(vec![Placement { bus: 1, size_kvar: 100.0 }]);
        let report = check_constraints(&plan, &net, &flat_solution(33));
        assert!(!report.location_valid);
        assert_eq!(penalize(1.0, &report, &ObjectiveWeights::default(), true), f64::INFINITY);
    }

    #[test]
    fn undervoltage_counts() {
        let mut sol = flat_solution(33);
        sol.voltages[17] = Complex64::new(0.8820, 0.0);
        let report = check_constraints(&CapacitorPlan::empty(), &ieee33(), &sol);
        assert!((report.voltage_violation_pu - 0.018).abs() < 1e-12);
    }

    #[test]
    fn penalty_arithmetic() {
        let w = ObjectiveWeights { penalty_voltage_per_pu: 1000.0, ..ObjectiveWeights::default() };
        let ok = ConstraintReport { voltage_violation_pu: 0.0, capsize_violation_kvar: 0.0, location_valid: true };
        assert_eq!(penalize(3.5, &ok, &w, true), 3.5);
        let bad = ConstraintReport { voltage_violation_pu: 0.018, ..ok };
        assert!((penalize(3.5, &bad, &w, true) - 21.5).abs() < 1e-12);
        assert!(penalize(3.5, &ok, &w, false) >= DIVERGENCE_PENALTY);
    }

    #[test]
    fn merge_sums_duplicate_buses() {
        let plan = CapacitorPlan::new(vec![
            Placement { bus: 12, size_kvar: 100.0 },
            Placement { bus: 5, size_kvar: 50.0 },
            Placement { bus: 12, size_kvar: 25.0 },
        ]);
        assert_eq!(
            plan.merged().placements(),
            &[Placement { bus: 5, size_kvar: 50.0 }, Placement { bus: 12, size_kvar: 125.0 }]
        );
    }

    #[test]
    fn evaluator_rejects_bad_location_without_solving() {
        let ev = PlanEvaluator::new(ieee33(), SolverSettings::default(), ObjectiveWeights::default());
        let e = ev.evaluate(&CapacitorPlan::new(vec![Placement { bus: 40, size_kvar: 1.0 }]));
        assert!(e.solution.is_none());
        assert_eq!(e.cost, f64::INFINITY);
    }

    #[test]
    fn non_converged_costs_more_than_feasible() {
        let tight = SolverSettings { tolerance_pu: 1e-15, max_iterations: 1 };
        let plan = CapacitorPlan::new(vec![Placement { bus: 30, size_kvar: 1400.0 }]);
        let bad = PlanEvaluator::new(ieee33(), tight, ObjectiveWeights::default()).evaluate(&plan);
        let good = PlanEvaluator::new(ieee33(), SolverSettings::default(), ObjectiveWeights::default())
            .evaluate(&plan);
        assert!(!bad.solution.as_ref().unwrap().converged);
        assert!(good.report.is_feasible());
        assert!(bad.cost > good.cost);
    }
}
