//! Backward/forward sweep load flow.
//!
//! Each iteration converts the current voltage estimate into nodal load
//! currents, accumulates them leaf to root into branch currents, then walks
//! root to leaf subtracting branch drops from the slack voltage. Capacitors
//! are constant reactive power injections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::LoadFlowError;
use crate::network::PerUnitNetwork;
use crate::objective::CapacitorPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stop once the largest per-bus voltage change is below this (p.u.).
    pub tolerance_pu: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance_pu: 1e-6, max_iterations: 100 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), LoadFlowError> {
        if !(self.tolerance_pu.is_finite() && self.tolerance_pu > 0.0) {
            return Err(LoadFlowError::InvalidSettings(format!(
                "tolerance must be positive, got {}",
                self.tolerance_pu
            )));
        }
        if self.max_iterations == 0 {
            return Err(LoadFlowError::InvalidSettings("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadFlowSolution {
    /// Complex bus voltages (p.u.), indexed by `bus id - 1`.
    pub voltages: Vec<Complex64>,
    /// Branch currents (p.u.), indexed like `Network::branches`.
    pub branch_currents: Vec<Complex64>,
    pub p_loss_kw: Vec<f64>,
    pub q_loss_kvar: Vec<f64>,
    pub total_p_loss_kw: f64,
    pub total_q_loss_kvar: f64,
    /// Complex power leaving the substation (p.u.).
    pub slack_power_pu: Complex64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest voltage change in the final iteration.
    pub max_delta_v: f64,
}

impl LoadFlowSolution {
    pub fn voltage_magnitudes(&self) -> Vec<f64> {
        self.voltages.iter().map(|v| v.norm()).collect()
    }

    /// (bus id, |V|) of the lowest voltage.
    pub fn min_voltage(&self) -> (usize, f64) {
        self.voltages
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1, v.norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
    }

    /// Slack injection minus (loads - capacitor injections + losses), in p.u.
    /// Zero up to the solver tolerance for a converged solution.
    pub fn balance_residual(&self, network: &PerUnitNetwork, plan: &CapacitorPlan) -> Complex64 {
        let demand: Complex64 = net_demand(network, plan).iter().sum();
        let s_base = network.base().s_base_kva();
        let losses = Complex64::new(self.total_p_loss_kw, self.total_q_loss_kvar) / s_base;
        self.slack_power_pu - (demand + losses)
    }
}

/// Per-bus complex demand in p.u.: load minus capacitor output. Placements
/// on the slack bus or outside the network do not enter the sweep.
pub fn net_demand(network: &PerUnitNetwork, plan: &CapacitorPlan) -> Vec<Complex64> {
    let mut demand = network.loads().to_vec();
    let s_base = network.base().s_base_kva();
    for p in plan.placements() {
        if p.bus >= 2 && p.bus <= demand.len() {
            demand[p.bus - 1] -= Complex64::new(0.0, p.size_kvar / s_base);
        }
    }
    demand
}

fn currents_from_demand(
    demand: &[Complex64],
    voltages: &[Complex64],
) -> Result<Vec<Complex64>, LoadFlowError> {
    demand
        .iter()
        .zip(voltages)
        .enumerate()
        .map(|(i, (s, v))| {
            let mag = v.norm();
            if mag == 0.0 || !mag.is_finite() {
                return Err(LoadFlowError::VoltageCollapse { bus: i + 1 });
            }
            Ok((s / v).conj())
        })
        .collect()
}

/// Nodal load currents `I_i = conj(S_i / V_i)`.
pub fn inject_currents(
    network: &PerUnitNetwork,
    voltages: &[Complex64],
    plan: &CapacitorPlan,
) -> Result<Vec<Complex64>, LoadFlowError> {
    currents_from_demand(&net_demand(network, plan), voltages)
}

/// Leaf-to-root accumulation: each branch carries the injection at its
/// receiving bus plus everything flowing out of that bus.
pub fn backward_sweep(network: &PerUnitNetwork, injections: &[Complex64]) -> Vec<Complex64> {
    let net = network.network();
    let mut through = injections.to_vec();
    let mut branch_currents = vec![Complex64::new(0.0, 0.0); net.branches().len()];
    for &bus in net.order().iter().rev() {
        let (Some(parent), Some(k)) = (net.parent_index(bus), net.parent_branch_index(bus)) else {
            continue;
        };
        branch_currents[k] = through[bus];
        let flow = through[bus];
        through[parent] += flow;
    }
    branch_currents
}

/// Root-to-leaf voltage update `V_child = V_parent - J * Z`.
pub fn forward_sweep(
    network: &PerUnitNetwork,
    branch_currents: &[Complex64],
    slack_voltage: Complex64,
) -> Vec<Complex64> {
    let net = network.network();
    let z = network.impedances();
    let mut voltages = vec![slack_voltage; net.bus_count()];
    for &bus in net.order() {
        if let (Some(parent), Some(k)) = (net.parent_index(bus), net.parent_branch_index(bus)) {
            voltages[bus] = voltages[parent] - branch_currents[k] * z[k];
        }
    }
    voltages
}

/// One inject/backward/forward pass starting from `voltages`. Returns the
/// branch currents used and the updated voltages.
pub fn sweep(
    network: &PerUnitNetwork,
    plan: &CapacitorPlan,
    voltages: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>), LoadFlowError> {
    let injections = inject_currents(network, voltages, plan)?;
    let currents = backward_sweep(network, &injections);
    let next = forward_sweep(network, &currents, network.slack_voltage());
    Ok((currents, next))
}

fn max_delta(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Solves the feeder with the given capacitors in place. Running out of
/// iterations is not an error: the solution comes back with
/// `converged == false`.
pub fn solve_loadflow(
    network: &PerUnitNetwork,
    plan: &CapacitorPlan,
    settings: &SolverSettings,
) -> Result<LoadFlowSolution, LoadFlowError> {
    settings.validate()?;
    let demand = net_demand(network, plan);
    let slack = network.slack_voltage();
    let mut voltages = vec![slack; network.bus_count()];
    let mut currents = vec![Complex64::new(0.0, 0.0); network.network().branches().len()];
    let mut converged = false;
    let mut iterations = 0;
    let mut delta = f64::INFINITY;

    while iterations < settings.max_iterations {
        iterations += 1;
        let injections = currents_from_demand(&demand, &voltages)?;
        currents = backward_sweep(network, &injections);
        let next = forward_sweep(network, &currents, slack);
        delta = max_delta(&next, &voltages);
        voltages = next;
        if !delta.is_finite() {
            break;
        }
        if delta < settings.tolerance_pu {
            converged = true;
            break;
        }
    }

    let losses = branch_losses(network, &voltages, &currents);
    let (p_loss_kw, q_loss_kvar): (Vec<f64>, Vec<f64>) = losses.into_iter().unzip();
    let net = network.network();
    let slack_power_pu = net
        .branches()
        .iter()
        .zip(&currents)
        .filter(|(b, _)| b.from_bus == crate::network::SLACK_BUS)
        .map(|(_, j)| slack * j.conj())
        .sum();

    Ok(LoadFlowSolution {
        total_p_loss_kw: p_loss_kw.iter().sum(),
        total_q_loss_kvar: q_loss_kvar.iter().sum(),
        p_loss_kw,
        q_loss_kvar,
        voltages,
        branch_currents: currents,
        slack_power_pu,
        iterations,
        converged,
        max_delta_v: delta,
    })
}

/// Per-branch (kW, kvar) losses from sending-end flows:
/// `(P^2 + Q^2) / |V_send|^2` times R or X.
pub fn branch_losses(
    network: &PerUnitNetwork,
    voltages: &[Complex64],
    branch_currents: &[Complex64],
) -> Vec<(f64, f64)> {
    let s_base = network.base().s_base_kva();
    network
        .network()
        .branches()
        .iter()
        .zip(network.impedances())
        .zip(branch_currents)
        .map(|((b, z), j)| {
            let v_send = voltages[b.from_bus - 1];
            let s = v_send * j.conj();
            let v2 = v_send.norm_sqr();
            let factor = if v2 > 0.0 { s.norm_sqr() / v2 } else { 0.0 };
            (factor * z.re * s_base, factor * z.im * s_base)
        })
        .collect()
}

/// Sum over buses of `|1 - |V||`.
pub fn voltage_deviation(solution: &LoadFlowSolution) -> f64 {
    solution.voltages.iter().map(|v| (1.0 - v.norm()).abs()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityIndex {
    /// Indexed by `bus id - 1`; the slack entry is `|V_slack|^4`.
    pub per_bus: Vec<f64>,
    pub min: f64,
    pub min_bus: usize,
}

/// Radial-feeder stability index at each receiving bus j of branch (i, j):
/// `|V_i|^4 - 4(P X - Q R)^2 - 4(P R + Q X)|V_i|^2`, with P, Q the power
/// delivered through the branch into bus j.
pub fn voltage_stability_index(
    network: &PerUnitNetwork,
    solution: &LoadFlowSolution,
) -> StabilityIndex {
    let net = network.network();
    let v = &solution.voltages;
    let mut per_bus: Vec<f64> = v.iter().map(|x| x.norm().powi(4)).collect();
    for ((b, z), j) in net.branches().iter().zip(network.impedances()).zip(&solution.branch_currents) {
        let vi = v[b.from_bus - 1].norm();
        let s = v[b.to_bus - 1] * j.conj();
        let (p, q, r, x) = (s.re, s.im, z.re, z.im);
        per_bus[b.to_bus - 1] = vi.powi(4) - 4.0 * (p * x - q * r).powi(2) - 4.0 * (p * r + q * x) * vi * vi;
    }
    let (min_idx, min) = per_bus
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    StabilityIndex { per_bus, min, min_bus: min_idx + 1 }
}
