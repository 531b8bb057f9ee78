//! Base-case and optimized runs, their JSON/CSV outputs, and the comparison
//! table that puts computed runs next to cited reference rows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csa::run_csa;
use crate::data;
use crate::error::LoadFlowError;
use crate::loadflow::{solve_loadflow, voltage_deviation, voltage_stability_index, LoadFlowSolution};
use crate::network::{Network, PerUnitNetwork};
use crate::objective::{CapacitorPlan, PlanEvaluator, V_MAX_PU, V_MIN_PU};
use crate::pso::run_pso;
use crate::scenario::{Scenario, ScenarioError};
use crate::search::{Algorithm, ConvergenceHistory, OptimizerRun};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    LoadFlow(#[from] LoadFlowError),
    #[error("{label} load flow did not converge after {iterations} iterations (last max |dV| = {max_delta_v:e} p.u.)")]
    NotConverged { label: String, iterations: usize, max_delta_v: f64 },
    #[error("optimizer: {0}")]
    Optimizer(String),
    #[error("cannot compare runs: {0}")]
    Compare(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusVoltage {
    pub bus: usize,
    pub v_pu: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchLoss {
    pub branch: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub p_kw: f64,
    pub q_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTotals {
    pub p_loss_kw: f64,
    pub q_loss_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub bus: usize,
    pub size_mvar: f64,
}

/// Load-flow derived numbers for one network state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub converged: bool,
    pub iterations: usize,
    pub max_delta_v: f64,
    pub voltages: Vec<BusVoltage>,
    pub branch_losses: Vec<BranchLoss>,
    pub totals: LossTotals,
    pub voltage_deviation: f64,
    pub min_vsi: f64,
    pub min_vsi_bus: usize,
    pub min_voltage: BusVoltage,
    /// Buses with |V| outside the allowed band.
    pub violations: Vec<usize>,
}

impl FlowSummary {
    pub fn from_solution(network: &PerUnitNetwork, solution: &LoadFlowSolution) -> Self {
        let voltages: Vec<BusVoltage> = solution
            .voltages
            .iter()
            .enumerate()
            .map(|(i, v)| BusVoltage { bus: i + 1, v_pu: v.norm(), angle_deg: v.arg().to_degrees() })
            .collect();
        let branch_losses = network
            .network()
            .branches()
            .iter()
            .enumerate()
            .map(|(k, b)| BranchLoss {
                branch: k + 1,
                from_bus: b.from_bus,
                to_bus: b.to_bus,
                p_kw: solution.p_loss_kw[k],
                q_kvar: solution.q_loss_kvar[k],
            })
            .collect();
        let vsi = voltage_stability_index(network, solution);
        let (min_bus, _) = solution.min_voltage();
        Self {
            converged: solution.converged,
            iterations: solution.iterations,
            max_delta_v: solution.max_delta_v,
            min_voltage: voltages[min_bus - 1],
            violations: voltages
                .iter()
                .filter(|v| v.v_pu < V_MIN_PU || v.v_pu > V_MAX_PU)
                .map(|v| v.bus)
                .collect(),
            voltages,
            branch_losses,
            totals: LossTotals {
                p_loss_kw: solution.total_p_loss_kw,
                q_loss_kvar: solution.total_q_loss_kvar,
            },
            voltage_deviation: voltage_deviation(solution),
            min_vsi: vsi.min,
            min_vsi_bus: vsi.min_bus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reductions {
    pub p_loss_pct: f64,
    pub q_loss_pct: f64,
    pub voltage_deviation_pct: f64,
}

pub fn percent_reduction(base: f64, optimized: f64) -> f64 {
    100.0 * (base - optimized) / base
}

impl Reductions {
    pub fn between(base: &FlowSummary, optimized: &FlowSummary) -> Self {
        Self {
            p_loss_pct: percent_reduction(base.totals.p_loss_kw, optimized.totals.p_loss_kw),
            q_loss_pct: percent_reduction(base.totals.q_loss_kvar, optimized.totals.q_loss_kvar),
            voltage_deviation_pct: percent_reduction(base.voltage_deviation, optimized.voltage_deviation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `base`, `csa` or `pso`.
    pub label: String,
    pub scenario: Scenario,
    pub network_fingerprint: String,
    pub flow: FlowSummary,
    pub plan: Vec<PlanEntry>,
    /// Penalized objective of `plan` (the empty plan for a base run).
    pub cost: f64,
    pub optimizer: Option<Algorithm>,
    pub best_cost: Option<f64>,
    pub feasible: Option<bool>,
    pub evaluations: Option<usize>,
    pub convergence_history_path: Option<String>,
    /// Base case the optimized run is measured against.
    pub base: Option<FlowSummary>,
    pub reductions: Option<Reductions>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|source| RunError::Json { path: path.into(), source })
    }

    pub fn total_plan_mvar(&self) -> f64 {
        self.plan.iter().map(|p| p.size_mvar).sum()
    }
}

/// Result of an optimized run: the report plus the search trace.
#[derive(Debug, Clone)]
pub struct OptimizedRun {
    pub report: RunReport,
    pub base_report: RunReport,
    pub run: OptimizerRun,
}

impl OptimizedRun {
    pub fn history(&self) -> &ConvergenceHistory {
        &self.run.history
    }
}

fn evaluator_for(scenario: &Scenario) -> Result<(Network, PlanEvaluator), RunError> {
    scenario.validate()?;
    let network = scenario.load_network()?;
    let evaluator = PlanEvaluator::new(network.to_per_unit(), scenario.solver, scenario.weights);
    Ok((network, evaluator))
}

fn plan_report(
    label: &str,
    scenario: &Scenario,
    network: &Network,
    evaluator: &PlanEvaluator,
    plan: &CapacitorPlan,
) -> Result<RunReport, RunError> {
    let plan = plan.merged();
    let solution = solve_loadflow(evaluator.network(), &plan, evaluator.settings())?;
    if !solution.converged {
        return Err(RunError::NotConverged {
            label: label.into(),
            iterations: solution.iterations,
            max_delta_v: solution.max_delta_v,
        });
    }
    let eval = evaluator.evaluate(&plan);
    Ok(RunReport {
        label: label.into(),
        scenario: scenario.clone(),
        network_fingerprint: network.fingerprint(),
        flow: FlowSummary::from_solution(evaluator.network(), &solution),
        // a zero-size bank is no bank
        plan: plan
            .placements()
            .iter()
            .filter(|p| p.size_kvar > 0.0)
            .map(|p| PlanEntry { bus: p.bus, size_mvar: p.size_kvar / 1000.0 })
            .collect(),
        cost: eval.cost,
        optimizer: None,
        best_cost: None,
        feasible: Some(eval.report.is_feasible()),
        evaluations: None,
        convergence_history_path: None,
        base: None,
        reductions: None,
    })
}

/// Load flow without capacitors.
pub fn run_base(scenario: &Scenario) -> Result<RunReport, RunError> {
    let (network, evaluator) = evaluator_for(scenario)?;
    plan_report("base", scenario, &network, &evaluator, &CapacitorPlan::empty())
}

/// Runs the scenario's optimizer (or `algorithm` when given), re-solves the
/// feeder with the best plan and measures it against the base case.
pub fn run_optimized(scenario: &Scenario, algorithm: Option<Algorithm>) -> Result<OptimizedRun, RunError> {
    let algorithm = algorithm.unwrap_or(scenario.optimizer);
    let (network, evaluator) = evaluator_for(scenario)?;
    let base_report = plan_report("base", scenario, &network, &evaluator, &CapacitorPlan::empty())?;
    let space = scenario.plan_space(&network);
    let run = match algorithm {
        Algorithm::Csa => run_csa(&scenario.csa_config(), &evaluator, &space),
        Algorithm::Pso => run_pso(&scenario.pso_config(), &evaluator, &space),
    }
    .map_err(RunError::Optimizer)?;
    let mut report = plan_report(&algorithm.to_string(), scenario, &network, &evaluator, &run.plan)?;
    report.optimizer = Some(algorithm);
    report.best_cost = Some(run.best_cost);
    report.feasible = Some(run.feasible);
    report.evaluations = Some(run.evaluations);
    report.reductions = Some(Reductions::between(&base_report.flow, &report.flow));
    report.base = Some(base_report.flow.clone());
    Ok(OptimizedRun { report, base_report, run })
}

pub fn voltages_csv(flow: &FlowSummary) -> String {
    let mut out = String::from("bus,v_pu\n");
    for v in &flow.voltages {
        let _ = writeln!(out, "{},{}", v.bus, v.v_pu);
    }
    out
}

pub fn branch_losses_csv(flow: &FlowSummary) -> String {
    let mut out = String::from("branch,from_bus,to_bus,p_kw,q_kvar\n");
    for b in &flow.branch_losses {
        let _ = writeln!(out, "{},{},{},{},{}", b.branch, b.from_bus, b.to_bus, b.p_kw, b.q_kvar);
    }
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, RunError> {
    fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `<label>_report.json`, `<label>_voltages.csv`,
/// `<label>_branch_losses.csv` and, with a history, `<label>_convergence.csv`.
/// The report's history path is filled in before it is written.
pub fn write_outputs(
    dir: &Path,
    report: &mut RunReport,
    history: Option<&ConvergenceHistory>,
) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.into(), source })?;
    let label = report.label.clone();
    let mut written = Vec::new();
    if let Some(h) = history {
        let path = write_file(dir.join(format!("{label}_convergence.csv")), &h.to_csv())?;
        report.convergence_history_path = Some(path.to_string_lossy().into_owned());
        written.push(path);
    }
    written.push(write_file(dir.join(format!("{label}_voltages.csv")), &voltages_csv(&report.flow))?);
    written.push(write_file(
        dir.join(format!("{label}_branch_losses.csv")),
        &branch_losses_csv(&report.flow),
    )?);
    written.push(write_file(dir.join(format!("{label}_report.json")), &report.to_json())?);
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSource {
    Computed,
    Cited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub case: String,
    pub source: RowSource,
    pub ploss_kw: f64,
    pub qloss_kvar: f64,
    pub vd: f64,
    pub vsi: f64,
    pub cap_mvar: Option<f64>,
    pub location: Option<String>,
    pub best_cost: Option<f64>,
}

fn optional<T: std::str::FromStr>(field: &str) -> Result<Option<T>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| format!("bad value {field:?}"))
}

/// Parses cited reference rows:
/// `case,ploss_kw,qloss_kvar,vd,vsi,cap_mvar,location,best_cost_pu` with a header.
pub fn parse_cited_rows(text: &str) -> Result<Vec<ComparisonRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(format!("cited table line {}: expected 8 columns", i + 1));
        }
        let req = |s: &str| -> Result<f64, String> {
            optional::<f64>(s)?.ok_or_else(|| format!("cited table line {}: missing value", i + 1))
        };
        rows.push(ComparisonRow {
            case: f[0].trim().to_string(),
            source: RowSource::Cited,
            ploss_kw: req(f[1])?,
            qloss_kvar: req(f[2])?,
            vd: req(f[3])?,
            vsi: req(f[4])?,
            cap_mvar: optional(f[5])?,
            location: optional::<String>(f[6])?,
            best_cost: optional(f[7])?,
        });
    }
    Ok(rows)
}

pub fn default_cited_rows() -> Vec<ComparisonRow> {
    parse_cited_rows(data::TABLE1_CITED).expect("shipped reference table parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Computed rows first, in the given order, then the cited rows. All
/// reports must come from the same network.
pub fn compare_runs(reports: &[RunReport], cited: &[ComparisonRow]) -> Result<ComparisonTable, RunError> {
    let first = reports.first().ok_or_else(|| RunError::Compare("no reports given".into()))?;
    for r in reports {
        if r.network_fingerprint != first.network_fingerprint {
            return Err(RunError::Compare(format!(
                "run {:?} was made on a different network ({}) than run {:?} ({})",
                r.label, r.network_fingerprint, first.label, first.network_fingerprint
            )));
        }
    }
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            case: r.label.to_ascii_uppercase(),
            source: RowSource::Computed,
            ploss_kw: r.flow.totals.p_loss_kw,
            qloss_kvar: r.flow.totals.q_loss_kvar,
            vd: r.flow.voltage_deviation,
            vsi: r.flow.min_vsi,
            cap_mvar: (!r.plan.is_empty()).then(|| r.total_plan_mvar()),
            location: (!r.plan.is_empty()).then(|| {
                r.plan.iter().map(|p| p.bus.to_string()).collect::<Vec<_>>().join(";")
            }),
            best_cost: r.best_cost,
        })
        .collect();
    rows.extend(cited.iter().cloned().map(|mut row| {
        row.source = RowSource::Cited;
        row
    }));
    Ok(ComparisonTable { rows })
}

fn opt_num(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,source,ploss_kw,qloss_kvar,vd,vsi,cap_mvar,location,best_cost\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.case,
                match r.source {
                    RowSource::Computed => "computed",
                    RowSource::Cited => "cited",
                },
                r.ploss_kw,
                r.qloss_kvar,
                r.vd,
                r.vsi,
                r.cap_mvar.map(|x| x.to_string()).unwrap_or_default(),
                r.location.clone().unwrap_or_default(),
                r.best_cost.map(|x| x.to_string()).unwrap_or_default(),
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<6} {:<9} {:>10} {:>11} {:>6} {:>6} {:>9} {:>9} {:>10}\n",
            "case", "source", "Ploss(kW)", "Qloss(kvar)", "VD", "VSI", "cap(Mvar)", "location", "best cost"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<6} {:<9} {:>10.2} {:>11.2} {:>6.2} {:>6.2} {:>9} {:>9} {:>10}",
                r.case,
                match r.source {
                    RowSource::Computed => "computed",
                    RowSource::Cited => "cited",
                },
                r.ploss_kw,
                r.qloss_kvar,
                r.vd,
                r.vsi,
                opt_num(r.cap_mvar, 4),
                r.location.clone().unwrap_or_else(|| "-".into()),
                opt_num(r.best_cost, 4),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_run_on_no_load_feeder_is_clean() {
        let dir = tempfile::tempdir().unwrap();
        let b = dir.path().join("b.csv");
        let l = dir.path().join("l.csv");
        fs::write(&b, crate::data::IEEE33_BRANCHES).unwrap();
        fs::write(&l, "").unwrap();
        let scenario = Scenario { branch_file: Some(b), load_file: Some(l), ..Scenario::default() };
        let report = run_base(&scenario).unwrap();
        assert_eq!(report.flow.totals.p_loss_kw, 0.0);
        assert!(report.flow.violations.is_empty());
    }

    #[test]
    fn cited_rows_parse() {
        let rows = default_cited_rows();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[0].case, "Base");
        assert_eq!(rows[0].cap_mvar, None);
        assert_eq!(rows[1].location.as_deref(), Some("30"));
        assert_eq!(rows[1].best_cost, Some(3.841));
        assert!(rows.iter().all(|r| r.source == RowSource::Cited));
    }

    #[test]
    fn single_report_comparison() {
        let report = run_base(&Scenario::default()).unwrap();
        let table = compare_runs(&[report], &[]).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].source, RowSource::Computed);
        assert!(table.to_csv().lines().count() == 2);
    }

    #[test]
    fn fingerprint_mismatch_refused() {
        let a = run_base(&Scenario::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let b = dir.path().join("b.csv");
        let l = dir.path().join("l.csv");
        fs::write(&b, crate::data::IEEE33_BRANCHES.replace("0.0922", "0.0923")).unwrap();
        fs::write(&l, crate::data::IEEE33_LOADS).unwrap();
        let other = run_base(&Scenario { branch_file: Some(b), load_file: Some(l), ..Scenario::default() }).unwrap();
        assert!(matches!(compare_runs(&[a, other], &[]), Err(RunError::Compare(_))));
    }

    #[test]
    fn non_convergence_is_an_error() {
        let mut scenario = Scenario::default();
        scenario.solver.max_iterations = 1;
        scenario.solver.tolerance_pu = 1e-12;
        match run_base(&scenario) {
            Err(RunError::NotConverged { max_delta_v, iterations: 1, .. }) => assert!(max_delta_v > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
