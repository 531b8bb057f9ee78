//! C ABI over capsweep.
//!
//! Handles are opaque and owned by the caller once returned; each has a
//! matching `*_free`. Every fallible call returns a [`CapsweepStatus`] and,
//! on failure, leaves a message retrievable with
//! [`capsweep_last_error_message`] on the same thread. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use capsweep::csa::{run_csa, CsaConfig};
use capsweep::loadflow::{solve_loadflow, voltage_deviation, voltage_stability_index};
use capsweep::objective::{CapacitorPlan, ObjectiveWeights, Placement, PlanEvaluator};
use capsweep::pso::{run_pso, PsoConfig};
use capsweep::search::{OptimizerRun, PlanSpace};
use capsweep::{data, LoadFlowError, LoadFlowSolution, Network, NetworkError, SolverSettings};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapsweepStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    TopologyError = 4,
    InvalidArgument = 5,
    VoltageCollapse = 6,
    OutOfRange = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapsweepAlgorithm {
    Csa = 0,
    Pso = 1,
}

pub struct CapsweepNetwork {
    inner: Network,
}

pub struct CapsweepSolution {
    inner: LoadFlowSolution,
    voltage_deviation: f64,
    min_vsi: f64,
}

pub struct CapsweepOptimizerResult {
    inner: OptimizerRun,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (CapsweepStatus, String);

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CapsweepStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CapsweepStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CapsweepStatus::Panic
        }
    }
}

fn network_failure(e: NetworkError) -> Failure {
    let status = match e {
        NetworkError::Parse { .. } => CapsweepStatus::ParseError,
        NetworkError::SelfLoop { .. }
        | NetworkError::NoBranches
        | NetworkError::DuplicateBranch { .. }
        | NetworkError::Cycle { .. }
        | NetworkError::Disconnected { .. } => CapsweepStatus::TopologyError,
        NetworkError::InvalidBase { .. }
        | NetworkError::InvalidImpedance { .. }
        | NetworkError::NegativeLoad { .. }
        | NetworkError::UnknownLoadBus { .. }
        | NetworkError::DuplicateLoad { .. }
        | NetworkError::SlackLoad => CapsweepStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn loadflow_failure(e: LoadFlowError) -> Failure {
    let status = match e {
        LoadFlowError::VoltageCollapse { .. } => CapsweepStatus::VoltageCollapse,
        LoadFlowError::InvalidSettings(_) => CapsweepStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn null(name: &str) -> Failure {
    (CapsweepStatus::NullArgument, format!("{name} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (CapsweepStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn give<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next capsweep call on the same thread.
#[no_mangle]
pub extern "C" fn capsweep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn capsweep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a network from branch (`from,to,r_ohm,x_ohm`) and load
/// (`bus,p_kw,q_kvar`) CSV text.
///
/// # Safety
/// `branches` and `loads` must be NUL-terminated strings; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_network_parse(
    branches: *const c_char,
    loads: *const c_char,
    base_kv: f64,
    base_mva: f64,
    out: *mut *mut CapsweepNetwork,
) -> CapsweepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = text(branches, "branches")?;
        let l = text(loads, "loads")?;
        let inner = capsweep::parse_network(b, l, base_kv, base_mva).map_err(network_failure)?;
        give(out, CapsweepNetwork { inner });
        Ok(())
    })
}

/// The built-in 33-bus feeder.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_network_ieee33(
    base_kv: f64,
    base_mva: f64,
    out: *mut *mut CapsweepNetwork,
) -> CapsweepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = data::ieee33(base_kv, base_mva).map_err(network_failure)?;
        give(out, CapsweepNetwork { inner });
        Ok(())
    })
}

/// Bus count, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_network_bus_count(network: *const CapsweepNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.inner.bus_count())
}

/// # Safety
/// `network` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn capsweep_network_free(network: *mut CapsweepNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

unsafe fn plan_from_arrays(buses: *const usize, sizes_kvar: *const f64, count: usize) -> Result<CapacitorPlan, Failure> {
    if count == 0 {
        return Ok(CapacitorPlan::empty());
    }
    if buses.is_null() || sizes_kvar.is_null() {
        return Err(null("placement arrays"));
    }
    let buses = std::slice::from_raw_parts(buses, count);
    let sizes = std::slice::from_raw_parts(sizes_kvar, count);
    Ok(CapacitorPlan::new(
        buses.iter().zip(sizes).map(|(&bus, &size_kvar)| Placement { bus, size_kvar }).collect(),
    ))
}

/// Solves the load flow with `count` capacitors (`buses[i]`, `sizes_kvar[i]`).
/// A run that hits `max_iterations` still returns a solution; check
/// [`capsweep_solution_converged`].
///
/// # Safety
/// `network` must be a live handle; the arrays must hold `count` elements
/// (they may be null when `count` is 0); `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_loadflow_solve(
    network: *const CapsweepNetwork,
    buses: *const usize,
    sizes_kvar: *const f64,
    count: usize,
    tolerance_pu: f64,
    max_iterations: usize,
    out: *mut *mut CapsweepSolution,
) -> CapsweepStatus {
    guard(|| {
        let net = borrow(network, "network")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let plan = plan_from_arrays(buses, sizes_kvar, count)?;
        let settings = SolverSettings { tolerance_pu, max_iterations };
        let pu = net.inner.to_per_unit();
        let sol = solve_loadflow(&pu, &plan.merged(), &settings).map_err(loadflow_failure)?;
        let vsi = voltage_stability_index(&pu, &sol);
        give(out, CapsweepSolution { voltage_deviation: voltage_deviation(&sol), min_vsi: vsi.min, inner: sol });
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_converged(solution: *const CapsweepSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.inner.converged)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_iterations(solution: *const CapsweepSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.iterations)
}

/// Total active loss in kW, NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_p_loss_kw(solution: *const CapsweepSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.inner.total_p_loss_kw)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_q_loss_kvar(solution: *const CapsweepSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.inner.total_q_loss_kvar)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_voltage_deviation(solution: *const CapsweepSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.voltage_deviation)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_min_vsi(solution: *const CapsweepSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.min_vsi)
}

/// Magnitude (p.u.) and angle (radians) of bus `bus` (1-based).
///
/// # Safety
/// `solution` must be a live handle; `magnitude` and `angle_rad` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_voltage(
    solution: *const CapsweepSolution,
    bus: usize,
    magnitude: *mut f64,
    angle_rad: *mut f64,
) -> CapsweepStatus {
    guard(|| {
        let s = borrow(solution, "solution")?;
        if magnitude.is_null() || angle_rad.is_null() {
            return Err(null("output pointer"));
        }
        let n = s.inner.voltages.len();
        let v = bus
            .checked_sub(1)
            .and_then(|i| s.inner.voltages.get(i))
            .ok_or_else(|| (CapsweepStatus::OutOfRange, format!("bus {bus} outside 1..={n}")))?;
        *magnitude = v.norm();
        *angle_rad = v.arg();
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn capsweep_solution_free(solution: *mut CapsweepSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Searches for `n_capacitors` banks with default weights and solver
/// settings. Sizes range up to the network's total reactive load.
///
/// # Safety
/// `network` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_optimize(
    network: *const CapsweepNetwork,
    algorithm: CapsweepAlgorithm,
    n_capacitors: usize,
    max_iter: usize,
    seed: u64,
    out: *mut *mut CapsweepOptimizerResult,
) -> CapsweepStatus {
    guard(|| {
        let net = borrow(network, "network")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n_capacitors == 0 {
            return Err((CapsweepStatus::InvalidArgument, "n_capacitors must be at least 1".into()));
        }
        let evaluator = PlanEvaluator::new(net.inner.to_per_unit(), SolverSettings::default(), ObjectiveWeights::default());
        let space = PlanSpace::for_network(&net.inner, n_capacitors);
        let run = match algorithm {
            CapsweepAlgorithm::Csa => run_csa(&CsaConfig { max_iter, seed, ..CsaConfig::default() }, &evaluator, &space),
            CapsweepAlgorithm::Pso => run_pso(&PsoConfig { max_iter, seed, ..PsoConfig::default() }, &evaluator, &space),
        }
        .map_err(|e| (CapsweepStatus::InvalidArgument, e))?;
        give(out, CapsweepOptimizerResult { inner: run });
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_best_cost(result: *const CapsweepOptimizerResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.best_cost)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_feasible(result: *const CapsweepOptimizerResult) -> bool {
    result.as_ref().is_some_and(|r| r.inner.feasible)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_placement_count(result: *const CapsweepOptimizerResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.plan.placements().len())
}

/// # Safety
/// `result` must be a live handle; `bus` and `size_kvar` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_placement(
    result: *const CapsweepOptimizerResult,
    index: usize,
    bus: *mut usize,
    size_kvar: *mut f64,
) -> CapsweepStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        if bus.is_null() || size_kvar.is_null() {
            return Err(null("output pointer"));
        }
        let placements = r.inner.plan.placements();
        let p = placements
            .get(index)
            .ok_or_else(|| (CapsweepStatus::OutOfRange, format!("placement {index} of {}", placements.len())))?;
        *bus = p.bus;
        *size_kvar = p.size_kvar;
        Ok(())
    })
}

/// Copies up to `capacity` best-cost values, one per iteration, into
/// `buffer` and returns the full history length.
///
/// # Safety
/// `result` must be null or a live handle; `buffer` must hold `capacity`
/// elements or be null when `capacity` is 0.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_history(
    result: *const CapsweepOptimizerResult,
    buffer: *mut f64,
    capacity: usize,
) -> usize {
    let Some(r) = result.as_ref() else { return 0 };
    let history = &r.inner.history.best_cost_per_iteration;
    if !buffer.is_null() {
        let n = capacity.min(history.len());
        ptr::copy_nonoverlapping(history.as_ptr(), buffer, n);
    }
    history.len()
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn capsweep_result_free(result: *mut CapsweepOptimizerResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
