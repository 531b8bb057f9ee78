/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CAPSWEEP_H
#define CAPSWEEP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  CAPSWEEP_STATUS_OK = 0,
  CAPSWEEP_STATUS_NULL_ARGUMENT = 1,
  CAPSWEEP_STATUS_INVALID_UTF8 = 2,
  CAPSWEEP_STATUS_PARSE_ERROR = 3,
  CAPSWEEP_STATUS_TOPOLOGY_ERROR = 4,
  CAPSWEEP_STATUS_INVALID_ARGUMENT = 5,
  CAPSWEEP_STATUS_VOLTAGE_COLLAPSE = 6,
  CAPSWEEP_STATUS_OUT_OF_RANGE = 7,
  CAPSWEEP_STATUS_PANIC = 99,
} CapsweepStatus;

typedef enum {
  CAPSWEEP_ALGORITHM_CSA = 0,
  CAPSWEEP_ALGORITHM_PSO = 1,
} CapsweepAlgorithm;

typedef struct CapsweepNetwork CapsweepNetwork;

typedef struct CapsweepOptimizerResult CapsweepOptimizerResult;

typedef struct CapsweepSolution CapsweepSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next capsweep call on the same thread.
const char *capsweep_last_error_message(void);

// Static, NUL-terminated crate version.
const char *capsweep_version(void);

// Builds a network from branch (`from,to,r_ohm,x_ohm`) and load
// (`bus,p_kw,q_kvar`) CSV text.
//
// # Safety
// `branches` and `loads` must be NUL-terminated strings; `out` must be
// valid for writes.
CapsweepStatus capsweep_network_parse(const char *branches,
                                      const char *loads,
                                      double base_kv,
                                      double base_mva,
                                      CapsweepNetwork **out);

// The built-in 33-bus feeder.
//
// # Safety
// `out` must be valid for writes.
CapsweepStatus capsweep_network_ieee33(double base_kv, double base_mva, CapsweepNetwork **out);

// Bus count, or 0 for a null handle.
//
// # Safety
// `network` must be null or a live handle.
size_t capsweep_network_bus_count(const CapsweepNetwork *network);

// # Safety
// `network` must be null or a handle not yet freed.
void capsweep_network_free(CapsweepNetwork *network);

// Solves the load flow with `count` capacitors (`buses[i]`, `sizes_kvar[i]`).
// A run that hits `max_iterations` still returns a solution; check
// [`capsweep_solution_converged`].
//
// # Safety
// `network` must be a live handle; the arrays must hold `count` elements
// (they may be null when `count` is 0); `out` must be valid for writes.
CapsweepStatus capsweep_loadflow_solve(const CapsweepNetwork *network,
                                       const size_t *buses,
                                       const double *sizes_kvar,
                                       size_t count,
                                       double tolerance_pu,
                                       size_t max_iterations,
                                       CapsweepSolution **out);

// # Safety
// `solution` must be null or a live handle.
bool capsweep_solution_converged(const CapsweepSolution *solution);

// # Safety
// `solution` must be null or a live handle.
size_t capsweep_solution_iterations(const CapsweepSolution *solution);

// Total active loss in kW, NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double capsweep_solution_p_loss_kw(const CapsweepSolution *solution);

// # Safety
// `solution` must be null or a live handle.
double capsweep_solution_q_loss_kvar(const CapsweepSolution *solution);

// # Safety
// `solution` must be null or a live handle.
double capsweep_solution_voltage_deviation(const CapsweepSolution *solution);

// # Safety
// `solution` must be null or a live handle.
double capsweep_solution_min_vsi(const CapsweepSolution *solution);

// Magnitude (p.u.) and angle (radians) of bus `bus` (1-based).
//
// # Safety
// `solution` must be a live handle; `magnitude` and `angle_rad` must be
// valid for writes.
CapsweepStatus capsweep_solution_voltage(const CapsweepSolution *solution,
                                         size_t bus,
                                         double *magnitude,
                                         double *angle_rad);

// # Safety
// `solution` must be null or a handle not yet freed.
void capsweep_solution_free(CapsweepSolution *solution);

// Searches for `n_capacitors` banks with default weights and solver
// settings. Sizes range up to the network's total reactive load.
//
// # Safety
// `network` must be a live handle; `out` must be valid for writes.
CapsweepStatus capsweep_optimize(const CapsweepNetwork *network,
                                 CapsweepAlgorithm algorithm,
                                 size_t n_capacitors,
                                 size_t max_iter,
                                 uint64_t seed,
                                 CapsweepOptimizerResult **out);

// # Safety
// `result` must be null or a live handle.
double capsweep_result_best_cost(const CapsweepOptimizerResult *result);

// # Safety
// `result` must be null or a live handle.
bool capsweep_result_feasible(const CapsweepOptimizerResult *result);

// # Safety
// `result` must be null or a live handle.
size_t capsweep_result_placement_count(const CapsweepOptimizerResult *result);

// # Safety
// `result` must be a live handle; `bus` and `size_kvar` must be valid for
// writes.
CapsweepStatus capsweep_result_placement(const CapsweepOptimizerResult *result,
                                         size_t index,
                                         size_t *bus,
                                         double *size_kvar);

// Copies up to `capacity` best-cost values, one per iteration, into
// `buffer` and returns the full history length.
//
// # Safety
// `result` must be null or a live handle; `buffer` must hold `capacity`
// elements or be null when `capacity` is 0.
size_t capsweep_result_history(const CapsweepOptimizerResult *result,
                               double *buffer,
                               size_t capacity);

// # Safety
// `result` must be null or a handle not yet freed.
void capsweep_result_free(CapsweepOptimizerResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAPSWEEP_H */
