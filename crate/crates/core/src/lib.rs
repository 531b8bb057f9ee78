//! Load flow and capacitor placement for radial distribution feeders.
//!
//! The solver is a backward/forward sweep over the feeder tree. Capacitor
//! plans are searched with a crow search optimizer, with particle swarm
//! available as a baseline over the same encoding and objective.

pub mod csa;
pub mod data;
pub mod error;
pub mod loadflow;
pub mod network;
pub mod objective;
pub mod pso;
pub mod report;
pub mod scenario;
pub mod search;

pub use error::{LoadFlowError, NetworkError};
pub use loadflow::{solve_loadflow, LoadFlowSolution, SolverSettings};
pub use network::{parse_network, validate_radial, Network, PerUnitNetwork, SystemBase};
pub use objective::{CapacitorPlan, ConstraintReport, ObjectiveWeights, Placement};
pub use search::{ConvergenceHistory, OptimizerRun};
