use thiserror::Error;

/// Problems with feeder tables or topology.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("{table} table, line {line}: {message}")]
    Parse { table: &'static str, line: usize, message: String },
    #[error("invalid system base: {kv} kV, {mva} MVA (both must be positive)")]
    InvalidBase { kv: f64, mva: f64 },
    #[error("branch table, line {line}: branch from bus {bus} to itself")]
    SelfLoop { line: usize, bus: usize },
    #[error("branch table, line {line}: invalid impedance r={r_ohm} x={x_ohm}")]
    InvalidImpedance { line: usize, r_ohm: f64, x_ohm: f64 },
    #[error("load table, line {line}: negative load at bus {bus}")]
    NegativeLoad { line: usize, bus: usize },
    #[error("network has no branches")]
    NoBranches,
    #[error("duplicate branch between buses {from_bus} and {to_bus}")]
    DuplicateBranch { from_bus: usize, to_bus: usize },
    #[error("branch {from_bus}-{to_bus} closes a loop; feeder must be radial")]
    Cycle { from_bus: usize, to_bus: usize },
    #[error("bus {bus} is not connected to the substation")]
    Disconnected { bus: usize },
    #[error("load given for unknown bus {bus}")]
    UnknownLoadBus { bus: usize },
    #[error("more than one load row for bus {bus}")]
    DuplicateLoad { bus: usize },
    #[error("the substation bus cannot carry load")]
    SlackLoad,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadFlowError {
    #[error("voltage collapsed to zero at bus {bus}")]
    VoltageCollapse { bus: usize },
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
}
