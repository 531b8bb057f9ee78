//! The 33-bus test feeder shipped with the crate (32 branches, 3715 kW /
//! 2300 kvar total load) and the cited comparison rows.

use crate::error::NetworkError;
use crate::network::{parse_network, Network};

pub const IEEE33_BRANCHES: &str = include_str!("../data/ieee33_branches.csv");
pub const IEEE33_LOADS: &str = include_str!("../data/ieee33_loads.csv");
pub const TABLE1_CITED: &str = include_str!("../data/table1_cited.csv");

pub fn ieee33(base_kv: f64, base_mva: f64) -> Result<Network, NetworkError> {
    parse_network(IEEE33_BRANCHES, IEEE33_LOADS, base_kv, base_mva)
}
