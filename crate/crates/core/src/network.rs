//! Radial feeder data: parsing, topology validation and per-unit scaling.
//!
//! Bus 1 is always the substation (slack) bus. Branch rows may be listed in
//! any order and in either orientation; validation orients every branch from
//! parent to child and stores them sorted by receiving bus, so two tables
//! that differ only in row order produce identical networks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::NetworkError;

/// Id of the substation bus.
pub const SLACK_BUS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub p_load_kw: f64,
    pub q_load_kvar: f64,
    pub is_slack: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
}

/// One row of the load table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Load {
    pub bus: usize,
    pub p_kw: f64,
    pub q_kvar: f64,
}

/// Voltage and power bases used for per-unit scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemBase {
    pub kv: f64,
    pub mva: f64,
}

impl SystemBase {
    pub fn new(kv: f64, mva: f64) -> Result<Self, NetworkError> {
        if !(kv.is_finite() && kv > 0.0 && mva.is_finite() && mva > 0.0) {
            return Err(NetworkError::InvalidBase { kv, mva });
        }
        Ok(Self { kv, mva })
    }

    /// Base impedance in ohm.
    pub fn z_base(&self) -> f64 {
        self.kv * self.kv / self.mva
    }

    /// Base power in kW (equivalently kvar).
    pub fn s_base_kva(&self) -> f64 {
        1000.0 * self.mva
    }
}

/// Parsed but not yet validated feeder tables.
#[derive(Debug, Clone)]
pub struct RawFeeder {
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    pub base: SystemBase,
}

fn parse_rows<const N: usize>(
    table: &'static str,
    text: &str,
) -> Result<Vec<(usize, [f64; N])>, NetworkError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != N {
            return Err(NetworkError::Parse {
                table,
                line,
                message: format!("expected {N} columns, found {}", fields.len()),
            });
        }
        let mut values = [0.0; N];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|_| NetworkError::Parse {
                table,
                line,
                message: format!("non-numeric field {field:?}"),
            })?;
            if !slot.is_finite() {
                return Err(NetworkError::Parse {
                    table,
                    line,
                    message: format!("non-finite field {field:?}"),
                });
            }
        }
        rows.push((line, values));
    }
    Ok(rows)
}

fn parse_bus_id(table: &'static str, line: usize, value: f64) -> Result<usize, NetworkError> {
    if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(NetworkError::Parse {
            table,
            line,
            message: format!("invalid bus id {value}"),
        });
    }
    Ok(value as usize)
}

/// Parses `from_bus,to_bus,r_ohm,x_ohm` rows. Row-local checks (self loops,
/// impedance signs) happen here so the error can carry the line number.
pub fn parse_branch_table(text: &str) -> Result<Vec<Branch>, NetworkError> {
    let mut branches = Vec::new();
    for (line, [f, t, r, x]) in parse_rows::<4>("branch", text)? {
        let from_bus = parse_bus_id("branch", line, f)?;
        let to_bus = parse_bus_id("branch", line, t)?;
        if from_bus == to_bus {
            return Err(NetworkError::SelfLoop { line, bus: from_bus });
        }
        if r < 0.0 || x < 0.0 || (r == 0.0 && x == 0.0) {
            return Err(NetworkError::InvalidImpedance { line, r_ohm: r, x_ohm: x });
        }
        branches.push(Branch { from_bus, to_bus, r_ohm: r, x_ohm: x });
    }
    Ok(branches)
}

/// Parses `bus,p_kw,q_kvar` rows.
pub fn parse_load_table(text: &str) -> Result<Vec<Load>, NetworkError> {
    let mut loads = Vec::new();
    for (line, [b, p, q]) in parse_rows::<3>("load", text)? {
        let bus = parse_bus_id("load", line, b)?;
        if p < 0.0 || q < 0.0 {
            return Err(NetworkError::NegativeLoad { line, bus });
        }
        loads.push(Load { bus, p_kw: p, q_kvar: q });
    }
    Ok(loads)
}

/// Parses both tables and validates the result as a radial feeder.
pub fn parse_network(
    branch_table: &str,
    load_table: &str,
    base_kv: f64,
    base_mva: f64,
) -> Result<Network, NetworkError> {
    let base = SystemBase::new(base_kv, base_mva)?;
    let raw = RawFeeder {
        branches: parse_branch_table(branch_table)?,
        loads: parse_load_table(load_table)?,
        base,
    };
    validate_radial(raw)
}

/// A validated radial feeder rooted at [`SLACK_BUS`].
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    base: SystemBase,
    buses: Vec<Bus>,
    /// Oriented parent -> child, sorted by `to_bus`.
    branches: Vec<Branch>,
    parent: Vec<Option<usize>>,
    parent_branch: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    levels: Vec<Vec<usize>>,
    /// Bus indices (0-based) in root-first level order.
    order: Vec<usize>,
}

/// Builds the parent map and level structure, rejecting anything that is
/// not a single tree rooted at the slack bus.
pub fn validate_radial(raw: RawFeeder) -> Result<Network, NetworkError> {
    let RawFeeder { branches, loads, base } = raw;
    if branches.is_empty() {
        return Err(NetworkError::NoBranches);
    }
    let nb = branches
        .iter()
        .map(|b| b.from_bus.max(b.to_bus))
        .max()
        .unwrap_or(SLACK_BUS);

    let mut seen_pairs = BTreeSet::new();
    for b in &branches {
        let key = (b.from_bus.min(b.to_bus), b.from_bus.max(b.to_bus));
        if !seen_pairs.insert(key) {
            return Err(NetworkError::DuplicateBranch { from_bus: b.from_bus, to_bus: b.to_bus });
        }
    }

    // Union-find in input order: the first branch closing a loop is the offender.
    let mut uf: Vec<usize> = (0..nb).collect();
    fn find(uf: &mut [usize], mut i: usize) -> usize {
        while uf[i] != i {
            uf[i] = uf[uf[i]];
            i = uf[i];
        }
        i
    }
    for b in &branches {
        let (a, c) = (find(&mut uf, b.from_bus - 1), find(&mut uf, b.to_bus - 1));
        if a == c {
            return Err(NetworkError::Cycle { from_bus: b.from_bus, to_bus: b.to_bus });
        }
        uf[a] = c;
    }

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nb];
    for (k, b) in branches.iter().enumerate() {
        adjacency[b.from_bus - 1].push((b.to_bus - 1, k));
        adjacency[b.to_bus - 1].push((b.from_bus - 1, k));
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    let mut parent = vec![None; nb];
    let mut parent_input_branch = vec![None; nb];
    let mut depth = vec![usize::MAX; nb];
    let mut levels: Vec<Vec<usize>> = vec![vec![SLACK_BUS]];
    depth[SLACK_BUS - 1] = 0;
    let mut frontier = vec![SLACK_BUS - 1];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, k) in &adjacency[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    parent[v] = Some(u);
                    parent_input_branch[v] = Some(k);
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        if !next.is_empty() {
            levels.push(next.iter().map(|&i| i + 1).collect());
        }
        frontier = next;
    }
    if let Some(i) = depth.iter().position(|&d| d == usize::MAX) {
        return Err(NetworkError::Disconnected { bus: i + 1 });
    }

    let mut oriented = Vec::with_capacity(nb - 1);
    let mut parent_branch = vec![None; nb];
    for child in 1..nb {
        let (Some(p), Some(k)) = (parent[child], parent_input_branch[child]) else {
            continue;
        };
        let src = branches[k];
        parent_branch[child] = Some(oriented.len());
        oriented.push(Branch { from_bus: p + 1, to_bus: child + 1, r_ohm: src.r_ohm, x_ohm: src.x_ohm });
    }
    debug_assert_eq!(oriented.len(), nb - 1);

    let mut buses: Vec<Bus> = (1..=nb)
        .map(|id| Bus { id, p_load_kw: 0.0, q_load_kvar: 0.0, is_slack: id == SLACK_BUS })
        .collect();
    let mut loaded = BTreeSet::new();
    for load in loads {
        if load.bus > nb {
            return Err(NetworkError::UnknownLoadBus { bus: load.bus });
        }
        if !loaded.insert(load.bus) {
            return Err(NetworkError::DuplicateLoad { bus: load.bus });
        }
        if load.bus == SLACK_BUS && (load.p_kw != 0.0 || load.q_kvar != 0.0) {
            return Err(NetworkError::SlackLoad);
        }
        let bus = &mut buses[load.bus - 1];
        bus.p_load_kw = load.p_kw;
        bus.q_load_kvar = load.q_kvar;
    }

    let mut children = vec![Vec::new(); nb];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let order = levels.iter().flatten().map(|&id| id - 1).collect();

    Ok(Network { base, buses, branches: oriented, parent, parent_branch, children, levels, order })
}

impl Network {
    pub fn base(&self) -> SystemBase {
        self.base
    }

    /// Same topology and loads on a different base.
    pub fn with_base(&self, base: SystemBase) -> Network {
        Network { base, ..self.clone() }
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn bus(&self, id: usize) -> Option<&Bus> {
        id.checked_sub(1).and_then(|i| self.buses.get(i))
    }

    /// Branches oriented parent to child, sorted by receiving bus.
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Largest bus id, the upper limit for capacitor locations.
    pub fn max_bus_id(&self) -> usize {
        self.buses.len()
    }

    pub fn parent_of(&self, id: usize) -> Option<usize> {
        self.parent.get(id.checked_sub(1)?).copied().flatten().map(|i| i + 1)
    }

    /// Index into [`Network::branches`] of the branch feeding `id`.
    pub fn feeding_branch(&self, id: usize) -> Option<usize> {
        self.parent_branch.get(id.checked_sub(1)?).copied().flatten()
    }

    pub fn children_of(&self, id: usize) -> Vec<usize> {
        id.checked_sub(1)
            .and_then(|i| self.children.get(i))
            .map(|c| c.iter().map(|&i| i + 1).collect())
            .unwrap_or_default()
    }

    /// Bus ids grouped by depth, root first.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn total_load_kw(&self) -> f64 {
        self.buses.iter().map(|b| b.p_load_kw).sum()
    }

    pub fn total_load_kvar(&self) -> f64 {
        self.buses.iter().map(|b| b.q_load_kvar).sum()
    }

    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn parent_index(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub(crate) fn parent_branch_index(&self, i: usize) -> Option<usize> {
        self.parent_branch[i]
    }

    /// Text form used for equality checks and fingerprints. Independent of
    /// input row order.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "base {:?} {:?}", self.base.kv, self.base.mva);
        for b in &self.branches {
            let _ = writeln!(out, "branch {} {} {:?} {:?}", b.from_bus, b.to_bus, b.r_ohm, b.x_ohm);
        }
        for b in &self.buses {
            let _ = writeln!(out, "bus {} {:?} {:?}", b.id, b.p_load_kw, b.q_load_kvar);
        }
        out
    }

    /// SHA-256 of [`Network::canonical_string`], hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_string().as_bytes()))
    }

    pub fn to_per_unit(&self) -> PerUnitNetwork {
        to_per_unit(self)
    }
}

/// Network with impedances and loads scaled to per unit. The slack bus is
/// held at 1.0 p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct PerUnitNetwork {
    network: Network,
    z: Vec<Complex64>,
    load: Vec<Complex64>,
}

pub fn to_per_unit(network: &Network) -> PerUnitNetwork {
    let z_base = network.base.z_base();
    let s_base = network.base.s_base_kva();
    PerUnitNetwork {
        z: network
            .branches
            .iter()
            .map(|b| Complex64::new(b.r_ohm / z_base, b.x_ohm / z_base))
            .collect(),
        load: network
            .buses
            .iter()
            .map(|b| Complex64::new(b.p_load_kw / s_base, b.q_load_kvar / s_base))
            .collect(),
        network: network.clone(),
    }
}

impl PerUnitNetwork {
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn base(&self) -> SystemBase {
        self.network.base
    }

    pub fn bus_count(&self) -> usize {
        self.network.bus_count()
    }

    /// Branch impedances in p.u., indexed like [`Network::branches`].
    pub fn impedances(&self) -> &[Complex64] {
        &self.z
    }

    /// Complex load per bus in p.u., indexed by `bus id - 1`.
    pub fn loads(&self) -> &[Complex64] {
        &self.load
    }

    pub fn slack_voltage(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// Converts p.u. quantities back to (branches in ohm, per-bus loads in kW/kvar).
    pub fn to_physical(&self) -> (Vec<Branch>, Vec<Load>) {
        let z_base = self.network.base.z_base();
        let s_base = self.network.base.s_base_kva();
        let branches = self
            .network
            .branches
            .iter()
            .zip(&self.z)
            .map(|(b, z)| Branch { r_ohm: z.re * z_base, x_ohm: z.im * z_base, ..*b })
            .collect();
        let loads = self
            .load
            .iter()
            .enumerate()
            .map(|(i, s)| Load { bus: i + 1, p_kw: s.re * s_base, q_kvar: s.im * s_base })
            .collect();
        (branches, loads)
    }
}
