//! Helpers shared by the integration test targets: a random radial feeder
//! generator and a nodal-admittance Gauss-Seidel solver that shares no code
//! with the sweep.

#![allow(dead_code)]

use capsweep::network::{parse_network, Network};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct RandomFeeder {
    pub branches: String,
    pub loads: String,
    pub base_kv: f64,
    pub network: Network,
}

/// Random tree on `2..=max_buses` buses. Bus labels other than the slack
/// are shuffled so parents do not always carry smaller ids.
pub fn random_feeder(seed: u64, max_buses: usize) -> RandomFeeder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_buses);
    let mut labels: Vec<usize> = (2..=n).collect();
    labels.shuffle(&mut rng);
    let label = |k: usize| if k == 0 { 1 } else { labels[k - 1] };
    let mut branches = String::new();
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let r: f64 = rng.random_range(0.05..2.0);
        let x: f64 = rng.random_range(0.05..2.0);
        branches.push_str(&format!("{},{},{r},{x}\n", label(parent), label(k)));
    }
    let mut loads = String::new();
    for bus in 2..=n {
        if rng.random_bool(0.8) {
            let p: f64 = rng.random_range(0.0..400.0);
            let q: f64 = rng.random_range(0.0..300.0);
            loads.push_str(&format!("{bus},{p},{q}\n"));
        }
    }
    let base_kv = rng.random_range(4.0..15.0);
    let network = parse_network(&branches, &loads, base_kv, 1.0).expect("generated feeder is radial");
    RandomFeeder { branches, loads, base_kv, network }
}

/// Bus voltages from Gauss-Seidel on the bus admittance matrix. `demand`
/// is the per-bus complex power drawn (p.u.), slack at index 0 held at 1.
pub fn gauss_seidel(network: &Network, demand: &[Complex64]) -> Vec<Complex64> {
    let n = network.bus_count();
    let z_base = network.base().z_base();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for b in network.branches() {
        let (i, j) = (b.from_bus - 1, b.to_bus - 1);
        let yb = Complex64::new(1.0, 0.0) / (Complex64::new(b.r_ohm, b.x_ohm) / z_base);
        y[i][i] += yb;
        y[j][j] += yb;
        y[i][j] -= yb;
        y[j][i] -= yb;
    }
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    for _ in 0..200_000 {
        let mut delta: f64 = 0.0;
        for k in 1..n {
            let mut sum = -demand[k].conj() / v[k].conj();
            for j in 0..n {
                if j != k {
                    sum -= y[k][j] * v[j];
                }
            }
            let next = sum / y[k][k];
            delta = delta.max((next - v[k]).norm());
            v[k] = next;
        }
        if delta < 1e-15 {
            break;
        }
    }
    v
}
