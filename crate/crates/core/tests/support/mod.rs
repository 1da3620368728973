//! Brute-force oracles and random fixtures shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use modsim::network::{EdgeId, Node, NodeId, RoadEdge, RoadNetwork};
use modsim::sim::{EdgeOccupancyLog, TripType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple directed graph with up to `max_nodes` nodes and mean
/// out-degree below 2.5.
/// Lengths are whole meters and speeds whole m/s so ties do happen.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> RoadNetwork {
    let n = rng.random_range(2..=max_nodes);
    let nodes = (0..n as u64)
        .map(|i| Node { id: NodeId(i), lat: rng.random_range(-1.0..1.0), lon: rng.random_range(-1.0..1.0) })
        .collect();
    let p = rng.random_range(1.0..2.5) / (n - 1) as f64;
    let mut edges = Vec::new();
    for a in 0..n as u64 {
        for b in 0..n as u64 {
            if a != b && rng.random::<f64>() < p {
                edges.push(RoadEdge {
                    id: EdgeId(edges.len() as u64 * 3 + 1),
                    from: NodeId(a),
                    to: NodeId(b),
                    length_m: rng.random_range(1..20) as f64 * 50.0,
                    lanes: 1,
                    speed_mps: rng.random_range(5..15) as f64,
                });
            }
        }
    }
    RoadNetwork::new(nodes, edges).unwrap()
}

/// Minimum travel time over every simple path, accumulated edge by edge from
/// the origin. `None` when `to` is unreachable.
pub fn brute_force_travel_time(net: &RoadNetwork, from: NodeId, to: NodeId) -> Option<f64> {
    fn dfs(net: &RoadNetwork, at: NodeId, to: NodeId, acc: f64, seen: &mut Vec<NodeId>, best: &mut Option<f64>) {
        if at == to {
            if best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        for e in net.outgoing(at) {
            if !seen.contains(&e.to) {
                seen.push(e.to);
                dfs(net, e.to, to, acc + e.travel_time_s(), seen, best);
                seen.pop();
            }
        }
    }
    let mut best = None;
    dfs(net, from, to, 0.0, &mut vec![from], &mut best);
    best
}

/// Minimum of `sum x[i][j] * cost[i][j]` over every integral flow moving
/// `min(sum surplus, sum deficit)` units within the row and column limits.
pub fn brute_force_transport(surplus: &[u32], deficit: &[u32], cost: &[Vec<f64>]) -> f64 {
    let n = surplus.len();
    let total = surplus.iter().sum::<u32>().min(deficit.iter().sum());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    fn go(
        k: usize,
        cells: &[(usize, usize)],
        left_s: &mut [u32],
        left_d: &mut [u32],
        moved: u32,
        total: u32,
        acc: f64,
        cost: &[Vec<f64>],
        best: &mut f64,
    ) {
        if moved == total {
            *best = best.min(acc);
            return;
        }
        if k == cells.len() {
            return;
        }
        let (i, j) = cells[k];
        let cap = left_s[i].min(left_d[j]).min(total - moved);
        for x in 0..=cap {
            left_s[i] -= x;
            left_d[j] -= x;
            go(k + 1, cells, left_s, left_d, moved + x, total, acc + x as f64 * cost[i][j], cost, best);
            left_s[i] += x;
            left_d[j] += x;
        }
    }
    let mut best = f64::INFINITY;
    go(0, &cells, &mut surplus.to_vec(), &mut deficit.to_vec(), 0, total, 0.0, cost, &mut best);
    best
}

/// A vehicle on `edge` during `[enter, exit)` whole seconds.
#[derive(Debug, Clone, Copy)]
pub struct Traversal {
    pub edge: EdgeId,
    pub enter: u64,
    pub exit: u64,
    pub trip_type: TripType,
}

pub fn random_traversals(rng: &mut ChaCha8Rng, edges: &[EdgeId], max: usize) -> Vec<Traversal> {
    let count = rng.random_range(0..=max);
    (0..count)
        .map(|_| {
            let enter = rng.random_range(0..7200u64);
            Traversal {
                edge: edges[rng.random_range(0..edges.len())],
                enter,
                exit: enter + rng.random_range(0..900u64),
                trip_type: TripType::ALL[rng.random_range(0..4)],
            }
        })
        .collect()
}

pub fn log_of(traversals: &[Traversal], window_s: f64) -> EdgeOccupancyLog {
    let mut log = EdgeOccupancyLog::new(window_s).unwrap();
    for t in traversals {
        log.record_traversal(t.edge, t.enter as f64, t.exit as f64, t.trip_type);
    }
    log
}

/// Density by 1 Hz sampling: a vehicle counts in second `s` when it is on
/// the edge at `s + 0.5`.
pub fn sampled_densities(
    traversals: &[Traversal],
    net: &RoadNetwork,
    window_s: u64,
) -> BTreeMap<(EdgeId, usize, TripType), f64> {
    let mut present: BTreeMap<(EdgeId, usize, TripType), u64> = BTreeMap::new();
    for v in traversals {
        for s in v.enter..v.exit + 1 {
            let t = s as f64 + 0.5;
            if (v.enter as f64) <= t && t < v.exit as f64 {
                *present.entry((v.edge, (s / window_s) as usize, v.trip_type)).or_default() += 1;
            }
        }
    }
    present
        .into_iter()
        .map(|(k, n)| {
            let e = net.edge(k.0).unwrap();
            (k, n as f64 / (window_s as f64 * e.length_m * e.lanes as f64))
        })
        .collect()
}
