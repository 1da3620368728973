//! Balanced transportation problem solved as a min-cost flow with successive
//! shortest augmenting paths.
//!
//! Given per-station surpluses, deficits and a travel-cost matrix, move
//! `min(sum surplus, sum deficit)` vehicles at least total cost. The flow
//! network is source -> surplus stations -> deficit stations -> sink, so every
//! augmentation carries an integral amount and the optimum is integral.
//!
//! Costs are quantised to milliseconds. To make the answer unique, every arc
//! cost is scaled by a factor larger than the largest possible tie-break term
//! and the arc's rank in (from, to) order is added. Among optimal plans the
//! solver therefore returns the one that places flow on the lexicographically
//! smallest station pairs.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Vehicles moved from one station to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Shipment {
    pub from: usize,
    pub to: usize,
    pub count: u32,
}

/// Total cost of `shipments` under `cost`.
pub fn shipment_cost(shipments: &[Shipment], cost: &[Vec<f64>]) -> f64 {
    shipments
        .iter()
        .map(|s| s.count as f64 * cost[s.from][s.to])
        .sum()
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: i128,
}

struct FlowGraph {
    adj: Vec<Vec<Arc>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    fn add_arc(&mut self, u: usize, v: usize, cap: i64, cost: i128) -> (usize, usize) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Arc { to: v, rev: ru, cap, cost });
        self.adj[v].push(Arc {
            to: u,
            rev: rv,
            cap: 0,
            cost: -cost,
        });
        (u, rv)
    }

    /// Push up to `limit` units from `s` to `t` along successive cheapest
    /// residual paths (Bellman-Ford queue variant, FIFO order for
    /// determinism). Returns the amount pushed.
    fn min_cost_flow(&mut self, s: usize, t: usize, limit: i64) -> i64 {
        let n = self.adj.len();
        let mut pushed = 0;
        while pushed < limit {
            let mut dist = vec![i128::MAX; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut queued = vec![false; n];
            let mut queue = VecDeque::new();
            dist[s] = 0;
            queue.push_back(s);
            queued[s] = true;
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                for (i, a) in self.adj[u].iter().enumerate() {
                    if a.cap > 0 && dist[u] + a.cost < dist[a.to] {
                        dist[a.to] = dist[u] + a.cost;
                        prev[a.to] = Some((u, i));
                        if !queued[a.to] {
                            queued[a.to] = true;
                            queue.push_back(a.to);
                        }
                    }
                }
            }
            if dist[t] == i128::MAX {
                break;
            }
            let mut amount = limit - pushed;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                amount = amount.min(self.adj[u][i].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                self.adj[u][i].cap -= amount;
                let r = self.adj[u][i].rev;
                self.adj[v][r].cap += amount;
                v = u;
            }
            pushed += amount;
        }
        pushed
    }
}

/// Solve one balanced transportation instance.
///
/// A station listed with both a surplus and a deficit is netted first; no
/// vehicle is ever sent from a station to itself. Shipments are returned in
/// (from, to) order and only for pairs carrying at least one vehicle.
pub fn solve_transportation(surplus: &[u32], deficit: &[u32], cost: &[Vec<f64>]) -> Result<Vec<Shipment>> {
    let n = surplus.len();
    if deficit.len() != n || cost.len() != n || cost.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig("surplus, deficit and cost dimensions differ".into()));
    }
    let mut sup: Vec<i64> = surplus.iter().map(|&x| x as i64).collect();
    let mut dem: Vec<i64> = deficit.iter().map(|&x| x as i64).collect();
    for i in 0..n {
        let both = sup[i].min(dem[i]);
        sup[i] -= both;
        dem[i] -= both;
    }
    let total = sup.iter().sum::<i64>().min(dem.iter().sum::<i64>());
    if total == 0 {
        return Ok(Vec::new());
    }

    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut g = FlowGraph::new(2 * n + 2);
    let scale = total as i128 * (n as i128) * (n as i128) + 1;
    let mut lanes = Vec::new();
    for i in 0..n {
        if sup[i] > 0 {
            g.add_arc(source, i, sup[i], 0);
        }
    }
    for i in 0..n {
        if sup[i] == 0 {
            continue;
        }
        for j in 0..n {
            if i == j || dem[j] == 0 {
                continue;
            }
            let c = cost[i][j];
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "cost from station {i} to {j} must be finite and non-negative, got {c}"
                )));
            }
            let millis = (c * 1000.0).round() as i128;
            let rank = (i * n + j) as i128;
            let arc = g.add_arc(i, n + j, total, millis * scale + rank);
            lanes.push((i, j, arc));
        }
    }
    for j in 0..n {
        if dem[j] > 0 {
            g.add_arc(n + j, sink, dem[j], 0);
        }
    }

    let pushed = g.min_cost_flow(source, sink, total);
    debug_assert_eq!(pushed, total);

    let mut out: Vec<Shipment> = lanes
        .into_iter()
        .filter_map(|(i, j, (u, k))| {
            let used = total - g.adj[u][k].cap;
            (used > 0).then(|| Shipment {
                from: i,
                to: j,
                count: used as u32,
            })
        })
        .collect();
    out.sort();
    Ok(out)
}
