//! Directed road graph: loading, shortest paths and coordinate snapping.
//!
//! Edges are strictly directed, so a two-way street is two edges. Every query
//! is pure and the network is immutable after construction, so one instance is
//! shared freely between threads.
//!
//! Shortest paths minimise free-flow travel time. Ties between equally fast
//! routes are broken towards the smaller id of the final-hop edge, which makes
//! every path (and therefore every simulation run) reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_m, EARTH_RADIUS_M};

/// Default uniform speed limit applied to every edge, km/h.
pub const DEFAULT_SPEED_KMH: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub lanes: u32,
    pub speed_mps: f64,
}

impl RoadEdge {
    /// Free-flow traversal time in seconds.
    pub fn travel_time_s(&self) -> f64 {
        self.length_m / self.speed_mps
    }
}

/// A route through the network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Path {
    pub edge_ids: Vec<EdgeId>,
    pub distance_m: f64,
    pub travel_time_s: f64,
}

impl Path {
    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }
}

/// Immutable directed road graph.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<RoadEdge>,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    // edge indices per node, ascending edge id
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    edge_from: Vec<usize>,
    edge_to: Vec<usize>,
    routable: Vec<bool>,
    // node indices ordered by (lat, id) for pruned nearest-node search
    lat_order: Vec<usize>,
}

impl RoadNetwork {
    /// Build and validate a network from in-memory parts.
    pub fn new(mut nodes: Vec<Node>, mut edges: Vec<RoadEdge>) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| e.id);

        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
                return Err(Error::InvalidNode {
                    node: n.id,
                    message: format!("coordinates ({}, {}) out of range", n.lat, n.lon),
                });
            }
            if node_index.insert(n.id, i).is_some() {
                return Err(Error::DuplicateNode(n.id));
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        let mut edge_from = Vec::with_capacity(edges.len());
        let mut edge_to = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let invalid = |message: String| Error::InvalidEdge {
                edge: e.id,
                message,
            };
            if !(e.length_m > 0.0 && e.length_m.is_finite()) {
                return Err(invalid(format!("length_m must be > 0, got {}", e.length_m)));
            }
            if e.lanes < 1 {
                return Err(invalid("lanes must be >= 1".into()));
            }
            if !(e.speed_mps > 0.0 && e.speed_mps.is_finite()) {
                return Err(invalid(format!("speed must be > 0, got {}", e.speed_mps)));
            }
            let from = *node_index.get(&e.from).ok_or(Error::DanglingEdge {
                edge: e.id,
                node: e.from,
            })?;
            let to = *node_index.get(&e.to).ok_or(Error::DanglingEdge {
                edge: e.id,
                node: e.to,
            })?;
            if from == to {
                return Err(invalid("self-loop".into()));
            }
            if edge_index.insert(e.id, i).is_some() {
                return Err(Error::DuplicateEdge(e.id));
            }
            out_edges[from].push(i);
            in_edges[to].push(i);
            edge_from.push(from);
            edge_to.push(to);
        }

        let mut lat_order: Vec<usize> = (0..nodes.len()).collect();
        lat_order.sort_by(|&a, &b| {
            nodes[a]
                .lat
                .total_cmp(&nodes[b].lat)
                .then(nodes[a].id.cmp(&nodes[b].id))
        });

        let mut net = Self {
            nodes,
            edges,
            node_index,
            edge_index,
            out_edges,
            in_edges,
            edge_from,
            edge_to,
            routable: Vec::new(),
            lat_order,
        };
        net.routable = net.largest_scc_mask();
        Ok(net)
    }

    /// Load `nodes.csv` and `edges.csv`. Each edge's speed becomes
    /// `min(declared, default)`, or the default when the column is absent or
    /// empty.
    pub fn load(nodes_path: &FsPath, edges_path: &FsPath, default_speed_kmh: f64) -> Result<Self> {
        if !(default_speed_kmh > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "default speed must be > 0, got {default_speed_kmh}"
            )));
        }
        let nodes = read_nodes(nodes_path)?;
        let edges = read_edges(edges_path, default_speed_kmh)?;
        let net = Self::new(nodes, edges)?;
        let outside: Vec<NodeId> = net
            .nodes
            .iter()
            .zip(&net.routable)
            .filter(|(_, &r)| !r)
            .map(|(n, _)| n.id)
            .collect();
        if !outside.is_empty() {
            let shown: Vec<String> = outside.iter().take(20).map(|n| n.to_string()).collect();
            log::warn!(
                "{} node(s) outside the largest strongly connected component: {}{}",
                outside.len(),
                shown.join(", "),
                if outside.len() > 20 { ", ..." } else { "" }
            );
        }
        Ok(net)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.node_index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RoadEdge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    /// Outgoing edges of `id`, ascending edge id.
    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &RoadEdge> + '_ {
        let list = self
            .node_index
            .get(&id)
            .map(|&i| self.out_edges[i].as_slice())
            .unwrap_or(&[]);
        list.iter().map(move |&e| &self.edges[e])
    }

    /// Whether the node belongs to the largest strongly connected component.
    pub fn is_routable(&self, id: NodeId) -> bool {
        self.node_index
            .get(&id)
            .is_some_and(|&i| self.routable[i])
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Result<usize> {
        self.node_index
            .get(&id)
            .copied()
            .ok_or(Error::UnknownNode(id))
    }

    /// Minimum-travel-time path from `from` to `to`.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<Path> {
        let s = self.index_of(from)?;
        let t = self.index_of(to)?;
        let search = self.search(s, Some(t));
        if !search.dist[t].is_finite() {
            return Err(Error::Unreachable { from, to });
        }
        Ok(self.path_from_preds(&search.pred, s, t))
    }

    /// Shortest-path tree rooted at `from`, covering every reachable node.
    pub fn shortest_path_tree(&self, from: NodeId) -> Result<ShortestPathTree<'_>> {
        let s = self.index_of(from)?;
        let search = self.search(s, None);
        Ok(ShortestPathTree {
            net: self,
            source: s,
            dist: search.dist,
            pred: search.pred,
        })
    }

    /// Travel time from every node to `to`, indexed like [`RoadNetwork::nodes`];
    /// `f64::INFINITY` where no path exists.
    pub fn travel_times_to(&self, to: NodeId) -> Result<Vec<f64>> {
        let t = self.index_of(to)?;
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[t] = 0.0;
        heap.push(HeapItem { cost: 0.0, node: t });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            for &e in &self.in_edges[node] {
                let u = self.edge_from[e];
                let nd = cost + self.edges[e].travel_time_s();
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(HeapItem { cost: nd, node: u });
                }
            }
        }
        Ok(dist)
    }

    /// Travel-time matrix; entry `(i, j)` equals
    /// `shortest_path(sources[i], targets[j]).travel_time_s`, with
    /// `f64::INFINITY` for unreachable pairs. Rows are computed in parallel.
    pub fn travel_time_matrix(&self, sources: &[NodeId], targets: &[NodeId]) -> Result<Vec<Vec<f64>>> {
        let src: Vec<usize> = sources.iter().map(|&s| self.index_of(s)).collect::<Result<_>>()?;
        let tgt: Vec<usize> = targets.iter().map(|&t| self.index_of(t)).collect::<Result<_>>()?;
        Ok(src
            .par_iter()
            .map(|&s| {
                let search = self.search(s, None);
                tgt.iter().map(|&t| search.dist[t]).collect()
            })
            .collect())
    }

    /// Node closest to the given coordinates by great-circle distance; ties go
    /// to the smaller node id.
    pub fn nearest_node(&self, lat: f64, lon: f64) -> Result<NodeId> {
        self.nearest_node_where(lat, lon, |_| true)
            .ok_or(Error::EmptyNetwork)
    }

    /// Closest node inside the largest strongly connected component.
    pub fn nearest_routable_node(&self, lat: f64, lon: f64) -> Result<NodeId> {
        self.nearest_node_where(lat, lon, |n| self.is_routable(n.id))
            .ok_or(Error::EmptyNetwork)
    }

    /// Nearest node among those accepted by `accept`.
    ///
    /// Nodes are visited outward from the query latitude. The latitude gap
    /// alone is a lower bound on the great-circle distance, so the scan stops
    /// once that gap exceeds the best distance found.
    pub fn nearest_node_where(&self, lat: f64, lon: f64, accept: impl Fn(&Node) -> bool) -> Option<NodeId> {
        let order = &self.lat_order;
        let start = order.partition_point(|&i| self.nodes[i].lat < lat);
        let mut best: Option<(f64, NodeId)> = None;
        let mut down = start;
        let mut up = start;
        let bound = |i: usize| EARTH_RADIUS_M * (self.nodes[i].lat - lat).abs().to_radians();
        let beyond = |gap: f64, best: &Option<(f64, NodeId)>| match best {
            Some((d, _)) => gap > d * (1.0 + 1e-12) + 1e-9,
            None => false,
        };
        loop {
            let up_gap = (up < order.len()).then(|| bound(order[up]));
            let down_gap = (down > 0).then(|| bound(order[down - 1]));
            let pick_up = match (up_gap, down_gap) {
                (None, None) => break,
                (Some(u), Some(d)) => u <= d,
                (Some(_), None) => true,
                (None, Some(_)) => false,
            };
            let (idx, gap) = if pick_up {
                up += 1;
                (order[up - 1], up_gap.unwrap())
            } else {
                down -= 1;
                (order[down], down_gap.unwrap())
            };
            if beyond(gap, &best) {
                break;
            }
            let node = &self.nodes[idx];
            if !accept(node) {
                continue;
            }
            let d = haversine_m(lat, lon, node.lat, node.lon);
            let better = match best {
                None => true,
                Some((bd, bid)) => d < bd || (d == bd && node.id < bid),
            };
            if better {
                best = Some((d, node.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Accepted nodes sorted by great-circle distance, then id.
    pub fn nodes_by_distance(&self, lat: f64, lon: f64, accept: impl Fn(&Node) -> bool) -> Vec<NodeId> {
        let mut v: Vec<(f64, NodeId)> = self
            .nodes
            .iter()
            .filter(|n| accept(n))
            .map(|n| (haversine_m(lat, lon, n.lat, n.lon), n.id))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(_, id)| id).collect()
    }

    fn search(&self, source: usize, target: Option<usize>) -> Search {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem {
            cost: 0.0,
            node: source,
        });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if Some(node) == target {
                break;
            }
            for &e in &self.out_edges[node] {
                let v = self.edge_to[e];
                if done[v] {
                    continue;
                }
                let nd = cost + self.edges[e].travel_time_s();
                let take = nd < dist[v]
                    || (nd == dist[v] && pred[v].is_some_and(|p| self.edges[e].id < self.edges[p].id));
                if take {
                    let improved = nd < dist[v];
                    dist[v] = nd;
                    pred[v] = Some(e);
                    if improved {
                        heap.push(HeapItem { cost: nd, node: v });
                    }
                }
            }
        }
        Search { dist, pred }
    }

    fn path_from_preds(&self, pred: &[Option<usize>], source: usize, target: usize) -> Path {
        let mut rev = Vec::new();
        let mut cur = target;
        while cur != source {
            let e = pred[cur].expect("reachable node has a predecessor");
            rev.push(e);
            cur = self.edge_from[e];
        }
        rev.reverse();
        let mut path = Path::default();
        for e in rev {
            let edge = &self.edges[e];
            path.edge_ids.push(edge.id);
            path.distance_m += edge.length_m;
            path.travel_time_s += edge.travel_time_s();
        }
        path
    }

    fn largest_scc_mask(&self) -> Vec<bool> {
        use petgraph::graph::{DiGraph, NodeIndex};
        let n = self.nodes.len();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, self.edges.len());
        for _ in 0..n {
            g.add_node(());
        }
        for e in 0..self.edges.len() {
            g.add_edge(NodeIndex::new(self.edge_from[e]), NodeIndex::new(self.edge_to[e]), ());
        }
        let comps = petgraph::algo::tarjan_scc(&g);
        let mut mask = vec![false; n];
        // largest size; ties go to the component holding the smallest node id
        let best = comps.iter().max_by(|a, b| {
            a.len().cmp(&b.len()).then_with(|| {
                let ma = a.iter().map(|i| i.index()).min();
                let mb = b.iter().map(|i| i.index()).min();
                mb.cmp(&ma)
            })
        });
        if let Some(comp) = best {
            for i in comp {
                mask[i.index()] = true;
            }
        }
        mask
    }
}

/// One-to-all shortest paths from a fixed source.
#[derive(Debug, Clone)]
pub struct ShortestPathTree<'a> {
    net: &'a RoadNetwork,
    source: usize,
    dist: Vec<f64>,
    pred: Vec<Option<usize>>,
}

impl ShortestPathTree<'_> {
    /// Travel time to `to`, infinite when unreachable.
    pub fn travel_time_s(&self, to: NodeId) -> Result<f64> {
        Ok(self.dist[self.net.index_of(to)?])
    }

    /// Travel times indexed like [`RoadNetwork::nodes`].
    pub fn travel_times(&self) -> &[f64] {
        &self.dist
    }

    pub fn path_to(&self, to: NodeId) -> Result<Path> {
        let t = self.net.index_of(to)?;
        if !self.dist[t].is_finite() {
            return Err(Error::Unreachable {
                from: self.net.nodes[self.source].id,
                to,
            });
        }
        Ok(self.net.path_from_preds(&self.pred, self.source, t))
    }
}

struct Search {
    dist: Vec<f64>,
    pred: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on (cost, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    id: u64,
    from: u64,
    to: u64,
    length_m: f64,
    lanes: u32,
    #[serde(default)]
    speed_kmh: Option<f64>,
}

fn read_nodes(path: &FsPath) -> Result<Vec<Node>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::from_csv(path, e))?.clone();
    let mut nodes = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::from_csv(path, e))?;
        let row_no = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: NodeRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::malformed(path, row_no, e.to_string()))?;
        if !(-90.0..=90.0).contains(&row.lat) || !(-180.0..=180.0).contains(&row.lon) {
            return Err(Error::malformed(path, row_no, "coordinates out of range"));
        }
        nodes.push(Node {
            id: NodeId(row.id),
            lat: row.lat,
            lon: row.lon,
        });
    }
    Ok(nodes)
}

fn read_edges(path: &FsPath, default_speed_kmh: f64) -> Result<Vec<RoadEdge>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::from_csv(path, e))?.clone();
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::from_csv(path, e))?;
        let row_no = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: EdgeRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::malformed(path, row_no, e.to_string()))?;
        if !(row.length_m > 0.0) {
            return Err(Error::malformed(path, row_no, "length_m must be > 0"));
        }
        if row.lanes < 1 {
            return Err(Error::malformed(path, row_no, "lanes must be >= 1"));
        }
        let kmh = match row.speed_kmh {
            Some(s) if !(s > 0.0) => {
                return Err(Error::malformed(path, row_no, "speed_kmh must be > 0"))
            }
            Some(s) => s.min(default_speed_kmh),
            None => default_speed_kmh,
        };
        edges.push(RoadEdge {
            id: EdgeId(row.id),
            from: NodeId(row.from),
            to: NodeId(row.to),
            length_m: row.length_m,
            lanes: row.lanes,
            speed_mps: kmh / 3.6,
        });
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    fn edge(id: u64, from: u64, to: u64, len: f64) -> RoadEdge {
        RoadEdge {
            id: EdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            length_m: len,
            lanes: 1,
            speed_mps: DEFAULT_SPEED_KMH / 3.6,
        }
    }

    fn node(id: u64, lat: f64, lon: f64) -> Node {
        Node {
            id: NodeId(id),
            lat,
            lon,
        }
    }

    #[test]
    fn loads_single_edge_at_default_speed() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "nodes.csv", "id,lat,lon\n1,50.0,14.0\n2,50.001,14.0\n");
        let e = write(&dir, "edges.csv", "id,from,to,length_m,lanes\n10,1,2,111.2,1\n");
        let net = RoadNetwork::load(&n, &e, 40.0).unwrap();
        assert_eq!(net.edge_count(), 1);
        let speed = net.edge(EdgeId(10)).unwrap().speed_mps;
        assert!((speed - 11.111).abs() < 1e-3);
        assert_eq!(speed, 40.0 / 3.6);
    }

    #[test]
    fn declared_speed_is_capped_by_default() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "nodes.csv", "id,lat,lon\n1,50.0,14.0\n2,50.001,14.0\n3,50.002,14.0\n");
        let e = write(
            &dir,
            "edges.csv",
            "id,from,to,length_m,lanes,speed_kmh\n1,1,2,100,1,90\n2,2,3,100,2,20\n3,3,1,100,1,\n",
        );
        let net = RoadNetwork::load(&n, &e, 40.0).unwrap();
        assert_eq!(net.edge(EdgeId(1)).unwrap().speed_mps, 40.0 / 3.6);
        assert_eq!(net.edge(EdgeId(2)).unwrap().speed_mps, 20.0 / 3.6);
        assert_eq!(net.edge(EdgeId(3)).unwrap().speed_mps, 40.0 / 3.6);
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "nodes.csv", "id,lat,lon\n1,50.0,14.0\n2,50.001,14.0\n");
        let e = write(&dir, "edges.csv", "id,from,to,length_m,lanes\n1,1,99,100,1\n");
        match RoadNetwork::load(&n, &e, 40.0) {
            Err(Error::DanglingEdge { node, .. }) => assert_eq!(node, NodeId(99)),
            other => panic!("expected DanglingEdge, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "nodes.csv", "id,lat,lon\n1,50.0,14.0\n2,abc,14.0\n");
        let e = write(&dir, "edges.csv", "id,from,to,length_m,lanes\n");
        match RoadNetwork::load(&n, &e, 40.0) {
            Err(Error::MalformedFile { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected MalformedFile, got {other:?}"),
        }
    }

    #[test]
    fn zero_length_edge_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(&dir, "nodes.csv", "id,lat,lon\n1,50.0,14.0\n2,50.001,14.0\n");
        let e = write(&dir, "edges.csv", "id,from,to,length_m,lanes\n1,1,2,0,1\n");
        assert!(matches!(
            RoadNetwork::load(&n, &e, 40.0),
            Err(Error::MalformedFile { row: 2, .. })
        ));
    }

    #[test]
    fn square_grid_adjacency_matches_declared_edges() {
        // 1 2
        // 3 4, two-way on all four sides
        let nodes = vec![
            node(1, 50.001, 14.0),
            node(2, 50.001, 14.001),
            node(3, 50.0, 14.0),
            node(4, 50.0, 14.001),
        ];
        let pairs = [(1, 2), (2, 1), (1, 3), (3, 1), (2, 4), (4, 2), (3, 4), (4, 3)];
        let edges = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| edge(i as u64, a, b, 100.0))
            .collect();
        let net = RoadNetwork::new(nodes, edges).unwrap();
        for id in 1..=4 {
            let declared = pairs.iter().filter(|p| p.0 == id).count();
            assert_eq!(net.outgoing(NodeId(id)).count(), declared);
            assert_eq!(declared, 2);
        }
        assert!((1..=4).all(|i| net.is_routable(NodeId(i))));
    }

    #[test]
    fn identity_path_is_empty() {
        let net = RoadNetwork::new(vec![node(1, 0.0, 0.0), node(2, 0.0, 0.001)], vec![edge(1, 1, 2, 10.0)]).unwrap();
        let p = net.shortest_path(NodeId(1), NodeId(1)).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.distance_m, 0.0);
        assert_eq!(p.travel_time_s, 0.0);
    }

    #[test]
    fn single_kilometre_edge_takes_ninety_seconds() {
        let net = RoadNetwork::new(vec![node(1, 0.0, 0.0), node(2, 0.0, 0.01)], vec![edge(1, 1, 2, 1000.0)]).unwrap();
        let p = net.shortest_path(NodeId(1), NodeId(2)).unwrap();
        assert!((p.travel_time_s - 90.0).abs() < 1e-9);
        assert_eq!(p.edge_ids, vec![EdgeId(1)]);
    }

    #[test]
    fn unreachable_target() {
        let net = RoadNetwork::new(vec![node(1, 0.0, 0.0), node(2, 0.0, 0.01)], vec![edge(1, 1, 2, 1000.0)]).unwrap();
        assert!(matches!(
            net.shortest_path(NodeId(2), NodeId(1)),
            Err(Error::Unreachable { .. })
        ));
        let m = net.travel_time_matrix(&[NodeId(2)], &[NodeId(1)]).unwrap();
        assert_eq!(m[0][0], f64::INFINITY);
        let one = net.travel_time_matrix(&[NodeId(2)], &[NodeId(2)]).unwrap();
        assert_eq!(one, vec![vec![0.0]]);
    }

    #[test]
    fn equal_time_routes_prefer_smaller_final_hop_edge() {
        // two 2-hop routes 1->2->4 and 1->3->4 of identical length
        let nodes = vec![node(1, 0.0, 0.0), node(2, 0.001, 0.0), node(3, -0.001, 0.0), node(4, 0.0, 0.001)];
        let edges = vec![edge(1, 1, 2, 100.0), edge(2, 1, 3, 100.0), edge(7, 2, 4, 100.0), edge(5, 3, 4, 100.0)];
        let net = RoadNetwork::new(nodes, edges).unwrap();
        let p = net.shortest_path(NodeId(1), NodeId(4)).unwrap();
        assert_eq!(p.edge_ids, vec![EdgeId(2), EdgeId(5)]);
    }

    #[test]
    fn nearest_node_exact_and_tie() {
        let net = RoadNetwork::new(
            vec![node(7, 0.0, 0.002), node(3, 0.0, 0.0), node(5, 1.0, 1.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(net.nearest_node(1.0, 1.0).unwrap(), NodeId(5));
        assert_eq!(net.nearest_node(0.0, 0.001).unwrap(), NodeId(3));
    }

    #[test]
    fn nearest_node_on_empty_network() {
        let net = RoadNetwork::new(vec![], vec![]).unwrap();
        assert!(matches!(net.nearest_node(0.0, 0.0), Err(Error::EmptyNetwork)));
    }

    #[test]
    fn islet_is_not_routable() {
        let nodes = vec![node(1, 0.0, 0.0), node(2, 0.0, 0.001), node(3, 0.0, 0.002), node(4, 0.5, 0.5)];
        let edges = vec![
            edge(1, 1, 2, 100.0),
            edge(2, 2, 1, 100.0),
            edge(3, 2, 3, 100.0),
            edge(4, 3, 2, 100.0),
            edge(5, 3, 4, 100.0),
        ];
        let net = RoadNetwork::new(nodes, edges).unwrap();
        assert!(net.is_routable(NodeId(1)));
        assert!(!net.is_routable(NodeId(4)));
        assert_eq!(net.nearest_routable_node(0.5, 0.5).unwrap(), NodeId(3));
    }
}
