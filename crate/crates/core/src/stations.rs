//! Station placement and the station-to-node lookup tables used for dispatch.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::DemandSet;
use crate::error::{Error, Result};
use crate::geo::LocalProjection;
use crate::kmeans::{kmeans, MAX_LLOYD_ITERATIONS};
use crate::network::{NodeId, RoadNetwork};

/// Default number of stations.
pub const DEFAULT_STATIONS: usize = 40;

/// Mean station-to-passenger travel time a plan should stay under, seconds.
pub const PICKUP_BOUND_S: f64 = 180.0;

pub type StationId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Station {
    pub id: StationId,
    pub node: NodeId,
}

/// Stations plus the number of vehicles parked at each one at time zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StationPlan {
    pub stations: Vec<Station>,
    /// Indexed by station id.
    pub initial_counts: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct StationPlanFile {
    stations: Vec<Station>,
    initial_counts: BTreeMap<StationId, u32>,
}

impl StationPlan {
    pub fn with_zero_counts(stations: Vec<Station>) -> Self {
        let n = stations.len();
        Self {
            stations,
            initial_counts: vec![0; n],
        }
    }

    pub fn fleet_size(&self) -> u64 {
        self.initial_counts.iter().map(|&c| c as u64).sum()
    }

    pub fn to_json(&self) -> String {
        let file = StationPlanFile {
            stations: self.stations.clone(),
            initial_counts: self.initial_counts.iter().copied().enumerate().collect(),
        };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let file: StationPlanFile = serde_json::from_str(text)?;
        let n = file.stations.len();
        let mut counts = vec![0; n];
        for (id, c) in file.initial_counts {
            if id >= n {
                return Err(serde::de::Error::custom(format!("initial_counts names unknown station {id}")));
            }
            counts[id] = c;
        }
        for (i, s) in file.stations.iter().enumerate() {
            if s.id != i {
                return Err(serde::de::Error::custom("station ids must be contiguous 0..n-1 in order"));
            }
        }
        Ok(Self {
            stations: file.stations,
            initial_counts: counts,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }
}

/// Which trip endpoints feed the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterPoints {
    #[default]
    OriginsAndDestinations,
    OriginsOnly,
}

/// Place `n` stations with seeded k-means over trip endpoint coordinates.
///
/// Centroids are snapped to the nearest routable node, in cluster order; a
/// centroid whose nearest node is already taken moves to the next-nearest
/// free node.
pub fn plan_stations(
    demand: &DemandSet,
    net: &RoadNetwork,
    n: usize,
    seed: u64,
    points: ClusterPoints,
) -> Result<Vec<Station>> {
    if n == 0 {
        return Err(Error::InvalidConfig("number of stations must be >= 1".into()));
    }
    let mut latlon = Vec::with_capacity(demand.len() * 2);
    for t in demand.trips() {
        let mut push = |id: NodeId| {
            let node = net.node(id).ok_or(Error::UnknownNode(id))?;
            latlon.push([node.lat, node.lon]);
            Ok::<_, Error>(())
        };
        push(t.origin)?;
        if points == ClusterPoints::OriginsAndDestinations {
            push(t.destination)?;
        }
    }
    let proj = LocalProjection::around(&latlon);
    let planar: Vec<[f64; 2]> = latlon.iter().map(|p| proj.forward(p[0], p[1])).collect();
    let clusters = kmeans(&planar, n, seed, MAX_LLOYD_ITERATIONS)?;
    log::info!(
        "k-means: {} clusters after {} Lloyd iterations",
        n,
        clusters.iterations
    );

    let routable = net.nodes().iter().filter(|nd| net.is_routable(nd.id)).count();
    if routable < n {
        return Err(Error::NotEnoughPoints {
            needed: n,
            found: routable,
        });
    }
    let mut taken = std::collections::HashSet::new();
    let mut stations = Vec::with_capacity(n);
    for (id, c) in clusters.centroids.iter().enumerate() {
        let (lat, lon) = proj.inverse(*c);
        let nearest = net
            .nearest_node_where(lat, lon, |nd| net.is_routable(nd.id))
            .expect("routable nodes exist");
        let node = if taken.contains(&nearest) {
            *net.nodes_by_distance(lat, lon, |nd| net.is_routable(nd.id) && !taken.contains(&nd.id))
                .first()
                .expect("enough routable nodes")
        } else {
            nearest
        };
        taken.insert(node);
        stations.push(Station { id, node });
    }
    Ok(stations)
}

/// Nearest-station lookups and station-to-station travel costs.
///
/// Dispatch uses travel time from station to node, returns use travel time
/// from node to station, following the direction the vehicle drives. Ties go
/// to the smaller station id.
#[derive(Debug, Clone)]
pub struct StationLayout {
    stations: Vec<Station>,
    // per network node index
    dispatch: Vec<Option<(StationId, f64)>>,
    ret: Vec<Option<(StationId, f64)>>,
    cost: Vec<Vec<f64>>,
}

impl StationLayout {
    pub fn new(net: &RoadNetwork, stations: &[Station]) -> Result<Self> {
        for (i, s) in stations.iter().enumerate() {
            if s.id != i {
                return Err(Error::InvalidConfig("station ids must be contiguous 0..n-1".into()));
            }
            net.index_of(s.node)?;
        }
        let forward: Vec<Vec<f64>> = stations
            .par_iter()
            .map(|s| net.shortest_path_tree(s.node).map(|t| t.travel_times().to_vec()))
            .collect::<Result<_>>()?;
        let backward: Vec<Vec<f64>> = stations
            .par_iter()
            .map(|s| net.travel_times_to(s.node))
            .collect::<Result<_>>()?;

        let argmin = |tables: &[Vec<f64>], node: usize| {
            let mut best: Option<(StationId, f64)> = None;
            for (s, t) in tables.iter().enumerate() {
                let d = t[node];
                if d.is_finite() && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((s, d));
                }
            }
            best
        };
        let n_nodes = net.node_count();
        let dispatch = (0..n_nodes).map(|v| argmin(&forward, v)).collect();
        let ret = (0..n_nodes).map(|v| argmin(&backward, v)).collect();
        let station_idx: Vec<usize> = stations.iter().map(|s| net.index_of(s.node)).collect::<Result<_>>()?;
        let cost = forward
            .iter()
            .map(|row| station_idx.iter().map(|&j| row[j]).collect())
            .collect();
        Ok(Self {
            stations: stations.to_vec(),
            dispatch,
            ret,
            cost,
        })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn station_node(&self, s: StationId) -> NodeId {
        self.stations[s].node
    }

    /// Station that serves pick-ups at `node`, with its travel time to `node`.
    pub fn dispatch_station(&self, net: &RoadNetwork, node: NodeId) -> Option<(StationId, f64)> {
        net.index_of(node).ok().and_then(|i| self.dispatch[i])
    }

    /// Station a vehicle returns to after a drop-off at `node`, with the
    /// travel time from `node` to it.
    pub fn return_station(&self, net: &RoadNetwork, node: NodeId) -> Option<(StationId, f64)> {
        net.index_of(node).ok().and_then(|i| self.ret[i])
    }

    /// Travel time between station nodes in seconds.
    pub fn cost_matrix(&self) -> &[Vec<f64>] {
        &self.cost
    }
}

/// Mean travel time from each trip origin's dispatch station to the origin.
pub fn mean_pickup_time(layout: &StationLayout, demand: &DemandSet, net: &RoadNetwork) -> Result<f64> {
    if demand.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in demand.trips() {
        let (_, time) = layout
            .dispatch_station(net, t.origin)
            .ok_or(Error::Unreachable {
                from: layout.stations.first().map(|s| s.node).unwrap_or(t.origin),
                to: t.origin,
            })?;
        total += time;
    }
    Ok(total / demand.len() as f64)
}
