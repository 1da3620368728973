//! Seeded grid city with commute demand, for tests, examples and benchmarks.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::demand::{DemandSet, TripRequest, DAY_S};
use crate::error::{Error, Result};
use crate::geo::LocalProjection;
use crate::network::{EdgeId, Node, NodeId, RoadEdge, RoadNetwork};

/// A `rows x cols` lattice of two-way streets. With `wrap` the outer rows
/// and columns are joined by ring-road links so every node has degree four.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCity {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub lanes: u32,
    pub speed_kmh: f64,
    pub wrap: bool,
    pub origin_lat: f64,
    pub origin_lon: f64,
}

impl Default for GridCity {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing_m: 300.0,
            lanes: 1,
            speed_kmh: 12.0,
            wrap: true,
            origin_lat: 50.08,
            origin_lon: 14.42,
        }
    }
}

impl GridCity {
    pub fn node_id(&self, row: usize, col: usize) -> NodeId {
        NodeId((row * self.cols + col) as u64)
    }

    pub fn build(&self) -> Result<RoadNetwork> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2x2 nodes".into()));
        }
        let proj = LocalProjection::new(self.origin_lat);
        let mut nodes = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (dlat, dlon) = proj.inverse([c as f64 * self.spacing_m, r as f64 * self.spacing_m]);
                nodes.push(Node {
                    id: self.node_id(r, c),
                    lat: self.origin_lat + dlat,
                    lon: self.origin_lon + dlon,
                });
            }
        }
        let mut links = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c + 1 < self.cols || self.wrap {
                    links.push((self.node_id(r, c), self.node_id(r, (c + 1) % self.cols)));
                }
                if r + 1 < self.rows || self.wrap {
                    links.push((self.node_id(r, c), self.node_id((r + 1) % self.rows, c)));
                }
            }
        }
        let speed_mps = self.speed_kmh / 3.6;
        let mut edges = Vec::with_capacity(links.len() * 2);
        for (a, b) in links {
            for (from, to) in [(a, b), (b, a)] {
                edges.push(RoadEdge {
                    id: EdgeId(edges.len() as u64),
                    from,
                    to,
                    length_m: self.spacing_m,
                    lanes: self.lanes,
                    speed_mps,
                });
            }
        }
        RoadNetwork::new(nodes, edges)
    }
}

/// Residential and business districts as column bands, kept apart on both
/// sides of the ring. Commuters go to work in a short morning peak and drift
/// home over a longer evening.
#[derive(Debug, Clone, PartialEq)]
pub struct CommuteDemand {
    pub trips: usize,
    pub seed: u64,
    pub residential_cols: std::ops::Range<usize>,
    pub business_cols: std::ops::Range<usize>,
    pub morning_peak_s: f64,
    pub evening_peak_s: f64,
    pub morning_sd_s: f64,
    pub evening_sd_s: f64,
    /// Fraction of commute trips in the morning.
    pub morning_share: f64,
    /// Fraction of all trips with uniform time and endpoints.
    pub background_share: f64,
}

impl Default for CommuteDemand {
    fn default() -> Self {
        Self {
            trips: 2000,
            seed: 7,
            residential_cols: 1..4,
            business_cols: 6..9,
            morning_peak_s: 8.0 * 3600.0,
            evening_peak_s: 17.0 * 3600.0,
            morning_sd_s: 180.0,
            evening_sd_s: 1800.0,
            morning_share: 0.5,
            background_share: 0.1,
        }
    }
}

impl CommuteDemand {
    pub fn generate(&self, city: &GridCity) -> Result<DemandSet> {
        let in_range = |r: &std::ops::Range<usize>| !r.is_empty() && r.end <= city.cols;
        if !in_range(&self.residential_cols) || !in_range(&self.business_cols) {
            return Err(Error::InvalidConfig("commute columns outside the grid".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let morning = Normal::new(self.morning_peak_s, self.morning_sd_s)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let evening = Normal::new(self.evening_peak_s, self.evening_sd_s)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let pick = |rng: &mut ChaCha8Rng, cols: &std::ops::Range<usize>| {
            city.node_id(rng.random_range(0..city.rows), rng.random_range(cols.clone()))
        };
        let all = 0..city.cols;
        let mut trips = Vec::with_capacity(self.trips);
        while trips.len() < self.trips {
            let (t, o, d) = if rng.random::<f64>() < self.background_share {
                (rng.random_range(0.0..DAY_S), pick(&mut rng, &all), pick(&mut rng, &all))
            } else if rng.random::<f64>() < self.morning_share {
                let t = morning.sample(&mut rng);
                (t, pick(&mut rng, &self.residential_cols), pick(&mut rng, &self.business_cols))
            } else {
                let t = evening.sample(&mut rng);
                (t, pick(&mut rng, &self.business_cols), pick(&mut rng, &self.residential_cols))
            };
            // same-node draws are redrawn
            if o == d {
                continue;
            }
            trips.push(TripRequest {
                id: trips.len() as u64,
                depart_time_s: t.clamp(0.0, DAY_S - 1.0).round(),
                origin: o,
                destination: d,
            });
        }
        DemandSet::new(trips)
    }
}

/// Write `nodes.csv` and `edges.csv` readable by [`RoadNetwork::load`].
pub fn write_network(net: &RoadNetwork, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(nodes_path).map_err(|e| Error::from_csv(nodes_path, e))?;
    w.write_record(["id", "lat", "lon"])
        .map_err(|e| Error::from_csv(nodes_path, e))?;
    for n in net.nodes() {
        w.serialize((n.id.0, n.lat, n.lon))
            .map_err(|e| Error::from_csv(nodes_path, e))?;
    }
    w.flush().map_err(|e| Error::io(nodes_path, e))?;

    let mut w = csv::Writer::from_path(edges_path).map_err(|e| Error::from_csv(edges_path, e))?;
    w.write_record(["id", "from", "to", "length_m", "lanes", "speed_kmh"])
        .map_err(|e| Error::from_csv(edges_path, e))?;
    for e in net.edges() {
        w.serialize((e.id.0, e.from.0, e.to.0, e.length_m, e.lanes, e.speed_mps * 3.6))
            .map_err(|err| Error::from_csv(edges_path, err))?;
    }
    w.flush().map_err(|e| Error::io(edges_path, e))
}

/// Write trips with node coordinates as endpoints.
pub fn write_trips(demand: &DemandSet, net: &RoadNetwork, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    w.write_record(["id", "depart_time_s", "origin_lat", "origin_lon", "dest_lat", "dest_lon"])
        .map_err(|e| Error::from_csv(path, e))?;
    for t in demand.trips() {
        let o = net.node(t.origin).ok_or(Error::UnknownNode(t.origin))?;
        let d = net.node(t.destination).ok_or(Error::UnknownNode(t.destination))?;
        w.serialize((t.id, t.depart_time_s, o.lat, o.lon, d.lat, d.lon))
            .map_err(|e| Error::from_csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::load_trips;

    #[test]
    fn ten_by_ten_torus_has_400_edges() {
        let net = GridCity::default().build().unwrap();
        assert_eq!(net.node_count(), 100);
        assert_eq!(net.edge_count(), 400);
        assert!(net.nodes().iter().all(|n| net.is_routable(n.id)));
        let open = GridCity { wrap: false, ..Default::default() }.build().unwrap();
        assert_eq!(open.edge_count(), 360);
    }

    #[test]
    fn demand_is_seeded() {
        let city = GridCity::default();
        let a = CommuteDemand::default().generate(&city).unwrap();
        let b = CommuteDemand::default().generate(&city).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2000);
        let c = CommuteDemand { seed: 8, ..Default::default() }.generate(&city).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn files_round_trip() {
        let city = GridCity::default();
        let net = city.build().unwrap();
        let demand = CommuteDemand { trips: 50, ..Default::default() }.generate(&city).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (np, ep, tp) = (dir.path().join("n.csv"), dir.path().join("e.csv"), dir.path().join("t.csv"));
        write_network(&net, &np, &ep).unwrap();
        write_trips(&demand, &net, &tp).unwrap();
        let net2 = RoadNetwork::load(&np, &ep, 50.0).unwrap();
        assert_eq!(net2.edge_count(), 400);
        let (d2, report) = load_trips(&tp, &net2).unwrap();
        assert_eq!(report.unroutable + report.degenerate, 0);
        assert_eq!(d2, demand);
    }
}
