//! Trip requests and trip-file ingestion.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::network::{NodeId, RoadNetwork};

/// Length of the simulated day in seconds.
pub const DAY_S: f64 = 86_400.0;

/// One passenger demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRequest {
    pub id: u64,
    pub depart_time_s: f64,
    pub origin: NodeId,
    pub destination: NodeId,
}

/// Trips ordered by departure time, then id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandSet {
    trips: Vec<TripRequest>,
}

impl DemandSet {
    /// Sorts the trips and checks that ids are unique and that origin and
    /// destination differ.
    pub fn new(mut trips: Vec<TripRequest>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(trips.len());
        for t in &trips {
            if !seen.insert(t.id) {
                return Err(Error::InvalidConfig(format!("duplicate trip id {}", t.id)));
            }
            if t.origin == t.destination {
                return Err(Error::InvalidConfig(format!(
                    "trip {} has identical origin and destination",
                    t.id
                )));
            }
            if !(0.0..DAY_S).contains(&t.depart_time_s) {
                return Err(Error::InvalidConfig(format!(
                    "trip {} departs at {} s, outside [0, 86400)",
                    t.id, t.depart_time_s
                )));
            }
        }
        trips.sort_by(|a, b| a.depart_time_s.total_cmp(&b.depart_time_s).then(a.id.cmp(&b.id)));
        Ok(Self { trips })
    }

    pub fn trips(&self) -> &[TripRequest] {
        &self.trips
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }
}

/// Counts of rows rejected while loading a trips file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TripLoadReport {
    /// An endpoint snapped to a node outside the routable component.
    pub unroutable: usize,
    /// Origin and destination snapped to the same node.
    pub degenerate: usize,
}

#[derive(Debug, Deserialize)]
struct TripRow {
    id: u64,
    depart_time_s: f64,
    origin_lat: f64,
    origin_lon: f64,
    dest_lat: f64,
    dest_lon: f64,
}

/// Read a trips CSV and snap both endpoints to their nearest network node.
///
/// Trips whose endpoint lands outside the largest strongly connected
/// component, or whose endpoints snap to the same node, are dropped and
/// counted in the report.
pub fn load_trips(path: &Path, net: &RoadNetwork) -> Result<(DemandSet, TripLoadReport)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::from_csv(path, e))?.clone();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::from_csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: TripRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::malformed(path, line, e.to_string()))?;
        if !(0.0..DAY_S).contains(&row.depart_time_s) {
            return Err(Error::malformed(path, line, "depart_time_s outside [0, 86400)"));
        }
        for (lat, lon) in [(row.origin_lat, row.origin_lon), (row.dest_lat, row.dest_lon)] {
            if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                return Err(Error::malformed(path, line, "coordinates out of range"));
            }
        }
        if !seen.insert(row.id) {
            return Err(Error::malformed(path, line, format!("duplicate trip id {}", row.id)));
        }
        rows.push(row);
    }

    if !rows.is_empty() && net.node_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let snapped: Vec<(NodeId, NodeId)> = rows
        .par_iter()
        .map(|r| {
            let o = net.nearest_node(r.origin_lat, r.origin_lon).expect("non-empty network");
            let d = net.nearest_node(r.dest_lat, r.dest_lon).expect("non-empty network");
            (o, d)
        })
        .collect();

    let mut report = TripLoadReport::default();
    let mut trips = Vec::with_capacity(rows.len());
    for (row, (o, d)) in rows.iter().zip(snapped) {
        if !net.is_routable(o) || !net.is_routable(d) {
            report.unroutable += 1;
            continue;
        }
        if o == d {
            report.degenerate += 1;
            continue;
        }
        trips.push(TripRequest {
            id: row.id,
            depart_time_s: row.depart_time_s,
            origin: o,
            destination: d,
        });
    }
    if report.unroutable > 0 {
        log::warn!("dropped {} trip(s) with unroutable endpoints", report.unroutable);
    }
    if report.degenerate > 0 {
        log::warn!(
            "dropped {} trip(s) whose endpoints snap to the same node",
            report.degenerate
        );
    }
    Ok((DemandSet::new(trips)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeId, Node, RoadEdge};
    use std::io::Write;

    fn net() -> RoadNetwork {
        let nodes = vec![
            Node { id: NodeId(1), lat: 0.0, lon: 0.0 },
            Node { id: NodeId(2), lat: 0.0, lon: 0.001 },
            Node { id: NodeId(3), lat: 0.0, lon: 0.002 },
            Node { id: NodeId(9), lat: 0.01, lon: 0.01 },
        ];
        let mk = |id, from, to| RoadEdge {
            id: EdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            length_m: 111.0,
            lanes: 1,
            speed_mps: 40.0 / 3.6,
        };
        let edges = vec![mk(1, 1, 2), mk(2, 2, 1), mk(3, 2, 3), mk(4, 3, 2), mk(5, 3, 9)];
        RoadNetwork::new(nodes, edges).unwrap()
    }

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "id,depart_time_s,origin_lat,origin_lon,dest_lat,dest_lon\n";

    #[test]
    fn empty_file_gives_empty_demand() {
        let f = file(HEADER);
        let (d, rep) = load_trips(f.path(), &net()).unwrap();
        assert!(d.is_empty());
        assert_eq!(rep, TripLoadReport::default());
    }

    #[test]
    fn exact_coordinates_snap_to_nodes() {
        let f = file(&format!("{HEADER}4,100,0.0,0.0,0.0,0.002\n"));
        let (d, _) = load_trips(f.path(), &net()).unwrap();
        assert_eq!(
            d.trips(),
            &[TripRequest {
                id: 4,
                depart_time_s: 100.0,
                origin: NodeId(1),
                destination: NodeId(3)
            }]
        );
    }

    #[test]
    fn islet_endpoint_is_dropped_and_counted() {
        let f = file(&format!("{HEADER}1,10,0.0,0.0,0.01,0.01\n2,5,0.0,0.001,0.0,0.0\n"));
        let (d, rep) = load_trips(f.path(), &net()).unwrap();
        assert_eq!(rep.unroutable, 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d.trips()[0].id, 2);
    }

    #[test]
    fn sorted_by_time() {
        let f = file(&format!("{HEADER}1,500,0.0,0.0,0.0,0.002\n2,20,0.0,0.002,0.0,0.0\n"));
        let (d, _) = load_trips(f.path(), &net()).unwrap();
        let ids: Vec<u64> = d.trips().iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![2, 1]);
    }

    #[test]
    fn bad_time_is_malformed() {
        let f = file(&format!("{HEADER}1,90000,0.0,0.0,0.0,0.002\n"));
        assert!(matches!(
            load_trips(f.path(), &net()),
            Err(Error::MalformedFile { row: 2, .. })
        ));
    }
}
