use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::TripType;
use crate::error::{Error, Result};
use crate::network::EdgeId;

/// Default occupancy window, seconds.
pub const DEFAULT_WINDOW_S: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OccupancyCell {
    pub vehicle_seconds: f64,
    /// Traversals that entered the edge during the window.
    pub traversals: u64,
}

pub type OccupancyKey = (EdgeId, usize, TripType);

/// Vehicle-seconds and entry counts per (edge, window, trip type).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeOccupancyLog {
    window_s: f64,
    records: BTreeMap<OccupancyKey, OccupancyCell>,
}

impl EdgeOccupancyLog {
    pub fn new(window_s: f64) -> Result<Self> {
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(Error::InvalidConfig(format!("window length must be > 0, got {window_s}")));
        }
        Ok(Self {
            window_s,
            records: BTreeMap::new(),
        })
    }

    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn records(&self) -> &BTreeMap<OccupancyKey, OccupancyCell> {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Log one vehicle on `edge` from `enter_s` to `exit_s`. The occupied
    /// time is split across the windows it overlaps; the traversal counts in
    /// the window of entry.
    pub fn record_traversal(&mut self, edge: EdgeId, enter_s: f64, exit_s: f64, trip_type: TripType) {
        debug_assert!(exit_s >= enter_s, "exit before enter");
        let ws = self.window_s;
        let first = (enter_s / ws).floor() as usize;
        self.records
            .entry((edge, first, trip_type))
            .or_default()
            .traversals += 1;
        let mut t = enter_s;
        let mut w = first;
        while t < exit_s {
            let end = ((w + 1) as f64 * ws).min(exit_s);
            self.records
                .entry((edge, w, trip_type))
                .or_default()
                .vehicle_seconds += end - t;
            t = end;
            w += 1;
        }
    }

    /// Insert a cell directly, replacing any existing one.
    pub fn insert(&mut self, key: OccupancyKey, cell: OccupancyCell) {
        self.records.insert(key, cell);
    }

    /// Number of windows spanned by the log (highest window index + 1).
    pub fn window_count(&self) -> usize {
        self.records.keys().map(|k| k.1 + 1).max().unwrap_or(0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        w.write_record(["edge_id", "window_index", "trip_type", "vehicle_seconds", "traversals"])
            .map_err(|e| Error::from_csv(path, e))?;
        for (&(edge, window, tt), cell) in &self.records {
            w.serialize((edge.0, window, tt, cell.vehicle_seconds, cell.traversals))
                .map_err(|e| Error::from_csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, window_s: f64) -> Result<Self> {
        let mut log = Self::new(window_s)?;
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        let headers = rdr.headers().map_err(|e| Error::from_csv(path, e))?.clone();
        let expected = ["edge_id", "window_index", "trip_type", "vehicle_seconds", "traversals"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::malformed(path, 1, format!("expected header {}", expected.join(","))));
        }
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::from_csv(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let row: OccupancyRow = rec
                .deserialize(Some(&headers))
                .map_err(|e| Error::malformed(path, line, e.to_string()))?;
            if !(row.vehicle_seconds >= 0.0) {
                return Err(Error::malformed(path, line, "vehicle_seconds must be >= 0"));
            }
            let key = (EdgeId(row.edge_id), row.window_index, row.trip_type);
            if log.records.contains_key(&key) {
                return Err(Error::malformed(path, line, "duplicate occupancy record"));
            }
            log.insert(
                key,
                OccupancyCell {
                    vehicle_seconds: row.vehicle_seconds,
                    traversals: row.traversals,
                },
            );
        }
        Ok(log)
    }
}

#[derive(Debug, Deserialize)]
struct OccupancyRow {
    edge_id: u64,
    window_index: usize,
    trip_type: TripType,
    vehicle_seconds: f64,
    traversals: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(log: &EdgeOccupancyLog, w: usize) -> OccupancyCell {
        log.records()
            .get(&(EdgeId(1), w, TripType::Demand))
            .copied()
            .unwrap_or_default()
    }

    #[test]
    fn full_window() {
        let mut log = EdgeOccupancyLog::new(600.0).unwrap();
        log.record_traversal(EdgeId(1), 0.0, 600.0, TripType::Demand);
        assert_eq!(cell(&log, 0), OccupancyCell { vehicle_seconds: 600.0, traversals: 1 });
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn boundary_split() {
        let mut log = EdgeOccupancyLog::new(600.0).unwrap();
        log.record_traversal(EdgeId(1), 590.0, 620.0, TripType::Demand);
        assert_eq!(cell(&log, 0), OccupancyCell { vehicle_seconds: 10.0, traversals: 1 });
        assert_eq!(cell(&log, 1), OccupancyCell { vehicle_seconds: 20.0, traversals: 0 });
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let mut log = EdgeOccupancyLog::new(600.0).unwrap();
        log.record_traversal(EdgeId(4), 10.0, 1300.5, TripType::Rebalancing);
        log.record_traversal(EdgeId(2), 0.0, 9.0, TripType::PickUp);
        let f = tempfile::NamedTempFile::new().unwrap();
        log.write_csv(f.path()).unwrap();
        assert_eq!(EdgeOccupancyLog::read_csv(f.path(), 600.0).unwrap(), log);

        std::fs::write(f.path(), "edge,window\n1,2\n").unwrap();
        assert!(matches!(
            EdgeOccupancyLog::read_csv(f.path(), 600.0),
            Err(Error::MalformedFile { .. })
        ));
    }

    proptest! {
        #[test]
        fn splits_conserve_time(enter in 0.0f64..5000.0, dur in 0.0f64..2000.0) {
            let mut log = EdgeOccupancyLog::new(600.0).unwrap();
            log.record_traversal(EdgeId(1), enter, enter + dur, TripType::Demand);
            let total: f64 = log.records().values().map(|c| c.vehicle_seconds).sum();
            prop_assert!((total - dur).abs() < 1e-9);
            let entries: u64 = log.records().values().map(|c| c.traversals).sum();
            prop_assert_eq!(entries, 1);
        }
    }
}
