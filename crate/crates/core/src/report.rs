//! On-disk form of a simulation run: `summary.json` and `events.csv`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{SimulationResult, TraceEvent, TripType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub window_s: f64,
    /// Meters driven per trip type.
    pub distance_m: BTreeMap<TripType, f64>,
    pub served: u64,
    pub unsatisfied: u64,
    pub fleet_size: u64,
    pub phantom_vehicles: u64,
    pub rebalancing_shortfall: u64,
    pub per_station_min_inventory: Vec<i64>,
}

impl RunSummary {
    pub fn new(scenario: &str, result: &SimulationResult) -> Self {
        Self {
            scenario: scenario.to_string(),
            window_s: result.log.window_s(),
            distance_m: result.distance_by_type.iter().collect(),
            served: result.served,
            unsatisfied: result.unsatisfied,
            fleet_size: result.fleet_size,
            phantom_vehicles: result.phantom_vehicles,
            rebalancing_shortfall: result.rebalancing_shortfall,
            per_station_min_inventory: result.per_station_min_inventory.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::analytics::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }
}

pub fn write_events(path: &Path, events: &[TraceEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    w.write_record(["time_s", "event", "entity_id", "detail"])
        .map_err(|e| Error::from_csv(path, e))?;
    for e in events {
        w.serialize((e.time_s, e.event, e.entity_id, &e.detail))
            .map_err(|err| Error::from_csv(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
