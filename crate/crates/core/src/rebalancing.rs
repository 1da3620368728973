//! Offline rebalancing schedule: per time slice, the cheapest integral moves
//! of empty vehicles from stations holding more than they will soon need to
//! stations holding less.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{DemandSet, DAY_S};
use crate::error::{Error, Result};
use crate::network::RoadNetwork;
use crate::sim::{plan_service, ServicePlan};
use crate::stations::{StationId, StationLayout};
use crate::transport::solve_transportation;

/// Default slice length, seconds.
pub const DEFAULT_SLICE_S: f64 = 600.0;

/// Default number of slices of future departures a station should hold
/// vehicles for.
pub const DEFAULT_LOOKAHEAD: usize = 2;

/// Expected dispatches and returns per station within one slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceForecast {
    pub slice_index: usize,
    /// Indexed by station id.
    pub departures: Vec<u32>,
    pub arrivals: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RebalancingOrder {
    pub slice_index: usize,
    pub from_station: StationId,
    pub to_station: StationId,
    pub count: u32,
}

/// Orders sorted by (slice, from, to), at most one per triple.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RebalancingPlan {
    orders: Vec<RebalancingOrder>,
}

impl RebalancingPlan {
    pub fn new(mut orders: Vec<RebalancingOrder>) -> Result<Self> {
        orders.sort();
        for w in orders.windows(2) {
            let key = |o: &RebalancingOrder| (o.slice_index, o.from_station, o.to_station);
            if key(&w[0]) == key(&w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate rebalancing order for slice {} {} -> {}",
                    w[0].slice_index, w[0].from_station, w[0].to_station
                )));
            }
        }
        if let Some(o) = orders.iter().find(|o| o.from_station == o.to_station || o.count == 0) {
            return Err(Error::InvalidConfig(format!(
                "invalid rebalancing order {} -> {} x{} in slice {}",
                o.from_station, o.to_station, o.count, o.slice_index
            )));
        }
        Ok(Self { orders })
    }

    pub fn orders(&self) -> &[RebalancingOrder] {
        &self.orders
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn total_vehicles(&self) -> u64 {
        self.orders.iter().map(|o| o.count as u64).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        w.write_record(["slice_index", "from_station", "to_station", "count"])
            .map_err(|e| Error::from_csv(path, e))?;
        for o in &self.orders {
            w.serialize((o.slice_index, o.from_station, o.to_station, o.count))
                .map_err(|e| Error::from_csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        let mut orders = Vec::new();
        for row in rdr.deserialize::<RebalancingOrder>() {
            orders.push(row.map_err(|e| Error::from_csv(path, e))?);
        }
        Self::new(orders)
    }
}

/// Forecast per-slice departures and returns from perfect knowledge of the
/// demand: a trip departs in the slice of its request time and its vehicle
/// returns in the slice containing the end of its drop-off leg, assuming
/// free-flow travel.
pub fn build_forecast(
    demand: &DemandSet,
    layout: &StationLayout,
    net: &RoadNetwork,
    slice_s: f64,
) -> Result<Vec<SliceForecast>> {
    let services = demand
        .trips()
        .par_iter()
        .map(|t| plan_service(net, layout, t))
        .collect::<Result<Vec<_>>>()?;
    forecast_from_services(&services, layout.len(), slice_s)
}

/// [`build_forecast`] over already planned service legs.
pub fn forecast_from_services(services: &[ServicePlan], stations: usize, slice_s: f64) -> Result<Vec<SliceForecast>> {
    if !(slice_s > 0.0) {
        return Err(Error::InvalidConfig("slice length must be > 0".into()));
    }
    let slice_of = |t: f64| (t / slice_s).floor() as usize;
    let day_slices = (DAY_S / slice_s).ceil() as usize;
    let horizon = services
        .iter()
        .map(|s| slice_of(s.return_time_s()) + 1)
        .max()
        .unwrap_or(0)
        .max(day_slices);
    let mut out: Vec<SliceForecast> = (0..horizon)
        .map(|k| SliceForecast {
            slice_index: k,
            departures: vec![0; stations],
            arrivals: vec![0; stations],
        })
        .collect();
    for s in services {
        out[slice_of(s.depart_time_s)].departures[s.dispatch_station] += 1;
        out[slice_of(s.return_time_s())].arrivals[s.return_station] += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebalancingConfig {
    pub slice_s: f64,
    pub lookahead: usize,
}

impl Default for RebalancingConfig {
    fn default() -> Self {
        Self {
            slice_s: DEFAULT_SLICE_S,
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

/// Projected station inventories alongside the plan that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryProjection {
    /// Inventory per slice, after that slice's rebalancing departures and
    /// before its forecast trips.
    pub after_rebalancing: Vec<Vec<i64>>,
    /// Inventory once every forecast slice and every rebalancing arrival has
    /// been applied.
    pub final_inventory: Vec<i64>,
}

/// Sweep the slices in order, keeping a projected inventory per station, and
/// move vehicles so each station covers its forecast departures over the
/// lookahead window. Departures a station cannot cover leave it at zero
/// rather than negative.
pub fn plan_rebalancing(
    forecasts: &[SliceForecast],
    initial_counts: &[u32],
    cost: &[Vec<f64>],
    cfg: RebalancingConfig,
) -> Result<RebalancingPlan> {
    plan_rebalancing_projected(forecasts, initial_counts, cost, cfg).map(|(p, _)| p)
}

pub fn plan_rebalancing_projected(
    forecasts: &[SliceForecast],
    initial_counts: &[u32],
    cost: &[Vec<f64>],
    cfg: RebalancingConfig,
) -> Result<(RebalancingPlan, InventoryProjection)> {
    if !(cfg.slice_s > 0.0) {
        return Err(Error::InvalidConfig("slice length must be > 0".into()));
    }
    let n = initial_counts.len();
    if forecasts.iter().any(|f| f.departures.len() != n || f.arrivals.len() != n) {
        return Err(Error::InvalidConfig("forecast station count differs from initial counts".into()));
    }
    let mut inv: Vec<i64> = initial_counts.iter().map(|&c| c as i64).collect();
    let mut inbound: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    let mut orders = Vec::new();
    let mut after = Vec::with_capacity(forecasts.len());

    for (k, slice) in forecasts.iter().enumerate() {
        if let Some(arriving) = inbound.remove(&k) {
            for (i, a) in arriving.into_iter().enumerate() {
                inv[i] += a;
            }
        }
        let window = &forecasts[k..(k + cfg.lookahead).min(forecasts.len())];
        let mut surplus = vec![0u32; n];
        let mut deficit = vec![0u32; n];
        for i in 0..n {
            let target: i64 = window.iter().map(|f| f.departures[i] as i64).sum();
            surplus[i] = (inv[i] - target).max(0) as u32;
            deficit[i] = (target - inv[i]).max(0) as u32;
        }
        for sh in solve_transportation(&surplus, &deficit, cost)? {
            inv[sh.from] -= sh.count as i64;
            let travel_slices = ((cost[sh.from][sh.to] / cfg.slice_s).ceil() as usize).max(1);
            inbound.entry(k + travel_slices).or_insert_with(|| vec![0; n])[sh.to] += sh.count as i64;
            orders.push(RebalancingOrder {
                slice_index: slice.slice_index,
                from_station: sh.from,
                to_station: sh.to,
                count: sh.count,
            });
        }
        after.push(inv.clone());
        for i in 0..n {
            inv[i] = (inv[i] + slice.arrivals[i] as i64 - slice.departures[i] as i64).max(0);
        }
    }
    for (_, arriving) in inbound {
        for (i, a) in arriving.into_iter().enumerate() {
            inv[i] += a;
        }
    }
    Ok((
        RebalancingPlan::new(orders)?,
        InventoryProjection {
            after_rebalancing: after,
            final_inventory: inv,
        },
    ))
}
