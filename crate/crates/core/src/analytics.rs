//! Fundamental-diagram analytics over occupancy logs: densities, congested
//! edge sets, share tables, histograms and heat-map exports.
//!
//! Density is time-averaged occupancy per meter per lane:
//!
//! ```text
//! density(e, w, T) = vehicle_seconds(e, w, T) / (window_s * length_m(e) * lanes(e))
//! ```
//!
//! Each directed edge is judged on its own, so the two directions of a street
//! congest independently, and the lane count scales capacity.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::network::{EdgeId, RoadNetwork};
use crate::sim::{EdgeOccupancyLog, PerType, TripType, TypeSet};

/// Critical density per lane, vehicles per meter.
pub const CRITICAL_DENSITY: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDensityConfig {
    pub y_c: f64,
    /// Edge-windows below `low_cut * y_c` are left out of histograms.
    pub low_cut: f64,
    /// Population threshold for congestion shares and focused histograms.
    pub focus: f64,
    /// Densities above `cap * y_c` fall into the last histogram bin.
    pub cap: f64,
}

impl Default for CriticalDensityConfig {
    fn default() -> Self {
        Self {
            y_c: CRITICAL_DENSITY,
            low_cut: 0.01,
            focus: 0.50,
            cap: 2.00,
        }
    }
}

impl CriticalDensityConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.y_c > 0.0 && 0.0 < self.low_cut && self.low_cut < self.focus && self.focus < self.cap;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "need y_c > 0 and 0 < low_cut < focus < cap, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRecord {
    pub edge: EdgeId,
    pub window: usize,
    /// Vehicles per meter per lane, by trip type.
    pub by_type: PerType<f64>,
    pub total: f64,
}

impl DensityRecord {
    pub fn scoped(&self, scope: TypeSet) -> f64 {
        scope.iter().map(|t| self.by_type[t]).sum()
    }
}

/// Densities for every (edge, window) present in a log.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    window_s: f64,
    records: BTreeMap<(EdgeId, usize), DensityRecord>,
}

impl DensityTable {
    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn get(&self, edge: EdgeId, window: usize) -> Option<&DensityRecord> {
        self.records.get(&(edge, window))
    }

    pub fn records(&self) -> impl Iterator<Item = &DensityRecord> + '_ {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Only the windows in `windows`.
    pub fn restrict(&self, windows: Range<usize>) -> DensityTable {
        DensityTable {
            window_s: self.window_s,
            records: self
                .records
                .iter()
                .filter(|((_, w), _)| windows.contains(w))
                .map(|(k, v)| (*k, *v))
                .collect(),
        }
    }

    /// Highest window index + 1.
    pub fn window_count(&self) -> usize {
        self.records.keys().map(|k| k.1 + 1).max().unwrap_or(0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        w.write_record(["edge_id", "window_index", "trip_type", "density"])
            .map_err(|e| Error::from_csv(path, e))?;
        for r in self.records.values() {
            for (t, d) in r.by_type.iter() {
                if d > 0.0 {
                    w.serialize((r.edge.0, r.window, t.as_str(), d))
                        .map_err(|e| Error::from_csv(path, e))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Convert an occupancy log to densities.
pub fn compute_density(log: &EdgeOccupancyLog, net: &RoadNetwork) -> Result<DensityTable> {
    let ws = log.window_s();
    let mut records: BTreeMap<(EdgeId, usize), DensityRecord> = BTreeMap::new();
    for (&(edge, window, tt), cell) in log.records() {
        let e = net.edge(edge).ok_or(Error::UnknownEdge(edge))?;
        let d = cell.vehicle_seconds / (ws * e.length_m * e.lanes as f64);
        let rec = records.entry((edge, window)).or_insert(DensityRecord {
            edge,
            window,
            by_type: PerType::default(),
            total: 0.0,
        });
        rec.by_type[tt] += d;
    }
    for rec in records.values_mut() {
        rec.total = rec.by_type.total();
    }
    Ok(DensityTable { window_s: ws, records })
}

/// Edge-windows whose density summed over `scope` reaches `y_c`.
pub fn congested_edges(table: &DensityTable, cfg: &CriticalDensityConfig, scope: TypeSet) -> BTreeSet<(EdgeId, usize)> {
    table
        .records()
        .filter(|r| r.scoped(scope) >= cfg.y_c)
        .map(|r| (r.edge, r.window))
        .collect()
}

/// Edge-windows that are below critical density on demand traffic alone but
/// reach it once every trip type of the fleet scenario is counted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CongestionDiff {
    pub newly_congested: BTreeSet<(EdgeId, usize)>,
}

impl CongestionDiff {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
        w.write_record(["edge_id", "window_index"])
            .map_err(|e| Error::from_csv(path, e))?;
        for (e, win) in &self.newly_congested {
            w.serialize((e.0, win)).map_err(|e| Error::from_csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// `baseline` is judged on its demand density, `fleet` on total density.
pub fn congestion_diff(
    baseline: &DensityTable,
    fleet: &DensityTable,
    cfg: &CriticalDensityConfig,
) -> Result<CongestionDiff> {
    if baseline.window_s != fleet.window_s {
        return Err(Error::WindowMismatch {
            left: baseline.window_s,
            right: fleet.window_s,
        });
    }
    let newly_congested = congested_edges(fleet, cfg, TypeSet::ALL)
        .into_iter()
        .filter(|&(e, w)| {
            baseline
                .get(e, w)
                .map_or(0.0, |r| r.scoped(TypeSet::DEMAND))
                < cfg.y_c
        })
        .collect();
    Ok(CongestionDiff { newly_congested })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShareRow {
    pub distance_share: f64,
    pub congestion_share: f64,
    pub km_per_vehicle_day: f64,
}

/// Share of each trip type in distance driven and in density on busy roads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareTable {
    pub rows: BTreeMap<TripType, ShareRow>,
    pub total_distance_m: f64,
    /// Edge-windows above `focus * y_c`; congestion shares are zero when
    /// this is empty.
    pub congestion_population: usize,
}

impl ShareTable {
    pub fn row(&self, t: TripType) -> ShareRow {
        self.rows.get(&t).copied().unwrap_or_default()
    }

    pub fn empty_trip_distance_share(&self) -> f64 {
        TripType::ALL
            .into_iter()
            .filter(|t| t.is_empty_trip())
            .map(|t| self.row(t).distance_share)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("share table serializes")
    }
}

pub fn share_table(
    distance_by_type: &PerType<f64>,
    table: &DensityTable,
    cfg: &CriticalDensityConfig,
    fleet_size: u64,
    horizon_days: f64,
) -> ShareTable {
    let total_distance = distance_by_type.total();
    let threshold = cfg.focus * cfg.y_c;
    let mut mass = PerType::<f64>::default();
    let mut population = 0;
    for r in table.records().filter(|r| r.total > threshold) {
        population += 1;
        for t in TripType::ALL {
            mass[t] += r.by_type[t];
        }
    }
    let total_mass = mass.total();
    let rows = TripType::ALL
        .into_iter()
        .map(|t| {
            let km = if fleet_size > 0 && horizon_days > 0.0 {
                distance_by_type[t] / fleet_size as f64 / horizon_days / 1000.0
            } else {
                0.0
            };
            let row = ShareRow {
                distance_share: if total_distance > 0.0 { distance_by_type[t] / total_distance } else { 0.0 },
                congestion_share: if total_mass > 0.0 { mass[t] / total_mass } else { 0.0 },
                km_per_vehicle_day: km,
            };
            (t, row)
        })
        .collect();
    ShareTable {
        rows,
        total_distance_m: total_distance,
        congestion_population: population,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Lower edge of every bin; the last bin is open above.
    pub bin_low: Vec<f64>,
    /// Upper edge of every bin, `f64::INFINITY` for the last.
    pub bin_high: Vec<f64>,
    pub counts: Vec<u64>,
    /// Population members below the inclusion threshold.
    pub excluded: u64,
    pub population: u64,
}

impl Histogram {
    pub fn excluded_fraction(&self) -> f64 {
        if self.population == 0 {
            1.0
        } else {
            self.excluded as f64 / self.population as f64
        }
    }

    pub fn included(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedHistogram {
    pub histogram: Histogram,
    /// Each edge-window's unit count split by its per-type density shares.
    pub stack_counts: Vec<PerType<f64>>,
    /// Per-type density summed over the edge-windows in each bin.
    pub stack_density: Vec<PerType<f64>>,
}

impl StackedHistogram {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_histogram(path, &self.histogram, Some(&self.stack_counts))
    }
}

/// Histogram parameters shared by the plain and stacked variants.
#[derive(Debug, Clone)]
pub struct HistogramSpec {
    pub bins: usize,
    pub focus_only: bool,
    pub scope: TypeSet,
    /// Windows forming the population together with every network edge.
    pub windows: Range<usize>,
}

fn binning(cfg: &CriticalDensityConfig, spec: &HistogramSpec) -> Result<(f64, f64)> {
    cfg.validate()?;
    if spec.bins < 2 {
        return Err(Error::InvalidConfig("histogram needs at least 2 bins".into()));
    }
    let low = if spec.focus_only { cfg.focus } else { cfg.low_cut } * cfg.y_c;
    let width = (cfg.cap * cfg.y_c - low) / spec.bins as f64;
    Ok((low, width))
}

fn bin_index(d: f64, low: f64, width: f64, bins: usize) -> usize {
    (((d - low) / width).floor() as usize).min(bins - 1)
}

/// Histogram of density over every (edge, window) in `spec.windows`.
/// Edge-windows absent from the table count as density zero.
pub fn density_histogram(
    table: &DensityTable,
    net: &RoadNetwork,
    cfg: &CriticalDensityConfig,
    spec: &HistogramSpec,
) -> Result<Histogram> {
    Ok(stacked_histogram(table, net, cfg, spec)?.histogram)
}

pub fn stacked_histogram(
    table: &DensityTable,
    net: &RoadNetwork,
    cfg: &CriticalDensityConfig,
    spec: &HistogramSpec,
) -> Result<StackedHistogram> {
    let (low, width) = binning(cfg, spec)?;
    let bins = spec.bins;
    let population = (net.edge_count() * spec.windows.len()) as u64;
    let mut counts = vec![0u64; bins];
    let mut stack_counts = vec![PerType::<f64>::default(); bins];
    let mut stack_density = vec![PerType::<f64>::default(); bins];
    for r in table.records().filter(|r| spec.windows.contains(&r.window)) {
        let d = r.scoped(spec.scope);
        if d < low {
            continue;
        }
        let b = bin_index(d, low, width, bins);
        counts[b] += 1;
        for t in spec.scope.iter() {
            stack_counts[b][t] += r.by_type[t] / d;
            stack_density[b][t] += r.by_type[t];
        }
    }
    let included: u64 = counts.iter().sum();
    let bin_low: Vec<f64> = (0..bins).map(|i| low + i as f64 * width).collect();
    let mut bin_high: Vec<f64> = (1..=bins).map(|i| low + i as f64 * width).collect();
    bin_high[bins - 1] = f64::INFINITY;
    Ok(StackedHistogram {
        histogram: Histogram {
            bin_low,
            bin_high,
            counts,
            excluded: population.saturating_sub(included),
            population,
        },
        stack_counts,
        stack_density,
    })
}

pub fn write_histogram(path: &Path, h: &Histogram, stacks: Option<&[PerType<f64>]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from_csv(path, e))?;
    let mut header = vec!["bin_low", "bin_high", "count"];
    if stacks.is_some() {
        header.extend(TripType::ALL.iter().map(|t| t.as_str()));
    }
    w.write_record(&header).map_err(|e| Error::from_csv(path, e))?;
    for i in 0..h.counts.len() {
        let high = if h.bin_high[i].is_finite() {
            h.bin_high[i].to_string()
        } else {
            "inf".to_string()
        };
        let mut row = vec![h.bin_low[i].to_string(), high, h.counts[i].to_string()];
        if let Some(s) = stacks {
            row.extend(TripType::ALL.iter().map(|&t| s[i][t].to_string()));
        }
        w.write_record(&row).map_err(|e| Error::from_csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mean density of each edge over `windows` as GeoJSON line features.
/// Edges with no record in the range are omitted.
pub fn export_heatmap(
    table: &DensityTable,
    net: &RoadNetwork,
    windows: Range<usize>,
    scope: TypeSet,
) -> Result<serde_json::Value> {
    let span = windows.len().max(1) as f64;
    let mut sums: BTreeMap<EdgeId, f64> = BTreeMap::new();
    for r in table.records().filter(|r| windows.contains(&r.window)) {
        *sums.entry(r.edge).or_default() += r.scoped(scope);
    }
    let mut features = Vec::with_capacity(sums.len());
    for (edge_id, sum) in sums {
        let e = net.edge(edge_id).ok_or(Error::UnknownEdge(edge_id))?;
        let a = net.node(e.from).ok_or(Error::UnknownNode(e.from))?;
        let b = net.node(e.to).ok_or(Error::UnknownNode(e.to))?;
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[a.lon, a.lat], [b.lon, b.lat]],
            },
            "properties": {
                "edge_id": edge_id.0,
                "lanes": e.lanes,
                "density": sum / span,
            },
        }));
    }
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    writeln!(f, "{text}").map_err(|e| Error::io(path, e))
}
