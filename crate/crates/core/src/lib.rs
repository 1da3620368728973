//! Station-based mobility-on-demand simulation on a road graph, with
//! congestion analytics over the resulting edge occupancy.
//!
//! The usual pipeline:
//!
//! 1. [`RoadNetwork::load`] and [`load_trips`];
//! 2. [`plan_stations`] to place stations by k-means;
//! 3. [`size_fleet`] for starting inventories and a rebalancing plan;
//! 4. [`run_conventional`] and [`run_mod`];
//! 5. [`analytics`] on both occupancy logs.

pub mod analytics;
pub mod demand;
pub mod error;
pub mod fleet;
pub mod geo;
pub mod kmeans;
pub mod network;
pub mod rebalancing;
pub mod report;
pub mod sim;
pub mod stations;
pub mod synthetic;
pub mod transport;

pub use analytics::{
    compute_density, congested_edges, congestion_diff, density_histogram, export_heatmap, share_table,
    stacked_histogram, CongestionDiff, CriticalDensityConfig, DensityRecord, DensityTable, HistogramSpec,
    ShareTable,
};
pub use demand::{load_trips, DemandSet, TripRequest};
pub use error::{Error, Result};
pub use fleet::{size_fleet, FleetSizing};
pub use network::{EdgeId, NodeId, Path, RoadNetwork};
pub use rebalancing::{plan_rebalancing, RebalancingConfig, RebalancingPlan};
pub use report::RunSummary;
pub use sim::{run_conventional, run_mod, EdgeOccupancyLog, SimOptions, SimulationResult, Simulator, TripType, TypeSet};
pub use stations::{plan_stations, StationLayout, StationPlan};
pub use transport::solve_transportation;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/stations.md")]
    mod stations {}
    #[doc = include_str!("../../../book/src/rebalancing.md")]
    mod rebalancing {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/density.md")]
    mod density {}
}
