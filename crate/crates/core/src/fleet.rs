//! Fleet sizing: find per-station starting inventories such that no station
//! ever runs out of vehicles.
//!
//! The procedure alternates two steps until the counts stop changing:
//!
//! 1. plan rebalancing against the current counts and simulate with the
//!    backstop on, so every request is served and each station's signed
//!    inventory trajectory is recorded;
//! 2. set each station's count to the depth of its deepest dip below the
//!    starting level.
//!
//! With the backstop every dispatch happens regardless of stock, so the
//! trajectory is the starting count plus a count-independent net flow. The
//! counts from step 2 are therefore exactly sufficient for the rebalancing
//! plan of the same iteration, and that pair is what gets returned.

use crate::error::{Error, Result};
use crate::rebalancing::{forecast_from_services, plan_rebalancing, RebalancingConfig, RebalancingPlan};
use crate::sim::{SimOptions, Simulator};
use crate::stations::StationPlan;

pub const MAX_SIZING_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FleetSizing {
    pub plan: StationPlan,
    /// Rebalancing plan the counts were sized against.
    pub rebalancing: RebalancingPlan,
    pub iterations: usize,
    /// Counts were unchanged between the last two iterations.
    pub converged: bool,
    /// Fleet size after each iteration.
    pub history: Vec<u64>,
}

/// Size the fleet for the stations held by `sim`.
pub fn size_fleet(sim: &Simulator<'_>, cfg: RebalancingConfig, window_s: f64) -> Result<FleetSizing> {
    let layout = sim
        .layout()
        .ok_or_else(|| Error::InvalidConfig("fleet sizing needs stations".into()))?;
    let n = layout.len();
    let forecast = forecast_from_services(sim.services(), n, cfg.slice_s)?;
    let opts = SimOptions {
        backstop: true,
        window_s,
        slice_s: cfg.slice_s,
        ..SimOptions::default()
    };

    let mut counts = vec![0u32; n];
    let mut history = Vec::new();
    let mut iteration = 0;
    loop {
        iteration += 1;
        let rebalancing = plan_rebalancing(&forecast, &counts, layout.cost_matrix(), cfg)?;
        let run = sim.run_mod(&counts, &rebalancing, &opts)?;
        let required: Vec<u32> = counts
            .iter()
            .zip(&run.per_station_min_inventory)
            .map(|(&c, &low)| (c as i64 - low).max(0) as u32)
            .collect();
        let fleet: u64 = required.iter().map(|&c| c as u64).sum();
        history.push(fleet);
        log::debug!("fleet sizing iteration {iteration}: {fleet} vehicles");
        let converged = required == counts;
        if converged || iteration == MAX_SIZING_ITERATIONS {
            if !converged {
                log::warn!("fleet sizing did not converge in {MAX_SIZING_ITERATIONS} iterations");
            }
            return Ok(FleetSizing {
                plan: StationPlan {
                    stations: layout.stations().to_vec(),
                    initial_counts: required,
                },
                rebalancing,
                iterations: iteration,
                converged,
                history,
            });
        }
        counts = required;
    }
}
