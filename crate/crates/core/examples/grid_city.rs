//! Full pipeline on the synthetic grid city, printing the headline numbers.
//!
//! cargo run --release -p modsim --example grid_city [n_stations] [seed]

use modsim::analytics::{congested_edges, HistogramSpec};
use modsim::stations::ClusterPoints;
use modsim::synthetic::{CommuteDemand, GridCity};
use modsim::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(4, |a| a.parse().expect("station count"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let city = GridCity::default();
    let net = city.build()?;
    let demand = CommuteDemand { seed, ..Default::default() }.generate(&city)?;
    let stations = plan_stations(&demand, &net, n, seed, ClusterPoints::default())?;
    let layout = StationLayout::new(&net, &stations)?;
    let sim = Simulator::station_based(&net, &demand, &layout)?;
    let sizing = size_fleet(&sim, RebalancingConfig::default(), 600.0)?;
    println!(
        "stations {:?}\nfleet {} after {} iterations (converged: {}) history {:?}",
        stations.iter().map(|s| s.node.0).collect::<Vec<_>>(),
        sizing.plan.fleet_size(),
        sizing.iterations,
        sizing.converged,
        sizing.history
    );
    let opts = SimOptions::default();
    let fleet = sim.run_mod(&sizing.plan.initial_counts, &sizing.rebalancing, &opts)?;
    let base = run_conventional(&demand, &net, &opts)?;
    println!(
        "served {} unsatisfied {} min inventory {:?} rebalancing moves {}",
        fleet.served,
        fleet.unsatisfied,
        fleet.per_station_min_inventory,
        sizing.rebalancing.total_vehicles()
    );

    let cfg = CriticalDensityConfig::default();
    let dm = compute_density(&fleet.log, &net)?;
    let db = compute_density(&base.log, &net)?;
    let shares = share_table(&fleet.distance_by_type, &dm, &cfg, fleet.fleet_size, 1.0);
    for t in TripType::ALL {
        let r = shares.row(t);
        println!(
            "{t:>12} distance {:5.1}% congestion {:5.1}% km/veh/day {:6.1}",
            100.0 * r.distance_share,
            100.0 * r.congestion_share,
            r.km_per_vehicle_day
        );
    }
    println!("empty-trip distance share {:.1}%", 100.0 * shares.empty_trip_distance_share());
    println!(
        "congested: conventional {} fleet {} newly {}",
        congested_edges(&db, &cfg, TypeSet::ALL).len(),
        congested_edges(&dm, &cfg, TypeSet::ALL).len(),
        congestion_diff(&db, &dm, &cfg)?.newly_congested.len()
    );
    let peak = |t: &DensityTable| t.records().map(|r| r.total).fold(0.0, f64::max);
    println!("peak density: conventional {:.4} fleet {:.4}", peak(&db), peak(&dm));
    let windows = 0..dm.window_count().max(db.window_count());
    let h = density_histogram(&dm, &net, &cfg, &HistogramSpec { bins: 10, focus_only: false, scope: TypeSet::ALL, windows })?;
    println!("histogram {:?} excluded {:.1}%", h.counts, 100.0 * h.excluded_fraction());
    Ok(())
}
