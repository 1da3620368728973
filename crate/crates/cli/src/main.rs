use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Deserialize;

use modsim::analytics::{
    compute_density, congestion_diff, export_heatmap, share_table, stacked_histogram, write_json,
    CriticalDensityConfig, HistogramSpec,
};
use modsim::demand::{load_trips, DemandSet, DAY_S};
use modsim::fleet::size_fleet;
use modsim::network::{RoadNetwork, DEFAULT_SPEED_KMH};
use modsim::rebalancing::{build_forecast, plan_rebalancing, RebalancingConfig, RebalancingPlan, DEFAULT_SLICE_S};
use modsim::report::{write_events, RunSummary};
use modsim::sim::{EdgeOccupancyLog, PerType, SimOptions, SimulationResult, Simulator, TypeSet, DEFAULT_WINDOW_S};
use modsim::stations::{mean_pickup_time, plan_stations, ClusterPoints, StationLayout, StationPlan, DEFAULT_STATIONS, PICKUP_BOUND_S};
use modsim::synthetic::{write_network, write_trips, CommuteDemand, GridCity};

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_ENOUGH_POINTS: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "modsim", version, about = "Station-based mobility-on-demand simulation and congestion analytics")]
struct Cli {
    /// TOML file with defaults for any of the options below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    nodes: Option<PathBuf>,
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    #[arg(long, global = true)]
    trips: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_stations: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Critical density, vehicles per meter per lane.
    #[arg(long, global = true)]
    yc: Option<f64>,
    /// Occupancy window, seconds.
    #[arg(long, global = true)]
    window_s: Option<f64>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Fail with exit code 4 when fleet sizing does not converge.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic grid city and commute demand as CSV input files.
    GridCity {
        #[arg(long, default_value_t = 2000)]
        trip_count: usize,
    },
    /// Place stations by k-means over trip endpoints.
    Plan {
        #[arg(long, value_enum)]
        cluster: Option<Cluster>,
    },
    /// Size per-station inventories and write the matching rebalancing plan.
    SizeFleet {
        #[arg(long)]
        stations: Option<PathBuf>,
    },
    /// Plan rebalancing against the inventories in a stations file.
    Rebalance {
        #[arg(long)]
        stations: Option<PathBuf>,
    },
    /// Run a scenario and write its occupancy log and summary.
    Simulate {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        stations: Option<PathBuf>,
        #[arg(long)]
        rebalancing: Option<PathBuf>,
        /// Plan stations and size the fleet first when no stations file exists.
        #[arg(long)]
        auto: bool,
        /// Also write events.csv.
        #[arg(long)]
        events: bool,
    },
    /// Densities, share table, histogram and heat map for one run directory.
    Analyze {
        run: PathBuf,
        #[arg(long)]
        bins: Option<usize>,
        /// Histogram only edge-windows above the focus threshold.
        #[arg(long)]
        focus_only: bool,
        /// First and one-past-last window index for the heat map.
        #[arg(long, num_args = 2, value_names = ["FROM", "TO"])]
        heatmap_windows: Option<Vec<usize>>,
    },
    /// Edge-windows congested only once the fleet's empty trips are added.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        fleet: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Cluster {
    OriginsAndDestinations,
    Origins,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Mode {
    Conventional,
    Mod,
}

impl Mode {
    fn dir(self) -> &'static str {
        match self {
            Mode::Conventional => "conventional",
            Mode::Mod => "mod",
        }
    }
}

/// Keys accepted in the config file. Relative paths are taken relative to the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    nodes: Option<PathBuf>,
    edges: Option<PathBuf>,
    trips: Option<PathBuf>,
    out: Option<PathBuf>,
    n_stations: Option<usize>,
    seed: Option<u64>,
    cluster: Option<Cluster>,
    yc: Option<f64>,
    low_cut: Option<f64>,
    focus: Option<f64>,
    cap: Option<f64>,
    bins: Option<usize>,
    window_s: Option<f64>,
    slice_s: Option<f64>,
    lookahead: Option<usize>,
    default_speed_kmh: Option<f64>,
    horizon_days: Option<f64>,
    jobs: Option<usize>,
    strict: Option<bool>,
}

#[derive(Debug)]
struct Settings {
    nodes: Option<PathBuf>,
    edges: Option<PathBuf>,
    trips: Option<PathBuf>,
    out: PathBuf,
    n_stations: usize,
    seed: u64,
    cluster: ClusterPoints,
    density: CriticalDensityConfig,
    bins: usize,
    window_s: f64,
    rebalancing: RebalancingConfig,
    default_speed_kmh: f64,
    horizon_days: f64,
    jobs: Option<usize>,
    strict: bool,
}

impl Settings {
    fn resolve(cli: &Cli) -> anyhow::Result<Self> {
        let (file, base) = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
        let defaults = CriticalDensityConfig::default();
        let density = CriticalDensityConfig {
            y_c: cli.yc.or(file.yc).unwrap_or(defaults.y_c),
            low_cut: file.low_cut.unwrap_or(defaults.low_cut),
            focus: file.focus.unwrap_or(defaults.focus),
            cap: file.cap.unwrap_or(defaults.cap),
        };
        density.validate()?;
        let cluster = match file.cluster {
            Some(Cluster::Origins) => ClusterPoints::OriginsOnly,
            _ => ClusterPoints::OriginsAndDestinations,
        };
        Ok(Self {
            nodes: cli.nodes.clone().or_else(|| rel(file.nodes.clone())),
            edges: cli.edges.clone().or_else(|| rel(file.edges.clone())),
            trips: cli.trips.clone().or_else(|| rel(file.trips.clone())),
            out: cli.out.clone().or_else(|| rel(file.out.clone())).unwrap_or_else(|| PathBuf::from("out")),
            n_stations: cli.n_stations.or(file.n_stations).unwrap_or(DEFAULT_STATIONS),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            cluster,
            density,
            bins: file.bins.unwrap_or(20),
            window_s: cli.window_s.or(file.window_s).unwrap_or(DEFAULT_WINDOW_S),
            rebalancing: RebalancingConfig {
                slice_s: file.slice_s.unwrap_or(DEFAULT_SLICE_S),
                lookahead: file.lookahead.unwrap_or(RebalancingConfig::default().lookahead),
            },
            default_speed_kmh: file.default_speed_kmh.unwrap_or(DEFAULT_SPEED_KMH),
            horizon_days: file.horizon_days.unwrap_or(1.0),
            jobs: cli.jobs.or(file.jobs),
            strict: cli.strict || file.strict.unwrap_or(false),
        })
    }

    fn path(&self, p: &Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
        p.clone()
            .with_context(|| format!("no {what} file given (use --{what} or the config file)"))
    }

    fn network(&self) -> anyhow::Result<RoadNetwork> {
        let nodes = self.path(&self.nodes, "nodes")?;
        let edges = self.path(&self.edges, "edges")?;
        let net = RoadNetwork::load(&nodes, &edges, self.default_speed_kmh)?;
        info!("network: {} nodes, {} edges", net.node_count(), net.edge_count());
        Ok(net)
    }

    fn demand(&self, net: &RoadNetwork) -> anyhow::Result<DemandSet> {
        let trips = self.path(&self.trips, "trips")?;
        let (demand, report) = load_trips(&trips, net)?;
        info!(
            "demand: {} trips ({} unroutable, {} degenerate dropped)",
            demand.len(),
            report.unroutable,
            report.degenerate
        );
        Ok(demand)
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions {
            window_s: self.window_s,
            slice_s: self.rebalancing.slice_s,
            ..SimOptions::default()
        }
    }
}

#[derive(Debug)]
struct NotConverged(usize);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "fleet sizing did not converge in {} iterations", self.0)
    }
}

impl std::error::Error for NotConverged {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<NotConverged>().is_some() {
            return EXIT_NOT_CONVERGED;
        }
        if let Some(e) = cause.downcast_ref::<modsim::Error>() {
            return match e {
                modsim::Error::NotEnoughPoints { .. } => EXIT_NOT_ENOUGH_POINTS,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let s = Settings::resolve(&cli)?;
    if let Some(jobs) = s.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    std::fs::create_dir_all(&s.out).with_context(|| format!("creating {}", s.out.display()))?;

    match &cli.command {
        Command::GridCity { trip_count } => grid_city(&s, *trip_count),
        Command::Plan { cluster } => {
            let mut s = s;
            match cluster {
                Some(Cluster::Origins) => s.cluster = ClusterPoints::OriginsOnly,
                Some(Cluster::OriginsAndDestinations) => s.cluster = ClusterPoints::OriginsAndDestinations,
                None => {}
            }
            let net = s.network()?;
            let demand = s.demand(&net)?;
            plan(&s, &net, &demand).map(|_| ())
        }
        Command::SizeFleet { stations } => {
            let net = s.network()?;
            let demand = s.demand(&net)?;
            let plan = StationPlan::read(&stations_path(&s, stations))?;
            size(&s, &net, &demand, &plan).map(|_| ())
        }
        Command::Rebalance { stations } => {
            let net = s.network()?;
            let demand = s.demand(&net)?;
            let plan = StationPlan::read(&stations_path(&s, stations))?;
            let layout = StationLayout::new(&net, &plan.stations)?;
            let forecast = build_forecast(&demand, &layout, &net, s.rebalancing.slice_s)?;
            let rebalancing = plan_rebalancing(&forecast, &plan.initial_counts, layout.cost_matrix(), s.rebalancing)?;
            rebalancing.write_csv(&s.out.join("rebalancing.csv"))?;
            println!("{} rebalancing moves", rebalancing.total_vehicles());
            Ok(())
        }
        Command::Simulate {
            mode,
            stations,
            rebalancing,
            auto,
            events,
        } => simulate(&s, *mode, stations, rebalancing, *auto, *events),
        Command::Analyze {
            run,
            bins,
            focus_only,
            heatmap_windows,
        } => analyze(&s, run, bins.unwrap_or(s.bins), *focus_only, heatmap_windows.as_deref()),
        Command::Compare { baseline, fleet } => compare(&s, baseline, fleet),
    }
}

fn stations_path(s: &Settings, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| s.out.join("stations.json"))
}

fn grid_city(s: &Settings, trip_count: usize) -> anyhow::Result<()> {
    let city = GridCity::default();
    let net = city.build()?;
    let demand = CommuteDemand {
        trips: trip_count,
        seed: s.seed,
        ..CommuteDemand::default()
    }
    .generate(&city)?;
    write_network(&net, &s.out.join("nodes.csv"), &s.out.join("edges.csv"))?;
    write_trips(&demand, &net, &s.out.join("trips.csv"))?;
    println!("{} nodes, {} edges, {} trips", net.node_count(), net.edge_count(), demand.len());
    Ok(())
}

fn plan(s: &Settings, net: &RoadNetwork, demand: &DemandSet) -> anyhow::Result<StationPlan> {
    let stations = plan_stations(demand, net, s.n_stations, s.seed, s.cluster)?;
    let layout = StationLayout::new(net, &stations)?;
    let pickup = mean_pickup_time(&layout, demand, net)?;
    if pickup > PICKUP_BOUND_S {
        warn!("mean pick-up time {pickup:.1} s exceeds {PICKUP_BOUND_S} s");
    }
    let plan = StationPlan::with_zero_counts(stations);
    plan.write(&s.out.join("stations.json"))?;
    println!("{} stations, mean pick-up time {pickup:.1} s", plan.stations.len());
    Ok(plan)
}

fn size(s: &Settings, net: &RoadNetwork, demand: &DemandSet, plan: &StationPlan) -> anyhow::Result<(StationPlan, RebalancingPlan)> {
    let layout = StationLayout::new(net, &plan.stations)?;
    let sim = Simulator::station_based(net, demand, &layout)?;
    let sizing = size_fleet(&sim, s.rebalancing, s.window_s)?;
    sizing.plan.write(&s.out.join("stations.json"))?;
    sizing.rebalancing.write_csv(&s.out.join("rebalancing.csv"))?;
    println!(
        "fleet of {} vehicles after {} iterations, {} rebalancing moves",
        sizing.plan.fleet_size(),
        sizing.iterations,
        sizing.rebalancing.total_vehicles()
    );
    if !sizing.converged {
        warn!("fleet sizing did not converge; keeping the last iterate");
        if s.strict {
            bail!(NotConverged(sizing.iterations));
        }
    }
    Ok((sizing.plan, sizing.rebalancing))
}

fn simulate(
    s: &Settings,
    mode: Mode,
    stations: &Option<PathBuf>,
    rebalancing: &Option<PathBuf>,
    auto: bool,
    events: bool,
) -> anyhow::Result<()> {
    let net = s.network()?;
    let demand = s.demand(&net)?;
    let opts = SimOptions {
        record_events: events,
        ..s.sim_options()
    };
    let result = match mode {
        Mode::Conventional => Simulator::conventional(&net, &demand).run_conventional(&opts)?,
        Mode::Mod => {
            let stations_file = stations_path(s, stations);
            let (plan, rebalancing) = if auto && !stations_file.exists() {
                let placed = plan(s, &net, &demand)?;
                size(s, &net, &demand, &placed)?
            } else {
                let plan = StationPlan::read(&stations_file)?;
                let reb_file = rebalancing.clone().unwrap_or_else(|| s.out.join("rebalancing.csv"));
                (plan, RebalancingPlan::read_csv(&reb_file)?)
            };
            let layout = StationLayout::new(&net, &plan.stations)?;
            Simulator::station_based(&net, &demand, &layout)?.run_mod(&plan.initial_counts, &rebalancing, &opts)?
        }
    };
    write_run(&s.out.join(mode.dir()), mode.dir(), &result)?;
    println!(
        "{}: served {}, unsatisfied {}, fleet {}",
        mode.dir(),
        result.served,
        result.unsatisfied,
        result.fleet_size
    );
    Ok(())
}

fn write_run(dir: &Path, scenario: &str, result: &SimulationResult) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    result.log.write_csv(&dir.join("occupancy.csv"))?;
    RunSummary::new(scenario, result).write(&dir.join("summary.json"))?;
    if let Some(events) = &result.event_trace {
        write_events(&dir.join("events.csv"), events)?;
    }
    Ok(())
}

fn read_run(dir: &Path) -> anyhow::Result<(RunSummary, EdgeOccupancyLog)> {
    let summary = RunSummary::read(&dir.join("summary.json"))?;
    let log = EdgeOccupancyLog::read_csv(&dir.join("occupancy.csv"), summary.window_s)?;
    Ok((summary, log))
}

fn analyze(s: &Settings, dir: &Path, bins: usize, focus_only: bool, heatmap: Option<&[usize]>) -> anyhow::Result<()> {
    let net = s.network()?;
    let (summary, log) = read_run(dir)?;
    let table = compute_density(&log, &net)?;
    table.write_csv(&dir.join("densities.csv"))?;

    let mut distance = PerType::<f64>::default();
    for (t, d) in &summary.distance_m {
        distance[*t] = *d;
    }
    let shares = share_table(&distance, &table, &s.density, summary.fleet_size, s.horizon_days);
    write_json(&dir.join("share_table.json"), &shares)?;

    let horizon_windows = (s.horizon_days * DAY_S / summary.window_s).ceil() as usize;
    let windows = 0..horizon_windows.max(table.window_count());
    let spec = HistogramSpec {
        bins,
        focus_only,
        scope: TypeSet::ALL,
        windows: windows.clone(),
    };
    let hist = stacked_histogram(&table, &net, &s.density, &spec)?;
    hist.write_csv(&dir.join("histogram.csv"))?;

    let heat_range = match heatmap {
        Some([from, to]) => *from..*to,
        _ => windows,
    };
    let geo = export_heatmap(&table, &net, heat_range, TypeSet::ALL)?;
    write_json(&dir.join("heatmap.geojson"), &geo)?;
    println!(
        "{}: empty-trip distance share {:.1}%, {:.1}% of edge-windows below the histogram cut",
        summary.scenario,
        100.0 * shares.empty_trip_distance_share(),
        100.0 * hist.histogram.excluded_fraction()
    );
    Ok(())
}

fn compare(s: &Settings, baseline: &Path, fleet: &Path) -> anyhow::Result<()> {
    let net = s.network()?;
    let (_, base_log) = read_run(baseline)?;
    let (_, fleet_log) = read_run(fleet)?;
    let diff = congestion_diff(&compute_density(&base_log, &net)?, &compute_density(&fleet_log, &net)?, &s.density)?;
    diff.write_csv(&s.out.join("congestion_diff.csv"))?;
    println!("{} newly congested edge-windows", diff.newly_congested.len());
    Ok(())
}
