use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use super::{EdgeOccupancyLog, PerType, TripType, DEFAULT_WINDOW_S};
use crate::demand::{DemandSet, TripRequest};
use crate::error::{Error, Result};
use crate::network::{NodeId, Path, RoadNetwork};
use crate::rebalancing::{RebalancingPlan, DEFAULT_SLICE_S};
use crate::stations::{StationId, StationLayout};

/// The three legs a station-based vehicle drives to serve one trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ServicePlan {
    pub trip_id: u64,
    pub depart_time_s: f64,
    pub dispatch_station: StationId,
    pub pickup: Path,
    pub ride: Path,
    pub return_station: StationId,
    pub dropoff: Path,
}

impl ServicePlan {
    pub fn pickup_end_s(&self) -> f64 {
        self.depart_time_s + self.pickup.travel_time_s
    }

    pub fn ride_end_s(&self) -> f64 {
        self.pickup_end_s() + self.ride.travel_time_s
    }

    /// Time the vehicle is back at a station.
    pub fn return_time_s(&self) -> f64 {
        self.ride_end_s() + self.dropoff.travel_time_s
    }
}

/// Shortest-path legs for one trip: dispatch station to origin, origin to
/// destination, destination to return station.
pub fn plan_service(net: &RoadNetwork, layout: &StationLayout, trip: &TripRequest) -> Result<ServicePlan> {
    let (dispatch_station, _) = layout.dispatch_station(net, trip.origin).ok_or(Error::Unreachable {
        from: trip.origin,
        to: trip.origin,
    })?;
    let (return_station, _) = layout
        .return_station(net, trip.destination)
        .ok_or(Error::Unreachable {
            from: trip.destination,
            to: trip.destination,
        })?;
    Ok(ServicePlan {
        trip_id: trip.id,
        depart_time_s: trip.depart_time_s,
        dispatch_station,
        pickup: net.shortest_path(layout.station_node(dispatch_station), trip.origin)?,
        ride: net.shortest_path(trip.origin, trip.destination)?,
        return_station,
        dropoff: net.shortest_path(trip.destination, layout.station_node(return_station))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VehicleState {
    IdleAtStation(StationId),
    EnRoute(TripType),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u64,
    pub home_station: Option<StationId>,
    pub state: VehicleState,
    /// Created on demand by the infinite-inventory backstop.
    pub phantom: bool,
}

/// One contiguous vehicle movement with a single purpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub vehicle: u64,
    pub trip_id: Option<u64>,
    pub trip_type: TripType,
    pub from_node: NodeId,
    pub to_node: NodeId,
    pub start_s: f64,
    pub end_s: f64,
    pub distance_m: f64,
}

/// A line of the event trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time_s: f64,
    pub event: &'static str,
    pub entity_id: u64,
    pub detail: String,
}

/// Read-only view of the fleet handed to observers after every event.
pub struct FleetView<'a> {
    pub vehicles: &'a [Vehicle],
    /// Idle vehicles per station, longest idle first.
    pub idle_queues: &'a [VecDeque<u64>],
    pub initial_fleet: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Create a vehicle whenever a station is asked for one it lacks, and
    /// track the resulting negative inventory.
    pub backstop: bool,
    pub window_s: f64,
    pub slice_s: f64,
    pub record_events: bool,
    pub record_legs: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            backstop: false,
            window_s: DEFAULT_WINDOW_S,
            slice_s: DEFAULT_SLICE_S,
            record_events: false,
            record_legs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub log: EdgeOccupancyLog,
    /// Meters driven per trip type.
    pub distance_by_type: PerType<f64>,
    pub served: u64,
    pub unsatisfied: u64,
    /// Vehicles present at time zero (one per trip in the conventional
    /// scenario).
    pub fleet_size: u64,
    pub phantom_vehicles: u64,
    /// Lowest signed inventory each station reached; negative only with the
    /// backstop.
    pub per_station_min_inventory: Vec<i64>,
    /// Ordered rebalancing moves that could not be made for lack of vehicles.
    pub rebalancing_shortfall: u64,
    pub legs: Vec<Leg>,
    pub event_trace: Option<Vec<TraceEvent>>,
}

/// Reusable simulation context. Per-trip service legs and station-to-station
/// paths are computed once and shared by every run.
pub struct Simulator<'a> {
    net: &'a RoadNetwork,
    demand: &'a DemandSet,
    layout: Option<&'a StationLayout>,
    services: Vec<ServicePlan>,
    rebalancing_paths: Vec<Vec<Path>>,
}

impl<'a> Simulator<'a> {
    /// Context for the private-vehicle scenario only.
    pub fn conventional(net: &'a RoadNetwork, demand: &'a DemandSet) -> Self {
        Self {
            net,
            demand,
            layout: None,
            services: Vec::new(),
            rebalancing_paths: Vec::new(),
        }
    }

    /// Context for both scenarios.
    pub fn station_based(net: &'a RoadNetwork, demand: &'a DemandSet, layout: &'a StationLayout) -> Result<Self> {
        let services = demand
            .trips()
            .par_iter()
            .map(|t| plan_service(net, layout, t))
            .collect::<Result<Vec<_>>>()?;
        let rebalancing_paths = layout
            .stations()
            .par_iter()
            .map(|from| {
                let tree = net.shortest_path_tree(from.node)?;
                layout
                    .stations()
                    .iter()
                    .map(|to| tree.path_to(to.node))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            demand,
            layout: Some(layout),
            services,
            rebalancing_paths,
        })
    }

    pub fn services(&self) -> &[ServicePlan] {
        &self.services
    }

    pub fn layout(&self) -> Option<&StationLayout> {
        self.layout
    }

    /// Every trip driven by its own private vehicle, which appears at the
    /// origin at request time and vanishes at the destination.
    pub fn run_conventional(&self, opts: &SimOptions) -> Result<SimulationResult> {
        let mut log = EdgeOccupancyLog::new(opts.window_s)?;
        let mut distance = PerType::<f64>::default();
        let mut legs = Vec::new();
        let mut trace = opts.record_events.then(Vec::new);
        for (vid, trip) in self.demand.trips().iter().enumerate() {
            let path = self.net.shortest_path(trip.origin, trip.destination)?;
            let end = drive(self.net, &mut log, &path, trip.depart_time_s, TripType::Demand);
            distance[TripType::Demand] += path.distance_m;
            if opts.record_legs {
                legs.push(Leg {
                    vehicle: vid as u64,
                    trip_id: Some(trip.id),
                    trip_type: TripType::Demand,
                    from_node: trip.origin,
                    to_node: trip.destination,
                    start_s: trip.depart_time_s,
                    end_s: end,
                    distance_m: path.distance_m,
                });
            }
            if let Some(tr) = trace.as_mut() {
                tr.push(TraceEvent {
                    time_s: trip.depart_time_s,
                    event: "depart",
                    entity_id: trip.id,
                    detail: format!("vehicle={vid} node={}", trip.origin),
                });
                tr.push(TraceEvent {
                    time_s: end,
                    event: "arrive",
                    entity_id: trip.id,
                    detail: format!("vehicle={vid} node={}", trip.destination),
                });
            }
        }
        if let Some(tr) = trace.as_mut() {
            tr.sort_by(|a, b| a.time_s.total_cmp(&b.time_s).then(a.entity_id.cmp(&b.entity_id)));
        }
        Ok(SimulationResult {
            log,
            distance_by_type: distance,
            served: self.demand.len() as u64,
            unsatisfied: 0,
            fleet_size: self.demand.len() as u64,
            phantom_vehicles: 0,
            per_station_min_inventory: Vec::new(),
            rebalancing_shortfall: 0,
            legs,
            event_trace: trace,
        })
    }

    /// Station-based fleet: each trip is served from its dispatch station if
    /// that station has an idle vehicle, otherwise it is unsatisfied (or, with
    /// the backstop, served by a newly created vehicle).
    pub fn run_mod(
        &self,
        initial_counts: &[u32],
        rebalancing: &RebalancingPlan,
        opts: &SimOptions,
    ) -> Result<SimulationResult> {
        self.run_mod_observed(initial_counts, rebalancing, opts, |_, _| {})
    }

    /// As [`Simulator::run_mod`], calling `observer` after every processed
    /// event.
    pub fn run_mod_observed(
        &self,
        initial_counts: &[u32],
        rebalancing: &RebalancingPlan,
        opts: &SimOptions,
        mut observer: impl FnMut(&TraceEvent, &FleetView<'_>),
    ) -> Result<SimulationResult> {
        let layout = self
            .layout
            .ok_or_else(|| Error::InvalidConfig("simulator was built without stations".into()))?;
        let n = layout.len();
        if initial_counts.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} initial counts for {} stations",
                initial_counts.len(),
                n
            )));
        }
        if let Some(o) = rebalancing.orders().iter().find(|o| o.from_station >= n || o.to_station >= n) {
            return Err(Error::InvalidConfig(format!(
                "rebalancing order names unknown station ({} -> {})",
                o.from_station, o.to_station
            )));
        }
        if !(opts.slice_s > 0.0) {
            return Err(Error::InvalidConfig("slice length must be > 0".into()));
        }
        ModRun::new(self, layout, initial_counts, opts)?.run(rebalancing, &mut observer)
    }
}

/// Drive `path` from `start_s`, logging each edge; returns the arrival time.
fn drive(net: &RoadNetwork, log: &mut EdgeOccupancyLog, path: &Path, start_s: f64, tt: TripType) -> f64 {
    let mut elapsed = 0.0;
    for id in &path.edge_ids {
        let edge = net.edge(*id).expect("path edges exist");
        let enter = start_s + elapsed;
        elapsed += edge.travel_time_s();
        log.record_traversal(*id, enter, start_s + elapsed, tt);
    }
    start_s + elapsed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Rebalance = 0,
    Request = 1,
    Arrival = 2,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    RebalanceSlice(usize),
    Request(usize),
    PickupReached { vehicle: u64, trip: usize },
    DropoffReached { vehicle: u64, trip: usize },
    ArriveStation { vehicle: u64, station: StationId, rebalancing: bool },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time_s: f64,
    class: Class,
    entity: u64,
    seq: u64,
    action: Action,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // BinaryHeap is a max-heap; reverse for earliest first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time_s
            .total_cmp(&self.time_s)
            .then(other.class.cmp(&self.class))
            .then(other.entity.cmp(&self.entity))
            .then(other.seq.cmp(&self.seq))
    }
}

struct ModRun<'s, 'a> {
    sim: &'s Simulator<'a>,
    layout: &'a StationLayout,
    opts: SimOptions,
    vehicles: Vec<Vehicle>,
    queues: Vec<VecDeque<u64>>,
    inventory: Vec<i64>,
    min_inventory: Vec<i64>,
    initial_fleet: u64,
    heap: BinaryHeap<Event>,
    seq: u64,
    log: EdgeOccupancyLog,
    distance: PerType<f64>,
    served: u64,
    unsatisfied: u64,
    phantoms: u64,
    shortfall: u64,
    legs: Vec<Leg>,
    trace: Option<Vec<TraceEvent>>,
}

impl<'s, 'a> ModRun<'s, 'a> {
    fn new(sim: &'s Simulator<'a>, layout: &'a StationLayout, counts: &[u32], opts: &SimOptions) -> Result<Self> {
        let mut vehicles = Vec::new();
        let mut queues = vec![VecDeque::new(); counts.len()];
        for (s, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                let id = vehicles.len() as u64;
                vehicles.push(Vehicle {
                    id,
                    home_station: Some(s),
                    state: VehicleState::IdleAtStation(s),
                    phantom: false,
                });
                queues[s].push_back(id);
            }
        }
        let inventory: Vec<i64> = counts.iter().map(|&c| c as i64).collect();
        Ok(Self {
            sim,
            layout,
            opts: *opts,
            initial_fleet: vehicles.len() as u64,
            vehicles,
            queues,
            min_inventory: inventory.clone(),
            inventory,
            heap: BinaryHeap::new(),
            seq: 0,
            log: EdgeOccupancyLog::new(opts.window_s)?,
            distance: PerType::default(),
            served: 0,
            unsatisfied: 0,
            phantoms: 0,
            shortfall: 0,
            legs: Vec::new(),
            trace: opts.record_events.then(Vec::new),
        })
    }

    fn push(&mut self, time_s: f64, class: Class, entity: u64, action: Action) {
        self.seq += 1;
        self.heap.push(Event {
            time_s,
            class,
            entity,
            seq: self.seq,
            action,
        });
    }

    fn run(
        mut self,
        plan: &RebalancingPlan,
        observer: &mut impl FnMut(&TraceEvent, &FleetView<'_>),
    ) -> Result<SimulationResult> {
        let mut slices: Vec<usize> = plan.orders().iter().map(|o| o.slice_index).collect();
        slices.dedup();
        for k in slices {
            self.push(k as f64 * self.opts.slice_s, Class::Rebalance, k as u64, Action::RebalanceSlice(k));
        }
        for (i, t) in self.sim.demand.trips().iter().enumerate() {
            self.push(t.depart_time_s, Class::Request, t.id, Action::Request(i));
        }

        let mut events = Vec::new();
        while let Some(ev) = self.heap.pop() {
            events.clear();
            match ev.action {
                Action::RebalanceSlice(k) => self.rebalance(ev.time_s, k, plan, &mut events),
                Action::Request(i) => self.request(ev.time_s, i, &mut events),
                Action::PickupReached { vehicle, trip } => {
                    self.vehicles[vehicle as usize].state = VehicleState::EnRoute(TripType::Demand);
                    events.push(TraceEvent {
                        time_s: ev.time_s,
                        event: "pickup",
                        entity_id: vehicle,
                        detail: format!("trip={}", self.sim.services[trip].trip_id),
                    });
                }
                Action::DropoffReached { vehicle, trip } => {
                    self.vehicles[vehicle as usize].state = VehicleState::EnRoute(TripType::DropOff);
                    events.push(TraceEvent {
                        time_s: ev.time_s,
                        event: "dropoff",
                        entity_id: vehicle,
                        detail: format!("trip={}", self.sim.services[trip].trip_id),
                    });
                }
                Action::ArriveStation {
                    vehicle,
                    station,
                    rebalancing,
                } => {
                    self.vehicles[vehicle as usize].state = VehicleState::IdleAtStation(station);
                    self.queues[station].push_back(vehicle);
                    self.inventory[station] += 1;
                    events.push(TraceEvent {
                        time_s: ev.time_s,
                        event: "arrive",
                        entity_id: vehicle,
                        detail: format!(
                            "station={station}{}",
                            if rebalancing { " rebalancing" } else { "" }
                        ),
                    });
                }
            }
            let view = FleetView {
                vehicles: &self.vehicles,
                idle_queues: &self.queues,
                initial_fleet: self.initial_fleet,
            };
            for e in &events {
                observer(e, &view);
            }
            if let Some(tr) = self.trace.as_mut() {
                tr.extend(events.drain(..));
            }
        }

        Ok(SimulationResult {
            log: self.log,
            distance_by_type: self.distance,
            served: self.served,
            unsatisfied: self.unsatisfied,
            fleet_size: self.initial_fleet,
            phantom_vehicles: self.phantoms,
            per_station_min_inventory: self.min_inventory,
            rebalancing_shortfall: self.shortfall,
            legs: self.legs,
            event_trace: self.trace,
        })
    }

    /// Longest-idle vehicle at `station`, or a new phantom under the backstop.
    fn take_vehicle(&mut self, station: StationId, time_s: f64, events: &mut Vec<TraceEvent>) -> Option<u64> {
        let vid = match self.queues[station].pop_front() {
            Some(v) => v,
            None if self.opts.backstop => {
                let id = self.vehicles.len() as u64;
                self.vehicles.push(Vehicle {
                    id,
                    home_station: Some(station),
                    state: VehicleState::IdleAtStation(station),
                    phantom: true,
                });
                self.phantoms += 1;
                events.push(TraceEvent {
                    time_s,
                    event: "phantom",
                    entity_id: id,
                    detail: format!("station={station}"),
                });
                id
            }
            None => return None,
        };
        self.inventory[station] -= 1;
        if self.inventory[station] < self.min_inventory[station] {
            self.min_inventory[station] = self.inventory[station];
        }
        Some(vid)
    }

    #[allow(clippy::too_many_arguments)]
    fn drive_leg(&mut self, vehicle: u64, trip_id: Option<u64>, tt: TripType, path: &Path, from: NodeId, to: NodeId, start_s: f64) -> f64 {
        let end = drive(self.sim.net, &mut self.log, path, start_s, tt);
        self.distance[tt] += path.distance_m;
        if self.opts.record_legs {
            self.legs.push(Leg {
                vehicle,
                trip_id,
                trip_type: tt,
                from_node: from,
                to_node: to,
                start_s,
                end_s: end,
                distance_m: path.distance_m,
            });
        }
        end
    }

    fn request(&mut self, now: f64, i: usize, events: &mut Vec<TraceEvent>) {
        let sim = self.sim;
        let svc = &sim.services[i];
        let trip = &sim.demand.trips()[i];
        let station = svc.dispatch_station;
        events.push(TraceEvent {
            time_s: now,
            event: "request",
            entity_id: trip.id,
            detail: format!("origin={} destination={}", trip.origin, trip.destination),
        });
        let Some(vid) = self.take_vehicle(station, now, events) else {
            self.unsatisfied += 1;
            events.push(TraceEvent {
                time_s: now,
                event: "unsatisfied",
                entity_id: trip.id,
                detail: format!("station={station}"),
            });
            return;
        };
        self.served += 1;
        self.vehicles[vid as usize].state = VehicleState::EnRoute(TripType::PickUp);
        events.push(TraceEvent {
            time_s: now,
            event: "dispatch",
            entity_id: vid,
            detail: format!("trip={} station={station}", trip.id),
        });
        let station_node = self.layout.station_node(station);
        let return_node = self.layout.station_node(svc.return_station);
        let picked = self.drive_leg(vid, Some(trip.id), TripType::PickUp, &svc.pickup, station_node, trip.origin, now);
        let dropped = self.drive_leg(vid, Some(trip.id), TripType::Demand, &svc.ride, trip.origin, trip.destination, picked);
        let back = self.drive_leg(vid, Some(trip.id), TripType::DropOff, &svc.dropoff, trip.destination, return_node, dropped);
        self.push(picked, Class::Arrival, vid, Action::PickupReached { vehicle: vid, trip: i });
        self.push(dropped, Class::Arrival, vid, Action::DropoffReached { vehicle: vid, trip: i });
        self.push(
            back,
            Class::Arrival,
            vid,
            Action::ArriveStation {
                vehicle: vid,
                station: svc.return_station,
                rebalancing: false,
            },
        );
    }

    fn rebalance(&mut self, now: f64, slice: usize, plan: &RebalancingPlan, events: &mut Vec<TraceEvent>) {
        let sim = self.sim;
        let start = plan.orders().partition_point(|o| o.slice_index < slice);
        for o in plan.orders()[start..].iter().take_while(|o| o.slice_index == slice) {
            let path = &sim.rebalancing_paths[o.from_station][o.to_station];
            for moved in 0..o.count {
                let Some(vid) = self.take_vehicle(o.from_station, now, events) else {
                    let missing = (o.count - moved) as u64;
                    self.shortfall += missing;
                    events.push(TraceEvent {
                        time_s: now,
                        event: "shortfall",
                        entity_id: o.from_station as u64,
                        detail: format!("to={} missing={missing}", o.to_station),
                    });
                    break;
                };
                self.vehicles[vid as usize].state = VehicleState::EnRoute(TripType::Rebalancing);
                events.push(TraceEvent {
                    time_s: now,
                    event: "rebalance",
                    entity_id: vid,
                    detail: format!("from={} to={}", o.from_station, o.to_station),
                });
                let from = self.layout.station_node(o.from_station);
                let to = self.layout.station_node(o.to_station);
                let end = self.drive_leg(vid, None, TripType::Rebalancing, path, from, to, now);
                self.push(
                    end,
                    Class::Arrival,
                    vid,
                    Action::ArriveStation {
                        vehicle: vid,
                        station: o.to_station,
                        rebalancing: true,
                    },
                );
            }
        }
    }
}

/// Run the private-vehicle scenario.
pub fn run_conventional(demand: &DemandSet, net: &RoadNetwork, opts: &SimOptions) -> Result<SimulationResult> {
    Simulator::conventional(net, demand).run_conventional(opts)
}

/// Run the station-based scenario.
pub fn run_mod(
    demand: &DemandSet,
    net: &RoadNetwork,
    layout: &StationLayout,
    initial_counts: &[u32],
    rebalancing: &RebalancingPlan,
    opts: &SimOptions,
) -> Result<SimulationResult> {
    Simulator::station_based(net, demand, layout)?.run_mod(initial_counts, rebalancing, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeId, Node, RoadEdge};
    use crate::rebalancing::RebalancingOrder;
    use crate::stations::Station;

    /// A - B - C, two-way, 1000 m per link at 10 m/s.
    fn line() -> RoadNetwork {
        let nodes = (0..3).map(|i| Node { id: NodeId(i), lat: 0.0, lon: i as f64 * 0.01 }).collect();
        let mut edges = Vec::new();
        for (a, b) in [(0, 1), (1, 2)] {
            for (from, to) in [(a, b), (b, a)] {
                edges.push(RoadEdge {
                    id: EdgeId(edges.len() as u64),
                    from: NodeId(from),
                    to: NodeId(to),
                    length_m: 1000.0,
                    lanes: 1,
                    speed_mps: 10.0,
                });
            }
        }
        RoadNetwork::new(nodes, edges).unwrap()
    }

    fn trips(spec: &[(u64, f64, u64, u64)]) -> DemandSet {
        DemandSet::new(
            spec.iter()
                .map(|&(id, t, o, d)| TripRequest { id, depart_time_s: t, origin: NodeId(o), destination: NodeId(d) })
                .collect(),
        )
        .unwrap()
    }

    fn layout(net: &RoadNetwork, nodes: &[u64]) -> StationLayout {
        let stations: Vec<_> = nodes.iter().enumerate().map(|(id, &n)| Station { id, node: NodeId(n) }).collect();
        StationLayout::new(net, &stations).unwrap()
    }

    fn traced() -> SimOptions {
        SimOptions { record_events: true, record_legs: true, ..SimOptions::default() }
    }

    #[test]
    fn hand_trace_on_a_line() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2)]);
        let lay = layout(&net, &[0]);
        let r = run_mod(&demand, &net, &lay, &[1], &RebalancingPlan::default(), &traced()).unwrap();
        assert_eq!((r.served, r.unsatisfied, r.fleet_size), (1, 0, 1));
        let legs: Vec<_> = r.legs.iter().map(|l| (l.trip_type, l.from_node.0, l.to_node.0, l.start_s, l.end_s)).collect();
        assert_eq!(
            legs,
            vec![
                (TripType::PickUp, 0, 1, 0.0, 100.0),
                (TripType::Demand, 1, 2, 100.0, 200.0),
                (TripType::DropOff, 2, 0, 200.0, 400.0),
            ]
        );
        assert_eq!(r.distance_by_type.0, [1000.0, 1000.0, 2000.0, 0.0]);
        let names: Vec<_> = r.event_trace.unwrap().iter().map(|e| (e.time_s, e.event)).collect();
        assert_eq!(
            names,
            vec![(0.0, "request"), (0.0, "dispatch"), (100.0, "pickup"), (200.0, "dropoff"), (400.0, "arrive")]
        );
        assert_eq!(r.per_station_min_inventory, vec![0]);
    }

    #[test]
    fn empty_station_leaves_demand_unsatisfied() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2)]);
        let lay = layout(&net, &[0]);
        let r = run_mod(&demand, &net, &lay, &[0], &RebalancingPlan::default(), &SimOptions::default()).unwrap();
        assert_eq!((r.served, r.unsatisfied), (0, 1));
        assert!(r.log.is_empty());
    }

    #[test]
    fn backstop_creates_phantoms_and_tracks_the_dip() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2), (2, 10.0, 1, 2)]);
        let lay = layout(&net, &[0]);
        let opts = SimOptions { backstop: true, ..SimOptions::default() };
        let r = run_mod(&demand, &net, &lay, &[0], &RebalancingPlan::default(), &opts).unwrap();
        assert_eq!((r.served, r.unsatisfied, r.phantom_vehicles), (2, 0, 2));
        assert_eq!(r.per_station_min_inventory, vec![-2]);
    }

    #[test]
    fn request_precedes_arrival_at_the_same_instant() {
        let net = line();
        // first vehicle is back at 400 s, exactly when the second trip asks
        let demand = trips(&[(1, 0.0, 1, 2), (2, 400.0, 1, 2)]);
        let lay = layout(&net, &[0]);
        let r = run_mod(&demand, &net, &lay, &[1], &RebalancingPlan::default(), &SimOptions::default()).unwrap();
        assert_eq!((r.served, r.unsatisfied), (1, 1));
    }

    #[test]
    fn longest_idle_vehicle_goes_first() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2), (2, 500.0, 1, 2)]);
        let lay = layout(&net, &[0]);
        let r = run_mod(&demand, &net, &lay, &[2], &RebalancingPlan::default(), &traced()).unwrap();
        let dispatched: Vec<_> = r.legs.iter().filter(|l| l.trip_type == TripType::PickUp).map(|l| l.vehicle).collect();
        assert_eq!(dispatched, vec![0, 1]);
    }

    #[test]
    fn rebalancing_moves_what_exists() {
        let net = line();
        let demand = trips(&[]);
        let lay = layout(&net, &[0, 2]);
        let plan = RebalancingPlan::new(vec![RebalancingOrder { slice_index: 1, from_station: 0, to_station: 1, count: 2 }]).unwrap();
        let r = run_mod(&demand, &net, &lay, &[1, 0], &plan, &traced()).unwrap();
        assert_eq!(r.rebalancing_shortfall, 1);
        assert_eq!(r.distance_by_type[TripType::Rebalancing], 2000.0);
        let leg = &r.legs[0];
        assert_eq!((leg.start_s, leg.end_s), (600.0, 800.0));
        assert_eq!(r.per_station_min_inventory, vec![0, 0]);
    }

    #[test]
    fn fleet_is_conserved_after_every_event() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2), (2, 5.0, 2, 0), (3, 5.0, 0, 1), (4, 450.0, 1, 0), (5, 451.0, 2, 1)]);
        let lay = layout(&net, &[0, 2]);
        let plan = RebalancingPlan::new(vec![RebalancingOrder { slice_index: 0, from_station: 1, to_station: 0, count: 1 }]).unwrap();
        let sim = Simulator::station_based(&net, &demand, &lay).unwrap();
        let mut checked = 0;
        sim.run_mod_observed(&[2, 2], &plan, &SimOptions::default(), |_, view| {
            let idle: usize = view.idle_queues.iter().map(|q| q.len()).sum();
            let moving = view.vehicles.iter().filter(|v| matches!(v.state, VehicleState::EnRoute(_))).count();
            assert_eq!((idle + moving) as u64, view.initial_fleet);
            checked += 1;
        })
        .unwrap();
        assert!(checked > 10);
    }

    #[test]
    fn conventional_uses_one_vehicle_per_trip() {
        let net = line();
        let demand = trips(&[(1, 0.0, 0, 2), (2, 30.0, 2, 1)]);
        let r = run_conventional(&demand, &net, &traced()).unwrap();
        assert_eq!((r.served, r.fleet_size), (2, 2));
        assert_eq!(r.distance_by_type.0, [3000.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.legs[0].end_s, 200.0);
    }

    #[test]
    fn replays_are_identical() {
        let net = line();
        let demand = trips(&[(1, 0.0, 1, 2), (2, 5.0, 2, 0), (3, 5.0, 0, 1)]);
        let lay = layout(&net, &[0, 2]);
        let a = run_mod(&demand, &net, &lay, &[1, 1], &RebalancingPlan::default(), &traced()).unwrap();
        let b = run_mod(&demand, &net, &lay, &[1, 1], &RebalancingPlan::default(), &traced()).unwrap();
        assert_eq!(a, b);
    }
}
