//! Discrete-event simulation of the conventional and the station-based
//! mobility-on-demand scenarios.
//!
//! Vehicles drive at free-flow speed along shortest paths; load never feeds
//! back into travel times. Every edge traversal is written to an
//! [`EdgeOccupancyLog`], which is all the congestion analytics need.

mod engine;
mod log;

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::{
    plan_service, run_conventional, run_mod, FleetView, Leg, ServicePlan, SimOptions, SimulationResult,
    Simulator, TraceEvent, Vehicle, VehicleState,
};
pub use log::{EdgeOccupancyLog, OccupancyCell, OccupancyKey, DEFAULT_WINDOW_S};

/// Purpose of a vehicle movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripType {
    /// Carrying a passenger.
    Demand,
    /// Station to passenger origin.
    #[serde(rename = "pickup")]
    PickUp,
    /// Passenger destination to station.
    #[serde(rename = "dropoff")]
    DropOff,
    /// Empty station-to-station move.
    Rebalancing,
}

impl TripType {
    pub const ALL: [TripType; 4] = [TripType::Demand, TripType::PickUp, TripType::DropOff, TripType::Rebalancing];

    pub fn as_str(self) -> &'static str {
        match self {
            TripType::Demand => "demand",
            TripType::PickUp => "pickup",
            TripType::DropOff => "dropoff",
            TripType::Rebalancing => "rebalancing",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Vehicle moves without a passenger aboard.
    pub fn is_empty_trip(self) -> bool {
        self != TripType::Demand
    }
}

impl fmt::Display for TripType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TripType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TripType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown trip type {s:?}"))
    }
}

/// One value per trip type.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerType<T>(pub [T; 4]);

impl<T> Index<TripType> for PerType<T> {
    type Output = T;

    fn index(&self, t: TripType) -> &T {
        &self.0[t.index()]
    }
}

impl<T> IndexMut<TripType> for PerType<T> {
    fn index_mut(&mut self, t: TripType) -> &mut T {
        &mut self.0[t.index()]
    }
}

impl<T: Copy> PerType<T> {
    pub fn iter(&self) -> impl Iterator<Item = (TripType, T)> + '_ {
        TripType::ALL.into_iter().map(move |t| (t, self[t]))
    }
}

impl PerType<f64> {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// A subset of trip types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeSet([bool; 4]);

impl TypeSet {
    pub const ALL: TypeSet = TypeSet([true; 4]);
    pub const DEMAND: TypeSet = TypeSet([true, false, false, false]);

    pub fn of(types: &[TripType]) -> Self {
        let mut s = [false; 4];
        for t in types {
            s[t.index()] = true;
        }
        TypeSet(s)
    }

    pub fn contains(&self, t: TripType) -> bool {
        self.0[t.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = TripType> + '_ {
        TripType::ALL.into_iter().filter(|t| self.contains(*t))
    }
}
