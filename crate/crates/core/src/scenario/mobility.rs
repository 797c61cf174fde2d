//! Vehicles driving random shortest paths on the road grid.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::geometry::Point;
use super::road::{Intersection, RoadNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    pub speed_min: f64,
    pub speed_max: f64,
    /// Lateral offset of the antenna to the right of the centre line.
    pub lane_offset: f64,
    /// Share of vehicles with a raised (truck) antenna.
    pub truck_fraction: f64,
    pub car_antenna_height: f64,
    pub truck_antenna_height: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            speed_min: 8.0,
            speed_max: 14.0,
            lane_offset: 2.0,
            truck_fraction: 0.2,
            car_antenna_height: 1.5,
            truck_antenna_height: 3.0,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self, road: &RoadNetwork) -> Result<()> {
        if !(0.0 <= self.speed_min && self.speed_min <= self.speed_max && self.speed_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= speed_min <= speed_max, got [{}, {}]",
                self.speed_min, self.speed_max
            )));
        }
        if !(0.0..=road.setback).contains(&self.lane_offset) {
            return Err(Error::InvalidConfig(format!(
                "lane_offset must lie in [0, setback={}], got {}",
                road.setback, self.lane_offset
            )));
        }
        if !(0.0..=1.0).contains(&self.truck_fraction) {
            return Err(Error::InvalidConfig("truck_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u32,
    /// Position on the road centre line.
    pub position: Point,
    pub speed: f64,
    /// Unit vector along the current segment.
    pub heading: Point,
    /// Remaining waypoints; the front is the next intersection.
    pub planned_path: VecDeque<Intersection>,
    pub antenna_height: f64,
    pub lane_offset: f64,
}

impl VehicleState {
    /// Where the radio sits: in the right-hand lane of the current segment.
    pub fn antenna_position(&self) -> Point {
        self.position + self.heading.right_normal() * self.lane_offset
    }
}

/// Poisson number of vehicles, placed uniformly on the roads, each driving a
/// random shortest path to a random destination.
pub fn spawn_vehicles<R: Rng + ?Sized>(
    road: &RoadNetwork,
    density_per_km: f64,
    params: &MobilityParams,
    rng: &mut R,
) -> Result<Vec<VehicleState>> {
    if !(density_per_km >= 0.0 && density_per_km.is_finite()) {
        return Err(Error::contract(format!("density must be >= 0, got {density_per_km}")));
    }
    let mean = density_per_km * road.total_length_m() / 1000.0;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::contract(format!("poisson mean {mean}: {e}")))?
            .sample(rng) as u32
    } else {
        0
    };
    let edges = road.edges();
    let mut out = Vec::with_capacity(count as usize);
    for id in 0..count {
        let (u, v) = edges[rng.random_range(0..edges.len())];
        let along = rng.random_range(0.0..road.block_size);
        let (pu, pv) = (road.node_position(u), road.node_position(v));
        let position = pu + (pv - pu).normalized() * along;
        let next = if rng.random_bool(0.5) { u } else { v };
        let speed = if params.speed_max > params.speed_min {
            rng.random_range(params.speed_min..=params.speed_max)
        } else {
            params.speed_min
        };
        let antenna_height = if rng.random_bool(params.truck_fraction) {
            params.truck_antenna_height
        } else {
            params.car_antenna_height
        };
        let mut planned_path = VecDeque::from([next]);
        extend_path(road, &mut planned_path, rng);
        let heading = (if next == v { pv - pu } else { pu - pv }).normalized();
        out.push(VehicleState {
            id,
            position,
            speed,
            heading,
            planned_path,
            antenna_height,
            lane_offset: params.lane_offset,
        });
    }
    Ok(out)
}

/// Append a random shortest path from the last waypoint to a fresh random
/// destination.
fn extend_path<R: Rng + ?Sized>(road: &RoadNetwork, path: &mut VecDeque<Intersection>, rng: &mut R) {
    let from = *path.back().expect("path has a start");
    if road.intersection_count() < 2 {
        return;
    }
    let to = loop {
        let cand = Intersection {
            i: rng.random_range(0..=road.n_blocks_x),
            j: rng.random_range(0..=road.n_blocks_y),
        };
        if cand != from {
            break cand;
        }
    };
    let (di, dj) = (i32::from(to.i) - i32::from(from.i), i32::from(to.j) - i32::from(from.j));
    let mut moves: Vec<bool> = std::iter::repeat_n(true, di.unsigned_abs() as usize)
        .chain(std::iter::repeat_n(false, dj.unsigned_abs() as usize))
        .collect();
    moves.shuffle(rng);
    let mut cur = from;
    for horizontal in moves {
        if horizontal {
            cur.i = cur.i.wrapping_add_signed(di.signum() as i16);
        } else {
            cur.j = cur.j.wrapping_add_signed(dj.signum() as i16);
        }
        path.push_back(cur);
    }
}

/// Advance a vehicle `dt` seconds along its planned path, turning at
/// waypoints and drawing a new destination when the path runs out.
pub fn step_mobility<R: Rng + ?Sized>(
    v: &VehicleState,
    dt: f64,
    road: &RoadNetwork,
    rng: &mut R,
) -> VehicleState {
    let mut next = v.clone();
    let mut remaining = v.speed * dt.max(0.0);
    while remaining > 0.0 {
        let Some(&target) = next.planned_path.front() else {
            break;
        };
        let target_pos = road.node_position(target);
        let to_go = next.position.distance(target_pos);
        if remaining < to_go {
            next.heading = (target_pos - next.position).normalized();
            next.position = next.position + next.heading * remaining;
            remaining = 0.0;
        } else {
            next.position = target_pos;
            remaining -= to_go;
            next.planned_path.pop_front();
            if next.planned_path.is_empty() {
                next.planned_path.push_back(target);
                extend_path(road, &mut next.planned_path, rng);
                next.planned_path.pop_front();
            }
            if let Some(&after) = next.planned_path.front() {
                next.heading = (road.node_position(after) - next.position).normalized();
            }
        }
    }
    next
}
