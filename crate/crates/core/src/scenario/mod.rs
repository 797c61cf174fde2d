//! The physical world of a run: road grid, vehicles, RSUs and blockage.
//!
//! Node ids are shared by all radio modules: vehicles are `0..n_vehicles`
//! and RSUs follow as `n_vehicles..n_vehicles + n_rsus`.

mod blockage;
mod geometry;
mod mobility;
mod road;

use std::hash::{Hash, Hasher};

pub use blockage::{link_key, BlockageField, BlockageProcess};
pub use geometry::{LinkState, Point, Rect};
pub use mobility::{spawn_vehicles, step_mobility, MobilityParams, VehicleState};
pub use road::{Intersection, LosIndex, RoadNetwork};

use crate::error::{Error, Result};
use crate::sim::{rng_stream, streams, Clock, SimConfig, SimRng};

/// Capacity value meaning "no limit".
pub const UNLIMITED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct RsuSite {
    pub id: u32,
    pub position: Point,
    /// Maximum number of simultaneously attached CAVs.
    pub capacity: usize,
}

/// RSUs every `spacing` metres along every road, intersections included,
/// without duplicates.
pub fn place_rsus(road: &RoadNetwork, spacing: f64, capacity: usize) -> Result<Vec<RsuSite>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidConfig(format!("rsu spacing must be > 0, got {spacing}")));
    }
    let mut pts = Vec::new();
    let on_grid = |v: f64| (v / road.block_size - (v / road.block_size).round()).abs() < 1e-9;
    let steps_x = (road.width() / spacing + 1e-9).floor() as u32;
    let steps_y = (road.height() / spacing + 1e-9).floor() as u32;
    for j in 0..=road.n_blocks_y {
        let y = f64::from(j) * road.block_size;
        for k in 0..=steps_x {
            pts.push(Point::new(f64::from(k) * spacing, y));
        }
    }
    for i in 0..=road.n_blocks_x {
        let x = f64::from(i) * road.block_size;
        for k in 0..=steps_y {
            let y = f64::from(k) * spacing;
            if !on_grid(y) {
                pts.push(Point::new(x, y));
            }
        }
    }
    Ok(pts
        .into_iter()
        .enumerate()
        .map(|(id, position)| RsuSite {
            id: id as u32,
            position,
            capacity,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub road: RoadNetwork,
    pub density_per_km: f64,
    pub mobility: MobilityParams,
    pub blockage: BlockageProcess,
    pub rsu_spacing: f64,
    pub rsu_height: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            road: RoadNetwork::default(),
            density_per_km: 60.0,
            mobility: MobilityParams::default(),
            blockage: BlockageProcess::default(),
            rsu_spacing: 125.0,
            rsu_height: 5.0,
        }
    }
}

/// A running scenario. Owns every stochastic process of the environment so
/// that two policies replaying the same `(params, seed)` see identical
/// traces.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub vehicles: Vec<VehicleState>,
    pub rsus: Vec<RsuSite>,
    mobility_rng: SimRng,
    blockage: BlockageField,
    clock: Clock,
}

impl Scenario {
    pub fn new(params: ScenarioParams, sim: &SimConfig) -> Result<Self> {
        sim.validate()?;
        params.mobility.validate(&params.road)?;
        let mut spawn_rng = rng_stream(sim.seed, streams::SPAWN);
        let vehicles = spawn_vehicles(&params.road, params.density_per_km, &params.mobility, &mut spawn_rng)?;
        let rsus = place_rsus(&params.road, params.rsu_spacing, UNLIMITED)?;
        let blockage = BlockageField::new(sim.seed, params.blockage.clone(), sim.duration);
        Ok(Self {
            params,
            vehicles,
            rsus,
            mobility_rng: rng_stream(sim.seed, streams::MOBILITY),
            blockage,
            clock: sim.clock(),
        })
    }

    pub fn road(&self) -> &RoadNetwork {
        &self.params.road
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn step_index(&self) -> u64 {
        self.clock.step_index()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }

    pub fn node_count(&self) -> usize {
        self.vehicles.len() + self.rsus.len()
    }

    pub fn is_rsu(&self, node: u32) -> bool {
        node as usize >= self.vehicles.len()
    }

    pub fn rsu_node(&self, rsu_index: usize) -> u32 {
        (self.vehicles.len() + rsu_index) as u32
    }

    /// Antenna position of any node.
    pub fn node_position(&self, node: u32) -> Point {
        let n = node as usize;
        match self.vehicles.get(n) {
            Some(v) => v.antenna_position(),
            None => self.rsus[n - self.vehicles.len()].position,
        }
    }

    pub fn node_height(&self, node: u32) -> f64 {
        match self.vehicles.get(node as usize) {
            Some(v) => v.antenna_height,
            None => self.params.rsu_height,
        }
    }

    /// 3-D distance between two nodes' antennas.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        let horizontal = self.node_position(a).distance(self.node_position(b));
        horizontal.hypot(self.node_height(a) - self.node_height(b))
    }

    pub fn geometry(&self, a: u32, b: u32) -> LinkState {
        self.params
            .road
            .los_geometry(self.node_position(a), self.node_position(b))
    }

    /// Current link state including dynamic blockage.
    pub fn link_state(&mut self, a: u32, b: u32) -> LinkState {
        let geometry = self.geometry(a, b);
        self.link_state_with(a, b, geometry)
    }

    /// Like [`Self::link_state`] when the geometric state is already known.
    pub fn link_state_with(&mut self, a: u32, b: u32, geometry: LinkState) -> LinkState {
        let now = self.clock.now();
        self.blockage.sample_link_state(a, b, now, geometry)
    }

    pub fn blockage(&mut self) -> &mut BlockageField {
        &mut self.blockage
    }

    /// Advance every vehicle by one mobility step.
    pub fn step(&mut self) {
        let dt = self.clock.step();
        let road = &self.params.road;
        let rng = &mut self.mobility_rng;
        for v in self.vehicles.iter_mut() {
            *v = step_mobility(v, dt, road, rng);
        }
        self.clock = self.clock.advance();
    }

    /// Feed the observable environment state (time and positions) into a
    /// hasher, for paired-trace verification.
    pub fn fingerprint<H: Hasher>(&self, h: &mut H) {
        self.clock.step_index().hash(h);
        for v in &self.vehicles {
            v.position.x.to_bits().hash(h);
            v.position.y.to_bits().hash(h);
            v.heading.x.to_bits().hash(h);
            v.heading.y.to_bits().hash(h);
        }
    }

    /// Index of the vehicle nearest to `node` (excluding itself).
    pub fn nearest_vehicle(&self, node: u32) -> Option<u32> {
        let p = self.node_position(node);
        (0..self.vehicles.len() as u32)
            .filter(|&v| v != node)
            .min_by(|&a, &b| {
                p.distance_sq(self.node_position(a))
                    .total_cmp(&p.distance_sq(self.node_position(b)))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            duration: 60.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn rsu_placement_default() {
        let rsus = place_rsus(&RoadNetwork::default(), 125.0, 4).unwrap();
        // 5 horizontal roads x 9 points + 5 vertical roads x 4 mid-block points
        assert_eq!(rsus.len(), 65);
        let road = RoadNetwork::default();
        assert!(rsus.iter().all(|r| road.on_road(r.position, 1e-9)));
        for (i, a) in rsus.iter().enumerate() {
            for b in &rsus[i + 1..] {
                assert_ne!(a.position, b.position);
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let mut a = Scenario::new(ScenarioParams::default(), &desk(5)).unwrap();
        let mut b = Scenario::new(ScenarioParams::default(), &desk(5)).unwrap();
        for _ in 0..50 {
            a.step();
            b.step();
        }
        assert_eq!(a.vehicles, b.vehicles);
        assert_eq!(a.link_state(0, 1), b.link_state(0, 1));
    }

    #[test]
    fn different_seed_different_world() {
        let a = Scenario::new(ScenarioParams::default(), &desk(5)).unwrap();
        let b = Scenario::new(ScenarioParams::default(), &desk(6)).unwrap();
        assert_ne!(a.vehicles, b.vehicles);
    }

    #[test]
    fn node_ids_cover_vehicles_then_rsus() {
        let s = Scenario::new(ScenarioParams::default(), &desk(1)).unwrap();
        let first_rsu = s.rsu_node(0);
        assert_eq!(first_rsu as usize, s.vehicle_count());
        assert!(s.is_rsu(first_rsu));
        assert!(!s.is_rsu(0));
        assert_eq!(s.node_position(first_rsu), s.rsus[0].position);
    }
}
