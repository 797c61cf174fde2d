//! Sidelink resource allocation on a slot x subchannel grid.
//!
//! Resources are numbered `slot * subchannels + subchannel`. Two competing
//! schemes share the grid: autonomous sensing-based selection (Mode 2) and a
//! central proportional-fair scheduler run by the controller.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::Point;

pub type Resource = u32;

/// EWMA smoothing of the PF average rate.
pub const PF_ALPHA: f64 = 0.1;
/// Initial PF average rate.
pub const PF_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceGrid {
    pub period_slots: u32,
    pub subchannels: u32,
}

impl Default for ResourceGrid {
    fn default() -> Self {
        Self {
            period_slots: 100,
            subchannels: 4,
        }
    }
}

impl ResourceGrid {
    pub fn new(period_slots: u32, subchannels: u32) -> Result<Self> {
        if period_slots == 0 || subchannels == 0 {
            return Err(Error::InvalidConfig("resource grid dimensions must be >= 1".into()));
        }
        Ok(Self {
            period_slots,
            subchannels,
        })
    }

    pub fn total(&self) -> u32 {
        self.period_slots * self.subchannels
    }

    pub fn resource(&self, slot: u32, subchannel: u32) -> Resource {
        slot * self.subchannels + subchannel
    }

    /// Bits carried by one resource at spectral efficiency 1.
    pub fn resource_bits_per_se(&self, bandwidth_hz: f64, slot_duration: f64) -> f64 {
        bandwidth_hz / f64::from(self.subchannels) * slot_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxRequest {
    pub vehicle: u32,
    /// Resource units wanted this period.
    pub demand: u32,
}

/// Which vehicles hear each other. Symmetric, no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    n: usize,
    adj: Vec<bool>,
}

impl InterferenceGraph {
    /// Everyone within `range` metres interferes.
    pub fn from_positions(pos: &[Point], range: f64) -> Self {
        let n = pos.len();
        let r2 = range * range;
        let mut adj = vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                if pos[i].distance_sq(pos[j]) <= r2 {
                    adj[i * n + j] = true;
                    adj[j * n + i] = true;
                }
            }
        }
        Self { n, adj }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut adj = vec![false; n * n];
        for &(a, b) in pairs {
            if a != b {
                adj[a * n + b] = true;
                adj[b * n + a] = true;
            }
        }
        Self { n, adj }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn in_range(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.n + b]
    }
}

/// Uniformly pick `min(demand, |free|)` distinct resources from `free`.
/// Output is sorted.
pub fn mode2_select<R: Rng + ?Sized>(free: &[Resource], demand: u32, rng: &mut R) -> Vec<Resource> {
    let k = (demand as usize).min(free.len());
    let mut out: Vec<Resource> = index::sample(rng, free.len(), k).into_iter().map(|i| free[i]).collect();
    out.sort_unstable();
    out
}

/// Resources perceived busy by `vehicle`: everything its in-range
/// neighbours used in the previous period.
pub fn sensed_busy(grid: &ResourceGrid, previous: &[Vec<Resource>], graph: &InterferenceGraph, vehicle: usize) -> Vec<bool> {
    let mut busy = vec![false; grid.total() as usize];
    for (j, sel) in previous.iter().enumerate() {
        if j != vehicle && graph.in_range(vehicle, j) {
            for &r in sel {
                busy[r as usize] = true;
            }
        }
    }
    busy
}

/// For each vehicle, the resources of its selection that collide: some
/// in-range vehicle picked the same resource.
pub fn detect_collisions(grid: &ResourceGrid, selections: &[Vec<Resource>], graph: &InterferenceGraph) -> Vec<Vec<Resource>> {
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); grid.total() as usize];
    for (v, sel) in selections.iter().enumerate() {
        for &r in sel {
            users[r as usize].push(v);
        }
    }
    selections
        .iter()
        .enumerate()
        .map(|(v, sel)| {
            sel.iter()
                .copied()
                .filter(|&r| users[r as usize].iter().any(|&u| u != v && graph.in_range(u, v)))
                .collect()
        })
        .collect()
}

/// Resource -> vehicle; each resource granted at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct GrantTable {
    owner: Vec<Option<u32>>,
}

impl GrantTable {
    pub fn new(grid: &ResourceGrid) -> Self {
        Self {
            owner: vec![None; grid.total() as usize],
        }
    }

    pub fn grant(&mut self, r: Resource, vehicle: u32) -> Result<()> {
        let slot = &mut self.owner[r as usize];
        if let Some(prev) = slot {
            return Err(Error::invariant(format!(
                "resource {r} granted twice (to {prev} and {vehicle})"
            )));
        }
        *slot = Some(vehicle);
        Ok(())
    }

    pub fn owner(&self, r: Resource) -> Option<u32> {
        self.owner[r as usize]
    }

    pub fn granted_count(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }

    /// Per-vehicle granted resources, as selections indexed by vehicle.
    pub fn as_selections(&self, vehicles: usize) -> Vec<Vec<Resource>> {
        let mut out = vec![Vec::new(); vehicles];
        for (r, o) in self.owner.iter().enumerate() {
            if let Some(v) = o {
                out[*v as usize].push(r as Resource);
            }
        }
        out
    }
}

/// Proportional-fair grant loop. Resources are assigned in index order, each
/// to the unsatisfied requester maximizing `inst_rate / avg_rate` (ties to the
/// lower vehicle id). After every resource all contenders' averages move by
/// one EWMA step, the winner's towards its rate and the others' towards 0,
/// so the ratios rebalance within the period. `avg_rate` is indexed by
/// vehicle id and persists across periods.
pub fn pf_schedule(grid: &ResourceGrid, requests: &[TxRequest], inst_rate: &[f64], avg_rate: &mut [f64]) -> Result<GrantTable> {
    let mut table = GrantTable::new(grid);
    let mut left: Vec<(u32, u32)> = requests.iter().map(|r| (r.vehicle, r.demand)).collect();
    left.sort_by_key(|&(v, _)| v);
    for &(v, _) in &left {
        let a = avg_rate[v as usize];
        if !(a > 0.0) {
            return Err(Error::contract(format!("avg_rate of vehicle {v} must be > 0, got {a}")));
        }
    }
    for r in 0..grid.total() {
        let mut best: Option<(usize, f64)> = None;
        for (k, &(v, d)) in left.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let ratio = inst_rate[v as usize] / avg_rate[v as usize];
            if best.is_none_or(|(_, b)| ratio > b) {
                best = Some((k, ratio));
            }
        }
        let Some((winner, _)) = best else { break };
        let v = left[winner].0;
        table.grant(r, v)?;
        for (k, &(u, d)) in left.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let served = if k == winner { inst_rate[u as usize] } else { 0.0 };
            let a = &mut avg_rate[u as usize];
            *a = (1.0 - PF_ALPHA) * *a + PF_ALPHA * served;
            // keep the average strictly positive for zero-rate vehicles
            if *a <= 0.0 {
                *a = f64::MIN_POSITIVE;
            }
        }
        left[winner].1 -= 1;
    }
    Ok(table)
}

/// Bits delivered per vehicle: non-collided selected resources times the
/// vehicle's rate per resource.
pub fn period_throughput(selections: &[Vec<Resource>], collisions: &[Vec<Resource>], bits_per_resource: &[f64]) -> Vec<f64> {
    selections
        .iter()
        .zip(collisions)
        .zip(bits_per_resource)
        .map(|((sel, col), &b)| (sel.len() - col.len()) as f64 * b)
        .collect()
}

/// Sensing-based autonomous selection state: what everyone used last period.
#[derive(Debug, Clone)]
pub struct Mode2State {
    previous: Vec<Vec<Resource>>,
}

impl Mode2State {
    pub fn new(vehicles: usize) -> Self {
        Self {
            previous: vec![Vec::new(); vehicles],
        }
    }

    /// Every vehicle senses the previous period and picks its resources.
    pub fn select<R: Rng + ?Sized>(&mut self, grid: &ResourceGrid, graph: &InterferenceGraph, demand: u32, rng: &mut R) -> Vec<Vec<Resource>> {
        let sel: Vec<Vec<Resource>> = (0..self.previous.len())
            .map(|v| {
                let busy = sensed_busy(grid, &self.previous, graph, v);
                let free: Vec<Resource> = (0..grid.total()).filter(|&r| !busy[r as usize]).collect();
                mode2_select(&free, demand, rng)
            })
            .collect();
        self.previous.clone_from(&sel);
        sel
    }
}
