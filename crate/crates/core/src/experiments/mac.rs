//! Sidelink MAC: sensing-based autonomous selection versus centrally
//! scheduled proportional-fair grants.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hash;

use super::{check_paired, new_scenario, ExperimentConfig, ResultRow, RowSink};
use crate::channel::spectral_efficiency;
use crate::error::{Error, Result};
use crate::mac::{detect_collisions, pf_schedule, period_throughput, InterferenceGraph, Mode2State, TxRequest, PF_EPSILON};
use crate::scenario::{Point, Scenario};
use crate::sim::{rng_stream, streams};

struct Setup {
    tx: Vec<u32>,
    rx: Vec<u32>,
}

/// The `n` vehicles nearest the map centre transmit, each to its nearest
/// neighbour at the start of the run.
fn setup(sc: &Scenario, n: usize) -> Result<Setup> {
    if n + 1 > sc.vehicle_count() {
        return Err(Error::InvalidConfig(format!(
            "{n} transmitters requested but the scenario only has {} vehicles",
            sc.vehicle_count()
        )));
    }
    let c = Point::new(sc.road().width() / 2.0, sc.road().height() / 2.0);
    let mut ids: Vec<u32> = (0..sc.vehicle_count() as u32).collect();
    ids.sort_by(|&a, &b| {
        c.distance_sq(sc.node_position(a))
            .total_cmp(&c.distance_sq(sc.node_position(b)))
            .then(a.cmp(&b))
    });
    ids.truncate(n);
    let rx = ids.iter().map(|&t| sc.nearest_vehicle(t).expect("at least two vehicles")).collect();
    Ok(Setup { tx: ids, rx })
}

#[derive(Debug, Default)]
struct PassStats {
    delivered_bits: Vec<f64>,
    transmissions: u64,
    collided: u64,
    periods: u64,
    ul_msgs: u64,
    dl_msgs: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Mode2,
    XApp,
}

fn pass(cfg: &ExperimentConfig, n: usize, seed: u64, scheme: Scheme) -> Result<(PassStats, DefaultHasher)> {
    let mut sc = new_scenario(cfg, seed)?;
    let Setup { tx, rx } = setup(&sc, n)?;
    let grid = cfg.mac_grid;
    let bits_per_se = grid.resource_bits_per_se(cfg.link.bandwidth_hz, cfg.sim.slot_duration);
    let periods_per_step = cfg.sim.slots_per_step() / u64::from(grid.period_slots);
    let slots_per_step = cfg.sim.slots_per_step();
    let delay_slots = (cfg.latency.round_trip() / cfg.sim.slot_duration).round() as u64;

    let mut mode2 = Mode2State::new(n);
    let mut rng = rng_stream(seed, streams::MODE2);
    let mut avg = vec![PF_EPSILON; n];
    let requests: Vec<TxRequest> = (0..n as u32)
        .map(|v| TxRequest {
            vehicle: v,
            demand: cfg.mac_demand,
        })
        .collect();
    // per-step spectral efficiency of every link, for stale reports
    let mut se_history: Vec<Vec<f64>> = Vec::new();
    let mut stats = PassStats {
        delivered_bits: vec![0.0; n],
        ..Default::default()
    };
    let mut h = DefaultHasher::new();

    for step in 0..cfg.sim.total_steps() {
        sc.fingerprint(&mut h);
        let se: Vec<f64> = tx
            .iter()
            .zip(&rx)
            .map(|(&a, &b)| {
                let state = sc.link_state(a, b);
                state.is_los().hash(&mut h);
                let snr = cfg.link.snr_at(sc.distance(a, b), state, cfg.rx_gain_db);
                spectral_efficiency(snr, cfg.link.se_cap)
            })
            .collect();
        let positions: Vec<Point> = tx.iter().map(|&v| sc.node_position(v)).collect();
        let graph = InterferenceGraph::from_positions(&positions, cfg.mac_interference_range_m);
        let bits: Vec<f64> = se.iter().map(|s| s * bits_per_se).collect();
        se_history.push(se);

        for p in 0..periods_per_step {
            let selections = match scheme {
                Scheme::Mode2 => mode2.select(&grid, &graph, cfg.mac_demand, &mut rng),
                Scheme::XApp => {
                    // the controller sees the SE reported one round trip ago
                    let now_slot = step * slots_per_step + p * u64::from(grid.period_slots);
                    let stale_step = (now_slot.saturating_sub(delay_slots) / slots_per_step) as usize;
                    let inst: Vec<f64> = se_history[stale_step].iter().map(|s| s * bits_per_se).collect();
                    let grants = pf_schedule(&grid, &requests, &inst, &mut avg)?;
                    stats.ul_msgs += n as u64;
                    stats.dl_msgs += n as u64;
                    grants.as_selections(n)
                }
            };
            let collisions = detect_collisions(&grid, &selections, &graph);
            let collided: u64 = collisions.iter().map(|c| c.len() as u64).sum();
            if scheme == Scheme::XApp && collided > 0 {
                return Err(Error::invariant(format!(
                    "centrally scheduled grants collided on {collided} resources"
                )));
            }
            stats.transmissions += selections.iter().map(|s| s.len() as u64).sum::<u64>();
            stats.collided += collided;
            for (d, b) in stats.delivered_bits.iter_mut().zip(period_throughput(&selections, &collisions, &bits)) {
                *d += b;
            }
            stats.periods += 1;
        }
        sc.step();
    }
    Ok((stats, h))
}

pub(super) fn run(cfg: &ExperimentConfig, n_tx: f64, seed: u64) -> Result<Vec<ResultRow>> {
    let n = n_tx as usize;
    let (m2, h2) = pass(cfg, n, seed, Scheme::Mode2)?;
    let (xa, hx) = pass(cfg, n, seed, Scheme::XApp)?;
    check_paired(&h2, &hx, "mac")?;
    let grid = cfg.mac_grid;
    let bits_per_se = grid.resource_bits_per_se(cfg.link.bandwidth_hz, cfg.sim.slot_duration);
    let full = m2.periods as f64 * f64::from(grid.total()) * cfg.link.se_cap * bits_per_se;
    let norm = |s: &PassStats| s.delivered_bits.iter().sum::<f64>() / (n as f64 * full);
    let ratio = |s: &PassStats| {
        if s.transmissions == 0 {
            0.0
        } else {
            s.collided as f64 / s.transmissions as f64
        }
    };
    let mut out = RowSink::new(cfg.experiment, n_tx, seed);
    out.push("mode2_norm_throughput", norm(&m2), "fraction");
    out.push("xapp_norm_throughput", norm(&xa), "fraction");
    out.push("mode2_collision_ratio", ratio(&m2), "fraction");
    out.push("xapp_collision_ratio", ratio(&xa), "fraction");
    out.push("mode2_transmissions", m2.transmissions as f64, "count");
    out.push("xapp_transmissions", xa.transmissions as f64, "count");
    out.push("xapp_ul_msgs", xa.ul_msgs as f64, "count");
    out.push("xapp_dl_msgs", xa.dl_msgs as f64, "count");
    Ok(out.rows)
}
