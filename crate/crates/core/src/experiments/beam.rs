//! Beam management: gradient tracking with exhaustive fallback versus the
//! position-aided candidate sweep.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hash;

use rand::seq::index::sample;

use super::{check_paired, new_scenario, ExperimentConfig, RowSink};
use crate::beam::{angle_of_departure, BeamCodebook, BeamPolicy, LinkObservation, LinkTracker, TrainingLedger};
use crate::error::{Error, Result};
use crate::scenario::{Point, Scenario, VehicleState};
use crate::sim::{rng_stream, streams};

/// Transmitters drawn at random, each paired with its nearest vehicle at
/// the start of the run.
pub(super) fn random_pairs(sc: &Scenario, seed: u64, count: usize) -> Result<Vec<(u32, u32)>> {
    let n = sc.vehicle_count();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 vehicles for link pairs, got {n}")));
    }
    let mut rng = rng_stream(seed, streams::PAIRS);
    let mut tx: Vec<usize> = sample(&mut rng, n, count.min(n)).into_vec();
    tx.sort_unstable();
    Ok(tx
        .into_iter()
        .map(|t| {
            let t = t as u32;
            (t, sc.nearest_vehicle(t).expect("at least two vehicles"))
        })
        .collect())
}

/// Where the controller believes a vehicle is: its state `age` seconds ago,
/// dead-reckoned backwards along the current heading.
fn reported(v: &VehicleState, age: f64) -> (Point, Point) {
    let back = v.speed * age;
    let p = v.antenna_position();
    (Point::new(p.x - v.heading.x * back, p.y - v.heading.y * back), v.heading)
}

fn observe(cfg: &ExperimentConfig, sc: &mut Scenario, tx: u32, rx: u32) -> LinkObservation {
    let los = sc.link_state(tx, rx).is_los();
    let (t, r) = (&sc.vehicles[tx as usize], &sc.vehicles[rx as usize]);
    let (az, el) = angle_of_departure(t.antenna_position(), t.heading, t.antenna_height, r.antenna_position(), r.antenna_height);
    let age = cfg.latency.one_way_latency;
    let (tp, th) = reported(t, age);
    let (rp, _) = reported(r, age);
    let (reported_az, reported_el) = angle_of_departure(tp, th, t.antenna_height, rp, r.antenna_height);
    // quasi-omni receiver: only the transmit beam is trained
    let snr_aligned_db = cfg.link.snr_at(sc.distance(tx, rx), crate::scenario::LinkState::Los, 0.0);
    LinkObservation {
        los,
        az,
        el,
        reported_az,
        reported_el,
        snr_aligned_db,
    }
}

fn pass(cfg: &ExperimentConfig, seed: u64, cb: &BeamCodebook, policy: BeamPolicy) -> Result<(TrainingLedger, DefaultHasher)> {
    let mut sc = new_scenario(cfg, seed)?;
    let pairs = random_pairs(&sc, seed, cfg.beam_pairs)?;
    let mut trackers = vec![LinkTracker::new(policy); pairs.len()];
    let mut ledger = TrainingLedger::default();
    let mut h = DefaultHasher::new();
    let slots = cfg.sim.slots_per_step();
    for _ in 0..cfg.sim.total_steps() {
        sc.fingerprint(&mut h);
        for (tr, &(tx, rx)) in trackers.iter_mut().zip(&pairs) {
            let obs = observe(cfg, &mut sc, tx, rx);
            obs.los.hash(&mut h);
            tr.step(cb, &obs, slots, cfg.link.se_cap, &mut ledger)?;
        }
        sc.step();
    }
    Ok((ledger, h))
}

pub(super) fn run(cfg: &ExperimentConfig, cardinality: f64, seed: u64) -> Result<Vec<super::ResultRow>> {
    let card = cardinality as usize;
    let cb = BeamCodebook::square(card)?;
    let k = card.div_ceil(cfg.beam_k_divisor).clamp(1, card);
    let (base, hb) = pass(cfg, seed, &cb, BeamPolicy::Gradient)?;
    let (xapp, hx) = pass(cfg, seed, &cb, BeamPolicy::XApp { k })?;
    check_paired(&hb, &hx, "beam")?;
    let mut out = RowSink::new(cfg.experiment, cardinality, seed);
    for (name, l) in [("baseline", &base), ("xapp", &xapp)] {
        out.push(&format!("{name}_overhead"), l.overhead_fraction(), "fraction");
        out.push(&format!("{name}_mean_se"), l.mean_se(), "bit/s/Hz");
        out.push(&format!("{name}_training_slots"), l.training_slots as f64, "slots");
        out.push(&format!("{name}_triggers"), l.triggers as f64, "count");
    }
    out.push("baseline_fallbacks", base.fallbacks as f64, "count");
    out.push("xapp_candidates", k as f64, "beams");
    out.push("xapp_ul_msgs", xapp.ul_msgs as f64, "count");
    out.push("xapp_dl_msgs", xapp.dl_msgs as f64, "count");
    let reduction = if base.overhead_fraction() > 0.0 {
        1.0 - xapp.overhead_fraction() / base.overhead_fraction()
    } else {
        0.0
    };
    out.push("overhead_reduction", reduction, "fraction");
    Ok(out.rows)
}
