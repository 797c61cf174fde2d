//! RSU attachment: max received power versus the forecast-aware xApp.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hash;

use super::{check_paired, new_scenario, ExperimentConfig, ResultRow, RowSink};
use crate::error::{Error, Result};
use crate::rsu::{baseline_assign, lost_traffic, sort_options, xapp_assign, Assignment, LoadForecast, Options};
use crate::scenario::{LinkState, Scenario, UNLIMITED};

/// In-range RSUs of every CAV with their SNR. V2I links use geometric
/// visibility only: the elevated RSU antenna clears vehicle blockers.
fn epoch_options(cfg: &ExperimentConfig, sc: &Scenario) -> Options {
    let mut options: Options = (0..sc.vehicle_count() as u32)
        .map(|c| {
            (0..sc.rsus.len())
                .filter_map(|r| {
                    let node = sc.rsu_node(r);
                    if sc.geometry(c, node) == LinkState::Nlos {
                        return None;
                    }
                    let snr = cfg.link.snr_at(sc.distance(c, node), LinkState::Los, cfg.rx_gain_db);
                    (snr >= cfg.rsu_attach_snr_db).then_some((r, snr))
                })
                .collect()
        })
        .collect();
    sort_options(&mut options);
    options
}

/// Options for every epoch of the window plus the forecast horizon.
fn record(cfg: &ExperimentConfig, seed: u64, epochs: usize) -> Result<(Vec<Options>, DefaultHasher)> {
    let mut sc = new_scenario(cfg, seed)?;
    let steps_per_epoch = (cfg.rsu_epoch_s / cfg.sim.mobility_step).round() as u64;
    let mut h = DefaultHasher::new();
    let mut out = Vec::with_capacity(epochs + cfg.rsu_horizon_epochs);
    for _ in 0..epochs + cfg.rsu_horizon_epochs {
        sc.fingerprint(&mut h);
        let o = epoch_options(cfg, &sc);
        for row in &o {
            row.len().hash(&mut h);
        }
        out.push(o);
        for _ in 0..steps_per_epoch {
            sc.step();
        }
    }
    Ok((out, h))
}

/// Exact in-range counts of the `horizon` epochs after `e`.
fn forecast(trace: &[Options], e: usize, horizon: usize, rsus: usize) -> LoadForecast {
    let counts = trace[e + 1..=e + horizon]
        .iter()
        .map(|opts| {
            let mut row = vec![0u32; rsus];
            for o in opts {
                for &(r, _) in o {
                    row[r] += 1;
                }
            }
            row
        })
        .collect();
    LoadForecast { counts }
}

pub(super) fn run(cfg: &ExperimentConfig, capacity: f64, seed: u64) -> Result<Vec<ResultRow>> {
    let cap = if capacity.is_infinite() { UNLIMITED } else { capacity as usize };
    let epochs = ((cfg.sim.duration / cfg.rsu_epoch_s).round() as usize).max(1);
    let (trace_b, hb) = record(cfg, seed, epochs)?;
    let (trace_x, hx) = record(cfg, seed, epochs)?;
    check_paired(&hb, &hx, "rsu")?;
    let rsus = new_scenario(cfg, seed)?.rsus.len();
    let caps = vec![cap; rsus];

    let mut base = Vec::with_capacity(epochs);
    let mut xapp = Vec::with_capacity(epochs);
    let mut deficits = 0u64;
    for e in 0..epochs {
        let b = baseline_assign(&trace_b[e], &caps);
        b.validate(&trace_b[e], &caps)?;
        let f = forecast(&trace_x, e, cfg.rsu_horizon_epochs, rsus);
        let x = xapp_assign(&trace_x[e], &caps, &f, cfg.rsu_exact_limit);
        x.validate(&trace_x[e], &caps)?;
        if x.served() < b.served() {
            if trace_x[e].len() <= cfg.rsu_exact_limit {
                return Err(Error::invariant(format!(
                    "exact assignment served {} CAVs in epoch {e}, fewer than the baseline's {}",
                    x.served(),
                    b.served()
                )));
            }
            deficits += 1;
        }
        base.push(b);
        xapp.push(x);
    }

    let mut out = RowSink::new(cfg.experiment, capacity, seed);
    for (name, trace) in [("baseline", &base), ("xapp", &xapp)] {
        let (lost, util) = lost_traffic(trace, &caps)?;
        out.push(&format!("{name}_lost_pct"), lost, "percent");
        if cap == UNLIMITED {
            let assigned: usize = trace.iter().map(Assignment::served).sum();
            out.push(&format!("{name}_mean_assigned"), assigned as f64 / (trace.len() * rsus) as f64, "cavs");
        } else {
            out.push(&format!("{name}_avg_load"), util, "fraction");
        }
    }
    out.push("served_deficit_epochs", deficits as f64, "count");
    Ok(out.rows)
}
