//! Relay selection and its control-plane cost. One scenario pass per seed
//! serves every SNR threshold of the sweep.

use super::beam::random_pairs;
use super::{new_scenario, Experiment, ExperimentConfig, ResultRow, RowSink};
use crate::error::Result;
use crate::relay::{min_hop_path, ConnectivityAccumulator, ConnectivityMode, LinkGraph};
use crate::ric::{check_staleness, relay_rate_closed_form, OverheadLedger};
use crate::scenario::{LinkState, LosIndex, Scenario};

/// Path control of one source/destination pair under one threshold.
#[derive(Debug, Clone, Default)]
struct PairControl {
    active: Option<Vec<u32>>,
}

struct Threshold {
    gamma: f64,
    direct: ConnectivityAccumulator,
    relayed: ConnectivityAccumulator,
    control: Vec<PairControl>,
    ledger: OverheadLedger,
    outage_s: f64,
    violations: u64,
}

/// Every LOS link of the current step (geometry and dynamic blockage) with
/// its SNR.
fn los_edges(cfg: &ExperimentConfig, sc: &mut Scenario) -> Vec<(u32, u32, f64)> {
    let n = sc.node_count();
    let points = (0..n as u32).map(|v| sc.node_position(v)).collect();
    let road = sc.road().clone();
    let index = LosIndex::new(&road, points);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if index.los(a, b) == LinkState::Nlos {
                continue;
            }
            let (a, b) = (a as u32, b as u32);
            if sc.link_state_with(a, b, LinkState::Los).is_los() {
                let snr = cfg.link.snr_at(sc.distance(a, b), LinkState::Los, cfg.rx_gain_db);
                edges.push((a, b, snr));
            }
        }
    }
    edges
}

fn path_intact(g: &LinkGraph, path: &[u32]) -> bool {
    path.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

/// Returns one row group per sweep value, in sweep order.
pub(super) fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Vec<ResultRow>>> {
    let mut sc = new_scenario(cfg, seed)?;
    let pairs = random_pairs(&sc, seed, cfg.relay_pairs)?;
    let n = sc.node_count();
    let mut th: Vec<Threshold> = cfg
        .sweep
        .iter()
        .map(|&gamma| {
            Ok(Threshold {
                gamma,
                direct: ConnectivityAccumulator::new(ConnectivityMode::DirectOnly, pairs.clone()),
                relayed: ConnectivityAccumulator::new(ConnectivityMode::Relayed, pairs.clone()),
                control: vec![PairControl::default(); pairs.len()],
                ledger: OverheadLedger::new(cfg.sim.duration)?,
                outage_s: 0.0,
                violations: 0,
            })
        })
        .collect::<Result<_>>()?;
    let dt = cfg.sim.mobility_step;
    let rtt = cfg.latency.round_trip();

    for step in 0..cfg.sim.total_steps() {
        let now = sc.now();
        let edges = los_edges(cfg, &mut sc);
        let all = LinkGraph::from_edges(n, &edges, f64::NEG_INFINITY)?;
        let mut prev: Option<(f64, LinkGraph)> = None;
        for t in th.iter_mut() {
            // ascending sweeps narrow the previous threshold's graph
            let g = match &prev {
                Some((gamma, g)) if *gamma <= t.gamma => g.restrict(t.gamma),
                _ => all.restrict(t.gamma),
            };
            t.direct.observe(&g)?;
            t.relayed.observe(&g)?;
            for (ctl, &(s, d)) in t.control.iter_mut().zip(&pairs) {
                let recompute = match &ctl.active {
                    // the path in force at the start of the run is configured, not commanded
                    _ if step == 0 => false,
                    Some(p) => !path_intact(&g, p) || (p.len() > 2 && g.has_edge(s, d)),
                    None => true,
                };
                if step == 0 || recompute {
                    let path = min_hop_path(&g, s, d)?;
                    if let Some(p) = &path {
                        if p.bottleneck_snr_db < t.gamma {
                            t.violations += 1;
                        }
                        if step > 0 {
                            // report at `now` reaches the controller one latency later
                            check_staleness(now, now + cfg.latency.one_way_latency, &cfg.latency)?;
                            t.ledger.account_relay_event(p.hops())?;
                            t.outage_s += rtt.min(dt);
                        }
                    }
                    ctl.active = path.map(|p| p.nodes);
                }
                if ctl.active.is_none() {
                    t.outage_s += dt;
                }
            }
            prev = Some((t.gamma, g));
        }
        sc.step();
    }

    let window = cfg.sim.total_steps() as f64 * dt;
    th.into_iter()
        .map(|t| {
            let mut out = RowSink::new(cfg.experiment, t.gamma, seed);
            let l = &t.ledger;
            match cfg.experiment {
                Experiment::Overhead => {
                    let (ul, dl) = l.rate_kbps();
                    out.push("events", l.events as f64, "count");
                    out.push("hop_sum", l.hop_sum as f64, "hops");
                    out.push("mean_hops", l.mean_hops(), "hops");
                    out.push("ul_msgs", l.ul_msgs as f64, "count");
                    out.push("dl_msgs", l.dl_msgs as f64, "count");
                    out.push("ul_kbps", ul, "kbps");
                    out.push("dl_kbps", dl, "kbps");
                    out.push("total_kbps", l.total_kbps(), "kbps");
                    out.push(
                        "closed_form_kbps",
                        relay_rate_closed_form(l.events as f64, l.mean_hops(), l.window),
                        "kbps",
                    );
                }
                _ => {
                    let direct = t.direct.finish()?;
                    let relayed = t.relayed.finish()?;
                    out.push("direct_connectivity", direct.connectivity_fraction, "fraction");
                    out.push("relayed_connectivity", relayed.connectivity_fraction, "fraction");
                    out.push("avg_hops", relayed.avg_hops, "hops");
                    out.push("path_events", l.events as f64, "count");
                    out.push("outage_fraction", t.outage_s / (pairs.len() as f64 * window), "fraction");
                    out.push("path_snr_violations", t.violations as f64, "count");
                }
            }
            Ok(out.rows)
        })
        .collect()
}
