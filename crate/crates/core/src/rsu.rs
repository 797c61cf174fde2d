//! CAV-to-RSU attachment under per-RSU capacity limits.
//!
//! Inputs per epoch are the in-range options of every CAV: `(rsu, power)`
//! pairs sorted by descending power, ties by lower RSU index.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scenario::{Point, RsuSite, UNLIMITED};

/// Weight of the mean forecast load in the balancing objective.
pub const FORECAST_WEIGHT: f64 = 0.5;

pub type Options = Vec<Vec<(usize, f64)>>;

/// Per-epoch attachment: CAV index -> RSU index, `None` for unserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub of: Vec<Option<usize>>,
}

impl Assignment {
    pub fn unserved(n: usize) -> Self {
        Self { of: vec![None; n] }
    }

    pub fn served(&self) -> usize {
        self.of.iter().filter(|a| a.is_some()).count()
    }

    pub fn loads(&self, rsus: usize) -> Vec<usize> {
        let mut l = vec![0; rsus];
        for r in self.of.iter().flatten() {
            l[*r] += 1;
        }
        l
    }

    /// In-range and capacity constraints.
    pub fn validate(&self, options: &Options, capacities: &[usize]) -> Result<()> {
        for (c, a) in self.of.iter().enumerate() {
            if let Some(r) = a {
                if !options[c].iter().any(|&(o, _)| o == *r) {
                    return Err(Error::invariant(format!("CAV {c} attached to out-of-range RSU {r}")));
                }
            }
        }
        for (r, (&l, &cap)) in self.loads(capacities.len()).iter().zip(capacities).enumerate() {
            if l > cap {
                return Err(Error::invariant(format!("RSU {r} holds {l} CAVs over capacity {cap}")));
            }
        }
        Ok(())
    }
}

/// Sort options by descending power, ties by lower RSU index.
pub fn sort_options(options: &mut Options) {
    for o in options.iter_mut() {
        o.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    }
}

/// Max received power: each CAV in id order takes its strongest RSU if that
/// RSU still has room, otherwise stays unserved.
pub fn baseline_assign(options: &Options, capacities: &[usize]) -> Assignment {
    let mut load = vec![0usize; capacities.len()];
    let of = options
        .iter()
        .map(|o| {
            let &(r, _) = o.first()?;
            (load[r] < capacities[r]).then(|| {
                load[r] += 1;
                r
            })
        })
        .collect();
    Assignment { of }
}

/// Predicted in-range CAV count per epoch (rows) and RSU (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadForecast {
    pub counts: Vec<Vec<u32>>,
}

impl LoadForecast {
    /// Mean predicted count of each RSU over the horizon.
    pub fn mean(&self, rsus: usize) -> Vec<f64> {
        let h = self.counts.len().max(1) as f64;
        (0..rsus)
            .map(|r| self.counts.iter().map(|row| f64::from(row[r])).sum::<f64>() / h)
            .collect()
    }
}

/// Count, for each future epoch, the CAVs whose predicted position is in
/// range of each RSU. `trajectory[e][c]` is CAV `c`'s position `e + 1`
/// epochs ahead; only the first `horizon` epochs are used.
pub fn forecast_load(
    trajectory: &[Vec<Point>],
    rsus: &[RsuSite],
    horizon: usize,
    in_range: impl Fn(Point, &RsuSite) -> bool,
) -> Result<LoadForecast> {
    if horizon < 1 {
        return Err(Error::contract("forecast horizon must be >= 1"));
    }
    let counts = trajectory
        .iter()
        .take(horizon)
        .map(|positions| {
            rsus.iter()
                .map(|r| positions.iter().filter(|&&p| in_range(p, r)).count() as u32)
                .collect()
        })
        .collect();
    Ok(LoadForecast { counts })
}

/// Marginal cost of the `(load + 1)`-th CAV at an RSU whose balancing term is
/// `(load + f)^2`.
fn marginal(load: usize, f: f64) -> f64 {
    2.0 * load as f64 + 1.0 + 2.0 * f
}

/// Balancing objective `sum_r (load_r + f_r)^2` of an assignment.
pub fn balance_cost(a: &Assignment, future: &[f64]) -> f64 {
    a.loads(future.len())
        .iter()
        .zip(future)
        .map(|(&l, &f)| (l as f64 + f).powi(2))
        .sum()
}

/// Forecast-aware assignment. Maximizes the number of served CAVs and, among
/// maximum-service assignments, minimizes `sum_r (load_r + w * mean_forecast_r)^2`.
///
/// Up to `exact_limit` CAVs this is solved exactly as a min-cost flow with
/// convex RSU costs by successive shortest paths. CAV arcs are free, so a
/// shortest augmenting path ends at the cheapest RSU with room that is
/// reachable from an unserved CAV through chains of CAV moves; the search
/// runs over an RSU-level reachability graph. Above the limit a greedy is
/// used: CAVs with fewer options first, each to the feasible RSU with the
/// least `load + forecast` term.
pub fn xapp_assign(options: &Options, capacities: &[usize], forecast: &LoadForecast, exact_limit: usize) -> Assignment {
    let future: Vec<f64> = forecast
        .mean(capacities.len())
        .into_iter()
        .map(|m| FORECAST_WEIGHT * m)
        .collect();
    if options.len() <= exact_limit {
        FlowSolver::new(options, capacities, &future).solve()
    } else {
        greedy_assign(options, capacities, &future)
    }
}

/// The greedy used above the exact-solver limit.
pub fn greedy_assign(options: &Options, capacities: &[usize], future: &[f64]) -> Assignment {
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.sort_by_key(|&c| (options[c].len(), c));
    let mut load = vec![0usize; capacities.len()];
    let mut of = vec![None; options.len()];
    for c in order {
        let best = options[c]
            .iter()
            .map(|&(r, _)| r)
            .filter(|&r| load[r] < capacities[r])
            .min_by(|&a, &b| {
                (load[a] as f64 + future[a])
                    .total_cmp(&(load[b] as f64 + future[b]))
                    .then(a.cmp(&b))
            });
        if let Some(r) = best {
            load[r] += 1;
            of[c] = Some(r);
        }
    }
    Assignment { of }
}

struct FlowSolver<'a> {
    options: &'a Options,
    capacities: &'a [usize],
    future: &'a [f64],
    m: usize,
    words: usize,
    of: Vec<Option<usize>>,
    load: Vec<usize>,
    members: Vec<BTreeSet<usize>>,
    /// Unserved CAVs having each RSU as an option.
    waiting: Vec<BTreeSet<usize>>,
    /// `moves[r * m + s]`: CAVs at `r` that could move to `s`.
    moves: Vec<u32>,
    reach: Vec<u64>,
}

impl<'a> FlowSolver<'a> {
    fn new(options: &'a Options, capacities: &'a [usize], future: &'a [f64]) -> Self {
        let m = capacities.len();
        let words = m.div_ceil(64).max(1);
        let mut waiting = vec![BTreeSet::new(); m];
        for (c, o) in options.iter().enumerate() {
            for &(r, _) in o {
                waiting[r].insert(c);
            }
        }
        Self {
            options,
            capacities,
            future,
            m,
            words,
            of: vec![None; options.len()],
            load: vec![0; m],
            members: vec![BTreeSet::new(); m],
            waiting,
            moves: vec![0; m * m],
            reach: vec![0; m * words],
        }
    }

    fn set_move(&mut self, r: usize, s: usize, delta: i32) {
        let k = r * self.m + s;
        let before = self.moves[k];
        self.moves[k] = before.checked_add_signed(delta).expect("move count stays non-negative");
        let bit = 1u64 << (s % 64);
        let w = &mut self.reach[r * self.words + s / 64];
        if self.moves[k] > 0 {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    fn place(&mut self, c: usize, r: usize) {
        self.of[c] = Some(r);
        self.load[r] += 1;
        self.members[r].insert(c);
        for i in 0..self.options[c].len() {
            let s = self.options[c][i].0;
            if s != r {
                self.set_move(r, s, 1);
            }
        }
    }

    fn remove(&mut self, c: usize) {
        let r = self.of[c].take().expect("CAV is placed");
        self.load[r] -= 1;
        self.members[r].remove(&c);
        for i in 0..self.options[c].len() {
            let s = self.options[c][i].0;
            if s != r {
                self.set_move(r, s, -1);
            }
        }
    }

    fn solve(mut self) -> Assignment {
        let mut parent = vec![usize::MAX; self.m];
        let mut queue = Vec::with_capacity(self.m);
        let mut visited = vec![0u64; self.words];
        loop {
            // Multi-source BFS from RSUs some unserved CAV can reach.
            queue.clear();
            visited.iter_mut().for_each(|w| *w = 0);
            for r in 0..self.m {
                if !self.waiting[r].is_empty() {
                    parent[r] = usize::MAX;
                    visited[r / 64] |= 1 << (r % 64);
                    queue.push(r);
                }
            }
            let mut head = 0;
            while head < queue.len() {
                let u = queue[head];
                head += 1;
                for wi in 0..self.words {
                    let mut fresh = self.reach[u * self.words + wi] & !visited[wi];
                    visited[wi] |= fresh;
                    while fresh != 0 {
                        let s = wi * 64 + fresh.trailing_zeros() as usize;
                        fresh &= fresh - 1;
                        parent[s] = u;
                        queue.push(s);
                    }
                }
            }
            let target = queue
                .iter()
                .copied()
                .filter(|&r| self.load[r] < self.capacities[r])
                .min_by(|&a, &b| {
                    marginal(self.load[a], self.future[a])
                        .total_cmp(&marginal(self.load[b], self.future[b]))
                        .then(a.cmp(&b))
                });
            let Some(target) = target else { break };
            // Shift one CAV along each link of the chain, last link first.
            let mut s = target;
            while parent[s] != usize::MAX {
                let r = parent[s];
                let mover = *self.members[r]
                    .iter()
                    .find(|&&c| self.options[c].iter().any(|&(o, _)| o == s))
                    .expect("reachability implies a movable CAV");
                self.remove(mover);
                self.place(mover, s);
                s = r;
            }
            let newcomer = *self.waiting[s].first().expect("source RSU has a waiting CAV");
            for i in 0..self.options[newcomer].len() {
                let o = self.options[newcomer][i].0;
                self.waiting[o].remove(&newcomer);
            }
            self.place(newcomer, s);
        }
        Assignment { of: self.of }
    }
}

/// Lost traffic and utilization over a trace, one unit of demand per CAV per
/// epoch. Returns `(lost_percent, avg_load)` where `avg_load` is the mean
/// over epochs and RSUs of load / capacity (0 for unlimited RSUs).
pub fn lost_traffic(trace: &[Assignment], capacities: &[usize]) -> Result<(f64, f64)> {
    let demand: usize = trace.iter().map(|a| a.of.len()).sum();
    if demand == 0 {
        return Err(Error::contract("lost traffic needs positive total demand"));
    }
    let served: usize = trace.iter().map(Assignment::served).sum();
    let lost = 100.0 * (demand - served) as f64 / demand as f64;
    let mut util = 0.0;
    for a in trace {
        for (l, &cap) in a.loads(capacities.len()).iter().zip(capacities) {
            if cap != UNLIMITED && cap > 0 {
                util += *l as f64 / cap as f64;
            }
        }
    }
    let cells = (trace.len() * capacities.len()).max(1) as f64;
    Ok((lost, util / cells))
}
