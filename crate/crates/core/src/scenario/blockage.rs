//! Dynamic blockage of geometrically clear links.
//!
//! Each link carries an alternating renewal process: clear intervals are
//! exponential, blocked intervals lognormal. A link's trajectory is a pure
//! function of `(seed, link)`, generated on first use and regenerated (with
//! the same prefix) if queried past its horizon, so the order in which links
//! are queried never changes any answer.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use super::geometry::LinkState;
use crate::error::{Error, Result};
use crate::sim::{mix64, rng_stream, streams, sub_stream, SimRng};

/// 90th percentile of the standard normal distribution.
const Z90: f64 = 1.281_551_565_544_600_4;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockageProcess {
    /// Log-scale location of blocked durations.
    pub blocked_mu: f64,
    /// Log-scale spread of blocked durations.
    pub blocked_sigma: f64,
    pub clear_mean: f64,
}

impl Default for BlockageProcess {
    fn default() -> Self {
        Self::from_deciles(3.0, 10.0, 30.0).expect("default deciles are valid")
    }
}

impl BlockageProcess {
    /// Lognormal blocked durations with 10th/90th percentiles `p10`/`p90`
    /// (so 80% of the mass lies between them), exponential clear durations.
    pub fn from_deciles(p10: f64, p90: f64, clear_mean: f64) -> Result<Self> {
        if !(0.0 < p10 && p10 < p90 && p90.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "blocked duration deciles must satisfy 0 < p10 < p90 (got {p10}, {p90})"
            )));
        }
        if !(clear_mean > 0.0 && clear_mean.is_finite()) {
            return Err(Error::InvalidConfig(format!("clear_mean must be > 0, got {clear_mean}")));
        }
        Ok(Self {
            blocked_mu: 0.5 * (p10.ln() + p90.ln()),
            blocked_sigma: (p90.ln() - p10.ln()) / (2.0 * Z90),
            clear_mean,
        })
    }

    pub fn blocked_median(&self) -> f64 {
        self.blocked_mu.exp()
    }

    pub fn blocked_mean(&self) -> f64 {
        (self.blocked_mu + 0.5 * self.blocked_sigma * self.blocked_sigma).exp()
    }

    /// Long-run fraction of time a geometrically clear link is blocked.
    pub fn blocked_fraction(&self) -> f64 {
        let b = self.blocked_mean();
        b / (b + self.clear_mean)
    }

    fn blocked_dist(&self) -> LogNormal<f64> {
        LogNormal::new(self.blocked_mu, self.blocked_sigma).expect("validated lognormal")
    }

    fn clear_dist(&self) -> Exp<f64> {
        Exp::new(1.0 / self.clear_mean).expect("validated exponential")
    }

    pub fn sample_blocked<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        positive(|| self.blocked_dist().sample(rng))
    }

    pub fn sample_clear<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        positive(|| self.clear_dist().sample(rng))
    }
}

fn positive(mut draw: impl FnMut() -> f64) -> f64 {
    loop {
        let d = draw();
        if d > 0.0 {
            return d;
        }
    }
}

/// Canonical key of an undirected link.
pub fn link_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (u64::from(lo) << 32) | u64::from(hi)
}

/// One link's state trajectory: initial state plus strictly increasing flip
/// times. The state is right-continuous: at a flip time it already has the
/// new value.
#[derive(Debug, Clone)]
struct Trajectory {
    starts_blocked: bool,
    flips: Vec<f64>,
}

impl Trajectory {
    fn generate(proc: &BlockageProcess, seed: u64, key: u64, until: f64) -> Self {
        let mut rng: SimRng = rng_stream(seed, sub_stream(streams::BLOCKAGE, key));
        let starts_blocked = rng.random_bool(proc.blocked_fraction());
        let mut flips = Vec::new();
        let mut t = 0.0;
        let mut blocked = starts_blocked;
        while t <= until {
            t += if blocked {
                proc.sample_blocked(&mut rng)
            } else {
                proc.sample_clear(&mut rng)
            };
            flips.push(t);
            blocked = !blocked;
        }
        Self { starts_blocked, flips }
    }

    fn horizon(&self) -> f64 {
        *self.flips.last().expect("at least one flip")
    }

    fn blocked_at(&self, t: f64) -> bool {
        let n = self.flips.partition_point(|&f| f <= t);
        self.starts_blocked ^ (n % 2 == 1)
    }
}

/// Link keys are small structured integers; one mixing round spreads them
/// well enough for a hash table.
#[derive(Debug, Default, Clone, Copy)]
struct LinkKeyHasher(u64);

impl Hasher for LinkKeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = mix64(self.0 ^ u64::from(b));
        }
    }

    fn write_u64(&mut self, k: u64) {
        self.0 = mix64(self.0 ^ k);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Lazily generated blockage processes for every link of a run.
#[derive(Debug, Clone)]
pub struct BlockageField {
    seed: u64,
    process: BlockageProcess,
    horizon: f64,
    links: HashMap<u64, Trajectory, BuildHasherDefault<LinkKeyHasher>>,
}

impl BlockageField {
    /// `horizon` is a generation hint (usually the run duration); queries
    /// beyond it still work.
    pub fn new(seed: u64, process: BlockageProcess, horizon: f64) -> Self {
        Self {
            seed,
            process,
            horizon: horizon.max(1.0),
            links: HashMap::default(),
        }
    }

    pub fn process(&self) -> &BlockageProcess {
        &self.process
    }

    /// Link state at time `t`: geometric NLOS dominates, otherwise the
    /// link's renewal process decides.
    pub fn sample_link_state(&mut self, a: u32, b: u32, t: f64, geometry: LinkState) -> LinkState {
        if geometry == LinkState::Nlos {
            return LinkState::Nlos;
        }
        if self.is_blocked(a, b, t) {
            LinkState::Nlos
        } else {
            LinkState::Los
        }
    }

    pub fn is_blocked(&mut self, a: u32, b: u32, t: f64) -> bool {
        let key = link_key(a, b);
        let (seed, horizon) = (self.seed, self.horizon);
        let process = &self.process;
        let traj = self
            .links
            .entry(key)
            .or_insert_with(|| Trajectory::generate(process, seed, key, horizon));
        if traj.horizon() <= t {
            *traj = Trajectory::generate(process, seed, key, 2.0 * t + 1.0);
        }
        traj.blocked_at(t)
    }

    /// Blocked intervals `(start, end)` of a link that begin within `[0, until]`.
    pub fn blocked_intervals(&mut self, a: u32, b: u32, until: f64) -> Vec<(f64, f64)> {
        self.is_blocked(a, b, until);
        let traj = &self.links[&link_key(a, b)];
        let mut out = Vec::new();
        let mut start = 0.0;
        let mut blocked = traj.starts_blocked;
        for &f in &traj.flips {
            if blocked && start <= until {
                out.push((start, f));
            }
            start = f;
            blocked = !blocked;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng_stream;

    #[test]
    fn deciles_hold_analytically() {
        let p = BlockageProcess::default();
        let lo = (p.blocked_mu - Z90 * p.blocked_sigma).exp();
        let hi = (p.blocked_mu + Z90 * p.blocked_sigma).exp();
        assert!((lo - 3.0).abs() < 1e-9);
        assert!((hi - 10.0).abs() < 1e-9);
        assert!((p.blocked_median() - 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sampled_blocked_durations_centered_in_3_to_10() {
        let p = BlockageProcess::default();
        let mut rng = rng_stream(42, streams::BLOCKAGE);
        let mut d: Vec<f64> = (0..10_000).map(|_| p.sample_blocked(&mut rng)).collect();
        assert!(d.iter().all(|&x| x > 0.0));
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        d.sort_by(f64::total_cmp);
        let median = d[d.len() / 2];
        assert!((3.0..=10.0).contains(&median), "median {median}");
        assert!((3.0..=10.0).contains(&mean), "mean {mean}");
        let inside = d.iter().filter(|&&x| (3.0..=10.0).contains(&x)).count() as f64 / 1e4;
        assert!((inside - 0.8).abs() < 0.02, "central mass {inside}");
    }

    #[test]
    fn geometry_dominates() {
        let mut f = BlockageField::new(1, BlockageProcess::default(), 60.0);
        for t in [0.0, 5.0, 33.3] {
            assert_eq!(f.sample_link_state(1, 2, t, LinkState::Nlos), LinkState::Nlos);
        }
    }

    #[test]
    fn repeated_query_is_stable_and_order_independent() {
        let mut f = BlockageField::new(9, BlockageProcess::default(), 60.0);
        let fwd: Vec<bool> = (0..600).map(|k| f.is_blocked(3, 8, k as f64 * 0.1)).collect();
        let mut g = BlockageField::new(9, BlockageProcess::default(), 60.0);
        g.is_blocked(1, 2, 59.0);
        let back: Vec<bool> = (0..600).rev().map(|k| g.is_blocked(8, 3, k as f64 * 0.1)).collect();
        let back: Vec<bool> = back.into_iter().rev().collect();
        assert_eq!(fwd, back);
        assert_eq!(f.is_blocked(3, 8, 12.3), f.is_blocked(3, 8, 12.3));
    }

    #[test]
    fn query_past_horizon_keeps_prefix() {
        let mut f = BlockageField::new(2, BlockageProcess::default(), 10.0);
        let early: Vec<bool> = (0..100).map(|k| f.is_blocked(0, 1, k as f64 * 0.1)).collect();
        f.is_blocked(0, 1, 500.0);
        let again: Vec<bool> = (0..100).map(|k| f.is_blocked(0, 1, k as f64 * 0.1)).collect();
        assert_eq!(early, again);
    }

    #[test]
    fn intervals_alternate_strictly() {
        let mut f = BlockageField::new(4, BlockageProcess::default(), 300.0);
        for link in 0..50 {
            let iv = f.blocked_intervals(link, link + 1, 300.0);
            for w in iv.windows(2) {
                assert!(w[0].1 < w[1].0, "blocked intervals must be separated by clear time");
            }
            for (s, e) in iv {
                assert!(e > s);
            }
        }
    }
}
