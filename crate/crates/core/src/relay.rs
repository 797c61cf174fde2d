//! Multi-hop relay selection over the per-step V2V/V2I link graph.
//!
//! A path is chosen by fewest hops, then by largest bottleneck (minimum
//! per-hop) SNR, then by lexicographically smallest node sequence.

use std::collections::VecDeque;

use crate::channel::LinkSnapshot;
use crate::error::{Error, Result};

/// Undirected link graph thresholded at `gamma_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    n: usize,
    gamma_db: f64,
    /// Neighbours with edge SNR, sorted by neighbour id.
    adj: Vec<Vec<(u32, f64)>>,
    /// Row-major adjacency bitsets, `words` u64 per node.
    bits: Vec<u64>,
    words: usize,
}

impl LinkGraph {
    /// Graph over nodes `0..n` keeping edges with `snr >= gamma_db`.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)], gamma_db: f64) -> Result<Self> {
        let words = n.div_ceil(64).max(1);
        let mut g = Self {
            n,
            gamma_db,
            adj: vec![Vec::new(); n],
            bits: vec![0; n * words],
            words,
        };
        for &(a, b, snr) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::contract(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            if a == b || snr.is_nan() || snr < gamma_db {
                continue;
            }
            if g.has_edge(a, b) {
                continue;
            }
            g.adj[a as usize].push((b, snr));
            g.adj[b as usize].push((a, snr));
            g.set_bit(a, b);
            g.set_bit(b, a);
        }
        for list in &mut g.adj {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(g)
    }

    /// The subgraph keeping edges with `snr >= gamma_db`. Thresholds below
    /// this graph's own leave it unchanged.
    pub fn restrict(&self, gamma_db: f64) -> LinkGraph {
        let gamma_db = gamma_db.max(self.gamma_db);
        let mut bits = vec![0; self.bits.len()];
        let adj: Vec<Vec<(u32, f64)>> = self
            .adj
            .iter()
            .enumerate()
            .map(|(a, list)| {
                let mut kept = Vec::with_capacity(list.iter().filter(|&&(_, snr)| snr >= gamma_db).count());
                for &(b, snr) in list {
                    if snr >= gamma_db {
                        kept.push((b, snr));
                        bits[a * self.words + b as usize / 64] |= 1 << (b % 64);
                    }
                }
                kept
            })
            .collect();
        LinkGraph {
            n: self.n,
            gamma_db,
            adj,
            bits,
            words: self.words,
        }
    }

    fn set_bit(&mut self, a: u32, b: u32) {
        let (a, b) = (a as usize, b as usize);
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn gamma_db(&self) -> f64 {
        self.gamma_db
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.row(a as usize)[b as usize / 64] >> (b % 64) & 1 == 1
    }

    pub fn neighbours(&self, a: u32) -> &[(u32, f64)] {
        &self.adj[a as usize]
    }

    pub fn edge_snr(&self, a: u32, b: u32) -> Option<f64> {
        let list = &self.adj[a as usize];
        list.binary_search_by_key(&b, |&(v, _)| v).ok().map(|i| list[i].1)
    }

    fn check(&self, node: u32) -> Result<()> {
        if node as usize >= self.n {
            return Err(Error::contract(format!("node {node} outside graph of {} nodes", self.n)));
        }
        Ok(())
    }

    /// Hop distance by level-synchronous bitset BFS, stopping as soon as
    /// `dst` is reached.
    pub fn hop_distance(&self, src: u32, dst: u32) -> Result<Option<u32>> {
        self.check(src)?;
        self.check(dst)?;
        if src == dst {
            return Ok(Some(0));
        }
        let w = self.words;
        let mut visited = vec![0u64; w];
        let mut frontier = vec![0u64; w];
        let mut next = vec![0u64; w];
        visited[src as usize / 64] |= 1 << (src % 64);
        frontier[src as usize / 64] |= 1 << (src % 64);
        let (dw, db) = (dst as usize / 64, dst % 64);
        for depth in 1..=self.n as u32 {
            next.iter_mut().for_each(|x| *x = 0);
            for (i, &word) in frontier.iter().enumerate() {
                let mut m = word;
                while m != 0 {
                    let u = i * 64 + m.trailing_zeros() as usize;
                    m &= m - 1;
                    for (x, &r) in next.iter_mut().zip(self.row(u)) {
                        *x |= r;
                    }
                }
            }
            let mut any = false;
            for (x, v) in next.iter_mut().zip(visited.iter_mut()) {
                *x &= !*v;
                *v |= *x;
                any |= *x != 0;
            }
            if next[dw] >> db & 1 == 1 {
                return Ok(Some(depth));
            }
            if !any {
                return Ok(None);
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        Ok(None)
    }

    fn bfs(&self, from: u32, min_snr: f64) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut q = VecDeque::from([from]);
        dist[from as usize] = 0;
        while let Some(u) = q.pop_front() {
            for &(v, snr) in &self.adj[u as usize] {
                if snr >= min_snr && dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u as usize] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }
}

/// Edges of the LOS snapshots whose SNR reaches `gamma_db`.
pub fn build_graph(n: usize, snapshots: &[LinkSnapshot], gamma_db: f64) -> Result<LinkGraph> {
    let edges: Vec<(u32, u32, f64)> = snapshots
        .iter()
        .filter(|s| s.state.is_los())
        .map(|s| (s.a, s.b, s.snr_db))
        .collect();
    LinkGraph::from_edges(n, &edges, gamma_db)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub nodes: Vec<u32>,
    pub bottleneck_snr_db: f64,
}

impl PathResult {
    pub fn hops(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }
}

/// Fewest-hop path from `src` to `dst`, maximizing the bottleneck SNR among
/// fewest-hop paths and then taking the lexicographically smallest node
/// sequence. `None` when `dst` is unreachable.
pub fn min_hop_path(g: &LinkGraph, src: u32, dst: u32) -> Result<Option<PathResult>> {
    g.check(src)?;
    g.check(dst)?;
    if src == dst {
        return Err(Error::contract("relay path needs distinct endpoints"));
    }
    let ds = g.bfs(src, f64::NEG_INFINITY);
    let hops = ds[dst as usize];
    if hops == u32::MAX {
        return Ok(None);
    }
    // Widest shortest path: DP over BFS layers.
    let mut order: Vec<u32> = (0..g.n as u32).filter(|&v| ds[v as usize] <= hops).collect();
    order.sort_by_key(|&v| ds[v as usize]);
    let mut width = vec![f64::NEG_INFINITY; g.n];
    width[src as usize] = f64::INFINITY;
    for &u in &order {
        let du = ds[u as usize];
        if du == hops {
            continue;
        }
        for &(v, snr) in g.neighbours(u) {
            if ds[v as usize] == du + 1 {
                let w = width[u as usize].min(snr);
                if w > width[v as usize] {
                    width[v as usize] = w;
                }
            }
        }
    }
    let bottleneck = width[dst as usize];
    // Among fewest-hop paths using only edges >= bottleneck, walk the
    // smallest-id neighbour that stays on such a path.
    let dt = g.bfs(dst, bottleneck);
    if dt[src as usize] != hops {
        return Err(Error::invariant("widest shortest path not realizable"));
    }
    let mut nodes = vec![src];
    let mut u = src;
    while u != dst {
        let need = dt[u as usize] - 1;
        let next = g
            .neighbours(u)
            .iter()
            .find(|&&(v, snr)| snr >= bottleneck && dt[v as usize] == need)
            .map(|&(v, _)| v)
            .ok_or_else(|| Error::invariant("relay path walk lost its way"))?;
        nodes.push(next);
        u = next;
    }
    Ok(Some(PathResult {
        nodes,
        bottleneck_snr_db: bottleneck,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityMode {
    DirectOnly,
    Relayed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityStats {
    /// Share of pairs connected at every observed step.
    pub connectivity_fraction: f64,
    /// Mean hops over (pair, step) samples with a path; relayed mode only.
    pub avg_hops: f64,
}

/// Streaming form of [`connectivity_stats`]: feed one graph per step.
#[derive(Debug, Clone)]
pub struct ConnectivityAccumulator {
    mode: ConnectivityMode,
    pairs: Vec<(u32, u32)>,
    always: Vec<bool>,
    hop_sum: u64,
    samples: u64,
}

impl ConnectivityAccumulator {
    pub fn new(mode: ConnectivityMode, pairs: Vec<(u32, u32)>) -> Self {
        let always = vec![true; pairs.len()];
        Self {
            mode,
            pairs,
            always,
            hop_sum: 0,
            samples: 0,
        }
    }

    pub fn observe(&mut self, g: &LinkGraph) -> Result<()> {
        for (k, &(s, d)) in self.pairs.iter().enumerate() {
            match self.mode {
                ConnectivityMode::DirectOnly => {
                    if !g.has_edge(s, d) {
                        self.always[k] = false;
                    }
                }
                ConnectivityMode::Relayed => match g.hop_distance(s, d)? {
                    Some(h) => {
                        self.hop_sum += u64::from(h);
                        self.samples += 1;
                    }
                    None => self.always[k] = false,
                },
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<ConnectivityStats> {
        if self.pairs.is_empty() {
            return Err(Error::contract("connectivity needs at least one pair"));
        }
        let ok = self.always.iter().filter(|&&a| a).count();
        let avg_hops = match self.mode {
            ConnectivityMode::DirectOnly => 1.0,
            ConnectivityMode::Relayed if self.samples > 0 => self.hop_sum as f64 / self.samples as f64,
            ConnectivityMode::Relayed => 0.0,
        };
        Ok(ConnectivityStats {
            connectivity_fraction: ok as f64 / self.pairs.len() as f64,
            avg_hops,
        })
    }
}

/// Connectivity over a trace of per-step graphs.
pub fn connectivity_stats(trace: &[LinkGraph], pairs: &[(u32, u32)], mode: ConnectivityMode) -> Result<ConnectivityStats> {
    let mut acc = ConnectivityAccumulator::new(mode, pairs.to_vec());
    for g in trace {
        acc.observe(g)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::LinkState;

    fn snap(a: u32, b: u32, snr: f64, state: LinkState) -> LinkSnapshot {
        LinkSnapshot {
            a,
            b,
            distance: 10.0,
            state,
            snr_db: snr,
            spectral_efficiency: 1.0,
        }
    }

    #[test]
    fn build_graph_filters() {
        let s = vec![
            snap(0, 1, 12.0, LinkState::Los),
            snap(1, 2, 9.9, LinkState::Los),
            snap(2, 3, 30.0, LinkState::Nlos),
            snap(3, 4, 10.0, LinkState::Los),
            snap(0, 4, 25.0, LinkState::Los),
        ];
        let g = build_graph(5, &s, 10.0).unwrap();
        let mut e: Vec<(u32, u32)> = (0..5u32)
            .flat_map(|a| g.neighbours(a).iter().filter(move |&&(b, _)| a < b).map(move |&(b, _)| (a, b)))
            .collect();
        e.sort();
        assert_eq!(e, vec![(0, 1), (0, 4), (3, 4)]);
        assert_eq!(build_graph(5, &s, f64::NEG_INFINITY).unwrap().edge_count(), 4);
        assert_eq!(build_graph(5, &s, 100.0).unwrap().edge_count(), 0);
    }

    #[test]
    fn restrict_equals_rebuild() {
        let edges = [(0, 1, 3.0), (1, 2, 12.0), (2, 3, 7.5), (0, 3, 20.0), (1, 3, -4.0), (2, 4, 10.0)];
        let base = LinkGraph::from_edges(5, &edges, f64::NEG_INFINITY).unwrap();
        for gamma in [-10.0, 0.0, 7.5, 10.0, 12.5, 30.0] {
            assert_eq!(base.restrict(gamma), LinkGraph::from_edges(5, &edges, gamma).unwrap());
        }
    }

    #[test]
    fn direct_edge_wins() {
        let g = LinkGraph::from_edges(3, &[(0, 2, 5.0), (0, 1, 30.0), (1, 2, 30.0)], 0.0).unwrap();
        let p = min_hop_path(&g, 0, 2).unwrap().unwrap();
        assert_eq!(p.nodes, vec![0, 2]);
        assert_eq!(p.hops(), 1);
    }

    #[test]
    fn triangle_two_hops() {
        // A=0, B=1, C=2
        let g = LinkGraph::from_edges(3, &[(0, 1, 20.0), (1, 2, 15.0)], 0.0).unwrap();
        let p = min_hop_path(&g, 0, 2).unwrap().unwrap();
        assert_eq!(p.nodes, vec![0, 1, 2]);
        assert_eq!(p.bottleneck_snr_db, 15.0);
    }

    #[test]
    fn wider_of_two_equal_hop_paths() {
        let g = LinkGraph::from_edges(4, &[(0, 1, 12.0), (1, 3, 30.0), (0, 2, 18.0), (2, 3, 20.0)], 0.0).unwrap();
        let p = min_hop_path(&g, 0, 3).unwrap().unwrap();
        assert_eq!(p.nodes, vec![0, 2, 3]);
        assert_eq!(p.bottleneck_snr_db, 18.0);
    }

    #[test]
    fn unreachable_and_bad_nodes() {
        let g = LinkGraph::from_edges(4, &[(0, 1, 12.0)], 0.0).unwrap();
        assert_eq!(min_hop_path(&g, 0, 3).unwrap(), None);
        assert_eq!(g.hop_distance(0, 3).unwrap(), None);
        assert!(min_hop_path(&g, 0, 9).is_err());
        assert!(min_hop_path(&g, 1, 1).is_err());
    }

    #[test]
    fn bitset_bfs_across_word_boundary() {
        // chain 0 - 70 - 130 - 199
        let g = LinkGraph::from_edges(200, &[(0, 70, 1.0), (70, 130, 1.0), (130, 199, 1.0)], 0.0).unwrap();
        assert_eq!(g.hop_distance(0, 199).unwrap(), Some(3));
        assert_eq!(g.hop_distance(199, 70).unwrap(), Some(2));
        assert_eq!(g.hop_distance(5, 6).unwrap(), None);
    }

    #[test]
    fn toy_trace_connectivity() {
        let pairs = [(0, 1), (0, 2), (3, 4)];
        let steps = [
            LinkGraph::from_edges(5, &[(0, 1, 20.0), (1, 2, 20.0), (3, 4, 20.0)], 0.0).unwrap(),
            LinkGraph::from_edges(5, &[(0, 1, 20.0), (0, 2, 20.0)], 0.0).unwrap(),
            LinkGraph::from_edges(5, &[(0, 1, 20.0), (1, 2, 20.0), (3, 4, 20.0)], 0.0).unwrap(),
        ];
        let direct = connectivity_stats(&steps, &pairs, ConnectivityMode::DirectOnly).unwrap();
        // only (0, 1) is a direct edge at every step
        assert!((direct.connectivity_fraction - 1.0 / 3.0).abs() < 1e-12);
        let relayed = connectivity_stats(&steps, &pairs, ConnectivityMode::Relayed).unwrap();
        // (0, 2) always reachable, (3, 4) broken at step 1
        assert!((relayed.connectivity_fraction - 2.0 / 3.0).abs() < 1e-12);
        // samples: step0 1,2,1  step1 1,1  step2 1,2,1 -> 10 / 8
        assert!((relayed.avg_hops - 10.0 / 8.0).abs() < 1e-12);
        assert!(connectivity_stats(&steps, &[], ConnectivityMode::Relayed).is_err());
    }
}
