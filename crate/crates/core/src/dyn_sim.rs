//! Event-driven simulation of refresh dynamics on a truncated tree.
//!
//! Each edge carries a rate-1 clock; when it rings the edge is resampled open
//! with its level probability. The superposition of all clocks is a single
//! Poisson stream of rate `|E|` with a uniformly chosen edge, which is how
//! events are generated here.
//!
//! Vertices are numbered breadth first, so parents and children are found by
//! arithmetic on the level offsets. Vertex `v >= 1` owns the edge to its
//! parent (edge id `v - 1`). Every vertex keeps the number of level-`n`
//! descendants it reaches inside its own subtree; a switch adds or removes
//! that count along the open path above the edge, stopping at the first
//! closed edge. The root count is `W_{n,t}`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{replica_rng, ReplicaRng};
use crate::stats::Estimate;
use crate::tree_model::TreeProfile;

/// Largest number of edges a simulated tree may have.
pub const MAX_SIM_EDGES: u128 = 1 << 26;

fn default_horizon() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Target level `n`; the tree is truncated there.
    pub depth: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Keep every switch (and the initial configuration) in the timeline.
    #[serde(default)]
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(depth: usize, replicas: usize, seed: u64) -> Self {
        Self { depth, horizon: 1.0, replicas, seed, record_events: false }
    }
}

/// A state-changing refresh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub edge: usize,
    pub level: usize,
    pub old_state: bool,
    pub new_state: bool,
    /// The switch changed whether the root reaches level `n`.
    pub pivotal: bool,
}

/// A pivotal switch: the root connection status after `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusChange {
    pub time: f64,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub horizon: f64,
    pub depth: usize,
    pub edge_count: usize,
    pub initially_connected: bool,
    pub status_changes: Vec<StatusChange>,
    /// Every switch, when recording was requested.
    pub events: Vec<SwitchEvent>,
    /// Initial edge states by edge id, when recording was requested.
    pub initial_state: Option<Vec<bool>>,
    pub refreshes: u64,
    /// Switches per edge level (index `level - 1`).
    pub switches_by_level: Vec<u64>,
    /// Pivotal switches per edge level (index `level - 1`).
    pub flips_by_level: Vec<u64>,
    pub root_count_min: u32,
    pub root_count_max: u32,
}

impl Timeline {
    pub fn finally_connected(&self) -> bool {
        self.status_changes.last().map_or(self.initially_connected, |c| c.connected)
    }

    /// Maximal closed intervals of `[0, T]` on which the root reaches level `n`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = if self.initially_connected { Some(0.0) } else { None };
        for c in &self.status_changes {
            match (c.connected, start) {
                (true, None) => start = Some(c.time),
                (false, Some(s)) => {
                    out.push((s, c.time));
                    start = None;
                }
                _ => unreachable!("status changes alternate"),
            }
        }
        if let Some(s) = start {
            out.push((s, self.horizon));
        }
        out
    }

    pub fn connected_at(&self, t: f64) -> bool {
        self.intervals().iter().any(|&(a, b)| a <= t && t <= b)
    }

    pub fn occupied_time(&self) -> f64 {
        self.intervals().iter().map(|(a, b)| b - a).sum()
    }

    /// The same trajectory read backwards in time.
    pub fn reversed(&self) -> Timeline {
        let horizon = self.horizon;
        let status_changes = self
            .status_changes
            .iter()
            .rev()
            .map(|c| StatusChange { time: horizon - c.time, connected: !c.connected })
            .collect();
        let events = self
            .events
            .iter()
            .rev()
            .map(|e| SwitchEvent { time: horizon - e.time, old_state: e.new_state, new_state: e.old_state, ..*e })
            .collect();
        let initial_state = self.initial_state.as_ref().map(|init| {
            let mut state = init.clone();
            for e in &self.events {
                state[e.edge] = e.new_state;
            }
            state
        });
        Timeline {
            initially_connected: self.finally_connected(),
            status_changes,
            events,
            initial_state,
            switches_by_level: self.switches_by_level.clone(),
            flips_by_level: self.flips_by_level.clone(),
            ..*self
        }
    }
}

/// Breadth-first layout of the tree truncated at `depth`.
struct Layout {
    /// First vertex of each level; `start[depth + 1]` is the vertex count.
    start: Vec<usize>,
    degrees: Vec<usize>,
    /// Probability of edges ending at level `k` (index `k`; index 0 unused).
    probs: Vec<f64>,
}

impl Layout {
    fn new(profile: &TreeProfile, depth: usize) -> Result<Self> {
        if depth == 0 || depth > profile.depth() {
            return Err(Error::LevelOutOfRange { level: depth, depth: profile.depth() });
        }
        let edges = profile.edge_count(depth).unwrap_or(u128::MAX);
        if edges > MAX_SIM_EDGES {
            return Err(Error::TooManyEdges { edges, limit: MAX_SIM_EDGES });
        }
        let mut start = vec![0usize, 1];
        let mut size = 1usize;
        for k in 0..depth {
            size *= profile.degree(k) as usize;
            start.push(start[k + 1] + size);
        }
        let degrees = (0..depth).map(|k| profile.degree(k) as usize).collect();
        let probs = (0..=depth).map(|k| if k == 0 { f64::NAN } else { profile.p(k) }).collect();
        Ok(Self { start, degrees, probs })
    }

    fn depth(&self) -> usize {
        self.degrees.len()
    }

    fn vertices(&self) -> usize {
        self.start[self.depth() + 1]
    }

    fn level_of(&self, v: usize) -> usize {
        self.start.partition_point(|&s| s <= v) - 1
    }

    fn parent(&self, v: usize, level: usize) -> usize {
        self.start[level - 1] + (v - self.start[level]) / self.degrees[level - 1]
    }
}

/// Dynamic state: edge states and subtree counts, indexed by vertex.
struct State<'a> {
    layout: &'a Layout,
    open: Vec<bool>,
    count: Vec<u32>,
}

impl<'a> State<'a> {
    fn sample(layout: &'a Layout, rng: &mut ReplicaRng) -> Self {
        let n = layout.depth();
        let mut open = vec![false; layout.vertices()];
        for k in 1..=n {
            let p = layout.probs[k];
            for slot in &mut open[layout.start[k]..layout.start[k + 1]] {
                *slot = rng.random::<f64>() < p;
            }
        }
        let mut count = vec![0u32; layout.vertices()];
        for c in &mut count[layout.start[n]..] {
            *c = 1;
        }
        for k in (0..n).rev() {
            let d = layout.degrees[k];
            for u in layout.start[k]..layout.start[k + 1] {
                let first = layout.start[k + 1] + (u - layout.start[k]) * d;
                count[u] = (first..first + d).filter(|&c| open[c]).map(|c| count[c]).sum();
            }
        }
        Self { layout, open, count }
    }

    /// Set the edge above `v` to `new` (which differs from its current
    /// state). Returns the root count change, zero if the update stopped
    /// below the root.
    fn switch(&mut self, v: usize, level: usize, new: bool) -> i64 {
        self.open[v] = new;
        let delta = self.count[v];
        if delta == 0 {
            return 0;
        }
        let (mut x, mut lx) = (self.layout.parent(v, level), level - 1);
        loop {
            if new {
                self.count[x] += delta;
            } else {
                self.count[x] -= delta;
            }
            if lx == 0 {
                return if new { delta as i64 } else { -(delta as i64) };
            }
            if !self.open[x] {
                return 0;
            }
            x = self.layout.parent(x, lx);
            lx -= 1;
        }
    }
}

/// Simulate one replica over `[0, config.horizon]`.
pub fn simulate_timeline(profile: &TreeProfile, config: &SimConfig, replica: u64) -> Result<Timeline> {
    if !(config.horizon >= 0.0) || !config.horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {}", config.horizon)));
    }
    let layout = Layout::new(profile, config.depth)?;
    let mut rng = replica_rng(config.seed, replica);
    let mut state = State::sample(&layout, &mut rng);
    let n = layout.depth();
    let edges = layout.vertices() - 1;

    let mut root = state.count[0];
    let mut tl = Timeline {
        horizon: config.horizon,
        depth: n,
        edge_count: edges,
        initially_connected: root > 0,
        status_changes: Vec::new(),
        events: Vec::new(),
        initial_state: config.record_events.then(|| state.open[1..].to_vec()),
        refreshes: 0,
        switches_by_level: vec![0; n],
        flips_by_level: vec![0; n],
        root_count_min: root,
        root_count_max: root,
    };
    let clock = Exp::new(edges as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > config.horizon {
            break;
        }
        tl.refreshes += 1;
        let v = rng.random_range(1..=edges);
        let level = layout.level_of(v);
        let new = rng.random::<f64>() < layout.probs[level];
        if new == state.open[v] {
            continue;
        }
        tl.switches_by_level[level - 1] += 1;
        let change = state.switch(v, level, new);
        let mut pivotal = false;
        if change != 0 {
            let before = root;
            root = (root as i64 + change) as u32;
            tl.root_count_min = tl.root_count_min.min(root);
            tl.root_count_max = tl.root_count_max.max(root);
            pivotal = (before == 0) != (root == 0);
        }
        if pivotal {
            tl.flips_by_level[level - 1] += 1;
            tl.status_changes.push(StatusChange { time: t, connected: root > 0 });
        }
        if config.record_events {
            tl.events.push(SwitchEvent { time: t, edge: v - 1, level, old_state: !new, new_state: new, pivotal });
        }
    }
    Ok(tl)
}

/// Per-replica summary of a timeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    /// Pivotal switches (every point of the status boundary).
    pub flips: u64,
    /// Pivotal switches that connect the root.
    pub opening_flips: u64,
    /// Pivotal switches that disconnect the root.
    pub closing_flips: u64,
    pub switches: u64,
    pub refreshes: u64,
    /// Connected components of the closed set of connected times in `[0, T]`.
    pub components: u64,
    /// Boundary points of that set inside `(0, T)`.
    pub boundary: u64,
    /// Connected during all of `[0, T]`.
    pub full_interval: bool,
    pub occupied_fraction: f64,
    pub root_count_min: u32,
    pub root_count_max: u32,
}

pub fn timeline_stats(tl: &Timeline) -> ReplicaStats {
    let opening = tl.status_changes.iter().filter(|c| c.connected).count() as u64;
    let closing = tl.status_changes.len() as u64 - opening;
    let interior = tl.status_changes.iter().filter(|c| c.time > 0.0 && c.time < tl.horizon).count() as u64;
    let occupied_fraction = if tl.horizon > 0.0 {
        tl.occupied_time() / tl.horizon
    } else if tl.initially_connected {
        1.0
    } else {
        0.0
    };
    ReplicaStats {
        flips: opening + closing,
        opening_flips: opening,
        closing_flips: closing,
        switches: tl.switches_by_level.iter().sum(),
        refreshes: tl.refreshes,
        components: tl.intervals().len() as u64,
        boundary: interior,
        full_interval: tl.initially_connected && tl.status_changes.is_empty(),
        occupied_fraction,
        root_count_min: tl.root_count_min,
        root_count_max: tl.root_count_max,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub config: SimConfig,
    pub edge_count: usize,
    pub flips: Estimate,
    pub opening_flips: Estimate,
    pub closing_flips: Estimate,
    pub switches: Estimate,
    pub components: Estimate,
    pub boundary: Estimate,
    pub full_interval: Estimate,
    pub occupied_fraction: Estimate,
    pub root_count_min: Estimate,
    pub root_count_max: Estimate,
    pub per_replica: Vec<ReplicaStats>,
}

/// Run `config.replicas` independent replicas (in parallel) and aggregate.
pub fn monte_carlo(profile: &TreeProfile, config: &SimConfig) -> Result<SimStats> {
    if config.replicas < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicas, got {}", config.replicas)));
    }
    let run = SimConfig { record_events: false, ..config.clone() };
    let per_replica = (0..config.replicas as u64)
        .into_par_iter()
        .map(|i| simulate_timeline(profile, &run, i).map(|tl| timeline_stats(&tl)))
        .collect::<Result<Vec<_>>>()?;
    let est = |f: &dyn Fn(&ReplicaStats) -> f64| Estimate::from_samples(&per_replica.iter().map(f).collect::<Vec<_>>());
    Ok(SimStats {
        config: config.clone(),
        edge_count: profile.edge_count(config.depth).unwrap_or(u128::MAX) as usize,
        flips: est(&|r| r.flips as f64),
        opening_flips: est(&|r| r.opening_flips as f64),
        closing_flips: est(&|r| r.closing_flips as f64),
        switches: est(&|r| r.switches as f64),
        components: est(&|r| r.components as f64),
        boundary: est(&|r| r.boundary as f64),
        full_interval: est(&|r| if r.full_interval { 1.0 } else { 0.0 }),
        occupied_fraction: est(&|r| r.occupied_fraction),
        root_count_min: est(&|r| r.root_count_min as f64),
        root_count_max: est(&|r| r.root_count_max as f64),
        per_replica,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{influence_table, subtree_connect_table};

    fn cfg(depth: usize, replicas: usize, seed: u64) -> SimConfig {
        SimConfig::new(depth, replicas, seed)
    }

    fn hand_timeline(initially_connected: bool, changes: &[(f64, bool)]) -> Timeline {
        Timeline {
            horizon: 1.0,
            depth: 1,
            edge_count: 1,
            initially_connected,
            status_changes: changes.iter().map(|&(time, connected)| StatusChange { time, connected }).collect(),
            events: Vec::new(),
            initial_state: None,
            refreshes: changes.len() as u64,
            switches_by_level: vec![changes.len() as u64],
            flips_by_level: vec![changes.len() as u64],
            root_count_min: 0,
            root_count_max: 1,
        }
    }

    #[test]
    fn hand_built_timelines() {
        let quiet = timeline_stats(&hand_timeline(true, &[]));
        assert_eq!((quiet.components, quiet.boundary, quiet.full_interval), (1, 0, true));

        let tl = hand_timeline(true, &[(0.4, false), (0.7, true)]);
        assert_eq!(tl.intervals(), vec![(0.0, 0.4), (0.7, 1.0)]);
        let s = timeline_stats(&tl);
        assert_eq!((s.components, s.boundary, s.flips), (2, 2, 2));
        assert!((s.occupied_fraction - 0.7).abs() < 1e-15);
        assert!(tl.connected_at(0.4) && tl.connected_at(0.7) && !tl.connected_at(0.5));
    }

    #[test]
    fn zero_horizon() {
        let prof = TreeProfile::homogeneous(2, 0.5, 3).unwrap();
        let mut c = cfg(3, 2, 1);
        c.horizon = 0.0;
        for r in 0..20 {
            let tl = simulate_timeline(&prof, &c, r).unwrap();
            assert!(tl.events.is_empty() && tl.status_changes.is_empty());
            let iv = tl.intervals();
            assert_eq!(iv == vec![(0.0, 0.0)], tl.initially_connected);
            assert!(iv.len() <= 1);
        }
    }

    #[test]
    fn edge_guard() {
        let prof = TreeProfile::homogeneous(2, 0.5, 40).unwrap();
        assert!(matches!(simulate_timeline(&prof, &cfg(30, 2, 0), 0), Err(Error::TooManyEdges { .. })));
        assert!(simulate_timeline(&prof, &cfg(41, 2, 0), 0).is_err());
        assert!(monte_carlo(&prof, &cfg(3, 1, 0)).is_err());
    }

    #[test]
    fn layout_arithmetic() {
        let prof = TreeProfile::new(vec![2, 3], vec![0.5, 0.5]).unwrap();
        let l = Layout::new(&prof, 2).unwrap();
        assert_eq!(l.start, vec![0, 1, 3, 9]);
        assert_eq!(l.level_of(0), 0);
        assert_eq!(l.level_of(2), 1);
        assert_eq!(l.level_of(8), 2);
        assert_eq!(l.parent(5, 2), 1);
        assert_eq!(l.parent(6, 2), 2);
        assert_eq!(l.parent(2, 1), 0);
    }

    /// Replay recorded switches on a plain edge array and recompute root
    /// connectivity from scratch after each one.
    #[test]
    fn counts_agree_with_recomputation() {
        let prof = TreeProfile::new(vec![3, 2, 2, 3], vec![0.6, 0.55, 0.7, 0.5]).unwrap();
        let mut c = cfg(4, 2, 99);
        c.record_events = true;
        c.horizon = 0.5;
        let layout = Layout::new(&prof, 4).unwrap();
        let reach = |open: &[bool]| {
            let mut alive = vec![false; layout.vertices()];
            for v in layout.start[4]..layout.vertices() {
                alive[v] = true;
            }
            for v in (1..layout.vertices()).rev() {
                if alive[v] && open[v - 1] {
                    let lv = layout.level_of(v);
                    alive[layout.parent(v, lv)] = true;
                }
            }
            alive[0]
        };
        for r in 0..5 {
            let tl = simulate_timeline(&prof, &c, r).unwrap();
            let mut open = tl.initial_state.clone().unwrap();
            let mut status = reach(&open);
            assert_eq!(status, tl.initially_connected);
            let mut changes = tl.status_changes.iter();
            for e in &tl.events {
                assert_eq!(open[e.edge], e.old_state);
                open[e.edge] = e.new_state;
                let now = reach(&open);
                assert_eq!(now != status, e.pivotal);
                if e.pivotal {
                    let c = changes.next().unwrap();
                    assert_eq!((c.time, c.connected), (e.time, now));
                }
                status = now;
            }
            assert!(changes.next().is_none());
            assert!(tl.events.windows(2).all(|w| w[0].time < w[1].time));
        }
    }

    #[test]
    fn reversal_is_an_involution() {
        let prof = TreeProfile::homogeneous(2, 0.55, 5).unwrap();
        let mut c = cfg(5, 2, 3);
        c.record_events = true;
        let tl = simulate_timeline(&prof, &c, 0).unwrap();
        let back = tl.reversed().reversed();
        assert_eq!(back.status_changes.len(), tl.status_changes.len());
        for (a, b) in back.status_changes.iter().zip(&tl.status_changes) {
            assert!((a.time - b.time).abs() < 1e-12 && a.connected == b.connected);
        }
        assert_eq!(back.initial_state, tl.initial_state);
        assert_eq!(timeline_stats(&tl.reversed()).components, timeline_stats(&tl).components);
    }

    #[test]
    fn single_edge_switches_and_flips() {
        let prof = TreeProfile::homogeneous(1, 0.5, 1).unwrap();
        let s = monte_carlo(&prof, &cfg(1, 100_000, 11)).unwrap();
        assert!(s.switches.within(0.5, 3.0), "{:?}", s.switches);
        assert!(s.flips.within(0.5, 3.0), "{:?}", s.flips);
        assert_eq!(s.flips, s.switches);
    }

    #[test]
    fn binary_depth_one_flips() {
        let prof = TreeProfile::homogeneous(2, 0.5, 1).unwrap();
        let exact = influence_table(&prof, 1).unwrap().flip_intensity;
        assert!((exact - 0.5).abs() < 1e-15);
        let s = monte_carlo(&prof, &cfg(1, 40_000, 5)).unwrap();
        assert!(s.flips.within(exact, 3.0), "{:?}", s.flips);
    }

    #[test]
    fn stationarity_and_boundary() {
        let prof = TreeProfile::new(vec![2, 3, 2, 2, 2, 2], vec![0.6, 0.45, 0.6, 0.55, 0.5, 0.6]).unwrap();
        let s = monte_carlo(&prof, &cfg(6, 20_000, 17)).unwrap();
        let a0 = subtree_connect_table(&prof, 6).unwrap()[0];
        assert!(s.occupied_fraction.within(a0, 3.0), "{:?} vs {a0}", s.occupied_fraction);
        let boundary = influence_table(&prof, 6).unwrap().boundary_mean;
        assert!(s.boundary.within(boundary, 3.0), "{:?} vs {boundary}", s.boundary);
        for r in &s.per_replica {
            assert!(r.components <= r.boundary / 2 + 1);
            assert!(!r.full_interval || r.components == 1);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let prof = TreeProfile::homogeneous(3, 0.4, 6).unwrap();
        let a = monte_carlo(&prof, &cfg(6, 64, 42)).unwrap();
        let b = monte_carlo(&prof, &cfg(6, 64, 42)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = monte_carlo(&prof, &cfg(6, 64, 43)).unwrap();
        assert_ne!(a.per_replica, c.per_replica);
    }
}
