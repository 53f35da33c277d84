//! Two lattice blocks joined by many long, thin bridges.
//!
//! A block is the box `[-R, R]^2` of the square lattice with every edge
//! replaced by `m` parallel edges. `G_j` takes two disjoint blocks and joins
//! the copies of `(i, 0)`, `1 <= i <= 9 * 2^j`, by vertex-disjoint paths of
//! `j` edges. The terminals are the two copies of the origin.
//!
//! Edges are ordered block A, block B, then bridges, and each replica draws
//! one uniform per edge in that order. Graphs with the same `m` and radius
//! therefore share their block randomness across `j`, and `edge open iff
//! U < p` couples every `p`.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{replica_rng, ReplicaRng};
use crate::stats::Estimate;

/// Undirected multigraph with two marked terminals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub vertex_count: usize,
    pub edges: Vec<(u32, u32)>,
    pub x: usize,
    pub y: usize,
}

impl Network {
    pub fn new(vertex_count: usize, edges: Vec<(u32, u32)>, x: usize, y: usize) -> Result<Self> {
        if x >= vertex_count || y >= vertex_count {
            return Err(Error::InvalidArgument(format!("terminals ({x}, {y}) outside {vertex_count} vertices")));
        }
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a as usize >= vertex_count || b as usize >= vertex_count) {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) outside {vertex_count} vertices")));
        }
        Ok(Self { vertex_count, edges, x, y })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `x <-> y` through edges with `open[e]`.
    pub fn terminals_connected(&self, open: impl Fn(usize) -> bool) -> bool {
        let mut uf = UnionFind::new(self.vertex_count);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if open(e) {
                uf.union(a as usize, b as usize);
            }
        }
        uf.find(self.x) == uf.find(self.y)
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            let up = self.parent[self.parent[v] as usize];
            self.parent[v] = up;
            v = up as usize;
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetGraph {
    pub network: Network,
    pub j: u32,
    pub multiplicity: u32,
    pub radius: u32,
    pub bridge_count: usize,
    /// Edges per bridge (equals `j`).
    pub bridge_len: usize,
    pub block_vertices: usize,
    pub block_edges: usize,
}

impl GadgetGraph {
    /// Vertex of `(px, py)` in block `copy` (0 or 1).
    pub fn block_vertex(&self, copy: usize, px: i64, py: i64) -> usize {
        copy * self.block_vertices + lattice_index(self.radius, px, py)
    }

    /// Edge ids of bridge `i` (0-based), from block A to block B.
    pub fn bridge_edges(&self, i: usize) -> std::ops::Range<usize> {
        let start = 2 * self.block_edges + i * self.bridge_len;
        start..start + self.bridge_len
    }
}

fn lattice_index(radius: u32, px: i64, py: i64) -> usize {
    let side = 2 * radius as i64 + 1;
    ((px + radius as i64) * side + (py + radius as i64)) as usize
}

/// Box lattice edges with multiplicity, in a fixed order.
fn block_edges(radius: u32, m: u32) -> Vec<(u32, u32)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for px in -r..=r {
        for py in -r..=r {
            let v = lattice_index(radius, px, py) as u32;
            if px < r {
                let w = lattice_index(radius, px + 1, py) as u32;
                out.extend(std::iter::repeat_n((v, w), m as usize));
            }
            if py < r {
                let w = lattice_index(radius, px, py + 1) as u32;
                out.extend(std::iter::repeat_n((v, w), m as usize));
            }
        }
    }
    out
}

pub fn bridge_count(j: u32) -> usize {
    9usize << j
}

pub fn build_gadget(j: u32, m: u32, radius: u32) -> Result<GadgetGraph> {
    if j == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("need j >= 1 and m >= 1 (j = {j}, m = {m})")));
    }
    if j > 16 {
        return Err(Error::InvalidArgument(format!("j = {j} is too large")));
    }
    let bridges = bridge_count(j);
    if (radius as usize) < bridges {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} cannot hold bridge endpoints up to ({bridges}, 0)"
        )));
    }
    let side = 2 * radius as usize + 1;
    let block_vertices = side * side;
    let block = block_edges(radius, m);
    let block_count = block.len();
    let shift = block_vertices as u32;
    let mut edges = block.clone();
    edges.extend(block.iter().map(|&(a, b)| (a + shift, b + shift)));

    let mut next = 2 * block_vertices;
    for i in 1..=bridges {
        let a = lattice_index(radius, i as i64, 0);
        let mut prev = a as u32;
        for _ in 1..j {
            edges.push((prev, next as u32));
            prev = next as u32;
            next += 1;
        }
        edges.push((prev, (a + block_vertices) as u32));
    }
    let origin = lattice_index(radius, 0, 0);
    let network = Network::new(next, edges, origin, origin + block_vertices)?;
    Ok(GadgetGraph {
        network,
        j,
        multiplicity: m,
        radius,
        bridge_count: bridges,
        bridge_len: j as usize,
        block_vertices,
        block_edges: block_count,
    })
}

fn uniforms(rng: &mut ReplicaRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange { level: 0, value: p, lo: 0.0, hi: 1.0 })
    }
}

/// Static connection indicators of one replica for every `p` in `ps`.
pub fn connect_indicators(net: &Network, ps: &[f64], seed: u64, replica: u64) -> Vec<bool> {
    let u = uniforms(&mut replica_rng(seed, replica), net.edge_count());
    ps.iter().map(|&p| net.terminals_connected(|e| u[e] < p)).collect()
}

/// `P_p(x <-> y)` estimated from `replicas` independent configurations.
pub fn connect_estimate(net: &Network, p: f64, replicas: usize, seed: u64) -> Result<Estimate> {
    Ok(connect_curve(net, &[p], replicas, seed)?[0])
}

/// Connection estimates on a `p` grid with common random numbers.
pub fn connect_curve(net: &Network, ps: &[f64], replicas: usize, seed: u64) -> Result<Vec<Estimate>> {
    for &p in ps {
        check_p(p)?;
    }
    if replicas < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicas".into()));
    }
    let hits: Vec<Vec<bool>> =
        (0..replicas as u64).into_par_iter().map(|r| connect_indicators(net, ps, seed, r)).collect();
    Ok((0..ps.len())
        .map(|k| Estimate::from_samples(&hits.iter().map(|h| if h[k] { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
        .collect())
}

/// Adjacency in compressed rows: `(neighbor, edge)` pairs.
struct Adjacency {
    offsets: Vec<usize>,
    links: Vec<(u32, u32)>,
}

impl Adjacency {
    fn new(net: &Network) -> Self {
        let mut deg = vec![0usize; net.vertex_count + 1];
        for &(a, b) in &net.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut offsets = vec![0usize; net.vertex_count + 1];
        for v in 0..net.vertex_count {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut links = vec![(0u32, 0u32); offsets[net.vertex_count]];
        for (e, &(a, b)) in net.edges.iter().enumerate() {
            links[fill[a as usize]] = (b, e as u32);
            fill[a as usize] += 1;
            links[fill[b as usize]] = (a, e as u32);
            fill[b as usize] += 1;
        }
        Self { offsets, links }
    }

    /// Edges of a shortest open `x -> y` path, if any.
    fn open_path(&self, net: &Network, open: &[bool]) -> Option<Vec<usize>> {
        let mut via = vec![u32::MAX; net.vertex_count];
        let mut seen = vec![false; net.vertex_count];
        let mut queue = VecDeque::new();
        seen[net.x] = true;
        queue.push_back(net.x);
        while let Some(v) = queue.pop_front() {
            if v == net.y {
                let mut path = Vec::new();
                let mut cur = v;
                while cur != net.x {
                    let e = via[cur] as usize;
                    path.push(e);
                    let (a, b) = net.edges[e];
                    cur = if a as usize == cur { b as usize } else { a as usize };
                }
                return Some(path);
            }
            for &(w, e) in &self.links[self.offsets[v]..self.offsets[v + 1]] {
                if open[e as usize] && !seen[w as usize] {
                    seen[w as usize] = true;
                    via[w as usize] = e;
                    queue.push_back(w as usize);
                }
            }
        }
        None
    }
}

/// One replica of refresh dynamics on `[0, epsilon]`: were the terminals
/// connected at every time?
///
/// An open witness path is kept; connectivity is only recomputed when one
/// of its edges closes.
fn persists(net: &Network, adj: &Adjacency, p: f64, epsilon: f64, seed: u64, replica: u64) -> Result<bool> {
    let mut rng = replica_rng(seed, replica);
    let mut open: Vec<bool> = uniforms(&mut rng, net.edge_count()).into_iter().map(|u| u < p).collect();
    let Some(path) = adj.open_path(net, &open) else {
        return Ok(false);
    };
    if path.is_empty() {
        return Ok(true);
    }
    let mut on_path = vec![false; net.edge_count()];
    for &e in &path {
        on_path[e] = true;
    }
    let clock = Exp::new(net.edge_count() as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += clock.sample(&mut rng);
        if t > epsilon {
            return Ok(true);
        }
        let e = rng.random_range(0..net.edge_count());
        let state = rng.random::<f64>() < p;
        if state == open[e] {
            continue;
        }
        open[e] = state;
        if !state && on_path[e] {
            match adj.open_path(net, &open) {
                None => return Ok(false),
                Some(fresh) => {
                    on_path.iter_mut().for_each(|b| *b = false);
                    for &f in &fresh {
                        on_path[f] = true;
                    }
                }
            }
        }
    }
}

/// Probability that `x <-> y` at every time in `[0, epsilon]` under
/// stationary refresh dynamics.
pub fn persistence_estimate(net: &Network, p: f64, epsilon: f64, replicas: usize, seed: u64) -> Result<Estimate> {
    check_p(p)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if replicas < 2 {
        return Err(Error::InvalidArgument("need at least 2 replicas".into()));
    }
    let adj = Adjacency::new(net);
    let hits = (0..replicas as u64)
        .into_par_iter()
        .map(|r| persists(net, &adj, p, epsilon, seed, r).map(|b| if b { 1.0 } else { 0.0 }))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&hits))
}

/// Probability that the origin of one block joins the box boundary.
pub fn block_one_arm(m: u32, radius: u32, p: f64, replicas: usize, seed: u64) -> Result<Estimate> {
    if m == 0 || radius == 0 {
        return Err(Error::InvalidArgument("need m >= 1 and radius >= 1".into()));
    }
    let side = 2 * radius as usize + 1;
    let sink = side * side;
    let mut edges = block_edges(radius, m);
    let lattice = edges.len();
    let r = radius as i64;
    for px in -r..=r {
        for py in -r..=r {
            if px.abs() == r || py.abs() == r {
                edges.push((lattice_index(radius, px, py) as u32, sink as u32));
            }
        }
    }
    let net = Network::new(sink + 1, edges, lattice_index(radius, 0, 0), sink)?;
    check_p(p)?;
    let hits: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let u = uniforms(&mut replica_rng(seed, rep), lattice);
            if net.terminals_connected(|e| e >= lattice || u[e] < p) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Estimate::from_samples(&hits))
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicityChoice {
    pub multiplicity: u32,
    /// Block one-arm estimates for `m = 1..=multiplicity`.
    pub one_arm: Vec<Estimate>,
}

/// Smallest `m <= max_m` whose block one-arm estimate at `p` reaches `threshold`.
pub fn select_multiplicity(
    radius: u32,
    p: f64,
    threshold: f64,
    max_m: u32,
    replicas: usize,
    seed: u64,
) -> Result<MultiplicityChoice> {
    let mut one_arm = Vec::new();
    for m in 1..=max_m {
        let est = block_one_arm(m, radius, p, replicas, seed)?;
        one_arm.push(est);
        if est.mean >= threshold {
            return Ok(MultiplicityChoice { multiplicity: m, one_arm });
        }
    }
    Err(Error::InvalidArgument(format!("no m <= {max_m} reaches one-arm {threshold} at radius {radius}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_one_structure() {
        let g = build_gadget(1, 1, 18).unwrap();
        assert_eq!(g.bridge_count, 18);
        let side = 37;
        let block_e = 2 * side * (side - 1);
        assert_eq!(g.block_edges, block_e);
        assert_eq!(g.network.vertex_count, 2 * side * side);
        assert_eq!(g.network.edge_count(), 2 * block_e + 18);
        assert_ne!(g.network.x, g.network.y);
        assert!(g.network.x < g.block_vertices && g.network.y >= g.block_vertices);
    }

    #[test]
    fn j_two_interior_vertices() {
        let g = build_gadget(2, 2, 40).unwrap();
        assert_eq!(g.bridge_count, 36);
        assert_eq!(g.network.vertex_count - 2 * g.block_vertices, 36);
        for i in 0..36 {
            let r = g.bridge_edges(i);
            assert_eq!(r.len(), 2);
            let (a, _) = g.network.edges[r.start];
            let (_, b) = g.network.edges[r.end - 1];
            assert_eq!(a as usize, g.block_vertex(0, i as i64 + 1, 0));
            assert_eq!(b as usize, g.block_vertex(1, i as i64 + 1, 0));
        }
    }

    #[test]
    fn small_box_rejected() {
        assert!(build_gadget(1, 1, 12).is_err());
        assert!(build_gadget(0, 1, 20).is_err());
        assert!(build_gadget(1, 0, 20).is_err());
    }

    #[test]
    fn degree_bound_independent_of_j() {
        for j in 1..=3 {
            let g = build_gadget(j, 2, 72).unwrap();
            let mut deg = vec![0usize; g.network.vertex_count];
            for &(a, b) in &g.network.edges {
                deg[a as usize] += 1;
                deg[b as usize] += 1;
            }
            assert!(deg.iter().all(|&d| d <= 4 * 2 + 1));
        }
    }

    #[test]
    fn extreme_probabilities() {
        for j in 1..=3 {
            let g = build_gadget(j, 1, 72).unwrap();
            assert_eq!(connect_estimate(&g.network, 1.0, 100, 1).unwrap().mean, 1.0);
            assert_eq!(connect_estimate(&g.network, 0.0, 100, 1).unwrap().mean, 0.0);
        }
    }

    #[test]
    fn monotone_in_p_per_replica() {
        let g = build_gadget(2, 1, 36).unwrap();
        let ps = [0.3, 0.4, 0.45, 0.5, 0.55, 0.7];
        for r in 0..50 {
            let hits = connect_indicators(&g.network, &ps, 9, r);
            assert!(hits.windows(2).all(|w| !w[0] || w[1]), "{hits:?}");
        }
    }

    #[test]
    fn block_randomness_shared_across_j() {
        let a = build_gadget(1, 2, 72).unwrap();
        let b = build_gadget(3, 2, 72).unwrap();
        assert_eq!(a.block_edges, b.block_edges);
        assert_eq!(a.network.edges[..2 * a.block_edges], b.network.edges[..2 * b.block_edges]);
    }

    #[test]
    fn single_edge_persistence() {
        let net = Network::new(2, vec![(0, 1)], 0, 1).unwrap();
        let est = persistence_estimate(&net, 0.5, 1.0, 40_000, 3).unwrap();
        let exact = 0.5 * (-0.5f64).exp();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn tiny_epsilon_matches_static() {
        let g = build_gadget(1, 1, 18).unwrap();
        let stat = connect_estimate(&g.network, 0.5, 400, 5).unwrap();
        let dynm = persistence_estimate(&g.network, 0.5, 1e-6, 400, 5).unwrap();
        assert!((stat.mean - dynm.mean).abs() <= 3.0 * (stat.se.powi(2) + dynm.se.powi(2)).sqrt() + 1e-12);
    }

    #[test]
    fn persistence_never_exceeds_static_per_replica() {
        let net = Network::new(4, vec![(0, 1), (1, 3), (0, 2), (2, 3), (1, 2)], 0, 3).unwrap();
        let adj = Adjacency::new(&net);
        for r in 0..500 {
            let stat = connect_indicators(&net, &[0.5], 8, r)[0];
            let dynm = persists(&net, &adj, 0.5, 0.3, 8, r).unwrap();
            assert!(stat || !dynm);
        }
    }

    #[test]
    fn one_arm_grows_with_multiplicity() {
        let one = block_one_arm(1, 10, 0.5, 300, 2).unwrap();
        let three = block_one_arm(3, 10, 0.5, 300, 2).unwrap();
        assert!(three.mean > one.mean);
        let choice = select_multiplicity(10, 0.5, 0.9, 6, 300, 2).unwrap();
        assert!(choice.one_arm.last().unwrap().mean >= 0.9);
        assert_eq!(choice.one_arm.len(), choice.multiplicity as usize);
    }
}
