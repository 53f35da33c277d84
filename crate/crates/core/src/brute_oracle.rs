//! Exhaustive enumeration over edge configurations of tiny trees.
//!
//! A configuration is a bit mask, bit `i` set when edge `i` is open. Edge `i`
//! joins vertex `i + 1` to its parent. Two-time events see a pair of masks
//! `(x0, xt)` weighted by the per-edge Markov transition over time `t`.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::tree_model::TreeProfile;

pub const MAX_STATIC_EDGES: usize = 16;
pub const MAX_TWO_TIME_EDGES: usize = 10;

/// Rooted tree with explicit per-edge probabilities. Vertex 0 is the root.
#[derive(Clone, Debug)]
pub struct TinyTree {
    /// `parent[v]` for `v >= 1`; `parent[0]` is unused.
    parent: Vec<usize>,
    level: Vec<usize>,
    probs: Vec<f64>,
}

impl TinyTree {
    /// `parents[i]` is the parent of vertex `i + 1` and must be `<= i`.
    pub fn new(parents: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if parents.len() != probs.len() {
            return Err(Error::InvalidArgument("one probability per edge".into()));
        }
        if parents.len() > MAX_STATIC_EDGES {
            return Err(Error::TooManyEdges { edges: parents.len() as u128, limit: MAX_STATIC_EDGES as u128 });
        }
        let mut parent = vec![0];
        let mut level = vec![0];
        for (i, (&par, &p)) in parents.iter().zip(&probs).enumerate() {
            if par > i {
                return Err(Error::InvalidArgument(format!("vertex {} has parent {par} not yet defined", i + 1)));
            }
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::ProbabilityOutOfRange { level: i + 1, value: p, lo: 0.0, hi: 1.0 });
            }
            parent.push(par);
            level.push(level[par] + 1);
        }
        Ok(Self { parent, level, probs })
    }

    /// Expand a profile truncated at level `n` (breadth-first vertex order).
    pub fn from_profile(profile: &TreeProfile, n: usize) -> Result<Self> {
        if n == 0 || n > profile.depth() {
            return Err(Error::LevelOutOfRange { level: n, depth: profile.depth() });
        }
        let edges = profile.edge_count(n).unwrap_or(u128::MAX);
        if edges > MAX_STATIC_EDGES as u128 {
            return Err(Error::TooManyEdges { edges, limit: MAX_STATIC_EDGES as u128 });
        }
        let mut parents = Vec::new();
        let mut probs = Vec::new();
        let mut frontier = vec![0usize];
        let mut next_id = 1usize;
        for k in 0..n {
            let mut next = Vec::new();
            for &v in &frontier {
                for _ in 0..profile.degree(k) {
                    parents.push(v);
                    probs.push(profile.p(k + 1));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        Self::new(parents, probs)
    }

    pub fn edge_count(&self) -> usize {
        self.probs.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    pub fn depth(&self) -> usize {
        self.level.iter().copied().max().unwrap_or(0)
    }

    pub fn edge_prob(&self, e: usize) -> f64 {
        self.probs[e]
    }

    /// Level of the lower endpoint of edge `e`.
    pub fn edge_level(&self, e: usize) -> usize {
        self.level[e + 1]
    }

    /// Whether `v` is joined to the root by open edges in `config`.
    pub fn connected_to_root(&self, config: u32, mut v: usize) -> bool {
        while v != 0 {
            if config & (1 << (v - 1)) == 0 {
                return false;
            }
            v = self.parent[v];
        }
        true
    }

    /// `W_n`: open-connected vertices at level `n`.
    pub fn connected_count(&self, config: u32, n: usize) -> usize {
        (1..self.vertex_count()).filter(|&v| self.level[v] == n && self.connected_to_root(config, v)).count()
            + usize::from(n == 0)
    }

    /// Root joined to level `n`.
    pub fn root_reaches(&self, config: u32, n: usize) -> bool {
        n == 0 || (1..self.vertex_count()).any(|v| self.level[v] == n && self.connected_to_root(config, v))
    }

    fn weight(&self, config: u32) -> f64 {
        self.probs.iter().enumerate().map(|(i, &p)| if config & (1 << i) != 0 { p } else { 1.0 - p }).product()
    }

    fn check_static(&self) -> Result<()> {
        if self.edge_count() > MAX_STATIC_EDGES {
            return Err(Error::TooManyEdges { edges: self.edge_count() as u128, limit: MAX_STATIC_EDGES as u128 });
        }
        Ok(())
    }
}

/// `E[f(config)]` under the product measure.
pub fn expectation(tree: &TinyTree, f: impl Fn(u32) -> f64) -> Result<f64> {
    tree.check_static()?;
    let total = 1u32 << tree.edge_count();
    Ok((0..total).map(|x| tree.weight(x) * f(x)).collect::<KahanSum>().value())
}

/// `P(event)` under the product measure.
pub fn static_prob(tree: &TinyTree, event: impl Fn(u32) -> bool) -> Result<f64> {
    expectation(tree, |x| if event(x) { 1.0 } else { 0.0 })
}

/// Probability that toggling `edge` changes the outcome of `event`.
pub fn pivotal_prob(tree: &TinyTree, edge: usize, event: impl Fn(u32) -> bool) -> Result<f64> {
    tree.check_static()?;
    if edge >= tree.edge_count() {
        return Err(Error::InvalidArgument(format!("edge {edge} out of range")));
    }
    let bit = 1u32 << edge;
    let total = 1u32 << tree.edge_count();
    // Sum over configurations of the other edges: weight excluding `edge`.
    let p = tree.edge_prob(edge);
    Ok((0..total)
        .filter(|x| x & bit == 0)
        .filter(|&x| event(x) != event(x | bit))
        .map(|x| tree.weight(x) / (1.0 - p))
        .collect::<KahanSum>()
        .value())
}

/// Joint law `(P00, P01, P10, P11)` of one edge at times 0 and `t`, from the
/// two-state chain with rates `p` (closed to open) and `1 - p` (open to closed).
fn edge_transition(p: f64, t: f64) -> [f64; 4] {
    let stay = (-t).exp();
    let open_given_open = p + (1.0 - p) * stay;
    let open_given_closed = p * (1.0 - stay);
    [
        (1.0 - p) * (1.0 - open_given_closed),
        (1.0 - p) * open_given_closed,
        p * (1.0 - open_given_open),
        p * open_given_open,
    ]
}

/// `P(event2(x0, xt))` for the stationary dynamics observed at times 0 and `t`.
pub fn two_time_prob(tree: &TinyTree, t: f64, event2: impl Fn(u32, u32) -> bool) -> Result<f64> {
    let e = tree.edge_count();
    if e > MAX_TWO_TIME_EDGES {
        return Err(Error::TooManyEdges { edges: e as u128, limit: MAX_TWO_TIME_EDGES as u128 });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time offset {t} must be >= 0")));
    }
    let laws: Vec<[f64; 4]> = tree.probs.iter().map(|&p| edge_transition(p, t)).collect();
    let total = 1u32 << e;
    let mut acc = KahanSum::new();
    for x0 in 0..total {
        for xt in 0..total {
            if !event2(x0, xt) {
                continue;
            }
            let w: f64 = laws
                .iter()
                .enumerate()
                .map(|(i, law)| {
                    let a = ((x0 >> i) & 1) as usize;
                    let b = ((xt >> i) & 1) as usize;
                    law[2 * a + b]
                })
                .product();
            acc.add(w);
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(depth: usize, p: f64) -> TinyTree {
        TinyTree::from_profile(&TreeProfile::homogeneous(2, p, depth).unwrap(), depth).unwrap()
    }

    #[test]
    fn binary_depth1_root_reaches() {
        let t = binary(1, 0.5);
        let v = static_prob(&t, |x| t.root_reaches(x, 1)).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn binary_depth2_root_reaches() {
        let t = binary(2, 0.5);
        assert_eq!(t.edge_count(), 6);
        let v = static_prob(&t, |x| t.root_reaches(x, 2)).unwrap();
        assert!((v - 39.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn certain_event_has_unit_mass() {
        let t = TinyTree::new(vec![0, 0, 1, 1, 2], vec![0.2, 0.7, 0.4, 0.9, 0.35]).unwrap();
        assert!((static_prob(&t, |_| true).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_two_time() {
        let t = TinyTree::new(vec![0], vec![0.5]).unwrap();
        let v = two_time_prob(&t, 2f64.ln(), |a, b| a & b & 1 == 1).unwrap();
        assert!((v - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn binary_depth1_two_time() {
        let t = binary(1, 0.5);
        let ln2 = 2f64.ln();
        // Root joined to level 1 at both times: either time may use either child.
        let both = two_time_prob(&t, ln2, |a, b| t.root_reaches(a, 1) && t.root_reaches(b, 1)).unwrap();
        assert!((both - 0.640625).abs() < 1e-15, "{both}");
        // Some single child edge open at both times: 1 - (1 - 3/8)^2.
        let same_branch = two_time_prob(&t, ln2, |a, b| a & b != 0).unwrap();
        assert!((same_branch - 0.609375).abs() < 1e-15);
    }

    #[test]
    fn two_time_at_zero_reduces_to_static() {
        let t = TinyTree::new(vec![0, 0, 1, 2], vec![0.3, 0.6, 0.45, 0.8]).unwrap();
        let ev = |x: u32| t.root_reaches(x, 2);
        let s = static_prob(&t, ev).unwrap();
        let d = two_time_prob(&t, 0.0, |a, b| ev(a) && ev(b)).unwrap();
        assert!((s - d).abs() < 1e-15);
    }

    #[test]
    fn two_time_is_symmetric_in_time() {
        let t = TinyTree::new(vec![0, 0, 1, 1], vec![0.3, 0.6, 0.45, 0.8]).unwrap();
        let ev = |a: u32, b: u32| t.root_reaches(a, 2) && !t.root_reaches(b, 1);
        let fwd = two_time_prob(&t, 0.7, ev).unwrap();
        let rev = two_time_prob(&t, 0.7, |a, b| ev(b, a)).unwrap();
        assert!((fwd - rev).abs() < 1e-15);
    }

    #[test]
    fn pivotal_examples() {
        let single = TinyTree::new(vec![0], vec![0.37]).unwrap();
        assert!((pivotal_prob(&single, 0, |x| single.root_reaches(x, 1)).unwrap() - 1.0).abs() < 1e-15);

        let b = binary(1, 0.5);
        assert!((pivotal_prob(&b, 0, |x| b.root_reaches(x, 1)).unwrap() - 0.5).abs() < 1e-15);

        let path = TinyTree::new(vec![0, 1], vec![0.5, 0.8]).unwrap();
        assert!((pivotal_prob(&path, 0, |x| path.root_reaches(x, 2)).unwrap() - 0.8).abs() < 1e-15);
        assert!((pivotal_prob(&path, 1, |x| path.root_reaches(x, 2)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn size_limits() {
        let big = TreeProfile::homogeneous(2, 0.5, 4).unwrap(); // 30 edges
        assert!(matches!(TinyTree::from_profile(&big, 4), Err(Error::TooManyEdges { .. })));
        let eleven = TinyTree::new(vec![0; 11], vec![0.5; 11]).unwrap();
        assert!(matches!(two_time_prob(&eleven, 1.0, |_, _| true), Err(Error::TooManyEdges { .. })));
    }

    proptest::proptest! {
        #[test]
        fn event_and_complement_sum_to_one(
            parents in proptest::collection::vec(0usize..4, 1..9),
            ps in proptest::collection::vec(0.05f64..0.95, 9),
            level in 1usize..4,
        ) {
            let parents: Vec<usize> = parents.iter().enumerate().map(|(i, &p)| p.min(i)).collect();
            let t = TinyTree::new(parents.clone(), ps[..parents.len()].to_vec()).unwrap();
            let a = static_prob(&t, |x| t.root_reaches(x, level)).unwrap();
            let b = static_prob(&t, |x| !t.root_reaches(x, level)).unwrap();
            proptest::prop_assert!((a + b - 1.0).abs() < 1e-14);
        }

        #[test]
        fn pivotal_equals_conditional_difference_for_monotone_events(
            parents in proptest::collection::vec(0usize..4, 1..8),
            ps in proptest::collection::vec(0.05f64..0.95, 8),
            edge_pick in 0usize..8,
        ) {
            let parents: Vec<usize> = parents.iter().enumerate().map(|(i, &p)| p.min(i)).collect();
            let t = TinyTree::new(parents.clone(), ps[..parents.len()].to_vec()).unwrap();
            let e = edge_pick % t.edge_count();
            let depth = t.depth();
            let ev = |x: u32| t.root_reaches(x, depth);
            let piv = pivotal_prob(&t, e, ev).unwrap();
            let bit = 1u32 << e;
            let p = t.edge_prob(e);
            let open = static_prob(&t, |x| x & bit != 0 && ev(x)).unwrap() / p;
            let closed = static_prob(&t, |x| x & bit == 0 && ev(x)).unwrap() / (1.0 - p);
            proptest::prop_assert!((piv - (open - closed).abs()).abs() < 1e-12);
        }
    }
}
