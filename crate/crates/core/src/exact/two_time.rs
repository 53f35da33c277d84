use serde::Serialize;

use super::check_target;
use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::tree_model::TreeProfile;

/// Joint law of one edge at times 0 and `t` under stationary refresh dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeJoint {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl EdgeJoint {
    pub fn total(&self) -> f64 {
        self.p11 + self.p10 + self.p01 + self.p00
    }
}

pub fn two_time_edge_joint(p: f64, t: f64) -> EdgeJoint {
    let keep = (-t).exp();
    let mixed = p * (1.0 - p);
    let off = -mixed * f64::exp_m1(-t);
    EdgeJoint { p11: p * p + mixed * keep, p10: off, p01: off, p00: (1.0 - p) * (1.0 - p) + mixed * keep }
}

/// Two-time survival of a level-`n` vertex towards level `target`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoTimeTable {
    pub n: usize,
    pub target: usize,
    pub t: f64,
    /// One-time connection probability.
    pub q: f64,
    /// Connection at both times 0 and `t`.
    pub q_t: f64,
    /// `1 - q`.
    pub q_tilde: f64,
    /// Failure at both times, `1 - 2q + q_t`.
    pub q_tilde_t: f64,
}

/// Probability that `d` branches produce success at both times when no
/// single branch succeeds at both: at least one branch must succeed only at
/// time 0 and another only at time `t`.
fn split_success(d: u32, v: f64, c: f64) -> f64 {
    if c <= 0.0 || d < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for s in 2..=d {
        let ways = binomial(d, s) * (2f64.powi(s as i32) - 2.0);
        acc += ways * v.powi((d - s) as i32) * c.powi(s as i32);
    }
    acc
}

pub fn two_time_survival(profile: &TreeProfile, n: usize, target: usize, t: f64) -> Result<TwoTimeTable> {
    check_target(profile, target)?;
    if n >= target {
        return Err(Error::InvalidArgument(format!("two-time survival needs n < N (n = {n}, N = {target})")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time offset must be >= 0, got {t}")));
    }
    // one-time success `a`, both-times success `s`, both-times failure `f`
    let (mut a, mut s, mut f) = (1.0f64, 1.0f64, 0.0f64);
    for k in (n..target).rev() {
        let d = profile.degree(k);
        let p = profile.p(k + 1);
        let joint = two_time_edge_joint(p, t);
        let branch_one = p * a;
        let branch_both = joint.p11 * s;
        let only_one = branch_one - branch_both;
        if only_one < -1e-12 {
            return Err(Error::NegativeProbability { level: k, value: only_one });
        }
        let only_one = only_one.max(0.0);
        let fail_both = (1.0 - 2.0 * branch_one + branch_both).max(0.0);
        let df = d as f64;
        a = -f64::exp_m1(df * f64::ln_1p(-branch_one));
        s = -f64::exp_m1(df * f64::ln_1p(-branch_both)) + split_success(d, fail_both, only_one);
        f = fail_both.powi(d as i32);
    }
    Ok(TwoTimeTable { n, target, t, q: a, q_t: s, q_tilde: 1.0 - a, q_tilde_t: f })
}

/// `{1/n, 2/n, 0.01, 0.1, 0.5, 1}`, sorted and deduplicated.
pub fn default_t_grid(n: usize) -> Vec<f64> {
    let n = n.max(1) as f64;
    let mut grid = vec![1.0 / n, 2.0 / n, 0.01, 0.1, 0.5, 1.0];
    grid.retain(|&t| t > 0.0 && t <= 1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrelationRow {
    pub t: f64,
    pub q_t: f64,
    pub q_tilde_t: f64,
    /// `q(t) t / q^2`.
    pub ratio: f64,
    /// `(q~(t)/q~^2 - 1) t / q^2`.
    pub tilde_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationRatio {
    pub n: usize,
    pub target: usize,
    pub q: f64,
    pub rows: Vec<CorrelationRow>,
    pub max_ratio: f64,
    pub max_tilde_ratio: f64,
}

pub fn correlation_ratio(profile: &TreeProfile, n: usize, target: usize, t_grid: &[f64]) -> Result<CorrelationRatio> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut q = f64::NAN;
    for &t in t_grid {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!("t grid must lie in (0, 1], got {t}")));
        }
        let tab = two_time_survival(profile, n, target, t)?;
        q = tab.q;
        let q2 = q * q;
        rows.push(CorrelationRow {
            t,
            q_t: tab.q_t,
            q_tilde_t: tab.q_tilde_t,
            ratio: tab.q_t * t / q2,
            tilde_ratio: (tab.q_tilde_t / (tab.q_tilde * tab.q_tilde) - 1.0) * t / q2,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let max_tilde_ratio = rows.iter().map(|r| r.tilde_ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(CorrelationRatio { n, target, q, rows, max_ratio, max_tilde_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute_oracle::{two_time_prob, TinyTree};
    use crate::exact::{one_arm, subtree_connect_table};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn edge_joint_examples() {
        let j = two_time_edge_joint(0.5, 0.0);
        assert_eq!(j.p11, 0.5);
        assert_eq!(j.p10, 0.0);
        let j = two_time_edge_joint(0.5, 60.0);
        assert!((j.p11 - 0.25).abs() < 1e-15);
        let j = two_time_edge_joint(0.5, LN2);
        assert!((j.p11 - 0.375).abs() < 1e-15);
        assert!((j.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binary_depth_one_against_enumeration() {
        let prof = TreeProfile::homogeneous(2, 0.5, 1).unwrap();
        let tab = two_time_survival(&prof, 0, 1, LN2).unwrap();
        // both root connections hold: 1 - 2 (1/4) + (3/8)^2
        assert!((tab.q_t - 0.640625).abs() < 1e-15);
        let tiny = TinyTree::from_profile(&prof, 1).unwrap();
        let brute = two_time_prob(&tiny, LN2, |x, y| tiny.root_reaches(x, 1) && tiny.root_reaches(y, 1)).unwrap();
        assert!((tab.q_t - brute).abs() < 1e-14);
        // the same-branch event is the smaller 2 (3/8) - (3/8)^2
        let same = two_time_prob(&tiny, LN2, |x, y| (x & y) != 0).unwrap();
        assert!((same - 0.609375).abs() < 1e-15);
        assert!((tab.q_tilde_t - (1.0 - 2.0 * tab.q + tab.q_t)).abs() < 1e-15);
    }

    #[test]
    fn limits_in_t() {
        let prof = TreeProfile::new(vec![2, 3, 1, 2, 2], vec![0.55, 0.4, 0.7, 0.6, 0.5]).unwrap();
        for n in 0..4 {
            let arm = one_arm(&prof, n, 5, 0.0).unwrap();
            let t0 = two_time_survival(&prof, n, 5, 0.0).unwrap();
            assert!((t0.q_t - arm.value).abs() < 1e-12);
            assert!((t0.q_tilde_t - (1.0 - arm.value)).abs() < 1e-12);
            let t50 = two_time_survival(&prof, n, 5, 50.0).unwrap();
            assert!((t50.q_t - arm.value * arm.value).abs() < 1e-9);
        }
    }

    #[test]
    fn path_closed_form() {
        let prof = TreeProfile::new(vec![1, 1], vec![0.6, 0.3]).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let want = two_time_edge_joint(0.6, t).p11 * two_time_edge_joint(0.3, t).p11;
            let r = correlation_ratio(&prof, 0, 2, &[t]).unwrap();
            assert!((r.rows[0].q_t - want).abs() < 1e-12);
            assert!((r.max_ratio - want * t / (0.18 * 0.18)).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_at_one_is_at_least_one() {
        let prof = TreeProfile::homogeneous(3, 0.45, 30).unwrap();
        let r = correlation_ratio(&prof, 2, 30, &[1.0]).unwrap();
        assert!(r.max_ratio >= 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let prof = TreeProfile::homogeneous(2, 0.5, 4).unwrap();
        assert!(two_time_survival(&prof, 4, 4, 0.1).is_err());
        assert!(two_time_survival(&prof, 0, 5, 0.1).is_err());
        assert!(two_time_survival(&prof, 0, 4, -1.0).is_err());
        assert!(correlation_ratio(&prof, 0, 4, &[]).is_err());
        assert!(correlation_ratio(&prof, 0, 4, &[2.0]).is_err());
    }

    #[test]
    fn default_grid_shape() {
        assert_eq!(default_t_grid(100), vec![0.01, 0.02, 0.1, 0.5, 1.0]);
        assert_eq!(default_t_grid(1000).len(), 6);
    }

    proptest::proptest! {
        #[test]
        fn two_time_sandwich(
            ds in proptest::collection::vec(1u32..5, 1..12),
            ps in proptest::collection::vec(0.15f64..0.85, 12),
            t in 0.0f64..3.0,
        ) {
            let prof = TreeProfile::new(ds.clone(), ps[..ds.len()].to_vec()).unwrap();
            let depth = ds.len();
            let a = subtree_connect_table(&prof, depth).unwrap();
            let tab = two_time_survival(&prof, 0, depth, t).unwrap();
            proptest::prop_assert!((tab.q - a[0]).abs() < 1e-14);
            proptest::prop_assert!(tab.q_t <= tab.q + 1e-12);
            proptest::prop_assert!(tab.q_t >= tab.q * tab.q - 1e-12);
            proptest::prop_assert!(tab.q_tilde_t >= tab.q_tilde * tab.q_tilde - 1e-12);
            let later = two_time_survival(&prof, 0, depth, t + 0.5).unwrap();
            proptest::prop_assert!(later.q_t <= tab.q_t + 1e-12);
        }
    }
}
