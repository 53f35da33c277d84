use rayon::prelude::*;
use serde::Serialize;

use super::{check_target, guard};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::tree_model::TreeProfile;

pub const DEFAULT_ONE_ARM_TOL: f64 = 1e-6;

/// Backward pass for target level `target`, stopping at level `stop`.
///
/// Returns `A(k)` for `k in stop..=target` (index `k - stop`), where `A(k)` is
/// the probability that a level-`k` vertex is joined to level `target` inside
/// its own subtree, and `ln P(exactly one such descendant)` at level `stop`.
fn backward(profile: &TreeProfile, target: usize, stop: usize) -> Result<(Vec<f64>, f64)> {
    let len = target - stop + 1;
    let mut a = vec![0.0; len];
    a[len - 1] = 1.0;
    let mut log_one = 0.0;
    for k in (stop..target).rev() {
        let d = profile.degree(k);
        let p = profile.p(k + 1);
        let branch = p * a[k + 1 - stop];
        let ln_miss = f64::ln_1p(-branch);
        a[k - stop] = -f64::exp_m1(d as f64 * ln_miss);
        log_one += (d as f64).ln() + p.ln() + (d - 1) as f64 * ln_miss;
        guard(k, log_one)?;
    }
    Ok((a, log_one))
}

/// `A(k)` for `k in 0..=n`: probability that a level-`k` vertex reaches
/// level `n` within its subtree. `A(0) = P(root <-> T_n)`.
pub fn subtree_connect_table(profile: &TreeProfile, n: usize) -> Result<Vec<f64>> {
    check_target(profile, n)?;
    Ok(backward(profile, n, 0)?.0)
}

/// One-time quantities for target level `n`.
#[derive(Clone, Debug, Serialize)]
pub struct StaticTable {
    pub n: usize,
    /// `A(k)`, `k = 0..=n`.
    pub connect: Vec<f64>,
    /// `P(W_n > 0) = A(0)`.
    pub survival: f64,
    /// `ln P(W_n = 1)`.
    pub log_exactly_one: f64,
    pub log_w: f64,
    /// `E[W_n^2] / w_n^2`.
    pub second_moment_ratio: f64,
}

impl StaticTable {
    pub fn exactly_one(&self) -> f64 {
        self.log_exactly_one.exp()
    }

    /// `(w^2 / E[W^2], 2 w^2 / E[W^2])`, the bracket around `P(W_n > 0)`.
    pub fn survival_bracket(&self) -> (f64, f64) {
        (1.0 / self.second_moment_ratio, 2.0 / self.second_moment_ratio)
    }

    /// `E[W_n] P(W_n = 1)`.
    pub fn mean_times_exactly_one(&self) -> f64 {
        (self.log_w + self.log_exactly_one).exp()
    }

    /// `E[W^2 | W > 0] / E[W | W > 0]^2`, at most 2.
    pub fn conditional_moment_ratio(&self) -> f64 {
        self.second_moment_ratio * self.survival
    }
}

/// Prefix sums `sum_{k<n} (1 - 1/d_k) / w_k` so that
/// `E[W_n^2]/w_n^2 = 1/w_n + prefix[n]`.
///
/// Ordered pairs of distinct level-`n` vertices whose last common ancestor
/// sits at level `k` contribute `|T_k| d_k (d_k - 1) (|T_n|/|T_{k+1}|)^2`
/// pairs, each joined with probability `prod_{i<=k} p_i (prod_{k<i<=n} p_i)^2`;
/// divided by `w_n^2` this collapses to `(1 - 1/d_k) / w_k`.
fn moment_prefix(profile: &TreeProfile, n: usize) -> Result<Vec<f64>> {
    let mut pre = Vec::with_capacity(n + 1);
    let mut acc = KahanSum::new();
    pre.push(0.0);
    for k in 0..n {
        let d = profile.degree(k) as f64;
        guard(k, profile.log_w(k))?;
        if d > 1.0 {
            acc.add(((1.0 - 1.0 / d).ln() - profile.log_w(k)).exp());
        }
        pre.push(acc.value());
    }
    Ok(pre)
}

pub fn survival_and_moments(profile: &TreeProfile, n: usize) -> Result<StaticTable> {
    check_target(profile, n)?;
    let (connect, log_exactly_one) = backward(profile, n, 0)?;
    let log_w = guard(n, profile.log_w(n))?;
    let pre = moment_prefix(profile, n)?;
    Ok(StaticTable {
        n,
        survival: connect[0],
        connect,
        log_exactly_one,
        log_w,
        second_moment_ratio: profile.inv_w(n) + pre[n],
    })
}

/// Per-level summary used by the inequality sweeps.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurvivalRow {
    pub n: usize,
    pub survival: f64,
    pub second_moment_ratio: f64,
    /// `E[W_n] P(W_n = 1)`.
    pub mean_times_exactly_one: f64,
    /// `sum_{k=1}^n 1/w_k`.
    pub inv_w_sum: f64,
}

impl SurvivalRow {
    /// `P(root <-> T_n) * sum_{k<=n} 1/w_k`.
    pub fn lyons_ratio(&self) -> f64 {
        self.survival * self.inv_w_sum
    }
}

/// Survival summaries for every level in `levels` (evaluated in parallel,
/// returned in input order).
pub fn survival_sweep(profile: &TreeProfile, levels: &[usize]) -> Result<Vec<SurvivalRow>> {
    let max = levels.iter().copied().max().unwrap_or(0);
    check_target(profile, max)?;
    let pre = moment_prefix(profile, max)?;
    let mut inv_sum = Vec::with_capacity(max + 1);
    let mut acc = KahanSum::new();
    inv_sum.push(0.0);
    for k in 1..=max {
        acc.add(profile.inv_w(k));
        inv_sum.push(acc.value());
    }
    levels
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvalidArgument("survival sweep needs levels >= 1".into()));
            }
            let (a, log_one) = backward(profile, n, 0)?;
            let log_w = guard(n, profile.log_w(n))?;
            Ok(SurvivalRow {
                n,
                survival: a[0],
                second_moment_ratio: profile.inv_w(n) + pre[n],
                mean_times_exactly_one: (log_w + log_one).exp(),
                inv_w_sum: inv_sum[n],
            })
        })
        .collect()
}

/// `r(n) = P(root <-> T_n) * sum_{k<=n} 1/w_k` on the grid.
pub fn lyons_check(profile: &TreeProfile, grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    Ok(survival_sweep(profile, grid)?.into_iter().map(|r| (r.n, r.lyons_ratio())).collect())
}

/// One-arm probability of a level-`n` vertex with its truncation trail.
#[derive(Clone, Debug, Serialize)]
pub struct OneArm {
    pub level: usize,
    /// `P(level-n vertex reaches level stop_level within its subtree)`.
    pub value: f64,
    pub stop_level: usize,
    /// `|q(N) - q(N_prev)| <= tol * q(N)` at the returned `N`.
    pub converged: bool,
    /// Values along the trail never increased.
    pub monotone: bool,
    /// `(N, q(N))` for `N = n + 1, n + 2, n + 4, ...` up to the stop.
    pub trail: Vec<(usize, f64)>,
}

/// One-arm probability of a level-`n` vertex, truncated no deeper than
/// `max_target`. Targets double their distance from `n` until two
/// consecutive values agree to relative `tol`.
pub fn one_arm(profile: &TreeProfile, n: usize, max_target: usize, tol: f64) -> Result<OneArm> {
    check_target(profile, max_target)?;
    if n >= max_target {
        return Err(Error::InvalidArgument(format!("one-arm needs n < N (got n = {n}, N = {max_target})")));
    }
    let mut trail = Vec::new();
    let mut span = 1usize;
    let mut converged = false;
    loop {
        let target = (n + span).min(max_target);
        let (a, _) = backward(profile, target, n)?;
        let q = a[0];
        if let Some(&(_, prev)) = trail.last() {
            let prev: f64 = prev;
            if (q - prev).abs() <= tol * q {
                converged = true;
            }
        }
        trail.push((target, q));
        if converged || target == max_target {
            break;
        }
        span *= 2;
    }
    let monotone = trail.windows(2).all(|w| w[1].1 <= w[0].1);
    let &(stop_level, value) = trail.last().expect("at least one target");
    Ok(OneArm { level: n, value, stop_level, converged, monotone, trail })
}

/// Probability `b_j` that a level-`j` vertex percolates through its leftmost child.
#[derive(Clone, Debug, Serialize)]
pub struct LeftmostChild {
    pub j: usize,
    pub b: f64,
    pub converged: bool,
    pub stop_level: usize,
}

pub fn leftmost_child_prob(profile: &TreeProfile, j: usize, max_target: usize) -> Result<LeftmostChild> {
    if j + 1 >= max_target {
        return Err(Error::InvalidArgument(format!("need j + 1 < N (j = {j}, N = {max_target})")));
    }
    let arm = one_arm(profile, j + 1, max_target, DEFAULT_ONE_ARM_TOL)?;
    Ok(LeftmostChild { j, b: profile.p(j + 1) * arm.value, converged: arm.converged, stop_level: arm.stop_level })
}

/// Leftmost-child product against its comparator at level `n`, with every
/// `b_i` truncated at the common level `N`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BProdRow {
    pub n: usize,
    /// `prod_{i<n} (1 - b_i)^(d_i - 1)`.
    pub product: f64,
    /// `(sum_{m=n}^{N} 1/w_m)^2`.
    pub comparator: f64,
    pub ratio: f64,
    /// `P(U_n = 1) E[U_n]`, `U_n` the number of level-`n` edges carrying percolation.
    pub one_edge_times_mean: f64,
}

pub fn bprod_check(profile: &TreeProfile, levels: &[usize], max_target: usize) -> Result<Vec<BProdRow>> {
    check_target(profile, max_target)?;
    let (a, _) = backward(profile, max_target, 0)?;
    let b = |i: usize| profile.p(i + 1) * a[i + 1];
    let mut tail = vec![0.0; max_target + 2];
    for m in (1..=max_target).rev() {
        tail[m] = tail[m + 1] + profile.inv_w(m);
    }
    levels
        .iter()
        .map(|&n| {
            if n == 0 || n >= max_target {
                return Err(Error::InvalidArgument(format!("need 0 < n < N (n = {n}, N = {max_target})")));
            }
            let log_prod: f64 = (0..n).map(|i| (profile.degree(i) - 1) as f64 * f64::ln_1p(-b(i))).sum();
            let product = guard(n, log_prod)?.exp();
            let comparator = tail[n] * tail[n];
            let bn = b(n - 1);
            let d = profile.degree(n - 1) as f64;
            let log_mean_u = bn.ln() + profile.log_w(n - 1) + d.ln();
            let log_p_one = profile.log_level_size(n) + profile.log_path_prob(n - 1) + bn.ln() + log_prod;
            Ok(BProdRow {
                n,
                product,
                comparator,
                ratio: product / comparator,
                one_edge_times_mean: guard(n, log_mean_u + log_p_one)?.exp(),
            })
        })
        .collect()
}
