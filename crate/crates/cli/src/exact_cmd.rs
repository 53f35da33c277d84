use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use percodyn_core::exact::{
    bprod_check, correlation_ratio, default_t_grid, influence_table, leftmost_child_prob, lyons_check, one_arm,
    regime_sums, subtree_connect_table, survival_sweep, two_time_edge_joint, two_time_survival, DEFAULT_ONE_ARM_TOL,
};
use percodyn_core::io::Table;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Op {
    /// `k, A(k)` for the event `{root <-> T_n}` (one `--n`).
    Connect,
    /// Survival, second-moment ratio and the exactly-one quantities per level.
    Survival,
    /// `n, r(n)` with `r(n) = P(root <-> T_n) sum_{k<=n} 1/w_k`.
    Lyons,
    /// One-arm probability per level with its truncation level.
    OneArm,
    /// Two-time survival for every level and time.
    TwoTime,
    /// `q_n(t) t / q_n^2` for every level and time.
    Correlation,
    /// Leftmost-child probability `b_j` for `j` in `--n`.
    Leftmost,
    /// Leftmost-child product against its comparator.
    Bprod,
    /// Per-level influence and `u(m, n)` (one `--n`).
    Influence,
    /// Regime sums on the `--n` grid.
    Regime,
    /// Two-time joint law of one edge (needs `--p`).
    EdgeJoint,
}

#[derive(Args)]
pub struct ExactArgs {
    /// Profile JSON (not needed for `edge-joint`).
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_enum)]
    op: Op,
    /// Levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Truncation level `N` for one-arm and two-time ops; defaults to the profile depth.
    #[arg(long)]
    target: Option<usize>,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_grid: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_ONE_ARM_TOL)]
    tol: f64,
    /// Edge probability for `edge-joint`.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn single(n: &[usize]) -> Result<usize> {
    match n {
        [n] => Ok(*n),
        _ => bail!("this op takes exactly one --n"),
    }
}

fn nonempty<T>(xs: &[T], flag: &str) -> Result<()> {
    if xs.is_empty() {
        bail!("--{flag} is required for this op");
    }
    Ok(())
}

pub fn run(a: ExactArgs) -> Result<()> {
    let table = if let Op::EdgeJoint = a.op {
        let p = a.p.context("--p is required for edge-joint")?;
        nonempty(&a.t_grid, "t-grid")?;
        let mut t = Table::new("edge-joint", &["t", "p11", "p10", "p01", "p00"]);
        for &time in &a.t_grid {
            let j = two_time_edge_joint(p, time);
            t.push(vec![time.into(), j.p11.into(), j.p10.into(), j.p01.into(), j.p00.into()])?;
        }
        t
    } else {
        let path = a.profile.as_ref().context("--profile is required for this op")?;
        let profile = super::load_profile(path)?;
        let target = a.target.unwrap_or(profile.depth());
        match a.op {
            Op::Connect => {
                let n = single(&a.n)?;
                let mut t = Table::new("connect", &["k", "a"]);
                for (k, v) in subtree_connect_table(&profile, n)?.into_iter().enumerate() {
                    t.push(vec![k.into(), v.into()])?;
                }
                t
            }
            Op::Survival => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new(
                    "survival",
                    &["n", "survival", "second_moment_ratio", "lower", "upper", "mean_times_exactly_one", "inv_w_sum"],
                );
                for r in survival_sweep(&profile, &a.n)? {
                    let lo = 1.0 / r.second_moment_ratio;
                    t.push(vec![
                        r.n.into(),
                        r.survival.into(),
                        r.second_moment_ratio.into(),
                        lo.into(),
                        (2.0 * lo).into(),
                        r.mean_times_exactly_one.into(),
                        r.inv_w_sum.into(),
                    ])?;
                }
                t
            }
            Op::Lyons => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new("lyons", &["n", "ratio"]);
                for (n, r) in lyons_check(&profile, &a.n)? {
                    t.push(vec![n.into(), r.into()])?;
                }
                t
            }
            Op::OneArm => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new("one-arm", &["n", "q", "stop_level", "converged", "monotone"]);
                for &n in &a.n {
                    let arm = one_arm(&profile, n, target, a.tol)?;
                    t.push(vec![
                        n.into(),
                        arm.value.into(),
                        arm.stop_level.into(),
                        arm.converged.into(),
                        arm.monotone.into(),
                    ])?;
                }
                t
            }
            Op::TwoTime => {
                nonempty(&a.n, "n")?;
                nonempty(&a.t_grid, "t-grid")?;
                let mut t = Table::new("two-time", &["n", "target", "t", "q", "q_t", "q_tilde", "q_tilde_t"]);
                for &n in &a.n {
                    for &time in &a.t_grid {
                        let r = two_time_survival(&profile, n, target, time)?;
                        t.push(vec![
                            n.into(),
                            target.into(),
                            time.into(),
                            r.q.into(),
                            r.q_t.into(),
                            r.q_tilde.into(),
                            r.q_tilde_t.into(),
                        ])?;
                    }
                }
                t
            }
            Op::Correlation => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new("correlation", &["n", "target", "t", "q", "q_t", "ratio", "tilde_ratio"]);
                for &n in &a.n {
                    let grid = if a.t_grid.is_empty() { default_t_grid(n) } else { a.t_grid.clone() };
                    let c = correlation_ratio(&profile, n, target, &grid)?;
                    for r in &c.rows {
                        t.push(vec![
                            n.into(),
                            target.into(),
                            r.t.into(),
                            c.q.into(),
                            r.q_t.into(),
                            r.ratio.into(),
                            r.tilde_ratio.into(),
                        ])?;
                    }
                }
                t
            }
            Op::Leftmost => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new("leftmost", &["j", "b", "stop_level", "converged"]);
                for &j in &a.n {
                    let b = leftmost_child_prob(&profile, j, target)?;
                    t.push(vec![j.into(), b.b.into(), b.stop_level.into(), b.converged.into()])?;
                }
                t
            }
            Op::Bprod => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new("bprod", &["n", "product", "comparator", "ratio", "one_edge_times_mean"]);
                for r in bprod_check(&profile, &a.n, target)? {
                    t.push(vec![
                        r.n.into(),
                        r.product.into(),
                        r.comparator.into(),
                        r.ratio.into(),
                        r.one_edge_times_mean.into(),
                    ])?;
                }
                t
            }
            Op::Influence => {
                let n = single(&a.n)?;
                let inf = influence_table(&profile, n)?;
                let mut t = Table::new("influence", &["m", "influence", "u"]);
                for m in 1..=n {
                    t.push(vec![m.into(), inf.influence(m).into(), inf.u(m).into()])?;
                }
                eprintln!("E|dZ_n| = {:e}, flip intensity = {:e}", inf.boundary_mean, inf.flip_intensity);
                t
            }
            Op::Regime => {
                nonempty(&a.n, "n")?;
                let mut t = Table::new(
                    "regime",
                    &["n", "inv_w_sum", "k_over_w", "harmonic_ratio", "sibling_sum", "spread_sum", "ex_proxy"],
                );
                for r in regime_sums(&profile, &a.n)? {
                    t.push(vec![
                        r.n.into(),
                        r.inv_w_sum.into(),
                        r.k_over_w.into(),
                        r.harmonic_ratio.into(),
                        r.sibling_sum.into(),
                        r.spread_sum.into(),
                        r.ex_proxy.into(),
                    ])?;
                }
                t
            }
            Op::EdgeJoint => unreachable!(),
        }
    };
    table.write_csv(&a.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_ops() {
        assert_eq!(single(&[7]).unwrap(), 7);
        assert!(single(&[]).is_err());
        assert!(single(&[1, 2]).is_err());
    }

    #[test]
    fn required_lists() {
        assert!(nonempty::<usize>(&[], "n").unwrap_err().to_string().contains("--n"));
        assert!(nonempty(&[0.5], "t-grid").is_ok());
    }
}
