//! Series behind the component-count and flip-time dichotomies.
//!
//! Infinite tails `sum_{k>=m} 1/w_k` are cut at the profile depth `D`, so the
//! grid should stay well below `D` (a factor 10 or more) for the tails to be
//! representative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::stats::{least_squares, log_log_slope};
use crate::tree_model::TreeProfile;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegimeRow {
    pub n: usize,
    /// `sum_{k=1}^n 1/w_k`.
    pub inv_w_sum: f64,
    /// `sum_{k=1}^n k/w_k`.
    pub k_over_w: f64,
    /// `sum_{m<=n} 1/m` over `ex_proxy`.
    pub harmonic_ratio: f64,
    /// `sum_{j=0}^n (sum_{m>j} w_j/w_m)^-2`.
    pub sibling_sum: f64,
    /// `sum_{k=0}^n ((k+1) w_k (sum_{j>=k} 1/w_j)^2)^-1`.
    pub spread_sum: f64,
    /// `sum_{m=1}^n sum_{k>=m} 1/w_k`, proportional to the expected flip count.
    pub ex_proxy: f64,
}

pub fn regime_sums(profile: &TreeProfile, grid: &[usize]) -> Result<Vec<RegimeRow>> {
    let depth = profile.depth();
    if let Some(&bad) = grid.iter().find(|&&n| n == 0 || n >= depth) {
        return Err(Error::InvalidArgument(format!("regime grid entry {bad} must lie in [1, {})", depth)));
    }
    let max = grid.iter().copied().max().unwrap_or(0);

    let mut tail = vec![0.0; depth + 2];
    let mut acc = KahanSum::new();
    for k in (0..=depth).rev() {
        acc.add(profile.inv_w(k));
        tail[k] = acc.value();
    }

    let mut rows_at = vec![None; max + 1];
    for &n in grid {
        rows_at[n] = Some(());
    }
    let mut out = std::collections::BTreeMap::new();
    let (mut inv, mut kw, mut harm, mut ex) = (KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new());
    let (mut sib, mut spread) = (KahanSum::new(), KahanSum::new());
    for k in 0..=max {
        let lw = profile.log_w(k);
        sib.add((-2.0 * lw).exp() / (tail[k + 1] * tail[k + 1]));
        spread.add((-lw).exp() / ((k + 1) as f64 * tail[k] * tail[k]));
        if k >= 1 {
            let iw = profile.inv_w(k);
            inv.add(iw);
            kw.add(k as f64 * iw);
            harm.add(1.0 / k as f64);
            ex.add(tail[k]);
        }
        if rows_at[k].is_some() {
            out.insert(
                k,
                RegimeRow {
                    n: k,
                    inv_w_sum: inv.value(),
                    k_over_w: kw.value(),
                    harmonic_ratio: harm.value() / ex.value(),
                    sibling_sum: sib.value(),
                    spread_sum: spread.value(),
                    ex_proxy: ex.value(),
                },
            );
        }
    }
    Ok(grid.iter().map(|n| out[n]).collect())
}

/// Convergence verdict for a positive series from the decay of its terms,
/// `term_k ~ k^-decay` fitted on the grid range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converges { decay: f64 },
    Diverges { decay: f64 },
    Borderline { decay: f64 },
}

impl SeriesVerdict {
    const MARGIN: f64 = 0.1;

    fn from_decay(decay: f64) -> Self {
        if decay > 1.0 + Self::MARGIN {
            Self::Converges { decay }
        } else if decay < 1.0 - Self::MARGIN {
            Self::Diverges { decay }
        } else {
            Self::Borderline { decay }
        }
    }

    pub fn converges(&self) -> bool {
        matches!(self, Self::Converges { .. })
    }

    pub fn decay(&self) -> f64 {
        match *self {
            Self::Converges { decay } | Self::Diverges { decay } | Self::Borderline { decay } => decay,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum GrowthLaw {
    Bounded { spread: f64 },
    Logarithmic { coef: f64 },
    Power { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeClass {
    /// `sum 1/w_k` does not converge: no percolation, neither dichotomy applies.
    NoPercolation,
    /// `sum k/w_k < inf`: finitely many components of the percolation time set.
    FiniteComponents,
    /// Every hypothesis for many flip times holds.
    ManyFlipTimes,
    /// Neither set of hypotheses is met.
    Gap,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeReport {
    pub rows: Vec<RegimeRow>,
    pub percolation: SeriesVerdict,
    pub k_over_w: SeriesVerdict,
    /// Relative increment of `sum k/w_k` between `n_max/2` and `n_max`.
    pub k_over_w_increment: f64,
    /// Slope of `ln harmonic_ratio` against `ln ln n`.
    pub harmonic_drift: f64,
    pub harmonic_bounded: bool,
    pub sibling: SeriesVerdict,
    pub spread: SeriesVerdict,
    pub ex_growth: GrowthLaw,
    pub class: RegimeClass,
}

const FIT_POINTS: usize = 64;
const DRIFT_LIMIT: f64 = 0.5;
const BOUNDED_SPREAD: f64 = 1.25;

fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut ks: Vec<usize> =
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    ks.dedup();
    ks
}

fn verdict(ks: &[usize], term: impl Fn(usize) -> f64) -> SeriesVerdict {
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = ks.iter().map(|&k| term(k)).collect();
    SeriesVerdict::from_decay(-log_log_slope(&xs, &ys).unwrap_or(f64::NAN))
}

fn growth_law(rows: &[RegimeRow]) -> GrowthLaw {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ex_proxy).collect();
    let spread =
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < BOUNDED_SPREAD {
        return GrowthLaw::Bounded { spread };
    }
    let lx: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, x.ln()]).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let power = least_squares(&lx, &ly);
    let log_fit = least_squares(&lx, &ys);
    match (power, log_fit) {
        (Some((pc, prms)), Some((lc, _))) => {
            let log_rms = {
                let ss: f64 = xs
                    .iter()
                    .zip(&ly)
                    .map(|(x, y)| {
                        let pred = lc[0] + lc[1] * x.ln();
                        if pred > 0.0 {
                            (y - pred.ln()).powi(2)
                        } else {
                            f64::INFINITY
                        }
                    })
                    .sum();
                (ss / xs.len() as f64).sqrt()
            };
            if log_rms < prms {
                GrowthLaw::Logarithmic { coef: lc[1] }
            } else {
                GrowthLaw::Power { exponent: pc[1] }
            }
        }
        (Some((pc, _)), None) => GrowthLaw::Power { exponent: pc[1] },
        _ => GrowthLaw::Bounded { spread },
    }
}

/// Regime sums on `grid` plus verdicts for each series.
///
/// Needs at least three grid points with `min(grid) >= 2`.
pub fn regime_report(profile: &TreeProfile, grid: &[usize]) -> Result<RegimeReport> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() < 3 || grid[0] < 2 {
        return Err(Error::InvalidArgument("regime report needs >= 3 grid levels, all >= 2".into()));
    }
    let rows = regime_sums(profile, &grid)?;
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    let ks = log_spaced(lo, hi, FIT_POINTS);

    let mut tail = vec![0.0; profile.depth() + 2];
    for k in (0..=profile.depth()).rev() {
        tail[k] = tail[k + 1] + profile.inv_w(k);
    }
    let percolation = verdict(&ks, |k| profile.inv_w(k));
    let k_over_w = verdict(&ks, |k| k as f64 * profile.inv_w(k));
    let sibling = verdict(&ks, |k| (-2.0 * profile.log_w(k)).exp() / (tail[k + 1] * tail[k + 1]));
    let spread = verdict(&ks, |k| profile.inv_w(k) / ((k + 1) as f64 * tail[k] * tail[k]));

    let half = regime_sums(profile, &[(hi / 2).max(1), hi])?;
    let k_over_w_increment = (half[1].k_over_w - half[0].k_over_w) / half[1].k_over_w;

    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.harmonic_ratio).collect();
    let harmonic_drift = log_log_slope(&lx, &ly).unwrap_or(f64::NAN);
    let harmonic_bounded = harmonic_drift < DRIFT_LIMIT;

    let ex_growth = growth_law(&rows);
    let class = if !percolation.converges() {
        RegimeClass::NoPercolation
    } else if k_over_w.converges() {
        RegimeClass::FiniteComponents
    } else if harmonic_bounded && sibling.converges() && spread.converges() {
        RegimeClass::ManyFlipTimes
    } else {
        RegimeClass::Gap
    };
    Ok(RegimeReport {
        rows,
        percolation,
        k_over_w,
        k_over_w_increment,
        harmonic_drift,
        harmonic_bounded,
        sibling,
        spread,
        ex_growth,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_model::{synthesize_profile, TargetFn};

    fn power(theta: f64, depth: usize) -> TreeProfile {
        synthesize_profile(&TargetFn::power(theta), depth, (0.3, 0.7), 64).unwrap().profile
    }

    const GRID: [usize; 5] = [100, 300, 1000, 3000, 10_000];

    #[test]
    fn sums_by_hand() {
        let prof = TreeProfile::new(vec![2, 2, 2], vec![0.6, 0.5, 0.5]).unwrap();
        let w = [1.0, 1.2, 1.2, 1.2];
        let tail = |k: usize| (k..=3).map(|j| 1.0 / w[j]).sum::<f64>();
        let r = regime_sums(&prof, &[2]).unwrap()[0];
        assert!((r.inv_w_sum - 2.0 / 1.2).abs() < 1e-14);
        assert!((r.k_over_w - 3.0 / 1.2).abs() < 1e-14);
        assert!((r.ex_proxy - (tail(1) + tail(2))).abs() < 1e-14);
        assert!((r.harmonic_ratio - 1.5 / r.ex_proxy).abs() < 1e-14);
        let sib: f64 = (0..=2).map(|j| (w[j] * tail(j + 1)).powi(-2)).sum();
        assert!((r.sibling_sum - sib).abs() < 1e-13);
        let spr: f64 = (0..=2).map(|k| 1.0 / ((k + 1) as f64 * w[k] * tail(k).powi(2))).sum();
        assert!((r.spread_sum - spr).abs() < 1e-13);
    }

    #[test]
    fn rejects_grid_at_depth() {
        let prof = TreeProfile::homogeneous(2, 0.5, 10).unwrap();
        assert!(regime_sums(&prof, &[10]).is_err());
        assert!(regime_report(&prof, &[2, 3]).is_err());
    }

    #[test]
    fn theta_three_has_finite_components() {
        let rep = regime_report(&power(3.0, 200_000), &GRID).unwrap();
        assert_eq!(rep.class, RegimeClass::FiniteComponents);
        assert!(rep.k_over_w_increment < 1e-4, "{}", rep.k_over_w_increment);
        assert!(matches!(rep.ex_growth, GrowthLaw::Bounded { .. }), "{:?}", rep.ex_growth);
    }

    #[test]
    fn theta_three_halves_has_many_flips() {
        let rep = regime_report(&power(1.5, 1_000_000), &GRID).unwrap();
        assert_eq!(rep.class, RegimeClass::ManyFlipTimes, "{rep:?}");
        match rep.ex_growth {
            GrowthLaw::Power { exponent } => assert!((exponent - 0.5).abs() < 0.1, "{exponent}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn theta_two_is_the_gap() {
        let rep = regime_report(&power(2.0, 1_000_000), &GRID).unwrap();
        assert_eq!(rep.class, RegimeClass::Gap, "{rep:?}");
        assert!(matches!(rep.ex_growth, GrowthLaw::Logarithmic { .. }), "{:?}", rep.ex_growth);
        for r in &rep.rows {
            let ratio = r.ex_proxy / (r.n as f64).ln();
            assert!((0.5..=2.0).contains(&ratio), "n = {}: {ratio}", r.n);
        }
    }

    #[test]
    fn critical_binary_does_not_percolate() {
        let prof = TreeProfile::homogeneous(2, 0.5, 20_000).unwrap();
        let rep = regime_report(&prof, &[100, 1000, 10_000]).unwrap();
        assert_eq!(rep.class, RegimeClass::NoPercolation);
    }
}
