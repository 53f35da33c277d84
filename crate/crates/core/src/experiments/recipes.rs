use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Assertion, NamedProfile};
use crate::brute_oracle::{expectation, pivotal_prob, static_prob, two_time_prob, TinyTree, MAX_TWO_TIME_EDGES};
use crate::dyn_sim::{monte_carlo, SimConfig};
use crate::error::{Error, Result};
use crate::exact::{
    correlation_ratio, default_t_grid, influence_table, one_arm, regime_report, survival_and_moments, survival_sweep,
    two_time_survival, RegimeClass,
};
use crate::gadget::{build_gadget, connect_curve, persistence_estimate, select_multiplicity};
use crate::io::{format_float, Cell, Table};
use crate::rng::replica_rng;
use crate::stats::{log_log_slope, weighted_slope, Estimate, Z_95_ONE_SIDED};
use crate::tree_model::{ProfileSpec, TreeProfile};

pub(super) type Outcome = (Vec<Assertion>, Vec<Table>);

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn non_empty<T>(what: &str, xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        Err(invalid(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn row<const N: usize>(cells: [Cell; N]) -> Vec<Cell> {
    cells.into()
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count < 2 || hi <= lo {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut ks: Vec<usize> =
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    ks.dedup();
    ks
}

/// `|est - exact| <= k se`.
fn within_se(name: String, criterion: Option<u8>, est: &Estimate, exact: f64, k: f64) -> Assertion {
    Assertion::new(
        name,
        criterion,
        est.mean,
        format!("within {k} se of {}", format_float(exact)),
        k * est.se,
        est.within(exact, k),
    )
}

// ---------------------------------------------------------------- oracle-suite

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    pub trees: usize,
    pub max_depth: usize,
    pub max_edges: usize,
    pub p_range: (f64, f64),
    pub tolerance: f64,
    pub times: Vec<f64>,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            trees: 20,
            max_depth: 3,
            max_edges: 8,
            p_range: (0.2, 0.8),
            tolerance: 1e-12,
            times: vec![0.0, std::f64::consts::LN_2, 50.0],
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("times", &self.times)?;
        if self.trees == 0 || self.max_depth == 0 {
            return Err(invalid("oracle-suite needs trees >= 1 and max_depth >= 1"));
        }
        if self.max_edges < self.max_depth || self.max_edges > MAX_TWO_TIME_EDGES {
            return Err(invalid(format!("max_edges must lie in [max_depth, {MAX_TWO_TIME_EDGES}]")));
        }
        let (lo, hi) = self.p_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidBounds { lo, hi });
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("times must be finite and non-negative"));
        }
        Ok(())
    }
}

fn random_tiny_profile(p: &OracleParams, seed: u64, index: u64) -> Result<TreeProfile> {
    let mut rng = replica_rng(seed, index);
    loop {
        let depth = rng.random_range(1..=p.max_depth);
        let degrees: Vec<u32> = (0..depth).map(|_| rng.random_range(1..=3)).collect();
        let mut size = 1usize;
        let mut edges = 0usize;
        for &d in &degrees {
            size *= d as usize;
            edges += size;
        }
        if edges > p.max_edges {
            continue;
        }
        let probs = (0..depth).map(|_| rng.random_range(p.p_range.0..=p.p_range.1)).collect();
        return TreeProfile::new(degrees, probs);
    }
}

pub(super) fn oracle_suite(p: &OracleParams, seed: u64) -> Result<Outcome> {
    let mut trees = Table::new("trees", &["tree", "depth", "edges", "degrees", "edge_probs"]);
    let mut cmp = Table::new("comparisons", &["tree", "quantity", "exact", "brute", "abs_delta"]);
    let kinds = ["survival", "exactly-one", "second-moment-ratio", "influence", "two-time"];
    let mut worst = [0.0f64; 5];

    for i in 0..p.trees {
        let prof = random_tiny_profile(p, seed, i as u64)?;
        let n = prof.depth();
        let tiny = TinyTree::from_profile(&prof, n)?;
        let join = |xs: Vec<String>| xs.join(";");
        trees.push(row([
            i.into(),
            n.into(),
            tiny.edge_count().into(),
            join(prof.degrees().iter().map(|d| d.to_string()).collect()).into(),
            join(prof.edge_probs().iter().map(|&x| format_float(x)).collect()).into(),
        ]))?;

        let mut record = |kind: usize, label: String, exact: f64, brute: f64| -> Result<()> {
            let delta = (exact - brute).abs();
            worst[kind] = worst[kind].max(if delta.is_nan() { f64::INFINITY } else { delta });
            cmp.push(row([i.into(), label.into(), exact.into(), brute.into(), delta.into()]))
        };

        let st = survival_and_moments(&prof, n)?;
        let reaches = |c: u32| tiny.root_reaches(c, n);
        record(0, "survival".into(), st.survival, static_prob(&tiny, reaches)?)?;
        record(1, "exactly-one".into(), st.exactly_one(), static_prob(&tiny, |c| tiny.connected_count(c, n) == 1)?)?;
        let second = expectation(&tiny, |c| (tiny.connected_count(c, n) as f64).powi(2))?;
        record(2, "second-moment-ratio".into(), st.second_moment_ratio, second / (prof.w(n) * prof.w(n)))?;

        let inf = influence_table(&prof, n)?;
        for e in 0..tiny.edge_count() {
            let brute = pivotal_prob(&tiny, e, reaches)?;
            record(3, format!("influence-edge-{e}"), inf.influence(tiny.edge_level(e)), brute)?;
        }
        for &t in &p.times {
            let exact = two_time_survival(&prof, 0, n, t)?.q_t;
            let brute = two_time_prob(&tiny, t, |a, b| reaches(a) && reaches(b))?;
            record(4, format!("two-time-{}", format_float(t)), exact, brute)?;
        }
    }

    let assertions = kinds
        .iter()
        .zip(worst)
        .map(|(k, w)| Assertion::at_most(format!("max-delta-{k}"), Some(1), w, p.tolerance, 0.0))
        .collect();
    Ok((assertions, vec![trees, cmp]))
}

// ----------------------------------------------------------------- lyons-ratio

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyonsParams {
    pub profiles: Vec<NamedProfile>,
    /// Every level `1..=max_n` is checked.
    pub max_n: usize,
    pub tolerance: f64,
    /// The ratio spread is taken over `[ratio_from, max_n]`.
    pub ratio_from: usize,
    pub ratio_bound: f64,
    /// Levels per profile in the sampled CSV.
    pub sample_points: usize,
}

impl Default for LyonsParams {
    fn default() -> Self {
        let depth = 10_000;
        Self {
            profiles: vec![
                NamedProfile::log_power(1.5, depth),
                NamedProfile::log_power(2.0, depth),
                NamedProfile::log_power(3.0, depth),
                NamedProfile::power(1.5, depth),
                NamedProfile::power(3.0, depth),
                NamedProfile::homogeneous(2, 0.5, depth),
                NamedProfile::homogeneous(2, 0.6, depth),
            ],
            max_n: depth,
            tolerance: 1e-10,
            ratio_from: 10,
            ratio_bound: 20.0,
            sample_points: 40,
        }
    }
}

impl LyonsParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("profiles", &self.profiles)?;
        if self.max_n == 0 || self.ratio_from == 0 || self.ratio_from > self.max_n {
            return Err(invalid("lyons-ratio needs 1 <= ratio_from <= max_n"));
        }
        Ok(())
    }
}

pub(super) fn lyons_ratio(p: &LyonsParams) -> Result<Outcome> {
    let mut summary = Table::new(
        "summary",
        &[
            "profile",
            "max_rel_deviation",
            "min_lower_slack",
            "min_upper_slack",
            "min_exactly_one_slack",
            "ratio_min",
            "ratio_max",
            "ratio_spread",
        ],
    );
    let mut sample = Table::new(
        "sweep",
        &["profile", "n", "survival", "second_moment_ratio", "lower", "upper", "mean_times_exactly_one", "lyons_ratio"],
    );
    let mut assertions = Vec::new();
    let levels: Vec<usize> = (1..=p.max_n).collect();
    let sampled = log_spaced(1, p.max_n, p.sample_points);

    for np in &p.profiles {
        let built = np.build()?;
        let prof = &built.profile;
        if prof.depth() < p.max_n {
            return Err(invalid(format!("profile `{}` has depth {} < max_n {}", np.name, prof.depth(), p.max_n)));
        }
        let rows = survival_sweep(prof, &levels)?;
        let (mut lower, mut upper, mut single) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut ratios = Vec::new();
        for r in &rows {
            let lo = 1.0 / r.second_moment_ratio;
            lower = lower.min(r.survival - lo);
            upper = upper.min(2.0 * lo - r.survival);
            single = single.min(r.survival * r.survival - r.mean_times_exactly_one);
            if r.n >= p.ratio_from {
                ratios.push(r.lyons_ratio());
            }
        }
        for &n in &sampled {
            let r = &rows[n - 1];
            let lo = 1.0 / r.second_moment_ratio;
            sample.push(row([
                np.name.as_str().into(),
                n.into(),
                r.survival.into(),
                r.second_moment_ratio.into(),
                lo.into(),
                (2.0 * lo).into(),
                r.mean_times_exactly_one.into(),
                r.lyons_ratio().into(),
            ]))?;
        }
        let (rmin, rmax) =
            (ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(0.0, f64::max));
        summary.push(row([
            np.name.as_str().into(),
            built.max_rel_deviation.unwrap_or(0.0).into(),
            lower.into(),
            upper.into(),
            single.into(),
            rmin.into(),
            rmax.into(),
            (rmax / rmin).into(),
        ]))?;
        assertions.push(Assertion::at_least(
            format!("second-moment-lower:{}", np.name),
            Some(2),
            lower,
            0.0,
            p.tolerance,
        ));
        assertions.push(Assertion::at_least(
            format!("second-moment-upper:{}", np.name),
            Some(2),
            upper,
            0.0,
            p.tolerance,
        ));
        assertions.push(Assertion::at_least(format!("exactly-one:{}", np.name), Some(3), single, 0.0, p.tolerance));
        assertions.push(Assertion::at_most(
            format!("ratio-spread:{}", np.name),
            Some(4),
            rmax / rmin,
            p.ratio_bound,
            0.0,
        ));
    }
    Ok((assertions, vec![summary, sample]))
}

// ------------------------------------------------------------- one-arm-scaling

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneArmParams {
    pub profile: NamedProfile,
    pub levels: Vec<usize>,
    pub tolerance: f64,
    /// Deepest truncation level; the profile depth when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_target: Option<usize>,
    pub factor_bound: f64,
}

impl Default for OneArmParams {
    fn default() -> Self {
        Self {
            profile: NamedProfile::log_power(2.0, 1_000_000),
            levels: vec![100, 1_000, 10_000],
            tolerance: 1e-6,
            max_target: None,
            factor_bound: 10.0,
        }
    }
}

impl OneArmParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("levels", &self.levels)?;
        if self.levels.iter().any(|&n| n < 2) {
            return Err(invalid("one-arm levels must be >= 2"));
        }
        Ok(())
    }
}

pub(super) fn one_arm_scaling(p: &OneArmParams) -> Result<Outcome> {
    let prof = p.profile.build()?.profile;
    let max_target = p.max_target.unwrap_or(prof.depth());
    let mut levels =
        Table::new("levels", &["n", "q", "scaled", "stop_level", "converged", "monotone", "last_rel_change"]);
    let mut trail = Table::new("trail", &["n", "target", "q"]);
    let mut assertions = Vec::new();
    let mut scaled = Vec::new();
    for &n in &p.levels {
        let arm = one_arm(&prof, n, max_target, p.tolerance)?;
        let s = arm.value * n as f64 * (n as f64).ln();
        scaled.push(s);
        let change = match arm.trail.as_slice() {
            [.., (_, a), (_, b)] => (b - a).abs() / b,
            _ => f64::INFINITY,
        };
        levels.push(row([
            n.into(),
            arm.value.into(),
            s.into(),
            arm.stop_level.into(),
            arm.converged.into(),
            arm.monotone.into(),
            change.into(),
        ]))?;
        for &(target, q) in &arm.trail {
            trail.push(row([n.into(), target.into(), q.into()]))?;
        }
        assertions.push(Assertion::at_most(format!("certificate:n={n}"), Some(5), change, p.tolerance, 0.0));
    }
    assertions.insert(0, Assertion::at_most("scaled-spread", Some(5), spread(&scaled), p.factor_bound, 0.0));
    Ok((assertions, vec![levels, trail]))
}

// ----------------------------------------------------------- correlation-bound

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelationParams {
    pub profile: NamedProfile,
    pub levels: Vec<usize>,
    /// Times in `(0, 1]`; a per-level default grid when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Truncation level `N`; the profile depth when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    pub factor_bound: f64,
    pub constant_bound: f64,
}

impl Default for CorrelationParams {
    fn default() -> Self {
        Self {
            profile: NamedProfile::log_power(2.0, 1_000_000),
            levels: vec![100, 1_000],
            t_grid: None,
            target: None,
            factor_bound: 3.0,
            constant_bound: 1e3,
        }
    }
}

impl CorrelationParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("levels", &self.levels)?;
        if let Some(g) = &self.t_grid {
            non_empty("t_grid", g)?;
        }
        Ok(())
    }
}

pub(super) fn correlation_bound(p: &CorrelationParams) -> Result<Outcome> {
    let prof = p.profile.build()?.profile;
    let target = p.target.unwrap_or(prof.depth());
    let mut ratios = Table::new("ratios", &["n", "t", "q", "q_t", "q_tilde_t", "ratio", "tilde_ratio"]);
    let mut constants = Table::new("constants", &["n", "target", "q", "c_emp", "max_tilde_ratio"]);
    let mut assertions = Vec::new();
    let mut cs = Vec::new();
    for &n in &p.levels {
        let grid = p.t_grid.clone().unwrap_or_else(|| default_t_grid(n));
        let c = correlation_ratio(&prof, n, target, &grid)?;
        for r in &c.rows {
            ratios.push(row([
                n.into(),
                r.t.into(),
                c.q.into(),
                r.q_t.into(),
                r.q_tilde_t.into(),
                r.ratio.into(),
                r.tilde_ratio.into(),
            ]))?;
        }
        constants.push(row([n.into(), target.into(), c.q.into(), c.max_ratio.into(), c.max_tilde_ratio.into()]))?;
        assertions.push(Assertion::holds(format!("finite:n={n}"), Some(6), c.max_ratio.is_finite(), "finite"));
        assertions.push(Assertion::at_most(format!("constant:n={n}"), None, c.max_ratio, p.constant_bound, 0.0));
        cs.push(c.max_ratio);
    }
    assertions.insert(0, Assertion::at_most("constant-spread", Some(6), spread(&cs), p.factor_bound, 0.0));
    Ok((assertions, vec![constants, ratios]))
}

// --------------------------------------------------------------- flip-identity

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlipParams {
    /// Each profile is simulated down to its full depth.
    pub profiles: Vec<NamedProfile>,
    pub horizon: f64,
    pub replicas: usize,
    pub z_bound: f64,
}

impl Default for FlipParams {
    fn default() -> Self {
        Self {
            profiles: vec![
                NamedProfile::new("single-edge", ProfileSpec::homogeneous(1, 0.5, 1)),
                NamedProfile::homogeneous(2, 0.5, 12),
                NamedProfile::homogeneous(2, 0.6, 10),
            ],
            horizon: 1.0,
            replicas: 10_000,
            z_bound: 3.0,
        }
    }
}

impl FlipParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("profiles", &self.profiles)?;
        if self.replicas < 2 || !(self.horizon > 0.0) {
            return Err(invalid("flip-identity needs replicas >= 2 and a positive horizon"));
        }
        Ok(())
    }
}

pub(super) fn flip_identity(p: &FlipParams, seed: u64) -> Result<Outcome> {
    let mut cmp = Table::new("comparison", &["profile", "depth", "edges", "metric", "mc_mean", "mc_se", "exact", "z"]);
    let mut counters = Table::new(
        "counters",
        &["profile", "opening_flips", "closing_flips", "switches", "components", "full_interval"],
    );
    let mut assertions = Vec::new();
    for np in &p.profiles {
        let prof = np.build()?.profile;
        let depth = prof.depth();
        let config = SimConfig { horizon: p.horizon, ..SimConfig::new(depth, p.replicas, seed) };
        let mc = monte_carlo(&prof, &config)?;
        let exact = influence_table(&prof, depth)?;
        let metrics = [
            ("flips", 7, &mc.flips, p.horizon * exact.flip_intensity),
            ("boundary", 7, &mc.boundary, p.horizon * exact.boundary_mean),
            ("occupied-fraction", 8, &mc.occupied_fraction, exact.survival),
        ];
        for (metric, crit, est, value) in metrics {
            let z = (est.mean - value) / est.se;
            cmp.push(row([
                np.name.as_str().into(),
                depth.into(),
                mc.edge_count.into(),
                metric.into(),
                est.mean.into(),
                est.se.into(),
                value.into(),
                z.into(),
            ]))?;
            assertions.push(within_se(format!("{metric}:{}", np.name), Some(crit), est, value, p.z_bound));
        }
        if depth == 1 && prof.degree(0) == 1 {
            let q = prof.p(1);
            let closed = 2.0 * q * (1.0 - q) * p.horizon;
            let gap = (p.horizon * exact.flip_intensity - closed).abs();
            assertions.push(Assertion::at_most(format!("closed-form:{}", np.name), Some(7), gap, 0.0, 1e-15));
            assertions.push(within_se(format!("closed-form-mc:{}", np.name), Some(7), &mc.flips, closed, p.z_bound));
        }
        counters.push(row([
            np.name.as_str().into(),
            mc.opening_flips.mean.into(),
            mc.closing_flips.mean.into(),
            mc.switches.mean.into(),
            mc.components.mean.into(),
            mc.full_interval.mean.into(),
        ]))?;
    }
    Ok((assertions, vec![cmp, counters]))
}

// -------------------------------------------------------- component-transition

/// Which way the mean component count is expected to move with depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCase {
    /// Shallow profile for simulation, built once at the largest depth.
    pub sim: NamedProfile,
    /// Deep profile with the same growth law for the exact series.
    pub exact: NamedProfile,
    pub trend: Trend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentParams {
    pub cases: Vec<TransitionCase>,
    pub depths: Vec<usize>,
    pub replicas: usize,
    pub horizon: f64,
    /// Levels for the exact `E|dZ_n|` series.
    pub exact_grid: Vec<usize>,
    pub exponent: f64,
    pub exponent_tol: f64,
    /// Relative increment of `E|dZ_n|` over the last two grid levels.
    pub cauchy_tol: f64,
    pub trend_z: f64,
}

fn theta_case(theta: f64, sim_range: (f64, f64), trend: Trend) -> TransitionCase {
    let mut sim = NamedProfile::power(theta, 14);
    sim.spec.p_bounds = sim_range;
    TransitionCase { sim, exact: NamedProfile::power(theta, 10_000), trend }
}

impl Default for ComponentParams {
    fn default() -> Self {
        Self {
            cases: vec![theta_case(1.5, (0.6, 0.7), Trend::Increasing), theta_case(3.0, (0.8, 0.95), Trend::Bounded)],
            depths: vec![8, 10, 12, 14],
            replicas: 4_000,
            horizon: 1.0,
            exact_grid: vec![100, 200, 500, 1_000, 2_000, 5_000, 10_000],
            exponent: 0.5,
            exponent_tol: 0.15,
            cauchy_tol: 1e-4,
            trend_z: Z_95_ONE_SIDED,
        }
    }
}

impl ComponentParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("cases", &self.cases)?;
        non_empty("depths", &self.depths)?;
        non_empty("exact_grid", &self.exact_grid)?;
        if self.depths.len() < 2 || self.exact_grid.len() < 2 {
            return Err(invalid("component-transition needs at least two depths and two exact levels"));
        }
        if self.replicas < 2 || !(self.horizon > 0.0) {
            return Err(invalid("component-transition needs replicas >= 2 and a positive horizon"));
        }
        Ok(())
    }
}

pub(super) fn component_transition(p: &ComponentParams, seed: u64) -> Result<Outcome> {
    let mut exact_t = Table::new("exact", &["profile", "n", "boundary_mean"]);
    let mut sim_t =
        Table::new("simulation", &["profile", "depth", "edges", "components_mean", "components_se", "exact_mean"]);
    let mut trend_t = Table::new("trend", &["profile", "slope", "slope_se", "z"]);
    let mut assertions = Vec::new();
    let max_depth = *p.depths.iter().max().unwrap();

    for case in &p.cases {
        let deep = case.exact.build()?.profile;
        let mut series = Vec::new();
        for &n in &p.exact_grid {
            let b = influence_table(&deep, n)?.boundary_mean;
            exact_t.push(row([case.exact.name.as_str().into(), n.into(), b.into()]))?;
            series.push(b);
        }
        match case.trend {
            Trend::Bounded => {
                let k = series.len();
                let increment = (series[k - 1] - series[k - 2]).abs() / series[k - 1];
                assertions.push(Assertion::at_most(
                    format!("boundary-cauchy:{}", case.exact.name),
                    Some(9),
                    increment,
                    p.cauchy_tol,
                    0.0,
                ));
                let grid: Vec<usize> = p.exact_grid.iter().copied().filter(|&n| n >= 2 && n < deep.depth()).collect();
                let converges = grid.len() >= 3 && regime_report(&deep, &grid)?.k_over_w.converges();
                assertions.push(Assertion::holds(
                    format!("k-over-w-converges:{}", case.exact.name),
                    Some(9),
                    converges,
                    "converges",
                ));
            }
            Trend::Increasing => {
                let xs: Vec<f64> = p.exact_grid.iter().map(|&n| n as f64).collect();
                let slope = log_log_slope(&xs, &series).unwrap_or(f64::NAN);
                assertions.push(Assertion::within(
                    format!("boundary-exponent:{}", case.exact.name),
                    Some(9),
                    slope,
                    p.exponent - p.exponent_tol,
                    p.exponent + p.exponent_tol,
                ));
            }
        }

        let shallow = case.sim.build()?.profile;
        if shallow.depth() < max_depth {
            return Err(invalid(format!("profile `{}` is shallower than depth {max_depth}", case.sim.name)));
        }
        let mut ests = Vec::new();
        for &d in &p.depths {
            let config = SimConfig { horizon: p.horizon, ..SimConfig::new(d, p.replicas, seed) };
            let mc = monte_carlo(&shallow, &config)?;
            let inf = influence_table(&shallow, d)?;
            let exact = inf.survival + 0.5 * p.horizon * inf.boundary_mean;
            sim_t.push(row([
                case.sim.name.as_str().into(),
                d.into(),
                mc.edge_count.into(),
                mc.components.mean.into(),
                mc.components.se.into(),
                exact.into(),
            ]))?;
            ests.push(mc.components);
        }
        let xs: Vec<f64> = p.depths.iter().map(|&d| d as f64).collect();
        let (slope, se) = weighted_slope(&xs, &ests).unwrap_or((f64::NAN, f64::NAN));
        let z = slope / se;
        trend_t.push(row([case.sim.name.as_str().into(), slope.into(), se.into(), z.into()]))?;
        let name = format!("component-trend:{}", case.sim.name);
        assertions.push(match case.trend {
            Trend::Increasing => Assertion::new(name, Some(9), z, format!("> {}", p.trend_z), 0.0, z > p.trend_z),
            Trend::Bounded => Assertion::at_most(name, Some(9), z, p.trend_z, 0.0),
        });
    }
    Ok((assertions, vec![exact_t, sim_t, trend_t]))
}

// ------------------------------------------------------------- regime-classify

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeCase {
    #[serde(flatten)]
    pub profile: NamedProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<RegimeClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeParams {
    pub cases: Vec<RegimeCase>,
    pub grid: Vec<usize>,
    /// Profile whose `EX_proxy(n) / ln n` is bounded on `ex_range`.
    pub ex_profile: String,
    pub ex_range: (usize, usize),
    pub ex_bounds: (f64, f64),
}

impl Default for RegimeParams {
    fn default() -> Self {
        let depth = 1_000_000;
        let case = |profile, expected| RegimeCase { profile, expected };
        Self {
            cases: vec![
                case(NamedProfile::power(1.5, depth), Some(RegimeClass::ManyFlipTimes)),
                case(NamedProfile::power(2.0, depth), Some(RegimeClass::Gap)),
                case(NamedProfile::power(3.0, depth), Some(RegimeClass::FiniteComponents)),
                case(NamedProfile::log_power(1.5, depth), None),
                case(NamedProfile::log_power(2.0, depth), None),
                case(NamedProfile::log_power(3.0, depth), None),
                case(NamedProfile::homogeneous(2, 0.5, depth), Some(RegimeClass::NoPercolation)),
            ],
            grid: vec![100, 200, 500, 1_000, 2_000, 5_000, 10_000],
            ex_profile: "theta-2".into(),
            ex_range: (100, 10_000),
            ex_bounds: (0.5, 2.0),
        }
    }
}

impl RegimeParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("cases", &self.cases)?;
        if self.grid.len() < 3 {
            return Err(invalid("regime grid needs at least three levels"));
        }
        if !self.cases.iter().any(|c| c.profile.name == self.ex_profile) {
            return Err(invalid(format!("ex_profile `{}` is not among the cases", self.ex_profile)));
        }
        Ok(())
    }
}

fn verdict_text(v: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string(v)?)
}

pub(super) fn regime_classify(p: &RegimeParams) -> Result<Outcome> {
    let mut rows_t = Table::new(
        "rows",
        &[
            "profile",
            "n",
            "inv_w_sum",
            "k_over_w",
            "harmonic_ratio",
            "sibling_sum",
            "spread_sum",
            "ex_proxy",
            "ex_over_log",
        ],
    );
    let mut verdicts = Table::new(
        "verdicts",
        &[
            "profile",
            "percolation",
            "k_over_w",
            "k_over_w_increment",
            "harmonic_drift",
            "sibling",
            "spread",
            "ex_growth",
            "class",
        ],
    );
    let mut assertions = Vec::new();
    for case in &p.cases {
        let prof = case.profile.build()?.profile;
        let rep = regime_report(&prof, &p.grid)?;
        let name = case.profile.name.as_str();
        for r in &rep.rows {
            let ratio = r.ex_proxy / (r.n as f64).ln();
            rows_t.push(row([
                name.into(),
                r.n.into(),
                r.inv_w_sum.into(),
                r.k_over_w.into(),
                r.harmonic_ratio.into(),
                r.sibling_sum.into(),
                r.spread_sum.into(),
                r.ex_proxy.into(),
                ratio.into(),
            ]))?;
        }
        verdicts.push(row([
            name.into(),
            verdict_text(&rep.percolation)?.into(),
            verdict_text(&rep.k_over_w)?.into(),
            rep.k_over_w_increment.into(),
            rep.harmonic_drift.into(),
            verdict_text(&rep.sibling)?.into(),
            verdict_text(&rep.spread)?.into(),
            verdict_text(&rep.ex_growth)?.into(),
            verdict_text(&rep.class)?.into(),
        ]))?;
        if let Some(expected) = case.expected {
            let what = format!("class {}", verdict_text(&expected)?);
            assertions.push(Assertion::holds(format!("class:{name}"), None, rep.class == expected, what));
        }
        if name == p.ex_profile {
            let (lo, hi) = p.ex_range;
            let ratios: Vec<f64> =
                rep.rows.iter().filter(|r| r.n >= lo && r.n <= hi).map(|r| r.ex_proxy / (r.n as f64).ln()).collect();
            if ratios.is_empty() {
                return Err(invalid("no grid level falls inside ex_range"));
            }
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assertions.push(Assertion::at_least(format!("ex-over-log-min:{name}"), Some(10), min, p.ex_bounds.0, 0.0));
            assertions.push(Assertion::at_most(format!("ex-over-log-max:{name}"), Some(10), max, p.ex_bounds.1, 0.0));
        }
    }
    Ok((assertions, vec![verdicts, rows_t]))
}

// ---------------------------------------------------------------- gadget-suite

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GadgetParams {
    pub js: Vec<u32>,
    /// Shared block radius; must be at least `9 * 2^max(j)`.
    pub radius: u32,
    /// Fixed multiplicity; selected from the block one-arm estimate when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<u32>,
    pub select_threshold: f64,
    pub select_max_m: u32,
    pub select_replicas: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub epsilon: f64,
    pub replicas: usize,
    pub connect_floor: f64,
    pub trend_z: f64,
}

impl Default for GadgetParams {
    fn default() -> Self {
        Self {
            js: vec![1, 2, 3],
            radius: 72,
            multiplicity: None,
            select_threshold: 0.95,
            select_max_m: 8,
            select_replicas: 1_000,
            p_high: 0.5,
            p_low: 0.45,
            epsilon: 0.5,
            replicas: 1_000,
            connect_floor: 0.5,
            trend_z: 3.0,
        }
    }
}

impl GadgetParams {
    pub fn validate(&self) -> Result<()> {
        non_empty("js", &self.js)?;
        if self.replicas < 2 {
            return Err(invalid("gadget-suite needs replicas >= 2"));
        }
        Ok(())
    }
}

pub(super) fn gadget_suite(p: &GadgetParams, seed: u64) -> Result<Outcome> {
    let mut mult_t = Table::new("multiplicity", &["m", "one_arm_mean", "one_arm_se"]);
    let m = match p.multiplicity {
        Some(m) => m,
        None => {
            let choice =
                select_multiplicity(p.radius, p.p_high, p.select_threshold, p.select_max_m, p.select_replicas, seed)?;
            for (i, e) in choice.one_arm.iter().enumerate() {
                mult_t.push(row([(i + 1).into(), e.mean.into(), e.se.into()]))?;
            }
            choice.multiplicity
        }
    };
    let mut est_t = Table::new(
        "estimates",
        &[
            "j",
            "m",
            "radius",
            "bridges",
            "edges",
            "connect_high",
            "connect_high_se",
            "connect_low",
            "connect_low_se",
            "persistence",
            "persistence_se",
        ],
    );
    let mut assertions = Vec::new();
    let mut low = Vec::new();
    let mut persist = Vec::new();
    for &j in &p.js {
        let g = build_gadget(j, m, p.radius)?;
        let curve = connect_curve(&g.network, &[p.p_high, p.p_low], p.replicas, seed)?;
        let per = persistence_estimate(&g.network, p.p_high, p.epsilon, p.replicas, seed)?;
        est_t.push(row([
            j.into(),
            m.into(),
            p.radius.into(),
            g.bridge_count.into(),
            g.network.edge_count().into(),
            curve[0].mean.into(),
            curve[0].se.into(),
            curve[1].mean.into(),
            curve[1].se.into(),
            per.mean.into(),
            per.se.into(),
        ]))?;
        assertions.push(Assertion::at_least(
            format!("connect-high:j={j}"),
            Some(11),
            curve[0].mean,
            p.connect_floor,
            0.0,
        ));
        let cap = curve[0].mean + 3.0 * curve[0].se;
        assertions.push(Assertion::at_most(format!("persistence-below-connect:j={j}"), None, per.mean, cap, 0.0));
        low.push(curve[1]);
        persist.push(per);
    }
    let mut trend_t = Table::new("trends", &["metric", "j_from", "j_to", "difference", "se", "z"]);
    for (metric, ests) in [("connect-low", &low), ("persistence", &persist)] {
        for k in 1..p.js.len() {
            let (a, b) = (&ests[k - 1], &ests[k]);
            let z = a.z_against(b);
            let se = (a.se * a.se + b.se * b.se).sqrt();
            let (j0, j1) = (p.js[k - 1], p.js[k]);
            trend_t.push(row([metric.into(), j0.into(), j1.into(), (a.mean - b.mean).into(), se.into(), z.into()]))?;
            assertions.push(Assertion::new(
                format!("{metric}-decreasing:j={j0}->{j1}"),
                Some(11),
                z,
                format!("> {}", p.trend_z),
                0.0,
                z > p.trend_z,
            ));
        }
    }
    Ok((assertions, vec![mult_t, est_t, trend_t]))
}
