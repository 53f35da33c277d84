//! Closed-form level recursions on spherically symmetric trees.
//!
//! Every quantity here is a pure function of a [`TreeProfile`] and a few
//! scalar parameters. "Percolation to infinity" is always replaced by
//! connection to a deep truncation level `N`; results that depend on that
//! choice carry a convergence flag.

mod influence;
mod regime;
mod statics;
mod two_time;

pub use influence::{influence_table, InfluenceTable};
pub use regime::{regime_report, regime_sums, GrowthLaw, RegimeClass, RegimeReport, RegimeRow, SeriesVerdict};
pub use statics::{
    bprod_check, leftmost_child_prob, lyons_check, one_arm, subtree_connect_table, survival_and_moments,
    survival_sweep, BProdRow, LeftmostChild, OneArm, StaticTable, SurvivalRow, DEFAULT_ONE_ARM_TOL,
};
pub use two_time::{
    correlation_ratio, default_t_grid, two_time_edge_joint, two_time_survival, CorrelationRatio, CorrelationRow,
    EdgeJoint, TwoTimeTable,
};

use crate::error::{Error, Result};
use crate::tree_model::TreeProfile;

/// Any `|log|` beyond this is treated as a malformed profile.
pub const LOG_OVERFLOW_GUARD: f64 = 1e6;

fn check_target(profile: &TreeProfile, n: usize) -> Result<()> {
    if n > profile.depth() {
        Err(Error::LevelOutOfRange { level: n, depth: profile.depth() })
    } else {
        Ok(())
    }
}

fn guard(level: usize, x: f64) -> Result<f64> {
    if x.abs() > LOG_OVERFLOW_GUARD || x.is_nan() {
        Err(Error::Overflow { level, magnitude: x.abs() })
    } else {
        Ok(x)
    }
}
