//! Exact calculator and event-driven simulator for dynamical percolation on
//! spherically symmetric trees, plus the two-block bridge gadgets used to
//! build lattice examples.
//!
//! * [`tree_model`]: profiles `(d_j, p_n)` and growth-law synthesis.
//! * [`exact`]: level recursions for survival, moments, one-arm,
//!   two-time and influence quantities.
//! * [`brute_oracle`]: exhaustive enumeration on tiny trees.
//! * [`dyn_sim`]: event-driven refresh dynamics with replica aggregation.
//! * [`gadget`]: bridge gadget graphs and their Monte Carlo estimators.
//! * [`experiments`]: named recipes, reports and the acceptance checks.

pub mod brute_oracle;
pub mod dyn_sim;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod gadget;
pub mod io;
pub mod numeric;
pub mod rng;
pub mod stats;
pub mod tree_model;

pub use error::{Error, Result};
pub use stats::Estimate;
pub use tree_model::{build_profile, synthesize_profile, ProfileKind, ProfileSpec, TargetFn, TreeProfile};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
