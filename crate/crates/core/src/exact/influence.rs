use serde::Serialize;

use super::{check_target, guard};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::tree_model::TreeProfile;

/// Edge influences for the event `{root <-> T_n}`.
///
/// Level-`m` vectors are stored at index `m - 1`.
#[derive(Clone, Debug, Serialize)]
pub struct InfluenceTable {
    pub n: usize,
    pub survival: f64,
    /// `ln I(m)`: a single level-`m` edge is pivotal.
    pub log_influence: Vec<f64>,
    /// `ln u(m, n) = ln |T_m| + ln I(m)`.
    pub log_u: Vec<f64>,
    /// `E|dZ_n| = sum_m 2 p_m (1 - p_m) u(m, n)`.
    pub boundary_mean: f64,
    /// `2 sum_e I(e) p_e (1 - p_e)`, summed edge class by edge class.
    pub flip_intensity: f64,
}

impl InfluenceTable {
    pub fn influence(&self, m: usize) -> f64 {
        self.log_influence[m - 1].exp()
    }

    pub fn u(&self, m: usize) -> f64 {
        self.log_u[m - 1].exp()
    }

    /// `max_{m<n} p_m u(m, n) / sum_{k=m+1}^n 1/w_k`.
    pub fn tail_constant(&self, profile: &TreeProfile) -> f64 {
        let mut tail = 0.0;
        let mut worst: f64 = 0.0;
        for m in (1..self.n).rev() {
            tail += profile.inv_w(m + 1);
            worst = worst.max(profile.p(m) * self.u(m) / tail);
        }
        worst
    }
}

pub fn influence_table(profile: &TreeProfile, n: usize) -> Result<InfluenceTable> {
    check_target(profile, n)?;
    if n == 0 {
        return Err(Error::InvalidArgument("influence needs n >= 1".into()));
    }
    let a = super::subtree_connect_table(profile, n)?;
    let mut log_influence = Vec::with_capacity(n);
    let mut log_u = Vec::with_capacity(n);
    let mut boundary = KahanSum::new();
    let mut flips = KahanSum::new();
    // sum over j < m of (d_j - 1) ln(1 - p_{j+1} A(j+1)): no side branch reaches T_n
    let mut log_no_detour = 0.0;
    for m in 1..=n {
        let p = profile.p(m);
        log_no_detour += (profile.degree(m - 1) - 1) as f64 * f64::ln_1p(-p * a[m]);
        let li = guard(m, profile.log_path_prob(m - 1) + a[m].ln() + log_no_detour)?;
        let lu = guard(m, profile.log_level_size(m) + li)?;
        log_influence.push(li);
        log_u.push(lu);
        let switch = 2.0 * p * (1.0 - p);
        boundary.add(switch * lu.exp());
        let class_weight = match profile.level_size(m) {
            Some(size) => size as f64 * li.exp(),
            None => lu.exp(),
        };
        flips.add(2.0 * class_weight * p * (1.0 - p));
    }
    Ok(InfluenceTable {
        n,
        survival: a[0],
        log_influence,
        log_u,
        boundary_mean: boundary.value(),
        flip_intensity: flips.value(),
    })
}
