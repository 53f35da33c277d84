//! Sample summaries and least-squares fits.

use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub replicas: usize,
}

impl Estimate {
    /// Summarize a sample in its given order (the order fixes the rounding).
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, replicas: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, replicas: n }
    }

    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }

    /// z-score of `self - other` for independent estimates.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        let s = (self.se * self.se + other.se * other.se).sqrt();
        if s == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                (self.mean - other.mean).signum() * f64::INFINITY
            }
        } else {
            (self.mean - other.mean) / s
        }
    }
}

/// Ordinary least squares `y ~ X b`, solved through the normal equations
/// with partial pivoting. Returns coefficients and the RMS residual.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = rows.first()?.len();
    if rows.len() < k || rows.len() != y.len() {
        return None;
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let ss: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let pred: f64 = row.iter().zip(&coef).map(|(x, b)| x * b).sum();
            (yi - pred) * (yi - pred)
        })
        .sum();
    Some((coef, (ss / y.len() as f64).sqrt()))
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, x.ln()]).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    if ly.iter().any(|v| !v.is_finite()) {
        return None;
    }
    least_squares(&rows, &ly).map(|(c, _)| c[1])
}

/// Weighted least-squares slope of estimates against `xs`, weights `1 / se^2`.
/// Returns the slope and its standard error.
pub fn weighted_slope(xs: &[f64], ys: &[Estimate]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|e| !(e.se > 0.0)) {
        return None;
    }
    let w: Vec<f64> = ys.iter().map(|e| 1.0 / (e.se * e.se)).collect();
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&w).map(|(y, w)| y.mean * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&w).map(|(x, w)| w * (x - xbar) * (x - xbar)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * (x - xbar) * (y.mean - ybar)).sum();
    Some((sxy / sxx, 1.0 / sxx.sqrt()))
}

/// Standard normal upper quantile for the one-sided 95% level.
pub const Z_95_ONE_SIDED: f64 = 1.6448536269514722;
