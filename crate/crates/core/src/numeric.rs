//! Small numerically careful helpers shared by the exact engine and the oracle.

/// `1 - (1 - x)^d` without cancellation for tiny `x`.
#[inline]
pub fn one_minus_pow_complement(x: f64, d: u32) -> f64 {
    -f64::exp_m1(d as f64 * f64::ln_1p(-x))
}

/// `(1 - x)^d` evaluated through `log1p`.
#[inline]
pub fn pow_complement(x: f64, d: u32) -> f64 {
    f64::exp(d as f64 * f64::ln_1p(-x))
}

/// `ln((1 - x)^d)`.
#[inline]
pub fn ln_pow_complement(x: f64, d: u32) -> f64 {
    d as f64 * f64::ln_1p(-x)
}

/// Stable `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + f64::ln_1p(f64::exp(lo - hi))
}

/// Kahan-Babuska (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Binomial coefficient as `f64` (exact for the small degrees used here).
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
