//! Counting statistics: Wilson intervals, symbol tallies and empirical CDFs.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval of `k` successes in `n` trials at quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Symbol outcomes of one domain. Every sent symbol is exactly one of
/// correct, errored or erased.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolCounts {
    pub sent: u64,
    pub correct: u64,
    pub errored: u64,
    pub erased: u64,
}

impl SymbolCounts {
    pub fn is_conserved(&self) -> bool {
        self.correct + self.errored + self.erased == self.sent
    }

    /// Symbols not recovered (errors plus erasures).
    pub fn failures(&self) -> u64 {
        self.errored + self.erased
    }

    pub fn ser(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.failures() as f64 / self.sent as f64
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        wilson(self.failures(), self.sent, Z95)
    }
}

impl std::ops::AddAssign for SymbolCounts {
    fn add_assign(&mut self, o: Self) {
        self.sent += o.sent;
        self.correct += o.correct;
        self.errored += o.errored;
        self.erased += o.erased;
    }
}

/// Value at quantile `q` of the empirical distribution (nearest rank).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Deciles 0.1 ..= 0.9 of `values`.
pub fn deciles(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    (1..10).map(|k| quantile(&v, k as f64 / 10.0)).collect()
}

/// `a` is stochastically no larger than `b` at every decile, i.e. the CDF of
/// `a` lies on or left of that of `b`.
pub fn dominates_at_deciles(a: &[f64], b: &[f64]) -> bool {
    deciles(a).iter().zip(deciles(b)).all(|(x, y)| *x <= y)
}
