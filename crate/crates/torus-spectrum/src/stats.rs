//! Mergeable Monte Carlo estimators and small statistical tests.
//!
//! Sample sums are carried as Shewchuk expansions (sequences of
//! non-overlapping doubles representing their exact sum), so accumulation is
//! exact real arithmetic: merging partial estimates is genuinely associative
//! and commutative, and the result cannot depend on how work was split
//! across workers.

use serde::{Deserialize, Serialize};

/// Error-free transformation: a + b = hi + lo exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let hi = a + b;
    let a_virt = hi - b;
    let b_virt = hi - a_virt;
    let lo = (a - a_virt) + (b - b_virt);
    (hi, lo)
}

/// Exact running sum of f64 values (Shewchuk's growing expansion).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    // non-overlapping components, increasing magnitude
    parts: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let mut carry = x;
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        for &p in &self.parts {
            let (hi, lo) = two_sum(carry, p);
            if lo != 0.0 {
                out.push(lo);
            }
            carry = hi;
        }
        if carry != 0.0 {
            out.push(carry);
        }
        self.parts = out;
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.parts {
            self.add(p);
        }
    }

    /// Best f64 approximation of the exact sum.
    pub fn value(&self) -> f64 {
        self.parts.iter().sum()
    }
}

/// Mean/stderr accumulator over a stream of evaluations.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    n: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
    non_finite: u64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        if !x.is_finite() {
            self.non_finite += 1;
            return;
        }
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.non_finite += other.non_finite;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn non_finite(&self) -> u64 {
        self.non_finite
    }

    pub fn estimate(&self) -> MCEstimate {
        let n = self.n as f64;
        let mean = if self.n == 0 { f64::NAN } else { self.sum.value() / n };
        let stderr = if self.n < 2 {
            0.0
        } else {
            // unbiased sample variance, clamped against cancellation
            let var = (self.sum_sq.value() - n * mean * mean) / (n - 1.0);
            (var.max(0.0) / n).sqrt()
        };
        MCEstimate::new(mean, self.n, stderr, self.non_finite)
    }
}

/// A Monte Carlo mean with its sample count, standard error, and 95%
/// confidence interval (mean ± 1.96·stderr).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub n: u64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub non_finite: u64,
}

impl MCEstimate {
    pub fn new(mean: f64, n: u64, stderr: f64, non_finite: u64) -> Self {
        MCEstimate {
            mean,
            n,
            stderr,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            non_finite,
        }
    }

    /// |mean − reference| measured in standard errors.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference).abs() / self.stderr
        }
    }
}

/// One-sample Kolmogorov–Smirnov statistic against the uniform law on [0,1).
/// Sorts the input in place.
pub fn ks_statistic_uniform(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let lo = x - i as f64 / n;
        let hi = (i + 1) as f64 / n - x;
        d = d.max(lo).max(hi);
    }
    d
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`:
/// sqrt(ln(2/α) / 2) / sqrt(n).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
