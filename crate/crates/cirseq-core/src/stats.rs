//! Summation and confidence-interval helpers used by the Monte Carlo
//! verification harness.

use alloc::vec::Vec;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

/// One-sided 99% normal quantile.
pub const Z_99: f64 = 2.326_347_874_040_841;

/// Neumaier compensated summation; deterministic digits regardless of how
/// the inputs were produced (as long as the order is fixed).
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
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

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    let mut s = NeumaierSum::new();
    for &x in xs {
        s.add(x);
    }
    s.total()
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs) / xs.len() as f64
}

/// (mean, sample standard deviation).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let mut dev = NeumaierSum::new();
    for &x in xs {
        dev.add((x - m) * (x - m));
    }
    let var = if xs.len() > 1 {
        dev.total() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Mean estimate with a one-sided 99% band.
#[derive(Debug, Clone, Copy)]
pub struct MeanCi {
    pub estimate: f64,
    pub se: f64,
    /// `estimate + z_99 * se` (or the bootstrap 99th percentile).
    pub upper99: f64,
    /// `estimate - z_99 * se` (or the bootstrap 1st percentile).
    pub lower99: f64,
    pub n: usize,
    /// Excess kurtosis of the inputs; large values trigger the bootstrap.
    pub excess_kurtosis: f64,
    pub bootstrap_used: bool,
}

/// Above this excess kurtosis the normal-approximation CI for a mean of
/// high powers is unreliable; fall back to a seeded bootstrap.
const KURTOSIS_GUARD: f64 = 100.0;

/// One-sided 99% confidence band for `E[X]` from samples `xs`.
///
/// Uses the normal approximation with the moment-of-moments variance; for
/// heavy-tailed inputs (sample excess kurtosis beyond the guard) switches
/// to a percentile bootstrap driven by `rng`.
pub fn mean_ci99<R: Rng + ?Sized>(xs: &[f64], rng: &mut R) -> MeanCi {
    let n = xs.len();
    let (m, sd) = mean_sd(xs);
    let se = sd / (n as f64).sqrt();
    let mut kurt = 0.0;
    if sd > 0.0 {
        let mut s4 = NeumaierSum::new();
        for &x in xs {
            s4.add(((x - m) / sd).powi(4));
        }
        kurt = s4.total() / n as f64 - 3.0;
    }
    if kurt.abs() <= KURTOSIS_GUARD || n < 16 {
        return MeanCi {
            estimate: m,
            se,
            upper99: m + Z_99 * se,
            lower99: m - Z_99 * se,
            n,
            excess_kurtosis: kurt,
            bootstrap_used: false,
        };
    }
    // Percentile bootstrap, 1000 resamples.
    const B: usize = 1000;
    let mut means = Vec::with_capacity(B);
    for _ in 0..B {
        let mut s = NeumaierSum::new();
        for _ in 0..n {
            s.add(xs[rng.gen_range(0..n)]);
        }
        means.push(s.total() / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let upper = means[(0.99 * (B - 1) as f64) as usize];
    let lower = means[(0.01 * (B - 1) as f64) as usize];
    MeanCi {
        estimate: m,
        se,
        upper99: upper,
        lower99: lower,
        n,
        excess_kurtosis: kurt,
        bootstrap_used: true,
    }
}

/// Wilson one-sided 99% upper bound for a proportion.
pub fn wilson_upper99(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let spread = Z_99 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center + spread) / denom).min(1.0)
}
