use serde::{Deserialize, Serialize};

use super::{functions::trace_distance, CMat, CVec, RMat, C64};

/// Running mean and variance of a scalar sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl ScalarStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new();
        for x in xs {
            s.push(x);
        }
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// `|mean − target| ≤ k·stderr` (with a floor for exactly-deterministic samples).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr() + 1e-12
    }
}

/// Batched Monte-Carlo mean of matrix-valued samples. Samples are dealt
/// round-robin into batches; batch-to-batch spread gives the standard errors.
#[derive(Clone, Debug)]
pub struct MatrixMeanEstimator {
    sums: Vec<CMat>,
    counts: Vec<u64>,
    next: usize,
}

impl MatrixMeanEstimator {
    pub fn new(dim: usize, batches: usize) -> Self {
        assert!(batches >= 2, "need at least two batches");
        Self { sums: vec![CMat::zeros(dim, dim); batches], counts: vec![0; batches], next: 0 }
    }

    fn slot(&mut self) -> usize {
        let b = self.next;
        self.next = (self.next + 1) % self.sums.len();
        self.counts[b] += 1;
        b
    }

    pub fn push(&mut self, x: &CMat) {
        let b = self.slot();
        self.sums[b] += x;
    }

    /// Pushes `|v><v|`.
    pub fn push_rank1(&mut self, v: &CVec) {
        let b = self.slot();
        self.sums[b].gerc(C64::new(1.0, 0.0), v, v, C64::new(1.0, 0.0));
    }

    pub fn count(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn batch_means(&self) -> Vec<CMat> {
        self.sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / C64::new(c as f64, 0.0))
            .collect()
    }

    pub fn mean(&self) -> CMat {
        let total = self.count().max(1) as f64;
        let mut acc = CMat::zeros(self.sums[0].nrows(), self.sums[0].ncols());
        for s in &self.sums {
            acc += s;
        }
        acc / C64::new(total, 0.0)
    }

    /// Entrywise standard error (modulus of the complex deviation).
    pub fn stderr_entrywise(&self) -> RMat {
        let means = self.batch_means();
        let mean = self.mean();
        let b = means.len() as f64;
        let mut var = RMat::zeros(mean.nrows(), mean.ncols());
        for m in &means {
            for (v, (x, y)) in var.iter_mut().zip(m.iter().zip(mean.iter())) {
                *v += (x - y).norm_sqr();
            }
        }
        var.map(|v| (v / (b * (b - 1.0))).sqrt())
    }

    /// Standard error of the mean in Frobenius norm.
    pub fn stderr_fro(&self) -> f64 {
        let means = self.batch_means();
        let mean = self.mean();
        let b = means.len() as f64;
        let ss: f64 = means.iter().map(|m| (m - &mean).norm_squared()).sum();
        (ss / (b * (b - 1.0))).sqrt()
    }

    /// Standard error of the mean in trace distance.
    pub fn stderr_trace(&self) -> f64 {
        let means = self.batch_means();
        let mean = self.mean();
        let b = means.len() as f64;
        let ss: f64 = means.iter().map(|m| trace_distance(m, &mean).powi(2)).sum();
        (ss / (b * (b - 1.0))).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_stats_matches_direct_formula() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let s = ScalarStats::from_samples(xs);
        assert!((s.mean - 3.5).abs() < 1e-15);
        assert!((s.variance() - 7.0).abs() < 1e-12);
        assert!((s.stderr() - (7.0f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let mut est = MatrixMeanEstimator::new(2, 4);
        for _ in 0..10 {
            est.push(&CMat::identity(2, 2));
        }
        assert!(est.stderr_fro() < 1e-15);
        assert!((est.mean() - CMat::identity(2, 2)).norm() < 1e-15);
    }
}
