use rand::seq::SliceRandom;

use super::fixtures::permutation_operator;
use super::WedderburnDecomposition;
use crate::linalg::{haar_unitary, CMat, DenseOperator, MatrixMeanEstimator, Rng64, C64};

/// A source of random unitaries from a compact group.
pub trait GroupSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut Rng64) -> CMat;
}

/// Haar measure on U(d).
#[derive(Clone, Copy, Debug)]
pub struct FullUnitarySampler {
    pub d: usize,
}

impl GroupSampler for FullUnitarySampler {
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        haar_unitary(self.d, rng)
    }
}

/// Uniform random diagonal phases.
#[derive(Clone, Copy, Debug)]
pub struct DiagonalTorusSampler {
    pub d: usize,
}

impl GroupSampler for DiagonalTorusSampler {
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        use rand::Rng;
        let phases: Vec<C64> = (0..self.d)
            .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        CMat::from_diagonal(&crate::linalg::CVec::from_vec(phases))
    }
}

/// `U^{⊗n}` with `U` Haar on U(d).
#[derive(Clone, Copy, Debug)]
pub struct TensorPowerSampler {
    pub d: usize,
    pub n: usize,
}

impl GroupSampler for TensorPowerSampler {
    fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        let u = haar_unitary(self.d, rng);
        let mut out = u.clone();
        for _ in 1..self.n {
            out = out.kronecker(&u);
        }
        out
    }
}

/// Uniformly random permutation of the `n` tensor factors of `(C^d)^{⊗n}`.
#[derive(Clone, Copy, Debug)]
pub struct PermutationSampler {
    pub d: usize,
    pub n: usize,
}

impl GroupSampler for PermutationSampler {
    fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        let mut perm: Vec<usize> = (0..self.n).collect();
        perm.shuffle(rng);
        permutation_operator(self.d, &perm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraSide {
    /// Unitaries of `A`.
    Algebra,
    /// Unitaries of `A'`.
    Commutant,
}

/// Haar measure on the unitary group of `A` or of `A'`, read off a decomposition.
#[derive(Clone, Debug)]
pub struct AlgebraUnitarySampler {
    pub dec: WedderburnDecomposition,
    pub side: AlgebraSide,
}

impl GroupSampler for AlgebraUnitarySampler {
    fn dim(&self) -> usize {
        self.dec.dim()
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        self.dec.random_unitary(self.side == AlgebraSide::Commutant, rng)
    }
}

/// Monte-Carlo estimate of `∫ g M g† dg`, with its batch-means estimator.
pub fn haar_twirl_estimate(
    sampler: &dyn GroupSampler,
    m: &DenseOperator,
    n_samples: usize,
    rng: &mut Rng64,
) -> (DenseOperator, MatrixMeanEstimator) {
    assert!(n_samples >= 1, "need at least one sample");
    assert_eq!(sampler.dim(), m.dim(), "sampler and operator dimensions differ");
    let mut est = MatrixMeanEstimator::new(m.dim(), 20);
    for _ in 0..n_samples {
        let g = sampler.sample(rng);
        est.push(&(&g * m.matrix() * g.adjoint()));
    }
    let mean = DenseOperator::new(m.dims().to_vec(), est.mean()).expect("dims");
    (mean, est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{decompose, Fixture};
    use crate::linalg::{RngStream, ONE};

    fn within_entrywise(mean: &CMat, target: &CMat, est: &MatrixMeanEstimator, k: f64) -> bool {
        let se = est.stderr_entrywise();
        mean.iter()
            .zip(target.iter())
            .zip(se.iter())
            .all(|((a, b), s)| (a - b).norm() <= k * s + 1e-12)
    }

    #[test]
    fn full_unitary_twirl_is_trace_times_identity() {
        let mut rng = RngStream::new(21, 0).rng();
        let m = crate::linalg::random_density_matrix(3, &mut rng);
        let (mean, est) = haar_twirl_estimate(&FullUnitarySampler { d: 3 }, &m, 4000, &mut rng);
        let target = CMat::identity(3, 3) * (m.trace() / C64::new(3.0, 0.0));
        assert!(within_entrywise(mean.matrix(), &target, &est, 4.0));
    }

    #[test]
    fn torus_kills_off_diagonal() {
        let mut rng = RngStream::new(22, 0).rng();
        let mut e01 = CMat::zeros(2, 2);
        e01[(0, 1)] = ONE;
        let m = DenseOperator::from_matrix(e01);
        let (mean, est) = haar_twirl_estimate(&DiagonalTorusSampler { d: 2 }, &m, 4000, &mut rng);
        assert!(within_entrywise(mean.matrix(), &CMat::zeros(2, 2), &est, 4.0));
    }

    #[test]
    fn tensor_power_twirl_matches_permutation_expectation() {
        let mut rng = RngStream::new(23, 0).rng();
        let dec = decompose(&Fixture::Permutation { d: 2, n: 2 }.algebra().unwrap(), &mut rng).unwrap();
        let mut e00 = CMat::zeros(4, 4);
        e00[(0, 0)] = ONE;
        let m = DenseOperator::new(vec![2, 2], e00.clone()).unwrap();
        let (mean, est) = haar_twirl_estimate(&TensorPowerSampler { d: 2, n: 2 }, &m, 10_000, &mut rng);
        assert!(within_entrywise(mean.matrix(), &dec.conditional_expectation(&e00), &est, 4.0));
    }
}
