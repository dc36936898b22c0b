//! Sampling the Haar POVM `d_{n,m} |φ⟩⟨φ|^{⊗n} dφ` over pure Gaussian `φ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{
    pure_gaussian_overlap, pure_state_from_covariance, reference_covariance, rotation_to_covariance, FermionSystem,
    Parity,
};
use crate::linalg::{haar_special_orthogonal, random_antisymmetric_unit, CVec, DenseOperator, RMat, Rng64, StateVector};

use super::dimension::rep_dimension;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    Rejection,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PovmSamplerConfig {
    pub method: SamplerMethod,
    /// Metropolis step scale; `None` means `0.3/√m`.
    pub step_size: Option<f64>,
    pub burn_in: usize,
    pub thinning: usize,
    pub max_rejects: usize,
}

impl Default for PovmSamplerConfig {
    fn default() -> Self {
        Self { method: SamplerMethod::Rejection, step_size: None, burn_in: 200, thinning: 10, max_rejects: 1_000_000 }
    }
}

impl PovmSamplerConfig {
    pub fn metropolis() -> Self {
        Self { method: SamplerMethod::Metropolis, ..Self::default() }
    }

    /// Rejection when the expected number of proposals `d_{n,m}` is at most
    /// `2000`, Metropolis otherwise.
    pub fn auto(m: usize, n: usize) -> Self {
        if rep_dimension(n, m).to_f64() <= 2000.0 {
            Self::default()
        } else {
            Self::metropolis()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("step_size must be positive, got {s}")));
            }
        }
        if self.max_rejects == 0 {
            return Err(Error::InvalidArgument("max_rejects must be positive".into()));
        }
        Ok(())
    }
}

/// The `n`-copy state being measured.
#[derive(Clone, Debug)]
pub enum PovmTarget {
    /// `ψ^{⊗n}` for a pure Gaussian `ψ` given by its covariance.
    Gaussian(RMat),
    /// `ψ^{⊗n}` for an arbitrary vector on `m` modes.
    Vector(CVec),
    /// A general operator on `(C^{2^m})^{⊗n}`.
    Dense(DenseOperator),
}

/// A measurement of `n` copies on `m` modes. With `parity = None` both
/// sectors are measured (the outcome may then be of either parity).
#[derive(Clone, Debug)]
pub struct PovmProblem {
    sys: FermionSystem,
    n: usize,
    parity: Option<Parity>,
    target: PovmTarget,
}

#[derive(Clone, Debug, Serialize)]
pub struct PovmOutcome {
    pub parity: Parity,
    pub rotation: RMat,
    pub covariance: RMat,
    /// Proposals (rejection) or chain steps (Metropolis) spent.
    pub steps: usize,
    pub acceptance: f64,
}

impl PovmOutcome {
    pub fn state(&self) -> StateVector {
        let m = self.covariance.nrows() / 2;
        pure_state_from_covariance(&FermionSystem::new(m), &self.covariance)
    }
}

impl PovmProblem {
    pub fn new(m: usize, n: usize, parity: Option<Parity>, target: PovmTarget) -> Result<Self> {
        let d = 1usize << m;
        match &target {
            PovmTarget::Gaussian(c) if c.nrows() != 2 * m => {
                return Err(Error::DimensionMismatch { expected: 2 * m, actual: c.nrows() })
            }
            PovmTarget::Vector(v) if v.len() != d => return Err(Error::DimensionMismatch { expected: d, actual: v.len() }),
            PovmTarget::Dense(op) if op.dim() != d.pow(n as u32) => {
                return Err(Error::DimensionMismatch { expected: d.pow(n as u32), actual: op.dim() })
            }
            PovmTarget::Gaussian(_) if parity.is_none() => {
                return Err(Error::InvalidArgument("a Gaussian target needs its parity".into()))
            }
            _ => {}
        }
        Ok(Self { sys: FermionSystem::new(m), n, parity, target })
    }

    pub fn modes(&self) -> usize {
        self.sys.modes()
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    /// `⟨φ^{⊗n}|ρ_n|φ^{⊗n}⟩` for `φ` with covariance `cov`.
    pub fn weight(&self, cov: &RMat) -> f64 {
        let w = match &self.target {
            PovmTarget::Gaussian(target) => pure_gaussian_overlap(cov, target).min(1.0).powi(self.n as i32),
            PovmTarget::Vector(psi) => {
                let phi = pure_state_from_covariance(&self.sys, cov);
                phi.amplitudes().dotc(psi).norm_sqr().min(1.0).powi(self.n as i32)
            }
            PovmTarget::Dense(rho) => {
                let phi = pure_state_from_covariance(&self.sys, cov).into_amplitudes();
                let mut v = phi.clone();
                for _ in 1..self.n {
                    v = v.kronecker(&phi);
                }
                (v.adjoint() * rho.matrix() * &v)[(0, 0)].re
            }
        };
        w.max(0.0)
    }

    fn pick_parity(&self, rng: &mut Rng64) -> Parity {
        self.parity.unwrap_or_else(|| if rng.random_bool(0.5) { Parity::Even } else { Parity::Odd })
    }

    fn covariance_of(&self, r: &RMat, parity: Parity) -> RMat {
        r * reference_covariance(self.modes(), parity) * r.transpose()
    }

    fn rejection(&self, cfg: &PovmSamplerConfig, rng: &mut Rng64) -> Result<PovmOutcome> {
        let n2 = 2 * self.modes();
        let mut w_max = 1.0f64;
        let mut steps = 0usize;
        loop {
            if steps >= cfg.max_rejects {
                return Err(Error::MaxRejectsExceeded { max_rejects: cfg.max_rejects });
            }
            steps += 1;
            let parity = self.pick_parity(rng);
            let r = haar_special_orthogonal(n2, rng);
            let cov = self.covariance_of(&r, parity);
            let w = self.weight(&cov);
            if w > w_max {
                log::warn!("rejection envelope violated ({w} > {w_max}); doubling and restarting");
                w_max *= 2.0;
                continue;
            }
            if rng.random::<f64>() * w_max < w {
                return Ok(PovmOutcome { parity, rotation: r, covariance: cov, steps, acceptance: 1.0 / steps as f64 });
            }
        }
    }

    fn warm_start(&self, parity: Parity, rng: &mut Rng64) -> RMat {
        if let PovmTarget::Gaussian(target) = &self.target {
            if let Some(q) = rotation_to_covariance(target, parity) {
                return q;
            }
        }
        haar_special_orthogonal(2 * self.modes(), rng)
    }

    /// Random walk `R ↦ R exp(s A)` with Metropolis acceptance; the step is
    /// adapted during burn-in only. Returns `count` samples `thinning` steps apart.
    pub fn metropolis_chain(&self, cfg: &PovmSamplerConfig, count: usize, rng: &mut Rng64) -> Result<Vec<PovmOutcome>> {
        let n2 = 2 * self.modes();
        let parity = self.pick_parity(rng);
        let mut r = self.warm_start(parity, rng);
        let mut w = self.weight(&self.covariance_of(&r, parity));
        let mut tries = 0;
        while w <= 0.0 {
            tries += 1;
            if tries > cfg.max_rejects {
                return Err(Error::MaxRejectsExceeded { max_rejects: cfg.max_rejects });
            }
            r = haar_special_orthogonal(n2, rng);
            w = self.weight(&self.covariance_of(&r, parity));
        }
        let mut step = cfg.step_size.unwrap_or(0.3 / (self.modes() as f64).sqrt());
        let (mut accepted, mut window_accepted) = (0usize, 0usize);
        let total = cfg.burn_in + 1 + count.saturating_sub(1) * cfg.thinning.max(1);
        let mut out = Vec::with_capacity(count);
        let mut next_sample = cfg.burn_in;
        for it in 0..total {
            let a = random_antisymmetric_unit(n2, rng) * step;
            let proposal = &r * a.exp();
            let wp = self.weight(&self.covariance_of(&proposal, parity));
            if rng.random::<f64>() * w < wp {
                r = proposal;
                w = wp;
                accepted += 1;
                window_accepted += 1;
            }
            if it < cfg.burn_in && (it + 1) % 25 == 0 {
                let rate = window_accepted as f64 / 25.0;
                if rate < 0.2 {
                    step *= 0.7;
                } else if rate > 0.5 {
                    step *= 1.3;
                }
                window_accepted = 0;
            }
            if it == next_sample {
                out.push(PovmOutcome {
                    parity,
                    rotation: r.clone(),
                    covariance: self.covariance_of(&r, parity),
                    steps: it + 1,
                    acceptance: accepted as f64 / (it + 1) as f64,
                });
                next_sample += cfg.thinning.max(1);
            }
        }
        Ok(out)
    }

    pub fn sample(&self, cfg: &PovmSamplerConfig, rng: &mut Rng64) -> Result<PovmOutcome> {
        cfg.validate()?;
        match cfg.method {
            SamplerMethod::Rejection => self.rejection(cfg, rng),
            SamplerMethod::Metropolis => Ok(self.metropolis_chain(cfg, 1, rng)?.remove(0)),
        }
    }
}

/// One outcome of the Haar POVM on `ρ_n`.
pub fn povm_sample(problem: &PovmProblem, cfg: &PovmSamplerConfig, rng: &mut Rng64) -> Result<PovmOutcome> {
    problem.sample(cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{random_pure_gaussian, reference_state};
    use crate::linalg::{MatrixMeanEstimator, RngStream, ScalarStats};

    #[test]
    fn flat_weight_gives_haar_outcomes() {
        // n = 1 and ρ = I/2^{m−1} on the even sector: outcomes are Haar, so the
        // mean projector is the normalized even-sector projector.
        let m = 2;
        let mut proj = DenseOperator::zeros(&[2, 2]);
        for x in [0usize, 3] {
            proj.matrix_mut()[(x, x)] = crate::linalg::C64::new(0.5, 0.0);
        }
        let problem = PovmProblem::new(m, 1, Some(Parity::Even), PovmTarget::Dense(proj.clone())).unwrap();
        let mut rng = RngStream::new(80, 0).rng();
        let mut est = MatrixMeanEstimator::new(4, 20);
        for _ in 0..4000 {
            let out = problem.sample(&PovmSamplerConfig::default(), &mut rng).unwrap();
            est.push_rank1(out.state().amplitudes());
        }
        let mean = est.mean();
        let se = est.stderr_entrywise();
        for (i, (a, b)) in mean.iter().zip(proj.matrix().iter()).enumerate() {
            assert!((a - b).norm() <= 4.0 * se[i] + 1e-12, "entry {i}");
        }
    }

    #[test]
    fn normalization_self_test() {
        let (m, n) = (2, 4);
        let d = rep_dimension(n, m).to_f64();
        let mut rng = RngStream::new(81, 0).rng();
        let sys = FermionSystem::new(m);
        let (psi, _) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
        let cov = crate::fermion::covariance_pure(m, psi.amplitudes());
        let mut stats = ScalarStats::new();
        for _ in 0..20000 {
            let r = haar_special_orthogonal(2 * m, &mut rng);
            let c = &r * reference_covariance(m, Parity::Even) * r.transpose();
            stats.push(d * pure_gaussian_overlap(&c, cov.matrix()).powi(n as i32));
        }
        assert!(stats.within(1.0, 3.0), "{} ± {}", stats.mean, stats.stderr());
    }

    #[test]
    fn mean_overlap_matches_ratio_for_both_methods() {
        let (m, n) = (2, 4);
        let target = reference_covariance(m, Parity::Even);
        let problem = PovmProblem::new(m, n, Some(Parity::Even), PovmTarget::Gaussian(target.clone())).unwrap();
        for cfg in [PovmSamplerConfig::default(), PovmSamplerConfig::metropolis()] {
            let mut stats = ScalarStats::new();
            for t in 0..1000 {
                let mut rng = RngStream::new(82, t).rng();
                let out = problem.sample(&cfg, &mut rng).unwrap();
                stats.push(pure_gaussian_overlap(&out.covariance, &target));
            }
            assert!(stats.within(5.0 / 6.0, 3.0), "{cfg:?}: {} ± {}", stats.mean, stats.stderr());
        }
    }

    #[test]
    fn vector_and_gaussian_targets_agree_in_weight() {
        let m = 3;
        let sys = FermionSystem::new(m);
        let mut rng = RngStream::new(83, 0).rng();
        let (psi, _) = random_pure_gaussian(&sys, Parity::Odd, &mut rng);
        let cov = crate::fermion::covariance_pure(m, psi.amplitudes()).matrix().clone();
        let a = PovmProblem::new(m, 3, Some(Parity::Odd), PovmTarget::Gaussian(cov)).unwrap();
        let b = PovmProblem::new(m, 3, Some(Parity::Odd), PovmTarget::Vector(psi.into_amplitudes())).unwrap();
        for _ in 0..10 {
            let r = haar_special_orthogonal(6, &mut rng);
            let c = &r * reference_covariance(m, Parity::Odd) * r.transpose();
            assert!((a.weight(&c) - b.weight(&c)).abs() < 1e-10);
        }
        let vac = reference_state(m, Parity::Even);
        let c = PovmProblem::new(m, 1, None, PovmTarget::Vector(vac.into_amplitudes())).unwrap();
        assert!((c.weight(&reference_covariance(m, Parity::Even)) - 1.0).abs() < 1e-12);
    }
}
