use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dimension::{dimension_ratio, rep_dimension};
use super::povm::{PovmProblem, PovmSamplerConfig, PovmTarget, SamplerMethod};
use crate::error::{Error, Result};
use crate::fermion::{
    covariance_pure, fermi_purify_channel, gaussianity_defect, pure_gaussian_overlap, pure_state_from_covariance,
    reference_covariance, signed_standard_purification, DoubledSystem, FermionChannel, FermionSystem, Parity,
};
use crate::linalg::{
    fidelity, haar_special_orthogonal, random_antisymmetric_unit, tensor_power, DenseOperator, RMat, Rng64,
    RngStream, ScalarStats, StateVector, C64,
};

/// Sector weight above which a state is treated as having definite parity.
pub const PARITY_THRESHOLD: f64 = 1.0 - 1e-8;

/// Parity of `ψ`, if definite.
pub fn detect_parity(psi: &StateVector) -> Option<Parity> {
    let even: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(x, _)| x.count_ones() % 2 == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let total = psi.norm().powi(2);
    if even >= PARITY_THRESHOLD * total {
        Some(Parity::Even)
    } else if total - even >= PARITY_THRESHOLD * total {
        Some(Parity::Odd)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Estimate {
    Pure(Vec<[f64; 2]>),
    Mixed(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, Serialize)]
pub struct TomographyResult {
    /// Covariance of the pure Gaussian outcome `ψ̂`.
    pub outcome_covariance: RMat,
    pub estimate: Estimate,
    /// `|⟨ψ|ψ̂⟩|²` (pure) or `F(σ, σ̂)²` (mixed).
    pub score: f64,
    /// For mixed tomography, `|⟨ψ|ψ̂⟩|²` against the purification that was measured.
    pub purified_overlap: Option<f64>,
    pub n_used: usize,
    pub sampler_steps: usize,
}

fn pure_estimate(psi: &StateVector) -> Estimate {
    Estimate::Pure(psi.amplitudes().iter().map(|z| [z.re, z.im]).collect())
}

fn mixed_estimate(rho: &DenseOperator) -> Estimate {
    let m = rho.matrix();
    Estimate::Mixed((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
}

/// Measures `ψ^{⊗n}` with the Haar POVM of its parity sector.
pub fn pure_tomography(psi: &StateVector, n: usize, cfg: &PovmSamplerConfig, rng: &mut Rng64) -> Result<TomographyResult> {
    let m = psi.dims().len();
    let parity = detect_parity(psi)
        .ok_or_else(|| Error::NonGaussianInput("input has no definite parity".into()))?;
    let cov = covariance_pure(m, psi.amplitudes());
    if cov.purity_residual() > 1e-6 {
        return Err(Error::NonGaussianInput(format!("covariance purity residual {}", cov.purity_residual())));
    }
    let problem = PovmProblem::new(m, n, Some(parity), PovmTarget::Gaussian(cov.matrix().clone()))?;
    let out = problem.sample(cfg, rng)?;
    let score = pure_gaussian_overlap(&out.covariance, cov.matrix()).min(1.0);
    Ok(TomographyResult {
        estimate: pure_estimate(&out.state()),
        outcome_covariance: out.covariance,
        score,
        purified_overlap: None,
        n_used: n,
        sampler_steps: out.steps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedRoute {
    /// Dense channel when `m·n` fits its budget, sampled otherwise.
    Auto,
    /// Apply the purification channel to `σ^{⊗n}` densely and measure the output.
    Dense,
    /// Draw a twirled purification `(I ⊗ U_R)ψ_σ` and measure its `n` copies.
    Sampled,
}

/// Mixed-state tomography: purify `σ^{⊗n}`, measure with the Haar POVM on
/// the even sector of `2m` modes, return the `m`-mode marginal of the outcome.
#[derive(Clone, Debug)]
pub struct MixedTomography {
    m: usize,
    n: usize,
    doubled: DoubledSystem,
    channel: Option<FermionChannel>,
}

impl MixedTomography {
    pub fn new(m: usize, n: usize, route: MixedRoute, rng: &mut Rng64) -> Result<Self> {
        let dense = match route {
            MixedRoute::Dense => true,
            MixedRoute::Sampled => false,
            MixedRoute::Auto => m * n <= crate::fermion::FERMION_BUDGET,
        };
        let channel = if dense { Some(fermi_purify_channel(m, n, rng)?) } else { None };
        Ok(Self { m, n, doubled: DoubledSystem::new(m), channel })
    }

    pub fn is_dense(&self) -> bool {
        self.channel.is_some()
    }

    pub fn run(&self, sigma: &DenseOperator, cfg: &PovmSamplerConfig, rng: &mut Rng64) -> Result<TomographyResult> {
        let (m, n) = (self.m, self.n);
        let sys = self.doubled.base();
        if sigma.dim() != sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), actual: sigma.dim() });
        }
        let defect = gaussianity_defect(sys, sigma);
        if defect > 1e-6 {
            return Err(Error::NonGaussianInput(format!("distance to the Gaussian state with the same covariance is {defect}")));
        }
        let psi_sigma = signed_standard_purification(sigma, &self.doubled)?;
        let cov_sigma = covariance_pure(2 * m, psi_sigma.amplitudes()).matrix().clone();
        let (out, measured_cov) = match &self.channel {
            Some(ch) => {
                let rho_n = tensor_power(sigma, n);
                let out = ch.apply_interleaved(&rho_n)?;
                let weight = even_sector_weight(&out, 2 * m, n);
                if weight < 1.0 - 1e-8 {
                    return Err(Error::NonGaussianInput(format!("purified state has even-sector weight {weight}")));
                }
                let problem = PovmProblem::new(2 * m, n, Some(Parity::Even), PovmTarget::Dense(out))?;
                (problem.sample(cfg, rng)?, cov_sigma)
            }
            None => {
                let r = haar_special_orthogonal(2 * m, rng);
                let mut rot = RMat::identity(4 * m, 4 * m);
                rot.view_mut((2 * m, 2 * m), (2 * m, 2 * m)).copy_from(&r);
                let cov = &rot * cov_sigma * rot.transpose();
                let problem = PovmProblem::new(2 * m, n, Some(Parity::Even), PovmTarget::Gaussian(cov.clone()))?;
                (problem.sample(cfg, rng)?, cov)
            }
        };
        let psi_hat = pure_state_from_covariance(self.doubled.tilde(), &out.covariance);
        let sigma_hat = psi_hat.reduced(&(0..m).collect::<Vec<_>>())?;
        let score = fidelity(sigma.matrix(), sigma_hat.matrix()).min(1.0);
        let purified = pure_gaussian_overlap(&out.covariance, &measured_cov).min(1.0);
        Ok(TomographyResult {
            estimate: mixed_estimate(&sigma_hat),
            outcome_covariance: out.covariance,
            score,
            purified_overlap: Some(purified),
            n_used: n,
            sampler_steps: out.steps,
        })
    }
}

/// Weight of `ρ` on states whose every `modes`-mode copy has even parity.
pub fn even_sector_weight(rho: &DenseOperator, modes: usize, copies: usize) -> f64 {
    let mask = (1usize << modes) - 1;
    (0..rho.dim())
        .filter(|&x| (0..copies).all(|c| ((x >> (c * modes)) & mask).count_ones().is_multiple_of(2)))
        .map(|x| rho.matrix()[(x, x)].re)
        .sum()
}

pub fn mixed_tomography(
    sigma: &DenseOperator,
    n: usize,
    cfg: &PovmSamplerConfig,
    route: MixedRoute,
    rng: &mut Rng64,
) -> Result<TomographyResult> {
    let m = sigma.dims().len();
    MixedTomography::new(m, n, route, rng)?.run(sigma, cfg, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for TestConstants {
    fn default() -> Self {
        Self { c1: 2.0, c2: 4.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestDecision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestOutcome {
    pub decision: TestDecision,
    pub n1: usize,
    pub n2: usize,
    /// `|⟨ψ|ψ̂⟩|²`, or `None` when the tomography phase returned no Gaussian outcome.
    pub overlap: Option<f64>,
}

/// Copies used by the two phases: `n₁ = ⌈C₁m²/ε⌉`, `n₂ = ⌈C₂/ε⌉`.
pub fn test_copies(m: usize, eps: f64, c: &TestConstants) -> (usize, usize) {
    ((c.c1 * (m * m) as f64 / eps).ceil() as usize, (c.c2 / eps).ceil() as usize)
}

/// Tomography on `n₁` copies followed by `n₂` swap tests against the estimate.
///
/// The first phase measures both parity sectors. A run that finds no Gaussian
/// outcome within `64·2·d_{n₁,m}` proposals is treated as the complement
/// outcome of the POVM and rejects.
pub fn gaussianity_test(
    psi: &StateVector,
    eps: f64,
    consts: &TestConstants,
    rng: &mut Rng64,
) -> Result<TestOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let m = psi.dims().len();
    let (n1, n2) = test_copies(m, eps, consts);
    let cap = (128.0 * rep_dimension(n1, m).to_f64()).min(1e7) as usize;
    let cfg = PovmSamplerConfig { method: SamplerMethod::Rejection, max_rejects: cap.max(1), ..Default::default() };
    let problem = PovmProblem::new(m, n1, None, PovmTarget::Vector(psi.amplitudes().clone()))?;
    let outcome = match problem.sample(&cfg, rng) {
        Ok(out) => out,
        Err(Error::MaxRejectsExceeded { .. }) => {
            return Ok(TestOutcome { decision: TestDecision::Reject, n1, n2, overlap: None })
        }
        Err(e) => return Err(e),
    };
    let overlap = outcome.state().overlap(psi).min(1.0);
    let accept_p = 0.5 * (1.0 + overlap);
    let passed = (0..n2).all(|_| rng.random::<f64>() < accept_p);
    let decision = if passed { TestDecision::Accept } else { TestDecision::Reject };
    Ok(TestOutcome { decision, n1, n2, overlap: Some(overlap) })
}

/// `(|even ref⟩ + |odd ref⟩)/√2`, at most `1/2` overlap with any pure Gaussian.
pub fn far_state(m: usize) -> StateVector {
    let d = 1usize << m;
    let mut amps = crate::linalg::CVec::zeros(d);
    amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[1 << (m - 1)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    StateVector::new(vec![2; m], amps).expect("dims")
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapCertificate {
    pub max_overlap: f64,
    /// Best overlap reached by each restart, both parities interleaved.
    pub restarts: Vec<f64>,
}

/// Largest `|⟨φ|ψ⟩|²` over pure Gaussian `φ` found by hill climbing on SO(2m)
/// from `restarts` random starts per parity.
pub fn max_gaussian_overlap(psi: &StateVector, restarts: usize, rng: &mut Rng64) -> OverlapCertificate {
    let m = psi.dims().len();
    let sys = FermionSystem::new(m);
    let value = |r: &RMat, parity: Parity| {
        let cov = r * reference_covariance(m, parity) * r.transpose();
        pure_state_from_covariance(&sys, &cov).overlap(psi)
    };
    let mut best_all = 0.0f64;
    let mut trace = Vec::with_capacity(2 * restarts);
    for _ in 0..restarts {
        for parity in [Parity::Even, Parity::Odd] {
            let mut r = haar_special_orthogonal(2 * m, rng);
            let mut best = value(&r, parity);
            let mut step = 0.5;
            let mut fails = 0;
            while step > 1e-6 {
                let cand = &r * (random_antisymmetric_unit(2 * m, rng) * step).exp();
                let v = value(&cand, parity);
                if v > best {
                    r = cand;
                    best = v;
                    fails = 0;
                } else {
                    fails += 1;
                    if fails >= 20 {
                        step *= 0.5;
                        fails = 0;
                    }
                }
            }
            best_all = best_all.max(best);
            trace.push(best);
        }
    }
    OverlapCertificate { max_overlap: best_all, restarts: trace }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    /// `1 − q₀.₀₁` of the sampled `|⟨ψ|ψ̂⟩|`.
    pub epsilon: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl MomentReport {
    pub fn within(&self, k_sigma: f64) -> bool {
        (self.estimate - self.target).abs() <= k_sigma * self.stderr + 1e-12
    }

    pub fn chain_holds(&self) -> bool {
        self.lower_bound <= self.estimate && self.estimate <= self.upper_bound
    }
}

/// `|⟨ψ|ψ̂⟩|²` for Haar-random even `ψ` on `m` modes, one value per trial;
/// trial `t` draws from stream `(seed, t)`.
pub fn sample_overlaps(m: usize, n: usize, trials: usize, cfg: &PovmSamplerConfig, seed: u64) -> Result<Vec<f64>> {
    let sys = FermionSystem::new(m);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t as u64).rng();
            let r = haar_special_orthogonal(2 * m, &mut rng);
            let cov = &r * reference_covariance(m, Parity::Even) * r.transpose();
            let problem = PovmProblem::new(sys.modes(), n, Some(Parity::Even), PovmTarget::Gaussian(cov.clone()))?;
            let out = problem.sample(cfg, &mut rng)?;
            Ok(pure_gaussian_overlap(&out.covariance, &cov).min(1.0))
        })
        .collect()
}

/// Monte-Carlo `E|⟨ψ|ψ̂⟩|^{2k}` against `d_{n,m}/d_{n+k,m}`, with the bounds
/// `0.99(1−ε)^{2k} ≤ E ≤ (1 − k/(2m+n+k))^{m(m−1)/2}`.
pub fn moment_check(m: usize, n: usize, k: usize, trials: usize, cfg: &PovmSamplerConfig, seed: u64) -> Result<MomentReport> {
    let overlaps = sample_overlaps(m, n, trials, cfg, seed)?;
    let stats = ScalarStats::from_samples(overlaps.iter().map(|o| o.powi(k as i32)));
    let mut amplitudes: Vec<f64> = overlaps.iter().map(|o| o.sqrt()).collect();
    amplitudes.sort_by(|a, b| a.total_cmp(b));
    let q = amplitudes[((trials as f64 * 0.01).floor() as usize).min(trials - 1)];
    let epsilon = 1.0 - q;
    Ok(MomentReport {
        m,
        n,
        k,
        trials,
        estimate: stats.mean,
        stderr: stats.stderr(),
        target: super::dimension::ratio_f64(&dimension_ratio(n, m, k)),
        epsilon,
        lower_bound: 0.99 * (1.0 - epsilon).powi(2 * k as i32),
        upper_bound: (1.0 - k as f64 / (2 * m + n + k) as f64).powi((m * (m - 1) / 2) as i32),
    })
}

/// `n ≥ k(m² − m − 1) − 2m` with `k = ⌊1/(4ε)⌋`.
pub fn lower_bound_report(m: usize, eps: f64) -> Result<i64> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/4), got {eps}")));
    }
    let k = (1.0 / (4.0 * eps)).floor() as i64;
    let m = m as i64;
    Ok(k * (m * m - m - 1) - 2 * m)
}
