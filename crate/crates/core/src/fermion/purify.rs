use super::gaussian::random_gaussian_unitary;
use super::system::{gamma, DoubledSystem, FermionSystem};
use crate::algebra::{commutant_of, decompose, GroupSampler};
use crate::error::{Error, Result};
use crate::linalg::{permute_factors, CMat, CVec, DenseOperator, RMat, Rng64, StateVector, C64};
use crate::purification::{standard_purification, PurificationChannel};

/// Largest `m·n` accepted by [`fermi_purify_channel`].
pub const FERMION_BUDGET: usize = 4;

/// `(√ρ ⊗ I) Σ_x (−1)^{γ(x)} |xx⟩` on `2m` modes.
pub fn signed_standard_purification(rho: &DenseOperator, d: &DoubledSystem) -> Result<StateVector> {
    let base = d.base();
    if rho.dim() != base.dim() {
        return Err(Error::DimensionMismatch { expected: base.dim(), actual: rho.dim() });
    }
    let rho = rho.clone().with_dims(base.dims())?;
    let psi = standard_purification(&rho, Some(&d.gamma_sign_map()))?;
    StateVector::new(d.tilde().dims(), psi.into_amplitudes())
}

/// `U_k = exp(−i H_k θ_k)` with `H_k = −i c̃_{2k} c̃_{2m+2k}` (1-indexed), applied in
/// order `k = 1…m` to the `2m`-mode vacuum.
pub fn diagonal_purification_circuit(thetas: &[f64], d: &DoubledSystem) -> Result<(StateVector, Vec<DenseOperator>)> {
    let m = d.base().modes();
    if thetas.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: thetas.len() });
    }
    let tilde = d.tilde();
    let mut psi = StateVector::basis(&tilde.dims(), 0);
    let mut gates = Vec::with_capacity(m);
    for (k, &theta) in thetas.iter().enumerate() {
        let (a, b) = (2 * k + 1, 2 * m + 2 * k + 1);
        // exp(−iθH) with H = −i c_a c_b
        let u = pair_rotation(tilde, a, b, -theta)?;
        psi = u.apply(&psi);
        gates.push(u);
    }
    Ok((psi, gates))
}

/// `exp(t·c_a c_b) = cos t·I + sin t·c_a c_b`, using `(c_a c_b)² = −I` and that
/// Majorana operators have one nonzero entry per column.
fn pair_rotation(sys: &FermionSystem, a: usize, b: usize, t: f64) -> Result<DenseOperator> {
    let (ca, cb) = (sys.majorana(a), sys.majorana(b));
    let d = ca.nrows();
    let mut u = CMat::identity(d, d) * C64::new(t.cos(), 0.0);
    for j in 0..d {
        let r = (0..d).find(|&r| cb[(r, j)] != C64::new(0.0, 0.0)).expect("monomial column");
        let w = cb[(r, j)] * t.sin();
        for i in 0..d {
            u[(i, j)] += ca[(i, r)] * w;
        }
    }
    DenseOperator::new(sys.dims(), u)
}

/// `Σ_x ∏_j cos^{1−x_j}θ_j sin^{x_j}θ_j (−1)^{γ(x)} |xx⟩`.
pub fn diagonal_purification_closed_form(thetas: &[f64]) -> StateVector {
    let m = thetas.len();
    let d = 1usize << m;
    let mut amps = CVec::zeros(d * d);
    for x in 0..d {
        let mut a = if gamma(x) == 0 { 1.0 } else { -1.0 };
        for (j, &t) in thetas.iter().enumerate() {
            a *= if (x >> (m - 1 - j)) & 1 == 1 { t.sin() } else { t.cos() };
        }
        amps[x * d + x] = C64::new(a, 0.0);
    }
    StateVector::new(vec![2; 2 * m], amps).expect("dims")
}

/// `U_R^{⊗n}` with `R` Haar on SO(2m).
#[derive(Clone, Debug)]
pub struct GaussianCopiesSampler {
    sys: FermionSystem,
    n: usize,
}

impl GaussianCopiesSampler {
    pub fn new(m: usize, n: usize) -> Self {
        Self { sys: FermionSystem::new(m), n }
    }

    pub fn sample_with_rotation(&self, rng: &mut Rng64) -> (CMat, RMat) {
        let (u, r) = random_gaussian_unitary(&self.sys, rng);
        let u = u.into_matrix();
        let mut out = u.clone();
        for _ in 1..self.n {
            out = out.kronecker(&u);
        }
        (out, r)
    }
}

impl GroupSampler for GaussianCopiesSampler {
    fn dim(&self) -> usize {
        self.sys.dim().pow(self.n as u32)
    }
    fn sample(&self, rng: &mut Rng64) -> CMat {
        self.sample_with_rotation(rng).0
    }
}

/// The purification channel for `n` copies of `m` fermionic modes.
#[derive(Clone, Debug)]
pub struct FermionChannel {
    m: usize,
    n: usize,
    doubled: DoubledSystem,
    channel: PurificationChannel,
    interleave: Vec<usize>,
}

impl FermionChannel {
    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn doubled(&self) -> &DoubledSystem {
        &self.doubled
    }

    pub fn channel(&self) -> &PurificationChannel {
        &self.channel
    }

    /// Factor order taking `H_m^{⊗n} ⊗ H_m'^{⊗n}` to `(H_m ⊗ H_m')^{⊗n}`
    /// (factor `p` of the result is factor `interleave[p]` of the input).
    pub fn interleave(&self) -> &[usize] {
        &self.interleave
    }

    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        self.channel.apply(&rho.clone().with_dims(vec![2; self.m * self.n])?)
    }

    /// Output regrouped copy by copy, each copy a `2m`-mode system.
    pub fn apply_interleaved(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        permute_factors(&self.apply(rho)?, &self.interleave)
    }

    /// Per-copy signed purification `(ψ_ρ)^{⊗n}` in the channel's register order.
    pub fn standard_purification(&self, rho: &DenseOperator) -> Result<StateVector> {
        standard_purification(&rho.clone().with_dims(vec![2; self.m * self.n])?, Some(self.channel.prime_map()))
    }

    /// Monte-Carlo estimate of `∫ (I ⊗ U_R^{⊗n}) ψ_std (I ⊗ U_R^{⊗n})† dR`.
    pub fn gaussian_twirl_estimate(
        &self,
        rho: &DenseOperator,
        n_samples: usize,
        rng: &mut Rng64,
    ) -> Result<(DenseOperator, crate::linalg::MatrixMeanEstimator)> {
        let psi = self.standard_purification(rho)?;
        let d = self.channel.input_dim();
        let psi_mat = CMat::from_fn(d, d, |x, y| psi.amplitudes()[x * d + y]);
        let sampler = GaussianCopiesSampler::new(self.m, self.n);
        let mut est = crate::linalg::MatrixMeanEstimator::new(d * d, 20);
        for _ in 0..n_samples {
            let v = sampler.sample(rng);
            let out = &psi_mat * v.transpose();
            est.push_rank1(&CVec::from_fn(d * d, |k, _| out[(k / d, k % d)]));
        }
        Ok((DenseOperator::new(self.channel.output_dims().to_vec(), est.mean())?, est))
    }
}

/// Builds the channel for the algebra commuting with all `U_R^{⊗n}`, with the
/// per-copy `γ`-signed basis on the reference side.
pub fn fermi_purify_channel(m: usize, n: usize, rng: &mut Rng64) -> Result<FermionChannel> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("need m ≥ 1 and n ≥ 1".into()));
    }
    if m * n > FERMION_BUDGET {
        return Err(Error::BudgetExceeded(format!("m·n = {} exceeds {FERMION_BUDGET}", m * n)));
    }
    let sys = FermionSystem::new(m);
    let dims = vec![2; m * n];
    let alg = commutant_of(&dims, &sys.copy_summed_generators(n))?;
    let dec = decompose(&alg, rng)?;
    let doubled = DoubledSystem::new(m);
    let j1 = doubled.gamma_sign_map();
    let mut j = j1.clone();
    for _ in 1..n {
        j = j.kronecker(&j1);
    }
    let channel = PurificationChannel::build(dec, Some(j))?;
    let mut interleave = Vec::with_capacity(2 * m * n);
    for c in 0..n {
        interleave.extend((0..m).map(|l| c * m + l));
        interleave.extend((0..m).map(|l| m * n + c * m + l));
    }
    Ok(FermionChannel { m, n, doubled, channel, interleave })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{gaussian_mixed_state, is_gaussian_pure, random_pure_gaussian, Parity, QuadraticHamiltonian};
    use crate::linalg::{partial_trace, RngStream};

    #[test]
    fn signed_purification_of_vacuum_and_diagonal_state() {
        let d = DoubledSystem::new(2);
        let mut vac = CMat::zeros(4, 4);
        vac[(0, 0)] = C64::new(1.0, 0.0);
        let psi = signed_standard_purification(&DenseOperator::from_matrix(vac), &d).unwrap();
        assert_eq!(psi, StateVector::basis(&[2; 4], 0));

        let d1 = DoubledSystem::new(1);
        let t = 0.3f64;
        let rho = DenseOperator::diagonal(vec![2], &[C64::new(t.cos().powi(2), 0.0), C64::new(t.sin().powi(2), 0.0)]).unwrap();
        let psi = signed_standard_purification(&rho, &d1).unwrap();
        assert!((psi.amplitudes()[0].re - t.cos()).abs() < 1e-12);
        assert!((psi.amplitudes()[3].re - t.sin()).abs() < 1e-12);
        assert!(is_gaussian_pure(2, &psi, 1e-8));
    }

    #[test]
    fn signed_purification_of_gaussian_states_is_gaussian() {
        let mut rng = RngStream::new(60, 0).rng();
        for m in 1..=3 {
            let sys = FermionSystem::new(m);
            let d = DoubledSystem::new(m);
            for _ in 0..5 {
                let h = QuadraticHamiltonian::antisymmetrized(&crate::linalg::random_antisymmetric_unit(2 * m, &mut rng));
                let rho = gaussian_mixed_state(&sys, &h);
                let psi = signed_standard_purification(&rho, &d).unwrap();
                assert!(is_gaussian_pure(2 * m, &psi, 1e-8), "m={m}");
                let v = psi.amplitudes();
                let parity = (v.adjoint() * d.tilde().parity() * v)[0].re;
                assert!((parity - 1.0).abs() < 1e-10);
                let marginal = psi.reduced(&(0..m).collect::<Vec<_>>()).unwrap();
                assert!((marginal.matrix() - rho.matrix()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unsigned_purification_can_fail_gaussianity() {
        let mut rng = RngStream::new(61, 0).rng();
        let sys = FermionSystem::new(2);
        let h = QuadraticHamiltonian::antisymmetrized(&crate::linalg::random_antisymmetric_unit(4, &mut rng));
        let rho = gaussian_mixed_state(&sys, &h);
        let psi = standard_purification(&rho, None).unwrap();
        let psi = StateVector::new(vec![2; 4], psi.into_amplitudes()).unwrap();
        assert!(!is_gaussian_pure(4, &psi, 1e-8));
    }

    #[test]
    fn diagonal_circuit_matches_closed_form() {
        let d1 = DoubledSystem::new(1);
        let (psi, _) = diagonal_purification_circuit(&[0.0], &d1).unwrap();
        assert!((psi.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let (psi, _) = diagonal_purification_circuit(&[std::f64::consts::FRAC_PI_4], &d1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi.amplitudes()[0] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((psi.amplitudes()[3] - C64::new(h, 0.0)).norm() < 1e-12);
        let mut rng = RngStream::new(62, 0).rng();
        for m in 1..=3 {
            let d = DoubledSystem::new(m);
            for _ in 0..5 {
                use rand::Rng;
                let thetas: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                let (psi, _) = diagonal_purification_circuit(&thetas, &d).unwrap();
                let closed = diagonal_purification_closed_form(&thetas);
                assert!(psi.overlap(&closed) > 1.0 - 1e-10, "m={m}");
            }
        }
    }

    #[test]
    fn channel_preserves_invariant_marginal() {
        let mut rng = RngStream::new(63, 0).rng();
        let ch = fermi_purify_channel(2, 2, &mut rng).unwrap();
        let rho = DenseOperator::identity(&[2; 4]).scale(C64::new(1.0 / 16.0, 0.0));
        let out = ch.apply(&rho).unwrap();
        let marginal = partial_trace(&out, &[0, 1, 2, 3]).unwrap();
        assert!((marginal.matrix() - rho.matrix()).norm() < 1e-9);
        assert!(fermi_purify_channel(3, 2, &mut rng).is_err());
    }

    #[test]
    fn single_copy_channel_matches_gaussian_twirl() {
        let mut rng = RngStream::new(64, 0).rng();
        let ch = fermi_purify_channel(2, 1, &mut rng).unwrap();
        let sys = FermionSystem::new(2);
        let h = QuadraticHamiltonian::antisymmetrized(&crate::linalg::random_antisymmetric_unit(4, &mut rng));
        let rho = gaussian_mixed_state(&sys, &h);
        let out = ch.apply(&rho).unwrap();
        let (mean, est) = ch.gaussian_twirl_estimate(&rho, 4000, &mut rng).unwrap();
        let td = crate::linalg::trace_distance(out.matrix(), mean.matrix());
        assert!(td <= 3.0 * est.stderr_trace() + 1e-12, "td {td}");
    }

    #[test]
    fn twirled_samples_stay_gaussian() {
        let mut rng = RngStream::new(65, 0).rng();
        let ch = fermi_purify_channel(2, 1, &mut rng).unwrap();
        let sys = FermionSystem::new(2);
        let (psi, _) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
        let rho = psi.projector();
        let base = signed_standard_purification(&rho, ch.doubled()).unwrap();
        let sampler = GaussianCopiesSampler::new(2, 1);
        for _ in 0..10 {
            let u = sampler.sample(&mut rng);
            let op = CMat::identity(4, 4).kronecker(&u);
            let v = StateVector::new(vec![2; 4], op * base.amplitudes()).unwrap();
            assert!(is_gaussian_pure(4, &v, 1e-8));
        }
    }
}
