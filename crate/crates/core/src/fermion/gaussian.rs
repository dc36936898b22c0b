use serde::{Deserialize, Serialize};

use super::system::{apply_majorana, FermionSystem};
use crate::error::{Error, Result};
use crate::linalg::{
    exp_i_hermitian, haar_special_orthogonal, hermitian_eigen, map_hermitian, trace_distance, CMat, CVec,
    DenseOperator, RMat, Rng64, StateVector, C64,
};

/// `H = i Σ_{jk} h_{jk} c_j c_k` with real antisymmetric `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    h: RMat,
}

impl QuadraticHamiltonian {
    /// Accepts `h` if it is antisymmetric to `1e-9` (relative), then
    /// stores its exact antisymmetric part.
    pub fn new(h: RMat) -> Result<Self> {
        if h.nrows() != h.ncols() || !h.nrows().is_multiple_of(2) || h.nrows() == 0 {
            return Err(Error::InvalidArgument(format!("h must be 2m x 2m, got {}x{}", h.nrows(), h.ncols())));
        }
        let residual = (&h + h.transpose()).norm();
        if residual > 1e-9 * h.norm().max(1.0) {
            return Err(Error::NotAntisymmetric { residual });
        }
        Ok(Self::antisymmetrized(&h))
    }

    pub fn antisymmetrized(h: &RMat) -> Self {
        Self { h: (h - h.transpose()) * 0.5 }
    }

    pub fn zero(m: usize) -> Self {
        Self { h: RMat::zeros(2 * m, 2 * m) }
    }

    /// `Σ_j β_j N_j` up to an additive constant.
    pub fn number_weighted(betas: &[f64]) -> Self {
        let m = betas.len();
        let mut h = RMat::zeros(2 * m, 2 * m);
        for (k, &b) in betas.iter().enumerate() {
            h[(2 * k, 2 * k + 1)] = b / 4.0;
            h[(2 * k + 1, 2 * k)] = -b / 4.0;
        }
        Self { h }
    }

    pub fn h(&self) -> &RMat {
        &self.h
    }

    pub fn modes(&self) -> usize {
        self.h.nrows() / 2
    }
}

/// `M_{jk} = (i/2) tr(ρ [c_j, c_k])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    m: RMat,
}

impl CovarianceMatrix {
    pub fn new(m: RMat) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.m + self.m.transpose()).norm()
    }

    /// `‖M Mᵀ − I‖_F`; zero exactly for pure Gaussian states.
    pub fn purity_residual(&self) -> f64 {
        let n = self.m.nrows();
        (&self.m * self.m.transpose() - RMat::identity(n, n)).norm()
    }

    pub fn max_singular_value(&self) -> f64 {
        self.m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
    }

    /// `R M Rᵀ`.
    pub fn rotated(&self, r: &RMat) -> Self {
        Self { m: r * &self.m * r.transpose() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Adjoint-action rotation `R_{kj} = tr(c_k U c_j U†)/2^m` and the residual
/// `max_j ‖U c_j U† − Σ_k R_{kj} c_k‖_F`.
pub fn adjoint_rotation(sys: &FermionSystem, u: &CMat) -> (RMat, f64) {
    let n = 2 * sys.modes();
    let scale = 1.0 / sys.dim() as f64;
    let conj: Vec<CMat> = sys.majoranas().iter().map(|c| u * c * u.adjoint()).collect();
    let mut r = RMat::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            // tr(c_k X) = Σ_ab (c_k)_ba X_ab = ⟨c_k†, X⟩ with c_k Hermitian
            r[(k, j)] = sys.majorana(k).dotc(&conj[j]).re * scale;
        }
    }
    let mut residual = 0.0f64;
    for j in 0..n {
        let mut recon = CMat::zeros(sys.dim(), sys.dim());
        for k in 0..n {
            recon += sys.majorana(k) * C64::new(r[(k, j)], 0.0);
        }
        residual = residual.max((&conj[j] - recon).norm());
    }
    (r, residual)
}

/// `U = exp(i H t)` together with its rotation `R` from the adjoint action.
pub fn gaussian_unitary(sys: &FermionSystem, h: &QuadraticHamiltonian, t: f64) -> Result<(DenseOperator, RMat)> {
    if h.modes() != sys.modes() {
        return Err(Error::DimensionMismatch { expected: 2 * sys.modes(), actual: h.h.nrows() });
    }
    let hop = DenseOperator::new(sys.dims(), sys.quadratic_operator(&h.h))?;
    let u = exp_i_hermitian(&hop, t)?;
    let (r, residual) = adjoint_rotation(sys, u.matrix());
    if residual > 1e-8 {
        return Err(Error::NonUnitary { residual });
    }
    Ok((u, r))
}

/// `e^{−H}/tr e^{−H}`.
pub fn gaussian_mixed_state(sys: &FermionSystem, h: &QuadraticHamiltonian) -> DenseOperator {
    let hm = sys.quadratic_operator(&h.h);
    let (values, _) = hermitian_eigen(&hm);
    let shift = values[0];
    let w = map_hermitian(&hm, |x| C64::new((-(x - shift)).exp(), 0.0));
    let z = w.trace();
    DenseOperator::new(sys.dims(), w / z).expect("dims")
}

/// Gaussian state with covariance `M` (singular values clipped below 1).
pub fn gaussian_state_from_covariance(sys: &FermionSystem, cov: &CovarianceMatrix) -> DenseOperator {
    // M = i tanh(2ih)  ⇔  h = −(i/2) artanh(−iM)
    let x = cov.m.map(|v| C64::new(0.0, -v));
    let clip = 1.0 - 1e-13;
    let art = map_hermitian(&x, |v| C64::new(v.clamp(-clip, clip).atanh(), 0.0));
    let h = (art * C64::new(0.0, -0.5)).map(|z| z.re);
    gaussian_mixed_state(sys, &QuadraticHamiltonian::antisymmetrized(&h))
}

/// Trace distance between `ρ` and the Gaussian state sharing its covariance.
pub fn gaussianity_defect(sys: &FermionSystem, rho: &DenseOperator) -> f64 {
    let g = gaussian_state_from_covariance(sys, &covariance(sys, rho));
    trace_distance(rho.matrix(), g.matrix())
}

pub fn covariance(sys: &FermionSystem, rho: &DenseOperator) -> CovarianceMatrix {
    let n = 2 * sys.modes();
    let mut m = RMat::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let cjck = sys.majorana(j) * sys.majorana(k);
            // (i/2) tr(ρ [c_j, c_k]) = i tr(ρ c_j c_k) for j ≠ k
            let v = (C64::new(0.0, 1.0) * (rho.matrix() * cjck).trace()).re;
            m[(j, k)] = v;
            m[(k, j)] = -v;
        }
    }
    CovarianceMatrix { m }
}

/// `G_{jk} = ⟨c_j ψ | c_k ψ⟩`.
pub fn majorana_gram(m: usize, psi: &CVec) -> CMat {
    let vecs: Vec<CVec> = (0..2 * m).map(|j| apply_majorana(m, j, psi)).collect();
    CMat::from_fn(2 * m, 2 * m, |j, k| vecs[j].dotc(&vecs[k]))
}

/// Covariance of a pure state, `M_{jk} = −Im ⟨ψ|c_j c_k|ψ⟩` for `j ≠ k`.
pub fn covariance_pure(m: usize, psi: &CVec) -> CovarianceMatrix {
    let g = majorana_gram(m, psi);
    let n = 2 * m;
    CovarianceMatrix { m: RMat::from_fn(n, n, |j, k| if j == k { 0.0 } else { -g[(j, k)].im }) }
}

/// `‖Λ(ψ⊗ψ)‖` with `Λ = Σ_j c_j ⊗ c_j`, and `‖M Mᵀ − I‖`.
pub fn gaussianity_residuals(m: usize, psi: &CVec) -> (f64, f64) {
    let n = 2 * m;
    let vecs: Vec<CVec> = (0..n).map(|j| apply_majorana(m, j, psi)).collect();
    // Λ(ψ⊗ψ) reshaped as Σ_j v_j v_jᵀ with v_j = c_j ψ
    let mut lam = CMat::zeros(psi.len(), psi.len());
    for v in &vecs {
        lam += v * v.transpose();
    }
    let g = CMat::from_fn(n, n, |j, k| vecs[j].dotc(&vecs[k]));
    let cov = RMat::from_fn(n, n, |j, k| if j == k { 0.0 } else { -g[(j, k)].im });
    let purity = (&cov * cov.transpose() - RMat::identity(n, n)).norm();
    (lam.norm(), purity)
}

pub fn is_gaussian_pure(m: usize, psi: &StateVector, tol: f64) -> bool {
    let (lambda, purity) = gaussianity_residuals(m, psi.amplitudes());
    purity <= tol && lambda <= tol
}

/// `|0…0⟩` (even) or `|10…0⟩` (odd).
pub fn reference_state(m: usize, parity: Parity) -> StateVector {
    let index = match parity {
        Parity::Even => 0,
        Parity::Odd => 1 << (m - 1),
    };
    StateVector::basis(&vec![2; m], index)
}

/// Covariance of [`reference_state`]: `−J` per mode, with the first mode flipped when odd.
pub fn reference_covariance(m: usize, parity: Parity) -> RMat {
    let mut out = RMat::zeros(2 * m, 2 * m);
    for k in 0..m {
        let s = if k == 0 && parity == Parity::Odd { 1.0 } else { -1.0 };
        out[(2 * k, 2 * k + 1)] = s;
        out[(2 * k + 1, 2 * k)] = -s;
    }
    out
}

/// Principal real logarithm of a rotation, or `None` if `R` has an
/// eigenvalue within `1e-6` of `−1`.
pub fn rotation_log(r: &RMat) -> Option<RMat> {
    let n = r.nrows();
    let c = r.map(|x| C64::new(x, 0.0));
    let schur = nalgebra::Schur::new(c);
    let (q, t) = schur.unpack();
    let mut diag = CMat::zeros(n, n);
    for j in 0..n {
        let z = t[(j, j)];
        if (z + C64::new(1.0, 0.0)).norm() < 1e-6 {
            return None;
        }
        diag[(j, j)] = C64::new(0.0, z.arg());
    }
    let log = &q * diag * q.adjoint();
    let real = log.map(|z| z.re);
    Some((&real - real.transpose()) * 0.5)
}

/// A rotation `R ∈ SO(2m)` with `R M_ref Rᵀ = M` for a pure covariance `M`
/// of the given parity, or `None` if `M` is not pure or has the other parity.
pub fn rotation_to_covariance(m: &RMat, parity: Parity) -> Option<RMat> {
    let n = m.nrows();
    let target = reference_covariance(n / 2, parity);
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000)?;
    let (mut q, t) = schur.unpack();
    for b in 0..n / 2 {
        let (i, j) = (2 * b, 2 * b + 1);
        if t[(i, j)] * target[(i, j)] < 0.0 {
            q.swap_columns(i, j);
        }
    }
    if q.determinant() < 0.0 {
        return None;
    }
    let residual = (&q * &target * q.transpose() - m).norm();
    (residual < 1e-8).then_some(q)
}

/// Quadratic Hamiltonian whose unit-time unitary has adjoint rotation `R`
/// (`R = exp(−4h)`).
pub fn hamiltonian_for_rotation(r: &RMat) -> Option<QuadraticHamiltonian> {
    rotation_log(r).map(|l| QuadraticHamiltonian::antisymmetrized(&(l * -0.25)))
}

/// A Haar rotation with no eigenvalue near −1, resampled or nudged as needed.
fn haar_rotation_with_log(dim: usize, rng: &mut Rng64) -> (RMat, QuadraticHamiltonian) {
    let mut r = haar_special_orthogonal(dim, rng);
    loop {
        if let Some(h) = hamiltonian_for_rotation(&r) {
            return (r, h);
        }
        let a = crate::linalg::random_antisymmetric_unit(dim, rng) * 1e-6;
        r = &r * a.exp();
    }
}

/// Gaussian unitary `U_R` for `R` Haar on SO(2m), with `R`.
pub fn random_gaussian_unitary(sys: &FermionSystem, rng: &mut Rng64) -> (DenseOperator, RMat) {
    let (r, h) = haar_rotation_with_log(2 * sys.modes(), rng);
    let (u, r_solved) = gaussian_unitary(sys, &h, 1.0).expect("valid Hamiltonian");
    debug_assert!((&r_solved - &r).norm() < 1e-8);
    (u, r)
}

/// Haar-random pure Gaussian state `U_R |ref⟩` of given parity, with its rotation `R`.
pub fn random_pure_gaussian(sys: &FermionSystem, parity: Parity, rng: &mut Rng64) -> (StateVector, RMat) {
    let (u, r) = random_gaussian_unitary(sys, rng);
    (u.apply(&reference_state(sys.modes(), parity)), r)
}

/// The pure Gaussian state with covariance `M` (top eigenvector of `(i/2) Σ M_{jk} c_j c_k`).
pub fn pure_state_from_covariance(sys: &FermionSystem, m: &RMat) -> StateVector {
    let n = 2 * sys.modes();
    let d = sys.dim();
    let mut k = CMat::zeros(d, d);
    for j in 0..n {
        for l in (j + 1)..n {
            // (i/2)(M_jl c_j c_l + M_lj c_l c_j) = i M_jl c_j c_l
            k += sys.majorana(j) * sys.majorana(l) * C64::new(0.0, m[(j, l)]);
        }
    }
    let (_, vectors) = hermitian_eigen(&k);
    let top = vectors.column(d - 1).into_owned();
    StateVector::new(sys.dims(), top).expect("dims")
}

/// `|⟨φ|ψ⟩|² = 2^{−m} √det(M_φ + M_ψ)` for pure Gaussian states.
pub fn pure_gaussian_overlap(ma: &RMat, mb: &RMat) -> f64 {
    let m = ma.nrows() / 2;
    let det = (ma + mb).determinant();
    det.max(0.0).sqrt() / f64::powi(2.0, m as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_state_vector, RngStream};

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let sys = FermionSystem::new(2);
        let (u, r) = gaussian_unitary(&sys, &QuadraticHamiltonian::zero(2), 1.0).unwrap();
        assert!((u.matrix() - CMat::identity(4, 4)).norm() < 1e-12);
        assert!((r - RMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn single_mode_rotation_is_special_orthogonal() {
        let sys = FermionSystem::new(1);
        let theta = 0.7;
        let mut h = RMat::zeros(2, 2);
        h[(0, 1)] = theta / 2.0;
        h[(1, 0)] = -theta / 2.0;
        let h = QuadraticHamiltonian::new(h).unwrap();
        let (_, r) = gaussian_unitary(&sys, &h, 1.0).unwrap();
        assert!((r.determinant() - 1.0).abs() < 1e-10);
        assert!((&r * r.transpose() - RMat::identity(2, 2)).norm() < 1e-10);
        let expected = (h.h() * -4.0).exp();
        assert!((r - expected).norm() < 1e-10);
    }

    #[test]
    fn non_antisymmetric_rejected() {
        assert!(matches!(QuadraticHamiltonian::new(RMat::identity(2, 2)), Err(Error::NotAntisymmetric { .. })));
    }

    #[test]
    fn one_parameter_group() {
        let sys = FermionSystem::new(2);
        let mut rng = RngStream::new(30, 0).rng();
        let a = crate::linalg::random_antisymmetric_unit(4, &mut rng);
        let h = QuadraticHamiltonian::antisymmetrized(&a);
        let (_, r1) = gaussian_unitary(&sys, &h, 0.3).unwrap();
        let (_, r2) = gaussian_unitary(&sys, &h, 0.5).unwrap();
        let (_, r12) = gaussian_unitary(&sys, &h, 0.8).unwrap();
        assert!((r12 - &r2 * &r1).norm() < 1e-9);
    }

    #[test]
    fn thermal_single_mode() {
        let sys = FermionSystem::new(1);
        let beta: f64 = 1.3;
        let rho = gaussian_mixed_state(&sys, &QuadraticHamiltonian::number_weighted(&[beta]));
        let z = 1.0 + (-beta).exp();
        assert!((rho.matrix()[(0, 0)].re - 1.0 / z).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - (-beta).exp() / z).abs() < 1e-12);
        let zero = gaussian_mixed_state(&FermionSystem::new(2), &QuadraticHamiltonian::zero(2));
        assert!((zero.matrix() - CMat::identity(4, 4) * C64::new(0.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn vacuum_covariance_sign() {
        let sys = FermionSystem::new(1);
        let vac = reference_state(1, Parity::Even);
        let cov = covariance(&sys, &vac.projector());
        assert!((cov.matrix()[(0, 1)] + 1.0).abs() < 1e-14);
        assert!((cov.matrix()[(1, 0)] - 1.0).abs() < 1e-14);
        assert_eq!(covariance_pure(1, vac.amplitudes()), cov);
        for parity in [Parity::Even, Parity::Odd] {
            let sys3 = FermionSystem::new(3);
            let c = covariance(&sys3, &reference_state(3, parity).projector());
            assert!((c.matrix() - reference_covariance(3, parity)).norm() < 1e-14);
        }
    }

    #[test]
    fn covariance_transforms_by_rotation() {
        let sys = FermionSystem::new(2);
        let mut rng = RngStream::new(31, 0).rng();
        for _ in 0..10 {
            let rho = crate::linalg::random_density_matrix(4, &mut rng).with_dims(vec![2, 2]).unwrap();
            let a = crate::linalg::random_antisymmetric_unit(4, &mut rng);
            let (u, r) = gaussian_unitary(&sys, &QuadraticHamiltonian::antisymmetrized(&a), 1.0).unwrap();
            let lhs = covariance(&sys, &rho.conjugate_by(&u));
            let rhs = covariance(&sys, &rho).rotated(&r);
            assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-8);
        }
    }

    #[test]
    fn random_pure_gaussian_properties() {
        let sys = FermionSystem::new(3);
        let mut rng = RngStream::new(32, 0).rng();
        for parity in [Parity::Even, Parity::Odd] {
            for _ in 0..20 {
                let (psi, r) = random_pure_gaussian(&sys, parity, &mut rng);
                let p = DenseOperator::new(sys.dims(), sys.parity().clone()).unwrap().expectation(&psi).re;
                assert!((p - parity.sign()).abs() < 1e-10);
                let cov = covariance_pure(3, psi.amplitudes());
                assert!(cov.purity_residual() < 1e-8);
                let expected = &r * reference_covariance(3, parity) * r.transpose();
                assert!((cov.matrix() - expected).norm() < 1e-8);
                assert!(is_gaussian_pure(3, &psi, 1e-8));
            }
        }
    }

    #[test]
    fn rotation_recovered_from_covariance() {
        let sys = FermionSystem::new(3);
        let mut rng = RngStream::new(34, 0).rng();
        for parity in [Parity::Even, Parity::Odd] {
            for _ in 0..10 {
                let (psi, _) = random_pure_gaussian(&sys, parity, &mut rng);
                let cov = covariance_pure(3, psi.amplitudes());
                let q = rotation_to_covariance(cov.matrix(), parity).unwrap();
                assert!((q.determinant() - 1.0).abs() < 1e-10);
                let other = if parity == Parity::Even { Parity::Odd } else { Parity::Even };
                assert!(rotation_to_covariance(cov.matrix(), other).is_none());
            }
        }
    }

    #[test]
    fn overlap_formula_matches_dense() {
        let sys = FermionSystem::new(3);
        let mut rng = RngStream::new(33, 0).rng();
        for _ in 0..20 {
            let (a, ra) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
            let (b, rb) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
            let ma = &ra * reference_covariance(3, Parity::Even) * ra.transpose();
            let mb = &rb * reference_covariance(3, Parity::Even) * rb.transpose();
            assert!((pure_gaussian_overlap(&ma, &mb) - a.overlap(&b)).abs() < 1e-10);
        }
    }

    #[test]
    fn state_from_covariance_roundtrip() {
        let sys = FermionSystem::new(3);
        let mut rng = RngStream::new(34, 0).rng();
        let (psi, _) = random_pure_gaussian(&sys, Parity::Odd, &mut rng);
        let cov = covariance_pure(3, psi.amplitudes());
        let back = pure_state_from_covariance(&sys, cov.matrix());
        assert!((back.overlap(&psi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussianity_criterion_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut bell = CVec::zeros(4);
        bell[0] = C64::new(s, 0.0);
        bell[3] = C64::new(s, 0.0);
        let bell = StateVector::new(vec![2, 2], bell).unwrap();
        assert!(is_gaussian_pure(2, &bell, 1e-10));
        assert!(is_gaussian_pure(2, &reference_state(2, Parity::Even), 1e-12));
        let mut four = CVec::zeros(16);
        for (x, sign) in [(0b0000, 1.0), (0b1100, 1.0), (0b0011, 1.0), (0b1111, 1.0)] {
            four[x] = C64::new(0.5 * sign, 0.0);
        }
        let product = StateVector::new(vec![2; 4], four.clone()).unwrap();
        assert!(is_gaussian_pure(4, &product, 1e-10));
        four[0b1111] = C64::new(-0.5, 0.0);
        let flipped = StateVector::new(vec![2; 4], four).unwrap();
        assert!(!is_gaussian_pure(4, &flipped, 1e-6));
        let mut rng = RngStream::new(35, 0).rng();
        let generic = random_state_vector(&[2; 4], &mut rng);
        assert!(!is_gaussian_pure(4, &generic, 1e-6));
    }

    #[test]
    fn covariance_reconstructs_gaussian_state() {
        let sys = FermionSystem::new(2);
        let mut rng = RngStream::new(36, 0).rng();
        let a = crate::linalg::random_antisymmetric_unit(4, &mut rng) * 2.0;
        let rho = gaussian_mixed_state(&sys, &QuadraticHamiltonian::antisymmetrized(&a));
        assert!(gaussianity_defect(&sys, &rho) < 1e-10);
        let generic = crate::linalg::random_density_matrix(4, &mut rng).with_dims(vec![2, 2]).unwrap();
        assert!(gaussianity_defect(&sys, &generic) > 1e-3);
    }
}
