//! The random purification channel of a *-algebra `A ⊆ Lin(H)`, mapping
//! `Lin(H) → Lin(H ⊗ H')`, in operational and closed forms.
//!
//! In block coordinates (`H ≅ ⊕ L_λ ⊗ R_λ`, `H' ≅ ⊕ L'_λ ⊗ R'_λ`) the channel is
//! `ρ ↦ ⊕_λ |Γ⟩⟨Γ|_{LL'}/dim L ⊗ tr_L(P_λ ρ P_λ) ⊗ I_{R'}/dim R`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::algebra::{GroupSampler, WedderburnDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, mat_fn, psd_sqrt, CMat, CVec, DenseOperator, MatFn, MatrixMeanEstimator, Rng64,
    StateVector, C64,
};

/// Which closed form [`PurificationChannel::explicit_form_apply`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplicitForm {
    /// `Π_A (ρ ⊗ Ω) Π_A`.
    Pinch,
    /// `√P_A[I] (ρ ⊗ I) √P_A[I]`.
    Sqrt,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockInfo {
    pub label: usize,
    pub dim_l: usize,
    pub dim_r: usize,
}

#[derive(Clone, Debug)]
pub struct PurificationChannel {
    dec: WedderburnDecomposition,
    prime_map: CMat,
    dec_prime: WedderburnDecomposition,
    output_dims: Vec<usize>,
    /// `U ⊗ U'`, ambient `H ⊗ H'` to block coordinates.
    w: CMat,
    pinch_ops: OnceLock<(CMat, CMat)>,
    sqrt_identity: OnceLock<CMat>,
}

fn check_state(rho: &DenseOperator, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: rho.dim() });
    }
    Ok(())
}

impl PurificationChannel {
    /// Builds the channel; `prime_map` is the unitary `J` with `|x'⟩ = J|x⟩`
    /// (identity when `None`).
    pub fn build(dec: WedderburnDecomposition, prime_map: Option<CMat>) -> Result<Self> {
        let d = dec.dim();
        let prime_map = prime_map.unwrap_or_else(|| CMat::identity(d, d));
        if prime_map.nrows() != d || prime_map.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: prime_map.nrows() });
        }
        let residual = (prime_map.adjoint() * &prime_map - CMat::identity(d, d)).norm();
        if residual > 1e-10 {
            return Err(Error::NonUnitary { residual });
        }
        let dec_prime = dec.primed(&prime_map);
        let mut output_dims = dec.ambient_dims().to_vec();
        output_dims.extend_from_slice(dec.ambient_dims());
        let w = dec.u_basis().kronecker(dec_prime.u_basis());
        Ok(Self { dec, prime_map, dec_prime, output_dims, w, pinch_ops: OnceLock::new(), sqrt_identity: OnceLock::new() })
    }

    pub fn dec(&self) -> &WedderburnDecomposition {
        &self.dec
    }

    /// Decomposition of `J Aᵀ J†` on `H'`.
    pub fn dec_prime(&self) -> &WedderburnDecomposition {
        &self.dec_prime
    }

    pub fn prime_map(&self) -> &CMat {
        &self.prime_map
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn input_dim(&self) -> usize {
        self.dec.dim()
    }

    pub fn block_info(&self) -> Vec<BlockInfo> {
        self.dec.blocks().iter().map(|b| BlockInfo { label: b.label, dim_l: b.dim_l, dim_r: b.dim_r }).collect()
    }

    fn wrap(&self, block: &CMat) -> DenseOperator {
        DenseOperator::new(self.output_dims.clone(), self.w.adjoint() * block * &self.w).expect("dims")
    }

    /// Output in block coordinates for a (not necessarily normalized) input.
    fn block_output(&self, rho: &CMat) -> CMat {
        let d = self.dec.dim();
        let b = self.dec.to_block(rho);
        let mut x = CMat::zeros(d * d, d * d);
        for blk in self.dec.blocks() {
            let (dl, dr, o) = (blk.dim_l, blk.dim_r, blk.offset);
            let mut rho_r = CMat::zeros(dr, dr);
            for i in 0..dl {
                rho_r += b.view((o + i * dr, o + i * dr), (dr, dr));
            }
            let scale = C64::new(1.0 / (dl * dr) as f64, 0.0);
            for i in 0..dl {
                for j in 0..dl {
                    for s in 0..dr {
                        for t in 0..dr {
                            let v = rho_r[(s, t)] * scale;
                            for sp in 0..dr {
                                let row = (o + i * dr + s) * d + o + i * dr + sp;
                                let col = (o + j * dr + t) * d + o + j * dr + sp;
                                x[(row, col)] = v;
                            }
                        }
                    }
                }
            }
        }
        x
    }

    /// Operational form: measure λ, discard `L_λ`, prepare `|Γ⟩_{LL'}/√dim L`
    /// and `I_{R'}/dim R`.
    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        check_state(rho, self.input_dim())?;
        Ok(self.wrap(&self.block_output(rho.matrix())))
    }

    /// `P_A[I]`.
    pub fn identity_output(&self) -> DenseOperator {
        let d = self.input_dim();
        self.wrap(&self.block_output(&CMat::identity(d, d)))
    }

    /// `Π_A = ⊕ |Γ⟩⟨Γ|_{LL'}/dim L ⊗ I_R ⊗ I_{R'}`.
    pub fn symmetric_projector(&self) -> DenseOperator {
        let d = self.input_dim();
        let mut x = CMat::zeros(d * d, d * d);
        for blk in self.dec.blocks() {
            let (dl, dr, o) = (blk.dim_l, blk.dim_r, blk.offset);
            let v = C64::new(1.0 / dl as f64, 0.0);
            for i in 0..dl {
                for j in 0..dl {
                    for s in 0..dr {
                        for sp in 0..dr {
                            let row = (o + i * dr + s) * d + o + i * dr + sp;
                            let col = (o + j * dr + s) * d + o + j * dr + sp;
                            x[(row, col)] = v;
                        }
                    }
                }
            }
        }
        self.wrap(&x)
    }

    /// `Ω = ⊕ (dim L/dim R) P'_λ` on `H'`.
    pub fn omega(&self) -> DenseOperator {
        let d = self.input_dim();
        let mut x = CMat::zeros(d, d);
        for blk in self.dec.blocks() {
            let v = C64::new(blk.dim_l as f64 / blk.dim_r as f64, 0.0);
            for k in blk.offset..blk.offset + blk.size() {
                x[(k, k)] = v;
            }
        }
        DenseOperator::new(self.dec.ambient_dims().to_vec(), self.dec_prime.from_block(&x)).expect("dims")
    }

    /// `(I ⊗ √Ω) Π_A`.
    pub fn sqrt_omega_projector(&self) -> DenseOperator {
        let d = self.input_dim();
        let sqrt_omega = psd_sqrt(self.omega().matrix());
        let lhs = CMat::identity(d, d).kronecker(&sqrt_omega);
        DenseOperator::new(self.output_dims.clone(), lhs * self.symmetric_projector().matrix()).expect("dims")
    }

    pub fn explicit_form_apply(&self, rho: &DenseOperator, form: ExplicitForm) -> Result<DenseOperator> {
        check_state(rho, self.input_dim())?;
        let d = self.input_dim();
        let mat = match form {
            ExplicitForm::Pinch => {
                let (pi, omega) = self
                    .pinch_ops
                    .get_or_init(|| (self.symmetric_projector().into_matrix(), self.omega().into_matrix()));
                pi * rho.matrix().kronecker(omega) * pi
            }
            ExplicitForm::Sqrt => {
                let root = match self.sqrt_identity.get() {
                    Some(r) => r,
                    None => {
                        let r = mat_fn(&self.identity_output(), MatFn::Sqrt)?.into_matrix();
                        self.sqrt_identity.get_or_init(|| r)
                    }
                };
                root * rho.matrix().kronecker(&CMat::identity(d, d)) * root
            }
        };
        DenseOperator::new(self.output_dims.clone(), mat)
    }

    /// `(I ⊗ E_{Aᵀ})[X]` for `X` on `H ⊗ H'`, with `Aᵀ` realized on `H'` through `J`.
    pub fn reference_expectation(&self, x: &DenseOperator) -> Result<DenseOperator> {
        let d = self.input_dim();
        if x.dim() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, actual: x.dim() });
        }
        let mut out = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let sub = x.matrix().view((a * d, b * d), (d, d)).into_owned();
                out.view_mut((a * d, b * d), (d, d)).copy_from(&self.dec_prime.conditional_expectation(&sub));
            }
        }
        DenseOperator::new(self.output_dims.clone(), out)
    }

    /// Monte-Carlo estimate of `∫ (I ⊗ J gᵀ J†) ψ_std (I ⊗ J ḡ J†) dg` for `g`
    /// drawn from `sampler` (a group spanning `A'`).
    pub fn twirl_estimate(
        &self,
        rho: &DenseOperator,
        sampler: &dyn GroupSampler,
        n_samples: usize,
        rng: &mut Rng64,
    ) -> Result<(DenseOperator, MatrixMeanEstimator)> {
        let psi = standard_purification(rho, Some(&self.prime_map))?;
        let d = self.input_dim();
        let psi_mat = CMat::from_fn(d, d, |x, y| psi.amplitudes()[x * d + y]);
        let mut est = MatrixMeanEstimator::new(d * d, 20);
        for _ in 0..n_samples {
            let g = sampler.sample(rng);
            let v = &self.prime_map * g.transpose() * self.prime_map.adjoint();
            // (I ⊗ V) vec(Ψ) = vec(Ψ Vᵀ)
            let out = &psi_mat * v.transpose();
            let vec = CVec::from_fn(d * d, |k, _| out[(k / d, k % d)]);
            est.push_rank1(&vec);
        }
        Ok((DenseOperator::new(self.output_dims.clone(), est.mean())?, est))
    }

    /// Choi matrix `Σ_{xy} |x⟩⟨y| ⊗ P(|x⟩⟨y|)` on `H ⊗ H ⊗ H'`; small `H` only.
    pub fn choi_matrix(&self) -> Result<DenseOperator> {
        let d = self.input_dim();
        if d > 8 {
            return Err(Error::BudgetExceeded(format!("Choi matrix of a channel on dimension {d} (limit 8)")));
        }
        let n = d * d * d;
        let mut choi = CMat::zeros(n, n);
        for x in 0..d {
            for y in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(x, y)] = C64::new(1.0, 0.0);
                let out = self.w.adjoint() * self.block_output(&e) * &self.w;
                choi.view_mut((x * d * d, y * d * d), (d * d, d * d)).copy_from(&out);
            }
        }
        let mut dims = self.dec.ambient_dims().to_vec();
        dims.extend_from_slice(&self.output_dims);
        DenseOperator::new(dims, choi)
    }

    /// Kraus operators `H → H ⊗ H'` read off the Choi matrix; small `H` only.
    pub fn kraus_operators(&self) -> Result<Vec<CMat>> {
        let d = self.input_dim();
        let choi = self.choi_matrix()?;
        let (values, vectors) = hermitian_eigen(choi.matrix());
        let mut out = vec![];
        for (k, &lam) in values.iter().enumerate() {
            if lam <= 1e-12 {
                continue;
            }
            let v = vectors.column(k);
            // v = Σ_x |x⟩ ⊗ K|x⟩ / √λ
            let kr = CMat::from_fn(d * d, d, |row, x| v[x * d * d + row] * lam.sqrt());
            out.push(kr);
        }
        Ok(out)
    }
}

/// `(√ρ ⊗ I) Σ_x |x⟩ ⊗ J|x⟩`, as a vector on `H ⊗ H'`.
pub fn standard_purification(rho: &DenseOperator, prime_map: Option<&CMat>) -> Result<StateVector> {
    let d = rho.dim();
    if !rho.is_hermitian(1e-9) {
        return Err(Error::NotAState("input is not Hermitian".into()));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    let root = mat_fn(rho, MatFn::Sqrt).map_err(|e| Error::NotAState(e.to_string()))?;
    // entries (x, y) of √ρ Jᵀ
    let psi = match prime_map {
        Some(j) => root.matrix() * j.transpose(),
        None => root.matrix().clone(),
    };
    let amps = CVec::from_fn(d * d, |k, _| psi[(k / d, k % d)]);
    let mut dims = rho.dims().to_vec();
    dims.extend_from_slice(rho.dims());
    StateVector::new(dims, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{decompose, AlgebraSide, AlgebraUnitarySampler, Fixture};
    use crate::linalg::{partial_trace, random_density_matrix, trace_distance, RngStream, ONE};

    fn channel(f: Fixture, seed: u64) -> PurificationChannel {
        let alg = f.algebra().unwrap();
        let dec = decompose(&alg, &mut RngStream::new(seed, 0).rng()).unwrap();
        PurificationChannel::build(dec, None).unwrap()
    }

    fn state(dims: Vec<usize>, rng: &mut Rng64) -> DenseOperator {
        let d = dims.iter().product();
        random_density_matrix(d, rng).with_dims(dims).unwrap()
    }

    #[test]
    fn standard_purification_examples() {
        let mut e0 = CMat::zeros(3, 3);
        e0[(0, 0)] = ONE;
        let psi = standard_purification(&DenseOperator::from_matrix(e0), None).unwrap();
        assert_eq!(psi, StateVector::basis(&[3, 3], 0));
        let mixed = DenseOperator::identity(&[3]).scale(C64::new(1.0 / 3.0, 0.0));
        let psi = standard_purification(&mixed, None).unwrap();
        for x in 0..3 {
            assert!((psi.amplitudes()[x * 3 + x].re - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        }
        let mut rng = RngStream::new(40, 0).rng();
        for _ in 0..20 {
            let rho = state(vec![8], &mut rng);
            let psi = standard_purification(&rho, None).unwrap();
            assert!((psi.reduced(&[0]).unwrap().matrix() - rho.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_algebra_is_classical_copying() {
        let ch = channel(Fixture::Diagonal(3), 1);
        let mut rng = RngStream::new(41, 0).rng();
        let rho = state(vec![3], &mut rng);
        let out = ch.apply(&rho).unwrap();
        let mut expected = CMat::zeros(9, 9);
        for x in 0..3 {
            expected[(x * 3 + x, x * 3 + x)] = rho.matrix()[(x, x)];
        }
        assert!((out.matrix() - expected).norm() < 1e-10);
    }

    #[test]
    fn full_algebra_outputs_fixed_entangled_state() {
        let ch = channel(Fixture::Full(3), 2);
        let mut rng = RngStream::new(42, 0).rng();
        let out = ch.apply(&state(vec![3], &mut rng)).unwrap();
        let mut gamma = CVec::zeros(9);
        for x in 0..3 {
            gamma[x * 3 + x] = C64::new(1.0 / 3f64.sqrt(), 0.0);
        }
        assert!((out.matrix() - &gamma * gamma.adjoint()).norm() < 1e-10);
        let pi = ch.symmetric_projector();
        assert!((pi.matrix() - &gamma * gamma.adjoint()).norm() < 1e-10);
        assert!((ch.omega().matrix() - CMat::identity(3, 3) * C64::new(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn closed_forms_agree_with_operational_form() {
        let mut rng = RngStream::new(43, 0).rng();
        for f in [Fixture::Permutation { d: 2, n: 2 }, Fixture::UnitaryTensor { d: 2, n: 2 }, Fixture::Diagonal(4)] {
            let ch = channel(f, 3);
            let rho = state(f.ambient_dims(), &mut rng);
            let op = ch.apply(&rho).unwrap();
            for form in [ExplicitForm::Pinch, ExplicitForm::Sqrt] {
                let ex = ch.explicit_form_apply(&rho, form).unwrap();
                assert!(trace_distance(op.matrix(), ex.matrix()) < 1e-9, "{f:?} {form:?}");
            }
            let lhs = ch.sqrt_omega_projector();
            let rhs = mat_fn(&ch.identity_output(), MatFn::Sqrt).unwrap();
            assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-9);
        }
    }

    #[test]
    fn invariant_input_matches_expectation_and_marginal() {
        let mut rng = RngStream::new(44, 0).rng();
        let ch = channel(Fixture::Permutation { d: 2, n: 2 }, 4);
        let comm = ch.dec().clone();
        let raw = state(vec![2, 2], &mut rng);
        let rho = DenseOperator::new(vec![2, 2], comm.commutant_expectation(raw.matrix())).unwrap();
        let out = ch.apply(&rho).unwrap();
        let psi = standard_purification(&rho, None).unwrap().projector();
        let psi = psi.with_dims(ch.output_dims().to_vec()).unwrap();
        let target = ch.reference_expectation(&psi).unwrap();
        assert!(trace_distance(out.matrix(), target.matrix()) < 1e-9);
        let marginal = partial_trace(&out, &[0, 1]).unwrap();
        assert!((marginal.matrix() - rho.matrix()).norm() < 1e-9);
    }

    #[test]
    fn werner_output_is_permutation_twirled_purification() {
        let ch = channel(Fixture::UnitaryTensor { d: 2, n: 2 }, 5);
        let swap = crate::algebra::permutation_operator(2, &[1, 0]);
        let rho = CMat::identity(4, 4) * C64::new(0.2, 0.0) + &swap * C64::new(0.1, 0.0);
        let rho = DenseOperator::new(vec![2, 2], rho).unwrap();
        let rho = rho.scale(C64::new(1.0 / rho.trace().re, 0.0));
        let out = ch.apply(&rho).unwrap();
        let psi = standard_purification(&rho, None).unwrap();
        let mut avg = CMat::zeros(16, 16);
        for p in [CMat::identity(4, 4), swap.clone()] {
            let v = CMat::identity(4, 4).kronecker(&p.transpose()) * psi.amplitudes();
            avg += &v * v.adjoint() * C64::new(0.5, 0.0);
        }
        assert!((out.matrix() - avg).norm() < 1e-9);
    }

    #[test]
    fn output_symmetry_and_rank() {
        let mut rng = RngStream::new(45, 0).rng();
        let ch = channel(Fixture::Permutation { d: 2, n: 2 }, 6);
        let pi = ch.symmetric_projector();
        assert!((pi.matrix() * pi.matrix() - pi.matrix()).norm() < 1e-10);
        let (values, _) = hermitian_eigen(pi.matrix());
        let rank = values.iter().filter(|&&v| v > 0.5).count();
        assert_eq!(rank, 10);
        let out = ch.apply(&state(vec![2, 2], &mut rng)).unwrap();
        assert!((pi.matrix() * out.matrix() * pi.matrix() - out.matrix()).norm() < 1e-9);
        let sampler = AlgebraUnitarySampler { dec: ch.dec().clone(), side: AlgebraSide::Commutant };
        for _ in 0..5 {
            let g = sampler.sample(&mut rng);
            let op = CMat::identity(4, 4).kronecker(&g.transpose());
            assert!((&op * out.matrix() - out.matrix() * &op).norm() < 1e-8);
        }
    }

    #[test]
    fn choi_is_positive() {
        let ch = channel(Fixture::Permutation { d: 2, n: 2 }, 7);
        let choi = ch.choi_matrix().unwrap();
        let (values, _) = hermitian_eigen(choi.matrix());
        assert!(values[0] > -1e-10);
        let kraus = ch.kraus_operators().unwrap();
        let mut sum = CMat::zeros(4, 4);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        assert!((sum - CMat::identity(4, 4)).norm() < 1e-9);
    }
}
