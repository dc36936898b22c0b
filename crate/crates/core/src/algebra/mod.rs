//! Finite-dimensional *-algebras: commutants, centers, the Wedderburn
//! decomposition and the associated conditional expectations.

mod fixtures;
mod samplers;
mod wedderburn;

pub use fixtures::{load_fixture, permutation_operator, Fixture, FixtureFile, FixtureMode};
pub use samplers::{
    haar_twirl_estimate, AlgebraSide, AlgebraUnitarySampler, DiagonalTorusSampler,
    FullUnitarySampler, GroupSampler, PermutationSampler, TensorPowerSampler,
};
pub use wedderburn::{decompose, Block, WedderburnDecomposition};
pub(crate) use fixtures::copy_sum;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{standard_complex_normal, CMat, CVec, DenseOperator, Rng64, C64};

/// Relative singular-value cutoff for every rank and null-space decision.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Orthonormal (Hilbert–Schmidt) basis of a *-algebra.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    ambient_dims: Vec<usize>,
    basis: Vec<CMat>,
}

fn vec_row_major(m: &CMat) -> CVec {
    let c = m.ncols();
    CVec::from_fn(m.nrows() * c, |k, _| m[(k / c, k % c)])
}

fn unvec_row_major(v: &[C64], d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}

impl AlgebraBasis {
    /// Orthonormal basis of the linear span of `ops`. No closure is imposed.
    pub fn span(ambient_dims: Vec<usize>, ops: &[CMat]) -> Result<Self> {
        let d: usize = ambient_dims.iter().product();
        if ops.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        for op in ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: op.nrows() });
            }
        }
        let cols: Vec<CVec> = ops.iter().map(vec_row_major).collect();
        let stacked = CMat::from_columns(&cols);
        let svd = stacked.svd(true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let basis = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > RANK_CUTOFF * smax)
            .map(|(j, _)| unvec_row_major(u.column(j).as_slice(), d))
            .collect();
        Ok(Self { ambient_dims, basis })
    }

    pub fn ambient_dims(&self) -> &[usize] {
        &self.ambient_dims
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dims.iter().product()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn basis_operators(&self) -> Vec<DenseOperator> {
        self.basis
            .iter()
            .map(|b| DenseOperator::new(self.ambient_dims.clone(), b.clone()).expect("dims"))
            .collect()
    }

    /// Hilbert–Schmidt orthogonal projection onto the span.
    pub fn project(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for b in &self.basis {
            out += b * b.dotc(m);
        }
        out
    }

    /// `‖M − proj(M)‖_F / max(1, ‖M‖_F)`.
    pub fn projection_residual(&self, m: &CMat) -> f64 {
        (m - self.project(m)).norm() / m.norm().max(1.0)
    }

    pub fn contains(&self, m: &CMat, tol: f64) -> bool {
        self.projection_residual(m) <= tol
    }

    /// Largest projection residual of a pairwise product of basis elements.
    /// Large bases are checked on a deterministic pseudo-random subset of pairs.
    pub fn closure_residual(&self) -> f64 {
        let n = self.dim();
        let pairs: Vec<(usize, usize)> = if n <= 48 {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
        } else {
            let mut rng = crate::linalg::RngStream::new(0x5EED, 0).rng();
            (0..2000).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
        };
        let mut worst = 0.0f64;
        for (i, j) in pairs {
            let p = &self.basis[i] * &self.basis[j];
            worst = worst.max(self.projection_residual(&p));
        }
        for b in &self.basis {
            worst = worst.max(self.projection_residual(&b.adjoint()));
        }
        worst
    }

    /// A random element with independent complex Gaussian coordinates.
    pub fn random_element(&self, rng: &mut Rng64) -> CMat {
        let d = self.ambient_dim();
        let mut out = CMat::zeros(d, d);
        for b in &self.basis {
            out += b * standard_complex_normal(rng);
        }
        out
    }

    /// A random Hermitian element (Hermitian part of [`Self::random_element`]).
    pub fn random_hermitian(&self, rng: &mut Rng64) -> CMat {
        let x = self.random_element(rng);
        (&x + x.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Commutant of this algebra.
    pub fn commutant(&self) -> Result<AlgebraBasis> {
        commutant_of(&self.ambient_dims, &self.basis)
    }

    /// True if both bases span the same subspace, to `tol` in projection residual.
    pub fn same_span(&self, other: &AlgebraBasis, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.basis.iter().all(|b| other.contains(b, tol))
            && other.basis.iter().all(|b| self.contains(b, tol))
    }
}

/// `X ↦ G X − X G` acting on row-major vectorizations.
fn commutator_superop(g: &CMat) -> CMat {
    let d = g.nrows();
    let id = CMat::identity(d, d);
    g.kronecker(&id) - id.kronecker(&g.transpose())
}

/// Common null space of the commutator superoperators of `gens` and their adjoints.
pub fn commutant_of(ambient_dims: &[usize], gens: &[CMat]) -> Result<AlgebraBasis> {
    if gens.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    let d: usize = ambient_dims.iter().product();
    let mut all: Vec<CMat> = Vec::with_capacity(2 * gens.len());
    for g in gens {
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: g.nrows() });
        }
        all.push(g.clone());
        let adj = g.adjoint();
        if (&adj - g).norm() > 1e-12 * g.norm().max(1.0) {
            all.push(adj);
        }
    }
    let d2 = d * d;
    let mut stacked = CMat::zeros(all.len() * d2, d2);
    for (k, g) in all.iter().enumerate() {
        stacked.view_mut((k * d2, 0), (d2, d2)).copy_from(&commutator_superop(g));
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut basis: Vec<CMat> = Vec::new();
    if smax == 0.0 {
        // every generator is a multiple of the identity
        for j in 0..d2 {
            let mut v = vec![C64::new(0.0, 0.0); d2];
            v[j] = C64::new(1.0, 0.0);
            basis.push(unvec_row_major(&v, d));
        }
    } else {
        for (j, &s) in svd.singular_values.iter().enumerate() {
            if s <= RANK_CUTOFF * smax {
                let row: Vec<C64> = v_t.row(j).iter().map(|z| z.conj()).collect();
                basis.push(unvec_row_major(&row, d));
            }
        }
    }
    Ok(AlgebraBasis { ambient_dims: ambient_dims.to_vec(), basis })
}

/// [`commutant_of`] on operators.
pub fn commutant(generators: &[DenseOperator]) -> Result<AlgebraBasis> {
    let first = generators.first().ok_or(Error::EmptyGenerators)?;
    let mats: Vec<CMat> = generators
        .iter()
        .map(|g| {
            if g.dims() != first.dims() {
                Err(Error::DimensionMismatch { expected: first.dim(), actual: g.dim() })
            } else {
                Ok(g.matrix().clone())
            }
        })
        .collect::<Result<_>>()?;
    commutant_of(first.dims(), &mats)
}

/// Unital *-algebra generated by `gens`, by repeated products until the span
/// stops growing.
pub fn generated_algebra(ambient_dims: &[usize], gens: &[CMat]) -> Result<AlgebraBasis> {
    let d: usize = ambient_dims.iter().product();
    let mut ops = vec![CMat::identity(d, d)];
    for g in gens {
        ops.push(g.clone());
        ops.push(g.adjoint());
    }
    let mut current = AlgebraBasis::span(ambient_dims.to_vec(), &ops)?;
    loop {
        let mut next = current.basis.clone();
        for a in &current.basis {
            for b in &current.basis {
                next.push(a * b);
            }
        }
        let grown = AlgebraBasis::span(ambient_dims.to_vec(), &next)?;
        if grown.dim() == current.dim() {
            return Ok(grown);
        }
        current = grown;
    }
}

/// Center `A ∩ A'` of an algebra.
pub fn center(alg: &AlgebraBasis, comm: &AlgebraBasis) -> Result<AlgebraBasis> {
    let mut gens = alg.basis.clone();
    gens.extend(comm.basis.iter().cloned());
    commutant_of(&alg.ambient_dims, &gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{RngStream, ONE, ZERO};

    fn swap2() -> CMat {
        let mut s = CMat::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                s[(b * 2 + a, a * 2 + b)] = ONE;
            }
        }
        s
    }

    #[test]
    fn commutant_of_diagonal_units_is_diagonal() {
        let d = 4;
        let gens: Vec<CMat> = (0..d)
            .map(|x| {
                let mut e = CMat::zeros(d, d);
                e[(x, x)] = ONE;
                e
            })
            .collect();
        let comm = commutant_of(&[d], &gens).unwrap();
        assert_eq!(comm.dim(), d);
        for b in comm.basis() {
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert!(b[(i, j)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn commutant_of_identity_is_everything() {
        let comm = commutant_of(&[3], &[CMat::identity(3, 3)]).unwrap();
        assert_eq!(comm.dim(), 9);
    }

    #[test]
    fn commutant_of_swap_has_dimension_ten() {
        let comm = commutant_of(&[2, 2], &[swap2()]).unwrap();
        assert_eq!(comm.dim(), 10);
        assert!(comm.closure_residual() < 1e-9);
        assert!(comm.contains(&CMat::identity(4, 4), 1e-12));
    }

    #[test]
    fn empty_generators_rejected() {
        assert!(matches!(commutant_of(&[2], &[]), Err(Error::EmptyGenerators)));
        assert!(matches!(commutant(&[]), Err(Error::EmptyGenerators)));
    }

    #[test]
    fn double_commutant_is_generated_algebra() {
        let a = CMat::from_row_slice(3, 3, &[ONE, ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ONE]);
        let gen = generated_algebra(&[3], std::slice::from_ref(&a)).unwrap();
        let dc = commutant_of(&[3], &[a]).unwrap().commutant().unwrap();
        assert!(gen.same_span(&dc, 1e-8));
    }

    #[test]
    fn random_hermitian_stays_in_algebra() {
        let comm = commutant_of(&[2, 2], &[swap2()]).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let h = comm.random_hermitian(&mut rng);
        assert!(comm.contains(&h, 1e-10));
        assert!((&h - h.adjoint()).norm() < 1e-12);
    }
}
