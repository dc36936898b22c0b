//! Dense complex linear algebra over tensor-product spaces.
//!
//! Every operator and vector carries an explicit list of tensor-factor
//! dimensions. Basis indices are row-major mixed-radix over that list, with
//! the leftmost factor most significant, so `|i_1 i_2 ... i_k>` sits at
//! `((i_1 * d_2 + i_2) * d_3 + ...) + i_k`. This is the same ordering produced
//! by the Kronecker product, and it is used everywhere in the crate.

mod functions;
mod haar;
mod rng;
mod stats;

pub use functions::{
    distance, exp_i_hermitian, expm_skew, fidelity, hermitian_eigen, map_hermitian, mat_fn, psd_sqrt,
    trace_distance, DistanceKind, MatFn, PSD_CLIP,
};
pub use haar::{
    haar_sample, haar_special_orthogonal, haar_unitary, random_antisymmetric_unit,
    random_density_matrix, random_hermitian, random_state_vector, standard_complex_normal,
    HaarGroup,
};
pub use rng::RngStream;
pub use stats::{MatrixMeanEstimator, ScalarStats};

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type Rng64 = rand_chacha::ChaCha8Rng;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "tensor dimensions must be a non-empty list of positive integers, got {dims:?}"
        )));
    }
    Ok(dims.iter().product())
}

/// Mixed-radix digits of `index` over `dims` (leftmost most significant).
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// Inverse of [`digits`].
pub fn index_of(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// A square complex matrix acting on a tensor product of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    dims: Vec<usize>,
    mat: CMat,
}

impl DenseOperator {
    pub fn new(dims: Vec<usize>, mat: CMat) -> Result<Self> {
        let n = check_dims(&dims)?;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: if mat.nrows() != n { mat.nrows() } else { mat.ncols() },
            });
        }
        Ok(Self { dims, mat })
    }

    /// Wraps a square matrix as a single-factor operator.
    pub fn from_matrix(mat: CMat) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrix must be square");
        assert!(mat.nrows() > 0, "operator matrix must be non-empty");
        Self { dims: vec![mat.nrows()], mat }
    }

    pub fn from_real(dims: Vec<usize>, mat: &RMat) -> Result<Self> {
        Self::new(dims, mat.map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = check_dims(dims).expect("invalid dims");
        Self { dims: dims.to_vec(), mat: CMat::identity(n, n) }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = check_dims(dims).expect("invalid dims");
        Self { dims: dims.to_vec(), mat: CMat::zeros(n, n) }
    }

    pub fn diagonal(dims: Vec<usize>, values: &[C64]) -> Result<Self> {
        Self::new(dims, CMat::from_diagonal(&CVec::from_column_slice(values)))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut CMat {
        &mut self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Reinterprets the same matrix over a different factorization.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.mat)
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.transpose() }
    }

    pub fn conj(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.map(|z| z.conj()) }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dims: self.dims.clone(), mat: &self.mat * factor }
    }

    /// Hilbert–Schmidt inner product `tr(self^dagger other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.mat.dotc(&other.mat)
    }

    pub fn norm_fro(&self) -> f64 {
        self.mat.norm()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.mat
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn hermitian_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * self.norm_fro().max(1.0)
    }

    /// `(A + A^dagger)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self { dims: self.dims.clone(), mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0) }
    }

    pub fn unitarity_residual(&self) -> f64 {
        (self.mat.adjoint() * &self.mat - CMat::identity(self.dim(), self.dim())).norm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self { dims: self.dims.clone(), mat: &self.mat * &other.mat - &other.mat * &self.mat }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `U self U^dagger`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self { dims: self.dims.clone(), mat: &u.mat * &self.mat * u.mat.adjoint() }
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim(), v.dim());
        StateVector { dims: v.dims.clone(), amps: &self.mat * &v.amps }
    }

    /// Expectation value `<v|self|v>`.
    pub fn expectation(&self, v: &StateVector) -> C64 {
        v.amps.dotc(&(&self.mat * &v.amps))
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        DenseOperator { dims: self.dims.clone(), mat: &self.mat * &rhs.mat }
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        DenseOperator { dims: self.dims.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        DenseOperator { dims: self.dims.clone(), mat: &self.mat - &rhs.mat }
    }
}

/// Kronecker product; factor lists are concatenated.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    DenseOperator { dims, mat: a.mat.kronecker(&b.mat) }
}

pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> Option<DenseOperator> {
    ops.into_iter().fold(None, |acc, op| match acc {
        None => Some(op.clone()),
        Some(prev) => Some(tensor(&prev, op)),
    })
}

/// `op^{\otimes n}`.
pub fn tensor_power(op: &DenseOperator, n: usize) -> DenseOperator {
    assert!(n >= 1);
    let mut out = op.clone();
    for _ in 1..n {
        out = tensor(&out, op);
    }
    out
}

fn split_factors(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::IndexOutOfRange { index: bad, factors: dims.len() });
    }
    let traced = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    Ok((kept, traced))
}

/// Table `table[k][t]` of full indices, for kept index `k` and traced index `t`.
fn index_table(dims: &[usize], kept: &[usize], traced: &[usize]) -> Vec<Vec<usize>> {
    let kdims: Vec<usize> = kept.iter().map(|&f| dims[f]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&f| dims[f]).collect();
    let nk: usize = kdims.iter().product();
    let nt: usize = tdims.iter().product();
    let mut table = vec![vec![0; nt]; nk];
    let mut full = vec![0; dims.len()];
    for (k, row) in table.iter_mut().enumerate() {
        let kd = digits(k, &kdims);
        for (slot, &f) in kd.iter().zip(kept) {
            full[f] = *slot;
        }
        for (t, cell) in row.iter_mut().enumerate() {
            let td = digits(t, &tdims);
            for (slot, &f) in td.iter().zip(traced) {
                full[f] = *slot;
            }
            *cell = index_of(&full, dims);
        }
    }
    table
}

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original order.
pub fn partial_trace(op: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    let (kept, traced) = split_factors(&op.dims, keep)?;
    if kept.is_empty() {
        return DenseOperator::new(vec![1], CMat::from_element(1, 1, op.trace()));
    }
    let table = index_table(&op.dims, &kept, &traced);
    let nk = table.len();
    let mut out = CMat::zeros(nk, nk);
    for k1 in 0..nk {
        for k2 in 0..nk {
            let mut acc = ZERO;
            for (&i, &j) in table[k1].iter().zip(&table[k2]) {
                acc += op.mat[(i, j)];
            }
            out[(k1, k2)] = acc;
        }
    }
    DenseOperator::new(kept.iter().map(|&f| op.dims[f]).collect(), out)
}

fn permutation_map(dims: &[usize], perm: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), actual: perm.len() });
    }
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n: usize = dims.iter().product();
    let map = (0..n)
        .map(|i| {
            let d = digits(i, dims);
            let nd: Vec<usize> = perm.iter().map(|&p| d[p]).collect();
            index_of(&nd, &new_dims)
        })
        .collect();
    Ok((new_dims, map))
}

/// Reorders tensor factors: factor `p` of the result is factor `perm[p]` of
/// the input.
pub fn permute_factors(op: &DenseOperator, perm: &[usize]) -> Result<DenseOperator> {
    let (new_dims, map) = permutation_map(&op.dims, perm)?;
    let n = op.dim();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = op.mat[(i, j)];
        }
    }
    DenseOperator::new(new_dims, out)
}

/// A vector in a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: CVec,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: CVec) -> Result<Self> {
        let n = check_dims(&dims)?;
        if amps.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: amps.len() });
        }
        Ok(Self { dims, amps })
    }

    pub fn basis(dims: &[usize], index: usize) -> Self {
        let n = check_dims(dims).expect("invalid dims");
        let mut amps = CVec::zeros(n);
        amps[index] = ONE;
        Self { dims: dims.to_vec(), amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.norm_squared() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Self { dims: self.dims.clone(), amps: &self.amps / C64::new(n, 0.0) }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> DenseOperator {
        DenseOperator { dims: self.dims.clone(), mat: &self.amps * self.amps.adjoint() }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, amps: self.amps.kronecker(&other.amps) }
    }

    pub fn tensor_power(&self, n: usize) -> Self {
        assert!(n >= 1);
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        out
    }

    pub fn permute_factors(&self, perm: &[usize]) -> Result<Self> {
        let (new_dims, map) = permutation_map(&self.dims, perm)?;
        let mut out = CVec::zeros(self.dim());
        for (i, &a) in self.amps.iter().enumerate() {
            out[map[i]] = a;
        }
        Self::new(new_dims, out)
    }

    /// Reduced density operator on the kept factors.
    pub fn reduced(&self, keep: &[usize]) -> Result<DenseOperator> {
        let (kept, traced) = split_factors(&self.dims, keep)?;
        let table = index_table(&self.dims, &kept, &traced);
        let nk = table.len();
        let nt = table.first().map_or(1, |r| r.len());
        let psi = CMat::from_fn(nk, nt, |k, t| self.amps[table[k][t]]);
        DenseOperator::new(kept.iter().map(|&f| self.dims[f]).collect(), &psi * psi.adjoint())
    }
}

/// Builds `|v><v|`-style outer products `|a><b|`.
pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> DenseOperator {
        DenseOperator::from_matrix(CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let out = tensor(&DenseOperator::identity(&[2]), &DenseOperator::identity(&[3]));
        assert_eq!(out.dims(), &[2, 3]);
        assert_eq!(out.matrix(), &CMat::identity(6, 6));
    }

    #[test]
    fn tensor_projector_with_identity() {
        let p = DenseOperator::diagonal(vec![2], &[ONE, ZERO]).unwrap();
        let out = tensor(&p, &DenseOperator::identity(&[2]));
        let expected = DenseOperator::diagonal(vec![2, 2], &[ONE, ONE, ZERO, ZERO]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn x_tensor_x_flips_both_qubits() {
        let xx = tensor(&pauli_x(), &pauli_x());
        let v = xx.apply(&StateVector::basis(&[2, 2], 0));
        // |00> is index 0 and |11> is index 3 under the mixed-radix convention
        assert_eq!(v, StateVector::basis(&[2, 2], 3));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = DenseOperator::new(
            vec![2],
            CMat::from_row_slice(2, 2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)]),
        )
        .unwrap();
        let sigma = DenseOperator::diagonal(vec![3], &[C64::new(0.5, 0.0), C64::new(0.25, 0.0), C64::new(0.25, 0.0)]).unwrap();
        let out = partial_trace(&tensor(&rho, &sigma), &[0]).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
        let out = partial_trace(&tensor(&rho, &sigma), &[1]).unwrap();
        assert!(out.max_abs_diff(&sigma) < 1e-15);
    }

    #[test]
    fn maximally_entangled_marginal() {
        let d = 3;
        let mut gamma = CVec::zeros(d * d);
        for x in 0..d {
            gamma[x * d + x] = ONE;
        }
        let psi = StateVector::new(vec![d, d], gamma).unwrap();
        let rho = psi.projector().scale(C64::new(1.0 / d as f64, 0.0));
        let marg = partial_trace(&rho, &[0]).unwrap();
        let expected = DenseOperator::identity(&[d]).scale(C64::new(1.0 / d as f64, 0.0));
        assert!(marg.max_abs_diff(&expected) < 1e-15);
        assert!(psi.normalized().reduced(&[1]).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let op = DenseOperator::identity(&[2, 2]);
        assert!(matches!(partial_trace(&op, &[2]), Err(Error::IndexOutOfRange { index: 2, factors: 2 })));
    }

    #[test]
    fn permute_swaps_factors() {
        let a = DenseOperator::diagonal(vec![2], &[ONE, C64::new(2.0, 0.0)]).unwrap();
        let b = DenseOperator::diagonal(vec![3], &[ONE, C64::new(3.0, 0.0), C64::new(5.0, 0.0)]).unwrap();
        let swapped = permute_factors(&tensor(&a, &b), &[1, 0]).unwrap();
        assert_eq!(swapped, tensor(&b, &a));
    }

    #[test]
    fn digits_roundtrip() {
        let dims = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(index_of(&digits(i, &dims), &dims), i);
        }
        assert_eq!(digits(23, &dims), vec![1, 2, 3]);
    }

    #[test]
    fn rejects_empty_dims() {
        assert!(DenseOperator::new(vec![], CMat::zeros(1, 1)).is_err());
    }
}
