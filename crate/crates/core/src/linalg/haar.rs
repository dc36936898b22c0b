use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMat, CVec, DenseOperator, RMat, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaarGroup {
    Unitary(usize),
    SpecialOrthogonal(usize),
}

/// Complex normal with `E|z|² = 1`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| standard_complex_normal(rng))
}

/// Haar-random element of U(d): QR of a complex Ginibre matrix with the
/// phases of diag(R) pushed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    assert!(d >= 1);
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Haar-random element of SO(d).
pub fn haar_special_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> RMat {
    assert!(d >= 1);
    let g = RMat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn haar_sample<R: Rng + ?Sized>(group: HaarGroup, rng: &mut R) -> DenseOperator {
    match group {
        HaarGroup::Unitary(d) => DenseOperator::from_matrix(haar_unitary(d, rng)),
        HaarGroup::SpecialOrthogonal(d) => {
            DenseOperator::from_matrix(haar_special_orthogonal(d, rng).map(|x| C64::new(x, 0.0)))
        }
    }
}

/// Real antisymmetric matrix with Gaussian entries, scaled to unit Frobenius norm.
pub fn random_antisymmetric_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> RMat {
    let mut a = RMat::zeros(d, d);
    for j in 0..d {
        for k in (j + 1)..d {
            let x: f64 = rng.sample(StandardNormal);
            a[(j, k)] = x;
            a[(k, j)] = -x;
        }
    }
    let n = a.norm();
    if n > 0.0 {
        a /= n;
    }
    a
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Full-rank random density matrix `G G† / tr(G G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseOperator {
    let g = ginibre(d, d, rng);
    let w = &g * g.adjoint();
    let tr = w.trace();
    DenseOperator::from_matrix(w / tr)
}

pub fn random_state_vector<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> StateVector {
    let n: usize = dims.iter().product();
    let v = CVec::from_fn(n, |_, _| standard_complex_normal(rng));
    StateVector::new(dims.to_vec(), v).expect("dims checked").normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{MatrixMeanEstimator, RngStream};

    #[test]
    fn unitary_of_dimension_one_is_a_phase() {
        let mut rng = RngStream::new(3, 0).rng();
        let u = haar_unitary(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn special_orthogonal_has_unit_determinant() {
        let mut rng = RngStream::new(4, 0).rng();
        for d in 1..7 {
            for _ in 0..20 {
                let q = haar_special_orthogonal(d, &mut rng);
                assert!((q.determinant() - 1.0).abs() < 1e-10);
                assert!((q.transpose() * &q - RMat::identity(d, d)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_membership() {
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..20 {
            let u = haar_sample(HaarGroup::Unitary(5), &mut rng);
            assert!(u.unitarity_residual() < 1e-10);
        }
    }

    #[test]
    fn reproducible_from_stream() {
        let a = haar_unitary(4, &mut RngStream::new(9, 2).rng());
        let b = haar_unitary(4, &mut RngStream::new(9, 2).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn schur_twirl_of_matrix_unit() {
        let d = 4;
        let mut rng = RngStream::new(11, 0).rng();
        let mut est = MatrixMeanEstimator::new(d, 20);
        for _ in 0..20_000 {
            let u = haar_unitary(d, &mut rng);
            est.push_rank1(&u.column(0).into_owned());
        }
        let mean = est.mean();
        let se = est.stderr_entrywise();
        let target = CMat::identity(d, d) / C64::new(d as f64, 0.0);
        for i in 0..d {
            for j in 0..d {
                let dev = (mean[(i, j)] - target[(i, j)]).norm();
                assert!(dev <= 4.0 * se[(i, j)] + 1e-12, "entry ({i},{j}) off by {dev}, stderr {}", se[(i, j)]);
            }
        }
    }
}
