use nalgebra::{DVector, SymmetricEigen};

use super::{CMat, DenseOperator, C64};
use crate::error::{Error, Result};

/// Eigenvalues above `-PSD_CLIP` are treated as zero by the PSD functional calculus.
pub const PSD_CLIP: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatFn {
    Sqrt,
    Exp,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    Trace,
    Fidelity,
}

/// Eigen-decomposition of the Hermitian part of `mat`. Eigenvalues are
/// ascending; eigenvectors are the matching columns.
pub fn hermitian_eigen(mat: &CMat) -> (DVector<f64>, CMat) {
    let sym = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn map_hermitian(mat: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (values, vectors) = hermitian_eigen(mat);
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= fv;
        }
    }
    scaled * vectors.adjoint()
}

fn require_hermitian(op: &DenseOperator) -> Result<()> {
    if op.is_hermitian(HERMITIAN_TOL) {
        Ok(())
    } else {
        Err(Error::NotHermitian { residual: op.hermitian_residual() })
    }
}

pub fn mat_fn(op: &DenseOperator, f: MatFn) -> Result<DenseOperator> {
    let mat = match f {
        MatFn::Sqrt | MatFn::Log => {
            require_hermitian(op)?;
            let (values, _) = hermitian_eigen(op.matrix());
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -PSD_CLIP {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            if f == MatFn::Log {
                if min <= PSD_CLIP {
                    return Err(Error::Singular { min_eigenvalue: min });
                }
                map_hermitian(op.matrix(), |x| C64::new(x.ln(), 0.0))
            } else {
                psd_sqrt(op.matrix())
            }
        }
        MatFn::Exp => {
            if op.is_hermitian(1e-14) {
                map_hermitian(op.matrix(), |x| C64::new(x.exp(), 0.0))
            } else {
                op.matrix().clone().exp()
            }
        }
    };
    DenseOperator::new(op.dims().to_vec(), mat)
}

/// `exp(K)` for anti-Hermitian `K`, computed spectrally so the result is
/// unitary to machine precision.
pub fn expm_skew(k: &DenseOperator) -> Result<DenseOperator> {
    let h = k.scale(super::I);
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotAntisymmetric { residual: h.hermitian_residual() });
    }
    // K = -iH
    DenseOperator::new(k.dims().to_vec(), map_hermitian(h.matrix(), |x| C64::new(0.0, -x).exp()))
}

/// `exp(i t H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    require_hermitian(h)?;
    DenseOperator::new(h.dims().to_vec(), map_hermitian(h.matrix(), |x| C64::new(0.0, t * x).exp()))
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Square root of a PSD matrix. Eigenvalues below `1e-13·λ_max` are zeroed
/// so that rank-deficient inputs stay accurate.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let cut = 1e-13 * values.iter().cloned().fold(0.0, f64::max);
    let roots = values.map(|x| C64::new(if x > cut { x.sqrt() } else { 0.0 }, 0.0));
    &vectors * CMat::from_diagonal(&roots) * vectors.adjoint()
}

/// `(tr √(√ρ σ √ρ))²`, evaluated as the squared nuclear norm of `√ρ √σ`.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> f64 {
    let prod = psd_sqrt(rho) * psd_sqrt(sigma);
    let t: f64 = prod.svd(false, false).singular_values.iter().sum();
    t * t
}

fn check_state_like(op: &DenseOperator) -> Result<()> {
    require_hermitian(op)?;
    let (values, _) = hermitian_eigen(op.matrix());
    if values[0] < -PSD_CLIP {
        return Err(Error::NotPsd { min_eigenvalue: values[0] });
    }
    let tr = op.trace().re;
    if tr > 1.0 + 1e-9 {
        return Err(Error::NotAState(format!("trace {tr} exceeds 1")));
    }
    Ok(())
}

pub fn distance(rho: &DenseOperator, sigma: &DenseOperator, kind: DistanceKind) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: sigma.dim() });
    }
    check_state_like(rho)?;
    check_state_like(sigma)?;
    Ok(match kind {
        DistanceKind::Trace => trace_distance(rho.matrix(), sigma.matrix()),
        DistanceKind::Fidelity => fidelity(rho.matrix(), sigma.matrix()),
    })
}
