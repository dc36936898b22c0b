use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::fermion::{random_pure_gaussian, FermionSystem, Parity};
use crate::linalg::{hermitian_eigen, CMat, Rng64};

/// `d_{n,m} = ∏_{1≤j<k≤m} (2m + n − (j+k)) / (2m − (j+k))`, the dimension of
/// the span of `ψ^{⊗n}` over pure Gaussian `ψ` of one parity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepDimension {
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "as_string")]
    pub value: BigInt,
}

fn as_string<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl RepDimension {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn product(n: usize, m: usize) -> BigRational {
    let mut acc = BigRational::one();
    for j in 1..=m {
        for k in (j + 1)..=m {
            let num = (2 * m + n - (j + k)) as i64;
            let den = (2 * m - (j + k)) as i64;
            acc *= BigRational::new(num.into(), den.into());
        }
    }
    acc
}

pub fn rep_dimension(n: usize, m: usize) -> RepDimension {
    assert!(m >= 1, "need at least one mode");
    let value = product(n, m);
    assert!(value.is_integer(), "d_{{{n},{m}}} is not an integer");
    RepDimension { n, m, value: value.to_integer() }
}

/// `d_{n,m} / d_{n+k,m}` exactly.
pub fn dimension_ratio(n: usize, m: usize, k: usize) -> BigRational {
    product(n, m) / product(n + k, m)
}

pub fn ratio_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Numerical rank of the Gram matrix `(⟨ψ_a|ψ_b⟩^n)` of `samples` Haar pure
/// Gaussian states of the given parity (relative cutoff `1e-8`).
pub fn gram_rank(n: usize, m: usize, parity: Parity, samples: usize, rng: &mut Rng64) -> usize {
    let sys = FermionSystem::new(m);
    let vecs: Vec<_> = (0..samples).map(|_| random_pure_gaussian(&sys, parity, rng).0).collect();
    let gram = CMat::from_fn(samples, samples, |a, b| vecs[a].inner(&vecs[b]).powu(n as u32));
    let (values, _) = hermitian_eigen(&gram);
    let top = values.iter().cloned().fold(0.0, f64::max);
    values.iter().filter(|&&v| v > 1e-8 * top).count()
}
