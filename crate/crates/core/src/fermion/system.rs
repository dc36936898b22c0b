use crate::algebra::copy_sum;
use crate::linalg::{CMat, CVec, C64, I, ONE, ZERO};

fn pauli(which: char) -> CMat {
    match which {
        'I' => CMat::identity(2, 2),
        'X' => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'Y' => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        'Z' => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => unreachable!(),
    }
}

fn pauli_string(s: &[char]) -> CMat {
    s.iter().skip(1).fold(pauli(s[0]), |acc, &c| acc.kronecker(&pauli(c)))
}

/// `γ(x) = 0` if `|x| ≡ 0, 1 (mod 4)`, else 1.
pub fn gamma(x: usize) -> u32 {
    match x.count_ones() % 4 {
        0 | 1 => 0,
        _ => 1,
    }
}

/// `m` fermionic modes on `(C²)^{⊗m}` via Jordan–Wigner:
/// `c_{2k} = Z…Z X_k`, `c_{2k+1} = Z…Z Y_k` (0-indexed), `P = Z⊗…⊗Z`.
/// Mode `k` is tensor factor `k`; `|0⟩` is empty.
#[derive(Clone, Debug)]
pub struct FermionSystem {
    m: usize,
    majoranas: Vec<CMat>,
    parity: CMat,
    number_ops: Vec<CMat>,
}

impl FermionSystem {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "need at least one mode");
        let mut majoranas = Vec::with_capacity(2 * m);
        for k in 0..m {
            for last in ['X', 'Y'] {
                let s: Vec<char> = (0..m)
                    .map(|l| match l.cmp(&k) {
                        std::cmp::Ordering::Less => 'Z',
                        std::cmp::Ordering::Equal => last,
                        std::cmp::Ordering::Greater => 'I',
                    })
                    .collect();
                majoranas.push(pauli_string(&s));
            }
        }
        let parity = pauli_string(&vec!['Z'; m]);
        let dim = 1usize << m;
        let number_ops = (0..m)
            .map(|k| {
                let s: Vec<char> = (0..m).map(|l| if l == k { 'Z' } else { 'I' }).collect();
                (CMat::identity(dim, dim) - pauli_string(&s)) * C64::new(0.5, 0.0)
            })
            .collect();
        Self { m, majoranas, parity, number_ops }
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        1 << self.m
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![2; self.m]
    }

    pub fn majorana(&self, j: usize) -> &CMat {
        &self.majoranas[j]
    }

    pub fn majoranas(&self) -> &[CMat] {
        &self.majoranas
    }

    pub fn parity(&self) -> &CMat {
        &self.parity
    }

    pub fn number_op(&self, k: usize) -> &CMat {
        &self.number_ops[k]
    }

    /// `H = i Σ_{jk} h_{jk} c_j c_k`.
    pub fn quadratic_operator(&self, h: &crate::linalg::RMat) -> CMat {
        let n = 2 * self.m;
        assert_eq!(h.nrows(), n);
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for j in 0..n {
            for k in 0..n {
                if j != k && h[(j, k)] != 0.0 {
                    out += &self.majoranas[j] * &self.majoranas[k] * C64::new(0.0, h[(j, k)]);
                }
            }
        }
        out
    }

    /// `Σ_copies (i c_j c_k)` on `n` plain tensor copies, for all `j < k`.
    pub fn copy_summed_generators(&self, n: usize) -> Vec<CMat> {
        let mut out = vec![];
        for j in 0..2 * self.m {
            for k in (j + 1)..2 * self.m {
                let g = &self.majoranas[j] * &self.majoranas[k] * I;
                out.push(copy_sum(&g, n));
            }
        }
        out
    }

    /// Largest deviation from `{c_j, c_k} = 2δ_{jk}`.
    pub fn anticommutation_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for (j, a) in self.majoranas.iter().enumerate() {
            for (k, b) in self.majoranas.iter().enumerate() {
                let mut target = CMat::zeros(d, d);
                if j == k {
                    target = CMat::identity(d, d) * C64::new(2.0, 0.0);
                }
                worst = worst.max((a * b + b * a - target).norm());
            }
        }
        worst
    }

    /// `c_j ψ`, computed on bits without forming the matrix.
    pub fn apply_majorana(&self, j: usize, psi: &CVec) -> CVec {
        apply_majorana(self.m, j, psi)
    }
}

/// `c_j ψ` for `m` modes under the Jordan–Wigner convention above.
pub fn apply_majorana(m: usize, j: usize, psi: &CVec) -> CVec {
    let k = j / 2;
    let bit = 1usize << (m - 1 - k);
    let before_mask = !((1usize << (m - k)) - 1) & ((1usize << m) - 1);
    let mut out = CVec::zeros(psi.len());
    for (x, &a) in psi.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        let sign = if (x & before_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let coeff = if j.is_multiple_of(2) {
            C64::new(sign, 0.0)
        } else if x & bit == 0 {
            C64::new(0.0, sign)
        } else {
            C64::new(0.0, -sign)
        };
        out[x ^ bit] += coeff * a;
    }
    out
}

/// The doubled `2m`-mode system with `c̃_j = c_j ⊗ I` and `c̃_{2m+j} = P ⊗ c_j`,
/// which coincide with the Jordan–Wigner Majoranas of `2m` modes.
#[derive(Clone, Debug)]
pub struct DoubledSystem {
    base: FermionSystem,
    tilde: FermionSystem,
    gamma_signs: Vec<f64>,
}

impl DoubledSystem {
    pub fn new(m: usize) -> Self {
        let gamma_signs = (0..1usize << m).map(|x| if gamma(x) == 0 { 1.0 } else { -1.0 }).collect();
        Self { base: FermionSystem::new(m), tilde: FermionSystem::new(2 * m), gamma_signs }
    }

    pub fn base(&self) -> &FermionSystem {
        &self.base
    }

    pub fn tilde(&self) -> &FermionSystem {
        &self.tilde
    }

    pub fn tilde_majorana(&self, j: usize) -> &CMat {
        self.tilde.majorana(j)
    }

    /// Diagonal signs `(−1)^{γ(x)}`.
    pub fn gamma_signs(&self) -> &[f64] {
        &self.gamma_signs
    }

    /// The `±1` diagonal unitary `J` with `⟨x|J|x⟩ = (−1)^{γ(x)}`.
    pub fn gamma_sign_map(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.gamma_signs.len(),
            self.gamma_signs.iter().map(|&s| C64::new(s, 0.0)),
        ))
    }

    /// Residual of `c̃_j = c_j ⊗ I`, `c̃_{2m+j} = P ⊗ c_j`.
    pub fn tilde_definition_residual(&self) -> f64 {
        let m = self.base.modes();
        let id = CMat::identity(self.base.dim(), self.base.dim());
        let mut worst = 0.0f64;
        for j in 0..2 * m {
            worst = worst.max((self.base.majorana(j).kronecker(&id) - self.tilde.majorana(j)).norm());
            worst = worst
                .max((self.base.parity().kronecker(self.base.majorana(j)) - self.tilde.majorana(2 * m + j)).norm());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_anticommutation() {
        for m in 1..=4 {
            let f = FermionSystem::new(m);
            assert!(f.anticommutation_residual() < 1e-12);
            for c in f.majoranas() {
                assert!((c - c.adjoint()).norm() < 1e-15);
                assert!((f.parity() * c + c * f.parity()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bitwise_majorana_matches_matrix() {
        let f = FermionSystem::new(3);
        let psi = CVec::from_fn(8, |i, _| C64::new(i as f64 + 1.0, 0.5 * i as f64));
        for j in 0..6 {
            assert!((f.apply_majorana(j, &psi) - f.majorana(j) * &psi).norm() < 1e-13);
        }
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0b00), 0);
        assert_eq!(gamma(0b01), 0);
        assert_eq!(gamma(0b11), 1);
        assert_eq!(gamma(0b0111), 1);
        assert_eq!(gamma(0b1111), 0);
    }

    #[test]
    fn gamma_recursion_holds() {
        // (−1)^{γ(x) + x̃_k |x|} = (−1)^{γ(x̃)} where x is x̃ with bit k cleared
        for m in 1..=8usize {
            for xt in 0usize..(1 << m) {
                for k in 0..m {
                    let xk = (xt >> k) & 1;
                    let x = xt & !(1 << k);
                    let lhs = (gamma(x) as usize + xk * x.count_ones() as usize) % 2;
                    assert_eq!(lhs, gamma(xt) as usize, "m={m} x={xt:b} k={k}");
                }
            }
        }
    }

    #[test]
    fn doubled_majoranas_match_definition() {
        for m in 1..=3 {
            let d = DoubledSystem::new(m);
            assert!(d.tilde_definition_residual() < 1e-15);
            assert!(d.tilde().anticommutation_residual() < 1e-12);
        }
    }
}
