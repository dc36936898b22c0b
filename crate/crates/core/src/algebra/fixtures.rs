use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{commutant_of, generated_algebra, AlgebraBasis};
use crate::error::{Error, Result};
use crate::linalg::{digits, index_of, CMat, C64};

/// Operator on `(C^d)^{⊗n}` moving tensor factor `k` to position `perm[k]`.
pub fn permutation_operator(d: usize, perm: &[usize]) -> CMat {
    let n = perm.len();
    let dims = vec![d; n];
    let total = d.pow(n as u32);
    let mut out = CMat::zeros(total, total);
    for x in 0..total {
        let xd = digits(x, &dims);
        let mut yd = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            yd[p] = xd[k];
        }
        out[(index_of(&yd, &dims), x)] = C64::new(1.0, 0.0);
    }
    out
}

fn adjacent_transpositions(d: usize, n: usize) -> Vec<CMat> {
    (0..n.saturating_sub(1))
        .map(|k| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.swap(k, k + 1);
            permutation_operator(d, &perm)
        })
        .collect()
}

/// `Σ_copies E_{jl}` for all matrix units: the Lie generators of `U^{⊗n}`.
fn tensor_power_generators(d: usize, n: usize) -> Vec<CMat> {
    let mut out = vec![];
    for j in 0..d {
        for l in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(j, l)] = C64::new(1.0, 0.0);
            out.push(copy_sum(&e, n));
        }
    }
    out
}

/// `Σ_k I ⊗ … ⊗ g ⊗ … ⊗ I` (g in slot k) over `n` copies.
pub(crate) fn copy_sum(g: &CMat, n: usize) -> CMat {
    let d = g.nrows();
    let total = d.pow(n as u32);
    let mut out = CMat::zeros(total, total);
    for k in 0..n {
        let left = CMat::identity(d.pow(k as u32), d.pow(k as u32));
        let right = CMat::identity(d.pow((n - k - 1) as u32), d.pow((n - k - 1) as u32));
        out += left.kronecker(g).kronecker(&right);
    }
    out
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in all_permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Partitions of `n` with at most `rows` parts, largest part first.
fn partitions(n: usize, max_part: usize, rows: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    if rows == 0 {
        return vec![];
    }
    let mut out = vec![];
    for first in (1..=n.min(max_part)).rev() {
        for mut rest in partitions(n - first, first, rows - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `(f^λ, s_λ(1^d))`: Specht module dimension (hook lengths) and U(d) irrep
/// dimension (hook contents).
fn schur_weyl_pair(shape: &[usize], d: usize) -> (usize, usize) {
    let n: usize = shape.iter().sum();
    let mut hooks = 1u128;
    let mut contents_num = 1i128;
    for (i, &row) in shape.iter().enumerate() {
        for j in 0..row {
            let arm = row - j - 1;
            let leg = shape[i + 1..].iter().filter(|&&r| r > j).count();
            hooks *= (arm + leg + 1) as u128;
            contents_num *= d as i128 + j as i128 - i as i128;
        }
    }
    let n_fact: u128 = (1..=n as u128).product();
    ((n_fact / hooks) as usize, (contents_num as u128 / hooks) as usize)
}

/// Named algebras used by the verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Fixture {
    /// Diagonal matrices on `C^d`.
    Diagonal(usize),
    /// All of `Lin(C^d)`.
    Full(usize),
    /// Span of the permutation operators on `(C^d)^{⊗n}`.
    Permutation { d: usize, n: usize },
    /// Span of `U^{⊗n}`, the commutant of the permutations.
    UnitaryTensor { d: usize, n: usize },
    /// Center of the permutation algebra: commutant of both permutations and `U^{⊗n}`.
    SymmetricWerner { d: usize, n: usize },
    /// Commutant of the copy-summed quadratic Majorana generators on `n` copies of `m` modes.
    FermionCopies { m: usize, n: usize },
}

impl Fixture {
    /// The fixtures exercised by `--fixtures all`.
    pub fn standard() -> Vec<Fixture> {
        vec![
            Fixture::Diagonal(4),
            Fixture::Full(4),
            Fixture::Permutation { d: 2, n: 2 },
            Fixture::Permutation { d: 2, n: 3 },
            Fixture::UnitaryTensor { d: 2, n: 2 },
            Fixture::SymmetricWerner { d: 2, n: 2 },
            Fixture::FermionCopies { m: 2, n: 2 },
        ]
    }

    pub fn name(&self) -> String {
        match self {
            Fixture::Diagonal(d) => format!("diagonal-{d}"),
            Fixture::Full(d) => format!("full-{d}"),
            Fixture::Permutation { d, n } => format!("permutation-d{d}-n{n}"),
            Fixture::UnitaryTensor { d, n } => format!("unitary-tensor-d{d}-n{n}"),
            Fixture::SymmetricWerner { d, n } => format!("symmetric-werner-d{d}-n{n}"),
            Fixture::FermionCopies { m, n } => format!("fermion-m{m}-n{n}"),
        }
    }

    pub fn ambient_dims(&self) -> Vec<usize> {
        match *self {
            Fixture::Diagonal(d) | Fixture::Full(d) => vec![d],
            Fixture::Permutation { d, n }
            | Fixture::UnitaryTensor { d, n }
            | Fixture::SymmetricWerner { d, n } => vec![d; n],
            Fixture::FermionCopies { m, n } => vec![2; m * n],
        }
    }

    /// Block dimensions `(dim L, dim R)` known in closed form, sorted.
    pub fn expected_block_dims(&self) -> Option<Vec<(usize, usize)>> {
        let mut dims = match *self {
            Fixture::Diagonal(d) => vec![(1, 1); d],
            Fixture::Full(d) => vec![(d, 1)],
            Fixture::Permutation { d, n } => partitions(n, n, d).iter().map(|p| schur_weyl_pair(p, d)).collect(),
            Fixture::UnitaryTensor { d, n } => {
                partitions(n, n, d).iter().map(|p| schur_weyl_pair(p, d)).map(|(f, s)| (s, f)).collect()
            }
            Fixture::SymmetricWerner { d, n } => {
                partitions(n, n, d).iter().map(|p| schur_weyl_pair(p, d)).map(|(f, s)| (1, f * s)).collect()
            }
            Fixture::FermionCopies { .. } => return None,
        };
        dims.sort();
        Some(dims)
    }

    pub fn algebra(&self) -> Result<AlgebraBasis> {
        let dims = self.ambient_dims();
        match *self {
            Fixture::Diagonal(d) => {
                let units: Vec<CMat> = (0..d)
                    .map(|x| {
                        let mut e = CMat::zeros(d, d);
                        e[(x, x)] = C64::new(1.0, 0.0);
                        e
                    })
                    .collect();
                commutant_of(&dims, &units)
            }
            Fixture::Full(d) => commutant_of(&dims, &[CMat::identity(d, d)]),
            Fixture::Permutation { d, n } => {
                let perms: Vec<CMat> = all_permutations(n).iter().map(|p| permutation_operator(d, p)).collect();
                AlgebraBasis::span(dims, &perms)
            }
            Fixture::UnitaryTensor { d, n } => {
                if n < 2 {
                    return commutant_of(&dims, &[CMat::identity(d.pow(n as u32), d.pow(n as u32))]);
                }
                commutant_of(&dims, &adjacent_transpositions(d, n))
            }
            Fixture::SymmetricWerner { d, n } => {
                let mut gens = adjacent_transpositions(d, n);
                gens.extend(tensor_power_generators(d, n));
                commutant_of(&dims, &gens)
            }
            Fixture::FermionCopies { m, n } => {
                commutant_of(&dims, &crate::fermion::FermionSystem::new(m).copy_summed_generators(n))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureMode {
    /// The algebra is the *-algebra generated by the listed matrices.
    #[default]
    Generated,
    /// The algebra is the commutant of the listed matrices.
    Commutant,
}

/// JSON fixture: generator matrices are lists of rows of `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixtureFile {
    pub ambient_dims: Vec<usize>,
    pub generators: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub mode: FixtureMode,
}

impl FixtureFile {
    pub fn generator_matrices(&self) -> Result<Vec<CMat>> {
        let d: usize = self.ambient_dims.iter().product();
        if self.generators.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        self.generators
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch { expected: d, actual: rows.len() });
                }
                Ok(CMat::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            })
            .collect()
    }

    pub fn algebra(&self) -> Result<AlgebraBasis> {
        let gens = self.generator_matrices()?;
        match self.mode {
            FixtureMode::Generated => generated_algebra(&self.ambient_dims, &gens),
            FixtureMode::Commutant => commutant_of(&self.ambient_dims, &gens),
        }
    }

    pub fn from_matrices(ambient_dims: Vec<usize>, gens: &[CMat], mode: FixtureMode) -> Self {
        let generators = gens
            .iter()
            .map(|g| (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| [g[(i, j)].re, g[(i, j)].im]).collect()).collect())
            .collect();
        Self { ambient_dims, generators, mode }
    }
}

pub fn load_fixture(path: &Path) -> Result<AlgebraBasis> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let file: FixtureFile = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    file.algebra()
}
