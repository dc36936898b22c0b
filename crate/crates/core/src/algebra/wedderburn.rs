use serde::Serialize;

use super::{center, commutant_of, AlgebraBasis};
use crate::error::{Error, Result};
use crate::linalg::{haar_unitary, hermitian_eigen, CMat, CVec, DenseOperator, Rng64, C64};

const MAX_ATTEMPTS: usize = 16;
const CLUSTER_GAP: f64 = 1e-6;
const CLOSURE_TOL: f64 = 1e-9;
const BLOCK_FORM_TOL: f64 = 1e-8;

/// One summand `L_λ ⊗ R_λ`. Block coordinates of the summand start at `offset`
/// and are ordered `(i, s) ↦ offset + i·dim_r + s`.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub label: usize,
    pub dim_l: usize,
    pub dim_r: usize,
    pub offset: usize,
    #[serde(skip)]
    pub projector: CMat,
}

impl Block {
    pub fn size(&self) -> usize {
        self.dim_l * self.dim_r
    }
}

/// `H ≅ ⊕_λ L_λ ⊗ R_λ` with `A = ⊕ Lin(L_λ) ⊗ I` and `A' = ⊕ I ⊗ Lin(R_λ)`.
///
/// `u_basis` maps ambient coordinates to block coordinates, so
/// `u_basis · a · u_basis†` is block diagonal with blocks `a_λ ⊗ I`.
#[derive(Clone, Debug)]
pub struct WedderburnDecomposition {
    ambient_dims: Vec<usize>,
    blocks: Vec<Block>,
    u_basis: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl WedderburnDecomposition {
    /// Assembles a decomposition from block dimensions and a basis change,
    /// in the given order. Projectors are derived from `u_basis`.
    pub fn from_parts(ambient_dims: Vec<usize>, dims: &[(usize, usize)], u_basis: CMat) -> Result<Self> {
        let d: usize = ambient_dims.iter().product();
        let total: usize = dims.iter().map(|(l, r)| l * r).sum();
        if total != d || u_basis.nrows() != d || u_basis.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: total });
        }
        let mut blocks = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for (label, &(dim_l, dim_r)) in dims.iter().enumerate() {
            let size = dim_l * dim_r;
            let rows = u_basis.rows(offset, size);
            let projector = rows.adjoint() * rows;
            blocks.push(Block { label, dim_l, dim_r, offset, projector });
            offset += size;
        }
        Ok(Self { ambient_dims, blocks, u_basis })
    }

    pub fn ambient_dims(&self) -> &[usize] {
        &self.ambient_dims
    }

    pub fn dim(&self) -> usize {
        self.u_basis.nrows()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn u_basis(&self) -> &CMat {
        &self.u_basis
    }

    /// `(dim_l, dim_r)` per block in list order.
    pub fn block_dims(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.dim_l, b.dim_r)).collect()
    }

    /// `Σ_λ dim_l²`.
    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_l * b.dim_l).sum()
    }

    /// `Σ_λ dim_r²`.
    pub fn commutant_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim_r * b.dim_r).sum()
    }

    pub fn to_block(&self, m: &CMat) -> CMat {
        &self.u_basis * m * self.u_basis.adjoint()
    }

    pub fn from_block(&self, m: &CMat) -> CMat {
        self.u_basis.adjoint() * m * &self.u_basis
    }

    fn expectation(&self, m: &CMat, side: Side) -> CMat {
        let b = self.to_block(m);
        let mut out = CMat::zeros(b.nrows(), b.ncols());
        for blk in &self.blocks {
            let (dl, dr, o) = (blk.dim_l, blk.dim_r, blk.offset);
            match side {
                Side::Left => {
                    for i in 0..dl {
                        for k in 0..dl {
                            let mut acc = C64::new(0.0, 0.0);
                            for s in 0..dr {
                                acc += b[(o + i * dr + s, o + k * dr + s)];
                            }
                            acc /= dr as f64;
                            for s in 0..dr {
                                out[(o + i * dr + s, o + k * dr + s)] = acc;
                            }
                        }
                    }
                }
                Side::Right => {
                    for s in 0..dr {
                        for t in 0..dr {
                            let mut acc = C64::new(0.0, 0.0);
                            for i in 0..dl {
                                acc += b[(o + i * dr + s, o + i * dr + t)];
                            }
                            acc /= dl as f64;
                            for i in 0..dl {
                                out[(o + i * dr + s, o + i * dr + t)] = acc;
                            }
                        }
                    }
                }
            }
        }
        self.from_block(&out)
    }

    /// Conditional expectation onto `A`: pinch by `P_λ`, trace out `R_λ`,
    /// reinsert `I/dim R_λ`.
    pub fn conditional_expectation(&self, m: &CMat) -> CMat {
        self.expectation(m, Side::Left)
    }

    /// Conditional expectation onto the commutant `A'`.
    pub fn commutant_expectation(&self, m: &CMat) -> CMat {
        self.expectation(m, Side::Right)
    }

    /// Conditional expectation on a [`DenseOperator`], checking dimensions.
    pub fn apply_expectation(&self, m: &DenseOperator) -> Result<DenseOperator> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: m.dim() });
        }
        DenseOperator::new(m.dims().to_vec(), self.conditional_expectation(m.matrix()))
    }

    fn block_form_residual(&self, m: &CMat, side: Side) -> f64 {
        let expected = self.expectation(m, side);
        (m - expected).norm() / m.norm().max(1.0)
    }

    /// Residual of `m` against the form `⊕ a_λ ⊗ I` (membership in `A`).
    pub fn algebra_residual(&self, m: &CMat) -> f64 {
        self.block_form_residual(m, Side::Left)
    }

    /// Residual of `m` against the form `⊕ I ⊗ b_λ` (membership in `A'`).
    pub fn commutant_residual(&self, m: &CMat) -> f64 {
        self.block_form_residual(m, Side::Right)
    }

    /// Haar-random unitary of `A` (`⊕ u_λ ⊗ I`) or of `A'` (`⊕ I ⊗ v_λ`).
    pub fn random_unitary(&self, commutant_side: bool, rng: &mut Rng64) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for blk in &self.blocks {
            let (dl, dr, o) = (blk.dim_l, blk.dim_r, blk.offset);
            if commutant_side {
                let v = haar_unitary(dr, rng);
                for i in 0..dl {
                    out.view_mut((o + i * dr, o + i * dr), (dr, dr)).copy_from(&v);
                }
            } else {
                let u = haar_unitary(dl, rng);
                for i in 0..dl {
                    for k in 0..dl {
                        for s in 0..dr {
                            out[(o + i * dr + s, o + k * dr + s)] = u[(i, k)];
                        }
                    }
                }
            }
        }
        self.from_block(&out)
    }

    /// Decomposition of `S Aᵀ S†` on the reference space, where `S` is the
    /// basis-pairing unitary: `U' = conj(U) S†`, `P'_λ = S P_λᵀ S†`.
    pub fn primed(&self, s: &CMat) -> Self {
        let u = self.u_basis.map(|z| z.conj()) * s.adjoint();
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block { projector: s * b.projector.transpose() * s.adjoint(), ..b.clone() })
            .collect();
        Self { ambient_dims: self.ambient_dims.clone(), blocks, u_basis: u }
    }

    /// Largest deviation of the projectors from an orthogonal resolution of the identity.
    pub fn projector_residual(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMat::zeros(d, d);
        let mut worst = 0.0f64;
        for (i, a) in self.blocks.iter().enumerate() {
            sum += &a.projector;
            worst = worst.max((&a.projector * &a.projector - &a.projector).norm());
            for b in &self.blocks[i + 1..] {
                worst = worst.max((&a.projector * &b.projector).norm());
            }
        }
        worst.max((sum - CMat::identity(d, d)).norm())
    }
}

/// Groups ascending eigenvalues into clusters separated by relative gaps.
fn cluster(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    if values.is_empty() {
        return vec![];
    }
    let scale = values
        .iter()
        .map(|v| v.abs())
        .fold(values[values.len() - 1] - values[0], f64::max)
        .max(f64::MIN_POSITIVE);
    let mut out = vec![];
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > CLUSTER_GAP * scale {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..values.len());
    out
}

/// Eigenspaces of a Hermitian matrix, as column blocks.
fn eigenspaces(h: &CMat) -> Vec<CMat> {
    let (values, vectors) = hermitian_eigen(h);
    cluster(values.as_slice())
        .into_iter()
        .map(|r| vectors.columns(r.start, r.len()).into_owned())
        .collect()
}

fn normalized(v: CVec) -> Option<CVec> {
    let n = v.norm();
    (n > 1e-6).then(|| v / C64::new(n, 0.0))
}

struct RawBlock {
    dim_l: usize,
    dim_r: usize,
    /// Columns are ambient vectors `u_{i,s}` in block-coordinate order.
    vectors: CMat,
}

fn fail(detail: String) -> Error {
    Error::DegeneracyRetryExceeded { attempts: MAX_ATTEMPTS, detail }
}

fn split_block(
    q: &CMat,
    alg: &AlgebraBasis,
    comm: &AlgebraBasis,
    rng: &mut Rng64,
) -> std::result::Result<RawBlock, String> {
    let r = q.ncols();
    let restrict = |m: &CMat| q.adjoint() * m * q;
    let w = eigenspaces(&restrict(&alg.random_hermitian(rng)));
    let v = eigenspaces(&restrict(&comm.random_hermitian(rng)));
    let dim_l = w.len();
    let dim_r = v.len();
    if dim_l * dim_r != r
        || w.iter().any(|x| x.ncols() != dim_r)
        || v.iter().any(|x| x.ncols() != dim_l)
    {
        return Err(format!(
            "block of rank {r}: algebra multiplicities {:?}, commutant multiplicities {:?}",
            w.iter().map(|x| x.ncols()).collect::<Vec<_>>(),
            v.iter().map(|x| x.ncols()).collect::<Vec<_>>()
        ));
    }
    // u_{1,1}: the unit vector in W_1 ∩ V_1
    let overlap = w[0].adjoint() * &v[0];
    let svd = overlap.svd(false, true);
    let (top, &smax) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if (smax - 1.0).abs() > 1e-6 {
        return Err(format!("W_1 and V_1 intersect with cosine {smax}"));
    }
    let v_t = svd.v_t.expect("requested V^T");
    let coeffs = v_t.row(top).adjoint();
    let u11 = &v[0] * coeffs;
    let x = restrict(&alg.random_element(rng));
    let y = restrict(&comm.random_element(rng));
    let mut vectors = CMat::zeros(r, r);
    for (i, wi) in w.iter().enumerate() {
        let ui1 = normalized(wi * (wi.adjoint() * (&x * &u11)))
            .ok_or_else(|| format!("vanishing transfer to algebra eigenspace {i}"))?;
        for (s, vs) in v.iter().enumerate() {
            let uis = normalized(vs * (vs.adjoint() * (&y * &ui1)))
                .ok_or_else(|| format!("vanishing transfer to commutant eigenspace {s}"))?;
            vectors.set_column(i * dim_r + s, &uis);
        }
    }
    Ok(RawBlock { dim_l, dim_r, vectors: q * vectors })
}

fn attempt(
    alg: &AlgebraBasis,
    comm: &AlgebraBasis,
    cent: &AlgebraBasis,
    rng: &mut Rng64,
) -> std::result::Result<WedderburnDecomposition, String> {
    let z = cent.random_hermitian(rng);
    let spaces = eigenspaces(&z);
    if spaces.len() != cent.dim() {
        return Err(format!("center of dimension {} split into {} eigenspaces", cent.dim(), spaces.len()));
    }
    let mut raw = Vec::with_capacity(spaces.len());
    for q in &spaces {
        raw.push(split_block(q, alg, comm, rng)?);
    }
    raw.sort_by_key(|b| (b.dim_l, b.dim_r));
    let d = alg.ambient_dim();
    let mut u = CMat::zeros(d, d);
    let mut offset = 0;
    for b in &raw {
        for j in 0..b.vectors.ncols() {
            u.set_row(offset + j, &b.vectors.column(j).adjoint());
        }
        offset += b.vectors.ncols();
    }
    let dims: Vec<(usize, usize)> = raw.iter().map(|b| (b.dim_l, b.dim_r)).collect();
    let dec = WedderburnDecomposition::from_parts(alg.ambient_dims().to_vec(), &dims, u)
        .map_err(|e| e.to_string())?;
    let unitarity = (dec.u_basis.adjoint() * &dec.u_basis - CMat::identity(d, d)).norm();
    if unitarity > BLOCK_FORM_TOL {
        return Err(format!("basis change not unitary (residual {unitarity:.3e})"));
    }
    let worst_a = alg.basis().iter().map(|a| dec.algebra_residual(a)).fold(0.0, f64::max);
    let worst_c = comm.basis().iter().map(|b| dec.commutant_residual(b)).fold(0.0, f64::max);
    if worst_a > BLOCK_FORM_TOL || worst_c > BLOCK_FORM_TOL {
        return Err(format!("block-form residuals {worst_a:.3e} (A), {worst_c:.3e} (A')"));
    }
    Ok(dec)
}

fn commutes_with_all(a: &AlgebraBasis, b: &AlgebraBasis) -> bool {
    a.basis().iter().all(|x| b.basis().iter().all(|y| (x * y - y * x).norm() <= BLOCK_FORM_TOL))
}

/// Commutant of `alg`, computed from a few random Hermitian elements and
/// certified against the full basis.
fn certified_commutant(alg: &AlgebraBasis, rng: &mut Rng64) -> Result<AlgebraBasis> {
    let probes: Vec<CMat> = (0..3).map(|_| alg.random_hermitian(rng)).collect();
    let comm = commutant_of(alg.ambient_dims(), &probes)?;
    if commutes_with_all(alg, &comm) {
        Ok(comm)
    } else {
        alg.commutant()
    }
}

/// Numerical Wedderburn decomposition of a *-algebra given by an orthonormal basis.
pub fn decompose(alg: &AlgebraBasis, rng: &mut Rng64) -> Result<WedderburnDecomposition> {
    let closure = alg.closure_residual();
    if closure > CLOSURE_TOL {
        return Err(Error::ClosureViolation { residual: closure });
    }
    let comm = certified_commutant(alg, rng)?;
    let mut probes: Vec<CMat> = (0..3).map(|_| alg.random_hermitian(rng)).collect();
    probes.extend((0..3).map(|_| comm.random_hermitian(rng)));
    let mut cent = commutant_of(alg.ambient_dims(), &probes)?;
    if !(commutes_with_all(&cent, alg) && commutes_with_all(&cent, &comm)) {
        cent = center(alg, &comm)?;
    }
    let mut last = String::new();
    for k in 0..MAX_ATTEMPTS {
        match attempt(alg, &comm, &cent, rng) {
            Ok(dec) => return Ok(dec),
            Err(detail) => {
                log::debug!("decomposition attempt {k} rejected: {detail}");
                last = detail;
            }
        }
    }
    Err(fail(last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Fixture;
    use crate::linalg::RngStream;

    fn dims_of(f: Fixture) -> Vec<(usize, usize)> {
        let alg = f.algebra().unwrap();
        decompose(&alg, &mut RngStream::new(3, 0).rng()).unwrap().block_dims()
    }

    #[test]
    fn cluster_splits_on_gaps() {
        let c = cluster(&[0.0, 1e-12, 1.0, 1.0 + 1e-13, 2.0]);
        assert_eq!(c, vec![0..2, 2..4, 4..5]);
    }

    #[test]
    fn diagonal_blocks() {
        assert_eq!(dims_of(Fixture::Diagonal(4)), vec![(1, 1); 4]);
    }

    #[test]
    fn full_matrix_block() {
        assert_eq!(dims_of(Fixture::Full(4)), vec![(4, 1)]);
    }

    #[test]
    fn permutation_blocks() {
        assert_eq!(dims_of(Fixture::Permutation { d: 2, n: 2 }), vec![(1, 1), (1, 3)]);
        assert_eq!(dims_of(Fixture::Permutation { d: 2, n: 3 }), vec![(1, 4), (2, 2)]);
    }

    #[test]
    fn expectation_is_idempotent_and_fixes_algebra() {
        let alg = Fixture::Permutation { d: 2, n: 2 }.algebra().unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        let dec = decompose(&alg, &mut rng).unwrap();
        let a = alg.random_element(&mut rng);
        assert!((dec.conditional_expectation(&a) - &a).norm() < 1e-10);
        let m = crate::linalg::random_hermitian(4, &mut rng);
        let e = dec.conditional_expectation(&m);
        assert!((dec.conditional_expectation(&e) - &e).norm() < 1e-12);
        assert!(alg.contains(&e, 1e-9));
    }

    #[test]
    fn closure_violation_detected() {
        let mut e01 = CMat::zeros(2, 2);
        e01[(0, 1)] = C64::new(1.0, 0.0);
        let alg = AlgebraBasis::span(vec![2], &[CMat::identity(2, 2), e01]).unwrap();
        assert!(matches!(
            decompose(&alg, &mut RngStream::new(1, 0).rng()),
            Err(Error::ClosureViolation { .. })
        ));
    }
}
