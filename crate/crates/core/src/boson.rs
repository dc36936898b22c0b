//! Truncated bosonic Fock sectors, passive Gaussian unitaries, gauge-invariant
//! Gaussian states and the sector-wise purification channel.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{commutant_of, decompose};
use crate::error::{Error, Result};
use crate::linalg::{
    haar_unitary, psd_sqrt, trace_distance, CMat, CVec, DenseOperator, MatrixMeanEstimator, Rng64, RngStream, C64,
};
use crate::purification::{BlockInfo, PurificationChannel};

/// Largest sector dimension [`boson_purify_channel`] will decompose.
pub const SECTOR_BUDGET: usize = 20;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `Sym^k(C^m)` in the occupation basis `{x : |x| = k}`, lexicographically ordered.
#[derive(Clone, Debug)]
pub struct FockSectorSpace {
    m: usize,
    k: usize,
    basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

fn compositions(m: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == m - 1 {
        let used: usize = prefix.iter().sum();
        let mut x = prefix.clone();
        x.push(k - used);
        out.push(x);
        return;
    }
    let used: usize = prefix.iter().sum();
    for v in 0..=(k - used) {
        prefix.push(v);
        compositions(m, k, prefix, out);
        prefix.pop();
    }
}

impl FockSectorSpace {
    pub fn new(m: usize, k: usize) -> Self {
        assert!(m >= 1, "need at least one mode");
        let mut basis = vec![];
        compositions(m, k, &mut vec![], &mut basis);
        let index = basis.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        Self { m, k, basis, index }
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn particles(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `C(k+m−1, m−1)`.
    pub fn expected_dim(m: usize, k: usize) -> usize {
        binomial(k + m - 1, m - 1)
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn index_of(&self, x: &[usize]) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// `a_j† a_l` restricted to the sector.
    pub fn hopping(&self, j: usize, l: usize) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for (col, y) in self.basis.iter().enumerate() {
            if y[l] == 0 {
                continue;
            }
            let mut x = y.clone();
            x[l] -= 1;
            x[j] += 1;
            let amp = ((y[l] * x[j]) as f64).sqrt();
            out[(self.index[&x], col)] += C64::new(amp, 0.0);
        }
        out
    }
}

/// Ryser's formula.
pub fn permanent(a: &CMat) -> C64 {
    let n = a.nrows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for subset in 1u64..(1 << n) {
        let mut prod = C64::new(1.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                if subset >> j & 1 == 1 {
                    row += a[(i, j)];
                }
            }
            prod *= row;
        }
        let sign = if (n - subset.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// `Sym^k(A)`: the restriction of `A^{⊗k}` to the symmetric subspace. Column
/// `y` is `∏_l (Σ_i A_il a_i†)^{y_l} |0⟩ / √(y!)`, expanded in monomials.
pub fn symmetric_power(a: &CMat, space: &FockSectorSpace) -> CMat {
    let (m, d) = (space.m, space.dim());
    let mut out = CMat::zeros(d, d);
    for (col, y) in space.basis.iter().enumerate() {
        let mut poly: HashMap<Vec<usize>, C64> = HashMap::from([(vec![0; m], C64::new(1.0, 0.0))]);
        for (l, &yl) in y.iter().enumerate() {
            for _ in 0..yl {
                let mut next: HashMap<Vec<usize>, C64> = HashMap::with_capacity(poly.len() * m);
                for (mono, coeff) in &poly {
                    for i in 0..m {
                        if a[(i, l)] == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut key = mono.clone();
                        key[i] += 1;
                        *next.entry(key).or_default() += coeff * a[(i, l)];
                    }
                }
                poly = next;
            }
        }
        let y_norm: f64 = y.iter().map(|&c| factorial(c)).product::<f64>().sqrt();
        for (x, coeff) in poly {
            let x_norm: f64 = x.iter().map(|&c| factorial(c)).product::<f64>().sqrt();
            out[(space.index[&x], col)] = coeff * (x_norm / y_norm);
        }
    }
    out
}

/// Passive Gaussian unitary `U_O` on the `k`-particle sector.
pub fn passive_unitary_sector(o: &CMat, k: usize) -> Result<DenseOperator> {
    let m = o.nrows();
    let residual = (o.adjoint() * o - CMat::identity(m, m)).norm();
    if residual > 1e-10 {
        return Err(Error::NonUnitary { residual });
    }
    let space = FockSectorSpace::new(m, k);
    Ok(DenseOperator::from_matrix(symmetric_power(o, &space)))
}

/// Isometry `Sym^k(C^m) → (C^m)^{⊗k}` sending `|x⟩` to its normalized symmetrization.
pub fn symmetrizer_isometry(space: &FockSectorSpace) -> CMat {
    let (m, k) = (space.m, space.k);
    let total = m.pow(k as u32);
    let mut out = CMat::zeros(total, space.dim());
    for t in 0..total {
        let mut x = vec![0; m];
        let mut rest = t;
        for _ in 0..k {
            x[rest % m] += 1;
            rest /= m;
        }
        out[(t, space.index[&x])] = C64::new(1.0, 0.0);
    }
    for c in 0..space.dim() {
        let norm = out.column(c).norm();
        out.column_mut(c).unscale_mut(norm);
    }
    out
}

/// `e^{−H}/Z` for `H = Σ β_j b_j† b_j` in the modes `b = O† a`, kept sector by sector up to `K`.
#[derive(Clone, Debug)]
pub struct GaugeInvariantGaussian {
    betas: Vec<f64>,
    o: CMat,
    k_max: usize,
    d: CMat,
    log_z: f64,
    blocks: Vec<DenseOperator>,
}

impl GaugeInvariantGaussian {
    pub fn new(betas: &[f64], o: &CMat, k_max: usize, truncation_tol: f64) -> Result<Self> {
        let m = betas.len();
        if m == 0 || betas.iter().any(|&b| !b.is_finite() || b <= 0.0) {
            return Err(Error::InvalidArgument("betas must be positive".into()));
        }
        if o.nrows() != m || o.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: o.nrows() });
        }
        let residual = (o.adjoint() * o - CMat::identity(m, m)).norm();
        if residual > 1e-10 {
            return Err(Error::NonUnitary { residual });
        }
        let diag = CVec::from_iterator(m, betas.iter().map(|b| C64::new((-b).exp(), 0.0)));
        let d = o * CMat::from_diagonal(&diag) * o.adjoint();
        let log_z: f64 = betas.iter().map(|b| -(1.0 - (-b).exp()).ln()).sum();
        let scale = (-log_z).exp();
        let blocks: Vec<DenseOperator> = (0..=k_max)
            .map(|k| DenseOperator::from_matrix(symmetric_power(&d, &FockSectorSpace::new(m, k)) * C64::new(scale, 0.0)))
            .collect();
        let state = Self { betas: betas.to_vec(), o: o.clone(), k_max, d, log_z, blocks };
        let tail = state.tail_weight();
        if tail > truncation_tol {
            return Err(Error::TruncationTolerance { tail, tol: truncation_tol });
        }
        Ok(state)
    }

    /// Smallest `K` whose captured weight is at least `1 − tol`.
    pub fn default_cutoff(betas: &[f64], tol: f64) -> usize {
        let id = CMat::identity(betas.len(), betas.len());
        (0..200)
            .find(|&k| {
                GaugeInvariantGaussian::new(betas, &id, k, f64::INFINITY).map(|s| s.tail_weight() <= tol).unwrap_or(false)
            })
            .unwrap_or(200)
    }

    pub fn modes(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn mode_unitary(&self) -> &CMat {
        &self.o
    }

    pub fn cutoff(&self) -> usize {
        self.k_max
    }

    pub fn blocks(&self) -> &[DenseOperator] {
        &self.blocks
    }

    pub fn sector_weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace().re).collect()
    }

    pub fn captured_weight(&self) -> f64 {
        self.sector_weights().iter().sum()
    }

    pub fn tail_weight(&self) -> f64 {
        (1.0 - self.captured_weight()).max(0.0)
    }

    /// Sector `k` of `σ^{⊗n}` on `Sym^k(C^{nm})`, copies major.
    pub fn copies_block(&self, n: usize, k: usize) -> DenseOperator {
        let m = self.modes();
        let mut big = CMat::zeros(n * m, n * m);
        for c in 0..n {
            big.view_mut((c * m, c * m), (m, m)).copy_from(&self.d);
        }
        let scale = (-(n as f64) * self.log_z).exp();
        DenseOperator::from_matrix(symmetric_power(&big, &FockSectorSpace::new(n * m, k)) * C64::new(scale, 0.0))
    }
}

/// `Σ_copies a_{c,j}† a_{c,l}` on the `k`-particle sector of `n` copies of `m` modes.
pub fn copy_summed_hopping(space: &FockSectorSpace, m: usize, n: usize) -> Vec<CMat> {
    let d = space.dim();
    let mut out = vec![];
    for j in 0..m {
        for l in 0..m {
            let mut g = CMat::zeros(d, d);
            for c in 0..n {
                g += space.hopping(c * m + j, c * m + l);
            }
            out.push(g);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BosonSector {
    pub k: usize,
    pub space: FockSectorSpace,
    pub channel: PurificationChannel,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorInfo {
    pub k: usize,
    pub dim: usize,
    pub blocks: Vec<BlockInfo>,
}

/// Measure the total particle number `k ≤ K`, then apply the sector channel `P_k`.
#[derive(Clone, Debug)]
pub struct BosonChannel {
    m: usize,
    n: usize,
    sectors: Vec<BosonSector>,
}

pub fn boson_purify_channel(m: usize, n: usize, k_max: usize, rng: &mut Rng64) -> Result<BosonChannel> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("need m ≥ 1 and n ≥ 1".into()));
    }
    let largest = FockSectorSpace::expected_dim(n * m, k_max);
    if largest > SECTOR_BUDGET {
        return Err(Error::BudgetExceeded(format!("sector k={k_max} has dimension {largest} (limit {SECTOR_BUDGET})")));
    }
    let seed: u64 = rng.random();
    let sectors = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(seed, k as u64).rng();
            let space = FockSectorSpace::new(n * m, k);
            let alg = commutant_of(&[space.dim()], &copy_summed_hopping(&space, m, n))?;
            let channel = PurificationChannel::build(decompose(&alg, &mut rng)?, None)?;
            Ok(BosonSector { k, space, channel })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BosonChannel { m, n, sectors })
}

/// `(√ρ ⊗ I) Σ_x |xx⟩` without normalization.
fn sector_purification(block: &DenseOperator) -> CVec {
    let d = block.dim();
    let root = psd_sqrt(block.matrix());
    CVec::from_fn(d * d, |i, _| root[(i / d, i % d)])
}

impl BosonChannel {
    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn sectors(&self) -> &[BosonSector] {
        &self.sectors
    }

    pub fn metadata(&self) -> Vec<SectorInfo> {
        self.sectors
            .iter()
            .map(|s| SectorInfo { k: s.k, dim: s.space.dim(), blocks: s.channel.block_info() })
            .collect()
    }

    fn input_blocks(&self, state: &GaugeInvariantGaussian) -> Result<Vec<DenseOperator>> {
        if state.modes() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, actual: state.modes() });
        }
        Ok(self.sectors.iter().map(|s| state.copies_block(self.n, s.k)).collect())
    }

    /// `P_k[Π_k σ^{⊗n} Π_k]` for each sector.
    pub fn apply(&self, state: &GaugeInvariantGaussian) -> Result<Vec<DenseOperator>> {
        let blocks = self.input_blocks(state)?;
        self.sectors.iter().zip(&blocks).map(|(s, b)| s.channel.apply(b)).collect()
    }

    /// Weight of `σ^{⊗n}` above the cutoff.
    pub fn tail_weight(&self, state: &GaugeInvariantGaussian) -> Result<f64> {
        let blocks = self.input_blocks(state)?;
        Ok((1.0 - blocks.iter().map(|b| b.trace().re).sum::<f64>()).max(0.0))
    }

    /// Largest sector trace distance between `P_k[ρ_k]` and `(I ⊗ E_{A_kᵀ})[ψ_k ψ_k†]`.
    pub fn sector_identity_residual(&self, state: &GaugeInvariantGaussian) -> Result<f64> {
        let blocks = self.input_blocks(state)?;
        let mut worst = 0.0f64;
        for (s, b) in self.sectors.iter().zip(&blocks) {
            let out = s.channel.apply(b)?;
            let psi = sector_purification(b);
            let proj = DenseOperator::new(out.dims().to_vec(), &psi * psi.adjoint())?;
            let target = s.channel.reference_expectation(&proj)?;
            worst = worst.max(trace_distance(out.matrix(), target.matrix()));
        }
        Ok(worst)
    }

    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut offsets = vec![];
        let mut total = 0;
        for s in &self.sectors {
            offsets.push(total);
            total += s.space.dim() * s.space.dim();
        }
        (offsets, total)
    }

    /// The sector outputs placed block-diagonally on `⊕_k H_k ⊗ H_k'`.
    pub fn assemble(&self, outputs: &[DenseOperator]) -> CMat {
        let (offsets, total) = self.offsets();
        let mut out = CMat::zeros(total, total);
        for (o, block) in offsets.iter().zip(outputs) {
            let d = block.dim();
            out.view_mut((*o, *o), (d, d)).copy_from(block.matrix());
        }
        out
    }

    /// Monte-Carlo estimate of `∫ (I ⊗ U_O^{⊗n}) ψ_std (I ⊗ U_O^{⊗n})† dO` on
    /// `⊕_k H_k ⊗ H_k'`, `O` Haar on U(m).
    pub fn twirl_estimate(
        &self,
        state: &GaugeInvariantGaussian,
        samples: usize,
        rng: &mut Rng64,
    ) -> Result<(CMat, MatrixMeanEstimator)> {
        let blocks = self.input_blocks(state)?;
        let psis: Vec<CMat> = blocks
            .iter()
            .map(|b| {
                let d = b.dim();
                let v = sector_purification(b);
                CMat::from_fn(d, d, |x, y| v[x * d + y])
            })
            .collect();
        let (offsets, total) = self.offsets();
        let mut est = MatrixMeanEstimator::new(total, 20);
        let (m, n) = (self.m, self.n);
        for _ in 0..samples {
            let o = haar_unitary(m, rng);
            let mut big = CMat::zeros(n * m, n * m);
            for c in 0..n {
                big.view_mut((c * m, c * m), (m, m)).copy_from(&o);
            }
            let mut v = CVec::zeros(total);
            for ((s, psi), off) in self.sectors.iter().zip(&psis).zip(&offsets) {
                let d = s.space.dim();
                let u = symmetric_power(&big, &s.space);
                let out = psi * u.transpose();
                for i in 0..d * d {
                    v[off + i] = out[(i / d, i % d)];
                }
            }
            est.push_rank1(&v);
        }
        Ok((est.mean(), est))
    }
}
