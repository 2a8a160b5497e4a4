//! Operators at finite truncation.
//!
//! A quasi-radial Toeplitz operator acts on `H_kappa` as the scalar
//! `gamma_a(kappa)`. A pseudo-homogeneous operator on group `j` acts on
//! `H_kappa` as `I ⊗ T_j|_{H_{j, kappa_j}} ⊗ I`, where the block
//! `T_j|_{H_{j,d}}` lives in the unweighted Bergman space of `B^{k_j}` and does
//! not depend on `lambda` or on the other groups. Block entries in the
//! orthonormal monomial basis are
//!
//! ```text
//! <T e_alpha, e_beta> = (d + k - 1)! / sqrt(alpha! beta!)
//!     · ∫_{Δ_{k-1}} ĉ(sqrt(s), beta - alpha) ∏_{l<=k} s_l^{(alpha_l + beta_l)/2} ds
//! ```
//!
//! with `s_k = 1 - Σ s`. Matrices are indexed `[(row beta, column alpha)]`.
//! Fourier modes are read in `Z^k` with zero sum and `alpha + p >= 0`.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::lattice::{
    block_dim, enumerate_block_indices, ln_monomial_norm_sq, GlobalBasis, MultiIndex, PartitionConfig,
};
use crate::par::map_collect;
use crate::quad::{fourier_from_samples, torus_samples, SimplexRule};
use crate::special::{ln_factorial, ln_gamma};
use crate::symbols::{PseudoHomogeneousSymbol, QuasiRadialSymbol};
use crate::{CMatrix, Error, Result, C64};

/// Quadrature orders. Block rules use `block_order + d` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Gauss–Jacobi order per axis for quasi-radial eigenvalues.
    pub gamma_order: usize,
    /// Base angular order per axis for block entries.
    pub block_order: usize,
    /// Torus points per axis for sampled Fourier coefficients.
    pub torus_grid: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { gamma_order: 32, block_order: 24, torus_grid: 64 }
    }
}

impl QuadConfig {
    /// All orders doubled, for verification runs.
    pub fn doubled(&self) -> Self {
        QuadConfig {
            gamma_order: 2 * self.gamma_order,
            block_order: 2 * self.block_order,
            torus_grid: 2 * self.torus_grid,
        }
    }

    pub fn block_order_for(&self, d: u32) -> usize {
        self.block_order + d as usize
    }

    /// Torus grid for a block of degree `d`: large enough that no two modes
    /// realizable in the block alias.
    pub fn torus_grid_for(&self, d: u32) -> usize {
        self.torus_grid.max(2 * d as usize + 2)
    }

    fn validate(&self) -> Result<()> {
        if self.gamma_order == 0 || self.block_order == 0 || self.torus_grid == 0 {
            return Err(Error::Config("quadrature orders must be positive".into()));
        }
        Ok(())
    }
}

/// `gamma_a(kappa)`, the eigenvalue of `T_a` on `H_kappa`:
///
/// ```text
/// Γ(n+|κ|+λ+1) / (Γ(λ+1) ∏ Γ(κ_j+k_j)) ∫_{Δ_m} a(sqrt(x)) (1-Σx)^λ ∏ x_j^{κ_j+k_j-1} dx
/// ```
///
/// The prefactor is the reciprocal of the Dirichlet mass, so the Gauss–Jacobi
/// rule carrying that weight reduces the integral to a normalized sum.
pub fn gamma_quasi_radial(a: &QuasiRadialSymbol, cfg: &PartitionConfig, kappa: &[u32], order: usize) -> Result<C64> {
    if kappa.len() != cfg.m() {
        return Err(Error::OutOfRange(format!("kappa {kappa:?} must have {} entries", cfg.m())));
    }
    if let Some(v) = a.as_constant() {
        return Ok(v);
    }
    let mut exps: Vec<f64> = kappa.iter().zip(cfg.k()).map(|(&x, &k)| (x + k) as f64 - 1.0).collect();
    exps.push(cfg.lambda());
    let rule = SimplexRule::gauss_jacobi(cfg.m(), order, &exps)?;
    let w = rule.relative_weights();
    let mut acc = C64::new(0.0, 0.0);
    let mut r = vec![0.0; cfg.m()];
    for (i, wi) in w.iter().enumerate() {
        for (rj, x) in r.iter_mut().zip(rule.node(i)) {
            *rj = x.sqrt();
        }
        let v = a.eval(&r)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { context: format!("quasi-radial symbol at r = {r:?}") });
        }
        acc += v * *wi;
    }
    Ok(acc)
}

/// Magic bytes of a block cache file.
pub const CACHE_MAGIC: [u8; 8] = *b"TPLZBLK\0";
/// Cache schema version.
pub const CACHE_SCHEMA: u32 = 1;

/// The matrix of `T_j` on the degree-`d` homogeneous polynomials of
/// `B^{k_j}`, in the orthonormal monomial basis in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub group: usize,
    pub kj: u32,
    pub degree: u32,
    pub order: u32,
    pub matrix: CMatrix,
}

impl BlockMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Serialized cache record: magic, schema, symbol hash, `j`, `d`, order,
    /// dimension, then row-major `(re, im)` pairs, all little-endian.
    pub fn to_bytes(&self, hash: &[u8; 32]) -> Vec<u8> {
        let n = self.dim();
        let mut out = Vec::with_capacity(8 + 4 + 32 + 16 + 16 * n * n);
        out.extend_from_slice(&CACHE_MAGIC);
        out.extend_from_slice(&CACHE_SCHEMA.to_le_bytes());
        out.extend_from_slice(hash);
        out.extend_from_slice(&(self.group as u32).to_le_bytes());
        out.extend_from_slice(&self.degree.to_le_bytes());
        out.extend_from_slice(&self.order.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for i in 0..n {
            for j in 0..n {
                let v = self.matrix[(i, j)];
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    /// Parses a cache record, checking magic, schema, hash and size.
    pub fn from_bytes(bytes: &[u8], kj: u32, expected_hash: &[u8; 32]) -> Result<Self> {
        let bad = |why: &str| Error::Numerical(format!("corrupt block cache record: {why}"));
        let header = 8 + 4 + 32 + 16;
        if bytes.len() < header || bytes[..8] != CACHE_MAGIC {
            return Err(bad("magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        if u32_at(8) != CACHE_SCHEMA {
            return Err(bad("schema"));
        }
        if bytes[12..44] != expected_hash[..] {
            return Err(bad("hash"));
        }
        let (group, degree, order, n) = (u32_at(44) as usize, u32_at(48), u32_at(52), u32_at(56) as usize);
        if n != block_dim(kj, degree) || bytes.len() != header + 16 * n * n {
            return Err(bad("size"));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            let o = header + 16 * (i * n + j);
            C64::new(f64_at(o), f64_at(o + 8))
        });
        Ok(BlockMatrix { group, kj, degree, order, matrix })
    }
}

/// Computes `T_j|_{H_{j,d}}` without caching.
pub fn assemble_block(c: &PseudoHomogeneousSymbol, d: u32, q: &QuadConfig) -> Result<BlockMatrix> {
    q.validate()?;
    let kj = c.kj();
    let basis = enumerate_block_indices(kj as u32, d);
    let n = basis.len();
    let order = q.block_order_for(d);
    if let Some(v) = c.as_constant() {
        return Ok(BlockMatrix {
            group: c.group(),
            kj: kj as u32,
            degree: d,
            order: order as u32,
            matrix: CMatrix::identity(n, n) * v,
        });
    }

    let support = c.declared_support();
    let mut modes: BTreeSet<Vec<i32>> = BTreeSet::new();
    struct Pair {
        row: usize,
        col: usize,
        mode: Vec<i32>,
        ln_pref: f64,
        exps: Vec<f64>,
    }
    let ln_top = ln_factorial(d + kj as u32 - 1);
    let mut pairs = Vec::new();
    for col in 0..n {
        let alpha = basis.get(col);
        for row in 0..n {
            let beta = basis.get(row);
            let p: Vec<i32> = beta.iter().zip(alpha).map(|(&b, &a)| b as i32 - a as i32).collect();
            if support.as_ref().is_some_and(|s| !s.contains(&p)) {
                continue;
            }
            let ln_pref = ln_top
                - 0.5 * alpha.iter().chain(beta).map(|&x| ln_factorial(x)).sum::<f64>();
            let exps = alpha.iter().zip(beta).map(|(&a, &b)| 0.5 * (a + b) as f64).collect();
            modes.insert(p.clone());
            pairs.push(Pair { row, col, mode: p, ln_pref, exps });
        }
    }
    let modes: Vec<Vec<i32>> = modes.into_iter().collect();
    let mode_index: HashMap<&[i32], usize> = modes.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();

    let mut matrix = CMatrix::zeros(n, n);
    if pairs.is_empty() {
        return Ok(BlockMatrix { group: c.group(), kj: kj as u32, degree: d, order: order as u32, matrix });
    }
    let rule = SimplexRule::angular(kj - 1, order, &vec![0.0; kj])?;
    let grid = q.torus_grid_for(d);
    let nodes: Vec<usize> = (0..rule.len()).collect();
    let per_node: Vec<Result<(Vec<f64>, Vec<C64>)>> = map_collect(&nodes, |&i| {
        let mut s: Vec<f64> = rule.node(i).to_vec();
        s.push(rule.remainder(i));
        let sigma: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
        let coeffs = c.fourier_coefficients(&sigma, &modes, grid)?;
        Ok((s.iter().map(|x| x.ln()).collect(), coeffs))
    });
    let mut acc = vec![C64::new(0.0, 0.0); pairs.len()];
    for (i, data) in per_node.into_iter().enumerate() {
        let (ln_s, coeffs) = data?;
        let w = rule.weight(i);
        for (a, pair) in acc.iter_mut().zip(&pairs) {
            let cf = coeffs[mode_index[pair.mode.as_slice()]];
            if cf == C64::new(0.0, 0.0) {
                continue;
            }
            let ln_mono: f64 = pair.exps.iter().zip(&ln_s).map(|(e, l)| e * l).sum();
            *a += cf * (w * (pair.ln_pref + ln_mono).exp());
        }
    }
    for (pair, v) in pairs.iter().zip(acc) {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { context: format!("block entry ({}, {}) at degree {d}", pair.row, pair.col) });
        }
        matrix[(pair.row, pair.col)] = v;
    }
    Ok(BlockMatrix { group: c.group(), kj: kj as u32, degree: d, order: order as u32, matrix })
}

/// Persistent storage for blocks, keyed by the symbol's canonical key.
pub trait BlockStore: Send + Sync {
    fn load(&self, key: &str, kj: u32, degree: u32) -> Option<BlockMatrix>;
    fn save(&self, key: &str, block: &BlockMatrix);
}

/// Cache statistics of an [`Assembler`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub memory_hits: usize,
    pub store_hits: usize,
    pub computed: usize,
}

/// Block assembly with in-memory memoization and an optional persistent
/// store.
pub struct Assembler {
    quad: QuadConfig,
    memo: Mutex<HashMap<(String, u32), Arc<BlockMatrix>>>,
    store: Option<Arc<dyn BlockStore>>,
    memory_hits: AtomicUsize,
    store_hits: AtomicUsize,
    computed: AtomicUsize,
}

impl std::fmt::Debug for Assembler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Assembler").field("quad", &self.quad).field("stats", &self.stats()).finish()
    }
}

impl Assembler {
    pub fn new(quad: QuadConfig) -> Self {
        Assembler {
            quad,
            memo: Mutex::new(HashMap::new()),
            store: None,
            memory_hits: AtomicUsize::new(0),
            store_hits: AtomicUsize::new(0),
            computed: AtomicUsize::new(0),
        }
    }

    pub fn with_store(mut self, store: Arc<dyn BlockStore>) -> Self {
        self.store = Some(store);
        self
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            memory_hits: self.memory_hits.load(Ordering::Relaxed),
            store_hits: self.store_hits.load(Ordering::Relaxed),
            computed: self.computed.load(Ordering::Relaxed),
        }
    }

    /// Key under which blocks of `c` are memoized and stored.
    pub fn block_key(&self, c: &PseudoHomogeneousSymbol) -> String {
        format!(
            "{};block_order={};torus_grid={}",
            c.canonical_key(),
            self.quad.block_order,
            self.quad.torus_grid
        )
    }

    pub fn block(&self, c: &PseudoHomogeneousSymbol, d: u32) -> Result<Arc<BlockMatrix>> {
        let key = self.block_key(c);
        if let Some(b) = self.memo.lock().expect("memo lock").get(&(key.clone(), d)) {
            self.memory_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(b.clone());
        }
        let block = match self.store.as_ref().and_then(|s| s.load(&key, c.kj() as u32, d)) {
            Some(mut b) => {
                self.store_hits.fetch_add(1, Ordering::Relaxed);
                b.group = c.group();
                b
            }
            None => {
                let b = assemble_block(c, d, &self.quad)?;
                self.computed.fetch_add(1, Ordering::Relaxed);
                if let Some(s) = &self.store {
                    s.save(&key, &b);
                }
                b
            }
        };
        let block = Arc::new(block);
        self.memo.lock().expect("memo lock").insert((key, d), block.clone());
        Ok(block)
    }

    /// Blocks for `d = 0..=dmax`, computed in parallel.
    pub fn blocks(&self, c: &PseudoHomogeneousSymbol, dmax: u32) -> Result<Vec<Arc<BlockMatrix>>> {
        let ds: Vec<u32> = (0..=dmax).collect();
        map_collect(&ds, |&d| self.block(c, d)).into_iter().collect()
    }

    pub fn gamma(&self, a: &QuasiRadialSymbol, cfg: &PartitionConfig, kappa: &[u32]) -> Result<C64> {
        gamma_quasi_radial(a, cfg, kappa, self.quad.gamma_order)
    }

    /// `gamma_a` on every `kappa` of the truncation.
    pub fn gamma_table(&self, a: &QuasiRadialSymbol, basis: &GlobalBasis) -> Result<Vec<C64>> {
        map_collect(basis.kappas(), |k| self.gamma(a, basis.cfg(), k)).into_iter().collect()
    }

    /// Per-group block sequences of the operator product of the given
    /// symbols on that group, for `d = 0..=cap`. Groups without symbols get
    /// `None`.
    pub fn group_blocks(
        &self,
        cs: &[&PseudoHomogeneousSymbol],
        basis: &GlobalBasis,
    ) -> Result<Vec<Option<Vec<CMatrix>>>> {
        let cfg = basis.cfg();
        for c in cs {
            check_symbol_fits(c, cfg)?;
        }
        let mut out = Vec::with_capacity(cfg.m());
        for j in 0..cfg.m() {
            let mine: Vec<&&PseudoHomogeneousSymbol> = cs.iter().filter(|c| c.group() == j).collect();
            if mine.is_empty() {
                out.push(None);
                continue;
            }
            let mut seq: Option<Vec<CMatrix>> = None;
            for c in mine {
                let bl = self.blocks(c, basis.cap())?;
                seq = Some(match seq {
                    None => bl.iter().map(|b| b.matrix.clone()).collect(),
                    Some(prev) => prev.iter().zip(&bl).map(|(p, b)| p * &b.matrix).collect(),
                });
            }
            out.push(seq);
        }
        Ok(out)
    }

    /// `T_a ∏ T_c` on the truncation. With at most one symbol per group this
    /// is `T_{a ∏ c}`.
    pub fn truncated(
        &self,
        a: Option<&QuasiRadialSymbol>,
        cs: &[&PseudoHomogeneousSymbol],
        basis: &Arc<GlobalBasis>,
    ) -> Result<TruncatedOperator> {
        let groups = self.group_blocks(cs, basis)?;
        let gammas = match a {
            Some(a) => Some(self.gamma_table(a, basis)?),
            None => None,
        };
        let positions: Vec<usize> = (0..basis.kappas().len()).collect();
        let blocks = map_collect(&positions, |&pos| {
            let kappa = &basis.kappas()[pos];
            let mut m = tensor_block(basis.cfg(), kappa, |j, d| groups[j].as_ref().map(|s| &s[d as usize]));
            if let Some(g) = &gammas {
                m *= g[pos];
            }
            m
        });
        let mut label = String::new();
        if let Some(a) = a {
            label.push_str(&format!("T_a[{:?}]", a.spec()));
        }
        for c in cs {
            label.push_str(&format!("T_c{}[{:?}]", c.group() + 1, c.spec().profile));
        }
        if label.is_empty() {
            label.push('I');
        }
        TruncatedOperator::from_blocks(basis.clone(), blocks, label)
    }
}

fn check_symbol_fits(c: &PseudoHomogeneousSymbol, cfg: &PartitionConfig) -> Result<()> {
    if c.group() >= cfg.m() {
        return Err(Error::Config(format!("symbol refers to group {} but there are {} groups", c.group() + 1, cfg.m())));
    }
    if c.kj() != cfg.kj(c.group()) as usize {
        return Err(Error::Config(format!(
            "symbol on group {} was built for k_j = {} but the partition has {}",
            c.group() + 1,
            c.kj(),
            cfg.kj(c.group())
        )));
    }
    Ok(())
}

/// `⊗_j B_j(kappa_j)` in the global tensor order (group 1 slowest); groups
/// for which `block` returns `None` contribute identities.
pub fn tensor_block<'a, F>(cfg: &PartitionConfig, kappa: &[u32], block: F) -> CMatrix
where
    F: Fn(usize, u32) -> Option<&'a CMatrix>,
{
    let mut out = CMatrix::identity(1, 1);
    for (j, &d) in kappa.iter().enumerate() {
        out = match block(j, d) {
            Some(b) => out.kronecker(b),
            None => {
                let n = block_dim(cfg.kj(j), d);
                out.kronecker(&CMatrix::identity(n, n))
            }
        };
    }
    out
}

/// A block-diagonal operator on `⊕_{|kappa| <= cap} H_kappa`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    basis: Arc<GlobalBasis>,
    blocks: Vec<CMatrix>,
    label: String,
}

impl TruncatedOperator {
    pub fn from_blocks(basis: Arc<GlobalBasis>, blocks: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        if blocks.len() != basis.kappas().len() {
            return Err(Error::OutOfRange("one block per kappa is required".into()));
        }
        for (pos, b) in blocks.iter().enumerate() {
            let n = basis.range(pos).len();
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::OutOfRange(format!("block {pos} must be {n}x{n}")));
            }
        }
        Ok(TruncatedOperator { basis, blocks, label: label.into() })
    }

    /// Builds blocks from a function of `(position, kappa)`.
    pub fn from_fn<F>(basis: Arc<GlobalBasis>, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(usize, &[u32]) -> CMatrix + Sync + Send,
    {
        let positions: Vec<usize> = (0..basis.kappas().len()).collect();
        let blocks = map_collect(&positions, |&p| f(p, &basis.kappas()[p]));
        Self::from_blocks(basis, blocks, label)
    }

    pub fn identity(basis: Arc<GlobalBasis>) -> Self {
        let blocks = (0..basis.kappas().len())
            .map(|p| {
                let n = basis.range(p).len();
                CMatrix::identity(n, n)
            })
            .collect();
        TruncatedOperator { basis, blocks, label: "I".into() }
    }

    pub fn zero(basis: Arc<GlobalBasis>) -> Self {
        Self::identity(basis).scale(C64::new(0.0, 0.0))
    }

    /// The diagonal operator `D_gamma`.
    pub fn diagonal<F>(basis: Arc<GlobalBasis>, gamma: F) -> Self
    where
        F: Fn(&[u32]) -> C64,
    {
        let blocks = (0..basis.kappas().len())
            .map(|p| {
                let n = basis.range(p).len();
                CMatrix::identity(n, n) * gamma(&basis.kappas()[p])
            })
            .collect();
        TruncatedOperator { basis, blocks, label: "D_gamma".into() }
    }

    pub fn basis(&self) -> &Arc<GlobalBasis> {
        &self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, pos: usize) -> &CMatrix {
        &self.blocks[pos]
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (pos, b) in self.blocks.iter().enumerate() {
            let r = self.basis.range(pos);
            out.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(b);
        }
        out
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix, label: String) -> Self {
        assert!(
            Arc::ptr_eq(&self.basis, &other.basis) || self.basis.kappas() == other.basis.kappas(),
            "operators live on different truncations"
        );
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        TruncatedOperator { basis: self.basis.clone(), blocks, label }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b, format!("({})({})", self.label, other.label))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b, format!("({})+({})", self.label, other.label))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b, format!("({})-({})", self.label, other.label))
    }

    pub fn scale(&self, s: C64) -> Self {
        TruncatedOperator {
            basis: self.basis.clone(),
            blocks: self.blocks.iter().map(|b| b * s).collect(),
            label: format!("{s}·({})", self.label),
        }
    }

    pub fn powi(&self, k: u32) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut out = CMatrix::identity(b.nrows(), b.ncols());
                for _ in 0..k {
                    out = &out * b;
                }
                out
            })
            .collect();
        TruncatedOperator { basis: self.basis.clone(), blocks, label: format!("({})^{k}", self.label) }
    }

    /// `[self, other] = self·other - other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `M·self` for a diagonal 0/1 mask `M`.
    pub fn masked(&self, mask: &ProjectionMask) -> Self {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(pos, b)| {
                let r = self.basis.range(pos);
                let mut out = b.clone();
                for (i, gi) in r.enumerate() {
                    if !mask.mask[gi] {
                        out.row_mut(i).fill(C64::new(0.0, 0.0));
                    }
                }
                out
            })
            .collect();
        TruncatedOperator { basis: self.basis.clone(), blocks, label: format!("{}·({})", mask.kind, self.label) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Largest singular value over all blocks.
    pub fn spectral_norm(&self) -> f64 {
        self.blocks.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Builds the full matrix of `T_{a ∏ c_j}` entry by entry, without using the
/// block structure: Fourier coefficients are taken on the full torus at every
/// mode `beta_j - alpha_j`, including those with nonzero sum, and the radial
/// integral runs over `Δ_m` with exponents `(|alpha_j| + |beta_j|)/2 + k_j - 1`.
/// Slow; meant as an independent reference.
pub fn reference_matrix(
    a: Option<&QuasiRadialSymbol>,
    cs: &[&PseudoHomogeneousSymbol],
    basis: &GlobalBasis,
    q: &QuadConfig,
) -> Result<CMatrix> {
    q.validate()?;
    let cfg = basis.cfg();
    let m = cfg.m();
    let mut per_group: Vec<Option<&PseudoHomogeneousSymbol>> = vec![None; m];
    for c in cs {
        check_symbol_fits(c, cfg)?;
        if per_group[c.group()].replace(c).is_some() {
            return Err(Error::Config("the reference route takes at most one symbol per group".into()));
        }
    }
    let n = basis.dim();
    let alphas: Vec<MultiIndex> = (0..n).map(|i| basis.alpha_at(i)).collect();
    let ln_norms: Vec<f64> = alphas.iter().map(|al| ln_monomial_norm_sq(al, cfg)).collect::<Result<_>>()?;
    let cap = basis.cap();

    // Group factors ∫ ĉ_j(sqrt σ, β_j - α_j) ∏ σ^{(α_j+β_j)/2} dσ for every pair of portions.
    let mut group_tables: Vec<HashMap<(Vec<u32>, Vec<u32>), C64>> = Vec::with_capacity(m);
    for (j, cj) in per_group.iter().enumerate() {
        let kj = cfg.kj(j) as usize;
        let portions: Vec<Vec<u32>> = (0..=cap).flat_map(|d| enumerate_block_indices(kj as u32, d).indices().to_vec()).collect();
        let rule = SimplexRule::angular(kj - 1, q.block_order_for(cap), &vec![0.0; kj])?;
        let grid = q.torus_grid.max(4 * cap as usize + 2);
        // Torus samples per node, reused for every mode.
        let nodes: Vec<usize> = (0..rule.len()).collect();
        let node_data: Vec<Result<(Vec<f64>, Option<Vec<C64>>)>> = map_collect(&nodes, |&i| {
            let mut s = rule.node(i).to_vec();
            s.push(rule.remainder(i));
            let sigma: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
            let samples = match cj {
                Some(c) => Some(torus_samples(|t| c.eval(&sigma, t), kj, grid)?),
                None => None,
            };
            Ok((s.iter().map(|x| x.ln()).collect(), samples))
        });
        let node_data: Vec<(Vec<f64>, Option<Vec<C64>>)> = node_data.into_iter().collect::<Result<_>>()?;
        let mut pairs = Vec::with_capacity(portions.len() * portions.len());
        for al in &portions {
            for be in &portions {
                pairs.push((al.clone(), be.clone()));
            }
        }
        let mode_cache: Mutex<HashMap<Vec<i32>, Arc<Vec<C64>>>> = Mutex::new(HashMap::new());
        let coeffs_for = |p: &Vec<i32>| -> Arc<Vec<C64>> {
            if let Some(v) = mode_cache.lock().expect("mode cache").get(p) {
                return v.clone();
            }
            let v: Arc<Vec<C64>> = Arc::new(
                node_data
                    .iter()
                    .map(|(_, samples)| match samples {
                        Some(sm) => fourier_from_samples(sm, grid, p),
                        None if p.iter().all(|&x| x == 0) => C64::new(1.0, 0.0),
                        None => C64::new(0.0, 0.0),
                    })
                    .collect(),
            );
            mode_cache.lock().expect("mode cache").insert(p.clone(), v.clone());
            v
        };
        let values = map_collect(&pairs, |(al, be)| {
            let p: Vec<i32> = be.iter().zip(al).map(|(&b, &a)| b as i32 - a as i32).collect();
            let coeffs = coeffs_for(&p);
            let mut acc = C64::new(0.0, 0.0);
            for (i, (ln_s, _)) in node_data.iter().enumerate() {
                let ln_mono: f64 = al.iter().zip(be).zip(ln_s).map(|((&x, &y), l)| 0.5 * (x + y) as f64 * l).sum();
                acc += coeffs[i] * (rule.weight(i) * ln_mono.exp());
            }
            acc
        });
        group_tables.push(pairs.into_iter().zip(values).collect());
    }

    // Radial factor, in log-scaled form, keyed by the per-group sums |α_j| + |β_j|.
    let ln_front = ln_gamma(cfg.n() as f64 + cfg.lambda() + 1.0) - ln_gamma(cfg.lambda() + 1.0);
    let radial_cache: Mutex<HashMap<Vec<u32>, (f64, C64)>> = Mutex::new(HashMap::new());
    let radial = |sums: Vec<u32>| -> Result<(f64, C64)> {
        if let Some(v) = radial_cache.lock().expect("radial cache").get(&sums) {
            return Ok(*v);
        }
        let mut exps: Vec<f64> = sums.iter().zip(cfg.k()).map(|(&s, &k)| 0.5 * s as f64 + k as f64 - 1.0).collect();
        exps.push(cfg.lambda());
        let rule = SimplexRule::gauss_jacobi(m, q.gamma_order, &exps)?;
        let mut acc = C64::new(0.0, 0.0);
        let mut r = vec![0.0; m];
        for (i, w) in rule.relative_weights().iter().enumerate() {
            let v = match a {
                Some(a) => {
                    for (rj, x) in r.iter_mut().zip(rule.node(i)) {
                        *rj = x.sqrt();
                    }
                    a.eval(&r)?
                }
                None => C64::new(1.0, 0.0),
            };
            acc += v * *w;
        }
        let out = (ln_front + rule.ln_scale(), acc);
        radial_cache.lock().expect("radial cache").insert(sums, out);
        Ok(out)
    };

    let cols: Vec<usize> = (0..n).collect();
    let columns: Vec<Result<Vec<C64>>> = map_collect(&cols, |&col| {
        let al = &alphas[col];
        (0..n)
            .map(|row| {
                let be = &alphas[row];
                let sums: Vec<u32> = (0..m)
                    .map(|j| al.portion(cfg, j).iter().chain(be.portion(cfg, j)).sum())
                    .collect();
                let (ln_scale, rad) = radial(sums)?;
                let mut v = rad * (ln_scale - 0.5 * (ln_norms[col] + ln_norms[row])).exp();
                for (j, table) in group_tables.iter().enumerate() {
                    v *= table[&(al.portion(cfg, j).to_vec(), be.portion(cfg, j).to_vec())];
                }
                Ok(v)
            })
            .collect()
    });
    let mut out = CMatrix::zeros(n, n);
    for (col, c) in columns.into_iter().enumerate() {
        for (row, v) in c?.into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

/// Which projection a mask represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectionKind {
    /// `P_kappa`, onto `H_kappa`.
    Kappa(Vec<u32>),
    /// `Q^{(j)}_d`, onto `⊕_{kappa_j = d} H_kappa` (zero-based `group`).
    Q { group: usize, degree: u32 },
    /// `Q~^{(j)}_d = ⊕_{e <= d} Q^{(j)}_e`.
    QTilde { group: usize, degree: u32 },
    /// Result of mask arithmetic.
    Derived(String),
}

impl std::fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectionKind::Kappa(k) => write!(f, "P{k:?}"),
            ProjectionKind::Q { group, degree } => write!(f, "Q{}_{degree}", group + 1),
            ProjectionKind::QTilde { group, degree } => write!(f, "Q~{}_{degree}", group + 1),
            ProjectionKind::Derived(s) => write!(f, "{s}"),
        }
    }
}

/// A 0/1 diagonal over the global basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionMask {
    pub kind: ProjectionKind,
    pub mask: Vec<bool>,
}

impl ProjectionMask {
    pub fn rank(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Product of commuting projections: intersection of ranges.
    pub fn product(&self, other: &Self) -> Self {
        ProjectionMask {
            kind: ProjectionKind::Derived(format!("{}·{}", self.kind, other.kind)),
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// Sum of mutually orthogonal projections.
    pub fn orthogonal_sum(&self, other: &Self) -> Result<Self> {
        if !self.is_orthogonal_to(other) {
            return Err(Error::OutOfRange(format!("{} and {} are not orthogonal", self.kind, other.kind)));
        }
        Ok(ProjectionMask {
            kind: ProjectionKind::Derived(format!("{}+{}", self.kind, other.kind)),
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect(),
        })
    }

    pub fn is_orthogonal_to(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !(a && b))
    }

    pub fn same_range(&self, other: &Self) -> bool {
        self.mask == other.mask
    }

    pub fn to_operator(&self, basis: Arc<GlobalBasis>) -> TruncatedOperator {
        let mask = &self.mask;
        let blocks = (0..basis.kappas().len())
            .map(|p| {
                let r = basis.range(p);
                CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    r.len(),
                    r.map(|i| if mask[i] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }),
                ))
            })
            .collect();
        TruncatedOperator { basis, blocks, label: self.kind.to_string() }
    }
}

/// The mask of `kind` on the truncation.
pub fn projection(kind: ProjectionKind, basis: &GlobalBasis) -> Result<ProjectionMask> {
    let cfg = basis.cfg();
    let in_group = |g: usize, d: u32| -> Result<()> {
        if g >= cfg.m() {
            return Err(Error::OutOfRange(format!("group {} does not exist", g + 1)));
        }
        if d > basis.cap() {
            return Err(Error::OutOfRange(format!("degree {d} exceeds the truncation cap {}", basis.cap())));
        }
        Ok(())
    };
    let select: Box<dyn Fn(&[u32]) -> bool> = match &kind {
        ProjectionKind::Kappa(k) => {
            if basis.kappa_index(k).is_none() {
                return Err(Error::OutOfRange(format!("kappa {k:?} is not in the truncation")));
            }
            let k = k.clone();
            Box::new(move |x| x == k.as_slice())
        }
        ProjectionKind::Q { group, degree } => {
            in_group(*group, *degree)?;
            let (g, d) = (*group, *degree);
            Box::new(move |x| x[g] == d)
        }
        ProjectionKind::QTilde { group, degree } => {
            in_group(*group, *degree)?;
            let (g, d) = (*group, *degree);
            Box::new(move |x| x[g] <= d)
        }
        ProjectionKind::Derived(_) => {
            return Err(Error::OutOfRange("derived masks come from mask arithmetic".into()));
        }
    };
    let mut mask = vec![false; basis.dim()];
    for (pos, kappa) in basis.kappas().iter().enumerate() {
        if select(kappa) {
            for i in basis.range(pos) {
                mask[i] = true;
            }
        }
    }
    Ok(ProjectionMask { kind, mask })
}

/// `P_1 = Q_1`, `P_{l+1} = Q_{l+1} - Q_{l+1}(P_1 + ... + P_l)`.
pub fn orthogonalize_projections(qs: &[ProjectionMask]) -> Vec<ProjectionMask> {
    let mut out: Vec<ProjectionMask> = Vec::with_capacity(qs.len());
    let mut covered = vec![false; qs.first().map_or(0, |q| q.mask.len())];
    for (l, q) in qs.iter().enumerate() {
        let mask: Vec<bool> = q.mask.iter().zip(&covered).map(|(&a, &c)| a && !c).collect();
        for (c, &b) in covered.iter_mut().zip(&q.mask) {
            *c |= b;
        }
        let kind = if l == 0 || mask == q.mask {
            q.kind.clone()
        } else {
            ProjectionKind::Derived(format!("P{}", l + 1))
        };
        out.push(ProjectionMask { kind, mask });
    }
    out
}

/// Dense matrix helper for tests and reports.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `m` with every entry inside the `H_kappa` diagonal blocks set to zero.
pub fn off_block_part(m: &CMatrix, basis: &GlobalBasis) -> CMatrix {
    let mut out = m.clone();
    for pos in 0..basis.kappas().len() {
        let r = basis.range(pos);
        out.view_mut((r.start, r.start), (r.len(), r.len())).fill(C64::new(0.0, 0.0));
    }
    out
}

/// Real matrix of zeros and ones, for diagnostics.
pub fn sparsity_pattern(m: &CMatrix, tol: f64) -> DMatrix<u8> {
    m.map(|v| u8::from(v.norm() > tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::dirichlet_integral;
    use crate::symbols::{builtin_constant, builtin_quasi_homogeneous, expression_symbol, QuasiRadialSpec};

    fn cfg(k: Vec<u32>, lambda: f64) -> PartitionConfig {
        PartitionConfig::new(k, lambda).unwrap()
    }

    #[test]
    fn gamma_of_one_is_one() {
        let a = QuasiRadialSymbol::new(QuasiRadialSpec::Expression { expr: "1 + 0*r1".into() }, 2).unwrap();
        for lambda in [0.0, 1.5, -0.5] {
            let c = cfg(vec![1, 2], lambda);
            for kappa in crate::lattice::enumerate_kappa(2, 10) {
                let g = gamma_quasi_radial(&a, &c, &kappa, 16).unwrap();
                assert!((g - C64::new(1.0, 0.0)).norm() < 1e-12, "{kappa:?}");
            }
        }
    }

    #[test]
    fn gamma_beta_integral() {
        let a = QuasiRadialSymbol::new(QuasiRadialSpec::Expression { expr: "r1^2".into() }, 1).unwrap();
        let g = gamma_quasi_radial(&a, &cfg(vec![1], 0.0), &[0], 8).unwrap();
        assert!((g.re - 0.5).abs() < 1e-14);
        // On H_kappa, r1^2 acts by (κ+k)/(n+|κ|+λ+1) in general.
        let c = cfg(vec![2, 3], 0.7);
        let a = QuasiRadialSymbol::new(QuasiRadialSpec::Expression { expr: "r1^2".into() }, 2).unwrap();
        for kappa in [[0u32, 0], [2, 1], [4, 3]] {
            let g = gamma_quasi_radial(&a, &c, &kappa, 16).unwrap();
            let expected = (kappa[0] + 2) as f64 / (5.0 + (kappa[0] + kappa[1]) as f64 + 0.7 + 1.0);
            assert!((g.re - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn blocks_of_one_are_identities() {
        let one = expression_symbol(1, 3, "1 + 0*s1", false).unwrap();
        for d in 0..6 {
            let b = assemble_block(&one, d, &QuadConfig::default()).unwrap();
            let n = b.dim();
            assert!(max_abs(&(b.matrix - CMatrix::identity(n, n))) < 1e-12, "d={d}");
        }
    }

    #[test]
    fn t_free_symbols_give_diagonal_blocks() {
        let c = expression_symbol(1, 2, "s1^2", false).unwrap();
        let b = assemble_block(&c, 3, &QuadConfig::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(b.matrix[(i, j)], C64::new(0.0, 0.0));
                }
            }
            // Diagonal: (d+1)!/α! · D(α_1 + 1, α_2) = (α_1 + 1)/(d + 2)
            let alpha1 = (3 - i) as f64;
            assert!((b.matrix[(i, i)].re - (alpha1 + 1.0) / 5.0).abs() < 1e-13);
        }
    }

    #[test]
    fn quasi_homogeneous_two_by_two() {
        let c = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let b = assemble_block(&c, 1, &QuadConfig::default()).unwrap();
        // Basis (1,0), (0,1). Only β - α = (1,-1) survives: row 0, column 1.
        let expected = 2.0 * dirichlet_integral(&[1.0, 1.0]).unwrap();
        assert!((b.matrix[(0, 1)].re - expected).abs() < 1e-14);
        assert!((expected - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.matrix[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(b.matrix[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(b.matrix[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn declared_and_sampled_routes_agree() {
        let declared = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let sampled = expression_symbol(1, 2, "s1*s2*t1*conj(t2) + 0*t1*conj(t1)", false).unwrap();
        assert!(sampled.declared_support().is_none());
        for d in 0..5 {
            let a = assemble_block(&declared, d, &QuadConfig::default()).unwrap();
            let b = assemble_block(&sampled, d, &QuadConfig::default()).unwrap();
            assert!(max_abs(&(a.matrix - b.matrix)) < 1e-13);
        }
    }

    #[test]
    fn blocks_do_not_depend_on_lambda() {
        let c = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let q = QuadConfig::default();
        let asm = Assembler::new(q);
        for lambda in [0.0, 1.5] {
            let cfg = cfg(vec![2, 2], lambda);
            let basis = Arc::new(GlobalBasis::new(&cfg, 3));
            let op = asm.truncated(None, &[&c], &basis).unwrap();
            let b = assemble_block(&c, 2, &q).unwrap();
            let pos = basis.kappa_index(&[2, 0]).unwrap();
            assert_eq!(op.block(pos), &b.matrix);
        }
    }

    #[test]
    fn cache_bytes_round_trip() {
        let c = builtin_quasi_homogeneous(1, &[2, -1, -1]).unwrap();
        let b = assemble_block(&c, 3, &QuadConfig::default()).unwrap();
        let hash = [7u8; 32];
        let bytes = b.to_bytes(&hash);
        let back = BlockMatrix::from_bytes(&bytes, 3, &hash).unwrap();
        assert_eq!(back, b);
        assert!(BlockMatrix::from_bytes(&bytes, 3, &[0u8; 32]).is_err());
        assert!(BlockMatrix::from_bytes(&bytes[..bytes.len() - 1], 3, &hash).is_err());
    }

    #[test]
    fn memoization_counts() {
        let c = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let asm = Assembler::new(QuadConfig::default());
        asm.blocks(&c, 3).unwrap();
        asm.blocks(&c, 3).unwrap();
        let s = asm.stats();
        assert_eq!(s.computed, 4);
        assert_eq!(s.memory_hits, 4);
    }

    #[test]
    fn truncated_identity() {
        let cfg = cfg(vec![1, 2], 1.5);
        let basis = Arc::new(GlobalBasis::new(&cfg, 4));
        let asm = Assembler::new(QuadConfig::default());
        let one = QuasiRadialSymbol::constant(1.0, 2);
        let c1 = builtin_constant(1, 1, 1.0);
        let c2 = builtin_constant(2, 2, 1.0);
        let op = asm.truncated(Some(&one), &[&c1, &c2], &basis).unwrap();
        let n = op.dim();
        assert!(max_abs(&(op.to_dense() - CMatrix::identity(n, n))) < 1e-14);
    }

    #[test]
    fn repeated_blocks_for_single_symbol() {
        let cfg = cfg(vec![1, 2], 0.0);
        let basis = Arc::new(GlobalBasis::new(&cfg, 3));
        let asm = Assembler::new(QuadConfig::default());
        let c = builtin_quasi_homogeneous(2, &[1, -1]).unwrap();
        let op = asm.truncated(None, &[&c], &basis).unwrap();
        let b1 = asm.block(&c, 1).unwrap();
        for kappa in [[0u32, 1], [1, 1], [2, 1]] {
            assert_eq!(op.block(basis.kappa_index(&kappa).unwrap()), &b1.matrix);
        }
    }

    #[test]
    fn reference_matches_fast_route() {
        let cfg = cfg(vec![1, 2], 0.5);
        let basis = Arc::new(GlobalBasis::new(&cfg, 3));
        let q = QuadConfig::default();
        let asm = Assembler::new(q);
        let a = QuasiRadialSymbol::new(QuasiRadialSpec::Expression { expr: "r1^2 + 2*r2^4".into() }, 2).unwrap();
        let c2 = expression_symbol(2, 2, "s1^2 + s1*s2*(t1*conj(t2) + 0.5*t2*conj(t1))", false).unwrap();
        let fast = asm.truncated(Some(&a), &[&c2], &basis).unwrap().to_dense();
        let reference = reference_matrix(Some(&a), &[&c2], &basis, &q).unwrap();
        assert!(max_abs(&(fast - &reference)) < 1e-11);
        assert!(max_abs(&off_block_part(&reference, &basis)) < 1e-12);
    }

    #[test]
    fn projection_identities() {
        let cfg = cfg(vec![1, 1, 2], 0.0);
        let basis = GlobalBasis::new(&cfg, 3);
        for kappa in basis.kappas() {
            let p = projection(ProjectionKind::Kappa(kappa.clone()), &basis).unwrap();
            let mut prod: Option<ProjectionMask> = None;
            for (j, &d) in kappa.iter().enumerate() {
                let q = projection(ProjectionKind::Q { group: j, degree: d }, &basis).unwrap();
                prod = Some(match prod {
                    None => q,
                    Some(x) => x.product(&q),
                });
            }
            assert!(p.same_range(&prod.unwrap()));
        }
        let q0 = projection(ProjectionKind::Q { group: 0, degree: 0 }, &basis).unwrap();
        assert!(projection(ProjectionKind::Q { group: 3, degree: 0 }, &basis).is_err());
        assert!(projection(ProjectionKind::Q { group: 0, degree: 4 }, &basis).is_err());
        let qt = projection(ProjectionKind::QTilde { group: 0, degree: 0 }, &basis).unwrap();
        assert!(q0.same_range(&qt));
    }

    #[test]
    fn orthogonalization_of_overlapping_masks() {
        let cfg = cfg(vec![1, 1], 0.0);
        let basis = GlobalBasis::new(&cfg, 4);
        let a = projection(ProjectionKind::QTilde { group: 0, degree: 1 }, &basis).unwrap();
        let b = projection(ProjectionKind::QTilde { group: 1, degree: 2 }, &basis).unwrap();
        let out = orthogonalize_projections(&[a.clone(), b.clone()]);
        assert_eq!(out[0], a);
        assert!(out[0].is_orthogonal_to(&out[1]));
        let overlap = a.product(&b);
        for i in 0..basis.dim() {
            if overlap.mask[i] {
                assert!(!out[1].mask[i]);
            }
            assert_eq!(out[0].mask[i] || out[1].mask[i], a.mask[i] || b.mask[i]);
        }
    }
}
