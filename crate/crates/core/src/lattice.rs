//! Multi-indices, partitioned index arithmetic and the ordered bases of the
//! truncated spaces.
//!
//! Within a block (fixed group `j`, fixed degree `d`) multi-indices are listed
//! in graded reverse lexicographic order, largest first: `(2,0) > (1,1) > (0,2)`.
//! The global basis of a truncation lists the spaces `H_kappa` in the order of
//! [`enumerate_kappa`] and, inside each, the tensor product of the group
//! bases with group 1 varying slowest.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::special::{binomial, ln_factorial, ln_gamma};
use crate::{Error, Result};

/// Largest total degree accepted by the norm formulas.
pub const DEGREE_CAP: u32 = 100_000;

/// Geometry of every computation: the partition `k` of the ambient dimension
/// into `m` groups and the weight parameter `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionConfigRepr", into = "PartitionConfigRepr")]
pub struct PartitionConfig {
    n: u32,
    k: Vec<u32>,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct PartitionConfigRepr {
    k: Vec<u32>,
    lambda: f64,
}

impl TryFrom<PartitionConfigRepr> for PartitionConfig {
    type Error = Error;
    fn try_from(r: PartitionConfigRepr) -> Result<Self> {
        PartitionConfig::new(r.k, r.lambda)
    }
}

impl From<PartitionConfig> for PartitionConfigRepr {
    fn from(c: PartitionConfig) -> Self {
        PartitionConfigRepr { k: c.k, lambda: c.lambda }
    }
}

impl PartitionConfig {
    pub fn new(k: Vec<u32>, lambda: f64) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::Config("partition must have at least one group".into()));
        }
        if k.iter().any(|&kj| kj == 0) {
            return Err(Error::Config("group sizes must be positive".into()));
        }
        if k.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config(format!("group sizes must be non-decreasing, got {k:?}")));
        }
        if !lambda.is_finite() || lambda <= -1.0 {
            return Err(Error::Config(format!("weight parameter must exceed -1, got {lambda}")));
        }
        let n = k.iter().sum();
        Ok(PartitionConfig { n, k, lambda })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[u32] {
        &self.k
    }

    /// Size of group `j` (zero-based).
    pub fn kj(&self, j: usize) -> u32 {
        self.k[j]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Offset of group `j` inside an `n`-tuple.
    pub fn group_offset(&self, j: usize) -> usize {
        self.k[..j].iter().map(|&x| x as usize).sum()
    }
}

/// A multi-index `alpha` in `Z_+^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// The portion `alpha_(j)` belonging to group `j`.
    pub fn portion<'a>(&'a self, cfg: &PartitionConfig, j: usize) -> &'a [u32] {
        let off = cfg.group_offset(j);
        &self.0[off..off + cfg.kj(j) as usize]
    }

    /// `kappa = (|alpha_(1)|, ..., |alpha_(m)|)`.
    pub fn kappa(&self, cfg: &PartitionConfig) -> Vec<u32> {
        (0..cfg.m()).map(|j| self.portion(cfg, j).iter().sum()).collect()
    }

    /// Concatenate group portions into a full multi-index.
    pub fn from_portions(portions: &[&[u32]]) -> Self {
        MultiIndex(portions.iter().flat_map(|p| p.iter().copied()).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Ordered basis of the homogeneous polynomials of degree `d` in `kj`
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBasis {
    kj: u32,
    d: u32,
    indices: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl BlockBasis {
    pub fn kj(&self) -> u32 {
        self.kj
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &[u32] {
        &self.indices[i]
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }
}

/// `C(d + kj - 1, kj - 1)`, the dimension of the degree-`d` block.
pub fn block_dim(kj: u32, d: u32) -> usize {
    binomial((d + kj - 1) as u64, (kj - 1) as u64) as usize
}

/// All `alpha` in `Z_+^kj` with `|alpha| = d`, in graded reverse
/// lexicographic order (largest first).
pub fn enumerate_block_indices(kj: u32, d: u32) -> BlockBasis {
    assert!(kj >= 1, "group size must be positive");
    let mut out = Vec::with_capacity(block_dim(kj, d));
    let mut cur = vec![0u32; kj as usize];
    compositions(&mut cur, 0, d, &mut out);
    // Descending grevlex == ascending lex order on the reversed tuple.
    out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    let lookup = out.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    BlockBasis { kj, d, indices: out, lookup }
}

fn compositions(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in 0..=remaining {
        cur[pos] = v;
        compositions(cur, pos + 1, remaining - v, out);
    }
    cur[pos] = 0;
}

/// Every `kappa` in `Z_+^m` with `|kappa| <= cap`, by total degree and then
/// in block order.
pub fn enumerate_kappa(m: usize, cap: u32) -> Vec<Vec<u32>> {
    if m == 0 {
        return vec![vec![]];
    }
    (0..=cap)
        .flat_map(|s| enumerate_block_indices(m as u32, s).indices)
        .collect()
}

/// `ln ||z^alpha||^2` in the weighted Bergman space `A^2_lambda(B^n)`.
pub fn ln_monomial_norm_sq(alpha: &MultiIndex, cfg: &PartitionConfig) -> Result<f64> {
    if alpha.0.len() != cfg.n() as usize {
        return Err(Error::OutOfRange(format!(
            "multi-index has length {}, expected {}",
            alpha.0.len(),
            cfg.n()
        )));
    }
    let deg = alpha.degree();
    if deg > DEGREE_CAP {
        return Err(Error::DegreeCap { degree: deg, cap: DEGREE_CAP });
    }
    let n = cfg.n() as f64;
    let lam = cfg.lambda();
    let ln_fact: f64 = alpha.0.iter().map(|&a| ln_factorial(a)).sum();
    Ok(ln_fact + ln_gamma(n + lam + 1.0) - ln_gamma(n + deg as f64 + lam + 1.0))
}

/// `||z^alpha||^2 = alpha! Gamma(n+lambda+1) / Gamma(n+|alpha|+lambda+1)`.
pub fn monomial_norm_sq(alpha: &MultiIndex, cfg: &PartitionConfig) -> Result<f64> {
    ln_monomial_norm_sq(alpha, cfg).map(f64::exp)
}

/// Dimension of `H_kappa`: the product of the block dimensions.
pub fn h_kappa_dim(cfg: &PartitionConfig, kappa: &[u32]) -> usize {
    kappa
        .iter()
        .zip(cfg.k())
        .map(|(&kj_deg, &kj)| block_dim(kj, kj_deg))
        .product()
}

/// The ordered basis of the truncation `⊕_{|kappa| <= cap} H_kappa`.
#[derive(Debug, Clone)]
pub struct GlobalBasis {
    cfg: PartitionConfig,
    cap: u32,
    kappas: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    kappa_lookup: HashMap<Vec<u32>, usize>,
    // blocks[j][d]
    blocks: Vec<Vec<BlockBasis>>,
}

impl GlobalBasis {
    pub fn new(cfg: &PartitionConfig, cap: u32) -> Self {
        let kappas = enumerate_kappa(cfg.m(), cap);
        let mut offsets = Vec::with_capacity(kappas.len() + 1);
        let mut acc = 0usize;
        for kappa in &kappas {
            offsets.push(acc);
            acc += h_kappa_dim(cfg, kappa);
        }
        offsets.push(acc);
        let kappa_lookup = kappas.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let blocks = cfg
            .k()
            .iter()
            .map(|&kj| (0..=cap).map(|d| enumerate_block_indices(kj, d)).collect())
            .collect();
        GlobalBasis { cfg: cfg.clone(), cap, kappas, offsets, kappa_lookup, blocks }
    }

    pub fn cfg(&self) -> &PartitionConfig {
        &self.cfg
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn kappas(&self) -> &[Vec<u32>] {
        &self.kappas
    }

    pub fn kappa_index(&self, kappa: &[u32]) -> Option<usize> {
        self.kappa_lookup.get(kappa).copied()
    }

    /// Global index range occupied by `H_kappa` (by position in [`Self::kappas`]).
    pub fn range(&self, kappa_pos: usize) -> std::ops::Range<usize> {
        self.offsets[kappa_pos]..self.offsets[kappa_pos + 1]
    }

    pub fn block_basis(&self, j: usize, d: u32) -> &BlockBasis {
        &self.blocks[j][d as usize]
    }

    /// Position of the `H_kappa` block containing global index `i`.
    pub fn kappa_pos_of(&self, i: usize) -> usize {
        match self.offsets.binary_search(&i) {
            Ok(p) => p,
            Err(p) => p - 1,
        }
    }

    pub fn alpha_at(&self, i: usize) -> MultiIndex {
        assert!(i < self.dim(), "index {i} outside truncation");
        let pos = self.kappa_pos_of(i);
        let kappa = &self.kappas[pos];
        let mut local = i - self.offsets[pos];
        let dims: Vec<usize> = (0..self.cfg.m()).map(|j| self.blocks[j][kappa[j] as usize].len()).collect();
        let mut tensor = vec![0usize; dims.len()];
        for j in (0..dims.len()).rev() {
            tensor[j] = local % dims[j];
            local /= dims[j];
        }
        let portions: Vec<&[u32]> = (0..dims.len())
            .map(|j| self.blocks[j][kappa[j] as usize].get(tensor[j]))
            .collect();
        MultiIndex::from_portions(&portions)
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.0.len() != self.cfg.n() as usize {
            return None;
        }
        let kappa = alpha.kappa(&self.cfg);
        let pos = self.kappa_index(&kappa)?;
        let mut local = 0usize;
        for (j, &d) in kappa.iter().enumerate() {
            let b = &self.blocks[j][d as usize];
            local = local * b.len() + b.index_of(alpha.portion(&self.cfg, j))?;
        }
        Some(self.offsets[pos] + local)
    }
}
