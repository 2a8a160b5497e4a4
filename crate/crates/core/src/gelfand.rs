//! Finite sums `Σ_ρ D_{γ_ρ} T^ρ`, their assembly on a truncation, and
//! sampled multiplicative functionals.
//!
//! A functional is labelled by a stratum `θ ∈ {0,1}^m`, finite block
//! coordinates `κ_j` for `θ_j = 1`, and a point `ζ ∈ C^m`. Its value on a
//! finite sum is `Σ_ρ γ_ρ(μ) ζ^ρ`. When `θ = 1` the functional is exact;
//! otherwise the coordinates with `θ_j = 0` are replaced by a large surrogate
//! index `K_sur` and the value is approximate.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{tensor_block, Assembler, TruncatedOperator};
use crate::expr::{parse, Env, Expr, VarKind};
use crate::lattice::{block_dim, enumerate_kappa, GlobalBasis};
use crate::par::map_collect;
use crate::spectra::{
    eigenvector, essential_spectrum_estimate, matrix_eigen_data, polynomial_hull_2d, tensor_vector, EigenData,
    PlanarRegion, RegionConfig,
};
use crate::symbols::{PseudoHomogeneousSymbol, BOUNDEDNESS_LIMIT};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default surrogate index for coordinates that tend to infinity.
pub const K_SUR: u32 = 10_000;

/// A diagonal coefficient `γ(κ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant {
        value: f64,
        #[serde(default)]
        imag: f64,
    },
    /// Expression in `k1..km`.
    Expression { expr: String },
    /// Explicit values; `κ` outside the table takes `default`.
    Table { entries: Vec<(Vec<u32>, C64)>, default: C64 },
    /// `[κ_group = degree]`, with a 1-based group.
    Indicator { group: usize, degree: u32 },
    Product { factors: Vec<Coefficient> },
    Linear { terms: Vec<(C64, Coefficient)> },
}

impl Coefficient {
    pub fn one() -> Self {
        Coefficient::Constant { value: 1.0, imag: 0.0 }
    }

    pub fn scalar(z: C64) -> Self {
        Coefficient::Constant { value: z.re, imag: z.im }
    }

    pub fn expression(text: &str) -> Self {
        Coefficient::Expression { expr: text.to_string() }
    }

    /// `[κ_j = d]` for a 0-based group.
    pub fn indicator(j: usize, d: u32) -> Self {
        Coefficient::Indicator { group: j + 1, degree: d }
    }

    pub fn times(self, other: Coefficient) -> Self {
        match (self, other) {
            (Coefficient::Constant { value, imag }, o) | (o, Coefficient::Constant { value, imag })
                if value == 1.0 && imag == 0.0 =>
            {
                o
            }
            (Coefficient::Product { factors: mut a }, Coefficient::Product { factors: b }) => {
                a.extend(b);
                Coefficient::Product { factors: a }
            }
            (Coefficient::Product { mut factors }, o) => {
                factors.push(o);
                Coefficient::Product { factors }
            }
            (a, b) => Coefficient::Product { factors: vec![a, b] },
        }
    }

    /// Checks that expressions parse and only use `k1..km`, and that
    /// indicators name existing groups.
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            Coefficient::Constant { .. } => Ok(()),
            Coefficient::Expression { expr } => {
                let e = parse(expr)?;
                for v in e.variables() {
                    if v.kind != VarKind::K || v.index >= m {
                        return Err(Error::Config(format!(
                            "coefficient `{expr}` uses `{v}`; only k1..k{m} are allowed"
                        )));
                    }
                }
                Ok(())
            }
            Coefficient::Table { entries, .. } => {
                if entries.iter().any(|(k, _)| k.len() != m) {
                    return Err(Error::Config(format!("table keys must have {m} coordinates")));
                }
                Ok(())
            }
            Coefficient::Indicator { group, .. } => {
                if *group == 0 || *group > m {
                    return Err(Error::Config(format!("indicator group {group} is outside 1..={m}")));
                }
                Ok(())
            }
            Coefficient::Product { factors } => factors.iter().try_for_each(|f| f.validate(m)),
            Coefficient::Linear { terms } => terms.iter().try_for_each(|t| t.1.validate(m)),
        }
    }

    /// `γ(κ)`; coordinates may be surrogate values.
    pub fn eval(&self, kappa: &[f64]) -> Result<C64> {
        let v = match self {
            Coefficient::Constant { value, imag } => C64::new(*value, *imag),
            Coefficient::Expression { expr } => parse(expr)?.eval(&Env { k: kappa, ..Default::default() })?,
            Coefficient::Table { entries, default } => entries
                .iter()
                .find(|(k, _)| k.iter().zip(kappa).all(|(&a, &b)| a as f64 == b))
                .map(|e| e.1)
                .unwrap_or(*default),
            Coefficient::Indicator { group, degree } => {
                let hit = kappa.get(group - 1).is_some_and(|&k| k == *degree as f64);
                C64::new(if hit { 1.0 } else { 0.0 }, 0.0)
            }
            Coefficient::Product { factors } => {
                let mut acc = C64::new(1.0, 0.0);
                for f in factors {
                    acc *= f.eval(kappa)?;
                }
                acc
            }
            Coefficient::Linear { terms } => {
                let mut acc = C64::new(0.0, 0.0);
                for (s, f) in terms {
                    acc += s * f.eval(kappa)?;
                }
                acc
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) || v.norm() > BOUNDEDNESS_LIMIT {
            return Err(Error::NonFinite { context: format!("coefficient at kappa = {kappa:?}") });
        }
        Ok(v)
    }

    /// Evaluation plan with expressions parsed once.
    fn compile(&self) -> Result<Compiled> {
        Ok(match self {
            Coefficient::Expression { expr } => Compiled::Expr(parse(expr)?),
            Coefficient::Product { factors } => {
                Compiled::Product(factors.iter().map(|f| f.compile()).collect::<Result<_>>()?)
            }
            Coefficient::Linear { terms } => Compiled::Linear(
                terms.iter().map(|(s, f)| Ok((*s, f.compile()?))).collect::<Result<_>>()?,
            ),
            other => Compiled::Plain(other.clone()),
        })
    }
}

enum Compiled {
    Plain(Coefficient),
    Expr(Expr),
    Product(Vec<Compiled>),
    Linear(Vec<(C64, Compiled)>),
}

impl Compiled {
    fn eval(&self, kappa: &[f64]) -> Result<C64> {
        Ok(match self {
            Compiled::Plain(c) => c.eval(kappa)?,
            Compiled::Expr(e) => e.eval(&Env { k: kappa, ..Default::default() })?,
            Compiled::Product(fs) => {
                let mut acc = C64::new(1.0, 0.0);
                for f in fs {
                    acc *= f.eval(kappa)?;
                }
                acc
            }
            Compiled::Linear(ts) => {
                let mut acc = C64::new(0.0, 0.0);
                for (s, f) in ts {
                    acc += s * f.eval(kappa)?;
                }
                acc
            }
        })
    }
}

/// One term `D_γ T_{c_1}^{ρ_1} ⋯ T_{c_m}^{ρ_m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub gamma: Coefficient,
    pub rho: Vec<u32>,
}

/// `Σ_ρ D_{γ_ρ} T^ρ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FiniteSum {
    pub terms: Vec<Term>,
}

impl FiniteSum {
    pub fn zero() -> Self {
        FiniteSum { terms: vec![] }
    }

    pub fn term(gamma: Coefficient, rho: Vec<u32>) -> Self {
        FiniteSum { terms: vec![Term { gamma, rho }] }
    }

    /// `D_γ`.
    pub fn diagonal(gamma: Coefficient, m: usize) -> Self {
        Self::term(gamma, vec![0; m])
    }

    /// `T_{c_j}` for a 0-based group.
    pub fn generator(j: usize, m: usize) -> Self {
        let mut rho = vec![0; m];
        rho[j] = 1;
        Self::term(Coefficient::one(), rho)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FiniteSum { terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        FiniteSum {
            terms: self
                .terms
                .iter()
                .map(|t| Term { gamma: Coefficient::Linear { terms: vec![(s, t.gamma.clone())] }, rho: t.rho.clone() })
                .collect(),
        }
    }

    /// Multiplies every coefficient by `g` on the left.
    pub fn times_coefficient(&self, g: &Coefficient) -> Self {
        FiniteSum {
            terms: self.terms.iter().map(|t| Term { gamma: g.clone().times(t.gamma.clone()), rho: t.rho.clone() }).collect(),
        }
    }

    /// Symbolic product: coefficients multiply pointwise and powers add.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    gamma: a.gamma.clone().times(b.gamma.clone()),
                    rho: a.rho.iter().zip(&b.rho).map(|(x, y)| x + y).collect(),
                });
            }
        }
        FiniteSum { terms }
    }

    /// Merges terms with equal powers into linear coefficients.
    pub fn collected(&self) -> Self {
        let mut by_rho: BTreeMap<Vec<u32>, Vec<(C64, Coefficient)>> = BTreeMap::new();
        for t in &self.terms {
            let entry = by_rho.entry(t.rho.clone()).or_default();
            match &t.gamma {
                Coefficient::Linear { terms } => entry.extend(terms.iter().cloned()),
                g => entry.push((C64::new(1.0, 0.0), g.clone())),
            }
        }
        FiniteSum {
            terms: by_rho
                .into_iter()
                .map(|(rho, terms)| {
                    let gamma = if terms.len() == 1 && terms[0].0 == C64::new(1.0, 0.0) {
                        terms.into_iter().next().expect("one term").1
                    } else {
                        Coefficient::Linear { terms }
                    };
                    Term { gamma, rho }
                })
                .collect(),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for t in &self.terms {
            if t.rho.len() != m {
                return Err(Error::Config(format!("power {:?} must have {m} entries", t.rho)));
            }
            t.gamma.validate(m)?;
        }
        Ok(())
    }

    /// Largest power of `X_j` present.
    pub fn degree_in(&self, j: usize) -> u32 {
        self.terms.iter().map(|t| t.rho[j]).max().unwrap_or(0)
    }
}

/// A sampled multiplicative functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandPoint {
    /// `true` where the block coordinate stays finite.
    pub theta: Vec<bool>,
    /// `κ_j` for `θ_j = 1`.
    pub kappa_theta: Vec<Option<u32>>,
    /// Index used for the coordinates with `θ_j = 0`.
    pub k_sur: u32,
    pub surrogate: bool,
    pub zeta: Vec<C64>,
}

impl GelfandPoint {
    pub fn exact(kappa: &[u32], zeta: Vec<C64>) -> Self {
        GelfandPoint {
            theta: vec![true; kappa.len()],
            kappa_theta: kappa.iter().map(|&k| Some(k)).collect(),
            k_sur: K_SUR,
            surrogate: false,
            zeta,
        }
    }

    /// Indices `j` with `θ_j = 1`.
    pub fn j_theta(&self) -> Vec<usize> {
        (0..self.theta.len()).filter(|&j| self.theta[j]).collect()
    }

    /// The block coordinates at which coefficients are evaluated.
    pub fn kappa_eval(&self) -> Vec<f64> {
        self.kappa_theta.iter().map(|k| k.map_or(self.k_sur as f64, |v| v as f64)).collect()
    }

    pub fn finite_kappa(&self) -> Option<Vec<u32>> {
        self.kappa_theta.iter().copied().collect()
    }
}

/// `Σ_ρ γ_ρ(μ) ζ^ρ`.
pub fn evaluate_gelfand(a: &FiniteSum, p: &GelfandPoint) -> Result<C64> {
    let kappa = p.kappa_eval();
    let mut acc = C64::new(0.0, 0.0);
    for t in &a.terms {
        let mut z = t.gamma.eval(&kappa)?;
        for (j, &r) in t.rho.iter().enumerate() {
            if r > 0 {
                z *= p.zeta[j].powi(r as i32);
            }
        }
        acc += z;
    }
    Ok(acc)
}

/// Block data of the generators `T_{c_1}, ..., T_{c_m}` on a truncation.
/// Groups without a symbol carry the identity.
#[derive(Debug, Clone)]
pub struct Generators {
    basis: Arc<GlobalBasis>,
    symbols: Vec<Option<PseudoHomogeneousSymbol>>,
    blocks: Vec<Vec<CMatrix>>,
    eigen: Vec<Vec<EigenData>>,
}

impl Generators {
    pub fn new(asm: &Assembler, basis: Arc<GlobalBasis>, cs: &[PseudoHomogeneousSymbol]) -> Result<Self> {
        Self::with_tolerance(asm, basis, cs, None)
    }

    pub fn with_tolerance(
        asm: &Assembler,
        basis: Arc<GlobalBasis>,
        cs: &[PseudoHomogeneousSymbol],
        cluster_tol: Option<f64>,
    ) -> Result<Self> {
        let cfg = basis.cfg().clone();
        let m = cfg.m();
        let mut symbols: Vec<Option<PseudoHomogeneousSymbol>> = vec![None; m];
        for c in cs {
            let j = c.group();
            if j >= m {
                return Err(Error::Config(format!("symbol refers to group {} but there are {m} groups", j + 1)));
            }
            if c.kj() != cfg.kj(j) as usize {
                return Err(Error::Config(format!("symbol on group {} has k_j = {}, expected {}", j + 1, c.kj(), cfg.kj(j))));
            }
            if symbols[j].is_some() {
                return Err(Error::Config(format!("more than one symbol on group {}", j + 1)));
            }
            symbols[j] = Some(c.clone());
        }
        let mut blocks = Vec::with_capacity(m);
        let mut eigen = Vec::with_capacity(m);
        for (j, s) in symbols.iter().enumerate() {
            let bl: Vec<CMatrix> = match s {
                Some(c) => asm.blocks(c, basis.cap())?.iter().map(|b| b.matrix.clone()).collect(),
                None => (0..=basis.cap())
                    .map(|d| {
                        let n = block_dim(cfg.kj(j), d);
                        CMatrix::identity(n, n)
                    })
                    .collect(),
            };
            let degrees: Vec<u32> = (0..=basis.cap()).collect();
            let ev = map_collect(&degrees, |&d| matrix_eigen_data(&bl[d as usize], j, d, cluster_tol))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            blocks.push(bl);
            eigen.push(ev);
        }
        Ok(Generators { basis, symbols, blocks, eigen })
    }

    pub fn basis(&self) -> &Arc<GlobalBasis> {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, j: usize) -> Option<&PseudoHomogeneousSymbol> {
        self.symbols[j].as_ref()
    }

    pub fn block(&self, j: usize, d: u32) -> &CMatrix {
        &self.blocks[j][d as usize]
    }

    pub fn eigen(&self, j: usize, d: u32) -> &EigenData {
        &self.eigen[j][d as usize]
    }

    /// `Σ_ρ D_{γ_ρ} T^ρ` on the truncation.
    pub fn assemble(&self, a: &FiniteSum) -> Result<TruncatedOperator> {
        a.validate(self.m())?;
        let basis = &self.basis;
        let positions: Vec<usize> = (0..basis.kappas().len()).collect();
        let mut total: Option<Vec<CMatrix>> = None;
        for t in &a.terms {
            let gamma = t.gamma.compile()?;
            let powers: Vec<Option<Vec<CMatrix>>> = (0..self.m())
                .map(|j| {
                    (t.rho[j] > 0).then(|| self.blocks[j].iter().map(|b| matrix_power(b, t.rho[j])).collect())
                })
                .collect();
            let blocks = map_collect(&positions, |&pos| -> Result<CMatrix> {
                let kappa = &basis.kappas()[pos];
                let kf: Vec<f64> = kappa.iter().map(|&k| k as f64).collect();
                let g = gamma.eval(&kf)?;
                let mut m = tensor_block(basis.cfg(), kappa, |j, d| powers[j].as_ref().map(|p| &p[d as usize]));
                m *= g;
                Ok(m)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            total = Some(match total {
                None => blocks,
                Some(prev) => prev.into_iter().zip(blocks).map(|(p, b)| p + b).collect(),
            });
        }
        let blocks = match total {
            Some(b) => b,
            None => return Ok(TruncatedOperator::zero(basis.clone())),
        };
        TruncatedOperator::from_blocks(basis.clone(), blocks, "finite sum")
    }

    /// Joint eigenvector `U*(v_1 ⊗ ... ⊗ v_m)` of an exact point, with the
    /// per-group residuals `‖(B_j - ζ_j) v_j‖`.
    pub fn tensor_eigenvector(&self, p: &GelfandPoint) -> Result<(CVector, Vec<f64>)> {
        let kappa = p
            .finite_kappa()
            .ok_or_else(|| Error::OutOfRange("surrogate points have no eigenvector".into()))?;
        let mut factors = Vec::with_capacity(self.m());
        let mut residuals = Vec::with_capacity(self.m());
        for (j, &d) in kappa.iter().enumerate() {
            let (v, r) = eigenvector(self.block(j, d), p.zeta[j]);
            factors.push(v);
            residuals.push(r);
        }
        Ok((tensor_vector(&self.basis, &kappa, &factors)?, residuals))
    }
}

pub(crate) fn matrix_power(b: &CMatrix, k: u32) -> CMatrix {
    let mut out = CMatrix::identity(b.nrows(), b.ncols());
    for _ in 0..k {
        out = &out * b;
    }
    out
}

/// The admissible values of `ζ_j` on a stratum.
#[derive(Debug, Clone)]
pub enum AdmissibleSet {
    Finite(Vec<C64>),
    Region(PlanarRegion),
}

impl AdmissibleSet {
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        match self {
            AdmissibleSet::Finite(v) => v.iter().any(|w| (w - z).norm() <= tol),
            AdmissibleSet::Region(r) => r.distance_to(z) <= tol + r.cell_size() * std::f64::consts::SQRT_2,
        }
    }

    /// Deterministic candidate values: the finite set itself or the
    /// occupied cell centers.
    pub fn candidates(&self) -> Vec<C64> {
        match self {
            AdmissibleSet::Finite(v) => v.clone(),
            AdmissibleSet::Region(r) => r.occupied_centers(),
        }
    }
}

/// Block spectrum at `κ_j = d`, or the hulled essential spectrum when
/// `d` is `None`.
pub fn admissible_zeta(g: &Generators, j: usize, d: Option<u32>, rc: &RegionConfig) -> Result<AdmissibleSet> {
    if let Some(d) = d {
        if d > g.basis.cap() {
            return Err(Error::DegreeCap { degree: d, cap: g.basis.cap() });
        }
        return Ok(AdmissibleSet::Finite(g.eigen(j, d).distinct()));
    }
    match g.symbol(j) {
        None => Ok(AdmissibleSet::Finite(vec![C64::new(1.0, 0.0)])),
        Some(c) => match c.as_constant() {
            Some(v) => Ok(AdmissibleSet::Finite(vec![v])),
            None => {
                let ess = essential_spectrum_estimate(c, rc.boundary_samples, rc.resolution)?;
                Ok(AdmissibleSet::Region(polynomial_hull_2d(&ess)))
            }
        },
    }
}

/// Controls for [`sample_ideal_space`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub k_sur: u32,
    /// Surrogate points drawn per `(θ, κ_θ)`.
    pub budget: usize,
    pub seed: u64,
    pub region: RegionConfig,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            k_sur: K_SUR,
            budget: 4,
            seed: 0x5eed,
            region: RegionConfig { resolution: 128, boundary_samples: 48, cell_tolerance: 100 },
        }
    }
}

/// All exact points with `|κ| <= dmax`, then `budget` surrogate points for
/// every `θ ≠ 1` and every `κ_θ` with `|κ_θ| <= dmax`.
pub fn sample_ideal_space(g: &Generators, dmax: u32, sc: &SamplingConfig) -> Result<Vec<GelfandPoint>> {
    if dmax > g.basis.cap() {
        return Err(Error::DegreeCap { degree: dmax, cap: g.basis.cap() });
    }
    let m = g.m();
    let mut out = Vec::new();
    for kappa in enumerate_kappa(m, dmax) {
        let sets: Vec<Vec<C64>> = (0..m).map(|j| g.eigen(j, kappa[j]).distinct()).collect();
        for zeta in cartesian(&sets) {
            out.push(GelfandPoint::exact(&kappa, zeta));
        }
    }
    let mut infinite: Vec<Option<AdmissibleSet>> = vec![None; m];
    for mask in 0..(1usize << m) - 1 {
        let theta: Vec<bool> = (0..m).map(|j| mask & (1 << j) != 0).collect();
        let finite: Vec<usize> = (0..m).filter(|&j| theta[j]).collect();
        for j in 0..m {
            if !theta[j] && infinite[j].is_none() {
                infinite[j] = Some(admissible_zeta(g, j, None, &sc.region)?);
            }
        }
        let cands: Vec<Vec<C64>> = infinite.iter().map(|s| s.as_ref().map(|s| s.candidates()).unwrap_or_default()).collect();
        for (ki, sub) in enumerate_kappa(finite.len(), dmax).into_iter().enumerate() {
            let mut kappa_theta = vec![None; m];
            for (&j, &k) in finite.iter().zip(&sub) {
                kappa_theta[j] = Some(k);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed ^ ((mask as u64) << 40) ^ (ki as u64).wrapping_mul(0x9e37_79b9));
            for _ in 0..sc.budget {
                let zeta: Vec<C64> = (0..m)
                    .map(|j| {
                        let pool = match kappa_theta[j] {
                            Some(d) => g.eigen(j, d).distinct(),
                            None => cands[j].clone(),
                        };
                        pool[rng.gen_range(0..pool.len())]
                    })
                    .collect();
                out.push(GelfandPoint { theta: theta.clone(), kappa_theta: kappa_theta.clone(), k_sur: sc.k_sur, surrogate: true, zeta });
            }
        }
    }
    Ok(out)
}

fn cartesian(sets: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = vec![vec![]];
    for s in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                s.iter().map(move |&z| {
                    let mut v = prefix.clone();
                    v.push(z);
                    v
                })
            })
            .collect();
    }
    out
}

/// Re-checks the stratum invariants of a point.
pub fn check_point(g: &Generators, p: &GelfandPoint, rc: &RegionConfig) -> Result<bool> {
    for j in 0..g.m() {
        let set = admissible_zeta(g, j, p.kappa_theta[j], rc)?;
        let tol = match p.kappa_theta[j] {
            Some(d) => 10.0 * g.eigen(j, d).tol,
            None => 1e-12,
        };
        if !set.contains(p.zeta[j], tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `|ψ(A)|` over the samples.
pub fn spectral_radius_estimate(a: &FiniteSum, samples: &[GelfandPoint]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for p in samples {
        best = best.max(evaluate_gelfand(a, p)?.norm());
    }
    Ok(best)
}

/// Report row for one evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandValue {
    pub theta: Vec<bool>,
    pub kappa_theta: Vec<Option<u32>>,
    pub surrogate: bool,
    pub zeta: Vec<C64>,
    pub value: C64,
}

pub fn evaluate_all(a: &FiniteSum, samples: &[GelfandPoint]) -> Result<Vec<GelfandValue>> {
    map_collect(samples, |p| {
        Ok(GelfandValue {
            theta: p.theta.clone(),
            kappa_theta: p.kappa_theta.clone(),
            surrogate: p.surrogate,
            zeta: p.zeta.clone(),
            value: evaluate_gelfand(a, p)?,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::QuadConfig;
    use crate::lattice::PartitionConfig;
    use crate::symbols::{builtin_constant, builtin_quasi_homogeneous, expression_symbol};

    fn gens(k: Vec<u32>, cap: u32, cs: &[PseudoHomogeneousSymbol]) -> Generators {
        let cfg = PartitionConfig::new(k, 0.0).unwrap();
        let basis = Arc::new(GlobalBasis::new(&cfg, cap));
        Generators::new(&Assembler::new(QuadConfig::default()), basis, cs).unwrap()
    }

    #[test]
    fn coefficient_evaluation() {
        let k = [2.0, 3.0];
        assert_eq!(Coefficient::expression("1/(1+k1+k2)").eval(&k).unwrap(), C64::new(1.0 / 6.0, 0.0));
        assert_eq!(Coefficient::indicator(1, 3).eval(&k).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(Coefficient::indicator(0, 3).eval(&k).unwrap(), C64::new(0.0, 0.0));
        let t = Coefficient::Table { entries: vec![(vec![2, 3], C64::new(5.0, 0.0))], default: C64::new(0.0, 0.0) };
        assert_eq!(t.eval(&k).unwrap(), C64::new(5.0, 0.0));
        assert_eq!(t.eval(&[1.0, 1.0]).unwrap(), C64::new(0.0, 0.0));
        assert!(Coefficient::expression("k1").eval(&[1e13]).is_err());
        assert!(Coefficient::expression("s1").validate(2).is_err());
        assert!(Coefficient::expression("k3").validate(2).is_err());
    }

    #[test]
    fn gelfand_examples() {
        let g = gens(vec![2], 3, &[expression_symbol(1, 2, "s1^2", true).unwrap()]);
        let pts = sample_ideal_space(&g, 3, &SamplingConfig::default()).unwrap();
        let one = FiniteSum::diagonal(Coefficient::one(), 1);
        let t = FiniteSum::generator(0, 1);
        let q2 = FiniteSum::diagonal(Coefficient::indicator(0, 2), 1);
        for p in &pts {
            assert_eq!(evaluate_gelfand(&one, p).unwrap(), C64::new(1.0, 0.0));
            assert_eq!(evaluate_gelfand(&t, p).unwrap(), p.zeta[0]);
            let expect = if p.kappa_theta[0] == Some(2) { 1.0 } else { 0.0 };
            assert_eq!(evaluate_gelfand(&q2, p).unwrap().re, expect);
        }
        assert_eq!(spectral_radius_estimate(&FiniteSum::zero(), &pts).unwrap(), 0.0);
        // Exact points reach 4/5 at d = 3; surrogates stay in the hull [0, 1].
        let r = spectral_radius_estimate(&t, &pts).unwrap();
        assert!(r >= 0.8 - 1e-12 && r <= 1.02, "{r}");
        let decay = FiniteSum::diagonal(Coefficient::expression("1/(1+k1)"), 1);
        assert_eq!(spectral_radius_estimate(&decay, &pts).unwrap(), 1.0);
    }

    #[test]
    fn trivial_sampling_counts() {
        let g = gens(vec![2], 2, &[builtin_constant(1, 2, 1.0)]);
        let sc = SamplingConfig { budget: 3, ..Default::default() };
        let pts = sample_ideal_space(&g, 2, &sc).unwrap();
        let exact: Vec<_> = pts.iter().filter(|p| !p.surrogate).collect();
        assert_eq!(exact.len(), 3);
        for (d, p) in exact.iter().enumerate() {
            assert_eq!(p.kappa_theta, vec![Some(d as u32)]);
            assert!((p.zeta[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert_eq!(pts.len(), 3 + 3);

        let g = gens(vec![1, 2], 2, &[]);
        let pts = sample_ideal_space(&g, 2, &sc).unwrap();
        // 6 exact, then θ = 00 (1 κ_θ), 10 and 01 (3 each).
        assert_eq!(pts.len(), 6 + 3 * (1 + 3 + 3));
    }

    #[test]
    fn sampled_points_satisfy_invariants() {
        let g = gens(
            vec![2, 2],
            3,
            &[expression_symbol(1, 2, "exp(2*pi*i*s1^2)", true).unwrap(), builtin_quasi_homogeneous(2, &[1, -1]).unwrap()],
        );
        let sc = SamplingConfig::default();
        let pts = sample_ideal_space(&g, 3, &sc).unwrap();
        assert!(pts.iter().any(|p| p.surrogate));
        for p in &pts {
            assert!(check_point(&g, p, &sc.region).unwrap());
        }
    }

    #[test]
    fn admissible_sets() {
        let rc = RegionConfig { resolution: 256, boundary_samples: 64, cell_tolerance: 100 };
        let g = gens(
            vec![2, 2],
            2,
            &[builtin_constant(1, 2, 1.0), expression_symbol(2, 2, "s1^2", true).unwrap()],
        );
        match admissible_zeta(&g, 0, Some(1), &rc).unwrap() {
            AdmissibleSet::Finite(v) => assert!(v.len() == 1 && (v[0] - C64::new(1.0, 0.0)).norm() < 1e-14),
            _ => panic!("expected a finite set"),
        }
        let seg = admissible_zeta(&g, 1, None, &rc).unwrap();
        assert!(seg.contains(C64::new(0.5, 0.0), 1e-3));
        assert!(!seg.contains(C64::new(0.5, 0.2), 1e-3));
        let g = gens(vec![2], 1, &[expression_symbol(1, 2, "exp(2*pi*i*s1^2)", true).unwrap()]);
        let disk = admissible_zeta(&g, 0, None, &rc).unwrap();
        assert!(disk.contains(C64::new(0.0, 0.0), 1e-3));
        assert!(disk.contains(C64::new(0.3, -0.5), 1e-3));
        assert!(!disk.contains(C64::new(1.2, 0.0), 1e-3));
    }

    #[test]
    fn multiplicativity_and_exact_consistency() {
        let g = gens(
            vec![1, 2],
            4,
            &[expression_symbol(1, 1, "0.5", true).unwrap(), expression_symbol(2, 2, "s1^2 + 0.3*s2", true).unwrap()],
        );
        let a = FiniteSum::generator(1, 2)
            .mul(&FiniteSum::generator(1, 2))
            .add(&FiniteSum::diagonal(Coefficient::expression("1/(1+k1+k2)"), 2));
        let b = FiniteSum::generator(0, 2).add(&FiniteSum::term(Coefficient::expression("k2"), vec![1, 1]));
        let ab = a.mul(&b);
        let pts = sample_ideal_space(&g, 4, &SamplingConfig::default()).unwrap();
        for p in &pts {
            let lhs = evaluate_gelfand(&ab, p).unwrap();
            let rhs = evaluate_gelfand(&a, p).unwrap() * evaluate_gelfand(&b, p).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
        let ahat = g.assemble(&a).unwrap();
        let ab_hat = g.assemble(&ab).unwrap();
        let prod = ahat.mul(&g.assemble(&b).unwrap());
        assert!(ab_hat.sub(&prod).frobenius_norm() < 1e-12);
        let dense = ahat.to_dense();
        for p in pts.iter().filter(|p| !p.surrogate) {
            let (v, res) = g.tensor_eigenvector(p).unwrap();
            assert!(res.iter().all(|&r| r < 1e-10));
            let rq = (v.adjoint() * &dense * &v)[(0, 0)] / v.norm_squared();
            assert!((rq - evaluate_gelfand(&a, p).unwrap()).norm() < 1e-8);
        }
    }
}
