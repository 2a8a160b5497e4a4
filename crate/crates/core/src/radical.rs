//! Distinct eigenvalues, the polynomials `h_ℓ`, diagonalizability of
//! blocks, semi-simplicity, radical generators and the division
//! decomposition `Q_d A = Σ_ℓ S_ℓ(A) h_ℓ(T_{c_j})`.
//!
//! Distinct eigenvalues are ordered by real part, then imaginary part. The
//! `h_ℓ` and the constants `C_ℓ` depend on this order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, TruncatedOperator};
use crate::gelfand::{Coefficient, FiniteSum, Generators, Term};
use crate::lattice::{block_dim, enumerate_kappa, GlobalBasis};
use crate::spectra::{matrix_eigen_data, EigenData};
use crate::symbols::PseudoHomogeneousSymbol;
use crate::{CMatrix, Error, Result, C64};

/// Below this gap between distinct eigenvalues the division is refused.
pub const DIVISION_GAP: f64 = 1e-6;

/// Default relative rank threshold for diagonalizability.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctEigenvalues {
    pub values: Vec<C64>,
    pub warnings: Vec<String>,
}

impl DistinctEigenvalues {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

pub fn distinct_eigenvalues(e: &EigenData) -> DistinctEigenvalues {
    let values = e.distinct();
    let mut warnings = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let gap = (values[i] - values[j]).norm();
            if gap < 10.0 * e.tol {
                warnings.push(format!(
                    "group {} degree {}: eigenvalues {} and {} are {gap:.2e} apart, within 10x the clustering tolerance",
                    e.group + 1,
                    e.degree,
                    values[i],
                    values[j]
                ));
            }
        }
    }
    DistinctEigenvalues { values, warnings }
}

/// `h_ℓ(X) = (X - ζ_1) ⋯ (X - ζ_ℓ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolynomial {
    pub group: usize,
    pub degree: u32,
    pub level: usize,
    /// Coefficients from the constant term up; the last one is 1.
    pub coeffs: Vec<C64>,
}

impl HPolynomial {
    pub fn from_roots(group: usize, degree: u32, roots: &[C64]) -> Self {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
        HPolynomial { group, degree, level: roots.len(), coeffs }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `h(B)` by Horner's rule.
    pub fn eval_matrix(&self, b: &CMatrix) -> CMatrix {
        let n = b.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for &c in self.coeffs.iter().rev() {
            acc = &acc * b + CMatrix::identity(n, n) * c;
        }
        acc
    }

    /// `Σ_i a_i X_j^i` with scalar coefficients.
    pub fn as_finite_sum(&self, j: usize, m: usize) -> FiniteSum {
        FiniteSum {
            terms: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let mut rho = vec![0; m];
                    rho[j] = i as u32;
                    Term { gamma: Coefficient::scalar(c), rho }
                })
                .collect(),
        }
    }
}

pub fn h_polynomial(e: &EigenData, level: usize) -> Result<HPolynomial> {
    let values = e.distinct();
    if level == 0 || level > values.len() {
        return Err(Error::OutOfRange(format!("level {level} outside 1..={}", values.len())));
    }
    Ok(HPolynomial::from_roots(e.group, e.degree, &values[..level]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub eigenvalue: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizabilityReport {
    pub diagonalizable: bool,
    /// A singular value sits within a factor 10 of the threshold.
    pub indeterminate: bool,
    pub threshold: f64,
    pub defects: Vec<Defect>,
}

/// Compares `rank(B - ζI)` with `dim - mult(ζ)` for each distinct
/// eigenvalue; ranks count singular values above `tol · ‖B‖`.
pub fn is_diagonalizable(b: &CMatrix, e: &EigenData, tol: f64) -> DiagonalizabilityReport {
    let n = b.nrows();
    let threshold = tol * e.norm;
    let mut indeterminate = false;
    let mut defects = Vec::new();
    if e.norm == 0.0 {
        return DiagonalizabilityReport { diagonalizable: true, indeterminate, threshold, defects };
    }
    for &(z, alg) in &e.eigenvalues {
        let shifted = b - CMatrix::identity(n, n) * z;
        let sv = shifted.singular_values();
        let rank = sv.iter().filter(|&&s| s > threshold).count();
        if sv.iter().any(|&s| s > threshold / 10.0 && s < threshold * 10.0) {
            indeterminate = true;
        }
        let geometric = n - rank;
        if geometric < alg {
            defects.push(Defect { eigenvalue: z, algebraic: alg, geometric });
        }
    }
    DiagonalizabilityReport { diagonalizable: defects.is_empty(), indeterminate, threshold, defects }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SemisimpleVerdict {
    /// Every block with `d <= dmax` is diagonalizable.
    SemisimpleUpTo { dmax: u32 },
    /// Every block is diagonalizable for a structural reason.
    Structural { dmax: u32, reason: String },
    NotSemisimple { group: usize, degree: u32, structural: Option<String> },
}

impl SemisimpleVerdict {
    pub fn is_semisimple(&self) -> bool {
        !matches!(self, SemisimpleVerdict::NotSemisimple { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemisimpleReport {
    pub verdict: SemisimpleVerdict,
    pub tol: f64,
    /// `(group, degree)` blocks whose rank decision was close to the
    /// threshold at the base quadrature.
    pub escalated: Vec<(usize, u32)>,
    pub warnings: Vec<String>,
}

/// Scans the blocks of every symbol for `d = 0..=dmax`, group by group.
pub fn is_semisimple(asm: &Assembler, cs: &[&PseudoHomogeneousSymbol], dmax: u32, tol: f64) -> Result<SemisimpleReport> {
    let mut escalated = Vec::new();
    let mut warnings = Vec::new();
    let mut fine: Option<Assembler> = None;
    let mut ordered: Vec<&&PseudoHomogeneousSymbol> = cs.iter().collect();
    ordered.sort_by_key(|c| c.group());
    for c in ordered {
        for d in 0..=dmax {
            let b = asm.block(c, d)?;
            let e = matrix_eigen_data(&b.matrix, c.group(), d, None)?;
            let mut rep = is_diagonalizable(&b.matrix, &e, tol);
            if rep.indeterminate {
                escalated.push((c.group(), d));
                let fine = fine.get_or_insert_with(|| Assembler::new(asm.quad().doubled()));
                let b2 = fine.block(c, d)?;
                let e2 = matrix_eigen_data(&b2.matrix, c.group(), d, None)?;
                let halved = is_diagonalizable(&b2.matrix, &e2, tol / 2.0);
                let doubled = is_diagonalizable(&b2.matrix, &e2, tol * 2.0);
                if halved.diagonalizable != doubled.diagonalizable {
                    warnings.push(format!(
                        "group {} degree {}: rank decision changes between thresholds {:.1e} and {:.1e}; using {:.1e}",
                        c.group() + 1,
                        d,
                        tol / 2.0,
                        tol * 2.0,
                        tol
                    ));
                }
                rep = is_diagonalizable(&b2.matrix, &e2, tol);
            }
            if !rep.diagonalizable {
                let structural = c
                    .is_single_nonzero_mode()
                    .then(|| "single nonzero Fourier mode: every block is strictly triangular, so a nonzero block is nilpotent and not diagonal".to_string());
                return Ok(SemisimpleReport {
                    verdict: SemisimpleVerdict::NotSemisimple { group: c.group(), degree: d, structural },
                    tol,
                    escalated,
                    warnings,
                });
            }
        }
    }
    let verdict = if cs.iter().all(|c| c.is_t_free() || c.as_constant().is_some()) {
        SemisimpleVerdict::Structural {
            dmax,
            reason: "every profile is independent of t, so every block is diagonal".to_string(),
        }
    } else {
        SemisimpleVerdict::SemisimpleUpTo { dmax }
    };
    Ok(SemisimpleReport { verdict, tol, escalated, warnings })
}

/// Whether `F_L = {d : n_{j,d} <= L}` is known to be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FLStatus {
    /// All blocks have a single eigenvalue, so `F_L` is all of `Z_+`.
    Infinite,
    /// `n_{j,d}` grows without bound in `d`.
    Finite,
    /// Nothing is known beyond the truncation.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct RadicalGenerator {
    pub group: usize,
    pub level: usize,
    /// `F_L ∩ [0, dmax]`.
    pub degrees: Vec<u32>,
    pub status: FLStatus,
    pub sum: FiniteSum,
    pub operator: TruncatedOperator,
}

/// `D_γ ⊕_{d ∈ F_L} Q_d h_{n_{j,d}}(T_{c_j})` for `d <= dmax`.
///
/// `γ` must vanish when `κ_j` is replaced by `k_sur`; this is checked on
/// every `κ` of the truncation.
pub fn radical_generator(
    g: &Generators,
    j: usize,
    gamma: &Coefficient,
    level: usize,
    dmax: u32,
    k_sur: u32,
) -> Result<RadicalGenerator> {
    let m = g.m();
    if j >= m {
        return Err(Error::Config(format!("group {} does not exist", j + 1)));
    }
    if dmax > g.basis().cap() {
        return Err(Error::DegreeCap { degree: dmax, cap: g.basis().cap() });
    }
    gamma.validate(m)?;
    for kappa in enumerate_kappa(m, g.basis().cap()) {
        let mut kf: Vec<f64> = kappa.iter().map(|&k| k as f64).collect();
        kf[j] = k_sur as f64;
        let v = gamma.eval(&kf)?;
        if v.norm() > 1e-12 {
            return Err(Error::Config(format!(
                "coefficient does not vanish at kappa_{} = {k_sur} (value {v} at {kf:?}); it must be supported on finitely many kappa_{}",
                j + 1,
                j + 1
            )));
        }
    }
    let mut degrees = Vec::new();
    let mut sum = FiniteSum::zero();
    for d in 0..=dmax {
        let e = g.eigen(j, d);
        let n = e.eigenvalues.len();
        if n > level {
            continue;
        }
        degrees.push(d);
        let h = h_polynomial(e, n)?;
        let q = gamma.clone().times(Coefficient::indicator(j, d));
        sum = sum.add(&h.as_finite_sum(j, m).times_coefficient(&q));
    }
    let status = match g.symbol(j) {
        None => FLStatus::Infinite,
        Some(c) if c.as_constant().is_some() || c.is_single_nonzero_mode() => FLStatus::Infinite,
        Some(_) => FLStatus::Unknown,
    };
    let operator = g.assemble(&sum)?.with_label(format!("radical generator, group {}, L = {level}", j + 1));
    Ok(RadicalGenerator { group: j, level, degrees, status, sum, operator })
}

/// `‖G^k‖_F^{1/k}` for `k = 1..=kmax`.
pub fn power_norms(op: &TruncatedOperator, kmax: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax as usize);
    let mut p = op.clone();
    for k in 1..=kmax {
        if k > 1 {
            p = p.mul(op);
        }
        out.push(p.frobenius_norm().powf(1.0 / k as f64));
    }
    out
}

/// `C_0 = sqrt(dim H_d)` and, for `ℓ + 1 < n`,
/// `C_{ℓ+1} = Π_{i<=ℓ+1} |ζ_{ℓ+2} - ζ_i|^{-1} · C_0 · (1 + C_0 + ... + C_ℓ)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    pub group: usize,
    pub degree: u32,
    pub values: Vec<f64>,
    /// Entries that are infinite or above `1e12`.
    pub flagged: Vec<usize>,
}

pub fn norm_constants(kj: u32, roots: &[C64], group: usize, degree: u32) -> NormConstants {
    let c0 = (block_dim(kj, degree) as f64).sqrt();
    let mut values = vec![c0];
    for l in 0..roots.len().saturating_sub(1) {
        let z = roots[l + 1];
        let prod: f64 = roots[..=l].iter().map(|r| (z - r).norm()).product();
        let partial: f64 = 1.0 + values.iter().sum::<f64>();
        values.push(c0 * partial.sqrt() / prod);
    }
    let flagged = values.iter().enumerate().filter(|(_, v)| !v.is_finite() || **v > 1e12).map(|(i, _)| i).collect();
    NormConstants { group, degree, values, flagged }
}

/// One level of the decomposition.
#[derive(Debug, Clone)]
pub struct DivisionPart {
    pub level: usize,
    /// `S_ℓ(A)`, already multiplied by `Q_d`.
    pub s: FiniteSum,
    pub s_matrix: TruncatedOperator,
    /// `S_ℓ(A) h_ℓ(T_{c_j})`, with `h_0 = 1`.
    pub product: TruncatedOperator,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub group: usize,
    pub degree: u32,
    pub roots: Vec<C64>,
    /// Levels `n, n-1, ..., 0`.
    pub parts: Vec<DivisionPart>,
    /// `‖Q_d Â - Σ_ℓ S_ℓ h_ℓ‖_F`.
    pub residual: f64,
    /// `S_ℓ` for `ℓ < n` contain no power of `X_j`.
    pub structural_ok: bool,
    pub constants: NormConstants,
    pub a_norm: f64,
}

impl Decomposition {
    /// `(ℓ, ‖S_ℓ(Â)‖_2, C_ℓ ‖Â‖_2)` for `ℓ < n`.
    pub fn bounds(&self) -> Vec<(usize, f64, f64)> {
        self.parts
            .iter()
            .filter(|p| p.level < self.roots.len())
            .map(|p| (p.level, p.s_matrix.spectral_norm(), self.constants.values[p.level] * self.a_norm))
            .collect()
    }
}

/// Polynomial in `X_j` whose coefficients are finite sums free of `X_j`.
type PolyInXj = Vec<FiniteSum>;

fn split_in(a: &FiniteSum, j: usize) -> PolyInXj {
    let deg = a.degree_in(j) as usize;
    let mut p = vec![FiniteSum::zero(); deg + 1];
    for t in &a.terms {
        let mut rho = t.rho.clone();
        let e = rho[j] as usize;
        rho[j] = 0;
        p[e].terms.push(Term { gamma: t.gamma.clone(), rho });
    }
    p
}

fn join_in(p: &PolyInXj, j: usize) -> FiniteSum {
    let mut out = FiniteSum::zero();
    for (e, s) in p.iter().enumerate() {
        for t in &s.terms {
            let mut rho = t.rho.clone();
            rho[j] += e as u32;
            out.terms.push(Term { gamma: t.gamma.clone(), rho });
        }
    }
    out
}

/// Long division of `p` by a monic scalar polynomial; returns
/// `(quotient, remainder)`.
fn divide(p: &PolyInXj, h: &[C64]) -> (PolyInXj, PolyInXj) {
    let n = h.len() - 1;
    let mut r = p.clone();
    if r.len() <= n {
        return (vec![FiniteSum::zero()], r);
    }
    let mut q = vec![FiniteSum::zero(); r.len() - n];
    for top in (n..r.len()).rev() {
        let lead = r[top].collected();
        if lead.terms.is_empty() {
            continue;
        }
        q[top - n] = lead.clone();
        for (i, &c) in h.iter().enumerate() {
            r[top - n + i] = r[top - n + i].add(&lead.scale(-c)).collected();
        }
        r[top] = FiniteSum::zero();
    }
    r.truncate(n.max(1));
    (q, r)
}

/// Successive division of `A` by `h_n, h_{n-1}, ..., h_1` in the variable
/// `X_j` at the block degree `d`.
pub fn decompose_by_division(g: &Generators, a: &FiniteSum, j: usize, d: u32) -> Result<Decomposition> {
    let m = g.m();
    a.validate(m)?;
    if d > g.basis().cap() {
        return Err(Error::DegreeCap { degree: d, cap: g.basis().cap() });
    }
    let e = g.eigen(j, d);
    let roots = e.distinct();
    let n = roots.len();
    for i in 0..n {
        for k in i + 1..n {
            let gap = (roots[i] - roots[k]).norm();
            if gap < DIVISION_GAP {
                return Err(Error::IllConditioned { gap, threshold: DIVISION_GAP });
            }
        }
    }
    let hs: Vec<HPolynomial> = (0..=n).map(|l| HPolynomial::from_roots(j, d, &roots[..l])).collect();
    let qd = Coefficient::indicator(j, d);

    let (quot, mut rem) = divide(&split_in(a, j), &hs[n].coeffs);
    let mut levels: Vec<(usize, FiniteSum)> = vec![(n, join_in(&quot, j).times_coefficient(&qd))];
    for l in (1..n).rev() {
        rem.resize(l + 1, FiniteSum::zero());
        let lead = rem[l].collected();
        for (i, &c) in hs[l].coeffs.iter().enumerate() {
            rem[i] = rem[i].add(&lead.scale(-c)).collected();
        }
        rem[l] = FiniteSum::zero();
        levels.push((l, lead.times_coefficient(&qd)));
    }
    rem.resize(1, FiniteSum::zero());
    levels.push((0, rem[0].collected().times_coefficient(&qd)));

    let structural_ok = levels.iter().filter(|(l, _)| *l < n).all(|(_, s)| s.degree_in(j) == 0);
    let basis: Arc<GlobalBasis> = g.basis().clone();
    let mask = crate::assembly::projection(crate::assembly::ProjectionKind::Q { group: j, degree: d }, &basis)?;
    let a_hat = g.assemble(a)?;
    let target = a_hat.masked(&mask);
    let mut total = TruncatedOperator::zero(basis.clone());
    let mut parts = Vec::with_capacity(levels.len());
    for (l, s) in levels {
        let s_matrix = g.assemble(&s)?;
        let product = g.assemble(&s.mul(&hs[l].as_finite_sum(j, m)))?;
        total = total.add(&product);
        parts.push(DivisionPart { level: l, s, s_matrix, product });
    }
    let residual = target.sub(&total).frobenius_norm();
    Ok(Decomposition {
        group: j,
        degree: d,
        constants: norm_constants(basis.cfg().kj(j), &roots, j, d),
        roots,
        parts,
        residual,
        structural_ok,
        a_norm: a_hat.spectral_norm(),
    })
}

/// `‖h_n(B)‖_F < tol ‖B‖_F^n`, the minimal-polynomial form of
/// diagonalizability.
pub fn h_annihilates(b: &CMatrix, e: &EigenData, tol: f64) -> Result<bool> {
    let n = e.eigenvalues.len();
    let h = h_polynomial(e, n)?;
    let bn = b.norm();
    Ok(h.eval_matrix(b).norm() < tol * bn.powi(n as i32).max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::QuadConfig;
    use crate::gelfand::{evaluate_gelfand, sample_ideal_space, SamplingConfig};
    use crate::lattice::PartitionConfig;
    use crate::symbols::{builtin_constant, builtin_quasi_homogeneous, expression_symbol};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ed(m: &CMatrix) -> EigenData {
        matrix_eigen_data(m, 0, 0, None).unwrap()
    }

    fn gens(k: Vec<u32>, cap: u32, cs: &[PseudoHomogeneousSymbol]) -> Generators {
        let cfg = PartitionConfig::new(k, 0.0).unwrap();
        Generators::new(&Assembler::new(QuadConfig::default()), Arc::new(GlobalBasis::new(&cfg, cap)), cs).unwrap()
    }

    #[test]
    fn distinct_examples() {
        let id = CMatrix::identity(3, 3);
        assert_eq!(distinct_eigenvalues(&ed(&id)).values, vec![C64::new(1.0, 0.0)]);
        let mut nil = CMatrix::zeros(3, 3);
        nil[(0, 2)] = C64::new(1.0, 0.0);
        assert_eq!(distinct_eigenvalues(&ed(&nil)).n(), 1);
        let diag = CMatrix::from_diagonal(&crate::CVector::from_vec(
            [0.7, -0.2, 0.7, 0.1].iter().map(|&x| C64::new(x, 0.0)).collect(),
        ));
        let v: Vec<f64> = distinct_eigenvalues(&ed(&diag)).values.iter().map(|z| z.re).collect();
        assert_eq!(v, vec![-0.2, 0.1, 0.7]);
    }

    #[test]
    fn h_examples() {
        let id = CMatrix::identity(2, 2);
        let h = h_polynomial(&ed(&id), 1).unwrap();
        assert_eq!(h.coeffs, vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
        let mut nil = CMatrix::zeros(2, 2);
        nil[(0, 1)] = C64::new(0.5, 0.0);
        let h = h_polynomial(&ed(&nil), 1).unwrap();
        assert!((h.eval_matrix(&nil) - &nil).norm() < 1e-15);
        assert!(!h_annihilates(&nil, &ed(&nil), 1e-8).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let dvals = [0.5, -1.0, 0.5, 2.0].map(|x| C64::new(x, 0.0));
        let b = &p * CMatrix::from_diagonal(&crate::CVector::from_vec(dvals.to_vec())) * p.clone().try_inverse().unwrap();
        let e = ed(&b);
        assert_eq!(e.eigenvalues.len(), 3);
        assert!(h_annihilates(&b, &e, 1e-8).unwrap());
        assert!(is_diagonalizable(&b, &e, RANK_TOL).diagonalizable);
    }

    #[test]
    fn diagonalizability_examples() {
        let d = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]));
        assert!(is_diagonalizable(&d, &ed(&d), RANK_TOL).diagonalizable);
        let mut j = CMatrix::identity(2, 2) * C64::new(3.0, 0.0);
        j[(0, 1)] = C64::new(1.0, 0.0);
        let r = is_diagonalizable(&j, &ed(&j), RANK_TOL);
        assert!(!r.diagonalizable);
        assert_eq!(r.defects, vec![Defect { eigenvalue: C64::new(3.0, 0.0), algebraic: 2, geometric: 1 }]);
        let asm = Assembler::new(QuadConfig::default());
        let q = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let b = asm.block(&q, 1).unwrap();
        assert!(!is_diagonalizable(&b.matrix, &ed(&b.matrix), RANK_TOL).diagonalizable);
    }

    #[test]
    fn semisimplicity_examples() {
        let asm = Assembler::new(QuadConfig::default());
        let b = expression_symbol(1, 2, "s1^2", true).unwrap();
        let b2 = expression_symbol(2, 3, "s1*s2 + s3", true).unwrap();
        let rep = is_semisimple(&asm, &[&b, &b2], 8, RANK_TOL).unwrap();
        assert!(matches!(rep.verdict, SemisimpleVerdict::Structural { dmax: 8, .. }));
        let q = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let rep = is_semisimple(&asm, &[&q], 8, RANK_TOL).unwrap();
        match rep.verdict {
            SemisimpleVerdict::NotSemisimple { group, degree, structural } => {
                assert_eq!((group, degree), (0, 1));
                assert!(structural.is_some());
            }
            v => panic!("unexpected verdict {v:?}"),
        }
        let one = builtin_constant(1, 2, 2.0);
        assert!(is_semisimple(&asm, &[&one], 5, RANK_TOL).unwrap().verdict.is_semisimple());
    }

    #[test]
    fn radical_generator_examples() {
        let g = gens(vec![2], 4, &[expression_symbol(1, 2, "s1^2", true).unwrap()]);
        let r = radical_generator(&g, 0, &Coefficient::indicator(0, 2), 10, 4, 10_000).unwrap();
        assert!(r.operator.frobenius_norm() < 1e-13);

        let g = gens(vec![2], 4, &[builtin_quasi_homogeneous(1, &[1, -1]).unwrap()]);
        let r = radical_generator(&g, 0, &Coefficient::indicator(0, 1), 1, 4, 10_000).unwrap();
        let direct = g
            .assemble(&FiniteSum::term(Coefficient::indicator(0, 1), vec![1]))
            .unwrap();
        assert!(r.operator.sub(&direct).frobenius_norm() < 1e-15);
        assert!(r.operator.frobenius_norm() > 1e-6);
        assert_eq!(r.status, FLStatus::Infinite);
        let pts = sample_ideal_space(&g, 4, &SamplingConfig::default()).unwrap();
        for p in &pts {
            assert!(evaluate_gelfand(&r.sum, p).unwrap().norm() < 1e-8);
        }
        let pn = power_norms(&r.operator, 6);
        assert!(pn.windows(2).all(|w| w[1] <= w[0]));
        assert!(radical_generator(&g, 0, &Coefficient::one(), 1, 4, 10_000).is_err());
    }

    #[test]
    fn norm_constant_examples() {
        let c = norm_constants(2, &[C64::new(0.0, 0.0)], 0, 3);
        assert_eq!(c.values, vec![2.0]);
        let c = norm_constants(2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 0, 3);
        assert!((c.values[1] - 2.0 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn division_examples() {
        let g = gens(vec![1, 2], 4, &[expression_symbol(2, 2, "s1^2", true).unwrap()]);
        let dg = FiniteSum::diagonal(Coefficient::expression("1/(1+k1)"), 2);
        let dec = decompose_by_division(&g, &dg, 1, 2).unwrap();
        assert!(dec.residual < 1e-12);
        assert!(dec.structural_ok);
        for p in &dec.parts {
            if p.level > 0 {
                assert!(p.product.frobenius_norm() < 1e-14);
            }
        }

        let g = gens(vec![2], 4, &[builtin_constant(1, 2, 0.5)]);
        let t = FiniteSum::generator(0, 1);
        let dec = decompose_by_division(&g, &t, 0, 2).unwrap();
        assert_eq!(dec.roots.len(), 1);
        assert!(dec.residual < 1e-14);
        let s0 = &dec.parts.iter().find(|p| p.level == 0).unwrap().s_matrix;
        let q = crate::assembly::projection(crate::assembly::ProjectionKind::Q { group: 0, degree: 2 }, g.basis()).unwrap();
        let expect = q.to_operator(g.basis().clone()).scale(C64::new(0.5, 0.0));
        assert!(s0.sub(&expect).frobenius_norm() < 1e-14);

        let g = gens(vec![2], 3, &[expression_symbol(1, 2, "s1^2 + 0.2*s1*s2*t1*conj(t2)", true).unwrap()]);
        let a = FiniteSum::generator(0, 1)
            .mul(&FiniteSum::generator(0, 1))
            .mul(&FiniteSum::generator(0, 1))
            .add(&FiniteSum::term(Coefficient::expression("1/(2+k1)"), vec![2]))
            .add(&FiniteSum::diagonal(Coefficient::scalar(C64::new(0.0, 1.0)), 1));
        let dec = decompose_by_division(&g, &a, 0, 2).unwrap();
        assert_eq!(dec.roots.len(), 3);
        assert!(dec.residual < 1e-9, "{}", dec.residual);
        assert!(dec.structural_ok);
    }
}
