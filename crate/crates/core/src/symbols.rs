//! Quasi-radial and generalized pseudo-homogeneous symbols.
//!
//! Inside group `j` a point is written `z_l = r s_l t_l` with `s` on the
//! positive part of the unit sphere and `t` on the torus. A pseudo-homogeneous
//! symbol is a function `c(s, t)` invariant under `t -> g t` for scalar `g`
//! in the unit circle, so only Fourier modes `p` with `Σ p = 0` occur.
//! Expression variables `s1..sk` are these sphere coordinates, so `s1^2` is
//! `|z_1|^2 / |z|^2`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{self, Env, Expr, VarKind};
use crate::quad::roots_of_unity;
use crate::{Error, Result, C64};

/// Bound above which sampled symbol values are treated as unbounded.
pub const BOUNDEDNESS_LIMIT: f64 = 1e12;
const LOAD_SAMPLES: usize = 256;
const LOAD_TOL: f64 = 1e-10;
const SEED: u64 = 0x5eed_0f_7e9;

/// Serialized form of a quasi-radial symbol `a(r_1, ..., r_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuasiRadialSpec {
    Constant {
        value: f64,
        #[serde(default)]
        imag: f64,
    },
    Expression {
        expr: String,
    },
}

/// A validated quasi-radial symbol.
#[derive(Debug, Clone)]
pub struct QuasiRadialSymbol {
    spec: QuasiRadialSpec,
    m: usize,
    expr: Option<Expr>,
}

impl QuasiRadialSymbol {
    /// Parses and validates against `m` groups: only `r1..rm` may appear,
    /// and sampled values on `{r >= 0, Σ r² <= 1}` must be finite and bounded.
    pub fn new(spec: QuasiRadialSpec, m: usize) -> Result<Self> {
        let expr = match &spec {
            QuasiRadialSpec::Constant { .. } => None,
            QuasiRadialSpec::Expression { expr } => {
                let e = expr::parse(expr)?;
                for v in e.variables() {
                    if v.kind != VarKind::R || v.index >= m {
                        return Err(Error::InvalidSymbol(format!(
                            "quasi-radial expression may only use r1..r{m}, found `{v}`"
                        )));
                    }
                }
                Some(e)
            }
        };
        let sym = QuasiRadialSymbol { spec, m, expr };
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..LOAD_SAMPLES {
            let x = random_simplex_point(&mut rng, m, true);
            let r: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
            check_bounded(sym.eval(&r)?, "quasi-radial symbol")?;
        }
        Ok(sym)
    }

    pub fn constant(value: f64, m: usize) -> Self {
        QuasiRadialSymbol { spec: QuasiRadialSpec::Constant { value, imag: 0.0 }, m, expr: None }
    }

    pub fn spec(&self) -> &QuasiRadialSpec {
        &self.spec
    }

    pub fn groups(&self) -> usize {
        self.m
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self.spec {
            QuasiRadialSpec::Constant { value, imag } => Some(C64::new(value, imag)),
            _ => None,
        }
    }

    pub fn eval(&self, r: &[f64]) -> Result<C64> {
        match (&self.spec, &self.expr) {
            (QuasiRadialSpec::Constant { value, imag }, _) => Ok(C64::new(*value, *imag)),
            (_, Some(e)) => e.eval(&Env { r, ..Default::default() }),
            _ => unreachable!("expression symbols always carry a parsed tree"),
        }
    }
}

/// The profile of a pseudo-homogeneous symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `c ≡ value`.
    Constant {
        value: f64,
        #[serde(default)]
        imag: f64,
    },
    /// `c = s_1^{|p_1|} ··· s_k^{|p_k|} t^p`.
    QuasiHomogeneous { p: Vec<i32> },
    /// `c = b(s) t^p` with `b` an expression in `s1..sk`.
    PseudoHomogeneous { b: String, p: Vec<i32> },
    /// Any expression in `s1..sk, t1..tk`.
    Expression { expr: String },
    /// Sum of profiles.
    Sum { terms: Vec<ProfileSpec> },
}

/// Serialized pseudo-homogeneous symbol attached to a group (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub group: usize,
    pub profile: ProfileSpec,
    /// User assertion that the symbol extends continuously to the boundary
    /// sphere; required for essential spectrum estimates.
    #[serde(default)]
    pub boundary_continuous: bool,
}

#[derive(Debug, Clone)]
enum Profile {
    Constant(C64),
    Monomial { b: Option<Expr>, p: Vec<i32> },
    Expression { expr: Expr, t_free: bool },
    Sum(Vec<Profile>),
}

/// A validated generalized pseudo-homogeneous symbol on group `j`.
#[derive(Debug, Clone)]
pub struct PseudoHomogeneousSymbol {
    spec: SymbolSpec,
    kj: usize,
    profile: Profile,
}

/// Outcome of [`check_invariance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub worst: f64,
}

impl PseudoHomogeneousSymbol {
    /// Parses, then rejects symbols that are not torus invariant, use foreign
    /// variables, or are unbounded or non-finite on samples.
    pub fn new(spec: SymbolSpec, kj: usize) -> Result<Self> {
        if spec.group == 0 {
            return Err(Error::InvalidSymbol("group indices are 1-based".into()));
        }
        let profile = build_profile(&spec.profile, kj)?;
        let sym = PseudoHomogeneousSymbol { spec, kj, profile };
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x77);
        for _ in 0..LOAD_SAMPLES {
            let (s, t) = random_sphere_torus(&mut rng, kj);
            check_bounded(sym.eval(&s, &t)?, "pseudo-homogeneous symbol")?;
        }
        let inv = check_invariance(&sym, LOAD_SAMPLES, LOAD_TOL);
        if !inv.invariant {
            return Err(Error::InvalidSymbol(format!(
                "symbol on group {} is not invariant under the diagonal torus action (violation {:.3e})",
                sym.spec.group, inv.worst
            )));
        }
        if sym.spec.boundary_continuous {
            sym.boundary_sanity(&mut rng)?;
        }
        Ok(sym)
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// Zero-based group index.
    pub fn group(&self) -> usize {
        self.spec.group - 1
    }

    pub fn kj(&self) -> usize {
        self.kj
    }

    pub fn boundary_continuous(&self) -> bool {
        self.spec.boundary_continuous
    }

    /// Deterministic textual key of the spec, used for memoization and cache
    /// hashing.
    pub fn canonical_key(&self) -> String {
        format!("k={};{:?}", self.kj, self.spec.profile)
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self.profile {
            Profile::Constant(v) => Some(v),
            _ => None,
        }
    }

    /// `c(s, t)` with `s` on the positive unit sphere.
    pub fn eval(&self, s: &[f64], t: &[C64]) -> Result<C64> {
        eval_profile(&self.profile, s, t)
    }

    /// Declared Fourier support, when known analytically. `None` means the
    /// coefficients are computed by sampling.
    pub fn declared_support(&self) -> Option<BTreeSet<Vec<i32>>> {
        declared_support(&self.profile, self.kj)
    }

    /// True when every block is diagonal: the symbol does not depend on `t`.
    pub fn is_t_free(&self) -> bool {
        self.declared_support().is_some_and(|s| s.iter().all(|p| p.iter().all(|&x| x == 0)))
    }

    /// True when every mode in the declared support is nonzero, so every
    /// block is strictly triangular in the block order and hence nilpotent.
    pub fn is_single_nonzero_mode(&self) -> bool {
        self.declared_support()
            .is_some_and(|s| s.len() == 1 && s.iter().all(|p| p.iter().any(|&x| x != 0)))
    }

    /// `ĉ(s, p)` for each requested mode at sphere point `s`. Analytic for
    /// declared supports; otherwise by the uniform rule on the torus reduced
    /// by invariance to `t_1 = 1`, with `grid` points per remaining axis.
    pub fn fourier_coefficients(&self, s: &[f64], modes: &[Vec<i32>], grid: usize) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); modes.len()];
        self.add_fourier(&self.profile, s, modes, grid, &mut out)?;
        Ok(out)
    }

    fn add_fourier(&self, profile: &Profile, s: &[f64], modes: &[Vec<i32>], grid: usize, out: &mut [C64]) -> Result<()> {
        match profile {
            Profile::Constant(v) => {
                for (o, p) in out.iter_mut().zip(modes) {
                    if p.iter().all(|&x| x == 0) {
                        *o += v;
                    }
                }
            }
            Profile::Monomial { b, p: q } => {
                for (o, p) in out.iter_mut().zip(modes) {
                    if p == q {
                        *o += monomial_b(b, q, s)?;
                    }
                }
            }
            Profile::Expression { expr, t_free: true } => {
                let v = expr.eval(&Env { s, ..Default::default() })?;
                for (o, p) in out.iter_mut().zip(modes) {
                    if p.iter().all(|&x| x == 0) {
                        *o += v;
                    }
                }
            }
            Profile::Expression { .. } => {
                let vals = reduced_torus_coefficients(|t| eval_profile(profile, s, t), self.kj, modes, grid)?;
                for (o, v) in out.iter_mut().zip(vals) {
                    *o += v;
                }
            }
            Profile::Sum(terms) => {
                for term in terms {
                    self.add_fourier(term, s, modes, grid, out)?;
                }
            }
        }
        Ok(())
    }

    fn boundary_sanity(&self, rng: &mut ChaCha8Rng) -> Result<()> {
        // c depends on the direction only, so continuity up to the sphere is
        // continuity in (s, t). Walk random paths and look for jumps.
        const STEPS: usize = 2000;
        for _ in 0..16 {
            let (s0, t0) = random_sphere_torus(rng, self.kj);
            let (s1, t1) = random_sphere_torus(rng, self.kj);
            let mut prev: Option<C64> = None;
            let mut scale: f64 = 1.0;
            let mut worst: f64 = 0.0;
            for step in 0..=STEPS {
                let h = step as f64 / STEPS as f64;
                let mut s: Vec<f64> = s0.iter().zip(&s1).map(|(a, b)| (1.0 - h) * a + h * b).collect();
                let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
                s.iter_mut().for_each(|x| *x /= norm);
                let t: Vec<C64> = t0.iter().zip(&t1).map(|(a, b)| a * C64::from_polar(1.0, h * (b / a).arg())).collect();
                let v = self.eval(&s, &t)?;
                scale = scale.max(v.norm());
                if let Some(p) = prev {
                    worst = worst.max((v - p).norm());
                }
                prev = Some(v);
            }
            if worst > 0.1 * scale {
                return Err(Error::InvalidSymbol(format!(
                    "symbol on group {} is flagged boundary-continuous but jumps by {worst:.3e} along a sampled path",
                    self.spec.group
                )));
            }
        }
        Ok(())
    }
}

fn build_profile(spec: &ProfileSpec, kj: usize) -> Result<Profile> {
    let check_mode = |p: &[i32]| -> Result<()> {
        if p.len() != kj {
            return Err(Error::InvalidSymbol(format!("mode {p:?} must have length {kj}")));
        }
        if p.iter().map(|&x| x as i64).sum::<i64>() != 0 {
            return Err(Error::InvalidSymbol(format!("mode {p:?} must have zero sum")));
        }
        Ok(())
    };
    let check_vars = |e: &Expr, allow_t: bool| -> Result<()> {
        for v in e.variables() {
            let ok = match v.kind {
                VarKind::S => v.index < kj,
                VarKind::T => allow_t && v.index < kj,
                VarKind::R | VarKind::K => false,
            };
            if !ok {
                return Err(Error::InvalidSymbol(format!("variable `{v}` is not available in a group of size {kj}")));
            }
        }
        Ok(())
    };
    Ok(match spec {
        ProfileSpec::Constant { value, imag } => Profile::Constant(C64::new(*value, *imag)),
        ProfileSpec::QuasiHomogeneous { p } => {
            check_mode(p)?;
            Profile::Monomial { b: None, p: p.clone() }
        }
        ProfileSpec::PseudoHomogeneous { b, p } => {
            check_mode(p)?;
            let e = expr::parse(b)?;
            check_vars(&e, false)?;
            Profile::Monomial { b: Some(e), p: p.clone() }
        }
        ProfileSpec::Expression { expr } => {
            let e = expr::parse(expr)?;
            check_vars(&e, true)?;
            let t_free = !e.uses_kind(VarKind::T);
            Profile::Expression { expr: e, t_free }
        }
        ProfileSpec::Sum { terms } => {
            if terms.is_empty() {
                return Err(Error::InvalidSymbol("sum profile needs at least one term".into()));
            }
            Profile::Sum(terms.iter().map(|t| build_profile(t, kj)).collect::<Result<_>>()?)
        }
    })
}

fn monomial_b(b: &Option<Expr>, p: &[i32], s: &[f64]) -> Result<C64> {
    match b {
        None => Ok(C64::new(s.iter().zip(p).map(|(x, &q)| x.powi(q.abs())).product(), 0.0)),
        Some(e) => e.eval(&Env { s, ..Default::default() }),
    }
}

fn eval_profile(profile: &Profile, s: &[f64], t: &[C64]) -> Result<C64> {
    match profile {
        Profile::Constant(v) => Ok(*v),
        Profile::Monomial { b, p } => {
            let phase: C64 = t.iter().zip(p).map(|(z, &q)| z.powi(q)).product();
            Ok(monomial_b(b, p, s)? * phase)
        }
        Profile::Expression { expr, .. } => expr.eval(&Env { s, t, ..Default::default() }),
        Profile::Sum(terms) => terms.iter().try_fold(C64::new(0.0, 0.0), |acc, t_| Ok(acc + eval_profile(t_, s, t)?)),
    }
}

fn declared_support(profile: &Profile, kj: usize) -> Option<BTreeSet<Vec<i32>>> {
    match profile {
        Profile::Constant(_) | Profile::Expression { t_free: true, .. } => Some(BTreeSet::from([vec![0; kj]])),
        Profile::Monomial { p, .. } => Some(BTreeSet::from([p.clone()])),
        Profile::Expression { .. } => None,
        Profile::Sum(terms) => {
            let mut out = BTreeSet::new();
            for t in terms {
                out.extend(declared_support(t, kj)?);
            }
            Some(out)
        }
    }
}

/// Fourier coefficients of an invariant function on `T^k` at zero-sum modes,
/// sampling only `t_1 = 1`.
fn reduced_torus_coefficients<F>(c: F, kj: usize, modes: &[Vec<i32>], grid: usize) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<C64>,
{
    let roots = roots_of_unity(grid);
    let free = kj - 1;
    let total = grid.pow(free as u32);
    let mut out = vec![C64::new(0.0, 0.0); modes.len()];
    let mut idx = vec![0usize; free];
    let mut t = vec![C64::new(1.0, 0.0); kj];
    for _ in 0..total {
        for l in 0..free {
            t[l + 1] = roots[idx[l]];
        }
        let v = c(&t)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { context: "torus sample".into() });
        }
        for (o, p) in out.iter_mut().zip(modes) {
            if p.iter().map(|&x| x as i64).sum::<i64>() != 0 {
                continue;
            }
            let mut phase: i64 = 0;
            for l in 0..free {
                phase -= p[l + 1] as i64 * idx[l] as i64;
            }
            *o += v * roots[phase.rem_euclid(grid as i64) as usize];
        }
        for l in (0..free).rev() {
            idx[l] += 1;
            if idx[l] < grid {
                break;
            }
            idx[l] = 0;
        }
    }
    let scale = 1.0 / total as f64;
    Ok(out.into_iter().map(|v| v * scale).collect())
}

/// Samples `|c(s, g t) - c(s, t)|` at random `(s, t, g)` and reports the
/// largest violation.
pub fn check_invariance(c: &PseudoHomogeneousSymbol, samples: usize, tol: f64) -> InvarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x1);
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let (s, t) = random_sphere_torus(&mut rng, c.kj);
        let g = C64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>());
        let gt: Vec<C64> = t.iter().map(|z| g * z).collect();
        let diff = match (c.eval(&s, &t), c.eval(&s, &gt)) {
            (Ok(a), Ok(b)) => (a - b).norm(),
            _ => f64::INFINITY,
        };
        worst = worst.max(if diff.is_nan() { f64::INFINITY } else { diff });
    }
    InvarianceReport { invariant: worst <= tol, worst }
}

/// Quasi-homogeneous symbol `s^{|p|} t^p` on a group of size `p.len()`.
pub fn builtin_quasi_homogeneous(group: usize, p: &[i32]) -> Result<PseudoHomogeneousSymbol> {
    PseudoHomogeneousSymbol::new(
        SymbolSpec { group, profile: ProfileSpec::QuasiHomogeneous { p: p.to_vec() }, boundary_continuous: true },
        p.len(),
    )
}

/// The constant symbol on a group.
pub fn builtin_constant(group: usize, kj: usize, value: f64) -> PseudoHomogeneousSymbol {
    PseudoHomogeneousSymbol::new(
        SymbolSpec { group, profile: ProfileSpec::Constant { value, imag: 0.0 }, boundary_continuous: true },
        kj,
    )
    .expect("constants are valid symbols")
}

/// Parses an expression symbol.
pub fn expression_symbol(group: usize, kj: usize, text: &str, boundary_continuous: bool) -> Result<PseudoHomogeneousSymbol> {
    PseudoHomogeneousSymbol::new(
        SymbolSpec { group, profile: ProfileSpec::Expression { expr: text.to_string() }, boundary_continuous },
        kj,
    )
}

fn check_bounded(v: C64, what: &str) -> Result<()> {
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidSymbol(format!("{what} is not finite on sampled points")));
    }
    if v.norm() > BOUNDEDNESS_LIMIT {
        return Err(Error::InvalidSymbol(format!("{what} exceeds {BOUNDEDNESS_LIMIT:e} on sampled points")));
    }
    Ok(())
}

/// Uniform point of the closed simplex in `R^dim` (`closed = true`) or of
/// the probability simplex with `dim` barycentric coordinates.
pub(crate) fn random_simplex_point<R: Rng>(rng: &mut R, dim: usize, closed: bool) -> Vec<f64> {
    let n = if closed { dim + 1 } else { dim };
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e[..dim].iter().map(|x| x / total).collect()
}

/// Random `(s, t)` with `s` on the positive unit sphere in `R^k`.
pub fn random_sphere_torus<R: Rng>(rng: &mut R, kj: usize) -> (Vec<f64>, Vec<C64>) {
    let x = random_simplex_point(rng, kj, false);
    let s = x.iter().map(|v| v.sqrt()).collect();
    let t = (0..kj).map(|_| C64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>())).collect();
    (s, t)
}
