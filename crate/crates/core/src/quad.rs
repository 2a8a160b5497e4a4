//! Quadrature on simplices and tori.
//!
//! Simplex rules collapse `Δ_p` onto the unit cube (Duffy map
//! `s_1 = u_1`, `s_i = u_i ∏_{l<i} (1 - u_l)`) and use a one-dimensional rule
//! per axis. Two axis families are provided:
//!
//! * Gauss–Jacobi, with any Dirichlet-type weight
//!   `∏ s_i^{e_i} (1 - Σ s)^{e_{p+1}}` and the Duffy Jacobian absorbed into the
//!   per-axis Jacobi weights. Exact for polynomials of total degree
//!   `2·order - 1` against that weight, and stable for singular weights such as
//!   `(1 - Σ s)^lambda` with `lambda` close to `-1`.
//! * Angular, `u = sin²φ` with Gauss–Legendre in `φ`. Spectrally accurate for
//!   integrands that are smooth functions of `sqrt(s_i)` and `sqrt(1 - Σ s)`,
//!   which is the natural regularity of integrands pulled back from the unit
//!   sphere.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::ln_gamma;
use crate::{Error, Result, C64};

/// Nodes and weights of a one-dimensional rule on `[0, 1]` for the weight
/// `x^a (1 - x)^b`. Weights are normalized to sum to one; the total mass
/// `B(a+1, b+1)` is kept separately in log form.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub ln_mass: f64,
}

impl GaussJacobi {
    /// Golub–Welsch construction from the Jacobi three-term recurrence.
    pub fn new(order: usize, a: f64, b: f64) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
        // On [-1, 1] the weight is (1 - t)^alpha (1 + t)^beta with x = (1 + t)/2.
        let (alpha, beta) = (b, a);
        let ab = alpha + beta;
        let mut diag = vec![0.0; order];
        let mut off = vec![0.0; order.saturating_sub(1)];
        diag[0] = (beta - alpha) / (ab + 2.0);
        for (i, d) in diag.iter_mut().enumerate().skip(1) {
            let n = i as f64;
            *d = (beta * beta - alpha * alpha) / ((2.0 * n + ab) * (2.0 * n + ab + 2.0));
        }
        for (i, o) in off.iter_mut().enumerate() {
            let n = (i + 1) as f64;
            let b2 = if i == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * n * (n + alpha) * (n + beta) * (n + ab)
                    / ((2.0 * n + ab).powi(2) * (2.0 * n + ab + 1.0) * (2.0 * n + ab - 1.0))
            };
            *o = b2.sqrt();
        }
        let mut jac = DMatrix::<f64>::zeros(order, order);
        for i in 0..order {
            jac[(i, i)] = diag[i];
        }
        for i in 0..order.saturating_sub(1) {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let t = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                ((1.0 + t) / 2.0, v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        GaussJacobi {
            nodes: pairs.iter().map(|p| p.0.clamp(0.0, 1.0)).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
            ln_mass: ln_beta(a + 1.0, b + 1.0),
        }
    }

    /// Gauss–Legendre on `[0, 1]`.
    pub fn legendre(order: usize) -> Self {
        Self::new(order, 0.0, 0.0)
    }
}

fn ln_beta(x: f64, y: f64) -> f64 {
    ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)
}

/// Axis family of a [`SimplexRule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    GaussJacobi,
    Angular,
}

/// A tensor-product rule on the simplex `Δ_p = {s in R_+^p : Σ s <= 1}`.
///
/// `integrate(f)` approximates `∫_{Δ_p} f(s) w(s) ds` where `w` is the
/// Dirichlet weight the rule was built for. Weights are stored relative to
/// `exp(ln_scale)` so that very small masses stay representable.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    dim: usize,
    kind: AxisKind,
    exactness: Option<u32>,
    nodes: Vec<f64>,
    remainders: Vec<f64>,
    weights: Vec<f64>,
    ln_scale: f64,
}

impl SimplexRule {
    /// Gauss–Jacobi rule for the weight `∏_{i<=p} s_i^{e_i} (1 - Σ s)^{e_{p+1}}`.
    /// `exponents` has length `p + 1`; pass zeros for the plain volume element.
    pub fn gauss_jacobi(dim: usize, order: usize, exponents: &[f64]) -> Result<Self> {
        check_exponents(dim, exponents)?;
        if dim == 0 {
            return Ok(Self::point(AxisKind::GaussJacobi));
        }
        let axes: Vec<GaussJacobi> = (0..dim)
            .map(|i| {
                let a = exponents[i];
                let b = (dim - 1 - i) as f64 + exponents[i + 1..].iter().sum::<f64>();
                GaussJacobi::new(order, a, b)
            })
            .collect();
        let ln_scale = axes.iter().map(|g| g.ln_mass).sum();
        let (nodes, remainders, weights) = tensor_collapse(dim, &axes, |_, _| 1.0);
        Ok(SimplexRule {
            dim,
            kind: AxisKind::GaussJacobi,
            exactness: Some(2 * order as u32 - 1),
            nodes,
            remainders,
            weights,
            ln_scale,
        })
    }

    /// Angular rule for the same Dirichlet weight, evaluated pointwise.
    pub fn angular(dim: usize, order: usize, exponents: &[f64]) -> Result<Self> {
        check_exponents(dim, exponents)?;
        if dim == 0 {
            return Ok(Self::point(AxisKind::Angular));
        }
        let gl = GaussJacobi::legendre(order);
        let half_pi = std::f64::consts::FRAC_PI_2;
        // Per axis: u = sin²φ, du = sin 2φ dφ; the Dirichlet weight and the
        // Duffy Jacobian are multiplied in pointwise.
        let axes: Vec<GaussJacobi> = (0..dim)
            .map(|_| GaussJacobi {
                nodes: gl.nodes.iter().map(|&x| (x * half_pi).sin().powi(2)).collect(),
                weights: gl
                    .nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(&x, &w)| w * half_pi * (2.0 * x * half_pi).sin())
                    .collect(),
                ln_mass: 0.0,
            })
            .collect();
        let weight_fn = |i: usize, u: f64| -> f64 {
            let a = exponents[i];
            let b = (dim - 1 - i) as f64 + exponents[i + 1..].iter().sum::<f64>();
            pow_or_one(u, a) * pow_or_one(1.0 - u, b)
        };
        let (nodes, remainders, weights) = tensor_collapse(dim, &axes, weight_fn);
        Ok(SimplexRule { dim, kind: AxisKind::Angular, exactness: None, nodes, remainders, weights, ln_scale: 0.0 })
    }

    fn point(kind: AxisKind) -> Self {
        SimplexRule {
            dim: 0,
            kind,
            exactness: None,
            nodes: vec![],
            remainders: vec![1.0],
            weights: vec![1.0],
            ln_scale: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> AxisKind {
        self.kind
    }

    /// Total polynomial degree integrated exactly against the rule's weight,
    /// if the rule has one.
    pub fn exactness(&self) -> Option<u32> {
        self.exactness
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// `1 - Σ s` at node `i`, computed as a product so it keeps full
    /// relative accuracy near the far face.
    pub fn remainder(&self, i: usize) -> f64 {
        self.remainders[i]
    }

    /// Absolute weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i] * self.ln_scale.exp()
    }

    /// Weights relative to `exp(ln_scale)`.
    pub fn relative_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    /// `∫ f w ds`, summing nodes in index order.
    pub fn integrate<F>(&self, f: F) -> Result<C64>
    where
        F: Fn(&[f64]) -> C64,
    {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.len() {
            let v = f(self.node(i));
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { context: format!("simplex integrand at node {:?}", self.node(i)) });
            }
            acc += v * self.weights[i];
        }
        Ok(acc * self.ln_scale.exp())
    }
}

fn pow_or_one(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.max(0.0).powf(e)
    }
}

fn check_exponents(dim: usize, exponents: &[f64]) -> Result<()> {
    if exponents.len() != dim + 1 {
        return Err(Error::OutOfRange(format!(
            "simplex of dimension {dim} needs {} weight exponents, got {}",
            dim + 1,
            exponents.len()
        )));
    }
    if let Some(e) = exponents.iter().find(|&&e| !(e > -1.0)) {
        return Err(Error::OutOfRange(format!("weight exponent {e} must exceed -1")));
    }
    Ok(())
}

/// Tensor the per-axis rules and push the nodes through the Duffy map.
/// `extra(i, u)` multiplies the weight on axis `i`.
fn tensor_collapse<W>(dim: usize, axes: &[GaussJacobi], extra: W) -> (Vec<f64>, Vec<f64>, Vec<f64>)
where
    W: Fn(usize, f64) -> f64,
{
    let sizes: Vec<usize> = axes.iter().map(|a| a.nodes.len()).collect();
    let total: usize = sizes.iter().product();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut remainders = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        let mut rem = 1.0;
        for i in 0..dim {
            let u = axes[i].nodes[idx[i]];
            w *= axes[i].weights[idx[i]] * extra(i, u);
            nodes.push(u * rem);
            rem *= 1.0 - u;
        }
        weights.push(w);
        remainders.push(rem);
        for i in (0..dim).rev() {
            idx[i] += 1;
            if idx[i] < sizes[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    (nodes, remainders, weights)
}

/// `ln ∫_{Δ_{k-1}} ∏_{l<k} s_l^{a_l} (1 - Σ s)^{a_k} ds = ln(∏ Γ(a_l + 1) / Γ(k + Σ a_l))`.
pub fn ln_dirichlet_integral(a: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::OutOfRange("Dirichlet integral needs at least one exponent".into()));
    }
    if let Some(x) = a.iter().find(|&&x| !(x > -1.0)) {
        return Err(Error::OutOfRange(format!("Dirichlet exponent {x} must exceed -1")));
    }
    let k = a.len() as f64;
    let num: f64 = a.iter().map(|&x| ln_gamma(x + 1.0)).sum();
    Ok(num - ln_gamma(k + a.iter().sum::<f64>()))
}

/// Closed form of the Dirichlet integral over `Δ_{k-1}`; see
/// [`ln_dirichlet_integral`].
pub fn dirichlet_integral(a: &[f64]) -> Result<f64> {
    ln_dirichlet_integral(a).map(f64::exp)
}

/// `∫_{Δ_p} f(s) ds` with a Gauss–Jacobi rule of the given order per axis.
pub fn simplex_integrate<F>(f: F, dim: usize, order: usize) -> Result<C64>
where
    F: Fn(&[f64]) -> C64,
{
    if order == 0 {
        return Err(Error::OutOfRange("quadrature order must be at least 1".into()));
    }
    SimplexRule::gauss_jacobi(dim, order, &vec![0.0; dim + 1])?.integrate(f)
}

/// `ĉ(s, p) = ∫_{T^k} c(s, t) t^{-p} dμ` by the uniform product rule with
/// `grid` points per axis. Exact for trigonometric polynomials whose modes
/// stay below `grid / 2` in every coordinate.
pub fn torus_fourier_coefficient<F>(c: F, p: &[i32], s: &[f64], grid: usize) -> Result<C64>
where
    F: Fn(&[f64], &[C64]) -> C64,
{
    let samples = torus_samples(|t| Ok(c(s, t)), p.len(), grid)?;
    Ok(fourier_from_samples(&samples, grid, p))
}

/// Values of `c` on the uniform grid of `T^k`, last coordinate fastest.
pub fn torus_samples<F>(c: F, k: usize, grid: usize) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<C64>,
{
    if grid == 0 {
        return Err(Error::OutOfRange("torus grid must be positive".into()));
    }
    let roots = roots_of_unity(grid);
    let total = grid.pow(k as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; k];
    let mut t = vec![C64::new(1.0, 0.0); k];
    for _ in 0..total {
        for l in 0..k {
            t[l] = roots[idx[l]];
        }
        let v = c(&t)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { context: "torus sample".into() });
        }
        out.push(v);
        for l in (0..k).rev() {
            idx[l] += 1;
            if idx[l] < grid {
                break;
            }
            idx[l] = 0;
        }
    }
    Ok(out)
}

/// Mode `p` of samples produced by [`torus_samples`].
pub fn fourier_from_samples(samples: &[C64], grid: usize, p: &[i32]) -> C64 {
    let roots = roots_of_unity(grid);
    let k = p.len();
    let g = grid as i64;
    let steps: Vec<i64> = p.iter().map(|&x| (-(x as i64)).rem_euclid(g)).collect();
    let mut idx = vec![0usize; k];
    let mut phase: i64 = 0;
    let mut acc = C64::new(0.0, 0.0);
    for v in samples {
        acc += v * roots[phase as usize];
        for l in (0..k).rev() {
            idx[l] += 1;
            phase = (phase + steps[l]) % g;
            if idx[l] < grid {
                break;
            }
            // A full turn of axis l adds grid·step ≡ 0, so the phase is already right.
            idx[l] = 0;
        }
    }
    acc / samples.len() as f64
}

/// `exp(2πi m / grid)` for `m = 0..grid`.
pub fn roots_of_unity(grid: usize) -> Vec<C64> {
    (0..grid)
        .map(|m| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / grid as f64))
        .collect()
}

/// Fourier data of one pseudo-homogeneous symbol at a fixed set of
/// `s`-nodes: `values[p][i] = ĉ_j(s_i, p)`.
#[derive(Debug, Clone, Default)]
pub struct FourierTable {
    pub group: usize,
    pub values: BTreeMap<Vec<i32>, Vec<C64>>,
}

impl FourierTable {
    pub fn new(group: usize) -> Self {
        FourierTable { group, values: BTreeMap::new() }
    }

    pub fn get(&self, p: &[i32]) -> Option<&[C64]> {
        self.values.get(p).map(|v| v.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dirichlet_examples() {
        assert!((dirichlet_integral(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((dirichlet_integral(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((dirichlet_integral(&[1.0, 1.0, 0.0]).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert!(dirichlet_integral(&[-1.0, 0.0]).is_err());
    }

    #[test]
    fn gauss_jacobi_moments() {
        // ∫ x^j x^a (1-x)^b dx = B(a+j+1, b+1)
        let (a, b) = (0.5, 2.25);
        let rule = GaussJacobi::new(12, a, b);
        for j in 0..20 {
            let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(j)).sum::<f64>()
                * rule.ln_mass.exp();
            let exact = ln_beta(a + j as f64 + 1.0, b + 1.0).exp();
            assert!((approx - exact).abs() < 1e-13 * exact, "j={j}");
        }
    }

    #[test]
    fn simplex_examples() {
        let v = simplex_integrate(|_| c1(1.0), 2, 4).unwrap();
        assert!((v.re - 0.5).abs() < 1e-14);
        let v = simplex_integrate(|s| c1(s[0] * s[1]), 2, 4).unwrap();
        assert!((v.re - 1.0 / 24.0).abs() < 1e-15);
        let v = simplex_integrate(|s| c1(1.0 - s[0] - s[1]), 2, 4).unwrap();
        assert!((v.re - 1.0 / 6.0).abs() < 1e-15);
        assert!(simplex_integrate(|_| c1(f64::NAN), 1, 3).is_err());
    }

    #[test]
    fn constants_integrate_to_volume() {
        let mut fact = 1.0;
        for p in 1..=4usize {
            fact *= p as f64;
            for kind in [AxisKind::GaussJacobi, AxisKind::Angular] {
                let rule = match kind {
                    AxisKind::GaussJacobi => SimplexRule::gauss_jacobi(p, 10, &vec![0.0; p + 1]),
                    AxisKind::Angular => SimplexRule::angular(p, 24, &vec![0.0; p + 1]),
                }
                .unwrap();
                let v = rule.integrate(|_| c1(1.0)).unwrap();
                assert!((v.re - 1.0 / fact).abs() < 1e-12, "p={p} {kind:?}");
                for i in 0..rule.len() {
                    assert!(rule.weight(i) > 0.0);
                    let s = rule.node(i);
                    assert!(s.iter().all(|&x| x >= 0.0) && s.iter().sum::<f64>() <= 1.0 + 1e-14);
                }
            }
        }
    }

    #[test]
    fn angular_rule_handles_half_integer_powers() {
        let exact = dirichlet_integral(&[1.5, 0.5, 2.0]).unwrap();
        let rule = SimplexRule::angular(2, 40, &[0.0, 0.0, 0.0]).unwrap();
        let v = rule.integrate(|s| c1(s[0].powf(1.5) * s[1].sqrt() * (1.0 - s[0] - s[1]).powi(2))).unwrap();
        assert!((v.re - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn fourier_coefficient_of_character() {
        let q = [2, -1];
        let c = |_: &[f64], t: &[C64]| t[0].powi(q[0]) * t[1].powi(q[1]);
        for p in [[2, -1], [0, 0], [1, -1], [-2, 1]] {
            let v = torus_fourier_coefficient(c, &p, &[0.5, 0.5], 8).unwrap();
            let expected = if p == q { 1.0 } else { 0.0 };
            assert!((v - c1(expected)).norm() < 1e-14, "p={p:?}");
        }
    }

    #[test]
    fn fourier_coefficient_of_invariant_product() {
        // c = s1 s2 (t1 conj(t2) + conj(t1) t2); mode (1,-1) gives s1 s2
        let c = |s: &[f64], t: &[C64]| (t[0] * t[1].conj() + t[0].conj() * t[1]) * (s[0] * s[1]);
        let s = [0.6, 0.8];
        let v = torus_fourier_coefficient(c, &[1, -1], &s, 16).unwrap();
        assert!((v - c1(0.48)).norm() < 1e-14);
        let v = torus_fourier_coefficient(c, &[1, 0], &s, 16).unwrap();
        assert!(v.norm() < 1e-14);
    }
}
