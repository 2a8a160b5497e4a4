//! Independent numerical oracles for the closed forms used by the library.

use toeplitz_core::lattice::{monomial_norm_sq, GlobalBasis, MultiIndex, PartitionConfig};
use toeplitz_core::quad::dirichlet_integral;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn gamma(x: f64) -> f64 {
    // Lanczos, g = 7.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `‖z^alpha‖^2` in the weighted space over `B^2`, by polar coordinates
/// `|z_l|^2 = u_l` and nested Simpson rules on the triangle.
fn brute_norm_sq_2d(alpha: [u32; 2], lambda: f64) -> f64 {
    let n = 2.0;
    let c = gamma(n + lambda + 1.0) / gamma(lambda + 1.0);
    let inner = |u1: f64| {
        let top = 1.0 - u1;
        simpson(|u2| u2.powi(alpha[1] as i32) * (top - u2).max(0.0).powf(lambda), 0.0, top, 400) * u1.powi(alpha[0] as i32)
    };
    c * simpson(inner, 0.0, 1.0, 400)
}

#[test]
fn monomial_norms_match_polar_integration() {
    for lambda in [0.0, 1.0, 2.5] {
        let cfg = PartitionConfig::new(vec![1, 1], lambda).unwrap();
        for alpha in [[0, 0], [1, 0], [2, 1], [3, 3], [0, 5]] {
            let closed = monomial_norm_sq(&MultiIndex(alpha.to_vec()), &cfg).unwrap();
            let brute = brute_norm_sq_2d(alpha, lambda);
            assert!((closed - brute).abs() < 1e-7 * closed.max(1e-3), "alpha={alpha:?} lambda={lambda}: {closed} vs {brute}");
        }
    }
}

#[test]
fn dirichlet_matches_nested_simpson() {
    for a in [[0.0, 0.0, 0.0], [1.0, 2.0, 0.0], [0.5, 1.5, 2.0], [3.0, 0.5, 1.0]] {
        let closed = dirichlet_integral(&a).unwrap();
        // x = v^2 and y = (1 - x) w^2 keep half-integer powers smooth.
        let inner = |v: f64| {
            let x = v * v;
            let top = 1.0 - x;
            let f = |w: f64| {
                let y = top * w * w;
                2.0 * top * w * y.powf(a[1]) * (top - y).max(0.0).powf(a[2])
            };
            2.0 * v * x.powf(a[0]) * simpson(f, 0.0, 1.0, 800)
        };
        let brute = simpson(inner, 0.0, 1.0, 800);
        assert!((closed - brute).abs() < 1e-6 * closed, "{a:?}: {closed} vs {brute}");
    }
}

#[test]
fn truncation_dimension_counts_monomials() {
    // |alpha| <= cap in Z_+^n has C(cap + n, n) elements.
    for (k, cap) in [(vec![1, 1], 6), (vec![1, 2], 5), (vec![2, 2], 4), (vec![1, 1, 2], 3)] {
        let cfg = PartitionConfig::new(k.clone(), 0.0).unwrap();
        let basis = GlobalBasis::new(&cfg, cap);
        let n: u32 = k.iter().sum();
        let mut expect = 1u64;
        for i in 1..=n as u64 {
            expect = expect * (cap as u64 + i) / i;
        }
        assert_eq!(basis.dim() as u64, expect, "k={k:?}");
        for i in 0..basis.dim() {
            assert_eq!(basis.index_of(&basis.alpha_at(i)), Some(i));
        }
    }
}
