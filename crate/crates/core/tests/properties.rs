use proptest::prelude::*;
use toeplitz_core::lattice::{block_dim, enumerate_block_indices, enumerate_kappa};
use toeplitz_core::quad::{dirichlet_integral, SimplexRule};
use toeplitz_core::radical::HPolynomial;
use toeplitz_core::spectra::{cluster, polynomial_hull_2d, PlanarRegion, Window};
use toeplitz_core::C64;

proptest! {
    #[test]
    fn block_enumeration(kj in 1u32..5, d in 0u32..8) {
        let b = enumerate_block_indices(kj, d);
        prop_assert_eq!(b.len(), block_dim(kj, d));
        for (i, a) in b.indices().iter().enumerate() {
            prop_assert_eq!(a.iter().sum::<u32>(), d);
            prop_assert_eq!(b.index_of(a), Some(i));
        }
    }

    #[test]
    fn kappa_enumeration_is_graded(m in 1usize..4, cap in 0u32..6) {
        let ks = enumerate_kappa(m, cap);
        let degrees: Vec<u32> = ks.iter().map(|k| k.iter().sum()).collect();
        prop_assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*degrees.last().unwrap(), cap);
    }

    #[test]
    fn simplex_rule_reproduces_dirichlet(dim in 1usize..4, seed in any::<u64>()) {
        let mut a = vec![0.0; dim + 1];
        let mut s = seed;
        for x in a.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((s >> 33) % 9) as f64 * 0.5;
        }
        // Exponents carried by the weight: integrating 1 and a monomial is exact.
        let rule = SimplexRule::gauss_jacobi(dim, 6, &a).unwrap();
        let v = rule.integrate(|_| C64::new(1.0, 0.0)).unwrap();
        let exact = dirichlet_integral(&a).unwrap();
        prop_assert!((v.re - exact).abs() < 1e-11 * exact);
        let x2 = rule.integrate(|x| C64::new(x[0] * x[0], 0.0)).unwrap();
        let mut b = a.clone();
        b[0] += 2.0;
        prop_assert!((x2.re - dirichlet_integral(&b).unwrap()).abs() < 1e-11 * dirichlet_integral(&b).unwrap());
    }

    #[test]
    fn h_polynomial_vanishes_at_roots(re in proptest::collection::vec(-2.0f64..2.0, 1..5)) {
        let roots: Vec<C64> = re.iter().enumerate().map(|(i, &x)| C64::new(x, i as f64 * 0.1)).collect();
        let h = HPolynomial::from_roots(0, 0, &roots);
        prop_assert_eq!(h.coeffs.len(), roots.len() + 1);
        for r in &roots {
            prop_assert!(h.eval(*r).norm() < 1e-10);
        }
    }

    #[test]
    fn clustering_preserves_count(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 0..12)) {
        let z: Vec<C64> = vals.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let c = cluster(&z, 1e-3);
        prop_assert_eq!(c.iter().map(|e| e.1).sum::<usize>(), z.len());
    }

    #[test]
    fn hull_is_idempotent_and_contains_region(pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..30)) {
        let z: Vec<C64> = pts.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let w = Window::around(&z, 0.1, 1e-3);
        let mut r = PlanarRegion::empty(w, 96, "polyline");
        for s in z.windows(2) {
            r.add_segment(s[0], s[1]);
        }
        let h = polynomial_hull_2d(&r);
        prop_assert!(h.contains_region(&r).unwrap());
        prop_assert_eq!(&polynomial_hull_2d(&h).cells, &h.cells);
    }
}
