//! Log-domain special functions.

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

pub(crate) fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient C(n, k) as an exact integer for the small arguments
/// used by basis dimensions.
pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for n in 1..20u32 {
            f *= n as f64;
            assert!((ln_factorial(n) - f.ln()).abs() < 1e-13 * f.ln().max(1.0));
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(10, 0), 1);
    }
}
