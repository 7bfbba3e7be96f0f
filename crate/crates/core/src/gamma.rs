//! Gamma function on the positive real axis.
//!
//! The Borel transform divides coefficient `m+1` by `Gamma(1 + m/p)`, so the
//! only arguments that ever occur are reals `>= 1`. A nine-term Lanczos
//! approximation gives about thirteen significant digits there, and the
//! integer case is routed through an exact factorial so that getting the
//! float-mode transform of a factorial-growth series stays well conditioned.

// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LANCZOS_G: f64 = 7.0;

/// Natural log of `Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma defined here only for positive arguments");
    if x < 0.5 {
        // Reflection, only reachable through p > 1 edge cases kept for safety.
        let pi = core::f64::consts::PI;
        return pi.ln() - (pi * x).sin().abs().ln() - ln_gamma(1.0 - x);
    }
    let xm = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    let half_log_two_pi = 0.918_938_533_204_672_74;
    half_log_two_pi + (xm + 0.5) * t.ln() - t + acc.ln()
}

/// `Gamma(x)` for `x > 0`. Integer arguments up to 171 go through the exact
/// factorial; beyond that the value overflows f64 anyway.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 && x == x.floor() && x <= 171.0 {
        return factorial_f64(x as u64 - 1);
    }
    ln_gamma(x).exp()
}

/// Exact `n!` as f64 (exact as an integer up to 20!, correctly rounded
/// product beyond; overflows to infinity past 170!).
pub fn factorial_f64(n: u64) -> f64 {
    let mut acc = 1.0f64;
    for k in 2..=n {
        acc *= k as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_values_are_factorials() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert_eq!(gamma(11.0), 3_628_800.0);
    }

    #[test]
    fn half_integer_value() {
        // Gamma(1/2) = sqrt(pi); Gamma(3/2) = sqrt(pi)/2.
        let sqrt_pi = core::f64::consts::PI.sqrt();
        assert!((gamma(1.5) - sqrt_pi / 2.0).abs() < 1e-14);
        assert!((gamma(2.5) - 3.0 * sqrt_pi / 4.0).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_large_factorial() {
        // ln(300!) via the exact big-integer product against Lanczos.
        let exact = crate::coeff::ln_big_int(&crate::coeff::factorial_big(300));
        let approx = ln_gamma(301.0);
        assert!((exact - approx).abs() / exact < 1e-13);
    }

    #[test]
    fn recurrence_holds() {
        for &x in &[1.3, 2.7, 7.1, 33.9] {
            let lhs = ln_gamma(x + 1.0);
            let rhs = ln_gamma(x) + x.ln();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }
}
