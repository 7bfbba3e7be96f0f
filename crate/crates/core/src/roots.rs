//! Polynomial root finding over `C64`.
//!
//! One solver serves both callers: eigenvalues come from characteristic
//! polynomials of the linear part, Borel-plane pole estimates come from Pade
//! denominators. The method is Aberth-Ehrlich simultaneous iteration with a
//! Newton polish pass, which is robust at the degrees that occur here
//! (at most eight for eigenvalues, low teens for denominators).

use alloc::vec::Vec;

use num_traits::Zero;
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::C64;
use crate::error::Error;
use crate::Result;

/// Evaluates `p` and `p'` at `z`, coefficients `c_0 + c_1 z + ...`.
fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut val = C64::zero();
    let mut der = C64::zero();
    for &c in coeffs.iter().rev() {
        der = der * z + val;
        val = val * z + c;
    }
    (val, der)
}

/// All complex roots of `c_0 + c_1 z + ... + c_n z^n`, unordered.
///
/// Leading zeros (in the `c_n` sense) are trimmed; roots at the origin are
/// deflated exactly. Convergence target is `tol` relative to `1 + |root|`;
/// with the default `1e-12` the simple-root cases used by the eigenvalue and
/// pole paths come out near machine precision after the polish pass.
pub fn poly_roots(coeffs: &[C64], tol: f64) -> Result<Vec<C64>> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    if c.len() < 2 {
        // Constant (or identically zero) polynomial: no roots to report.
        return Ok(Vec::new());
    }

    let mut roots = Vec::new();
    while c.first().is_some_and(|v| v.norm() == 0.0) {
        roots.push(C64::zero());
        c.remove(0);
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(roots);
    }
    if n == 1 {
        roots.push(-c[0] / c[1]);
        return Ok(roots);
    }

    // Initial guesses on a circle sized by the Cauchy bound, with an
    // irrational-ish angular offset so no guess starts on a symmetry axis.
    let lead = c[n].norm();
    let radius = 1.0
        + c[..n]
            .iter()
            .map(|v| v.norm() / lead)
            .fold(0.0f64, f64::max);
    let radius = radius.min(1e6).max(1e-6);
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let angle = 2.0 * core::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            C64::from_polar(0.5 * radius, angle)
        })
        .collect();

    let max_iter = 400;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (val, der) = horner(&c, z[i]);
            if val.norm() == 0.0 {
                continue;
            }
            let newton = if der.norm() == 0.0 {
                // Flat spot: nudge off it.
                C64::new(tol.sqrt(), tol.sqrt())
            } else {
                val / der
            };
            let mut repulse = C64::zero();
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        repulse += C64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * repulse;
            let step = if denom.norm() < 1e-300 {
                newton
            } else {
                newton / denom
            };
            z[i] -= step;
            let rel = step.norm() / (1.0 + z[i].norm());
            max_step = max_step.max(rel);
        }
        if max_step < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitDiverged);
    }

    // Newton polish, a few steps per root from the converged cluster.
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let (val, der) = horner(&c, *zi);
            if der.norm() == 0.0 || val.norm() == 0.0 {
                break;
            }
            let step = val / der;
            if step.norm() > 0.5 * (1.0 + zi.norm()) {
                break;
            }
            *zi -= step;
        }
    }

    roots.extend(z);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_root_set(mut got: Vec<C64>, mut want: Vec<C64>, tol: f64) {
        assert_eq!(got.len(), want.len());
        // Greedy matching is fine for well-separated test sets.
        for w in want.drain(..) {
            let (idx, _) = got
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - w).norm().partial_cmp(&(*b - w).norm()).unwrap()
                })
                .unwrap();
            let g = got.swap_remove(idx);
            assert!(
                (g - w).norm() < tol,
                "root {g} vs expected {w}"
            );
        }
    }

    #[test]
    fn quadratic_complex_pair() {
        // z^2 - 2z + 2 = (z - (1+i))(z - (1-i))
        let roots = poly_roots(
            &[C64::new(2.0, 0.0), C64::new(-2.0, 0.0), C64::new(1.0, 0.0)],
            1e-12,
        )
        .unwrap();
        assert_root_set(
            roots,
            vec![C64::new(1.0, 1.0), C64::new(1.0, -1.0)],
            1e-13,
        );
    }

    #[test]
    fn deflates_origin_roots() {
        // z^3 + z^2 = z^2 (z + 1)
        let roots = poly_roots(
            &[
                C64::zero(),
                C64::zero(),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
            ],
            1e-12,
        )
        .unwrap();
        assert_root_set(
            roots,
            vec![C64::zero(), C64::zero(), C64::new(-1.0, 0.0)],
            1e-12,
        );
    }

    #[test]
    fn degree_eight_roots_of_unity() {
        // z^8 - 1: all eighth roots of unity, the hardest symmetric layout
        // the eigenvalue path can produce at the supported dimension cap.
        let mut c = vec![C64::zero(); 9];
        c[0] = C64::new(-1.0, 0.0);
        c[8] = C64::new(1.0, 0.0);
        let roots = poly_roots(&c, 1e-12).unwrap();
        let want: Vec<C64> = (0..8)
            .map(|k| C64::from_polar(1.0, 2.0 * core::f64::consts::PI * k as f64 / 8.0))
            .collect();
        assert_root_set(roots, want, 1e-12);
    }

    #[test]
    fn linear_and_constant_edge_cases() {
        assert!(poly_roots(&[C64::new(3.0, 0.0)], 1e-12).unwrap().is_empty());
        let r = poly_roots(&[C64::new(3.0, 0.0), C64::new(1.5, 0.0)], 1e-12).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - C64::new(-2.0, 0.0)).norm() < 1e-15);
    }
}
