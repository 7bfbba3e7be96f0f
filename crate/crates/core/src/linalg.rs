//! Small dense linear algebra, generic over the coefficient field.
//!
//! Everything here is desk scale (`r <= 8`): plain Gaussian elimination with
//! partial pivoting, no factorization caching. The generic solver is what
//! lets the formal solver run identically in float and exact-rational mode;
//! pivots are compared through `abs_log`, which orders float magnitudes and
//! merely distinguishes zero/nonzero for rationals (any nonzero rational
//! pivot is exact).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::{C64, Coeff};

/// Solves `a x = b` for square `a` (row-major). Returns `None` when `a` is
/// singular (in float mode: when a pivot falls below `1e-12` of the largest
/// entry magnitude).
pub fn solve<C: Coeff>(a: &[Vec<C>], b: &[C]) -> Option<Vec<C>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    let mut m: Vec<Vec<C>> = a.to_vec();
    let mut rhs: Vec<C> = b.to_vec();

    // Scale reference for the float-mode singularity threshold.
    let max_log = m
        .iter()
        .flatten()
        .filter_map(Coeff::abs_log)
        .fold(f64::NEG_INFINITY, f64::max);

    for col in 0..n {
        // Partial pivot: largest magnitude in the column at or below `col`.
        let mut pivot_row = None;
        let mut pivot_log = f64::NEG_INFINITY;
        for row in col..n {
            if let Some(l) = m[row][col].abs_log() {
                if l > pivot_log {
                    pivot_log = l;
                    pivot_row = Some(row);
                }
            }
        }
        let pr = pivot_row?;
        if !C::is_exact() && max_log.is_finite() && pivot_log < max_log + (1e-12f64).ln() {
            return None;
        }
        m.swap(col, pr);
        rhs.swap(col, pr);

        let pivot = m[col][col].clone();
        for row in (col + 1)..n {
            if m[row][col].is_zero() {
                continue;
            }
            let factor = m[row][col].clone() / pivot.clone();
            for k in col..n {
                let delta = factor.clone() * m[col][k].clone();
                m[row][k] = m[row][k].clone() - delta;
            }
            let delta = factor * rhs[col].clone();
            rhs[row] = rhs[row].clone() - delta;
        }
    }

    // Back substitution.
    let mut x = vec![C::zero(); n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for k in (col + 1)..n {
            acc = acc - m[col][k].clone() * x[k].clone();
        }
        x[col] = acc / m[col][col].clone();
    }
    Some(x)
}

/// Matrix-vector product.
pub fn mat_vec<C: Coeff>(a: &[Vec<C>], v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(C::zero(), |acc, (m, x)| acc + m.clone() * x.clone())
        })
        .collect()
}

/// Matrix product of square matrices.
pub fn mat_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let mut out = vec![vec![C64::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Trace.
pub fn trace(a: &[Vec<C64>]) -> C64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Infinity norm (max absolute row sum); the step clamp in the integrator
/// uses it as the stiffness scale of `A_0`.
pub fn inf_norm(a: &[Vec<C64>]) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Monic characteristic polynomial coefficients `c_0..c_n` (`c_n = 1`) of a
/// square matrix, by the Faddeev-LeVerrier recursion. Exact in the algebraic
/// sense; one double rounding per step, fine at `r <= 8`.
pub fn char_poly(a: &[Vec<C64>]) -> Vec<C64> {
    let n = a.len();
    let identity = |c: C64| -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::zero(); n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = c;
        }
        m
    };

    // p(lambda) = lambda^n + c_1 lambda^{n-1} + ... + c_n
    let mut cs = vec![C64::zero(); n + 1];
    cs[n] = C64::new(1.0, 0.0);
    let mut m = identity(C64::new(1.0, 0.0));
    for k in 1..=n {
        let am = mat_mul(a, &m);
        let ck = -trace(&am) / C64::new(k as f64, 0.0);
        cs[n - k] = ck;
        if k < n {
            let shift = identity(ck);
            m = am
                .iter()
                .zip(&shift)
                .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| x + y).collect())
                .collect();
        }
    }
    cs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CRat;

    #[test]
    fn solve_exact_rational_2x2() {
        // The eq2 linear part [[1,1],[-1,1]]; inverse is [[1,-1],[1,1]]/2.
        let a = vec![
            vec![CRat::from_i64(1), CRat::from_i64(1)],
            vec![CRat::from_i64(-1), CRat::from_i64(1)],
        ];
        let x = solve(&a, &[CRat::from_i64(1), CRat::from_i64(0)]).unwrap();
        assert_eq!(x[0], CRat::from_ratio(1, 2));
        assert_eq!(x[1], CRat::from_ratio(1, 2));
    }

    #[test]
    fn solve_detects_singularity() {
        let a = vec![
            vec![C64::from_i64(1), C64::from_i64(2)],
            vec![C64::from_i64(2), C64::from_i64(4)],
        ];
        assert!(solve(&a, &[C64::from_i64(1), C64::from_i64(1)]).is_none());
    }

    #[test]
    fn char_poly_of_eq2_matrix() {
        // [[1,1],[-1,1]] has characteristic polynomial l^2 - 2l + 2.
        let a = vec![
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)],
        ];
        let cs = char_poly(&a);
        assert!((cs[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((cs[1] - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((cs[2] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inf_norm_row_sums() {
        let a = vec![
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)],
        ];
        assert_eq!(inf_norm(&a), 2.0);
    }
}
