//! Shared least-squares kernels.
//!
//! Three fits cover every estimator in the lab: a plain linear
//! least-squares solve (normal equations, at most three parameters), the
//! exponential-decay model `log|f| ~ c - a * x^(-k)` scanned over a
//! candidate grid of integer decay orders `k`, and the factorial-growth
//! model `log|c_n| ~ kappa * n log n + n log A + const` used by the Gevrey
//! estimator. All fits run in plain f64; inputs arrive as logs so nothing
//! here ever sees a huge or tiny number.

use alloc::vec;
use alloc::vec::Vec;

// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::C64;
use crate::error::Error;
use crate::linalg;
use crate::Result;

/// Result of a linear least-squares fit.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub params: Vec<f64>,
    pub residual_rms: f64,
    pub residuals: Vec<f64>,
}

/// Solves `min || X b - y ||` by normal equations. Rows are the design
/// matrix; parameter counts here are 2 or 3, so conditioning is a non-issue
/// at the scales the callers produce.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let n = rows.len();
    assert_eq!(n, y.len());
    let k = rows.first().map_or(0, Vec::len);
    if n < k || k == 0 {
        return Err(Error::TooFewCoefficients { have: n, need: k.max(1) });
    }
    let mut ata = vec![vec![C64::new(0.0, 0.0); k]; k];
    let mut aty = vec![C64::new(0.0, 0.0); k];
    for (row, &yi) in rows.iter().zip(y) {
        assert_eq!(row.len(), k);
        for i in 0..k {
            for j in 0..k {
                ata[i][j] += C64::new(row[i] * row[j], 0.0);
            }
            aty[i] += C64::new(row[i] * yi, 0.0);
        }
    }
    let sol = linalg::solve(&ata, &aty).ok_or(Error::FitDiverged)?;
    let params: Vec<f64> = sol.iter().map(|c| c.re).collect();
    let residuals: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            yi - row.iter().zip(&params).map(|(x, b)| x * b).sum::<f64>()
        })
        .collect();
    let residual_rms =
        (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(LinearFit { params, residual_rms, residuals })
}

/// Regression slope of `ys` against `xs` (with intercept).
pub fn slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 1.0]).collect();
    Ok(least_squares(&rows, ys)?.params[0])
}

/// Fitted exponential-decay law `log|f(x)| ~ offset - rate * x^(-order)`.
#[derive(Debug, Clone)]
pub struct ExpDecayFit {
    /// Decay coefficient `a` (positive when the data really decays).
    pub rate: f64,
    /// Selected decay order `k` from the candidate grid.
    pub order: f64,
    /// Constant offset `c`.
    pub offset: f64,
    pub residual_rms: f64,
    /// Per-sample residuals of the winning fit, in input order.
    pub residuals: Vec<f64>,
}

/// Fits `log_abs[i] ~ c - a * xs[i]^(-k)` for each candidate `k` and keeps
/// the candidate with the smallest residual RMS.
pub fn fit_exp_decay(
    xs: &[f64],
    log_abs: &[f64],
    orders: &[f64],
) -> Result<ExpDecayFit> {
    assert_eq!(xs.len(), log_abs.len());
    if xs.len() < 3 {
        return Err(Error::TooFewCoefficients { have: xs.len(), need: 3 });
    }
    let mut best: Option<ExpDecayFit> = None;
    for &k in orders {
        let rows: Vec<Vec<f64>> =
            xs.iter().map(|&x| vec![1.0, -x.powf(-k)]).collect();
        let fit = match least_squares(&rows, log_abs) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if !fit.params.iter().all(|p| p.is_finite()) {
            continue;
        }
        let candidate = ExpDecayFit {
            rate: fit.params[1],
            order: k,
            offset: fit.params[0],
            residual_rms: fit.residual_rms,
            residuals: fit.residuals,
        };
        if best
            .as_ref()
            .map_or(true, |b| candidate.residual_rms < b.residual_rms)
        {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::FitDiverged)
}

/// Fitted factorial-growth law for a coefficient sequence.
#[derive(Debug, Clone)]
pub struct StirlingFit {
    /// Gevrey exponent estimate (1/p for a p-summable series, 0 when
    /// convergent).
    pub kappa: f64,
    /// `log A` in the `A^n` geometric factor.
    pub log_a: f64,
    pub constant: f64,
    pub residual_rms: f64,
}

/// Fits `log_abs[i] ~ kappa * n log n + n log A + const` over the supplied
/// index/log pairs.
pub fn fit_stirling(ns: &[f64], log_abs: &[f64]) -> Result<StirlingFit> {
    assert_eq!(ns.len(), log_abs.len());
    if ns.len() < 5 {
        return Err(Error::TooFewCoefficients { have: ns.len(), need: 5 });
    }
    let rows: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| vec![n * n.max(2.0).ln(), n, 1.0])
        .collect();
    let fit = least_squares(&rows, log_abs)?;
    Ok(StirlingFit {
        kappa: fit.params[0],
        log_a: fit.params[1],
        constant: fit.params[2],
        residual_rms: fit.residual_rms,
    })
}

/// Geometric grid of `count >= 2` points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).powf(1.0 / (count as f64 - 1.0));
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * ratio.powi(i as i32)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_plain_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let s = slope(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
    }

    #[test]
    fn exp_decay_selects_true_order() {
        // Synthetic data with a = 2, k = 2, c = 0.7 and no noise; the
        // candidate scan must land on k = 2 and recover a to high accuracy.
        let xs: Vec<f64> = geometric_grid(0.05, 0.3, 12);
        let logs: Vec<f64> =
            xs.iter().map(|&x| 0.7 - 2.0 * x.powi(-2)).collect();
        let fit = fit_exp_decay(&xs, &logs, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fit.order, 2.0);
        assert!((fit.rate - 2.0).abs() < 1e-9);
        assert!((fit.offset - 0.7).abs() < 1e-9);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn stirling_fit_on_exact_factorials() {
        // log(n!) with the exact kappa = 1 growth; Stirling's formula says
        // log n! = n log n - n + O(log n), so kappa ~ 1 and log A ~ -1.
        let ns: Vec<f64> = (20..100).map(|n| n as f64).collect();
        let logs: Vec<f64> = ns
            .iter()
            .map(|&n| crate::gamma::ln_gamma(n + 1.0))
            .collect();
        let fit = fit_stirling(&ns, &logs).unwrap();
        assert!((fit.kappa - 1.0).abs() < 0.02, "kappa {}", fit.kappa);
        assert!((fit.log_a - (-1.0)).abs() < 0.15, "logA {}", fit.log_a);
    }

    #[test]
    fn geometric_grid_endpoints_and_ratio() {
        let g = geometric_grid(0.04, 0.25, 12);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 0.04);
        assert_eq!(g[11], 0.25);
        let r0 = g[1] / g[0];
        let r1 = g[7] / g[6];
        assert!((r0 - r1).abs() < 1e-12);
    }
}
