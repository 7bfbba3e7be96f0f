//! Shared plumbing between subcommands: grids, resummer construction,
//! seeded trajectories.

use num_complex::Complex64 as C64;

use stokeslab_core::dynamics::{self, Trajectory};
use stokeslab_core::odesys::{singular_directions, OdeSystem, Spectrum};
use stokeslab_core::resum::{balanced_orders, borel_transform, pade, BorelEval, Resummer};
use stokeslab_core::series::SeriesVec;

use crate::config::{CliError, CliResult};

/// Decreasing geometric grid with exactly `points` nodes and exact
/// endpoints. The CLI exposes a total point count rather than the
/// per-decade density the core uses internally.
pub fn fixed_grid(min: f64, max: f64, points: usize) -> CliResult<Vec<f64>> {
    if !(min.is_finite() && max.is_finite()) || min <= 0.0 || max <= min {
        return Err(CliError::validation(
            "grid requires 0 < grid-min < grid-max",
        ));
    }
    if !(2..=1_000_000).contains(&points) {
        return Err(CliError::validation(
            "grid-points must be between 2 and 1000000",
        ));
    }
    let ratio = min / max;
    let mut grid = Vec::with_capacity(points);
    grid.push(max);
    for i in 1..points - 1 {
        grid.push(max * ratio.powf(i as f64 / (points - 1) as f64));
    }
    grid.push(min);
    Ok(grid)
}

/// Padé-continued Borel evaluators plus the direction table, the generic
/// route for systems without a closed-form transform.
pub fn build_resummer(
    sys: &OdeSystem<C64>,
    order: usize,
    tol: f64,
) -> CliResult<(Resummer, Spectrum, SeriesVec<C64>)> {
    let hhat = sys.formal_solution(order)?;
    let spectrum = sys.spectrum()?;
    let table = singular_directions(&spectrum, sys.p());
    let mut evals: Vec<Box<dyn BorelEval>> = Vec::with_capacity(sys.dim());
    for j in 0..sys.dim() {
        let b = borel_transform(hhat.component(j), sys.p())?;
        let (l, m) = balanced_orders(b.coeffs().len(), 12);
        evals.push(Box::new(pade(&b, l, m)?));
    }
    let rs = Resummer::new(evals, table, tol);
    Ok((rs, spectrum, hhat))
}

/// Integrates from the top of the grid with a partial-sum seed.
pub fn seeded_trajectory(
    sys: &OdeSystem<C64>,
    hhat: &SeriesVec<C64>,
    grid: &[f64],
    seed_order: usize,
    tol: f64,
) -> CliResult<Trajectory> {
    let x_start = grid[0];
    let seed = dynamics::partial_sum_seed(hhat, seed_order, x_start);
    Ok(dynamics::integrate_on_grid(sys, grid, &seed, tol)?)
}

/// Checks a tolerance is usable before handing it to the integrator or
/// the quadrature.
pub fn check_tol(tol: f64) -> CliResult<f64> {
    if !(tol.is_finite() && tol > 0.0 && tol <= 0.1) {
        return Err(CliError::validation("tol must lie in (0, 0.1]"));
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stokeslab_core::odesys::standard;

    #[test]
    fn fixed_grid_hits_endpoints_exactly() {
        let g = fixed_grid(0.02, 0.3, 40).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.3);
        assert_eq!(g[39], 0.02);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn fixed_grid_rejects_bad_ranges() {
        assert!(fixed_grid(0.3, 0.02, 10).is_err());
        assert!(fixed_grid(0.0, 0.3, 10).is_err());
        assert!(fixed_grid(0.02, 0.3, 1).is_err());
    }

    #[test]
    fn generic_resummer_reproduces_euler_sum() {
        let sys = standard::euler::<C64>();
        let (rs, _, _) = build_resummer(&sys, 32, 1e-10).unwrap();
        let sums = rs.lateral_sums(0, C64::from(0.1)).unwrap();
        // Both lateral sums sit within the Stokes jump of each other and
        // near the real Borel sum ~0.11557.
        assert!((sums.plus[0].re - 0.1155).abs() < 5e-3);
        assert!((sums.plus[0] - sums.minus[0]).norm() < 1e-3);
    }
}
