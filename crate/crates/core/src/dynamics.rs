//! Numerical trajectories of the singular system and asymptotic diagnostics.
//!
//! Solutions are integrated from a seed at `x_start` down toward the
//! singularity at zero with an embedded Dormand Prince 5(4) pair. The
//! equation `y' = A(x, y) / x^(p+1)` is stiff near the origin, with local
//! rates growing like `x^-(p+1)`; for the bundled systems the asymptotic
//! branch attracts in the integration direction, so an explicit pair with
//! the step clamped to the stability bound is enough and stays cheap.
//!
//! On top of raw trajectories the module measures what the theory predicts:
//! remainder constants of the asymptotic expansion, the interior flow
//! identity relating a solution to itself after a singular time shift,
//! winding and sign-change counts of solution differences, and exponential
//! order fits.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Zero;
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::Coeff;
use crate::error::Error;
use crate::odesys::OdeSystem;
use crate::series::SeriesVec;
use crate::Result;

/// Trajectories are abandoned once any state component leaves this box.
pub const DEFAULT_BLOW_UP: f64 = 10.0;

/// Default output density of [`geometric_grid`].
pub const POINTS_PER_DECADE: usize = 64;

/// Fraction of the explicit stability bound `x^(p+1) / |A0|` a step may use.
const STABILITY_MARGIN: f64 = 0.5;

const SAFETY: f64 = 0.9;
const MAX_STEPS: usize = 4_000_000;

const STAGES: usize = 7;
const STAGE_TIMES: [f64; STAGES] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const COUPLINGS: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const WEIGHTS_5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const WEIGHTS_4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Accepted and rejected step counts of one integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
}

/// A solution sampled on a strictly decreasing positive grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    xs: Vec<f64>,
    values: Vec<Vec<C64>>,
    pub stats: IntegratorStats,
    pub tol: f64,
}

impl Trajectory {
    fn assemble(xs: Vec<f64>, values: Vec<Vec<C64>>, stats: IntegratorStats, tol: f64) -> Self {
        assert_eq!(xs.len(), values.len());
        assert!(!xs.is_empty());
        for w in xs.windows(2) {
            assert!(w[1] > 0.0 && w[1] < w[0], "grid must decrease and stay positive");
        }
        for v in &values {
            assert!(v.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        }
        Trajectory {
            xs,
            values,
            stats,
            tol,
        }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.values[0].len()
    }

    /// Largest grid point.
    pub fn start(&self) -> f64 {
        self.xs[0]
    }

    /// Smallest grid point.
    pub fn end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// The sub-trajectory with grid points in `[x_min, x_max]`.
    pub fn restrict(&self, x_min: f64, x_max: f64) -> Trajectory {
        let kept: Vec<usize> = (0..self.len())
            .filter(|&i| self.xs[i] >= x_min && self.xs[i] <= x_max)
            .collect();
        assert!(!kept.is_empty(), "restriction must keep at least one point");
        Trajectory {
            xs: kept.iter().map(|&i| self.xs[i]).collect(),
            values: kept.iter().map(|&i| self.values[i].clone()).collect(),
            stats: self.stats,
            tol: self.tol,
        }
    }

    /// The solution value at an arbitrary `x` in the trajectory range,
    /// reconstructed by re-integrating from the nearest grid node above.
    pub fn eval_at(&self, sys: &OdeSystem<C64>, x: f64) -> Result<Vec<C64>> {
        assert!(
            x >= self.end() && x <= self.start(),
            "evaluation point outside trajectory range"
        );
        let above = self.xs.partition_point(|&g| g >= x) - 1;
        if self.xs[above] == x {
            return Ok(self.values[above].clone());
        }
        let f = system_field(sys);
        let clamp = system_clamp(sys);
        let ctl = StepControl {
            tol: self.tol,
            rel_from: self.dimension(),
            blow_up: DEFAULT_BLOW_UP,
        };
        let mut y = self.values[above].clone();
        let mut h = clamp(self.xs[above]).min(0.5 * (self.xs[above] - x));
        let mut stats = IntegratorStats::default();
        dp45_segment(&f, &clamp, self.xs[above], x, &mut y, &mut h, &ctl, &mut stats)?;
        Ok(y)
    }
}

/// A base trajectory together with the exactly integrated difference to a
/// second solution of the same system.
#[derive(Debug, Clone)]
pub struct PairTrajectory {
    pub base: Trajectory,
    /// The difference `second - base`, integrated in its own coordinates.
    pub difference: Trajectory,
}

impl PairTrajectory {
    /// The second member, reassembled as base plus difference.
    pub fn second(&self) -> Trajectory {
        let values = self
            .base
            .values
            .iter()
            .zip(&self.difference.values)
            .map(|(g, v)| g.iter().zip(v).map(|(a, b)| a + b).collect())
            .collect();
        Trajectory::assemble(
            self.base.xs.clone(),
            values,
            self.base.stats,
            self.base.tol,
        )
    }
}

struct StepControl {
    tol: f64,
    /// Components at this index and beyond use pure relative error control.
    rel_from: usize,
    blow_up: f64,
}

/// One adaptive Dormand Prince run from `t0` to `t1`, mutating `y` in place.
/// `h` carries the step size magnitude across calls.
fn dp45_segment(
    f: &dyn Fn(f64, &[C64]) -> Vec<C64>,
    max_h: &dyn Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    y: &mut Vec<C64>,
    h: &mut f64,
    ctl: &StepControl,
    stats: &mut IntegratorStats,
) -> Result<()> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let dim = y.len();
    let mut t = t0;
    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * t1.abs().max(t.abs()).max(1e-30) {
            return Ok(());
        }
        let hh = h.abs().min(max_h(t)).min(remaining);
        if hh < 1e-14 * t.abs() + 1e-280 {
            return Err(Error::StepUnderflow { x: t });
        }
        let hs = dir * hh;

        let mut k: Vec<Vec<C64>> = Vec::with_capacity(STAGES);
        k.push(f(t, y));
        for s in 1..STAGES {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = COUPLINGS[s][j];
                if a != 0.0 {
                    for i in 0..dim {
                        ys[i] += kj[i] * (a * hs);
                    }
                }
            }
            k.push(f(t + STAGE_TIMES[s] * hs, &ys));
        }

        let mut y5 = y.clone();
        let mut errv = vec![C64::zero(); dim];
        for (s, ks) in k.iter().enumerate() {
            if WEIGHTS_5[s] != 0.0 {
                for i in 0..dim {
                    y5[i] += ks[i] * (WEIGHTS_5[s] * hs);
                }
            }
            let db = WEIGHTS_5[s] - WEIGHTS_4[s];
            if db != 0.0 {
                for i in 0..dim {
                    errv[i] += ks[i] * (db * hs);
                }
            }
        }

        let mut acc = 0.0;
        for i in 0..dim {
            let mag = y[i].norm().max(y5[i].norm());
            let sc = if i >= ctl.rel_from {
                mag.max(1e-300)
            } else {
                1.0 + mag
            };
            acc += (errv[i].norm() / (ctl.tol * sc)).powi(2);
        }
        let err = (acc / dim as f64).sqrt();

        if err.is_finite() && err <= 1.0 {
            t += hs;
            *y = y5;
            stats.steps += 1;
            let sup = y.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
            if !sup.is_finite() || sup > ctl.blow_up {
                return Err(Error::BlowUp { x: t, norm: sup });
            }
        } else {
            stats.rejected += 1;
        }
        let factor = if !err.is_finite() {
            0.25
        } else if err == 0.0 {
            5.0
        } else {
            (SAFETY * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        *h = hh * factor;
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err(Error::StepUnderflow { x: t });
        }
    }
}

fn frobenius(m: &[Vec<C64>]) -> f64 {
    m.iter()
        .flatten()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// The vector field `A(x, y) / x^(p+1)`.
fn system_field(sys: &OdeSystem<C64>) -> impl Fn(f64, &[C64]) -> Vec<C64> + '_ {
    let pw = sys.p() as i32 + 1;
    move |x, y| {
        let scale = x.powi(pw);
        let mut a = sys.eval_a(&C64::from(x), y);
        for c in &mut a {
            *c /= scale;
        }
        a
    }
}

/// Stability-derived step bound at position `x`.
fn system_clamp(sys: &OdeSystem<C64>) -> impl Fn(f64) -> f64 {
    let a0 = frobenius(&sys.linear_part_c64()).max(1e-12);
    let pw = sys.p() as i32 + 1;
    move |x: f64| (STABILITY_MARGIN * x.powi(pw) / a0).min(0.25 * x)
}

/// Strictly decreasing geometric grid from `x_start` down to `x_end`.
pub fn geometric_grid(x_start: f64, x_end: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(x_end > 0.0 && x_end < x_start && points_per_decade >= 1);
    let decades = (x_start / x_end).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(1) + 1;
    let step = (x_end / x_start).ln() / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|k| x_start * (step * k as f64).exp()).collect();
    xs[0] = x_start;
    xs[n - 1] = x_end;
    xs
}

/// Decreasing grid dense enough to resolve a phase rotating like
/// `rate / (p x^p)`: successive points advance the phase by at most
/// `2 pi / per_turn`, and never by more than five percent of `x` so the
/// grid stays dense even where the rotation is slow.
pub fn phase_grid(x_start: f64, x_end: f64, rate: f64, p: u32, per_turn: usize) -> Vec<f64> {
    assert!(x_end > 0.0 && x_end < x_start && rate > 0.0 && per_turn >= 4);
    let dphi = core::f64::consts::TAU / per_turn as f64;
    let mut xs = vec![x_start];
    let mut x = x_start;
    loop {
        let step = (dphi * x.powi(p as i32 + 1) / rate).min(0.05 * x);
        x -= step;
        if x <= x_end {
            xs.push(x_end);
            return xs;
        }
        xs.push(x);
    }
}

/// Integrates the system from `(x_start, y_start)` down to `x_end`,
/// recording values on the default geometric grid.
pub fn integrate(
    sys: &OdeSystem<C64>,
    x_start: f64,
    y_start: &[C64],
    x_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_on_grid(
        sys,
        &geometric_grid(x_start, x_end, POINTS_PER_DECADE),
        y_start,
        tol,
    )
}

/// Integrates the system along an explicit decreasing grid, recording the
/// solution at every grid point exactly.
pub fn integrate_on_grid(
    sys: &OdeSystem<C64>,
    grid: &[f64],
    y_start: &[C64],
    tol: f64,
) -> Result<Trajectory> {
    assert!(grid.len() >= 2 && tol > 0.0);
    assert_eq!(y_start.len(), sys.dim());
    let f = system_field(sys);
    let clamp = system_clamp(sys);
    let ctl = StepControl {
        tol,
        rel_from: sys.dim(),
        blow_up: DEFAULT_BLOW_UP,
    };
    let mut y = y_start.to_vec();
    let mut h = clamp(grid[0]).min(0.5 * (grid[0] - grid[1]));
    let mut stats = IntegratorStats::default();
    let mut values = Vec::with_capacity(grid.len());
    values.push(y.clone());
    for w in grid.windows(2) {
        dp45_segment(&f, &clamp, w[0], w[1], &mut y, &mut h, &ctl, &mut stats)?;
        values.push(y.clone());
    }
    Ok(Trajectory::assemble(grid.to_vec(), values, stats, tol))
}

/// Integrates a solution together with its difference to a second solution
/// seeded `offset` away, as one joint system.
///
/// The difference obeys `x^(p+1) v' = A(x, g + v) - A(x, g)`, and that
/// increment is evaluated in expanded form: per monomial of `A` the product
/// difference telescopes into terms that each carry at least one factor of
/// `v`, so nothing is ever obtained by subtracting two near-equal numbers.
/// With pure relative error control on the `v` block, the difference stays
/// accurate down to magnitudes like `1e-20` where directly subtracting two
/// trajectories would return noise. That accuracy is what winding and
/// sign-change diagnostics of solution differences rely on.
pub fn integrate_pair(
    sys: &OdeSystem<C64>,
    grid: &[f64],
    y_start: &[C64],
    offset: &[C64],
    tol: f64,
) -> Result<PairTrajectory> {
    assert!(grid.len() >= 2 && tol > 0.0);
    let r = sys.dim();
    assert_eq!(y_start.len(), r);
    assert_eq!(offset.len(), r);
    let pw = sys.p() as i32 + 1;
    let f = move |x: f64, u: &[C64]| {
        let (g, v) = u.split_at(r);
        let scale = x.powi(pw);
        let mut out = sys.eval_a(&C64::from(x), g);
        out.extend(difference_increment(sys, x, g, v));
        for c in &mut out {
            *c /= scale;
        }
        out
    };
    let clamp = system_clamp(sys);
    let ctl = StepControl {
        tol,
        rel_from: r,
        blow_up: DEFAULT_BLOW_UP,
    };
    let mut u: Vec<C64> = y_start.iter().chain(offset).cloned().collect();
    let mut h = clamp(grid[0]).min(0.5 * (grid[0] - grid[1]));
    let mut stats = IntegratorStats::default();
    let mut base = Vec::with_capacity(grid.len());
    let mut diff = Vec::with_capacity(grid.len());
    base.push(u[..r].to_vec());
    diff.push(u[r..].to_vec());
    for w in grid.windows(2) {
        dp45_segment(&f, &clamp, w[0], w[1], &mut u, &mut h, &ctl, &mut stats)?;
        base.push(u[..r].to_vec());
        diff.push(u[r..].to_vec());
    }
    Ok(PairTrajectory {
        base: Trajectory::assemble(grid.to_vec(), base, stats, tol),
        difference: Trajectory::assemble(grid.to_vec(), diff, stats, tol),
    })
}

/// `A(x, g + v) - A(x, g)` with every term carrying a factor of `v`.
///
/// Uses the telescoping identity
/// `prod a_j - prod b_j = sum_j (prod_{l<j} a_l) (a_j - b_j) (prod_{l>j} b_l)`
/// per monomial, with each single-variable difference expanded binomially
/// from power one in `v_j` upward.
fn difference_increment(sys: &OdeSystem<C64>, x: f64, g: &[C64], v: &[C64]) -> Vec<C64> {
    let r = sys.dim();
    let xc = C64::from(x);
    let mut out = vec![C64::zero(); r];
    for (comp, slot) in sys.components().iter().zip(&mut out) {
        for (exps, coeff) in comp.terms() {
            let mut xpow = C64::from(1.0);
            for _ in 0..exps[0] {
                xpow *= xc;
            }
            let base = coeff.to_c64() * xpow;
            for j in 0..r {
                let e = exps[1 + j];
                if e == 0 || v[j].is_zero() {
                    continue;
                }
                // (g_j + v_j)^e - g_j^e, from the k = 1 term upward.
                let mut single = C64::zero();
                let mut binom = 1.0_f64;
                for k in 1..=e {
                    binom *= f64::from(e - k + 1) / f64::from(k);
                    single += g[j].powu(e - k) * v[j].powu(k) * binom;
                }
                let mut term = base * single;
                for (l, &el) in exps[1..].iter().enumerate() {
                    if l == j {
                        continue;
                    }
                    let arg = if l < j { g[l] + v[l] } else { g[l] };
                    term *= arg.powu(el);
                }
                *slot += term;
            }
        }
    }
    out
}

/// Partial sum `J_N H(x)` of a formal solution, the standard trajectory seed.
pub fn partial_sum_seed(hhat: &SeriesVec<C64>, order: usize, x: f64) -> Vec<C64> {
    assert!(order <= hhat.order());
    hhat.components()
        .iter()
        .map(|comp| {
            let mut acc = C64::zero();
            for n in (1..=order).rev() {
                acc = acc * x + comp.coeff(n);
            }
            acc * x
        })
        .collect()
}

/// Default truncation order for seeding at `x_start`: near the optimal
/// index `1/x` for Gevrey-1 series, kept within `[1, 10]`.
pub fn default_seed_order(x_start: f64) -> usize {
    (1.0 / x_start).round().clamp(1.0, 10.0) as usize
}

/// Remainder constants of the asymptotic expansion: for each `N <= n_max`,
/// the largest `|H(x) - J_N H(x)| / x^(N+1)` over the trajectory grid.
pub fn remainder_check(traj: &Trajectory, hhat: &SeriesVec<C64>, n_max: usize) -> Vec<f64> {
    assert_eq!(hhat.components().len(), traj.dimension());
    assert!(hhat.order() >= n_max);
    (0..=n_max)
        .map(|n| {
            traj.xs
                .iter()
                .zip(&traj.values)
                .map(|(&x, h)| {
                    let jet = partial_sum_seed(hhat, n, x);
                    let dev: f64 = h
                        .iter()
                        .zip(&jet)
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    dev / x.powi(n as i32 + 1)
                })
                .fold(0.0_f64, f64::max)
        })
        .collect()
}

/// Largest violation of the interior flow identity over a set of base
/// points and real displacements.
///
/// For each base point `x` and displacement `z` the solution is moved to
/// `x + x^(p+1) z` two ways: read off the trajectory directly, and carried
/// by integrating `dw/dz = (1 + x^p z)^(-p-1) A(x + x^(p+1) z, w)` from
/// `w(0) = H(x)`. Both paths must land on the same value up to integrator
/// error. All shifted points must stay inside the trajectory range.
pub fn flow_identity_check(
    sys: &OdeSystem<C64>,
    traj: &Trajectory,
    base_points: &[f64],
    z_grid: &[f64],
    tol: f64,
) -> Result<f64> {
    let p = sys.p() as i32;
    let a0 = frobenius(&sys.linear_part_c64()).max(1e-12);
    let mut worst = 0.0_f64;
    for &x in base_points {
        let h_x = traj.eval_at(sys, x)?;
        let xp = x.powi(p);
        for &z in z_grid {
            let target = x + x.powi(p + 1) * z;
            assert!(
                target >= traj.end() && target <= traj.start(),
                "shifted point outside trajectory range"
            );
            let direct = traj.eval_at(sys, target)?;
            let carried = if z == 0.0 {
                h_x.clone()
            } else {
                let f = |t: f64, w: &[C64]| {
                    let stretch = (1.0 + xp * t).powi(-p - 1);
                    let mut a = sys.eval_a(&C64::from(x + x.powi(p + 1) * t), w);
                    for c in &mut a {
                        *c *= stretch;
                    }
                    a
                };
                let floor = (1.0 - xp * z.abs()).max(0.2);
                let cap = STABILITY_MARGIN * floor.powi(p + 1) / a0;
                let clamp = move |_t: f64| cap;
                let ctl = StepControl {
                    tol,
                    rel_from: sys.dim(),
                    blow_up: DEFAULT_BLOW_UP,
                };
                let mut w = h_x.clone();
                let mut hstep = cap.min(0.5 * z.abs());
                let mut stats = IntegratorStats::default();
                dp45_segment(&f, &clamp, 0.0, z, &mut w, &mut hstep, &ctl, &mut stats)?;
                w
            };
            let dev: f64 = carried
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// Total continuous argument variation of a nonvanishing sample path, in
/// turns. Consecutive samples must subtend less than `0.9 pi` so the
/// unwrapping is trustworthy.
pub fn winding(samples: &[C64]) -> Result<f64> {
    assert!(samples.len() >= 2);
    for (i, s) in samples.iter().enumerate() {
        if s.norm() == 0.0 {
            return Err(Error::ZeroSample { index: i });
        }
    }
    let mut total = 0.0;
    for (i, w) in samples.windows(2).enumerate() {
        let dphi = (w[1] / w[0]).arg();
        if dphi.abs() > 0.9 * core::f64::consts::PI {
            return Err(Error::UndersampledArc { index: i });
        }
        total += dphi;
    }
    Ok(total / core::f64::consts::TAU)
}

/// Number of strict sign changes in a real sample path. Exact zeros are
/// skipped rather than counted twice.
pub fn zero_count(samples: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for &s in samples {
        let sign = if s > 0.0 {
            1
        } else if s < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last != 0 && sign != last {
                count += 1;
            }
            last = sign;
        }
    }
    count
}

/// Fits `log f ~ c - a x^(-k)` to positive magnitudes, with `k` scanned
/// over the standard candidate grid. Needs at least eight positive samples
/// spanning a factor four in `x`.
pub fn exp_order_fit(xs: &[f64], magnitudes: &[f64]) -> Result<crate::fitting::ExpDecayFit> {
    assert_eq!(xs.len(), magnitudes.len());
    assert!(xs.len() >= 8);
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    for (&x, &m) in xs.iter().zip(magnitudes) {
        if m > 0.0 && m.is_finite() {
            fx.push(x);
            fy.push(m.ln());
        }
    }
    if fx.len() < 5 {
        return Err(Error::FitDiverged);
    }
    let lo = fx.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = fx.iter().cloned().fold(0.0_f64, f64::max);
    assert!(hi / lo >= 3.9, "samples must span a factor four");
    crate::fitting::fit_exp_decay(&fx, &fy, &crate::stokes::DECAY_POWER_CANDIDATES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odesys::{self, standard};
    use crate::poly::MultiPoly;
    use crate::resum::{exact, Resummer};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn euler_trajectory(tol: f64) -> (OdeSystem<C64>, SeriesVec<C64>, Trajectory) {
        let sys = standard::euler::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let seed = partial_sum_seed(&hhat, default_seed_order(0.3), 0.3);
        let traj = integrate(&sys, 0.3, &seed, 0.02, tol).unwrap();
        (sys, hhat, traj)
    }

    fn euler_lateral_real(x: f64) -> f64 {
        let sys = standard::euler::<C64>();
        let spectrum = sys.spectrum().unwrap();
        let table = odesys::singular_directions(&spectrum, 1);
        let rs = Resummer::new(vec![Box::new(exact::euler())], table, 1e-12);
        rs.lateral_sums(0, C64::from(x)).unwrap().plus[0].re
    }

    #[test]
    fn geometric_grid_endpoints_and_density() {
        let g = geometric_grid(0.3, 0.02, 64);
        assert_eq!(g[0], 0.3);
        assert_eq!(*g.last().unwrap(), 0.02);
        assert!(g.len() >= 64);
        for w in g.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn euler_trajectory_tracks_lateral_sum() {
        let (_, _, traj) = euler_trajectory(1e-10);
        assert!(traj.stats.steps >= traj.len());
        // Below x ~ 0.06 the free exponential is under 1e-7, so the
        // trajectory must sit on the Borel sum to quadrature accuracy.
        let mut checked = 0;
        for (i, &x) in traj.xs().iter().enumerate() {
            if x <= 0.06 {
                let dev = (traj.values()[i][0].re - euler_lateral_real(x)).abs();
                assert!(dev < 2e-6, "x = {x}: dev = {dev:e}");
                assert!(traj.values()[i][0].im.abs() < 1e-8);
                checked += 1;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn euler_deviation_is_exponentially_small_of_order_one() {
        let (_, _, traj) = euler_trajectory(1e-10);
        let mut xs = Vec::new();
        let mut mags = Vec::new();
        for (i, &x) in traj.xs().iter().enumerate() {
            if x >= 0.07 {
                xs.push(x);
                mags.push((traj.values()[i][0].re - euler_lateral_real(x)).abs());
            }
        }
        let fit = exp_order_fit(&xs, &mags).unwrap();
        assert_eq!(fit.order, 1.0, "wrong exponential order");
        assert!((fit.rate - 1.0).abs() < 0.1, "rate = {}", fit.rate);
    }

    #[test]
    fn euler2d_solutions_vanish_at_origin() {
        let sys = standard::euler2d::<C64>();
        let hhat = sys.formal_solution(8).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let traj = integrate(&sys, 0.3, &seed, 0.02, 1e-10).unwrap();
        let norm_end: f64 = traj.values().last().unwrap()[0].norm()
            + traj.values().last().unwrap()[1].norm();
        let norm_start: f64 = traj.values()[0][0].norm() + traj.values()[0][1].norm();
        assert!(norm_end < 0.05);
        assert!(norm_end < norm_start);
    }

    #[test]
    fn growing_mode_blows_up() {
        // A = -y has solutions y0 exp(1/x - 1/x0), growing toward zero.
        let mut a = MultiPoly::<C64>::zero(2);
        a.add_term(vec![0, 1], c(-1.0, 0.0));
        let sys = OdeSystem::new(1, vec![a]).unwrap();
        let err = integrate(&sys, 0.3, &[c(0.5, 0.0)], 0.02, 1e-8).unwrap_err();
        match err {
            Error::BlowUp { x, norm } => {
                assert!(x > 0.02 && x < 0.3);
                assert!(norm > DEFAULT_BLOW_UP);
            }
            other => panic!("expected BlowUp, got {other:?}"),
        }
    }

    #[test]
    fn remainder_constants_grow_factorially() {
        let (_, hhat, traj) = euler_trajectory(1e-10);
        let window = traj.restrict(0.02, 0.1);
        let cs = remainder_check(&window, &hhat, 8);
        assert_eq!(cs.len(), 9);
        for &v in &cs {
            assert!(v.is_finite() && v > 0.0);
        }
        // C_0 is dominated by h_1 = 1 up to the window correction.
        assert!(cs[0] > 0.9 && cs[0] < 1.3, "C_0 = {}", cs[0]);
        let ratios: Vec<f64> = cs.windows(2).map(|w| w[1] / w[0]).collect();
        for w in ratios.windows(2) {
            assert!(w[1] > w[0], "ratios not increasing: {ratios:?}");
        }
    }

    #[test]
    fn convergent_remainders_stay_bounded() {
        use crate::coeff::CRat;
        let sys = standard::convergent_geometric::<CRat>().to_c64();
        let hhat = sys.formal_solution(12).unwrap();
        // The repelling free mode grows like exp(1/x), so start from the
        // analytic value 0.3/(1 - 0.3) and keep the window short enough
        // that seed error cannot be amplified visibly.
        let seed = [c(3.0 / 7.0, 0.0)];
        let traj = integrate(&sys, 0.3, &seed, 0.15, 1e-11).unwrap();
        let cs = remainder_check(&traj, &hhat, 8);
        for &v in &cs {
            assert!(v.is_finite() && v > 0.4 && v < 2.0, "constants {cs:?}");
        }
        let spread = cs.iter().cloned().fold(0.0_f64, f64::max)
            / cs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 2.5, "no factorial growth expected: {cs:?}");
    }

    #[test]
    fn eq2_family_shares_expansion() {
        let sys = standard::euler2d::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let grid = geometric_grid(0.3, 0.02, 64);
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let pair = integrate_pair(
            &sys,
            &grid,
            &seed,
            &[c(0.01, 0.0), c(-0.006, 0.0)],
            1e-10,
        )
        .unwrap();
        let first = pair.base.restrict(0.02, 0.08);
        let second = pair.second().restrict(0.02, 0.08);
        let ca = remainder_check(&first, &hhat, 8);
        let cb = remainder_check(&second, &hhat, 8);
        // Same asymptotic expansion: at low order the constants are pinned
        // by the shared series and agree closely; at high order the free
        // exponentials of the two members differ but stay within a modest
        // factor of each other.
        for n in 0..=8 {
            let q = ca[n] / cb[n];
            let (lo, hi) = match n {
                0..=3 => (0.7, 1.43),
                4 | 5 => (0.45, 2.2),
                _ => (0.15, 6.7),
            };
            assert!(q > lo && q < hi, "N = {n}: {} vs {}", ca[n], cb[n]);
        }
    }

    #[test]
    fn eq2_difference_winds_and_oscillates() {
        let sys = standard::euler2d::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let grid = phase_grid(0.3, 0.02, 1.0, 1, 16);
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let pair = integrate_pair(
            &sys,
            &grid,
            &seed,
            &[c(0.04, 0.0), c(0.03, 0.0)],
            1e-10,
        )
        .unwrap();
        let v: Vec<C64> = pair
            .difference
            .values()
            .iter()
            .map(|d| d[0] + C64::i() * d[1])
            .collect();
        let turns = winding(&v).unwrap().abs();
        let ideal = (1.0 / 0.02 - 1.0 / 0.3) / core::f64::consts::TAU;
        assert!(turns >= 5.0, "turns = {turns}");
        assert!((turns - ideal).abs() < 0.2 * ideal, "turns = {turns} vs {ideal}");

        // Truncating the window at larger x_min strictly loses turns.
        let cut = pair.difference.xs().partition_point(|&x| x >= 0.04);
        let trimmed = winding(&v[..cut]).unwrap().abs();
        assert!(trimmed < turns);
        assert!(trimmed >= 2.0);

        // The first difference component changes sign again and again.
        let re1: Vec<f64> = pair.difference.values().iter().map(|d| d[0].re).collect();
        assert!(zero_count(&re1) >= 10);
    }

    #[test]
    fn flow_identity_holds_for_euler() {
        let (sys, _, traj) = euler_trajectory(1e-10);
        let err = flow_identity_check(
            &sys,
            &traj,
            &[0.05, 0.08, 0.12, 0.2],
            &[-1.0, -0.4, 0.0, 0.55, 1.0],
            1e-10,
        )
        .unwrap();
        assert!(err < 1e-8, "flow identity error {err:e}");
    }

    #[test]
    fn flow_identity_holds_for_euler2d() {
        let sys = standard::euler2d::<C64>();
        let hhat = sys.formal_solution(8).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let traj = integrate(&sys, 0.3, &seed, 0.02, 1e-10).unwrap();
        let err =
            flow_identity_check(&sys, &traj, &[0.06, 0.1, 0.18], &[-1.0, 0.5, 1.0], 1e-10)
                .unwrap();
        assert!(err < 1e-7, "flow identity error {err:e}");
    }

    #[test]
    fn flow_identity_error_scales_with_tolerance() {
        let sys = standard::euler::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let xs = [0.07, 0.15];
        let zs = [-0.8, 0.8];
        let coarse = integrate(&sys, 0.3, &seed, 0.02, 1e-8).unwrap();
        let fine = integrate(&sys, 0.3, &seed, 0.02, 1e-10).unwrap();
        let e_coarse = flow_identity_check(&sys, &coarse, &xs, &zs, 1e-8).unwrap();
        let e_fine = flow_identity_check(&sys, &fine, &xs, &zs, 1e-10).unwrap();
        let ratio = e_coarse / e_fine;
        assert!(
            ratio > 10.0 && ratio < 1000.0,
            "coarse {e_coarse:e}, fine {e_fine:e}, ratio {ratio}"
        );
    }

    #[test]
    fn winding_of_unit_phase_spiral() {
        let grid = phase_grid(0.3, 0.02, 1.0, 1, 16);
        let v: Vec<C64> = grid
            .iter()
            .map(|&x| C64::from_polar(1.0, 1.0 / x))
            .collect();
        let turns = winding(&v).unwrap();
        let ideal = (1.0 / 0.02 - 1.0 / 0.3) / core::f64::consts::TAU;
        assert!((turns - ideal).abs() < 0.02, "turns = {turns}");
        // Along the way the real part crosses zero about twice per turn.
        let re: Vec<f64> = v.iter().map(|s| s.re).collect();
        let crossings = zero_count(&re) as f64;
        assert!((crossings - 2.0 * turns).abs() <= 2.0);
    }

    #[test]
    fn winding_rejects_bad_samples() {
        assert!((winding(&[c(1.0, 0.0); 8]).unwrap()).abs() < 1e-15);
        let z = [c(1.0, 0.0), C64::zero(), c(1.0, 0.0)];
        assert!(matches!(winding(&z), Err(Error::ZeroSample { index: 1 })));
        let sparse = [c(1.0, 0.0), C64::from_polar(1.0, 2.9)];
        assert!(matches!(
            winding(&sparse),
            Err(Error::UndersampledArc { index: 0 })
        ));
    }

    #[test]
    fn zero_count_of_sine_phase() {
        let grid = phase_grid(0.3, 0.02, 1.0, 1, 16);
        let samples: Vec<f64> = grid.iter().map(|&x| (1.0 / x).sin()).collect();
        // Zeros of sin(1/x) on [0.02, 0.3] sit at 1/(k pi) for k = 2..15.
        assert_eq!(zero_count(&samples), 14);
        let positive: Vec<f64> = grid.iter().map(|&x| 1.0 + x).collect();
        assert_eq!(zero_count(&positive), 0);
    }

    #[test]
    fn exp_order_fit_closed_forms() {
        let xs = geometric_grid(0.3, 0.06, 24);
        let e1: Vec<f64> = xs.iter().map(|&x| (-1.0 / x).exp()).collect();
        let f1 = exp_order_fit(&xs, &e1).unwrap();
        assert_eq!(f1.order, 1.0);
        assert!((f1.rate - 1.0).abs() < 1e-8);
        let e2: Vec<f64> = xs.iter().map(|&x| (-2.0 / (x * x)).exp()).collect();
        let f2 = exp_order_fit(&xs, &e2).unwrap();
        assert_eq!(f2.order, 2.0);
        assert!((f2.rate - 2.0).abs() < 1e-8);
    }

    #[test]
    fn eval_at_matches_direct_integration() {
        let (sys, hhat, traj) = euler_trajectory(1e-10);
        let x_probe = 0.1234;
        let via_traj = traj.eval_at(&sys, x_probe).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let direct = integrate(&sys, 0.3, &seed, x_probe, 1e-10).unwrap();
        let dev = (via_traj[0] - direct.values().last().unwrap()[0]).norm();
        assert!(dev < 1e-8, "dev = {dev:e}");
        // On-grid evaluation returns the stored value untouched.
        let i = traj.len() / 2;
        let on_grid = traj.eval_at(&sys, traj.xs()[i]).unwrap();
        assert_eq!(on_grid[0], traj.values()[i][0]);
    }
}
