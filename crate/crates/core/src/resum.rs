//! Borel-Laplace resummation along directions.
//!
//! The pipeline: a divergent formal series enters as coefficients, the order
//! `p` Borel transform divides out `Gamma(1 + m/p)` to produce a germ with a
//! positive radius of convergence, Pade approximation (or a closed-form
//! handle) continues that germ along a ray `arg t = theta`, and a Laplace
//! integral of order `p` turns the continued function back into an analytic
//! sum on a sector. Singular directions, where the continued transform has a
//! pole on the ray, split the plane into sectors; [`SectorSum`] evaluates the
//! sum on one sector and [`Resummer::lateral_sums`] produces the two branch
//! values flanking a singular ray, whose mismatch is the Stokes jump.
//!
//! Everything here works on one scalar component at a time; [`Resummer`]
//! bundles the components of a system solution with its direction table.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, TAU};

use num_traits::Zero;
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::{C64, Coeff};
use crate::error::Error;
use crate::odesys::{normalize_angle, SingularDirectionTable, ARG_TOLERANCE};
use crate::quad::{self, QuadResult};
use crate::series::TruncatedSeries;
use crate::{fitting, gamma, linalg, roots, Result};

/// Nominal lateral offset from a singular ray.
///
/// The effective offset is widened by [`Resummer::lateral_sums`] until the
/// integration ray clears the pole guard band: the Borel singularity that
/// makes the direction singular sits on the ray itself, so an offset below
/// `asin(POLE_GUARD_FRACTION)` could never integrate. Laplace sums along any
/// two nonsingular directions in the same sector agree where their sectors
/// overlap, so widening the offset changes nothing but conditioning.
pub const LATERAL_OFFSET: f64 = 0.01;

/// A pole closer to the integration ray than this fraction of its modulus
/// aborts the quadrature with [`Error::PoleOnRay`].
pub const POLE_GUARD_FRACTION: f64 = 0.05;

/// Default relative tolerance for Laplace quadrature.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Minimum number of nonzero coefficients a Gevrey fit window must hold.
pub const GEVREY_MIN_POINTS: usize = 20;

/// `18 ln 10`: the Laplace kernel is truncated where it has fallen to
/// `1e-18` of its peak.
const KERNEL_CUTOFF: f64 = 41.446_531_673_892_83;

/// Hard cap on the lateral deformation angle.
const MAX_DEFORMATION: f64 = 0.35;

/// How far inside its bounding rays a sector sum keeps its integration ray.
const SECTOR_EDGE_MARGIN: f64 = 0.08;

/// Relative tolerance for the Pade validation re-expansion.
const PADE_VALIDATION_TOL: f64 = 1e-7;

// ---------------------------------------------------------------------------
// Borel transform
// ---------------------------------------------------------------------------

/// Order-`p` formal Borel transform of a scalar series: `b_m = h_{m+1} /
/// Gamma(1 + m/p)` for a series `sum h_n x^n` with `h_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BorelSeries<C: Coeff> {
    p: u32,
    coeffs: Vec<C>,
}

impl<C: Coeff> BorelSeries<C> {
    pub fn p(&self) -> u32 {
        self.p
    }

    /// Coefficients `b_0 .. b_{N-1}` where `N` is the input's order.
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Highest available power of `t`.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn to_c64(&self) -> BorelSeries<C64> {
        BorelSeries {
            p: self.p,
            coeffs: self.coeffs.iter().map(Coeff::to_c64).collect(),
        }
    }

    /// View as a truncated power series in `t`.
    pub fn as_series(&self) -> TruncatedSeries<C> {
        TruncatedSeries::from_coeffs(self.coeffs.clone())
    }
}

/// Computes the order-`p` Borel transform of `phi`.
///
/// In exact-rational mode `Gamma(1 + m/p)` is representable only when `p`
/// divides `m` (it is then `(m/p)!`); a nonzero coefficient at a
/// non-divisible index raises [`Error::ExactUnrepresentable`] rather than
/// silently rounding. Float mode evaluates the Gamma factor numerically and
/// lets far-underrange magnitudes flush to zero.
pub fn borel_transform<C: Coeff>(
    phi: &TruncatedSeries<C>,
    p: u32,
) -> Result<BorelSeries<C>> {
    assert!(p >= 1, "Borel order must be positive");
    if !phi.coeff(0).is_zero() {
        return Err(Error::NonzeroConstantTerm);
    }
    let n = phi.order();
    let mut coeffs = Vec::with_capacity(n);
    // Running (m/p)! for the exact branch.
    let mut fact = C::one();
    let mut fact_k = 0i64;
    for m in 0..n {
        let h = phi.coeff(m + 1);
        if C::is_exact() {
            if m % p as usize == 0 {
                let k = (m / p as usize) as i64;
                while fact_k < k {
                    fact_k += 1;
                    fact = fact * C::from_i64(fact_k);
                }
                coeffs.push(h / fact.clone());
            } else if h.is_zero() {
                coeffs.push(C::zero());
            } else {
                return Err(Error::ExactUnrepresentable);
            }
        } else if h.is_zero() {
            coeffs.push(C::zero());
        } else {
            let arg = 1.0 + m as f64 / p as f64;
            let g = gamma::gamma(arg);
            let b = if g.is_finite() {
                h / C::from_f64(g)
            } else {
                h * C::from_f64((-gamma::ln_gamma(arg)).exp())
            };
            coeffs.push(b);
        }
    }
    Ok(BorelSeries { p, coeffs })
}

// ---------------------------------------------------------------------------
// Gevrey order estimation
// ---------------------------------------------------------------------------

/// Least-squares estimate of the Gevrey order of a coefficient sequence.
///
/// The model is `log |c_n| ~ kappa n log n + n log A + const`, the Stirling
/// shape of `K A^n Gamma(n kappa + 1)`. A `p`-summable series fits
/// `kappa = 1/p`; a convergent one fits `kappa = 0`.
#[derive(Debug, Clone)]
pub struct GevreyEstimate {
    pub kappa: f64,
    /// `log A` of the geometric factor.
    pub log_a: f64,
    pub constant: f64,
    pub residual_rms: f64,
    /// Index window `[lo, hi]` the fit used.
    pub window: (usize, usize),
    /// Number of nonzero coefficients found in the window.
    pub points: usize,
}

/// Fits the Stirling growth model over the window `n in [N/4, N]`.
///
/// Magnitudes enter through [`Coeff::abs_log`], so exact-mode sequences fit
/// faithfully at orders where their values dwarf the double range.
pub fn gevrey_estimate<C: Coeff>(phi: &TruncatedSeries<C>) -> Result<GevreyEstimate> {
    let hi = phi.order();
    let lo = hi / 4;
    let mut ns = Vec::new();
    let mut logs = Vec::new();
    for n in lo..=hi {
        if let Some(l) = phi.coeff(n).abs_log() {
            ns.push(n as f64);
            logs.push(l);
        }
    }
    if ns.len() < GEVREY_MIN_POINTS {
        return Err(Error::TooFewCoefficients {
            have: ns.len(),
            need: GEVREY_MIN_POINTS,
        });
    }
    let fit = fitting::fit_stirling(&ns, &logs)?;
    Ok(GevreyEstimate {
        kappa: fit.kappa,
        log_a: fit.log_a,
        constant: fit.constant,
        residual_rms: fit.residual_rms,
        window: (lo, hi),
        points: ns.len(),
    })
}

// ---------------------------------------------------------------------------
// Analytic continuation
// ---------------------------------------------------------------------------

/// Analytic continuation handle for a Borel transform: evaluation anywhere
/// off its poles, plus the pole list for ray guards.
///
/// Implementations are immutable after construction, so a handle can be
/// evaluated concurrently from any number of threads.
pub trait BorelEval: Send + Sync {
    fn eval(&self, t: C64) -> C64;

    /// Known finite singularities, sorted by modulus; empty when entire.
    fn poles(&self) -> &[C64];
}

/// Rational function `N(t)/D(t)` with precomputed poles: the result of Pade
/// continuation, or an exact closed-form Borel transform.
#[derive(Debug, Clone)]
pub struct RationalApproximant {
    num: Vec<C64>,
    den: Vec<C64>,
    poles: Vec<C64>,
}

impl RationalApproximant {
    /// Builds from ascending numerator and denominator coefficients.
    /// `den(0)` must be nonzero: a Borel transform is regular at the origin.
    pub fn from_parts(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        assert!(
            !den.is_empty() && !den[0].is_zero(),
            "denominator must be nonzero at t = 0"
        );
        let mut poles = roots::poly_roots(&den, 1e-12)?;
        poles.sort_by(|a, b| {
            a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg()))
        });
        Ok(Self { num, den, poles })
    }

    pub fn numerator(&self) -> &[C64] {
        &self.num
    }

    pub fn denominator(&self) -> &[C64] {
        &self.den
    }

    /// `(deg N, deg D)` as stored (trailing zeros not trimmed).
    pub fn degrees(&self) -> (usize, usize) {
        (
            self.num.len().saturating_sub(1),
            self.den.len().saturating_sub(1),
        )
    }
}

fn horner(coeffs: &[C64], t: C64) -> C64 {
    let mut acc = C64::zero();
    for c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

impl BorelEval for RationalApproximant {
    fn eval(&self, t: C64) -> C64 {
        horner(&self.num, t) / horner(&self.den, t)
    }

    fn poles(&self) -> &[C64] {
        &self.poles
    }
}

/// Computes the `[l/m]` Pade approximant of a Borel series.
///
/// The denominator solves the standard Toeplitz system with partial
/// pivoting. A rank-deficient table entry is resolved by reducing the
/// denominator degree, which in an exact degenerate block reproduces the
/// same approximant; every candidate is validated by re-expanding it against
/// the input through order `l + m`, and only a validated candidate is
/// returned. If no degree validates the table entry is genuinely degenerate.
pub fn pade<C: Coeff>(
    b: &BorelSeries<C>,
    l: usize,
    m: usize,
) -> Result<RationalApproximant> {
    let c: Vec<C64> = b.coeffs.iter().map(Coeff::to_c64).collect();
    if l + m + 1 > c.len() {
        return Err(Error::TooFewCoefficients {
            have: c.len(),
            need: l + m + 1,
        });
    }
    let cget = |i: isize| -> C64 {
        if i < 0 {
            C64::zero()
        } else {
            c[i as usize]
        }
    };
    let target = (l + m).min(c.len() - 1);

    'candidates: for mt in (0..=m).rev() {
        let q = if mt == 0 {
            Vec::new()
        } else {
            let a: Vec<Vec<C64>> = (1..=mt)
                .map(|i| {
                    (1..=mt)
                        .map(|j| cget((l + i) as isize - j as isize))
                        .collect()
                })
                .collect();
            let rhs: Vec<C64> = (1..=mt).map(|i| -c[l + i]).collect();
            match linalg::solve(&a, &rhs) {
                Some(q) => q,
                None => continue 'candidates,
            }
        };
        let mut den = vec![C64::new(1.0, 0.0)];
        den.extend(q);
        let num: Vec<C64> = (0..=l)
            .map(|i| {
                let mut s = C64::zero();
                for j in 0..=i.min(mt) {
                    s += den[j] * c[i - j];
                }
                s
            })
            .collect();

        // Validate: the series of num/den must reproduce the input through
        // `target`. With den[0] = 1 the re-expansion is a plain recurrence.
        let mut expanded: Vec<C64> = Vec::with_capacity(target + 1);
        let mut scale = 1.0f64;
        let mut ok = true;
        for k in 0..=target {
            let mut s = if k <= l { num[k] } else { C64::zero() };
            for j in 1..=k.min(mt) {
                s -= den[j] * expanded[k - j];
            }
            expanded.push(s);
            scale = scale.max(c[k].norm());
            if (s - c[k]).norm() > PADE_VALIDATION_TOL * scale {
                ok = false;
                break;
            }
        }
        if ok {
            return RationalApproximant::from_parts(num, den);
        }
    }
    Err(Error::DegenerateTable)
}

/// Near-diagonal Pade orders for a series with `available` coefficients,
/// capped to keep the Toeplitz solve well conditioned.
pub fn balanced_orders(available: usize, cap: usize) -> (usize, usize) {
    let m = ((available.saturating_sub(1)) / 2).min(cap);
    (m, m)
}

/// Closed-form Borel transforms of the bundled case studies.
///
/// These bypass Pade so that continuation error and quadrature error
/// separate: any mismatch downstream of an exact handle is quadrature.
pub mod exact {
    use super::RationalApproximant;
    use crate::coeff::C64;
    use alloc::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// `1/(1 - t)`, the Borel transform of the Euler series; pole at 1.
    pub fn euler() -> RationalApproximant {
        RationalApproximant::from_parts(vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(-1.0, 0.0)])
            .expect("fixed denominator")
    }

    /// `1/(1 - 2 t^2)`, the order-2 Borel transform of the odd pump series;
    /// poles at plus and minus `1/sqrt 2`.
    pub fn odd_pump() -> RationalApproximant {
        RationalApproximant::from_parts(
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)],
        )
        .expect("fixed denominator")
    }

    /// Componentwise Borel transforms of the rotating two-dimensional Euler
    /// variant: `(1 - t)/(t^2 - 2t + 2)` and `1/(t^2 - 2t + 2)`, sharing the
    /// pole pair `1 + i`, `1 - i`.
    pub fn euler2d() -> [RationalApproximant; 2] {
        let den = vec![c(2.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)];
        [
            RationalApproximant::from_parts(vec![c(1.0, 0.0), c(-1.0, 0.0)], den.clone())
                .expect("fixed denominator"),
            RationalApproximant::from_parts(vec![c(1.0, 0.0)], den).expect("fixed denominator"),
        ]
    }
}

// ---------------------------------------------------------------------------
// Laplace summation
// ---------------------------------------------------------------------------

/// Distance from `pole` to the ray `{ s e^{i theta} : s >= 0 }`.
pub fn pole_ray_distance(pole: C64, theta: f64) -> f64 {
    let rotated = pole * C64::from_polar(1.0, -theta);
    if rotated.re <= 0.0 {
        pole.norm()
    } else {
        rotated.im.abs()
    }
}

/// Order-`p` Laplace sum of a continued Borel transform along `arg t =
/// theta`, evaluated at `z`.
///
/// Substituting `u = s^p` on the ray turns the integral into a standard
/// Laplace kernel: `(e^{i p theta} / z^{p-1}) int_0^inf e^{-u w} B(u^{1/p}
/// e^{i theta}) du` with `w = e^{i p theta} / z^p`, truncated where the
/// kernel reaches `1e-18` of its peak and integrated by tanh-sinh
/// refinement. `Re w > 0` is the sector condition; a pole of `B` within
/// [`POLE_GUARD_FRACTION`] of the ray (and within integration reach) aborts.
pub fn laplace_sum(
    b: &dyn BorelEval,
    p: u32,
    theta: f64,
    z: C64,
    tol: f64,
) -> Result<QuadResult> {
    assert!(p >= 1, "Laplace order must be positive");
    if z.is_zero() {
        return Ok(QuadResult { value: C64::zero(), est_error: 0.0, evals: 0 });
    }
    let rot = C64::from_polar(1.0, p as f64 * theta);
    let w = rot / z.powi(p as i32);
    if w.re <= 1e-3 * w.norm() {
        return Err(Error::NonDecayingIntegrand);
    }
    let u_max = KERNEL_CUTOFF / w.re;
    let s_max = u_max.powf(1.0 / p as f64);
    for &pole in b.poles() {
        let rotated = pole * C64::from_polar(1.0, -theta);
        let within_reach = rotated.re > 0.0 && rotated.re <= 1.2 * s_max;
        if within_reach && rotated.im.abs() < POLE_GUARD_FRACTION * pole.norm() {
            return Err(Error::PoleOnRay { pole_re: pole.re, pole_im: pole.im });
        }
    }
    let dir = C64::from_polar(1.0, theta);
    let inv_p = 1.0 / p as f64;
    let quad = quad::integrate(
        |u| (-(w * u)).exp() * b.eval(dir * C64::from(u.powf(inv_p))),
        u_max,
        tol,
    )?;
    let prefactor = rot / z.powi(p as i32 - 1);
    Ok(QuadResult {
        value: prefactor * quad.value,
        est_error: prefactor.norm() * quad.est_error,
        evals: quad.evals,
    })
}

// ---------------------------------------------------------------------------
// Directional machinery: lateral sums and sector sums
// ---------------------------------------------------------------------------

/// The two lateral Laplace sums flanking a singular direction.
#[derive(Debug, Clone)]
pub struct LateralSums {
    /// The singular direction itself.
    pub theta_star: f64,
    /// Integration ray used for the clockwise branch.
    pub theta_minus: f64,
    /// Integration ray used for the counterclockwise branch.
    pub theta_plus: f64,
    /// Componentwise sum from the smaller-angle side.
    pub minus: Vec<C64>,
    /// Componentwise sum from the larger-angle side.
    pub plus: Vec<C64>,
    /// Largest quadrature error estimate across components and sides.
    pub est_error: f64,
}

impl LateralSums {
    /// Componentwise jump `plus - minus`.
    pub fn jump(&self) -> Vec<C64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// Deformation offset for a lateral sum beside a singular ray, given the
/// angular gap to the neighboring singular direction on that side.
///
/// The offset is pushed as wide as the sector and the convergence condition
/// `p |theta - arg z| < pi/2` allow, up to a hard cap; wider offsets move
/// the on-ray Borel singularity further from the integration ray, which is
/// pure gain for the quadrature. Returns `None` when even the minimum
/// guard-clearing offset does not fit.
fn effective_offset(gap: f64, p: u32) -> Option<f64> {
    let cap = MAX_DEFORMATION
        .min(0.45 * gap)
        .min(0.7 * FRAC_PI_2 / p as f64);
    let min_needed = (1.2 * POLE_GUARD_FRACTION).asin();
    if cap < min_needed {
        None
    } else {
        Some(cap.max(LATERAL_OFFSET))
    }
}

/// Evaluation bundle for a resummed system solution: one continuation handle
/// per component plus the singular direction table.
///
/// Handles are immutable; evaluation methods take `&self` and can run
/// concurrently.
pub struct Resummer {
    tol: f64,
    components: Vec<Arc<dyn BorelEval>>,
    directions: SingularDirectionTable,
}

impl Resummer {
    pub fn new(
        components: Vec<Box<dyn BorelEval>>,
        directions: SingularDirectionTable,
        tol: f64,
    ) -> Self {
        assert!(!components.is_empty(), "need at least one component");
        assert!(
            !directions.entries.is_empty(),
            "direction table must not be empty"
        );
        Self {
            tol,
            components: components.into_iter().map(Arc::from).collect(),
            directions,
        }
    }

    pub fn p(&self) -> u32 {
        self.directions.p
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn directions(&self) -> &SingularDirectionTable {
        &self.directions
    }

    /// Componentwise Laplace sum along a fixed ray.
    pub fn eval_along(&self, theta: f64, z: C64) -> Result<Vec<QuadResult>> {
        self.components
            .iter()
            .map(|b| laplace_sum(b.as_ref(), self.p(), theta, z, self.tol))
            .collect()
    }

    /// Angular gaps from direction `i` to its nearest distinct neighbors,
    /// `(clockwise, counterclockwise)`. A full turn when alone.
    fn neighbor_gaps(&self, i: usize) -> (f64, f64) {
        let entries = &self.directions.entries;
        let n = entries.len();
        let theta = entries[i].theta;
        let mut cw = TAU;
        let mut ccw = TAU;
        for k in 1..n {
            let d = normalize_angle(entries[(i + k) % n].theta - theta);
            if d > ARG_TOLERANCE && d < ccw {
                ccw = d;
            }
            let d = normalize_angle(theta - entries[(i + n - k) % n].theta);
            if d > ARG_TOLERANCE && d < cw {
                cw = d;
            }
        }
        (cw, ccw)
    }

    /// The two branch values flanking singular direction `dir_index`,
    /// obtained by integrating along deformed rays on either side.
    pub fn lateral_sums(&self, dir_index: usize, z: C64) -> Result<LateralSums> {
        let theta_star = self.directions.entries[dir_index].theta;
        let (gap_cw, gap_ccw) = self.neighbor_gaps(dir_index);
        let p = self.p();
        let unit = C64::from_polar(1.0, theta_star);
        let blocked = Error::PoleOnRay { pole_re: unit.re, pole_im: unit.im };
        let d_minus = effective_offset(gap_cw, p).ok_or(blocked.clone())?;
        let d_plus = effective_offset(gap_ccw, p).ok_or(blocked)?;
        let theta_minus = theta_star - d_minus;
        let theta_plus = theta_star + d_plus;
        let minus = self.eval_along(theta_minus, z)?;
        let plus = self.eval_along(theta_plus, z)?;
        let est_error = minus
            .iter()
            .chain(&plus)
            .fold(0.0f64, |e, r| e.max(r.est_error));
        Ok(LateralSums {
            theta_star,
            theta_minus,
            theta_plus,
            minus: minus.into_iter().map(|r| r.value).collect(),
            plus: plus.into_iter().map(|r| r.value).collect(),
            est_error,
        })
    }

    /// Number of sectors in the covering (one per direction table entry).
    pub fn sector_count(&self) -> usize {
        self.directions.entries.len()
    }

    /// The sector sum on the sector whose clockwise boundary is direction
    /// `l` of the table.
    pub fn sector(&self, l: usize) -> SectorSum {
        let entries = &self.directions.entries;
        let n = entries.len();
        assert!(l < n, "sector index out of range");
        let lo = entries[l].theta;
        let hi = if n == 1 {
            lo + TAU
        } else {
            lo + normalize_angle(entries[(l + 1) % n].theta - lo)
        };
        SectorSum {
            tol: self.tol,
            p: self.p(),
            components: self.components.clone(),
            index: l,
            theta_lo: lo,
            theta_hi: hi,
        }
    }

    /// All sector sums, in boundary order.
    pub fn sectors(&self) -> Vec<SectorSum> {
        (0..self.sector_count()).map(|l| self.sector(l)).collect()
    }
}

/// Evaluation handle for the resummed solution on one sector of the good
/// covering.
///
/// The handle integrates along a nonsingular ray between its bounding
/// singular directions, deformed toward the evaluation point's argument, so
/// one handle serves its whole sector `(theta_lo - pi/2p, theta_hi +
/// pi/2p)`. Cloneable view over shared continuation handles; safe to
/// evaluate from several threads at once.
#[derive(Clone)]
pub struct SectorSum {
    tol: f64,
    p: u32,
    components: Vec<Arc<dyn BorelEval>>,
    index: usize,
    theta_lo: f64,
    theta_hi: f64,
}

impl SectorSum {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    /// The bounding singular directions `(theta_lo, theta_hi)`, unwrapped so
    /// that `theta_lo <= theta_hi <= theta_lo + 2 pi`.
    pub fn bounding_rays(&self) -> (f64, f64) {
        (self.theta_lo, self.theta_hi)
    }

    /// Argument range of `z` the sector sum covers.
    pub fn arg_range(&self) -> (f64, f64) {
        let half = FRAC_PI_2 / self.p as f64;
        (self.theta_lo - half, self.theta_hi + half)
    }

    /// The integration ray `eval` would use for this `z`: the point's
    /// argument clamped inside the sector, away from the bounding rays.
    pub fn integration_theta(&self, z: C64) -> f64 {
        let width = self.theta_hi - self.theta_lo;
        let margin = SECTOR_EDGE_MARGIN.min(0.45 * width);
        let lo = self.theta_lo + margin;
        let hi = self.theta_hi - margin;
        if z.is_zero() {
            return 0.5 * (lo + hi);
        }
        let a = self.theta_lo + normalize_angle(z.arg() - self.theta_lo);
        if a < lo {
            lo
        } else if a <= hi {
            a
        } else {
            // Beyond the upper ray: the lower ray may be nearer going the
            // other way around the circle.
            let d_hi = a - hi;
            let d_lo = self.theta_lo + TAU + margin - a;
            if d_hi <= d_lo {
                hi
            } else {
                lo
            }
        }
    }

    /// Componentwise value of the sector sum at `z`.
    pub fn eval(&self, z: C64) -> Result<Vec<QuadResult>> {
        let theta = self.integration_theta(z);
        self.components
            .iter()
            .map(|b| laplace_sum(b.as_ref(), self.p, theta, z, self.tol))
            .collect()
    }
}
