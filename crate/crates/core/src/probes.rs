//! Probes of quasi-analyticity and transcendence along solutions.
//!
//! A simple function is a polynomial `f(x, z_11 .. z_rn)` with `f(0) = 0`,
//! paired with positive-valuation polynomials `P_1 .. P_n` and a jet level
//! `k`. Composing it with the solution tails gives
//! `phi(x) = f(x, {T_k H_j(P_l(x))})`, and the interesting question is
//! whether `phi` can vanish (identically as a series, or on a trajectory)
//! without `f` being trivial.
//!
//! Two probes look at this from the two sides. [`sat_probe`] composes `f`
//! with tails of the divergent formal solution and reports the first
//! nonvanishing order: a nonzero `f` that composes to the zero series would
//! contradict transcendence of the solution, so persistent nonvanishing is
//! the expected (and reported) evidence. [`sqa_probe`] evaluates the same
//! composition numerically along a trajectory and reports sign changes and,
//! for uniformly small values, the fitted exponential order. Neither probe
//! decides anything: both report the finite-order face of an infinite
//! statement.
//!
//! [`normalize_polynomials`] implements the reduction step that brings
//! arbitrary admissible `P_l` down to the low-degree shape the formal
//! statements require: each `P_l` is replaced by its jet
//! `Q_l = J_{(p+1) nu_l - 1} P_l` and the remainder is absorbed into the
//! simple function through the formal flow of the equation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::Coeff;
use crate::dynamics::{self, Trajectory};
use crate::error::Error;
use crate::fitting::ExpDecayFit;
use crate::odesys::OdeSystem;
use crate::poly::{DegreeCap, MultiPoly};
use crate::series::{SeriesVec, TruncatedSeries, Valuation};
use crate::Result;

/// Default working order for formal compositions.
pub const DEFAULT_PROBE_ORDER: usize = 48;

/// Hard ceiling on the formal order a probe may request.
pub const MAX_PROBE_ORDER: usize = 512;

/// A numeric probe is considered near-flat when no sample magnitude
/// exceeds this, in which case its exponential order is fitted.
pub const NEAR_FLAT: f64 = 0.1;

/// Ceiling on the flow truncation order [`normalize_polynomials`] accepts.
const MAX_FLOW_ORDER: u32 = 64;

/// Which set of admissibility rules to enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Quasi-analyticity probes: positive valuation and positive leading
    /// coefficient for every `P_l`.
    Sqa,
    /// Transcendence probes: additionally `deg P_l < (p+1) val P_l` and
    /// pairwise distinct `P_l`.
    Sat,
}

/// A simple function: `f` in the variables `(x, z_11 .. z_rn)` together
/// with the inner polynomials and the jet level.
///
/// Variable `0` of `f` is `x`; the tail placeholder `z_jl` (component `j`
/// of the tail at `P_l`) lives at index `1 + l*r + j` with `j` and `l`
/// zero-based.
#[derive(Debug, Clone)]
pub struct SimpleFunctionSpec<C: Coeff> {
    f: MultiPoly<C>,
    polynomials: Vec<TruncatedSeries<C>>,
    dim: usize,
    k: usize,
}

impl<C: Coeff> SimpleFunctionSpec<C> {
    /// Panics if the variable count of `f` does not match `1 + dim * n` or
    /// if `f` has a constant term.
    pub fn new(
        f: MultiPoly<C>,
        polynomials: Vec<TruncatedSeries<C>>,
        dim: usize,
        k: usize,
    ) -> Self {
        assert!(dim >= 1 && !polynomials.is_empty());
        assert_eq!(
            f.nvars(),
            1 + dim * polynomials.len(),
            "f must have variables (x, z_11..z_rn)"
        );
        assert!(
            f.coeff(&vec![0; f.nvars()]).is_zero(),
            "f(0) must vanish"
        );
        Self { f, polynomials, dim, k }
    }

    pub fn f(&self) -> &MultiPoly<C> {
        &self.f
    }

    pub fn polynomials(&self) -> &[TruncatedSeries<C>] {
        &self.polynomials
    }

    /// Solution dimension `r` the spec is built for.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of inner polynomials.
    pub fn n(&self) -> usize {
        self.polynomials.len()
    }

    /// Index of the variable `z_jl` inside `f`.
    pub fn var_index(&self, j: usize, l: usize) -> usize {
        assert!(j < self.dim && l < self.n());
        1 + l * self.dim + j
    }
}

fn poly_degree<C: Coeff>(s: &TruncatedSeries<C>) -> Option<usize> {
    (0..=s.order()).rev().find(|&n| !s.coeff(n).is_zero())
}

fn poly_eq<C: Coeff>(a: &TruncatedSeries<C>, b: &TruncatedSeries<C>) -> bool {
    let n = a.order().max(b.order());
    (0..=n).all(|i| a.coeff(i) == b.coeff(i))
}

/// Checks the admissibility rules of the requested mode.
pub fn validate_spec<C: Coeff>(
    spec: &SimpleFunctionSpec<C>,
    p: u32,
    mode: ProbeMode,
) -> Result<()> {
    for (l, poly) in spec.polynomials().iter().enumerate() {
        let val = match poly.valuation() {
            Valuation::Finite(v) if v >= 1 => v,
            _ => return Err(Error::NonpositiveLeading { index: l }),
        };
        let lead = poly.coeff(val).to_c64();
        if !(lead.re > 0.0 && lead.im.abs() <= 1e-12 * lead.re) {
            return Err(Error::NonpositiveLeading { index: l });
        }
        if mode == ProbeMode::Sat {
            let deg = poly_degree(poly).expect("finite valuation implies a term");
            if deg as u64 >= (u64::from(p) + 1) * val as u64 {
                return Err(Error::DegreeBoundViolated { index: l });
            }
        }
    }
    if mode == ProbeMode::Sat {
        for a in 0..spec.n() {
            for b in (a + 1)..spec.n() {
                if poly_eq(&spec.polynomials()[a], &spec.polynomials()[b]) {
                    return Err(Error::DuplicatePolynomials { first: a, second: b });
                }
            }
        }
    }
    Ok(())
}

/// The formal composition `f(x, {T_k Hhat_j(P_l(x))})` to the given order.
///
/// Needs only SQA admissibility; the SAT-specific checks are the caller's
/// concern. The formal solution is solved internally to `order + k`.
pub fn composed_series<C: Coeff>(
    spec: &SimpleFunctionSpec<C>,
    sys: &OdeSystem<C>,
    order: usize,
) -> Result<TruncatedSeries<C>> {
    validate_spec(spec, sys.p(), ProbeMode::Sqa)?;
    assert_eq!(spec.dim(), sys.dim());
    if order + spec.k() > MAX_PROBE_ORDER {
        return Err(Error::InsufficientOrder {
            have: MAX_PROBE_ORDER,
            need: order + spec.k(),
        });
    }
    let hhat = sys.formal_solution(order + spec.k())?;
    let mut args = Vec::with_capacity(spec.f().nvars());
    args.push(TruncatedSeries::x(order));
    for l in 0..spec.n() {
        let inner = spec.polynomials()[l].resized(order);
        for j in 0..spec.dim() {
            let tail = hhat.component(j).tail(spec.k())?;
            args.push(tail.resized(order).compose(&inner)?);
        }
    }
    Ok(spec.f().eval_series(&args))
}

/// Outcome of a formal transcendence probe.
#[derive(Debug, Clone)]
pub struct SatProbeReport<C: Coeff> {
    /// Orders `1..=checked_order` were scanned.
    pub checked_order: usize,
    /// True when every scanned coefficient is zero.
    pub vanishes: bool,
    pub first_nonzero_order: Option<usize>,
    pub first_nonzero_coeff: Option<C>,
    /// The full composed series at the working order, for inspection.
    pub composed: TruncatedSeries<C>,
}

/// Composes `f` with tails of the formal solution and scans for the first
/// nonvanishing coefficient through order `n`.
///
/// Coefficients are compared against zero exactly, which is meaningful in
/// rational mode; float-mode composition carries rounding dust, so run the
/// exact coefficient type when the verdict matters.
pub fn sat_probe<C: Coeff>(
    spec: &SimpleFunctionSpec<C>,
    sys: &OdeSystem<C>,
    n: usize,
) -> Result<SatProbeReport<C>> {
    validate_spec(spec, sys.p(), ProbeMode::Sat)?;
    let working = n.max(DEFAULT_PROBE_ORDER);
    let composed = composed_series(spec, sys, working)?;
    let first = (0..=n).find(|&i| !composed.coeff(i).is_zero());
    Ok(SatProbeReport {
        checked_order: n,
        vanishes: first.is_none(),
        first_nonzero_order: first,
        first_nonzero_coeff: first.map(|i| composed.coeff(i)),
        composed,
    })
}

/// One numeric evaluation of the composed function.
#[derive(Debug, Clone, Copy)]
pub struct SqaSample {
    pub x: f64,
    pub value: C64,
    /// Propagated noise estimate: trajectory error and cancellation in the
    /// tail quotient, pushed through the gradient of `f`.
    pub est_error: f64,
}

/// Outcome of a numeric quasi-analyticity probe.
#[derive(Debug, Clone)]
pub struct SqaProbeReport {
    /// Samples in decreasing `x`, following the trajectory grid.
    pub samples: Vec<SqaSample>,
    /// Strict sign changes of the real part along the grid.
    pub zero_count: usize,
    /// Exponential-order fit of `|phi|`, present when the probe is
    /// near-flat (peak below [`NEAR_FLAT`]) and enough positive magnitudes
    /// with a factor-four span are available.
    pub flat_fit: Option<ExpDecayFit>,
}

/// Evaluates `phi(x) = f(x, {T_k H_j(P_l(x))})` on the trajectory grid.
///
/// Tails are formed from trajectory values and exact jets of the formal
/// solution, never by numerical differentiation; the division by `P_l^k`
/// still cancels, and the per-sample `est_error` reports how much accuracy
/// that costs. `window` restricts which grid points are probed (the images
/// `P_l(x)` must stay inside the full trajectory range either way).
pub fn sqa_probe(
    spec: &SimpleFunctionSpec<C64>,
    sys: &OdeSystem<C64>,
    hhat: &SeriesVec<C64>,
    traj: &Trajectory,
    window: Option<(f64, f64)>,
) -> Result<SqaProbeReport> {
    validate_spec(spec, sys.p(), ProbeMode::Sqa)?;
    assert_eq!(spec.dim(), sys.dim());
    assert_eq!(traj.dimension(), sys.dim());
    if hhat.order() < spec.k() {
        return Err(Error::InsufficientOrder {
            have: hhat.order(),
            need: spec.k(),
        });
    }
    let grads: Vec<MultiPoly<C64>> = (1..spec.f().nvars())
        .map(|v| spec.f().derivative(v))
        .collect();
    let kp = spec.k() as i32;
    let mut samples = Vec::new();
    for (i, &x) in traj.xs().iter().enumerate() {
        if let Some((lo, hi)) = window {
            if x < lo || x > hi {
                continue;
            }
        }
        let mut point = vec![C64::from(x)];
        let mut noise = vec![0.0_f64];
        for l in 0..spec.n() {
            let u_c = spec.polynomials()[l]
                .partial_sum_eval(C64::from(x), spec.polynomials()[l].order())?;
            assert!(
                u_c.im.abs() <= 1e-12 * (1.0 + u_c.re.abs()),
                "inner polynomials must be real"
            );
            let u = u_c.re;
            if u <= 0.0 || u < traj.end() || u > traj.start() {
                return Err(Error::RangeExceeded { x, image: u });
            }
            let h_u = if u == x {
                traj.values()[i].clone()
            } else {
                traj.eval_at(sys, u)?
            };
            let upow = u.powi(kp);
            for j in 0..spec.dim() {
                let jet = hhat.component(j).partial_sum_eval(C64::from(u), spec.k())?;
                point.push((h_u[j] - jet) / upow);
                noise.push((f64::EPSILON + traj.tol) * (1.0 + h_u[j].norm()) / upow);
            }
        }
        let value = spec.f().eval_c64(&point);
        let est: f64 = grads
            .iter()
            .enumerate()
            .map(|(gi, g)| g.eval_c64(&point).norm() * noise[gi + 1])
            .sum();
        samples.push(SqaSample { x, value, est_error: est });
    }
    let re: Vec<f64> = samples.iter().map(|s| s.value.re).collect();
    let zero_count = dynamics::zero_count(&re);
    let peak = samples
        .iter()
        .map(|s| s.value.norm())
        .fold(0.0_f64, f64::max);
    let flat_fit = if peak > 0.0 && peak <= NEAR_FLAT {
        let mut fx = Vec::new();
        let mut fm = Vec::new();
        for s in &samples {
            let m = s.value.norm();
            if m > 0.0 {
                fx.push(s.x);
                fm.push(m);
            }
        }
        let lo = fx.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fx.iter().cloned().fold(0.0_f64, f64::max);
        if fx.len() >= 8 && hi / lo >= 3.9 {
            dynamics::exp_order_fit(&fx, &fm).ok()
        } else {
            None
        }
    } else {
        None
    };
    Ok(SqaProbeReport { samples, zero_count, flat_fit })
}

/// `s^e` at the operand order.
fn pow_series<C: Coeff>(s: &TruncatedSeries<C>, e: usize) -> TruncatedSeries<C> {
    let mut acc = TruncatedSeries::one(s.order());
    for _ in 0..e {
        acc = acc.mul(s);
    }
    acc
}

/// Long division of truncated series. The divisor's leading block of the
/// numerator must vanish identically (the caller guarantees divisibility);
/// the quotient has order `num.order() - val(den)`.
fn series_div<C: Coeff>(
    num: &TruncatedSeries<C>,
    den: &TruncatedSeries<C>,
) -> TruncatedSeries<C> {
    let v = match den.valuation() {
        Valuation::Finite(v) => v,
        Valuation::Infinite => panic!("division by the zero series"),
    };
    let out_order = num.order().saturating_sub(v);
    let d0 = den.coeff(v);
    let mut q = TruncatedSeries::zero(out_order);
    for i in 0..=out_order {
        let mut acc = num.coeff(v + i);
        for m in 0..i {
            acc = acc - q.coeff(m) * den.coeff(v + i - m);
        }
        *q.coeff_mut(i) = acc / d0.clone();
    }
    q
}

/// Splits a polynomial in `(x, w_1..w_r)` by tail exponents, divides each
/// `x`-coefficient series by `den`, and re-embeds the result into the
/// output variable space with the tail block at `block`.
fn divide_and_remap<C: Coeff>(
    num: &MultiPoly<C>,
    den: &TruncatedSeries<C>,
    block: usize,
    r: usize,
    nv_out: usize,
    ext: usize,
    keep: usize,
) -> MultiPoly<C> {
    let mut groups: BTreeMap<Vec<u32>, TruncatedSeries<C>> = BTreeMap::new();
    for (exps, c) in num.terms() {
        let xe = exps[0] as usize;
        if xe > ext {
            continue;
        }
        let entry = groups
            .entry(exps[1..].to_vec())
            .or_insert_with(|| TruncatedSeries::zero(ext));
        *entry.coeff_mut(xe) = entry.coeff(xe) + c.clone();
    }
    let mut out = MultiPoly::zero(nv_out);
    for (wexp, series) in groups {
        let quot = series_div(&series, den);
        for nx in 0..=quot.order() {
            let c = quot.coeff(nx);
            if c.is_zero() {
                continue;
            }
            let mut e = vec![0u32; nv_out];
            e[0] = nx as u32;
            for (i, &we) in wexp.iter().enumerate() {
                e[1 + block * r + i] = we;
            }
            if e.iter().sum::<u32>() <= keep as u32 {
                out.add_term(e, c);
            }
        }
    }
    out
}

/// Reduces each `P_l` to its jet `Q_l = J_{(p+1) nu_l - 1} P_l`,
/// deduplicates the jets, and rewrites `f` through the formal flow so that
/// the composed series is unchanged to the working order:
/// with `P_l = Q_l + Q_l^{p+1} u_l`, the flow carries the solution from
/// `Q_l` to `P_l`, and expressing that transport in terms of the tail at
/// `Q_l` gives the substitution for each `z_jl`.
///
/// The input needs only SQA admissibility; the output polynomials satisfy
/// the SAT degree bound by construction.
pub fn normalize_polynomials<C: Coeff>(
    spec: &SimpleFunctionSpec<C>,
    sys: &OdeSystem<C>,
    working: usize,
) -> Result<SimpleFunctionSpec<C>> {
    validate_spec(spec, sys.p(), ProbeMode::Sqa)?;
    assert_eq!(spec.dim(), sys.dim());
    assert!(working >= 1);
    let p = sys.p() as usize;
    let r = sys.dim();
    let k = spec.k();
    let hhat = sys.formal_solution(k.max(1))?;

    let mut reduced: Vec<TruncatedSeries<C>> = Vec::new();
    let mut placement: Vec<(usize, TruncatedSeries<C>, usize)> = Vec::new();
    for poly in spec.polynomials() {
        let val = match poly.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinite => unreachable!("validated above"),
        };
        let jet_order = (p + 1) * val - 1;
        let q = if poly.order() <= jet_order {
            poly.clone()
        } else {
            poly.jet(jet_order)?.resized(jet_order)
        };
        let idx = match reduced.iter().position(|qq| poly_eq(qq, &q)) {
            Some(i) => i,
            None => {
                reduced.push(q.clone());
                reduced.len() - 1
            }
        };
        placement.push((idx, q, val));
    }
    let nv_out = 1 + r * reduced.len();
    let nu_min = placement.iter().map(|t| t.2).min().unwrap();
    let nu_max = placement.iter().map(|t| t.2).max().unwrap();

    // Dividing the transported tail by P_l^k shifts orders down by
    // k nu_l, so every intermediate runs at an inflated order.
    let ext = working + k * nu_max;

    // Flow truncation: a discarded z^m slice contributes x-valuation at
    // least nu (p m + 1) after the substitutions, so this order keeps
    // everything that can reach the inflated order.
    let n_z = (ext as u32).div_ceil(p as u32 * nu_min as u32).max(1);
    if n_z > MAX_FLOW_ORDER {
        return Err(Error::InsufficientOrder {
            have: MAX_FLOW_ORDER as usize,
            need: n_z as usize,
        });
    }
    let flow = sys.formal_flow(n_z, ext as u32, ext as u32);
    let cap = DegreeCap::total(ext as u32);
    let nv_mid = 1 + r;

    let mut images_f: Vec<MultiPoly<C>> = vec![MultiPoly::var(nv_out, 0)];
    for l in 0..spec.n() {
        let (block, q, val) = &placement[l];
        // P and Q are exact polynomials, so resizing only pads zeros and
        // the quotient u is correct to the full inflated order.
        let pv = (p + 1) * val;
        let porig = spec.polynomials()[l].resized(ext);
        let qs = q.resized(ext);
        let diff = spec.polynomials()[l]
            .resized(ext + pv)
            .sub(&q.resized(ext + pv));
        let u_series = if diff.valuation() == Valuation::Infinite {
            TruncatedSeries::zero(ext)
        } else {
            series_div(&diff, &pow_series(&q.resized(ext + pv), p + 1))
        };

        let mut images_mid: Vec<MultiPoly<C>> = Vec::with_capacity(2 + r);
        images_mid.push(MultiPoly::from_univariate(
            &u_series.resized(ext),
            0,
            nv_mid,
            &cap,
        ));
        images_mid.push(MultiPoly::from_univariate(&qs, 0, nv_mid, &cap));
        let q_k = pow_series(&qs, k);
        for i in 0..r {
            let jet_at_q = hhat.component(i).jet(k)?.resized(ext).compose(&qs)?;
            let img = MultiPoly::from_univariate(&jet_at_q, 0, nv_mid, &cap).add(
                &MultiPoly::from_univariate(&q_k, 0, nv_mid, &cap)
                    .mul(&MultiPoly::var(nv_mid, 1 + i), &cap),
            );
            images_mid.push(img);
        }

        let p_k = pow_series(&porig, k);
        for j in 0..r {
            let transported = flow.components()[j].substitute(&images_mid, &cap);
            let jet_at_p = hhat.component(j).jet(k)?.resized(ext).compose(&porig)?;
            let num = transported.add(
                &MultiPoly::from_univariate(&jet_at_p, 0, nv_mid, &cap)
                    .scale(&(-C::one())),
            );
            images_f.push(divide_and_remap(
                &num, &p_k, *block, r, nv_out, ext, working,
            ));
        }
    }
    let f_out = spec
        .f()
        .substitute(&images_f, &DegreeCap::total(working as u32));
    Ok(SimpleFunctionSpec::new(f_out, reduced, r, k))
}

/// Two independent copies of the system side by side, dimension `2r`.
///
/// A trajectory of the doubled system carries two solutions of the
/// original equation at once, which lets a simple function probe their
/// difference. The pair integrator in `dynamics` resolves such differences
/// far below float noise; this construction is the blunt instrument for
/// moderate windows.
pub fn doubled_system<C: Coeff>(sys: &OdeSystem<C>) -> OdeSystem<C> {
    let r = sys.dim();
    let nv = 1 + 2 * r;
    let mut rhs = Vec::with_capacity(2 * r);
    for copy in 0..2 {
        for comp in sys.components() {
            let mut poly = MultiPoly::zero(nv);
            for (exps, c) in comp.terms() {
                let mut e = vec![0u32; nv];
                e[0] = exps[0];
                for i in 0..r {
                    e[1 + copy * r + i] = exps[1 + i];
                }
                poly.add_term(e, c.clone());
            }
            rhs.push(poly);
        }
    }
    OdeSystem::new(sys.p(), rhs).expect("doubling preserves system validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CRat;
    use crate::dynamics::{
        default_seed_order, geometric_grid, integrate, integrate_on_grid,
        partial_sum_seed, phase_grid,
    };
    use crate::odesys::standard;

    fn x_poly<C: Coeff>() -> TruncatedSeries<C> {
        TruncatedSeries::x(1)
    }

    fn scaled_x<C: Coeff>(c: i64) -> TruncatedSeries<C> {
        TruncatedSeries::monomial(C::from_i64(c), 1, 1)
    }

    fn pick<C: Coeff>(nvars: usize, var: usize) -> MultiPoly<C> {
        MultiPoly::var(nvars, var)
    }

    #[test]
    fn validation_rules() {
        let ok = SimpleFunctionSpec::<CRat>::new(pick(2, 1), vec![x_poly()], 1, 0);
        assert!(validate_spec(&ok, 1, ProbeMode::Sqa).is_ok());
        assert!(validate_spec(&ok, 1, ProbeMode::Sat).is_ok());

        // x + x^3 violates deg < (p+1) val at p = 1 but is fine for SQA.
        let mut steep = TruncatedSeries::<CRat>::x(3);
        *steep.coeff_mut(3) = CRat::from_i64(1);
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![steep], 1, 0);
        assert!(validate_spec(&spec, 1, ProbeMode::Sqa).is_ok());
        assert!(matches!(
            validate_spec(&spec, 1, ProbeMode::Sat),
            Err(Error::DegreeBoundViolated { index: 0 })
        ));
        // The same polynomial is admissible at p = 3.
        assert!(validate_spec(&spec, 3, ProbeMode::Sat).is_ok());

        let two = SimpleFunctionSpec::<CRat>::new(
            pick(3, 1),
            vec![x_poly(), scaled_x(2)],
            1,
            0,
        );
        assert!(validate_spec(&two, 1, ProbeMode::Sat).is_ok());

        let dup = SimpleFunctionSpec::<CRat>::new(
            pick(3, 1),
            vec![x_poly(), x_poly()],
            1,
            0,
        );
        assert!(validate_spec(&dup, 1, ProbeMode::Sqa).is_ok());
        assert!(matches!(
            validate_spec(&dup, 1, ProbeMode::Sat),
            Err(Error::DuplicatePolynomials { first: 0, second: 1 })
        ));

        let neg = SimpleFunctionSpec::<CRat>::new(
            pick(2, 1),
            vec![scaled_x(-1)],
            1,
            0,
        );
        assert!(matches!(
            validate_spec(&neg, 1, ProbeMode::Sqa),
            Err(Error::NonpositiveLeading { index: 0 })
        ));

        let mut shifted = TruncatedSeries::<CRat>::one(2);
        *shifted.coeff_mut(1) = CRat::from_i64(1);
        let const_term = SimpleFunctionSpec::new(pick(2, 1), vec![shifted], 1, 0);
        assert!(matches!(
            validate_spec(&const_term, 1, ProbeMode::Sqa),
            Err(Error::NonpositiveLeading { index: 0 })
        ));
    }

    #[test]
    fn sat_single_tail_is_the_solution_series() {
        let sys = standard::euler::<CRat>();
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![x_poly()], 1, 0);
        let report = sat_probe(&spec, &sys, 10).unwrap();
        assert!(!report.vanishes);
        assert_eq!(report.first_nonzero_order, Some(1));
        assert_eq!(report.first_nonzero_coeff, Some(CRat::from_i64(1)));
        // T_0 Hhat(x) is the Euler series itself.
        let mut fact = CRat::from_i64(1);
        for n in 1..=8usize {
            assert_eq!(report.composed.coeff(n), fact);
            fact = fact * CRat::from_i64(n as i64);
        }
    }

    #[test]
    fn sat_two_scales_cancel_nothing() {
        let sys = standard::euler::<CRat>();
        // f = z_11 - z_12 over P_1 = x, P_2 = 2x composes to
        // sum (n-1)! (1 - 2^n) x^n.
        let f = pick::<CRat>(3, 1).add(&pick(3, 2).scale(&CRat::from_i64(-1)));
        let spec = SimpleFunctionSpec::new(f, vec![x_poly(), scaled_x(2)], 1, 0);
        let report = sat_probe(&spec, &sys, 12).unwrap();
        assert_eq!(report.first_nonzero_order, Some(1));
        assert_eq!(report.first_nonzero_coeff, Some(CRat::from_i64(-1)));
        assert_eq!(report.composed.coeff(2), CRat::from_i64(-3));
        assert_eq!(report.composed.coeff(3), CRat::from_i64(-14));
    }

    #[test]
    fn sat_zero_function_vanishes() {
        let sys = standard::euler::<CRat>();
        let spec = SimpleFunctionSpec::new(
            MultiPoly::<CRat>::zero(2),
            vec![x_poly()],
            1,
            0,
        );
        let report = sat_probe(&spec, &sys, 40).unwrap();
        assert!(report.vanishes);
        assert_eq!(report.first_nonzero_order, None);
        assert_eq!(report.first_nonzero_coeff, None);
    }

    #[test]
    fn sat_respects_jet_level() {
        let sys = standard::euler::<CRat>();
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![x_poly()], 1, 2);
        let report = sat_probe(&spec, &sys, 10).unwrap();
        // T_2 Hhat = sum_{n>=3} (n-1)! x^{n-2}.
        assert_eq!(report.first_nonzero_order, Some(1));
        assert_eq!(report.composed.coeff(1), CRat::from_i64(2));
        assert_eq!(report.composed.coeff(2), CRat::from_i64(6));
    }

    #[test]
    fn sat_order_ceiling() {
        let sys = standard::euler::<CRat>();
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![x_poly()], 1, 500);
        assert!(matches!(
            sat_probe(&spec, &sys, 20),
            Err(Error::InsufficientOrder { .. })
        ));
    }

    #[test]
    fn sat_random_family_never_vanishes_on_euler2d() {
        let sys = standard::euler2d::<CRat>();
        // Deterministic linear congruential stream.
        let mut state = 0x2545f4914f6cdd1d_u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        let nv = 1 + 2 * 2;
        for _ in 0..8 {
            let mut f = MultiPoly::<CRat>::zero(nv);
            let terms = 1 + next() % 3;
            let mut used = Vec::new();
            while used.len() < terms as usize {
                let mut e = vec![0u32; nv];
                e[0] = next() % 2;
                for slot in e.iter_mut().skip(1) {
                    *slot = next() % 2;
                }
                if e.iter().skip(1).sum::<u32>() > 3 || e.iter().all(|&v| v == 0) {
                    continue;
                }
                if used.contains(&e) {
                    continue;
                }
                let c = [-2i64, -1, 1, 2][(next() % 4) as usize];
                f.add_term(e.clone(), CRat::from_i64(c));
                used.push(e);
            }
            let spec =
                SimpleFunctionSpec::new(f, vec![x_poly(), scaled_x(2)], 2, 0);
            let report = sat_probe(&spec, &sys, 40).unwrap();
            assert!(
                report.first_nonzero_order.is_some(),
                "random simple function composed to zero"
            );
        }
    }

    #[test]
    fn normalize_keeps_reduced_specs() {
        let sys = standard::euler::<CRat>();
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![x_poly()], 1, 0);
        let out = normalize_polynomials(&spec, &sys, 12).unwrap();
        assert_eq!(out.n(), 1);
        assert!(poly_eq(&out.polynomials()[0], &x_poly::<CRat>()));
        assert_eq!(out.f(), spec.f());
    }

    #[test]
    fn normalize_reduces_and_preserves_composition() {
        let sys = standard::euler::<CRat>();
        // P = x + x^2 exceeds the SAT bound; its reduction is Q = x.
        let mut poly = TruncatedSeries::<CRat>::x(2);
        *poly.coeff_mut(2) = CRat::from_i64(1);
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![poly], 1, 0);
        let out = normalize_polynomials(&spec, &sys, 12).unwrap();
        assert_eq!(out.n(), 1);
        assert!(poly_eq(&out.polynomials()[0], &x_poly::<CRat>()));
        assert!(validate_spec(&out, sys.p(), ProbeMode::Sat).is_ok());
        let before = composed_series(&spec, &sys, 12).unwrap();
        let after = composed_series(&out, &sys, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(before.coeff(n), after.coeff(n), "order {n}");
        }
    }

    #[test]
    fn normalize_respects_jet_level() {
        let sys = standard::euler::<CRat>();
        let mut poly = TruncatedSeries::<CRat>::x(2);
        *poly.coeff_mut(2) = CRat::from_i64(1);
        let spec = SimpleFunctionSpec::new(pick(2, 1), vec![poly], 1, 2);
        let out = normalize_polynomials(&spec, &sys, 12).unwrap();
        let before = composed_series(&spec, &sys, 12).unwrap();
        let after = composed_series(&out, &sys, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(before.coeff(n), after.coeff(n), "order {n}");
        }
    }

    #[test]
    fn normalize_merges_shared_jets() {
        let sys = standard::euler::<CRat>();
        let mut long = TruncatedSeries::<CRat>::x(2);
        *long.coeff_mut(2) = CRat::from_i64(1);
        let f = pick::<CRat>(3, 1).add(&pick(3, 2));
        let spec = SimpleFunctionSpec::new(f, vec![long, x_poly()], 1, 0);
        let out = normalize_polynomials(&spec, &sys, 12).unwrap();
        assert_eq!(out.n(), 1, "shared jets must merge");
        assert_eq!(out.f().nvars(), 2);
        let before = composed_series(&spec, &sys, 12).unwrap();
        let after = composed_series(&out, &sys, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(before.coeff(n), after.coeff(n), "order {n}");
        }
    }

    #[test]
    fn sqa_euler_solution_stays_positive() {
        let sys = standard::euler::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let seed = partial_sum_seed(&hhat, default_seed_order(0.3), 0.3);
        let traj = integrate(&sys, 0.3, &seed, 0.02, 1e-10).unwrap();
        let spec = SimpleFunctionSpec::new(pick::<C64>(2, 1), vec![x_poly()], 1, 0);
        let report = sqa_probe(&spec, &sys, &hhat, &traj, None).unwrap();
        assert_eq!(report.samples.len(), traj.len());
        assert_eq!(report.zero_count, 0);
        assert!(report.flat_fit.is_none());
        for (s, v) in report.samples.iter().zip(traj.values()) {
            assert!(s.value.re > 0.0);
            assert!((s.value - v[0]).norm() < 1e-14);
            assert!(s.est_error < 1e-8);
        }
    }

    #[test]
    fn sqa_rejects_images_outside_range() {
        let sys = standard::euler::<C64>();
        let hhat = sys.formal_solution(10).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.3);
        let traj = integrate(&sys, 0.3, &seed, 0.02, 1e-8).unwrap();
        let spec =
            SimpleFunctionSpec::new(pick::<C64>(2, 1), vec![scaled_x(2)], 1, 0);
        match sqa_probe(&spec, &sys, &hhat, &traj, None) {
            Err(Error::RangeExceeded { x, image }) => {
                assert_eq!(x, 0.3);
                assert!((image - 0.6).abs() < 1e-12);
            }
            other => panic!("expected RangeExceeded, got {other:?}"),
        }
    }

    #[test]
    fn sqa_agrees_with_formal_composition() {
        let sys = standard::euler::<C64>();
        let hhat = sys.formal_solution(12).unwrap();
        let seed = partial_sum_seed(&hhat, 3, 0.42);
        let traj = integrate(&sys, 0.42, &seed, 0.02, 1e-10).unwrap();
        // P = x + x^3 with jet level 1 exercises off-grid images and the
        // tail quotient.
        let mut poly = TruncatedSeries::<C64>::x(3);
        *poly.coeff_mut(3) = C64::from(1.0);
        let spec = SimpleFunctionSpec::new(pick::<C64>(2, 1), vec![poly], 1, 1);
        let report = sqa_probe(&spec, &sys, &hhat, &traj, Some((0.02, 0.12))).unwrap();
        assert!(report.samples.len() >= 40);

        let exact_sys = standard::euler::<CRat>();
        let mut poly_exact = TruncatedSeries::<CRat>::x(3);
        *poly_exact.coeff_mut(3) = CRat::from_i64(1);
        let exact_spec =
            SimpleFunctionSpec::new(pick::<CRat>(2, 1), vec![poly_exact], 1, 1);
        let formal = composed_series(&exact_spec, &exact_sys, 12)
            .unwrap()
            .to_c64_series();
        let c7 = formal.coeff(7).norm();
        assert!(c7 > 0.0);
        // The samples follow the truncated composition with a remainder of
        // asymptotic size: |phi - J_6| / x^7 stays within a small factor of
        // |c_7| on the window.
        for s in &report.samples {
            let jet = formal.partial_sum_eval(C64::from(s.x), 6).unwrap();
            let ratio = (s.value - jet).norm() / s.x.powi(7);
            assert!(
                ratio < 4.0 * c7 && ratio > 0.2 * c7,
                "x = {}: ratio {ratio:e} vs c7 {c7:e}",
                s.x
            );
        }
    }

    #[test]
    fn sqa_doubled_euler_difference_is_flat_of_order_one() {
        let sys = standard::euler::<C64>();
        let double = doubled_system(&sys);
        let hhat = sys.formal_solution(10).unwrap();
        let hhat2 = double.formal_solution(10).unwrap();
        let base = partial_sum_seed(&hhat, 3, 0.3);
        let seed = vec![base[0] + C64::from(0.08), base[0]];
        let grid = geometric_grid(0.3, 0.05, 64);
        let traj = integrate_on_grid(&double, &grid, &seed, 1e-12).unwrap();
        let f = pick::<C64>(3, 1).add(&pick(3, 2).scale(&C64::from(-1.0)));
        let spec = SimpleFunctionSpec::new(f, vec![x_poly()], 2, 0);
        let report = sqa_probe(&spec, &double, &hhat2, &traj, None).unwrap();
        assert_eq!(report.zero_count, 0);
        for s in &report.samples {
            assert!(s.value.re > 0.0);
            assert!(s.value.re > 10.0 * s.est_error, "x = {}", s.x);
        }
        let fit = report.flat_fit.expect("difference is near-flat");
        assert_eq!(fit.order, 1.0);
        assert!((fit.rate - 1.0).abs() < 0.15, "rate = {}", fit.rate);
    }

    #[test]
    fn sqa_doubled_euler2d_difference_oscillates() {
        let sys = standard::euler2d::<C64>();
        let double = doubled_system(&sys);
        let hhat = sys.formal_solution(8).unwrap();
        let hhat2 = double.formal_solution(8).unwrap();
        let base = partial_sum_seed(&hhat, 3, 0.3);
        let seed = vec![base[0] + C64::from(0.08), base[1], base[0], base[1]];
        let grid = phase_grid(0.3, 0.045, 1.0, 1, 16);
        let traj = integrate_on_grid(&double, &grid, &seed, 1e-12).unwrap();
        // f picks the first component of H - G.
        let f = pick::<C64>(5, 1).add(&pick(5, 3).scale(&C64::from(-1.0)));
        let spec = SimpleFunctionSpec::new(f, vec![x_poly()], 4, 0);
        let report = sqa_probe(&spec, &double, &hhat2, &traj, None).unwrap();
        assert!(report.zero_count >= 5, "zero_count = {}", report.zero_count);
    }

    #[test]
    fn doubled_system_evaluates_blockwise() {
        let sys = standard::euler::<CRat>();
        let double = doubled_system(&sys);
        assert_eq!(double.dim(), 2);
        assert_eq!(double.p(), sys.p());
        let x = CRat::from_ratio(1, 10);
        let a = CRat::from_ratio(2, 7);
        let b = CRat::from_ratio(-3, 5);
        let single_a = sys.eval_a(&x, &[a.clone()]);
        let single_b = sys.eval_a(&x, &[b.clone()]);
        let joint = double.eval_a(&x, &[a, b]);
        assert_eq!(joint[0], single_a[0]);
        assert_eq!(joint[1], single_b[0]);
    }
}
