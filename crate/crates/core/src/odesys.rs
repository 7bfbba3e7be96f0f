//! The model type `x^(p+1) y' = A(x, y)` and everything formal about it:
//! the recursive power-series solution, eigenvalue and singular-direction
//! analysis of the linear part, the tail system solved by `T_k` of the
//! solution, and the truncated formal flow in the blown-up time variable.
//!
//! Right-hand sides are sparse polynomials in `(x, y_1..y_r)`; variable 0 is
//! always `x`. All operations are generic over the coefficient field, so the
//! same code path produces certified exact results in rational mode and fast
//! approximations in floating mode.

use alloc::vec;
use alloc::vec::Vec;

// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::coeff::{C64, Coeff};
use crate::error::Error;
use crate::linalg;
use crate::poly::{DegreeCap, MultiPoly};
use crate::roots;
use crate::series::{SeriesVec, TruncatedSeries};
use crate::Result;

/// Diagonal dominance of angular separation: two eigenvalue arguments closer
/// than this (radians, circular distance) count as coincident.
pub const ARG_TOLERANCE: f64 = 1e-9;

/// Largest supported dimension for the eigenvalue path.
pub const MAX_DIM: usize = 8;

/// An irregular singular system `x^(p+1) y' = A(x, y)`.
///
/// `A` is polynomial with `A(0, 0) = 0`; the Poincare rank `p` is at least
/// one. Instances are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem<C: Coeff> {
    p: u32,
    rhs: Vec<MultiPoly<C>>,
}

impl<C: Coeff> OdeSystem<C> {
    /// Builds a system from its right-hand side components. Component `i`
    /// is a polynomial in `(x, y_1..y_r)` with variable 0 being `x`.
    pub fn new(p: u32, rhs: Vec<MultiPoly<C>>) -> Result<Self> {
        assert!(p >= 1, "Poincare rank must be at least 1");
        let r = rhs.len();
        assert!(r >= 1, "dimension must be at least 1");
        for comp in &rhs {
            if comp.nvars() != r + 1 {
                return Err(Error::DimensionMismatch { left: comp.nvars(), right: r + 1 });
            }
            let origin = vec![0u32; r + 1];
            if !comp.coeff(&origin).is_zero() {
                return Err(Error::NonzeroConstantTerm);
            }
        }
        Ok(OdeSystem { p, rhs })
    }

    /// Poincare rank.
    pub fn p(&self) -> u32 {
        self.p
    }

    /// Dimension `r`.
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Right-hand side components.
    pub fn components(&self) -> &[MultiPoly<C>] {
        &self.rhs
    }

    /// One right-hand side component.
    pub fn component(&self, i: usize) -> &MultiPoly<C> {
        &self.rhs[i]
    }

    /// Float projection of the system.
    pub fn to_c64(&self) -> OdeSystem<C64> {
        OdeSystem {
            p: self.p,
            rhs: self.rhs.iter().map(MultiPoly::to_c64_poly).collect(),
        }
    }

    /// The matrix `A_0 = dA/dy(0, 0)` of first-order `y`-coefficients.
    pub fn linear_part(&self) -> Vec<Vec<C>> {
        let r = self.dim();
        let mut a0 = vec![vec![C::zero(); r]; r];
        for (i, comp) in self.rhs.iter().enumerate() {
            for j in 0..r {
                let mut exps = vec![0u32; r + 1];
                exps[1 + j] = 1;
                a0[i][j] = comp.coeff(&exps);
            }
        }
        a0
    }

    /// Float projection of the linear part.
    pub fn linear_part_c64(&self) -> Vec<Vec<C64>> {
        self.linear_part()
            .iter()
            .map(|row| row.iter().map(Coeff::to_c64).collect())
            .collect()
    }

    /// Evaluates `A` at a point.
    pub fn eval_a(&self, x: &C, y: &[C]) -> Vec<C> {
        assert_eq!(y.len(), self.dim());
        let mut point = Vec::with_capacity(self.dim() + 1);
        point.push(x.clone());
        point.extend_from_slice(y);
        self.rhs.iter().map(|comp| comp.eval(&point)).collect()
    }

    /// Eigenvalue data of the linear part.
    pub fn spectrum(&self) -> Result<Spectrum> {
        eigenvalues(&self.linear_part_c64())
    }

    /// The unique formal power-series solution through order `n`, found by
    /// order-by-order linear solves against `A_0`.
    ///
    /// At order `m` the coefficient extraction of `x^(p+1) H' = A(x, H)`
    /// reads `(m - p) h_{m-p} = [x^m] A(x, J_{m-1} H) + A_0 h_m` (the unknown
    /// `h_m` enters only through the linear part because every other
    /// occurrence carries extra positive order), which is one dense solve.
    pub fn formal_solution(&self, order: usize) -> Result<SeriesVec<C>> {
        let r = self.dim();
        let a0 = self.linear_part();
        // Fail fast on a singular linear part rather than mid-recursion.
        let probe = vec![C::zero(); r];
        if linalg::solve(&a0, &probe).is_none() {
            return Err(Error::SingularLinearPart);
        }
        let mut h = SeriesVec::zero(r, order);
        let p = self.p as usize;
        for m in 1..=order {
            let mut args = Vec::with_capacity(r + 1);
            args.push(TruncatedSeries::x(m));
            for j in 0..r {
                args.push(h.component(j).resized(m));
            }
            let mut b = Vec::with_capacity(r);
            for (i, comp) in self.rhs.iter().enumerate() {
                let lhs = if m > p {
                    C::from_i64((m - p) as i64) * h.component(i).coeff(m - p)
                } else {
                    C::zero()
                };
                b.push(lhs - comp.eval_series(&args).coeff(m));
            }
            let hm = linalg::solve(&a0, &b).ok_or(Error::SingularLinearPart)?;
            for (j, v) in hm.into_iter().enumerate() {
                *h.component_mut(j).coeff_mut(m) = v;
            }
        }
        Ok(h)
    }

    /// Residual series `x^(p+1) H' - A(x, H)` truncated at `order`.
    ///
    /// The formal solution makes every coefficient through `order` vanish;
    /// tests and the acceptance gate lean on this as the defining property.
    pub fn residual(&self, h: &SeriesVec<C>, order: usize) -> Result<SeriesVec<C>> {
        if h.order() < order {
            return Err(Error::InsufficientOrder { have: h.order(), need: order });
        }
        let r = self.dim();
        assert_eq!(r, h.dim());
        let mut args = Vec::with_capacity(r + 1);
        args.push(TruncatedSeries::x(order));
        for j in 0..r {
            args.push(h.component(j).resized(order));
        }
        let mut out = Vec::with_capacity(r);
        for (i, comp) in self.rhs.iter().enumerate() {
            let lhs = h
                .component(i)
                .resized(order)
                .differentiate()
                .mul_xpow(self.p as usize + 1)
                .resized(order);
            out.push(lhs.sub(&comp.eval_series(&args)));
        }
        Ok(SeriesVec::from_components(out))
    }

    /// The system solved by the `k`-th tail of the formal solution: with
    /// `y = J_k H(x) + x^k w` the new unknown `w` satisfies
    /// `x^(p+1) w' = Atilde(x, w)` where
    /// `Atilde = x^(-k) [A(x, J_k H + x^k w) - x^(p+1) (J_k H)'] - k x^p w`.
    ///
    /// The bracket is divisible by `x^k` exactly because the jet solves the
    /// system through order `k`; a failed division therefore signals
    /// inconsistent inputs and is reported as such.
    pub fn tail_system(&self, k: usize) -> Result<OdeSystem<C>> {
        if k == 0 {
            return Ok(self.clone());
        }
        let r = self.dim();
        let nv = r + 1;
        let jet = self.formal_solution(k)?;
        let none = DegreeCap::none();

        let mut images = Vec::with_capacity(nv);
        images.push(MultiPoly::var(nv, 0));
        for j in 0..r {
            let mut img = MultiPoly::from_univariate(jet.component(j), 0, nv, &none);
            let mut exps = vec![0u32; nv];
            exps[0] = k as u32;
            exps[1 + j] = 1;
            img.add_term(exps, C::one());
            images.push(img);
        }

        let mut new_rhs = Vec::with_capacity(r);
        for (i, comp) in self.rhs.iter().enumerate() {
            let shifted = comp.substitute(&images, &none);
            // x^(p+1) (J_k H_i)' contributes m h_m x^(m+p) for m = 1..k.
            let mut drift = MultiPoly::zero(nv);
            for m in 1..=k {
                let c = jet.component(i).coeff(m);
                if c.is_zero() {
                    continue;
                }
                let mut exps = vec![0u32; nv];
                exps[0] = (m + self.p as usize) as u32;
                drift.add_term(exps, C::from_i64(m as i64) * c);
            }
            let bracket = shifted.sub(&drift);

            // Scale for the float-mode divisibility tolerance.
            let scale_log = bracket
                .terms()
                .filter_map(|(_, c)| c.abs_log())
                .fold(f64::NEG_INFINITY, f64::max);

            let mut shifted_down = MultiPoly::zero(nv);
            for (exps, c) in bracket.terms() {
                if (exps[0] as usize) < k {
                    let negligible = !C::is_exact()
                        && scale_log.is_finite()
                        && c.abs_log().map_or(true, |l| l < scale_log + (1e-9f64).ln());
                    if negligible {
                        continue;
                    }
                    return Err(Error::DivisibilityFailure {
                        k,
                        offending_order: exps[0] as usize,
                    });
                }
                let mut e = exps.to_vec();
                e[0] -= k as u32;
                shifted_down.add_term(e, c.clone());
            }

            // The coordinate change also produces the -k x^p w_i drift term.
            let mut exps = vec![0u32; nv];
            exps[0] = self.p;
            exps[1 + i] = 1;
            shifted_down.add_term(exps, C::from_i64(-(k as i64)));
            new_rhs.push(shifted_down);
        }
        OdeSystem::new(self.p, new_rhs)
    }

    /// The truncated formal flow `B(z, x, w)` of the rescaled equation
    /// `dB/dz = (1 + x^p z)^(-p-1) A(x + x^(p+1) z, B)`, `B(0, x, w) = w`,
    /// graded by powers of `z` and truncated at the given orders.
    ///
    /// Orders above roughly 12 get expensive fast; the identity
    /// `B(z, x, H(x)) = H(x + x^(p+1) z)` is checked by
    /// [`flow_identity_report`].
    pub fn formal_flow(&self, n_z: u32, n_x: u32, n_w: u32) -> FormalFlow<C> {
        let r = self.dim();
        let fv = r + 2;
        let mut per_var = vec![Some(n_z), Some(n_x)];
        per_var.extend(core::iter::repeat(Some(n_w)).take(r));
        let cap = DegreeCap { total: None, per_var };

        // A with its first argument shifted to x + x^(p+1) z, in flow
        // variables (z, x, w_1..w_r).
        let mut x_img = MultiPoly::zero(fv);
        {
            let mut e = vec![0u32; fv];
            e[1] = 1;
            x_img.add_term(e, C::one());
            let mut e = vec![0u32; fv];
            e[0] = 1;
            e[1] = self.p + 1;
            x_img.add_term(e, C::one());
        }
        let mut shift_images = Vec::with_capacity(r + 1);
        shift_images.push(x_img);
        for j in 0..r {
            shift_images.push(MultiPoly::var(fv, 2 + j));
        }
        let a_shift: Vec<MultiPoly<C>> = self
            .rhs
            .iter()
            .map(|a| a.substitute(&shift_images, &cap))
            .collect();

        // Kernel (1 + x^p z)^(-p-1) = sum_m (-1)^m C(p+m, p) x^(pm) z^m.
        let mut kernel = MultiPoly::zero(fv);
        for m in 0..=n_z {
            let xe = self.p * m;
            if xe > n_x {
                break;
            }
            let mut e = vec![0u32; fv];
            e[0] = m;
            e[1] = xe;
            let mag = binom_u128(self.p as u64 + m as u64, self.p as u64);
            let c = if m % 2 == 0 {
                C::from_i64(mag)
            } else {
                -C::from_i64(mag)
            };
            kernel.add_term(e, c);
        }

        let mut comps: Vec<MultiPoly<C>> =
            (0..r).map(|j| MultiPoly::var(fv, 2 + j)).collect();
        for k in 0..n_z {
            let mut images = Vec::with_capacity(fv);
            images.push(MultiPoly::var(fv, 0));
            images.push(MultiPoly::var(fv, 1));
            images.extend(comps.iter().cloned());
            for j in 0..r {
                let full = kernel.mul(&a_shift[j].substitute(&images, &cap), &cap);
                // z^k slice of the right side integrates to the z^(k+1)
                // coefficient of the flow; slices above k are not yet valid
                // and are simply not read.
                let mut increment = MultiPoly::zero(fv);
                for (exps, c) in full.terms() {
                    if exps[0] == k {
                        let mut e = exps.to_vec();
                        e[0] = k + 1;
                        increment
                            .add_term(e, c.clone() * C::from_ratio(1, k as i64 + 1));
                    }
                }
                comps[j] = comps[j].add(&increment);
            }
        }

        FormalFlow {
            p: self.p,
            r,
            n_z,
            n_x,
            n_w,
            components: comps,
        }
    }
}

/// Small exact binomial; flow orders keep this far inside u128 range.
fn binom_u128(n: u64, k: u64) -> i64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    i64::try_from(acc).expect("binomial fits i64 at flow orders")
}

/// Eigenvalues of the linear part, sorted by argument in `[0, 2pi)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by normalized argument; ties broken by modulus.
    pub eigenvalues: Vec<C64>,
    /// The matrix they came from.
    pub matrix: Vec<Vec<C64>>,
}

/// Angle normalized into `[0, 2pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = core::f64::consts::TAU;
    let mut t = a % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    if t >= two_pi {
        t = 0.0;
    }
    t
}

/// Circular distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let two_pi = core::f64::consts::TAU;
    let d = (normalize_angle(a) - normalize_angle(b)).abs();
    d.min(two_pi - d)
}

/// Computes the spectrum of a square matrix by characteristic polynomial
/// plus simultaneous root iteration. Supported up to dimension 8.
pub fn eigenvalues(matrix: &[Vec<C64>]) -> Result<Spectrum> {
    let r = matrix.len();
    assert!(r >= 1 && r <= MAX_DIM, "dimension out of supported range");
    assert!(matrix.iter().all(|row| row.len() == r));
    let cs = linalg::char_poly(matrix);
    let mut eigenvalues = roots::poly_roots(&cs, 1e-12)?;
    eigenvalues.sort_by(|a, b| {
        let ka = (normalize_angle(a.arg()), a.norm(), a.re, a.im);
        let kb = (normalize_angle(b.arg()), b.norm(), b.re, b.im);
        ka.partial_cmp(&kb).expect("finite eigenvalues")
    });
    Ok(Spectrum { eigenvalues, matrix: matrix.to_vec() })
}

/// Outcome of the distinct-argument condition check.
#[derive(Debug, Clone)]
pub struct ArgCheck {
    /// True when all eigenvalues are nonzero with pairwise distinct
    /// arguments mod 2pi.
    pub ok: bool,
    /// Indices of eigenvalues indistinguishable from zero.
    pub zero_eigenvalues: Vec<usize>,
    /// Index pairs whose arguments coincide within tolerance.
    pub coincident_pairs: Vec<(usize, usize)>,
}

/// Checks the distinct-argument condition on a spectrum: every eigenvalue
/// nonzero and no two arguments within [`ARG_TOLERANCE`] of each other
/// mod 2pi. Failures are reported in the result, not as errors.
pub fn check_distinct_arguments(spectrum: &Spectrum) -> ArgCheck {
    let scale = 1.0 + linalg::inf_norm(&spectrum.matrix);
    let mut zero_eigenvalues = Vec::new();
    let mut coincident_pairs = Vec::new();
    for (i, lam) in spectrum.eigenvalues.iter().enumerate() {
        if lam.norm() <= 1e-12 * scale {
            zero_eigenvalues.push(i);
        }
    }
    let n = spectrum.eigenvalues.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if zero_eigenvalues.contains(&i) || zero_eigenvalues.contains(&j) {
                continue;
            }
            let d = angle_distance(
                spectrum.eigenvalues[i].arg(),
                spectrum.eigenvalues[j].arg(),
            );
            if d < ARG_TOLERANCE {
                coincident_pairs.push((i, j));
            }
        }
    }
    ArgCheck {
        ok: zero_eigenvalues.is_empty() && coincident_pairs.is_empty(),
        zero_eigenvalues,
        coincident_pairs,
    }
}

/// One singular direction with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct DirectionEntry {
    /// Direction in `[0, 2pi)`.
    pub theta: f64,
    /// Index into the spectrum's (argument-sorted) eigenvalue list.
    pub eigen_index: usize,
    /// Sheet index `0..p` of the `p`-th root.
    pub sheet: u32,
}

/// All `r * p` singular directions, sorted ascending.
///
/// With the spectrum sorted by argument, position `l` in the sorted table
/// automatically satisfies the labeling convention `l + 1 = j mod r` with
/// `j` the 1-based eigenvalue index.
#[derive(Debug, Clone)]
pub struct SingularDirectionTable {
    pub p: u32,
    pub entries: Vec<DirectionEntry>,
}

impl SingularDirectionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Just the angles, sorted.
    pub fn thetas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.theta).collect()
    }

    /// Distance from `theta` to the nearest singular direction.
    pub fn distance_to_nearest(&self, theta: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| angle_distance(e.theta, theta))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves `p * theta = arg(lambda_j) mod 2pi` for every eigenvalue and
/// sheet: `theta = (arg(lambda_j) + 2 pi l) / p`, `l = 0..p`.
pub fn singular_directions(spectrum: &Spectrum, p: u32) -> SingularDirectionTable {
    let mut entries = Vec::with_capacity(spectrum.eigenvalues.len() * p as usize);
    for (j, lam) in spectrum.eigenvalues.iter().enumerate() {
        let base = normalize_angle(lam.arg());
        for sheet in 0..p {
            let theta = normalize_angle(
                (base + core::f64::consts::TAU * sheet as f64) / p as f64,
            );
            entries.push(DirectionEntry { theta, eigen_index: j, sheet });
        }
    }
    entries.sort_by(|a, b| {
        (a.theta, a.eigen_index, a.sheet)
            .partial_cmp(&(b.theta, b.eigen_index, b.sheet))
            .expect("finite angles")
    });
    SingularDirectionTable { p, entries }
}

/// Truncated formal flow in variables `(z, x, w_1..w_r)`.
#[derive(Debug, Clone)]
pub struct FormalFlow<C: Coeff> {
    p: u32,
    r: usize,
    n_z: u32,
    n_x: u32,
    n_w: u32,
    components: Vec<MultiPoly<C>>,
}

impl<C: Coeff> FormalFlow<C> {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.r
    }

    /// Truncation orders `(n_z, n_x, n_w)`.
    pub fn orders(&self) -> (u32, u32, u32) {
        (self.n_z, self.n_x, self.n_w)
    }

    /// Flow components as polynomials in `(z, x, w_1..w_r)`.
    pub fn components(&self) -> &[MultiPoly<C>] {
        &self.components
    }

    /// The coefficient of `z^m` in component `j`, as a polynomial in the
    /// same variable space with zero `z`-exponent.
    pub fn z_slice(&self, j: usize, m: u32) -> MultiPoly<C> {
        let mut out = MultiPoly::zero(self.r + 2);
        for (exps, c) in self.components[j].terms() {
            if exps[0] == m {
                let mut e = exps.to_vec();
                e[0] = 0;
                out.add_term(e, c.clone());
            }
        }
        out
    }

    /// Substitutes the formal solution for `w`, producing polynomials in
    /// `(z, x)` truncated at `(n_z, n_x)`.
    pub fn eval_at_solution(&self, h: &SeriesVec<C>) -> Result<Vec<MultiPoly<C>>> {
        if h.order() < self.n_x as usize {
            return Err(Error::InsufficientOrder {
                have: h.order(),
                need: self.n_x as usize,
            });
        }
        assert_eq!(h.dim(), self.r);
        let cap = DegreeCap {
            total: None,
            per_var: vec![Some(self.n_z), Some(self.n_x)],
        };
        let mut images = Vec::with_capacity(self.r + 2);
        images.push(MultiPoly::var(2, 0));
        images.push(MultiPoly::var(2, 1));
        for j in 0..self.r {
            images.push(MultiPoly::from_univariate(h.component(j), 1, 2, &cap));
        }
        Ok(self
            .components
            .iter()
            .map(|comp| comp.substitute(&images, &cap))
            .collect())
    }
}

/// Exact binomial coefficient inside the coefficient field.
fn binom_in<C: Coeff>(n: u64, m: u64) -> C {
    let mut acc = C::one();
    for i in 1..=m {
        acc = acc * C::from_i64((n - m + i) as i64) / C::from_i64(i as i64);
    }
    acc
}

/// The shift side of the flow identity: `H_j(x + x^(p+1) z)` expanded as
/// polynomials in `(z, x)` with `z`-degree at most `n_z` and `x`-degree at
/// most `n_x`. Exact: the `z^m` slice is `sum_n h_n C(n, m) x^(n + p m)`.
pub fn shifted_solution<C: Coeff>(
    h: &SeriesVec<C>,
    p: u32,
    n_z: u32,
    n_x: u32,
) -> Vec<MultiPoly<C>> {
    let mut out = Vec::with_capacity(h.dim());
    for j in 0..h.dim() {
        let mut poly = MultiPoly::zero(2);
        for m in 0..=n_z {
            for n in (m as usize)..=h.order() {
                let xe = n as u32 + p * m;
                if xe > n_x {
                    break;
                }
                let c = h.component(j).coeff(n);
                if c.is_zero() {
                    continue;
                }
                poly.add_term(
                    vec![m, xe],
                    c * binom_in::<C>(n as u64, m as u64),
                );
            }
        }
        out.push(poly);
    }
    out
}

/// Discrepancy summary of the identity `B(z, x, H(x)) = H(x + x^(p+1) z)`
/// over the flow's truncation window.
#[derive(Debug, Clone)]
pub struct FlowIdentityReport {
    /// Number of coefficient slots compared (union of supports).
    pub compared: usize,
    /// Slots where the two sides differ beyond `tol` (beyond exactly, in
    /// rational mode).
    pub mismatches: usize,
    /// Largest absolute difference seen, as a double.
    pub max_abs_diff: f64,
}

impl FlowIdentityReport {
    pub fn exact(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares both sides of the flow identity coefficient by coefficient.
///
/// For right-hand sides linear in `y` the `n_w` truncation never bites and
/// the identity holds exactly through `(n_z, n_x)`; nonlinear systems need
/// `n_w` at least as large as the largest contributing `w`-degree or the
/// report will show honest mismatches. Requires `h` to order `n_x`.
pub fn flow_identity_report<C: Coeff>(
    flow: &FormalFlow<C>,
    h: &SeriesVec<C>,
    tol: f64,
) -> Result<FlowIdentityReport> {
    let lhs = flow.eval_at_solution(h)?;
    let rhs = shifted_solution(h, flow.p(), flow.n_z, flow.n_x);
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    let mut max_abs_diff = 0.0f64;
    for (l, r) in lhs.iter().zip(&rhs) {
        let diff = l.sub(r);
        // Union of supports: count slots present on either side.
        let mut support: alloc::collections::BTreeSet<Vec<u32>> =
            l.terms().map(|(e, _)| e.to_vec()).collect();
        support.extend(r.terms().map(|(e, _)| e.to_vec()));
        compared += support.len();
        for exps in support {
            let d = diff.coeff(&exps);
            if d.is_zero() {
                continue;
            }
            let mag = d.to_c64().norm();
            max_abs_diff = max_abs_diff.max(mag);
            let bad = if C::is_exact() { true } else { mag > tol };
            if bad {
                mismatches += 1;
            }
        }
    }
    Ok(FlowIdentityReport { compared, mismatches, max_abs_diff })
}

/// The worked systems every case study and test leans on.
pub mod standard {
    use super::*;

    /// `x^2 y' = y - x`.
    pub fn euler<C: Coeff>() -> OdeSystem<C> {
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 1], C::one());
        a.add_term(vec![1, 0], -C::one());
        OdeSystem::new(1, vec![a]).expect("valid")
    }

    /// The dimension-2 Euler generalization with eigenvalues `1 +- i`:
    /// `x^2 y1' = y1 + y2 - x`, `x^2 y2' = y2 - y1`.
    pub fn euler2d<C: Coeff>() -> OdeSystem<C> {
        let mut a1 = MultiPoly::zero(3);
        a1.add_term(vec![0, 1, 0], C::one());
        a1.add_term(vec![0, 0, 1], C::one());
        a1.add_term(vec![1, 0, 0], -C::one());
        let mut a2 = MultiPoly::zero(3);
        a2.add_term(vec![0, 1, 0], -C::one());
        a2.add_term(vec![0, 0, 1], C::one());
        OdeSystem::new(1, vec![a1, a2]).expect("valid")
    }

    /// The uncoupled pair `x^2 y1' = y1 - x`, `x^2 y2' = y2/2 - x` whose
    /// eigenvalues 1 and 1/2 share an argument, failing the
    /// distinct-argument condition.
    pub fn euler_pair<C: Coeff>() -> OdeSystem<C> {
        let mut a1 = MultiPoly::zero(3);
        a1.add_term(vec![0, 1, 0], C::one());
        a1.add_term(vec![1, 0, 0], -C::one());
        let mut a2 = MultiPoly::zero(3);
        a2.add_term(vec![0, 0, 1], C::from_ratio(1, 2));
        a2.add_term(vec![1, 0, 0], -C::one());
        OdeSystem::new(1, vec![a1, a2]).expect("valid")
    }

    /// Rank-2 scalar case `x^3 y' = (1 - x^2) y - x` with the odd solution
    /// `sum 2^n n! x^(2n+1)`.
    pub fn odd_pump<C: Coeff>() -> OdeSystem<C> {
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 1], C::one());
        a.add_term(vec![2, 1], -C::one());
        a.add_term(vec![1, 0], -C::one());
        OdeSystem::new(2, vec![a]).expect("valid")
    }

    /// A system with a convergent formal solution: `x^2 y' = x - y + x y +
    /// y^2` is solved by the geometric series `x/(1-x)`, giving a zero-jump
    /// baseline for the Stokes machinery.
    pub fn convergent_geometric<C: Coeff>() -> OdeSystem<C> {
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![1, 0], C::one());
        a.add_term(vec![0, 1], -C::one());
        a.add_term(vec![1, 1], C::one());
        a.add_term(vec![0, 2], C::one());
        OdeSystem::new(1, vec![a]).expect("valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CRat, factorial_big};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn rat(n: i64, d: i64) -> CRat {
        CRat::from_ratio(n, d)
    }

    fn big_factorial_rat(n: u64) -> BigRational {
        BigRational::from_integer(factorial_big(n))
    }

    #[test]
    fn euler_solution_is_factorial() {
        let sys = standard::euler::<CRat>();
        let h = sys.formal_solution(12).unwrap();
        for n in 1..=12usize {
            let want = big_factorial_rat(n as u64 - 1);
            assert_eq!(h.component(0).coeff(n).re, want, "order {n}");
            assert!(h.component(0).coeff(n).im.is_zero());
        }
    }

    #[test]
    fn euler2d_solution_matches_closed_form() {
        // The combination h1 + i h2 solves x^2 u' = (1-i) u - x, whose
        // coefficients are (n-1)! (1-i)^(-n). Expand the power directly as
        // the oracle; no recursion shared with the solver.
        let sys = standard::euler2d::<CRat>();
        let h = sys.formal_solution(10).unwrap();
        // (1-i)^{-1} = (1+i)/2, kept exact as a rational complex.
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let inv = CRat::new(half.clone(), half);
        let mut power = CRat::from_i64(1);
        for n in 1..=10usize {
            power = power * inv.clone();
            let fact = big_factorial_rat(n as u64 - 1);
            assert_eq!(h.component(0).coeff(n).re, fact.clone() * power.re.clone(), "re at {n}");
            assert_eq!(h.component(1).coeff(n).re, fact * power.im.clone(), "im at {n}");
            assert!(h.component(0).coeff(n).im.is_zero());
            assert!(h.component(1).coeff(n).im.is_zero());
        }
        // Spot goldens: n=1 -> (1/2, 1/2); n=2 -> (0, 1/2); n=3 -> (-1/2, 1/2).
        assert_eq!(h.component(0).coeff(1), rat(1, 2));
        assert_eq!(h.component(1).coeff(1), rat(1, 2));
        assert_eq!(h.component(0).coeff(2), rat(0, 1));
        assert_eq!(h.component(1).coeff(2), rat(1, 2));
        assert_eq!(h.component(0).coeff(3), rat(-1, 2));
        assert_eq!(h.component(1).coeff(3), rat(1, 2));
    }

    #[test]
    fn odd_pump_solution_coefficients() {
        // c_{2n+1} = 2^n n!: 1, 2, 8, 48; even coefficients vanish. The
        // recursion c_{m+2} = (m+1) c_m (m odd) is derived by hand from the
        // equation and gives the same values.
        let sys = standard::odd_pump::<CRat>();
        let h = sys.formal_solution(8).unwrap();
        let golden = [(1usize, 1i64), (3, 2), (5, 8), (7, 48)];
        for (idx, v) in golden {
            assert_eq!(h.component(0).coeff(idx), CRat::from_i64(v), "order {idx}");
        }
        for idx in [2usize, 4, 6, 8] {
            assert!(h.component(0).coeff(idx).is_zero(), "order {idx}");
        }
    }

    #[test]
    fn convergent_solution_is_geometric() {
        let sys = standard::convergent_geometric::<CRat>();
        let h = sys.formal_solution(20).unwrap();
        for n in 1..=20usize {
            assert_eq!(h.component(0).coeff(n), CRat::from_i64(1), "order {n}");
        }
    }

    #[test]
    fn linear_parts() {
        let euler = standard::euler::<CRat>();
        assert_eq!(euler.linear_part(), vec![vec![CRat::from_i64(1)]]);
        let eq2 = standard::euler2d::<CRat>();
        assert_eq!(
            eq2.linear_part(),
            vec![
                vec![CRat::from_i64(1), CRat::from_i64(1)],
                vec![CRat::from_i64(-1), CRat::from_i64(1)],
            ]
        );
        // No linear y term at all.
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 2], CRat::from_i64(1));
        a.add_term(vec![1, 0], CRat::from_i64(1));
        let sys = OdeSystem::new(1, vec![a]).unwrap();
        assert_eq!(sys.linear_part(), vec![vec![CRat::from_i64(0)]]);
        assert!(matches!(
            sys.formal_solution(3),
            Err(Error::SingularLinearPart)
        ));
    }

    #[test]
    fn constructor_rejects_constant_term() {
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 0], CRat::from_i64(1));
        a.add_term(vec![0, 1], CRat::from_i64(1));
        assert!(matches!(
            OdeSystem::new(1, vec![a]),
            Err(Error::NonzeroConstantTerm)
        ));
    }

    #[test]
    fn spectrum_and_distinct_argument_check() {
        let eq2 = standard::euler2d::<CRat>();
        let spec = eq2.spectrum().unwrap();
        assert_eq!(spec.eigenvalues.len(), 2);
        // Sorted by argument: 1+i (pi/4) before 1-i (7pi/4).
        assert!((spec.eigenvalues[0] - C64::new(1.0, 1.0)).norm() < 1e-12);
        assert!((spec.eigenvalues[1] - C64::new(1.0, -1.0)).norm() < 1e-12);
        assert!(check_distinct_arguments(&spec).ok);

        let pair = standard::euler_pair::<CRat>();
        let spec = pair.spectrum().unwrap();
        // Both arguments are 0; the modulus tie-break puts 1/2 first.
        assert!((spec.eigenvalues[0] - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((spec.eigenvalues[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let check = check_distinct_arguments(&spec);
        assert!(!check.ok);
        assert_eq!(check.coincident_pairs.len(), 1);
        assert!(check.zero_eigenvalues.is_empty());

        // Zero eigenvalue flagged, not thrown.
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 2], CRat::from_i64(1));
        a.add_term(vec![1, 0], CRat::from_i64(1));
        let sys = OdeSystem::new(1, vec![a]).unwrap();
        let spec = sys.spectrum().unwrap();
        let check = check_distinct_arguments(&spec);
        assert!(!check.ok);
        assert_eq!(check.zero_eigenvalues, vec![0]);
    }

    #[test]
    fn singular_direction_tables() {
        let euler = standard::euler::<CRat>();
        let t = singular_directions(&euler.spectrum().unwrap(), 1);
        assert_eq!(t.len(), 1);
        assert!(t.entries[0].theta.abs() < 1e-12);

        let eq2 = standard::euler2d::<CRat>();
        let t = singular_directions(&eq2.spectrum().unwrap(), 1);
        let want = [core::f64::consts::FRAC_PI_4, 7.0 * core::f64::consts::FRAC_PI_4];
        assert_eq!(t.len(), 2);
        for (e, w) in t.entries.iter().zip(want) {
            assert!((e.theta - w).abs() < 1e-12, "{} vs {w}", e.theta);
        }
        // Labeling convention: position l holds eigenvalue j with
        // l + 1 = j mod r (1-based j).
        assert_eq!(t.entries[0].eigen_index, 0);
        assert_eq!(t.entries[1].eigen_index, 1);

        let pump = standard::odd_pump::<CRat>();
        let t = singular_directions(&pump.spectrum().unwrap(), 2);
        assert_eq!(t.len(), 2);
        assert!(t.entries[0].theta.abs() < 1e-12);
        assert!((t.entries[1].theta - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn residual_vanishes_for_all_bundled_systems() {
        let systems: Vec<OdeSystem<CRat>> = vec![
            standard::euler(),
            standard::euler2d(),
            standard::euler_pair(),
            standard::odd_pump(),
            standard::convergent_geometric(),
        ];
        for sys in systems {
            let h = sys.formal_solution(30).unwrap();
            let res = sys.residual(&h, 30).unwrap();
            for j in 0..sys.dim() {
                for n in 0..=30usize {
                    assert!(res.component(j).coeff(n).is_zero(), "order {n}");
                }
            }
        }
    }

    #[test]
    fn perturbing_one_coefficient_breaks_residual_at_that_order() {
        let sys = standard::euler::<CRat>();
        let mut h = sys.formal_solution(12).unwrap();
        *h.component_mut(0).coeff_mut(5) =
            h.component(0).coeff(5) + CRat::from_i64(1);
        let res = sys.residual(&h, 12).unwrap();
        // The equation couples order 5 of A(x,H) and order 6 of x^2 H'; the
        // first corruption must appear exactly at order 5.
        for n in 0..5 {
            assert!(res.component(0).coeff(n).is_zero(), "order {n}");
        }
        assert!(!res.component(0).coeff(5).is_zero());
    }

    #[test]
    fn euler_tail_system_golden() {
        // k = 1 turns x^2 y' = y - x into x^2 w' = (1 - x) w - x.
        let sys = standard::euler::<CRat>();
        let tail = sys.tail_system(1).unwrap();
        let a = tail.component(0);
        assert_eq!(a.coeff(&[0, 1]), CRat::from_i64(1));
        assert_eq!(a.coeff(&[1, 1]), CRat::from_i64(-1));
        assert_eq!(a.coeff(&[1, 0]), CRat::from_i64(-1));
        assert_eq!(a.term_count(), 3);
        // And its solution is sum m! x^m.
        let w = tail.formal_solution(6).unwrap();
        for m in 1..=6usize {
            assert_eq!(w.component(0).coeff(m).re, big_factorial_rat(m as u64));
        }
    }

    #[test]
    fn tail_system_k0_is_identity() {
        let sys = standard::odd_pump::<CRat>();
        assert_eq!(sys.tail_system(0).unwrap(), sys);
    }

    #[test]
    fn eq2_tail_keeps_linear_part() {
        let sys = standard::euler2d::<CRat>();
        let tail = sys.tail_system(1).unwrap();
        assert_eq!(tail.linear_part(), sys.linear_part());
    }

    #[test]
    fn tail_formal_commutation() {
        let systems: Vec<OdeSystem<CRat>> = vec![
            standard::euler(),
            standard::euler2d(),
            standard::odd_pump(),
            standard::convergent_geometric(),
        ];
        let n = 14usize;
        for sys in systems {
            let h = sys.formal_solution(n).unwrap();
            for k in [1usize, 2, 3, 5] {
                let direct = sys.tail_system(k).unwrap().formal_solution(n - k).unwrap();
                let via_tail = h.tail(k).unwrap();
                assert!(direct.approx_eq(&via_tail, 0.0), "k = {k}");
            }
        }
    }

    #[test]
    fn flow_first_slices_for_euler() {
        // dB/dz = (1+xz)^{-2} (B - x - x^2 z): slice 0 gives b_1 = w - x.
        let sys = standard::euler::<CRat>();
        let flow = sys.formal_flow(3, 6, 1);
        let b0 = flow.z_slice(0, 0);
        assert_eq!(b0.coeff(&[0, 0, 1]), CRat::from_i64(1));
        assert_eq!(b0.term_count(), 1);
        let b1 = flow.z_slice(0, 1);
        assert_eq!(b1.coeff(&[0, 0, 1]), CRat::from_i64(1));
        assert_eq!(b1.coeff(&[0, 1, 0]), CRat::from_i64(-1));
        assert_eq!(b1.term_count(), 2);
    }

    #[test]
    fn flow_matches_exponential_for_pure_linear_system() {
        // x^2 y' = 2y has flow B = w exp(2z/(1+xz)); slices were integrated
        // by hand: b_1 = 2w, b_2 = (2-2x)w, b_3 = (4/3 - 4x + 2x^2) w... the
        // z^3 slice of exp(2z - 2xz^2 + 2x^2 z^3 - ...).
        let mut a = MultiPoly::zero(2);
        a.add_term(vec![0, 1], CRat::from_i64(2));
        let sys = OdeSystem::new(1, vec![a]).unwrap();
        let flow = sys.formal_flow(3, 4, 1);
        let b1 = flow.z_slice(0, 1);
        assert_eq!(b1.coeff(&[0, 0, 1]), CRat::from_i64(2));
        assert_eq!(b1.term_count(), 1);
        let b2 = flow.z_slice(0, 2);
        assert_eq!(b2.coeff(&[0, 0, 1]), CRat::from_i64(2));
        assert_eq!(b2.coeff(&[0, 1, 1]), CRat::from_i64(-2));
        assert_eq!(b2.term_count(), 2);
        let b3 = flow.z_slice(0, 3);
        assert_eq!(b3.coeff(&[0, 0, 1]), CRat::from_ratio(4, 3));
        assert_eq!(b3.coeff(&[0, 1, 1]), CRat::from_i64(-4));
        assert_eq!(b3.coeff(&[0, 2, 1]), CRat::from_i64(2));
        assert_eq!(b3.term_count(), 3);
    }

    #[test]
    fn flow_identity_euler_exact_to_order_ten() {
        let sys = standard::euler::<CRat>();
        let flow = sys.formal_flow(4, 10, 1);
        let h = sys.formal_solution(10).unwrap();
        let report = flow_identity_report(&flow, &h, 0.0).unwrap();
        assert!(report.compared > 20);
        assert!(report.exact(), "mismatches: {}", report.mismatches);
    }

    #[test]
    fn flow_identity_eq2_exact() {
        let sys = standard::euler2d::<CRat>();
        let flow = sys.formal_flow(3, 8, 1);
        let h = sys.formal_solution(8).unwrap();
        let report = flow_identity_report(&flow, &h, 0.0).unwrap();
        assert!(report.exact(), "mismatches: {}", report.mismatches);
    }

    #[test]
    fn binomial_helpers() {
        assert_eq!(binom_u128(5, 2), 10);
        assert_eq!(binom_u128(14, 2), 91);
        let b: CRat = binom_in(10, 3);
        assert_eq!(b, CRat::from_i64(120));
    }
}
