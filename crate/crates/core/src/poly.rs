//! Sparse multivariate polynomials with truncation caps.
//!
//! Variables are positional: a term maps an exponent vector `e` (one entry
//! per variable) to a coefficient. The map is a `BTreeMap`, so term order is
//! canonical and every operation is deterministic.
//!
//! Polynomial data appears in three roles:
//!
//! * right-hand sides `A(x, y_1..y_r)` of the ODE systems;
//! * probe functions `f(x, z_11..z_rn)`;
//! * coefficients of formal flows in the rescaled time variable.
//!
//! Substitution is the workhorse: variables can be replaced by polynomials in
//! a fresh variable space ([`MultiPoly::substitute`]) or all at once by
//! univariate truncated series ([`MultiPoly::eval_series`]). Caps bound the
//! degree growth that substitution causes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::coeff::{C64, Coeff};
use crate::series::TruncatedSeries;

/// Truncation bounds for polynomial operations.
///
/// A term survives only if its total degree and each per-variable degree pass
/// the caps. `DegreeCap::none` disables truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeCap {
    /// Bound on the sum of exponents, if any.
    pub total: Option<u32>,
    /// Per-variable bounds; shorter than the variable count means uncapped
    /// beyond the listed entries.
    pub per_var: Vec<Option<u32>>,
}

impl DegreeCap {
    /// No truncation.
    pub fn none() -> Self {
        DegreeCap { total: None, per_var: Vec::new() }
    }

    /// Cap on total degree only.
    pub fn total(bound: u32) -> Self {
        DegreeCap { total: Some(bound), per_var: Vec::new() }
    }

    /// True when the exponent vector passes every bound.
    pub fn admits(&self, exps: &[u32]) -> bool {
        if let Some(t) = self.total {
            if exps.iter().sum::<u32>() > t {
                return false;
            }
        }
        for (i, bound) in self.per_var.iter().enumerate() {
            if let Some(b) = bound {
                if exps.get(i).copied().unwrap_or(0) > *b {
                    return false;
                }
            }
        }
        true
    }
}

/// Sparse polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl<C: Coeff> MultiPoly<C> {
    /// The zero polynomial.
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    /// A constant.
    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0u32; nvars];
        exps[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(exps, C::one());
        p
    }

    /// Adds `c * x^exps` to the polynomial (accumulating into any existing
    /// term with the same exponents).
    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        assert_eq!(exps.len(), self.nvars, "exponent arity mismatch");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Variable count.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Term iteration in canonical (lexicographic exponent) order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &C)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True when no terms are stored.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the given exponent vector (zero if absent).
    pub fn coeff(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Largest total degree among terms, or 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect();
        MultiPoly { nvars: self.nvars, terms }
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, k)| (e.clone(), k.clone() * c.clone()))
            .collect();
        MultiPoly { nvars: self.nvars, terms }
    }

    /// Product truncated by `cap`.
    pub fn mul(&self, other: &Self, cap: &DegreeCap) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in other.terms.iter() {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if !cap.admits(&exps) {
                    continue;
                }
                out.add_term(exps, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        assert!(i < self.nvars);
        let mut out = Self::zero(self.nvars);
        for (e, c) in self.terms.iter() {
            if e[i] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] -= 1;
            out.add_term(exps, c.clone() * C::from_i64(e[i] as i64));
        }
        out
    }

    /// Point evaluation over the coefficient field.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.nvars);
        let mut acc = C::zero();
        for (e, c) in self.terms.iter() {
            let mut term = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term * point[i].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Point evaluation in double precision, regardless of mode.
    pub fn eval_c64(&self, point: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in self.terms.iter() {
            let mut term = c.to_c64();
            for (i, &k) in e.iter().enumerate() {
                term *= point[i].powu(k);
            }
            acc += term;
        }
        acc
    }

    /// Substitutes every variable by a univariate truncated series; the
    /// result order is the smallest argument order.
    ///
    /// Powers are cached per variable, so cost is linear in the term count
    /// once the needed powers exist.
    pub fn eval_series(&self, args: &[TruncatedSeries<C>]) -> TruncatedSeries<C> {
        assert_eq!(args.len(), self.nvars);
        let order = args.iter().map(TruncatedSeries::order).min().unwrap_or(0);
        let mut acc = TruncatedSeries::zero(order);
        // power_cache[i][k] = args[i]^k, built on demand
        let mut power_cache: Vec<Vec<TruncatedSeries<C>>> =
            args.iter().map(|_| vec![TruncatedSeries::one(order)]).collect();
        for (e, c) in self.terms.iter() {
            let mut term = TruncatedSeries::monomial(c.clone(), 0, order);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while power_cache[i].len() <= k as usize {
                    let next = power_cache[i].last().unwrap().mul(&args[i].resized(order));
                    power_cache[i].push(next);
                }
                term = term.mul(&power_cache[i][k as usize]);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// General substitution: variable `i` is replaced by `images[i]`, a
    /// polynomial in a fresh variable space. All images must share the same
    /// variable count. The result is truncated by `cap`.
    pub fn substitute(&self, images: &[MultiPoly<C>], cap: &DegreeCap) -> MultiPoly<C> {
        assert_eq!(images.len(), self.nvars);
        let out_nvars = images.first().map(|p| p.nvars).unwrap_or(0);
        assert!(images.iter().all(|p| p.nvars == out_nvars));
        let mut acc = MultiPoly::zero(out_nvars);
        // Cache image powers the same way eval_series does.
        let mut power_cache: Vec<Vec<MultiPoly<C>>> = images
            .iter()
            .map(|_| vec![MultiPoly::constant(out_nvars, C::one())])
            .collect();
        for (e, c) in self.terms.iter() {
            let mut term = MultiPoly::constant(out_nvars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while power_cache[i].len() <= k as usize {
                    let next = power_cache[i].last().unwrap().mul(&images[i], cap);
                    power_cache[i].push(next);
                }
                term = term.mul(&power_cache[i][k as usize], cap);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Embeds a univariate series as a polynomial in variable `var` of an
    /// `nvars`-variable space, truncated by `cap`.
    pub fn from_univariate(
        series: &TruncatedSeries<C>,
        var: usize,
        nvars: usize,
        cap: &DegreeCap,
    ) -> Self {
        let mut out = Self::zero(nvars);
        for n in 0..=series.order() {
            let c = series.coeff(n);
            if c.is_zero() {
                continue;
            }
            let mut exps = vec![0u32; nvars];
            exps[var] = n as u32;
            if cap.admits(&exps) {
                out.add_term(exps, c);
            }
        }
        out
    }

    /// Drops every term the cap excludes.
    pub fn truncated(&self, cap: &DegreeCap) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| cap.admits(e))
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        MultiPoly { nvars: self.nvars, terms }
    }

    /// Projection to double-precision coefficients.
    pub fn to_c64_poly(&self) -> MultiPoly<C64> {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c.to_c64())).collect();
        MultiPoly { nvars: self.nvars, terms }
    }

    /// Mode-aware comparison over the union of term supports.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.nvars != other.nvars {
            return false;
        }
        for (e, c) in self.terms.iter() {
            if !c.approx_eq(&other.coeff(e), tol) {
                return false;
            }
        }
        for (e, c) in other.terms.iter() {
            if !self.coeff(e).approx_eq(c, tol) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CRat;

    fn xy_poly() -> MultiPoly<C64> {
        // x^2 y + 3 x - y in variables (x, y)
        let mut p = MultiPoly::zero(2);
        p.add_term(vec![2, 1], C64::from_i64(1));
        p.add_term(vec![1, 0], C64::from_i64(3));
        p.add_term(vec![0, 1], C64::from_i64(-1));
        p
    }

    #[test]
    fn mul_and_degree_bookkeeping() {
        let p = xy_poly();
        let q = p.mul(&p, &DegreeCap::none());
        assert_eq!(q.total_degree(), 6);
        // (x^2 y)^2 survives; cross terms accumulate
        assert_eq!(q.coeff(&[4, 2]), C64::from_i64(1));
        assert_eq!(q.coeff(&[3, 1]), C64::from_i64(6));
        let capped = p.mul(&p, &DegreeCap::total(2));
        assert_eq!(capped.total_degree(), 2);
        assert_eq!(capped.coeff(&[2, 0]), C64::from_i64(9));
    }

    #[test]
    fn derivative_matches_hand_computation() {
        let p = xy_poly();
        let dx = p.derivative(0);
        assert_eq!(dx.coeff(&[1, 1]), C64::from_i64(2));
        assert_eq!(dx.coeff(&[0, 0]), C64::from_i64(3));
        let dy = p.derivative(1);
        assert_eq!(dy.coeff(&[2, 0]), C64::from_i64(1));
        assert_eq!(dy.coeff(&[0, 0]), C64::from_i64(-1));
    }

    #[test]
    fn eval_series_agrees_with_point_eval() {
        let p = xy_poly();
        // x -> t, y -> t + t^2 as series in t
        let order = 8;
        let xs = TruncatedSeries::x(order);
        let ys = TruncatedSeries::polynomial(&[C64::from_i64(0), C64::from_i64(1), C64::from_i64(1)], order);
        let composed = p.eval_series(&[xs, ys]);
        let t = C64::new(0.07, 0.0);
        let direct = p.eval(&[t, t + t * t]);
        let via_series = composed.partial_sum_eval(t, order).unwrap();
        assert!((direct - via_series).norm() < 1e-12);
    }

    #[test]
    fn substitute_into_fresh_space_exactly() {
        // p(x, y) with x -> u + v, y -> u v in variables (u, v), exact mode
        let mut p = MultiPoly::<CRat>::zero(2);
        p.add_term(vec![1, 1], CRat::from_i64(1)); // x y
        let x_img = {
            let mut q = MultiPoly::zero(2);
            q.add_term(vec![1, 0], CRat::from_i64(1));
            q.add_term(vec![0, 1], CRat::from_i64(1));
            q
        };
        let y_img = {
            let mut q = MultiPoly::zero(2);
            q.add_term(vec![1, 1], CRat::from_i64(1));
            q
        };
        let s = p.substitute(&[x_img, y_img], &DegreeCap::none());
        // (u+v) * uv = u^2 v + u v^2
        assert_eq!(s.coeff(&[2, 1]), CRat::from_i64(1));
        assert_eq!(s.coeff(&[1, 2]), CRat::from_i64(1));
        assert_eq!(s.term_count(), 2);
    }

    #[test]
    fn zero_terms_are_not_stored() {
        let mut p = MultiPoly::<C64>::zero(1);
        p.add_term(vec![1], C64::from_i64(5));
        p.add_term(vec![1], C64::from_i64(-5));
        assert!(p.is_zero());
    }
}
