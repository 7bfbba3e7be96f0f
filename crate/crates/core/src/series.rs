//! Truncated formal power series and the jet/tail operators.
//!
//! A [`TruncatedSeries`] holds coefficients `c_0..c_N` of a formal series
//! known through order `N`. Operations state their result order explicitly;
//! binary operations truncate to the smaller operand order, which is the
//! honest contract (information beyond an operand's order does not exist).
//!
//! The two operators the asymptotic theory leans on:
//!
//! * the k-jet `J_k phi` keeps orders `0..k`;
//! * the k-tail `T_k phi = (phi - J_k phi) / x^k` normalizes the remainder.
//!
//! They satisfy `phi = J_k phi + x^k T_k phi` coefficientwise and the
//! recursion `T_k phi = x a_{k+1} + x T_{k+1} phi`, both of which are tested
//! exactly in both coefficient modes.

use alloc::vec;
use alloc::vec::Vec;

use crate::coeff::{C64, Coeff};
use crate::error::Error;
use crate::Result;

/// Valuation of a series: least index with a nonzero coefficient.
///
/// The zero series gets a distinguished [`Valuation::Infinite`] rather than
/// an error, because admissibility checks (`val P > 0`) run on inputs that
/// may legitimately be zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(usize),
    Infinite,
}

impl Valuation {
    /// The finite value, if any.
    pub fn finite(self) -> Option<usize> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    /// True when the valuation is at least `k` (vacuously true for zero).
    pub fn at_least(self, k: usize) -> bool {
        match self {
            Valuation::Finite(v) => v >= k,
            Valuation::Infinite => true,
        }
    }
}

/// Formal power series truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<C: Coeff> {
    coeffs: Vec<C>,
}

impl<C: Coeff> TruncatedSeries<C> {
    /// Series from explicit coefficients `c_0..c_N`. Panics on empty input:
    /// a series carries at least its constant term.
    pub fn from_coeffs(coeffs: Vec<C>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        TruncatedSeries { coeffs }
    }

    /// The zero series at truncation order `order`.
    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![C::zero(); order + 1] }
    }

    /// The constant series `1` at truncation order `order`.
    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = C::one();
        s
    }

    /// The identity series `x` at truncation order `order >= 1`.
    pub fn x(order: usize) -> Self {
        assert!(order >= 1);
        let mut s = Self::zero(order);
        s.coeffs[1] = C::one();
        s
    }

    /// `c * x^k` at truncation order `order >= k`.
    pub fn monomial(c: C, k: usize, order: usize) -> Self {
        assert!(order >= k);
        let mut s = Self::zero(order);
        s.coeffs[k] = c;
        s
    }

    /// Polynomial `p_0 + p_1 x + ...` padded with zeros to `order`.
    /// Panics if the polynomial degree exceeds `order`.
    pub fn polynomial(poly: &[C], order: usize) -> Self {
        assert!(poly.len() <= order + 1, "polynomial degree exceeds order");
        let mut coeffs = poly.to_vec();
        coeffs.resize(order + 1, C::zero());
        TruncatedSeries { coeffs }
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `c_n`, zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> C {
        self.coeffs.get(n).cloned().unwrap_or_else(C::zero)
    }

    /// All coefficients `c_0..c_N`.
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Mutable coefficient access (used by solvers building order by order).
    pub fn coeff_mut(&mut self, n: usize) -> &mut C {
        &mut self.coeffs[n]
    }

    /// Copy truncated (or zero-padded) to the given order. Padding marks the
    /// series as exact beyond its data, so pad only genuine polynomials.
    pub fn resized(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, C::zero());
        coeffs.truncate(order + 1);
        TruncatedSeries { coeffs }
    }

    /// Coefficientwise sum, truncated to the smaller order.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        TruncatedSeries { coeffs }
    }

    /// Coefficientwise difference, truncated to the smaller order.
    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        TruncatedSeries { coeffs }
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &C) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a.clone() * c.clone()).collect();
        TruncatedSeries { coeffs }
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|a| -a.clone()).collect();
        TruncatedSeries { coeffs }
    }

    /// Cauchy product, truncated to the smaller operand order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut coeffs = vec![C::zero(); n + 1];
        for i in 0..=n {
            let a = self.coeff(i);
            if a.is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                let b = other.coeff(j);
                if b.is_zero() {
                    continue;
                }
                let slot = &mut coeffs[i + j];
                *slot = slot.clone() + a.clone() * b;
            }
        }
        TruncatedSeries { coeffs }
    }

    /// Substitution `self(inner(x))` by Horner accumulation in the series
    /// ring. Requires `inner(0) = 0`; result order is the smaller of the two
    /// operand orders.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeff(0).is_zero() {
            return Err(Error::ComposeConstantTerm);
        }
        let n = self.order().min(inner.order());
        let inner = inner.resized(n);
        let mut acc = TruncatedSeries::zero(n);
        for k in (0..=self.order().min(n)).rev() {
            acc = acc.mul(&inner);
            *acc.coeff_mut(0) = acc.coeff(0) + self.coeff(k);
        }
        // Degrees of self beyond n contribute only above order n (val inner >= 1
        // would make them relevant only when val inner = 1 exactly at order n+1).
        Ok(acc)
    }

    /// The k-jet `J_k`: coefficients `0..k` kept, the rest zeroed. Result
    /// keeps the operand order.
    pub fn jet(&self, k: usize) -> Result<Self> {
        if k > self.order() {
            return Err(Error::JetBeyondOrder { k, order: self.order() });
        }
        let mut s = self.clone();
        for i in (k + 1)..=s.order() {
            s.coeffs[i] = C::zero();
        }
        Ok(s)
    }

    /// The k-tail `T_k = (phi - J_k phi)/x^k`: a plain coefficient shift.
    /// Result order is `N - k`.
    pub fn tail(&self, k: usize) -> Result<Self> {
        if k > self.order() {
            return Err(Error::JetBeyondOrder { k, order: self.order() });
        }
        let mut coeffs: Vec<C> = self.coeffs[k..].to_vec();
        // c_k belongs to the jet; the tail keeps orders > k shifted down by k.
        // In particular T_0 phi = phi - phi(0), which is what makes the
        // reconstruction identity hold at every k.
        coeffs[0] = C::zero();
        Ok(TruncatedSeries { coeffs })
    }

    /// Multiplication by `x^k`; result order grows to `N + k` (shift is
    /// information-preserving, unlike generic products).
    pub fn mul_xpow(&self, k: usize) -> Self {
        let mut coeffs = vec![C::zero(); self.order() + k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i + k] = c.clone();
        }
        TruncatedSeries { coeffs }
    }

    /// Least index with nonzero coefficient.
    pub fn valuation(&self) -> Valuation {
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                return Valuation::Finite(i);
            }
        }
        Valuation::Infinite
    }

    /// Termwise derivative; result order `N - 1` (the order-N coefficient of
    /// the derivative would need `c_{N+1}`).
    pub fn differentiate(&self) -> Self {
        if self.order() == 0 {
            return TruncatedSeries::zero(0);
        }
        let coeffs = (1..=self.order())
            .map(|n| self.coeff(n) * C::from_i64(n as i64))
            .collect();
        TruncatedSeries { coeffs }
    }

    /// Partial sum `sum_{n<=M} c_n z^n` in double precision.
    pub fn partial_sum_eval(&self, z: C64, m: usize) -> Result<C64> {
        if m > self.order() {
            return Err(Error::JetBeyondOrder { k: m, order: self.order() });
        }
        let mut acc = C64::new(0.0, 0.0);
        for n in (0..=m).rev() {
            acc = acc * z + self.coeff(n).to_c64();
        }
        Ok(acc)
    }

    /// Coefficientwise conjugate.
    pub fn conjugate(&self) -> Self {
        let coeffs = self.coeffs.iter().map(Coeff::conj).collect();
        TruncatedSeries { coeffs }
    }

    /// Projection to double-precision coefficients.
    pub fn to_c64_series(&self) -> TruncatedSeries<C64> {
        TruncatedSeries { coeffs: self.coeffs.iter().map(Coeff::to_c64).collect() }
    }

    /// Mode-aware comparison through the smaller order.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let n = self.order().min(other.order());
        (0..=n).all(|i| self.coeff(i).approx_eq(&other.coeff(i), tol))
    }
}

/// Vector of `r` series sharing a truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesVec<C: Coeff> {
    components: Vec<TruncatedSeries<C>>,
}

impl<C: Coeff> SeriesVec<C> {
    /// Builds from components; panics if orders disagree or `r = 0`.
    pub fn from_components(components: Vec<TruncatedSeries<C>>) -> Self {
        assert!(!components.is_empty(), "need at least one component");
        let order = components[0].order();
        assert!(
            components.iter().all(|c| c.order() == order),
            "components must share a truncation order"
        );
        SeriesVec { components }
    }

    /// Zero vector of dimension `r` at the given order.
    pub fn zero(r: usize, order: usize) -> Self {
        Self::from_components(vec![TruncatedSeries::zero(order); r])
    }

    /// Dimension `r`.
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Common truncation order.
    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    /// Component access.
    pub fn component(&self, j: usize) -> &TruncatedSeries<C> {
        &self.components[j]
    }

    /// Mutable component access; callers must preserve the common order.
    pub fn component_mut(&mut self, j: usize) -> &mut TruncatedSeries<C> {
        &mut self.components[j]
    }

    /// All components.
    pub fn components(&self) -> &[TruncatedSeries<C>] {
        &self.components
    }

    /// Componentwise jet.
    pub fn jet(&self, k: usize) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.jet(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesVec { components })
    }

    /// Componentwise tail.
    pub fn tail(&self, k: usize) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.tail(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesVec { components })
    }

    /// Componentwise composition with a common inner series.
    pub fn compose(&self, inner: &TruncatedSeries<C>) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.compose(inner))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesVec { components })
    }

    /// Componentwise difference, truncated to the smaller order.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect();
        Ok(SeriesVec { components })
    }

    /// Evaluation of partial sums at a point, one value per component.
    pub fn partial_sum_eval(&self, z: C64, m: usize) -> Result<Vec<C64>> {
        self.components.iter().map(|c| c.partial_sum_eval(z, m)).collect()
    }

    /// Projection to double-precision coefficients.
    pub fn to_c64_vec(&self) -> SeriesVec<C64> {
        SeriesVec { components: self.components.iter().map(|c| c.to_c64_series()).collect() }
    }

    /// Mode-aware comparison through the smaller order.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CRat;
    use num_traits::Zero;

    /// Euler series sum (n-1)! x^n through the given order, exact mode.
    pub fn euler_series(order: usize) -> TruncatedSeries<CRat> {
        let mut s = TruncatedSeries::zero(order);
        let mut fact = CRat::from_i64(1);
        for n in 1..=order {
            if n > 1 {
                fact = fact * CRat::from_i64(n as i64 - 1);
            }
            *s.coeff_mut(n) = fact.clone();
        }
        s
    }

    #[test]
    fn add_cancellation_and_identity() {
        let one_plus = TruncatedSeries::from_coeffs(vec![C64::from_i64(1), C64::from_i64(1)]);
        let one_minus = TruncatedSeries::from_coeffs(vec![C64::from_i64(1), C64::from_i64(-1)]);
        let sum = one_plus.add(&one_minus);
        assert_eq!(sum.coeff(0), C64::from_i64(2));
        assert_eq!(sum.coeff(1), C64::from_i64(0));

        let e = euler_series(12);
        assert!(e.add(&TruncatedSeries::zero(12)).approx_eq(&e, 0.0));
        let z = e.add(&e.neg());
        assert_eq!(z.valuation(), Valuation::Infinite);
    }

    #[test]
    fn jet_keeps_low_orders() {
        let s = TruncatedSeries::from_coeffs(vec![
            C64::from_i64(1),
            C64::from_i64(1),
            C64::from_i64(2),
            C64::from_i64(6),
        ]);
        let j = s.jet(2).unwrap();
        assert_eq!(j.coeffs(), &[C64::from_i64(1), C64::from_i64(1), C64::from_i64(2), C64::from_i64(0)]);
        let j0 = s.jet(0).unwrap();
        assert_eq!(j0.valuation(), Valuation::Finite(0));
        assert!(s.jet(7).is_err());
    }

    #[test]
    fn euler_jet_matches_golden_prefix() {
        let e = euler_series(8);
        let j = e.jet(3).unwrap();
        assert_eq!(j.coeff(1), CRat::from_i64(1));
        assert_eq!(j.coeff(2), CRat::from_i64(1));
        assert_eq!(j.coeff(3), CRat::from_i64(2));
        assert_eq!(j.coeff(4), CRat::from_i64(0));
    }

    #[test]
    fn tail_shifts_euler_to_m_factorial() {
        // T_1 of sum (n-1)! x^n is sum m! x^m (m >= 1).
        let e = euler_series(10);
        let t = e.tail(1).unwrap();
        assert_eq!(t.order(), 9);
        let mut fact = CRat::from_i64(1);
        for m in 1..=9 {
            fact = if m == 1 { CRat::from_i64(1) } else { fact * CRat::from_i64(m as i64) };
            assert_eq!(t.coeff(m), fact, "m = {m}");
        }
        assert!(t.coeff(0).is_zero());
    }

    #[test]
    fn tail_of_monomial_and_t0() {
        // x^k sits inside its own k-jet, so T_k(x^k) = 0; the first
        // surviving order of T_k is always >= 1.
        let xk: TruncatedSeries<C64> = TruncatedSeries::monomial(C64::from_i64(1), 3, 3);
        let t = xk.tail(3).unwrap();
        assert!(t.coeff(0).is_zero());

        // T_3(x^4) = x.
        let x4: TruncatedSeries<C64> = TruncatedSeries::monomial(C64::from_i64(1), 4, 4);
        let t = x4.tail(3).unwrap();
        assert_eq!(t.coeff(1), C64::from_i64(1));

        // T_0 phi = phi - phi(0).
        let mut e = euler_series(6);
        assert_eq!(e.tail(0).unwrap(), e);
        *e.coeff_mut(0) = CRat::from_i64(7);
        let t0 = e.tail(0).unwrap();
        assert!(t0.coeff(0).is_zero());
        for n in 1..=6 {
            assert_eq!(t0.coeff(n), e.coeff(n));
        }
    }

    #[test]
    fn jet_tail_reconstruction_is_exact() {
        let e = euler_series(14);
        for k in 0..=14 {
            let j = e.jet(k).unwrap();
            let t = e.tail(k).unwrap();
            let back = j.add(&t.mul_xpow(k));
            assert!(back.approx_eq(&e, 0.0), "k = {k}");
        }
    }

    #[test]
    fn tail_recursion_identity() {
        // T_k phi = x a_{k+1} + x T_{k+1} phi.
        let e = euler_series(12);
        for k in 0..12 {
            let lhs = e.tail(k).unwrap();
            let a = e.coeff(k + 1);
            let rhs = TruncatedSeries::monomial(a, 1, lhs.order())
                .add(&e.tail(k + 1).unwrap().mul_xpow(1));
            assert!(lhs.approx_eq(&rhs, 0.0), "k = {k}");
        }
    }

    #[test]
    fn compose_geometric_with_doubling() {
        // 1/(1-z) composed with z = 2x gives sum 2^n x^n.
        let n = 12;
        let geom = TruncatedSeries::from_coeffs(vec![C64::from_i64(1); n + 1]);
        let two_x = TruncatedSeries::polynomial(&[C64::from_i64(0), C64::from_i64(2)], n);
        let out = geom.compose(&two_x).unwrap();
        let mut pow = 1i64;
        for k in 0..=n {
            assert!(out.coeff(k).approx_eq(&C64::from_i64(pow), 1e-12), "k = {k}");
            pow = pow.saturating_mul(2);
        }
    }

    #[test]
    fn compose_euler_with_doubling_matches_direct_substitution() {
        let n = 10;
        let e = euler_series(n);
        let two_x = TruncatedSeries::polynomial(&[CRat::from_i64(0), CRat::from_i64(2)], n);
        let out = e.compose(&two_x).unwrap();
        let mut fact = CRat::from_i64(1);
        let mut pow = CRat::from_i64(2);
        for k in 1..=n {
            if k > 1 {
                fact = fact * CRat::from_i64(k as i64 - 1);
                pow = pow * CRat::from_i64(2);
            }
            assert_eq!(out.coeff(k), fact.clone() * pow.clone(), "k = {k}");
        }
    }

    #[test]
    fn compose_rejects_nonzero_constant() {
        let f = TruncatedSeries::from_coeffs(vec![C64::from_i64(1), C64::from_i64(1)]);
        let g = TruncatedSeries::from_coeffs(vec![C64::from_i64(1), C64::from_i64(1)]);
        assert_eq!(f.compose(&g), Err(Error::ComposeConstantTerm));
        // Zero inner is admissible and collapses to the constant term.
        let z = TruncatedSeries::zero(1);
        assert_eq!(f.compose(&z).unwrap().coeff(0), C64::from_i64(1));
    }

    #[test]
    fn valuation_and_partial_sum() {
        let s = TruncatedSeries::from_coeffs(vec![
            C64::from_i64(0),
            C64::from_i64(0),
            C64::from_i64(0),
            C64::from_i64(1),
            C64::from_i64(0),
            C64::from_i64(1),
        ]);
        assert_eq!(s.valuation(), Valuation::Finite(3));
        assert_eq!(TruncatedSeries::<C64>::zero(4).valuation(), Valuation::Infinite);

        let e = euler_series(5).to_c64_series();
        let v = e.partial_sum_eval(C64::new(0.1, 0.0), 3).unwrap();
        assert!((v.re - 0.112).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn differentiate_drops_one_order() {
        let e = euler_series(6);
        let d = e.differentiate();
        assert_eq!(d.order(), 5);
        // coefficient m of the derivative is (m+1) c_{m+1}
        for m in 0..=5 {
            assert_eq!(d.coeff(m), e.coeff(m + 1) * CRat::from_i64(m as i64 + 1));
        }
    }
}
