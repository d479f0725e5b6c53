//! Closed dyadic intervals with outward rounding.

use crate::dyadic::{div_to_grid, Dyadic};
use std::fmt;

/// Closed interval [lo, hi] with dyadic endpoints, lo <= hi.
///
/// Every operation is outward-rounded onto the grid 2^g it is given, so the
/// result always encloses the exact image and endpoint mantissas stay
/// bounded by the working precision plus the value's magnitude.
#[derive(Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        DyadicInterval { lo, hi }
    }

    pub fn point(d: Dyadic) -> Self {
        DyadicInterval { lo: d.clone(), hi: d }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Dyadic {
        (&self.lo + &self.hi).mul_pow2(-1)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.signum() <= 0 && self.hi.signum() >= 0
    }

    /// Rounds endpoints outward onto the grid 2^g (no-op for endpoints
    /// already on a coarser grid).
    pub fn outward(&self, g: i64) -> Self {
        DyadicInterval {
            lo: self.lo.floor_to(g),
            hi: self.hi.ceil_to(g),
        }
    }

    pub fn add(a: &Self, b: &Self, g: i64) -> Self {
        DyadicInterval::new(&a.lo + &b.lo, &a.hi + &b.hi).outward(g)
    }

    pub fn neg(a: &Self) -> Self {
        DyadicInterval { lo: -a.hi.clone(), hi: -a.lo.clone() }
    }

    pub fn sub(a: &Self, b: &Self, g: i64) -> Self {
        Self::add(a, &Self::neg(b), g)
    }

    pub fn mul(a: &Self, b: &Self, g: i64) -> Self {
        let prods = [
            &a.lo * &b.lo,
            &a.lo * &b.hi,
            &a.hi * &b.lo,
            &a.hi * &b.hi,
        ];
        let lo = prods.iter().min().unwrap().clone();
        let hi = prods.iter().max().unwrap().clone();
        DyadicInterval { lo, hi }.outward(g)
    }

    /// Quotient interval; requires a denominator of constant sign
    /// (checked: panics if b contains zero, callers refine first).
    pub fn div(a: &Self, b: &Self, g: i64) -> Self {
        assert!(!b.contains_zero(), "interval division through zero");
        let quots = [
            (&a.lo, &b.lo),
            (&a.lo, &b.hi),
            (&a.hi, &b.lo),
            (&a.hi, &b.hi),
        ];
        let lo = quots
            .iter()
            .map(|(n, d)| div_to_grid(n, d, g, true))
            .min()
            .unwrap();
        let hi = quots
            .iter()
            .map(|(n, d)| div_to_grid(n, d, g, false))
            .max()
            .unwrap();
        DyadicInterval { lo, hi }
    }

    pub fn abs(a: &Self) -> Self {
        if a.lo.signum() >= 0 {
            a.clone()
        } else if a.hi.signum() <= 0 {
            Self::neg(a)
        } else {
            DyadicInterval {
                lo: Dyadic::zero(),
                hi: Dyadic::max(&a.lo.abs(), &a.hi),
            }
        }
    }

    /// Pointwise max, exact (max is monotone in both endpoints).
    pub fn max2(a: &Self, b: &Self) -> Self {
        DyadicInterval {
            lo: Dyadic::max(&a.lo, &b.lo),
            hi: Dyadic::max(&a.hi, &b.hi),
        }
    }

    pub fn intersect(a: &Self, b: &Self) -> Option<Self> {
        let lo = Dyadic::max(&a.lo, &b.lo);
        let hi = Dyadic::min(&a.hi, &b.hi);
        if lo <= hi {
            Some(DyadicInterval { lo, hi })
        } else {
            None
        }
    }

    /// Widens both endpoints by delta >= 0.
    pub fn widen(&self, delta: &Dyadic) -> Self {
        DyadicInterval {
            lo: &self.lo - delta,
            hi: &self.hi + delta,
        }
    }

    /// Largest k with |x| < 2^k for every x in the interval; None only for [0,0].
    pub fn mag_exp_upper(&self) -> Option<i64> {
        match (self.lo.mag_exp_upper(), self.hi.mag_exp_upper()) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(i64::MIN).max(b.unwrap_or(i64::MIN))),
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::new(BigInt::from(m), e)
    }

    fn iv(lo: (i64, i64), hi: (i64, i64)) -> DyadicInterval {
        DyadicInterval::new(d(lo.0, lo.1), d(hi.0, hi.1))
    }

    #[test]
    fn widths_and_rounding() {
        let a = iv((1, -2), (3, -2));
        assert_eq!(a.width(), d(1, -1));
        let out = a.outward(-1);
        assert_eq!(out.lo(), &d(0, 0));
        assert_eq!(out.hi(), &d(1, 0));
    }

    #[test]
    fn mul_sign_cases() {
        let a = iv((-1, 0), (2, 0));
        let b = iv((-3, 0), (1, 0));
        let p = DyadicInterval::mul(&a, &b, -60);
        assert_eq!(p.lo(), &d(-6, 0));
        assert_eq!(p.hi(), &d(3, 0));
    }

    #[test]
    fn div_encloses() {
        let a = iv((1, 0), (1, 0));
        let b = iv((3, 0), (3, 0));
        let q = DyadicInterval::div(&a, &b, -10);
        assert!(q.lo() < q.hi());
        assert!(q.width() <= d(1, -9));
        // 1/3 in (q.lo, q.hi): 3*lo < 1 < 3*hi
        assert!(&(&d(3, 0) * q.lo()) < &d(1, 0));
        assert!(&(&d(3, 0) * q.hi()) > &d(1, 0));
    }

    #[test]
    fn abs_and_max() {
        let a = iv((-3, 0), (1, 0));
        let ab = DyadicInterval::abs(&a);
        assert_eq!(ab.lo(), &d(0, 0));
        assert_eq!(ab.hi(), &d(3, 0));
        let m = DyadicInterval::max2(&a, &iv((0, 0), (2, 0)));
        assert_eq!(m.lo(), &d(0, 0));
        assert_eq!(m.hi(), &d(2, 0));
    }

    #[test]
    fn intersection() {
        let a = iv((0, 0), (2, 0));
        let b = iv((1, 0), (3, 0));
        let c = DyadicInterval::intersect(&a, &b).unwrap();
        assert_eq!(c.lo(), &d(1, 0));
        assert_eq!(c.hi(), &d(2, 0));
        assert!(DyadicInterval::intersect(&a, &iv((3, 0), (4, 0))).is_none());
    }
}
