//! Arbitrary-precision dyadic rationals `mant * 2^exp`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Dyadic rational `mant * 2^exp`.
///
/// Normal form: `mant` is odd or zero, and zero carries `exp == 0`, so each
/// value has exactly one representation and `Eq`/`Hash` agree with numeric
/// equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Dyadic { mant, exp: 0 };
        }
        let shift = mant.trailing_zeros().unwrap_or(0);
        if shift == 0 {
            Dyadic { mant, exp }
        } else {
            Dyadic {
                mant: mant >> shift,
                exp: exp + shift as i64,
            }
        }
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Dyadic::new(n, 0)
    }

    pub fn from_i64(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    /// 2^p, the only scalar bridge from integers to reals.
    pub fn iota(p: i64) -> Self {
        Dyadic { mant: BigInt::one(), exp: p }
    }

    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    /// Exact multiplication by 2^k.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.mant.is_zero() {
            Dyadic::zero()
        } else {
            Dyadic { mant: self.mant.clone(), exp: self.exp + k }
        }
    }

    /// Largest multiple of 2^grid that is <= self.
    pub fn floor_to(&self, grid: i64) -> Self {
        if self.is_zero() || self.exp >= grid {
            return self.clone();
        }
        let shift = (grid - self.exp) as u64;
        // BigInt shr is an arithmetic shift (rounds toward -infinity).
        Dyadic::new(&self.mant >> shift, grid)
    }

    /// Smallest multiple of 2^grid that is >= self.
    pub fn ceil_to(&self, grid: i64) -> Self {
        self.neg().floor_to(grid).neg()
    }

    /// Smallest k with |self| < 2^k, or None for zero.
    pub fn mag_exp_upper(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 + self.exp)
        }
    }

    /// Largest k with 2^k <= |self|, or None for zero.
    pub fn mag_exp_lower(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 + self.exp)
        }
    }

    pub fn min(a: &Dyadic, b: &Dyadic) -> Dyadic {
        if a <= b { a.clone() } else { b.clone() }
    }

    pub fn max(a: &Dyadic, b: &Dyadic) -> Dyadic {
        if a >= b { a.clone() } else { b.clone() }
    }
}

/// Aligns both mantissas to the smaller exponent.
fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
    let exp = a.exp.min(b.exp);
    let ma = &a.mant << (a.exp - exp) as u64;
    let mb = &b.mant << (b.exp - exp) as u64;
    (ma, mb, exp)
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (ma, mb, exp) = align(self, rhs);
        Dyadic::new(ma + mb, exp)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        if rhs.is_zero() {
            return self.clone();
        }
        let (ma, mb, exp) = align(self, rhs);
        Dyadic::new(ma - mb, exp)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mant: &self.mant * &rhs.mant,
            exp: self.exp + rhs.exp,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant, exp: self.exp }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.signum(), other.signum()) {
            (a, b) if a != b => a.cmp(&b),
            (0, 0) => Ordering::Equal,
            _ => {
                let (ma, mb, _) = align(self, other);
                ma.cmp(&mb)
            }
        }
    }
}

/// Rounds n/d onto the grid 2^g: floor if `down`, ceil otherwise.
/// `d` must be nonzero.
pub(crate) fn div_to_grid(n: &Dyadic, d: &Dyadic, g: i64, down: bool) -> Dyadic {
    assert!(!d.is_zero(), "division by exact zero");
    // n/d / 2^g = mn * 2^(en - ed - g) / md
    let s = n.exp - d.exp - g;
    let (num, den) = if s >= 0 {
        (&n.mant << s as u64, d.mant.clone())
    } else {
        (n.mant.clone(), &d.mant << (-s) as u64)
    };
    let q = if down {
        num.div_floor(&den)
    } else {
        num.div_ceil(&den)
    };
    Dyadic::new(q, g)
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: i64, e: i64) -> Dyadic {
        Dyadic::new(BigInt::from(m), e)
    }

    #[test]
    fn normal_form() {
        let x = d(12, -2); // 3 * 2^0
        assert_eq!(x.mant(), &BigInt::from(3));
        assert_eq!(x.exp(), 0);
        assert_eq!(d(0, 7), Dyadic::zero());
        assert_eq!(d(0, 7).exp(), 0);
    }

    #[test]
    fn arithmetic() {
        let a = d(3, -2); // 0.75
        let b = d(1, -1); // 0.5
        assert_eq!(&a + &b, d(5, -2));
        assert_eq!(&a - &b, d(1, -2));
        assert_eq!(&a * &b, d(3, -3));
        assert_eq!(-a.clone(), d(-3, -2));
    }

    #[test]
    fn ordering() {
        assert!(d(1, -1) < d(3, -2));
        assert!(d(-3, -2) < d(-1, -1));
        assert!(d(5, 0) > d(9, -1));
        assert_eq!(d(4, -2), d(1, 0));
    }

    #[test]
    fn grid_rounding() {
        assert_eq!(d(5, -2).floor_to(0), d(1, 0)); // 1.25 -> 1
        assert_eq!(d(5, -2).ceil_to(0), d(2, 0));
        assert_eq!(d(-5, -2).floor_to(0), d(-2, 0)); // -1.25 -> -2
        assert_eq!(d(-5, -2).ceil_to(0), d(-1, 0));
        assert_eq!(d(3, 4).floor_to(0), d(3, 4)); // already on grid
    }

    #[test]
    fn magnitude_exponents() {
        assert_eq!(d(3, 0).mag_exp_upper(), Some(2)); // 3 < 4
        assert_eq!(d(3, 0).mag_exp_lower(), Some(1)); // 2 <= 3
        assert_eq!(d(1, -5).mag_exp_upper(), Some(-4));
        assert_eq!(d(1, -5).mag_exp_lower(), Some(-5));
        assert_eq!(Dyadic::zero().mag_exp_upper(), None);
    }

    #[test]
    fn directed_division() {
        // 1/3 on grid 2^-4: floor 5/16, ceil 6/16
        let lo = div_to_grid(&d(1, 0), &d(3, 0), -4, true);
        let hi = div_to_grid(&d(1, 0), &d(3, 0), -4, false);
        assert_eq!(lo, d(5, -4));
        assert_eq!(hi, d(3, -3));
        // negative numerator rounds away from zero on floor
        let lo = div_to_grid(&d(-1, 0), &d(3, 0), -4, true);
        assert_eq!(lo, d(-3, -3));
    }

    #[test]
    fn iota_homomorphisms() {
        for p in -64..=64i64 {
            for q in [-64, -17, 0, 1, 33, 64] {
                let lhs = Dyadic::iota(p + q);
                let rhs = &Dyadic::iota(p) * &Dyadic::iota(q);
                assert_eq!(lhs, rhs);
                let quot = div_to_grid(&Dyadic::iota(p), &Dyadic::iota(q), p - q, true);
                assert_eq!(Dyadic::iota(p - q), quot);
            }
        }
    }

    #[test]
    fn display_format() {
        assert_eq!(d(3, -2).to_string(), "3*2^-2");
        assert_eq!(Dyadic::zero().to_string(), "0*2^0");
        assert_eq!(d(-1, 5).to_string(), "-1*2^5");
    }
}
