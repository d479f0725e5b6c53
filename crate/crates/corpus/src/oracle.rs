//! Exact-arithmetic reference values the program runs are judged against.

use exact_core::{Dyadic, DyadicInterval, RealNum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// 2^k as an exact rational, for either sign of k.
pub fn pow2(k: i64) -> BigRational {
    let two = BigRational::from_integer(2.into());
    let p = two.pow(i32::try_from(k.unsigned_abs()).expect("pow2 exponent"));
    if k >= 0 {
        p
    } else {
        p.recip()
    }
}

/// Exact value of a dyadic number.
pub fn rational_of_dyadic(d: &Dyadic) -> BigRational {
    BigRational::from_integer(d.mant().clone()) * pow2(d.exp())
}

/// Exact midpoint of an interval.
pub fn rational_mid(iv: &DyadicInterval) -> BigRational {
    (rational_of_dyadic(iv.lo()) + rational_of_dyadic(iv.hi())) / BigRational::from_integer(2.into())
}

/// Embeds an exact rational as a real-number graph (a division node
/// unless the value is an integer).
pub fn real_of_rational(x: &BigRational) -> RealNum {
    let num = RealNum::from_bigint(x.numer().clone());
    if x.denom().is_one() {
        num
    } else {
        num.div(&RealNum::from_bigint(x.denom().clone()))
    }
}

/// Mantissa length of a positive value, used for directed rounding.
fn bits_of(m: &BigInt) -> u64 {
    m.bits()
}

/// Rounds mant*2^exp to at most `bits` mantissa bits toward -infinity.
fn round_down(mant: BigInt, exp: i64, bits: u64) -> (BigInt, i64) {
    let b = bits_of(&mant);
    if b <= bits {
        return (mant, exp);
    }
    let s = usize::try_from(b - bits).expect("shift");
    (mant >> s, exp + (b - bits) as i64)
}

/// Rounds mant*2^exp to at most `bits` mantissa bits toward +infinity.
fn round_up(mant: BigInt, exp: i64, bits: u64) -> (BigInt, i64) {
    let b = bits_of(&mant);
    if b <= bits {
        return (mant, exp);
    }
    let s = usize::try_from(b - bits).expect("shift");
    let carry = (BigInt::one() << s) - 1;
    ((mant + carry) >> s, exp + (b - bits) as i64)
}

/// Directed-rounding bracket of e^x for dyadic x in [0, 2]:
///
///   (1 + x/n)^n  <=  e^x  <=  (1 + x/n)^(n+2)      with n = 2^m.
///
/// The left bound is ln(1+u) <= u; the right needs the extra factor
/// (1+u)^2 to absorb the -u^2/2 term of ln(1+u) for x up to 2. Every
/// multiplication is rounded outward at `bits` mantissa bits, so the
/// returned rationals bracket e^x for any m >= 1; m = 36 and bits = 192
/// give a bracket of order 2^-31 wide, far below the 2^-20 checks use.
pub fn exp_bracket(x: &BigRational, m: u32, bits: u64) -> (BigRational, BigRational) {
    assert!(!x.is_negative(), "bracket only valid for x >= 0");
    assert!(*x <= BigRational::from_integer(2.into()), "bracket only valid for x <= 2");
    let den = x.denom();
    assert!((den & (den - BigInt::one())).is_zero(), "x must be dyadic");
    let dbits = den.bits() - 1;
    // base = 1 + x/2^m, exactly: (den*2^m + num) * 2^-(dbits + m)
    let base_mant = (den << m as usize) + x.numer();
    let base_exp = -(dbits as i64 + m as i64);
    let mut lo = round_down(base_mant.clone(), base_exp, bits);
    let mut hi = round_up(base_mant.clone(), base_exp, bits);
    for _ in 0..m {
        lo = round_down(&lo.0 * &lo.0, lo.1 * 2, bits);
        hi = round_up(&hi.0 * &hi.0, hi.1 * 2, bits);
    }
    hi = round_up(&hi.0 * &base_mant, hi.1 + base_exp, bits);
    hi = round_up(&hi.0 * &base_mant, hi.1 + base_exp, bits);
    let rat = |(mant, exp): (BigInt, i64)| BigRational::from_integer(mant) * pow2(exp);
    (rat(lo), rat(hi))
}

/// Rank of a rational matrix by exact Gaussian elimination.
pub fn exact_rank(a: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let rows = m.len();
    let cols = if rows > 0 { m[0].len() } else { 0 };
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let p = m[rank][col].clone();
        for r in rank + 1..rows {
            let f = &m[r][col] / &p;
            for c in col..cols {
                let sub = &f * &m[rank][c];
                m[r][c] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exp_bracket_pins_e_to_nine_decimals() {
        let (lo, hi) = exp_bracket(&BigRational::one(), 36, 192);
        // e = 2.71828182845904523536...; the bracket itself is a few
        // 10^-11 wide, so check it sits inside a 10^-10 window.
        let below = rat(27182818283, 10_000_000_000);
        let above = rat(27182818286, 10_000_000_000);
        assert!(below < lo && lo < hi && hi < above, "bracket {lo} .. {hi}");
        assert!(&hi - &lo < pow2(-30));
    }

    #[test]
    fn exp_bracket_of_zero_is_exactly_one() {
        let (lo, hi) = exp_bracket(&BigRational::zero(), 36, 192);
        assert_eq!(lo, BigRational::one());
        assert_eq!(hi, BigRational::one());
    }

    #[test]
    fn exp_bracket_spans_e_squared() {
        let (lo, hi) = exp_bracket(&rat(2, 1), 36, 192);
        // e^2 = 7.38905609893065...; the bracket is widest here and
        // leans above (the n+2 exponent pads the upper end), ~4*10^-10.
        let below = rat(73890560986, 10_000_000_000);
        let above = rat(73890560992, 10_000_000_000);
        assert!(below < lo && lo < hi && hi < above, "bracket {lo} .. {hi}");
        assert!(&hi - &lo < pow2(-29));
    }

    #[test]
    fn rank_of_outer_product_sums() {
        let z = || rat(0, 1);
        assert_eq!(exact_rank(&[vec![z(), z()], vec![z(), z()]]), 0);
        assert_eq!(exact_rank(&[vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)]]), 1);
        assert_eq!(exact_rank(&[vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(5, 1)]]), 2);
        let r2 = vec![
            vec![rat(1, 2), rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1), rat(1, 3)],
            vec![rat(1, 2), rat(2, 1), rat(1, 3)],
        ];
        assert_eq!(exact_rank(&r2), 2);
    }

    #[test]
    fn dyadic_conversions_are_exact() {
        let d = Dyadic::new(BigInt::from(-5), -3);
        assert_eq!(rational_of_dyadic(&d), rat(-5, 8));
        assert_eq!(pow2(4), rat(16, 1));
        assert_eq!(pow2(-4), rat(1, 16));
    }
}
