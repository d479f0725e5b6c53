//! Polynomial test functions with exact rational oracles.
//!
//! Each entry provides the same function twice: as an external REAL -> REAL
//! graph builder for programs under evaluation, and as exact rational
//! arithmetic for checking their answers. Root counting uses a Sturm chain,
//! so irrational roots are located without any floating point.

use crate::eval::ExternalFn;
use exact_core::RealNum;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::sync::Arc;

/// Polynomial in ascending-degree coefficient order.
pub type Poly = Vec<BigRational>;

/// One named test function: a polynomial with at least one sign change on
/// the unit interval.
pub struct TestFn {
    pub key: &'static str,
    coeffs: Poly,
}

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// All built-in test functions, selectable by key.
pub fn all() -> Vec<TestFn> {
    vec![
        // 2x - 1, root 1/2
        TestFn { key: "linear", coeffs: vec![rat(-1, 1), rat(2, 1)] },
        // x - 1/3, root 1/3
        TestFn { key: "affine", coeffs: vec![rat(-1, 3), rat(1, 1)] },
        // x^3 - x/2 - 1/8 = (x + 1/2)(x^2 - x/2 - 1/4); its only root in
        // [0, 1] is (1 + sqrt 5)/4
        TestFn {
            key: "cubic",
            coeffs: vec![rat(-1, 8), rat(-1, 2), rat(0, 1), rat(1, 1)],
        },
    ]
}

pub fn by_key(key: &str) -> Option<TestFn> {
    all().into_iter().find(|f| f.key == key)
}

impl TestFn {
    /// Graph builder for the evaluator: Horner form over exact reals.
    pub fn external(&self) -> ExternalFn {
        let coeffs = self.coeffs.clone();
        Arc::new(move |x: &RealNum| {
            let mut acc = real_of_rational(coeffs.last().expect("nonempty polynomial"));
            for c in coeffs.iter().rev().skip(1) {
                acc = acc.mul(x).add(&real_of_rational(c));
            }
            acc
        })
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        poly_eval(&self.coeffs, x)
    }

    /// Exact number of distinct real roots in the closed interval [a, b].
    pub fn count_roots_in(&self, a: &BigRational, b: &BigRational) -> usize {
        assert!(a <= b, "interval endpoints out of order");
        let chain = sturm_chain(&self.coeffs);
        // The Sturm chain counts roots in the half-open (a, b].
        let in_half_open =
            sign_variations(&chain, a) - sign_variations(&chain, b);
        let at_a = usize::from(self.eval_exact(a).is_zero());
        in_half_open + at_a
    }

    /// Shrinks [a, b] around its unique root by exact sign bisection until
    /// the bracket is narrower than 2^-80. Requires a strict sign change.
    pub fn root_bracket(&self, a: &BigRational, b: &BigRational) -> (BigRational, BigRational) {
        assert_eq!(self.count_roots_in(a, b), 1, "bracket must hold exactly one root");
        let sa = self.eval_exact(a).signum();
        let sb = self.eval_exact(b).signum();
        assert!(
            !sa.is_zero() && !sb.is_zero() && sa != sb,
            "bracket endpoints must straddle the root"
        );
        let (mut lo, mut hi) = (a.clone(), b.clone());
        let lo_sign = sa;
        let two = BigRational::from_integer(2.into());
        let width_goal = BigRational::new(BigInt::one(), BigInt::from(2).pow(80));
        while &hi - &lo > width_goal {
            let mid = (&lo + &hi) / &two;
            let sm = self.eval_exact(&mid).signum();
            if sm.is_zero() {
                // Rational midpoint hit the root exactly; pin a tiny bracket.
                let eps = &width_goal / &two;
                return (&mid - &eps, &mid + &eps);
            }
            if sm == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

fn real_of_rational(q: &BigRational) -> RealNum {
    let num = RealNum::from_bigint(q.numer().clone());
    if q.denom().is_one() {
        num
    } else {
        num.div(&RealNum::from_bigint(q.denom().clone()))
    }
}

fn poly_eval(p: &Poly, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn poly_deriv(p: &Poly) -> Poly {
    let mut out = Vec::new();
    for (k, c) in p.iter().enumerate().skip(1) {
        out.push(c * BigRational::from_integer(BigInt::from(k)));
    }
    trim(out)
}

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

/// Remainder of polynomial division num / den (den nonzero).
fn poly_rem(num: &Poly, den: &Poly) -> Poly {
    assert!(!den.is_empty(), "division by zero polynomial");
    let mut rem = num.clone();
    let dlead = den.last().unwrap().clone();
    while rem.len() >= den.len() {
        let shift = rem.len() - den.len();
        let factor = rem.last().unwrap() / &dlead;
        for (i, dc) in den.iter().enumerate() {
            let idx = i + shift;
            rem[idx] = &rem[idx] - &factor * dc;
        }
        // The leading term cancels by construction.
        rem.pop();
        rem = trim(rem);
        if rem.is_empty() {
            break;
        }
    }
    rem
}

/// Sturm chain of a square-free polynomial.
fn sturm_chain(f: &Poly) -> Vec<Poly> {
    let mut chain = vec![trim(f.clone()), poly_deriv(f)];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() {
            chain.pop();
            return chain;
        }
        let rem = poly_rem(&chain[n - 2], &chain[n - 1]);
        if rem.is_empty() {
            return chain;
        }
        chain.push(rem.iter().map(|c| -c).collect());
    }
}

fn sign_variations(chain: &[Poly], x: &BigRational) -> usize {
    let mut count = 0;
    let mut last: i32 = 0;
    for p in chain {
        let v = poly_eval(p, x);
        let s = if v.is_zero() {
            continue;
        } else if v.is_positive() {
            1
        } else {
            -1
        };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use exact_core::{EvalBudget, Meter};

    fn r(n: i64, d: i64) -> BigRational {
        rat(n, d)
    }

    #[test]
    fn exact_values_match_known_points() {
        let lin = by_key("linear").unwrap();
        assert!(lin.eval_exact(&r(1, 2)).is_zero());
        let cub = by_key("cubic").unwrap();
        assert!(cub.eval_exact(&r(-1, 2)).is_zero());
        assert_eq!(cub.eval_exact(&r(1, 1)), r(3, 8));
        assert_eq!(cub.eval_exact(&r(0, 1)), r(-1, 8));
    }

    #[test]
    fn root_counts_over_the_reals() {
        let cub = by_key("cubic").unwrap();
        // All three roots: -1/2, (1 - sqrt 5)/4, (1 + sqrt 5)/4.
        assert_eq!(cub.count_roots_in(&r(-2, 1), &r(2, 1)), 3);
        assert_eq!(cub.count_roots_in(&r(0, 1), &r(1, 1)), 1);
        assert_eq!(cub.count_roots_in(&r(-1, 1), &r(0, 1)), 2);
        // Closed-interval semantics: a root on the boundary counts.
        assert_eq!(cub.count_roots_in(&r(-1, 2), &r(0, 1)), 2);
        assert_eq!(cub.count_roots_in(&r(-1, 2), &r(-1, 2)), 1);
        let lin = by_key("linear").unwrap();
        assert_eq!(lin.count_roots_in(&r(0, 1), &r(1, 1)), 1);
        let aff = by_key("affine").unwrap();
        assert_eq!(aff.count_roots_in(&r(0, 1), &r(1, 1)), 1);
        assert_eq!(aff.count_roots_in(&r(1, 2), &r(1, 1)), 0);
    }

    #[test]
    fn brackets_are_tight_and_contain_the_root() {
        let cub = by_key("cubic").unwrap();
        let (lo, hi) = cub.root_bracket(&r(0, 1), &r(1, 1));
        assert!(&hi - &lo <= BigRational::new(1.into(), BigInt::from(2).pow(80)));
        assert!(cub.eval_exact(&lo).is_negative());
        assert!(cub.eval_exact(&hi).is_positive());
        // (1 + sqrt 5)/4 is about 0.8090169943.
        assert!(lo > r(809, 1000) && hi < r(8091, 10000));
        let lin = by_key("linear").unwrap();
        let (lo, hi) = lin.root_bracket(&r(0, 1), &r(1, 1));
        assert!(lo <= r(1, 2) && r(1, 2) <= hi);
    }

    #[test]
    fn graph_form_agrees_with_exact_form() {
        let m = Meter::new(EvalBudget::default());
        for f in all() {
            let ext = f.external();
            for (n, d) in [(1i64, 3i64), (-2, 5), (7, 4), (0, 1)] {
                let x = RealNum::from_rational(n, d);
                let iv = ext(&x).approx(-70, &m).unwrap();
                let exact = f.eval_exact(&r(n, d));
                let lo = BigRational::from_integer(iv.lo().mant().clone())
                    * pow2(iv.lo().exp());
                let hi = BigRational::from_integer(iv.hi().mant().clone())
                    * pow2(iv.hi().exp());
                assert!(lo <= exact && exact <= hi, "{} at {n}/{d}", f.key);
            }
        }
    }

    fn pow2(e: i64) -> BigRational {
        let b = BigRational::from_integer(2.into());
        if e >= 0 {
            b.pow(e.try_into().unwrap())
        } else {
            BigRational::one() / b.pow((-e).try_into().unwrap())
        }
    }
}
