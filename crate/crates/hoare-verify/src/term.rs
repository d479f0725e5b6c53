//! Two-sorted first-order terms for assertions.
//!
//! Terms live in one of two sorts: INTEGER (unbounded integers) and REAL.
//! The only bridges between them are `iota(n) = 2^n`, which maps an
//! integer term to a real one, and an implicit embedding inserted by sort
//! inference wherever an integer term is used in a real position (for
//! example `y + k` with REAL y and INTEGER k).
//!
//! Terms are kept purely syntactic: no arithmetic simplification, no
//! reordering. Two terms are the same only if they were written the same
//! way, which is what lets generated conditions be compared against stored
//! ones structurally.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Sort of a term: unbounded integers or reals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FSort {
    Int,
    Real,
}

impl fmt::Display for FSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FSort::Int => write!(f, "INTEGER"),
            FSort::Real => write!(f, "REAL"),
        }
    }
}

/// Largest `|e|` for which `iota(e)` is evaluated exactly by the sampler
/// and by ground folding; beyond it the value is treated as symbolic.
pub const MAX_GROUND_IOTA: i64 = 256;

/// A sorted first-order term.
///
/// Division only ever has a nonzero literal divisor. Uninterpreted
/// function symbols (externals like `f`, arrays viewed as index maps like
/// `M(j)`) always produce a REAL result.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String, FSort),
    ILit(BigInt),
    RLit(BigRational),
    /// Implicit embedding of an INTEGER term used in a REAL position.
    Cast(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
    /// Division by a nonzero literal; always REAL.
    Div(Box<Term>, BigInt),
    /// 2^e for an INTEGER argument; always REAL.
    Iota(Box<Term>),
    /// Uninterpreted function application; always REAL.
    App(String, Vec<Term>),
}

impl Term {
    pub fn ivar(name: &str) -> Term {
        Term::Var(name.to_string(), FSort::Int)
    }

    pub fn rvar(name: &str) -> Term {
        Term::Var(name.to_string(), FSort::Real)
    }

    pub fn ilit(n: i64) -> Term {
        Term::ILit(BigInt::from(n))
    }

    pub fn rlit(n: i64, d: i64) -> Term {
        Term::RLit(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Sort of the term. Both operands of {+,-,*} share a sort by
    /// construction, so the left one decides.
    pub fn sort(&self) -> FSort {
        match self {
            Term::Var(_, s) => *s,
            Term::ILit(_) => FSort::Int,
            Term::RLit(_) => FSort::Real,
            Term::Cast(_) | Term::Div(_, _) | Term::Iota(_) | Term::App(_, _) => FSort::Real,
            Term::Add(a, _) | Term::Sub(a, _) | Term::Mul(a, _) => a.sort(),
            Term::Neg(a) => a.sort(),
        }
    }

    /// Free variables with their sorts (terms have no binders).
    pub fn free_vars(&self, out: &mut BTreeMap<String, FSort>) {
        match self {
            Term::Var(n, s) => {
                out.insert(n.clone(), *s);
            }
            Term::ILit(_) | Term::RLit(_) => {}
            Term::Cast(a) | Term::Neg(a) | Term::Iota(a) | Term::Div(a, _) => a.free_vars(out),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Term::App(_, args) => {
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }

    /// Uninterpreted function symbols used in the term.
    pub fn fn_symbols(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Term::App(n, args) => {
                out.insert(n.clone(), args.len());
                for a in args {
                    a.fn_symbols(out);
                }
            }
            Term::Cast(a) | Term::Neg(a) | Term::Iota(a) | Term::Div(a, _) => a.fn_symbols(out),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
                a.fn_symbols(out);
                b.fn_symbols(out);
            }
            Term::Var(_, _) | Term::ILit(_) | Term::RLit(_) => {}
        }
    }

    /// Substitutes `e` for every occurrence of the variable `x`.
    pub fn substitute(&self, x: &str, e: &Term) -> Term {
        match self {
            Term::Var(n, _) if n == x => e.clone(),
            Term::Var(_, _) | Term::ILit(_) | Term::RLit(_) => self.clone(),
            Term::Cast(a) => Term::Cast(Box::new(a.substitute(x, e))),
            Term::Neg(a) => Term::Neg(Box::new(a.substitute(x, e))),
            Term::Iota(a) => Term::Iota(Box::new(a.substitute(x, e))),
            Term::Div(a, d) => Term::Div(Box::new(a.substitute(x, e)), d.clone()),
            Term::Add(a, b) => {
                Term::Add(Box::new(a.substitute(x, e)), Box::new(b.substitute(x, e)))
            }
            Term::Sub(a, b) => {
                Term::Sub(Box::new(a.substitute(x, e)), Box::new(b.substitute(x, e)))
            }
            Term::Mul(a, b) => {
                Term::Mul(Box::new(a.substitute(x, e)), Box::new(b.substitute(x, e)))
            }
            Term::App(n, args) => {
                Term::App(n.clone(), args.iter().map(|a| a.substitute(x, e)).collect())
            }
        }
    }

    /// Exact value of a ground term, if it is ground and every `iota`
    /// exponent stays within [`MAX_GROUND_IOTA`].
    pub fn const_eval(&self) -> Option<BigRational> {
        match self {
            Term::Var(_, _) | Term::App(_, _) => None,
            Term::ILit(n) => Some(BigRational::from_integer(n.clone())),
            Term::RLit(q) => Some(q.clone()),
            Term::Cast(a) => a.const_eval(),
            Term::Neg(a) => Some(-a.const_eval()?),
            Term::Add(a, b) => Some(a.const_eval()? + b.const_eval()?),
            Term::Sub(a, b) => Some(a.const_eval()? - b.const_eval()?),
            Term::Mul(a, b) => Some(a.const_eval()? * b.const_eval()?),
            Term::Div(a, d) => Some(a.const_eval()? / BigRational::from_integer(d.clone())),
            Term::Iota(a) => {
                let e = a.const_eval()?;
                if !e.is_integer() {
                    return None;
                }
                pow2_rational(e.to_integer().to_i64()?)
            }
        }
    }
}

/// 2^e as an exact rational, for |e| within [`MAX_GROUND_IOTA`].
pub fn pow2_rational(e: i64) -> Option<BigRational> {
    if e.abs() > MAX_GROUND_IOTA {
        return None;
    }
    let p = BigInt::from(2).pow(e.unsigned_abs() as u32);
    Some(if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    })
}

/// Affine view of a term: rational coefficients over non-affine atoms plus
/// a constant. Used to discharge bound and definedness conditions that
/// hold for purely linear reasons.
pub fn linear_canon(t: &Term) -> Option<(BTreeMap<Term, BigRational>, BigRational)> {
    fn add_scaled(
        t: &Term,
        scale: &BigRational,
        coeffs: &mut BTreeMap<Term, BigRational>,
        konst: &mut BigRational,
    ) -> Option<()> {
        match t {
            Term::ILit(n) => {
                *konst += scale * BigRational::from_integer(n.clone());
            }
            Term::RLit(q) => {
                *konst += scale * q;
            }
            Term::Cast(a) => add_scaled(a, scale, coeffs, konst)?,
            Term::Neg(a) => add_scaled(a, &-scale, coeffs, konst)?,
            Term::Add(a, b) => {
                add_scaled(a, scale, coeffs, konst)?;
                add_scaled(b, scale, coeffs, konst)?;
            }
            Term::Sub(a, b) => {
                add_scaled(a, scale, coeffs, konst)?;
                add_scaled(b, &-scale, coeffs, konst)?;
            }
            Term::Div(a, d) => {
                let s = scale / BigRational::from_integer(d.clone());
                add_scaled(a, &s, coeffs, konst)?;
            }
            Term::Mul(a, b) => {
                if let Some(ca) = a.const_eval() {
                    add_scaled(b, &(scale * ca), coeffs, konst)?;
                } else if let Some(cb) = b.const_eval() {
                    add_scaled(a, &(scale * cb), coeffs, konst)?;
                } else {
                    *coeffs.entry(t.clone()).or_insert_with(BigRational::zero) += scale;
                }
            }
            Term::Iota(a) => {
                if let Some(v) = Term::Iota(a.clone()).const_eval() {
                    *konst += scale * v;
                } else {
                    *coeffs.entry(t.clone()).or_insert_with(BigRational::zero) += scale;
                }
            }
            Term::Var(_, _) | Term::App(_, _) => {
                *coeffs.entry(t.clone()).or_insert_with(BigRational::zero) += scale;
            }
        }
        Some(())
    }

    let mut coeffs = BTreeMap::new();
    let mut konst = BigRational::zero();
    add_scaled(t, &BigRational::one(), &mut coeffs, &mut konst)?;
    coeffs.retain(|_, c| !c.is_zero());
    Some((coeffs, konst))
}

/// True when `a - b` is the zero affine form, so the two terms are equal
/// for linear reasons even if written differently.
pub fn linear_equal(a: &Term, b: &Term) -> bool {
    match (linear_canon(a), linear_canon(b)) {
        (Some((ca, ka)), Some((cb, kb))) => ca == cb && ka == kb,
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Fully parenthesized below the additive level; reparses to the
        // same tree.
        match self {
            Term::Var(n, _) => write!(f, "{n}"),
            Term::ILit(n) => {
                if n.is_negative() {
                    write!(f, "({n})")
                } else {
                    write!(f, "{n}")
                }
            }
            Term::RLit(q) => {
                let (num, den) = (q.numer(), q.denom());
                if den.is_one() {
                    if num.is_negative() {
                        write!(f, "({num})")
                    } else {
                        write!(f, "{num}")
                    }
                } else if num.is_negative() {
                    write!(f, "(({num}) / {den})")
                } else {
                    write!(f, "({num} / {den})")
                }
            }
            Term::Cast(a) => write!(f, "{a}"),
            Term::Add(a, b) => write!(f, "({a} + {b})"),
            Term::Sub(a, b) => write!(f, "({a} - {b})"),
            Term::Mul(a, b) => write!(f, "({a} * {b})"),
            Term::Neg(a) => write!(f, "(-{a})"),
            Term::Div(a, d) => write!(f, "({a} / {d})"),
            Term::Iota(a) => write!(f, "iota({a})"),
            Term::App(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_reaches_every_position() {
        let t = Term::Add(
            Box::new(Term::Mul(Box::new(Term::rvar("y")), Box::new(Term::rvar("y")))),
            Box::new(Term::App("f".into(), vec![Term::rvar("y")])),
        );
        let s = t.substitute("y", &Term::Div(Box::new(Term::rvar("y")), BigInt::from(2)));
        assert_eq!(s.to_string(), "(((y / 2) * (y / 2)) + f((y / 2)))");
    }

    #[test]
    fn const_eval_handles_iota_and_division() {
        let t = Term::Div(Box::new(Term::Iota(Box::new(Term::ilit(-3)))), BigInt::from(3));
        assert_eq!(t.const_eval().unwrap(), BigRational::new(1.into(), 24.into()));
        assert!(Term::rvar("x").const_eval().is_none());
    }

    #[test]
    fn linear_canon_recognizes_rearrangements() {
        // y - x - iota(p-1) written two ways.
        let p1 = Term::Sub(Box::new(Term::ivar("p")), Box::new(Term::ilit(1)));
        let v1 = Term::Sub(
            Box::new(Term::Sub(Box::new(Term::rvar("y")), Box::new(Term::rvar("x")))),
            Box::new(Term::Iota(Box::new(p1.clone()))),
        );
        let v2 = Term::Sub(
            Box::new(Term::rvar("y")),
            Box::new(Term::Add(Box::new(Term::rvar("x")), Box::new(Term::Iota(Box::new(p1))))),
        );
        assert!(linear_equal(&v1, &v2));
        assert!(!linear_equal(&v1, &Term::rvar("y")));
    }

    #[test]
    fn iota_of_literal_folds_inside_affine_forms() {
        // iota(-2) contributes 1/4 to the constant.
        let t = Term::Iota(Box::new(Term::ilit(-2)));
        let (coeffs, konst) = linear_canon(&t).unwrap();
        assert!(coeffs.is_empty());
        assert_eq!(konst, BigRational::new(1.into(), 4.into()));
    }
}
