//! Lazy exact reals as shared expression graphs refined on demand.

use crate::budget::Meter;
use crate::dyadic::Dyadic;
use crate::interval::DyadicInterval;
use crate::CoreError;
use num_bigint::BigInt;
use std::fmt;
use std::sync::{Arc, Mutex};

/// Producer for a limit node: called with a precision q, must return a real
/// within 2^q of the limit value. May consult the meter for budget state.
pub type LimitProducer = dyn Fn(i64, &Meter) -> Result<RealNum, CoreError> + Send + Sync;

enum RealOp {
    Const(Dyadic),
    Add(RealNum, RealNum),
    Sub(RealNum, RealNum),
    Mul(RealNum, RealNum),
    Div(RealNum, RealNum),
    Neg(RealNum),
    Abs(RealNum),
    Max(RealNum, RealNum),
    Limit(Arc<LimitProducer>),
}

struct RealNode {
    op: RealOp,
    /// Best enclosure seen so far; refinements only intersect, never widen.
    cache: Mutex<Option<DyadicInterval>>,
}

/// An exact real number: an operation graph whose nodes memoize their best
/// interval enclosure. `approx(p)` returns an enclosure of width <= 2^p.
///
/// Cloning shares the graph, so refinements propagate to every holder.
#[derive(Clone)]
pub struct RealNum(Arc<RealNode>);

impl RealNum {
    fn node(op: RealOp) -> Self {
        RealNum(Arc::new(RealNode { op, cache: Mutex::new(None) }))
    }

    pub fn from_dyadic(d: Dyadic) -> Self {
        Self::node(RealOp::Const(d))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_dyadic(Dyadic::from_bigint(n))
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_dyadic(Dyadic::from_i64(n))
    }

    /// 2^p as a real.
    pub fn iota(p: i64) -> Self {
        Self::from_dyadic(Dyadic::iota(p))
    }

    /// num/den as an exact quotient graph (den refined like any divisor).
    pub fn from_rational(num: i64, den: i64) -> Self {
        Self::from_integer(num).div(&Self::from_integer(den))
    }

    pub fn add(&self, rhs: &RealNum) -> RealNum {
        Self::node(RealOp::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &RealNum) -> RealNum {
        Self::node(RealOp::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &RealNum) -> RealNum {
        Self::node(RealOp::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &RealNum) -> RealNum {
        Self::node(RealOp::Div(self.clone(), rhs.clone()))
    }

    pub fn neg(&self) -> RealNum {
        Self::node(RealOp::Neg(self.clone()))
    }

    pub fn abs(&self) -> RealNum {
        Self::node(RealOp::Abs(self.clone()))
    }

    pub fn max(&self, rhs: &RealNum) -> RealNum {
        Self::node(RealOp::Max(self.clone(), rhs.clone()))
    }

    /// The value approximated by `producer`: producer(q) must be within 2^q
    /// of it. Realizes function calls whose results carry an error contract.
    pub fn limit(producer: Arc<LimitProducer>) -> RealNum {
        Self::node(RealOp::Limit(producer))
    }

    fn cached(&self) -> Option<DyadicInterval> {
        self.0.cache.lock().unwrap().clone()
    }

    /// Intersects a freshly computed enclosure into the cache and returns
    /// the best known interval. Disjoint enclosures mean the graph's inputs
    /// (a limit producer, in practice) broke their accuracy contract.
    fn store(&self, fresh: DyadicInterval) -> Result<DyadicInterval, CoreError> {
        let mut guard = self.0.cache.lock().unwrap();
        let best = match guard.as_ref() {
            None => fresh,
            Some(old) => {
                DyadicInterval::intersect(old, &fresh).ok_or(CoreError::Inconsistent)?
            }
        };
        *guard = Some(best.clone());
        Ok(best)
    }

    /// Returns an enclosure of width <= 2^p, refining the graph as needed.
    /// Consumes meter steps; division by an unseparable denominator and
    /// precision-floor hits surface as budget exhaustion.
    pub fn approx(&self, p: i64, meter: &Meter) -> Result<DyadicInterval, CoreError> {
        meter.tick(1)?;
        if let Some(cached) = self.cached() {
            if cached.width() <= Dyadic::iota(p) {
                return Ok(cached);
            }
        }
        let g = p - 32;
        let fresh = match &self.0.op {
            RealOp::Const(d) => DyadicInterval::point(d.clone()),
            RealOp::Add(a, b) => {
                let ia = a.approx(p - 2, meter)?;
                let ib = b.approx(p - 2, meter)?;
                DyadicInterval::add(&ia, &ib, g)
            }
            RealOp::Sub(a, b) => {
                let ia = a.approx(p - 2, meter)?;
                let ib = b.approx(p - 2, meter)?;
                DyadicInterval::sub(&ia, &ib, g)
            }
            RealOp::Neg(a) => DyadicInterval::neg(&a.approx(p, meter)?),
            RealOp::Abs(a) => DyadicInterval::abs(&a.approx(p, meter)?),
            RealOp::Max(a, b) => {
                let ia = a.approx(p, meter)?;
                let ib = b.approx(p, meter)?;
                DyadicInterval::max2(&ia, &ib)
            }
            RealOp::Mul(a, b) => {
                let ca = a.approx(0, meter)?;
                let cb = b.approx(0, meter)?;
                match (ca.mag_exp_upper(), cb.mag_exp_upper()) {
                    (None, _) | (_, None) => DyadicInterval::point(Dyadic::zero()),
                    (Some(ea), Some(eb)) => {
                        let ia = a.approx(p - 3 - eb, meter)?;
                        let ib = b.approx(p - 3 - ea, meter)?;
                        DyadicInterval::mul(&ia, &ib, g)
                    }
                }
            }
            RealOp::Div(a, b) => {
                let ib = self.separate_denominator(b, meter)?;
                let ell = Dyadic::min(&ib.lo().abs(), &ib.hi().abs())
                    .mag_exp_lower()
                    .expect("separated denominator excludes zero");
                match a.approx(0, meter)?.mag_exp_upper() {
                    None => DyadicInterval::point(Dyadic::zero()),
                    Some(ea) => {
                        let ia = a.approx(p - 2 + ell, meter)?;
                        let ib = b.approx(p - 2 + 2 * ell - ea, meter)?;
                        DyadicInterval::div(&ia, &ib, g)
                    }
                }
            }
            RealOp::Limit(producer) => {
                let inner = producer(p - 2, meter)?;
                let ii = inner.approx(p - 2, meter)?;
                ii.widen(&Dyadic::iota(p - 2))
            }
        };
        self.store(fresh)
    }

    /// Refines the denominator at geometrically descending precisions until
    /// its enclosure excludes zero. An exact-zero denominator errs out
    /// immediately; otherwise the precision floor realizes divergence.
    fn separate_denominator(
        &self,
        b: &RealNum,
        meter: &Meter,
    ) -> Result<DyadicInterval, CoreError> {
        let mut q = -1i64;
        loop {
            meter.tick(1)?;
            meter.require_precision(q)?;
            let ib = b.approx(q, meter)?;
            if !ib.contains_zero() {
                return Ok(ib);
            }
            if ib.is_point() {
                // Enclosure is exactly [0,0]: the denominator is zero.
                return Err(CoreError::BudgetExhausted(
                    crate::budget::Exhaustion::Stuck,
                ));
            }
            q = q.saturating_mul(2);
        }
    }
}

impl fmt::Debug for RealNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cached() {
            Some(iv) => write!(f, "RealNum({iv})"),
            None => write!(f, "RealNum(unevaluated)"),
        }
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait for &RealNum {
            type Output = RealNum;
            fn $method(self, rhs: &RealNum) -> RealNum {
                RealNum::$method(self, rhs)
            }
        }
    };
}
real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);
