use std::collections::BTreeMap;
use std::fmt;

use crate::constraints::{NumExpr, NumOp, ShapeExpr, Symbol};

/// Closed integer interval; `None` bounds are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

/// Symbol ranges known on a path.
pub type Ranges = BTreeMap<Symbol, Interval>;

impl Interval {
    pub const TOP: Interval = Interval { lo: None, hi: None };

    pub fn new(lo: Option<i64>, hi: Option<i64>) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: i64) -> Self {
        Interval {
            lo: Some(v),
            hi: Some(v),
        }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn at_least(lo: i64) -> Self {
        Interval { lo: Some(lo), hi: None }
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn as_point(&self) -> Option<i64> {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) if l == h => Some(l),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo.is_none_or(|l| l <= v) && self.hi.is_none_or(|h| v <= h)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    /// Number of integers in the interval, if finite.
    pub fn width(&self) -> Option<u128> {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) if l <= h => Some((h as i128 - l as i128) as u128 + 1),
            (Some(_), Some(_)) => Some(0),
            _ => None,
        }
    }

    pub fn meet(&self, other: &Interval) -> Interval {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Interval { lo, hi }
    }

    pub fn join(&self, other: &Interval) -> Interval {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Interval { lo, hi }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: both(self.lo, o.lo, |a, b| a + b),
            hi: both(self.hi, o.hi, |a, b| a + b),
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.and_then(|h| h.checked_neg()),
            hi: self.lo.and_then(|l| l.checked_neg()),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: i64) -> Interval {
        self.mul(&Interval::point(k))
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let a = Ext::pair(self);
        let b = Ext::pair(o);
        if self.is_empty() || o.is_empty() {
            return *self;
        }
        let products = [
            Ext::mul(a.0, b.0),
            Ext::mul(a.0, b.1),
            Ext::mul(a.1, b.0),
            Ext::mul(a.1, b.1),
        ];
        let lo = products.iter().copied().min().unwrap();
        let hi = products.iter().copied().max().unwrap();
        Interval {
            lo: lo.to_lower(),
            hi: hi.to_upper(),
        }
    }

    /// Floor division by a divisor interval that excludes zero; `None`
    /// otherwise.
    pub fn floor_div(&self, o: &Interval) -> Option<Interval> {
        if o.contains(0) || o.is_empty() || self.is_empty() {
            return None;
        }
        let a = Ext::pair(self);
        let b = Ext::pair(o);
        let qs = [
            Ext::fdiv(a.0, b.0),
            Ext::fdiv(a.0, b.1),
            Ext::fdiv(a.1, b.0),
            Ext::fdiv(a.1, b.1),
        ];
        let lo = qs.iter().copied().min().unwrap();
        let hi = qs.iter().copied().max().unwrap();
        Some(Interval {
            lo: lo.to_lower(),
            hi: hi.to_upper(),
        })
    }

    /// Floor modulo by a divisor interval that excludes zero.
    pub fn floor_mod(&self, o: &Interval) -> Option<Interval> {
        if o.contains(0) || o.is_empty() || self.is_empty() {
            return None;
        }
        // With a positive divisor the result lies in [0, d-1]; when the
        // dividend already lies in [0, d_min - 1] it is unchanged.
        if let Some(dlo) = o.lo.filter(|l| *l > 0) {
            let bound = match o.hi {
                Some(h) => Interval::range(0, h - 1),
                None => Interval::at_least(0),
            };
            if let (Some(l), Some(h)) = (self.lo, self.hi) {
                if l >= 0 && h < dlo {
                    return Some(*self);
                }
            }
            return Some(bound);
        }
        if let Some(dhi) = o.hi.filter(|h| *h < 0) {
            let bound = match o.lo {
                Some(l) => Interval::range(l + 1, 0),
                None => Interval::new(None, Some(0)),
            };
            let _ = dhi;
            return Some(bound);
        }
        None
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::TOP
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => f.write_str("(-inf, ")?,
        }
        match self.hi {
            Some(h) => write!(f, "{h}]"),
            None => f.write_str("+inf)"),
        }
    }
}

fn both(a: Option<i64>, b: Option<i64>, f: impl Fn(i128, i128) -> i128) -> Option<i64> {
    let v = f(a? as i128, b? as i128);
    i64::try_from(v).ok()
}

/// Extended integers for bound arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    NegInf,
    Fin(i128),
    PosInf,
}

impl Ext {
    fn pair(i: &Interval) -> (Ext, Ext) {
        (
            i.lo.map_or(Ext::NegInf, |v| Ext::Fin(v as i128)),
            i.hi.map_or(Ext::PosInf, |v| Ext::Fin(v as i128)),
        )
    }

    fn sign(self) -> i32 {
        match self {
            Ext::NegInf => -1,
            Ext::PosInf => 1,
            Ext::Fin(v) => v.signum() as i32,
        }
    }

    fn mul(a: Ext, b: Ext) -> Ext {
        match (a, b) {
            (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x.saturating_mul(y)),
            _ => match a.sign() * b.sign() {
                0 => Ext::Fin(0),
                s if s > 0 => Ext::PosInf,
                _ => Ext::NegInf,
            },
        }
    }

    fn fdiv(a: Ext, b: Ext) -> Ext {
        match (a, b) {
            (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x.div_euclid(y) - if y < 0 && x.rem_euclid(y) != 0 { 1 } else { 0 }),
            (Ext::Fin(_), _) => Ext::Fin(0).min_with_sign(a, b),
            _ => {
                if a.sign() * b.sign() >= 0 {
                    Ext::PosInf
                } else {
                    Ext::NegInf
                }
            }
        }
    }

    // Finite over infinite divisor: quotient is 0 or -1 depending on signs.
    fn min_with_sign(self, a: Ext, b: Ext) -> Ext {
        if a.sign() == 0 || a.sign() == b.sign() {
            self
        } else {
            Ext::Fin(-1)
        }
    }

    fn to_lower(self) -> Option<i64> {
        match self {
            Ext::Fin(v) => i64::try_from(v).ok(),
            _ => None,
        }
    }

    fn to_upper(self) -> Option<i64> {
        match self {
            Ext::Fin(v) => i64::try_from(v).ok(),
            _ => None,
        }
    }
}

/// Over-approximates the values `e` can take under `ctx`. Symbols absent from
/// `ctx` are unbounded. Divisions whose divisor range contains zero give the
/// full range.
pub fn interval_of(e: &NumExpr, ctx: &Ranges) -> Interval {
    match e {
        NumExpr::Const(n) => Interval::point(*n),
        NumExpr::Sym(s) => ctx.get(s).copied().unwrap_or(Interval::TOP),
        NumExpr::Bin(op, a, b) => {
            let a = interval_of(a, ctx);
            let b = interval_of(b, ctx);
            match op {
                NumOp::Add => a.add(&b),
                NumOp::Sub => a.sub(&b),
                NumOp::Mul => a.mul(&b),
                NumOp::Div => a.floor_div(&b).unwrap_or(Interval::TOP),
                NumOp::Mod => a.floor_mod(&b).unwrap_or(Interval::TOP),
            }
        }
        NumExpr::Rank(s) => match s.as_ref() {
            ShapeExpr::Tuple(d) => Interval::point(d.len() as i64),
            _ => Interval::at_least(0),
        },
        NumExpr::Index(_, _) | NumExpr::Prod(_) => Interval::TOP,
    }
}
