//! Decision procedure: depth-first search over symbol domains with interval
//! pruning and propagation.
//!
//! Symbols are split in id order and each domain is explored in preference
//! order (non-negative values ascending, then negative values descending), so
//! the first model found is the smallest in that order.

use web_time::Instant;

use crate::constraints::{eval_pred, Assignment, EvalError, BoolExpr, Ground, NumExpr, NumOp, Pred, ShapeExpr, Sort, Symbol, ValueExpr};
use crate::simplify::{propagate_preds, Interval, Ranges};

use super::Budget;

/// Satisfiability query: every formula in `all` holds and, when `violated`
/// is nonempty, at least one of those does not. A formula whose evaluation
/// fails counts as not holding, except on overflow, which leaves the
/// candidate undecided.
#[derive(Debug, Clone, Default)]
pub struct Query {
    pub all: Vec<Pred>,
    pub violated: Vec<Pred>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tv {
    T,
    F,
    U,
}

impl Tv {
    fn not(self) -> Tv {
        match self {
            Tv::T => Tv::F,
            Tv::F => Tv::T,
            Tv::U => Tv::U,
        }
    }
}

/// Holds under every assignment, by concrete evaluation; evaluation errors
/// count as false.
pub fn holds(p: &Pred, rho: &Assignment) -> bool {
    eval_pred(p, rho).unwrap_or(false)
}

/// Definitely fails under `rho`: evaluates to false or hits an evaluation
/// error other than arithmetic overflow.
pub fn violates(p: &Pred, rho: &Assignment) -> bool {
    matches!(outcome(p, rho), Some(false))
}

/// Truth value under `rho`; `None` when evaluation overflows `i64`.
fn outcome(p: &Pred, rho: &Assignment) -> Option<bool> {
    match eval_pred(p, rho) {
        Ok(b) => Some(b),
        Err(EvalError::Overflow) => None,
        Err(_) => Some(false),
    }
}

pub fn satisfies(q: &Query, rho: &Assignment) -> bool {
    q.all.iter().all(|p| outcome(p, rho) == Some(true))
        && (q.violated.is_empty() || q.violated.iter().any(|p| violates(p, rho)))
}

fn overflows(q: &Query, rho: &Assignment) -> bool {
    q.all.iter().chain(&q.violated).any(|p| outcome(p, rho).is_none())
}

// ---- three-valued interval evaluation ----------------------------------
//
// `Some` intervals and decided truth values guarantee that concrete
// evaluation succeeds for every point of the box.

fn iv_num(e: &NumExpr, b: &Ranges) -> Option<Interval> {
    match e {
        NumExpr::Const(n) => Some(Interval::point(*n)),
        NumExpr::Sym(s) => Some(b.get(s).copied().unwrap_or(Interval::TOP)),
        NumExpr::Bin(op, x, y) => {
            let x = iv_num(x, b)?;
            let y = iv_num(y, b)?;
            let r = match op {
                NumOp::Add => x.add(&y),
                NumOp::Sub => x.sub(&y),
                NumOp::Mul => x.mul(&y),
                NumOp::Div => x.floor_div(&y)?,
                NumOp::Mod => x.floor_mod(&y)?,
            };
            // Every symbol has a finite domain, so an unbounded result means
            // the arithmetic may overflow.
            r.is_finite().then_some(r)
        }
        NumExpr::Rank(s) => iv_shape(s, b).map(|d| Interval::point(d.len() as i64)),
        NumExpr::Index(s, i) => {
            let d = iv_shape(s, b)?;
            let i = iv_num(i, b)?;
            let k = i.as_point()?;
            d.get(usize::try_from(k).ok()?).copied()
        }
        NumExpr::Prod(s) => iv_shape(s, b).map(|d| d.iter().fold(Interval::point(1), |acc, x| acc.mul(x))),
    }
}

fn iv_shape(s: &ShapeExpr, b: &Ranges) -> Option<Vec<Interval>> {
    match s {
        ShapeExpr::Tuple(d) => d.iter().map(|x| iv_num(x, b)).collect(),
        ShapeExpr::Sym(_) => None,
        ShapeExpr::Slice(s, lo, hi) => {
            let d = iv_shape(s, b)?;
            let lo = iv_num(lo, b)?.as_point()?;
            let hi = iv_num(hi, b)?.as_point()?;
            if 0 <= lo && lo <= hi && hi as usize <= d.len() {
                Some(d[lo as usize..hi as usize].to_vec())
            } else {
                None
            }
        }
        ShapeExpr::Concat(x, y) => {
            let mut d = iv_shape(x, b)?;
            d.extend(iv_shape(y, b)?);
            Some(d)
        }
    }
}

fn eq_iv(x: Interval, y: Interval) -> Tv {
    match (x.as_point(), y.as_point()) {
        (Some(a), Some(c)) if a == c => return Tv::T,
        _ => {}
    }
    if x.meet(&y).is_empty() {
        Tv::F
    } else {
        Tv::U
    }
}

fn tv_value_eq(x: &ValueExpr, y: &ValueExpr, b: &Ranges) -> Tv {
    match (x, y) {
        (ValueExpr::Num(x), ValueExpr::Num(y)) => match (iv_num(x, b), iv_num(y, b)) {
            (Some(x), Some(y)) => eq_iv(x, y),
            _ => Tv::U,
        },
        (ValueExpr::Shape(x), ValueExpr::Shape(y)) => match (iv_shape(x, b), iv_shape(y, b)) {
            (Some(x), Some(y)) if x.len() != y.len() => Tv::F,
            (Some(x), Some(y)) => {
                let mut all = Tv::T;
                for (p, q) in x.into_iter().zip(y) {
                    match eq_iv(p, q) {
                        Tv::F => return Tv::F,
                        Tv::U => all = Tv::U,
                        Tv::T => {}
                    }
                }
                all
            }
            _ => Tv::U,
        },
        (ValueExpr::Bool(x), ValueExpr::Bool(y)) => match (tv_bool(x, b), tv_bool(y, b)) {
            (Tv::U, _) | (_, Tv::U) => Tv::U,
            (p, q) => {
                if p == q {
                    Tv::T
                } else {
                    Tv::F
                }
            }
        },
        _ => Tv::U,
    }
}

fn tv_bool(e: &BoolExpr, b: &Ranges) -> Tv {
    match e {
        BoolExpr::Const(true) => Tv::T,
        BoolExpr::Const(false) => Tv::F,
        BoolExpr::Sym(s) => match b.get(s).and_then(Interval::as_point) {
            Some(0) => Tv::F,
            Some(_) => Tv::T,
            None => Tv::U,
        },
        BoolExpr::And(x, y) => match tv_bool(x, b) {
            Tv::F => Tv::F,
            Tv::T => tv_bool(y, b),
            Tv::U => Tv::U,
        },
        BoolExpr::Or(x, y) => match tv_bool(x, b) {
            Tv::T => Tv::T,
            Tv::F => tv_bool(y, b),
            Tv::U => Tv::U,
        },
        BoolExpr::Not(x) => tv_bool(x, b).not(),
        BoolExpr::Eq(x, y) => tv_value_eq(x, y, b),
        BoolExpr::Lt(x, y) => match (iv_num(x, b), iv_num(y, b)) {
            (Some(x), Some(y)) => {
                if let (Some(h), Some(l)) = (x.hi, y.lo) {
                    if h < l {
                        return Tv::T;
                    }
                }
                if let (Some(l), Some(h)) = (x.lo, y.hi) {
                    if l >= h {
                        return Tv::F;
                    }
                }
                Tv::U
            }
            _ => Tv::U,
        },
    }
}

fn tv_pred(p: &Pred, b: &Ranges) -> Tv {
    match p {
        Pred::Atom(e) => tv_bool(e, b),
        Pred::And(items) => {
            for i in items {
                match tv_pred(i, b) {
                    Tv::F => return Tv::F,
                    Tv::U => return Tv::U,
                    Tv::T => {}
                }
            }
            Tv::T
        }
        Pred::Or(items) => {
            for i in items {
                match tv_pred(i, b) {
                    Tv::T => return Tv::T,
                    Tv::U => return Tv::U,
                    Tv::F => {}
                }
            }
            Tv::F
        }
        Pred::Not(x) => tv_pred(x, b).not(),
        Pred::Forall { .. } => Tv::U,
    }
}

// ---- search --------------------------------------------------------------

/// Largest magnitude explored for unbounded domains before splitting stops
/// growing; keeps interval arithmetic clear of overflow.
const LIMIT: i64 = 1 << 60;

/// Width at or below which a domain is enumerated point by point.
const ENUM_WIDTH: i64 = 8;

struct Search<'q> {
    q: &'q Query,
    vars: Vec<Symbol>,
    budget: Budget,
    start: Instant,
    tuples: u64,
    nodes: u64,
    overflowed: bool,
}

#[derive(Debug)]
struct Exhausted(String);

pub fn check_sat(q: &Query, budget: &Budget) -> SatResult {
    let mut syms = std::collections::BTreeSet::new();
    for p in q.all.iter().chain(&q.violated) {
        syms.extend(crate::constraints::free_symbols_pred(p));
    }
    if let Some(s) = syms.iter().find(|s| s.sort == Sort::Shape) {
        return SatResult::Unknown(format!("shape symbol {} has no known rank", s.name()));
    }
    let mut root = Ranges::new();
    for s in &syms {
        let d = match s.sort {
            Sort::Bool => Interval::range(0, 1),
            _ => Interval::range(-LIMIT, LIMIT),
        };
        root.insert(s.clone(), d);
    }
    let mut search = Search {
        q,
        vars: syms.into_iter().collect(),
        budget: budget.clone(),
        start: Instant::now(),
        tuples: 0,
        nodes: 0,
        overflowed: false,
    };
    match search.node(root) {
        Ok(Some(m)) => {
            debug_assert!(satisfies(q, &m), "model fails verification");
            SatResult::Sat(m)
        }
        Ok(None) if search.overflowed => SatResult::Unknown("integer overflow while evaluating a candidate".into()),
        Ok(None) => SatResult::Unsat,
        Err(Exhausted(why)) => SatResult::Unknown(why),
    }
}

fn ground_of(s: &Symbol, v: i64) -> Ground {
    match s.sort {
        Sort::Bool => Ground::Bool(v != 0),
        _ => Ground::Int(v),
    }
}

/// First value of a domain in preference order.
fn preferred(d: &Interval) -> i64 {
    let (lo, hi) = (d.lo.unwrap_or(-LIMIT), d.hi.unwrap_or(LIMIT));
    if hi < 0 {
        hi
    } else {
        lo.max(0)
    }
}

/// Splits a domain into pieces in preference order.
fn pieces(d: &Interval) -> Vec<Interval> {
    let (lo, hi) = (d.lo.unwrap_or(-LIMIT), d.hi.unwrap_or(LIMIT));
    if lo < 0 && hi >= 0 {
        return vec![Interval::range(0, hi), Interval::range(lo, -1)];
    }
    let width = hi - lo + 1;
    if width <= ENUM_WIDTH {
        let mut v: Vec<Interval> = (lo..=hi).map(Interval::point).collect();
        if hi < 0 {
            v.reverse();
        }
        return v;
    }
    if lo >= 0 {
        // Geometric first piece keeps small values ahead of huge ones.
        let cut = lo.saturating_add(lo.max(ENUM_WIDTH)).min(lo + width / 2);
        vec![Interval::range(lo, cut - 1), Interval::range(cut, hi)]
    } else {
        let cut = hi.saturating_sub(hi.saturating_neg().max(ENUM_WIDTH)).max(hi - width / 2);
        vec![Interval::range(cut + 1, hi), Interval::range(lo, cut)]
    }
}

impl<'q> Search<'q> {
    fn check_budget(&mut self) -> Result<(), Exhausted> {
        self.nodes += 1;
        if self.tuples > self.budget.max_tuples {
            return Err(Exhausted(format!("enumeration budget of {} tuples exhausted", self.budget.max_tuples)));
        }
        if self.nodes > self.budget.max_tuples.saturating_mul(16) {
            return Err(Exhausted("search node budget exhausted".into()));
        }
        if self.nodes.is_multiple_of(256) && self.start.elapsed() > self.budget.timeout {
            return Err(Exhausted(format!("time budget of {} ms exhausted", self.budget.timeout.as_millis())));
        }
        Ok(())
    }

    fn goal(&self, b: &Ranges) -> Tv {
        let mut acc = Tv::T;
        for p in &self.q.all {
            match tv_pred(p, b) {
                Tv::F => return Tv::F,
                Tv::U => acc = Tv::U,
                Tv::T => {}
            }
        }
        if !self.q.violated.is_empty() {
            // some violated formula fails to hold
            let mut any = Tv::F;
            for p in &self.q.violated {
                match tv_pred(p, b).not() {
                    Tv::T => {
                        any = Tv::T;
                        break;
                    }
                    Tv::U => any = Tv::U,
                    Tv::F => {}
                }
            }
            match any {
                Tv::F => return Tv::F,
                Tv::U => acc = Tv::U,
                Tv::T => {}
            }
        }
        acc
    }

    fn assignment(&self, b: &Ranges) -> Assignment {
        self.vars.iter().map(|s| (s.clone(), ground_of(s, preferred(&b[s])))).collect()
    }

    fn try_point(&mut self, b: &Ranges) -> Option<Assignment> {
        self.tuples += 1;
        let rho = self.assignment(b);
        if satisfies(self.q, &rho) {
            return Some(rho);
        }
        self.overflowed |= overflows(self.q, &rho);
        None
    }

    fn node(&mut self, mut b: Ranges) -> Result<Option<Assignment>, Exhausted> {
        self.check_budget()?;
        let prop = propagate_preds(self.q.all.iter(), b.clone());
        if prop.infeasible {
            return Ok(None);
        }
        for (s, d) in prop.ranges {
            if let Some(cur) = b.get_mut(&s) {
                *cur = cur.meet(&d);
                if cur.is_empty() {
                    return Ok(None);
                }
            }
        }
        let goal = self.goal(&b);
        if goal == Tv::F {
            return Ok(None);
        }
        let split = self.vars.iter().find(|s| b[*s].as_point().is_none()).cloned();
        let Some(v) = split else {
            return Ok(self.try_point(&b));
        };
        if goal == Tv::T {
            if let Some(m) = self.try_point(&b) {
                return Ok(Some(m));
            }
        }
        for piece in pieces(&b[&v]) {
            let mut child = b.clone();
            child.insert(v.clone(), piece);
            if let Some(m) = self.node(child)? {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::SymbolGen;
    use std::time::Duration;

    fn budget() -> Budget {
        Budget {
            max_tuples: 1_000_000,
            timeout: Duration::from_secs(10),
        }
    }

    #[test]
    fn pieces_follow_preference_order() {
        assert_eq!(pieces(&Interval::range(-2, 3))[0], Interval::range(0, 3));
        let p = pieces(&Interval::range(-3, -1));
        assert_eq!(p[0], Interval::point(-1));
        let p = pieces(&Interval::range(0, 1000));
        assert!(p[0].hi.unwrap() < p[1].lo.unwrap());
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut g = SymbolGen::new();
        let a = g.fresh_num("a");
        let q = Query {
            all: vec![Pred::Atom(a.clone().eq(1)), Pred::Atom(a.eq(2))],
            violated: vec![],
        };
        assert_eq!(check_sat(&q, &budget()), SatResult::Unsat);
    }

    #[test]
    fn smallest_channel_counterexample() {
        let mut g = SymbolGen::new();
        let c = g.fresh_num("c");
        let q = Query {
            all: vec![Pred::Atom(NumExpr::Const(1).le(c.clone())), Pred::Atom(c.clone().le(4))],
            violated: vec![Pred::Atom((c.clone() * 784).eq(784))],
        };
        let SatResult::Sat(m) = check_sat(&q, &budget()) else { panic!() };
        assert_eq!(m.values().next(), Some(&Ground::Int(2)));
    }

    #[test]
    fn residual_of_unbounded_length() {
        let mut g = SymbolGen::new();
        let n = g.fresh_num("N");
        let r = g.fresh_num("R");
        let base = vec![
            Pred::Atom(NumExpr::Const(1).le(n.clone())),
            Pred::Atom(r.clone().eq(n.clone().modulo(NumExpr::Const(64)))),
            Pred::Atom(NumExpr::Const(0).lt(r.clone())),
            Pred::Atom(r.clone().lt(64)),
        ];
        let mut all = base.clone();
        all.push(Pred::Atom(r.clone().eq(64)));
        assert_eq!(check_sat(&Query { all, violated: vec![] }, &budget()), SatResult::Unsat);
        let q = Query {
            all: base,
            violated: vec![Pred::Atom((r.clone() * 2).eq(128))],
        };
        let SatResult::Sat(m) = check_sat(&q, &budget()) else { panic!() };
        let NumExpr::Sym(rs) = &r else { panic!() };
        assert_eq!(m[rs], Ground::Int(1));
    }
}
