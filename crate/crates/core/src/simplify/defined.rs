//! Conservative proofs that an expression evaluates without error under every
//! assignment inside a context. Rewrites that drop a subterm consult these so
//! that an erroring original never simplifies to a defined result.
//! Arithmetic overflow is not tracked.

use super::interval::{interval_of, Ranges};
use super::poly::Poly;
use crate::constraints::{BoolExpr, NumExpr, NumOp, Pred, ShapeExpr, ValueExpr};

fn at_least(e: NumExpr, k: i64, ctx: &Ranges) -> bool {
    let e = Poly::from_expr(&e).map_or(e, |p| p.to_expr());
    interval_of(&e, ctx).lo.is_some_and(|l| l >= k)
}

fn nonzero(e: &NumExpr, ctx: &Ranges) -> bool {
    !interval_of(e, ctx).contains(0)
}

fn rank_expr(s: &ShapeExpr) -> NumExpr {
    match s {
        ShapeExpr::Tuple(d) => NumExpr::Const(d.len() as i64),
        ShapeExpr::Slice(_, lo, hi) => (**hi).clone() - (**lo).clone(),
        ShapeExpr::Concat(a, b) => rank_expr(a) + rank_expr(b),
        ShapeExpr::Sym(_) => NumExpr::rank(s.clone()),
    }
}

pub fn num(e: &NumExpr, ctx: &Ranges) -> bool {
    match e {
        NumExpr::Const(_) | NumExpr::Sym(_) => true,
        NumExpr::Bin(NumOp::Div | NumOp::Mod, a, b) => num(a, ctx) && num(b, ctx) && nonzero(b, ctx),
        NumExpr::Bin(_, a, b) => num(a, ctx) && num(b, ctx),
        NumExpr::Rank(s) | NumExpr::Prod(s) => shape(s, ctx),
        NumExpr::Index(s, i) => {
            shape(s, ctx) && num(i, ctx) && at_least((**i).clone(), 0, ctx) && at_least(rank_expr(s) - (**i).clone(), 1, ctx)
        }
    }
}

pub fn shape(e: &ShapeExpr, ctx: &Ranges) -> bool {
    match e {
        ShapeExpr::Tuple(d) => d.iter().all(|x| num(x, ctx)),
        ShapeExpr::Sym(_) => true,
        ShapeExpr::Slice(s, lo, hi) => {
            shape(s, ctx)
                && num(lo, ctx)
                && num(hi, ctx)
                && at_least((**lo).clone(), 0, ctx)
                && at_least((**hi).clone() - (**lo).clone(), 0, ctx)
                && at_least(rank_expr(s) - (**hi).clone(), 0, ctx)
        }
        ShapeExpr::Concat(a, b) => shape(a, ctx) && shape(b, ctx),
    }
}

pub fn boolean(e: &BoolExpr, ctx: &Ranges) -> bool {
    match e {
        BoolExpr::Const(_) | BoolExpr::Sym(_) => true,
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => boolean(a, ctx) && boolean(b, ctx),
        BoolExpr::Not(a) => boolean(a, ctx),
        BoolExpr::Eq(a, b) => value(a, ctx) && value(b, ctx),
        BoolExpr::Lt(a, b) => num(a, ctx) && num(b, ctx),
    }
}

pub fn value(e: &ValueExpr, ctx: &Ranges) -> bool {
    match e {
        ValueExpr::Num(n) => num(n, ctx),
        ValueExpr::Shape(s) => shape(s, ctx),
        ValueExpr::Bool(b) => boolean(b, ctx),
    }
}

pub fn pred(p: &Pred, ctx: &Ranges) -> bool {
    match p {
        Pred::Atom(b) => boolean(b, ctx),
        Pred::And(items) | Pred::Or(items) => items.iter().all(|q| pred(q, ctx)),
        Pred::Not(a) => pred(a, ctx),
        // Bodies see the bound variable unbounded, which is conservative.
        Pred::Forall { lo, hi, body, .. } => num(lo, ctx) && num(hi, ctx) && pred(body, ctx),
    }
}
