//! Online simplification: constant folding, polynomial normal form, shape
//! algebra reduction and interval-based resolution of comparisons.
//!
//! Every rewrite preserves the ground value of an expression under any
//! assignment where the original evaluates without error. With a non-empty
//! context the guarantee is restricted to assignments inside the context's
//! intervals.

mod defined;
mod interval;
mod online;
mod poly;
mod propagate;

pub use interval::{interval_of, Interval, Ranges};
pub use online::{online_check, Disposition};
pub use poly::Poly;
pub use propagate::{propagate, propagate_preds, Propagation};

use crate::constraints::{BoolExpr, NumExpr, NumOp, Pred, ShapeExpr, ValueExpr};

pub fn simplify(e: &ValueExpr, ctx: &Ranges) -> ValueExpr {
    match e {
        ValueExpr::Num(n) => ValueExpr::Num(simplify_num(n, ctx)),
        ValueExpr::Shape(s) => ValueExpr::Shape(simplify_shape(s, ctx)),
        ValueExpr::Bool(b) => ValueExpr::Bool(simplify_bool(b, ctx)),
    }
}

fn normalize(e: NumExpr, ctx: &Ranges) -> NumExpr {
    if !defined::num(&e, ctx) {
        return e;
    }
    match Poly::from_expr(&e) {
        Some(p) => p.to_expr(),
        None => e,
    }
}

fn point(e: &NumExpr, ctx: &Ranges) -> Option<i64> {
    e.as_const().or_else(|| interval_of(e, ctx).as_point())
}

pub fn simplify_num(e: &NumExpr, ctx: &Ranges) -> NumExpr {
    let out = match e {
        NumExpr::Const(_) => return e.clone(),
        NumExpr::Sym(s) => match ctx.get(s).and_then(Interval::as_point) {
            Some(v) => NumExpr::Const(v),
            None => e.clone(),
        },
        NumExpr::Bin(op @ (NumOp::Add | NumOp::Sub | NumOp::Mul), a, b) => {
            let a = simplify_num(a, ctx);
            let b = simplify_num(b, ctx);
            normalize(NumExpr::bin(*op, a, b), ctx)
        }
        NumExpr::Bin(NumOp::Div, a, b) => simplify_div(simplify_num(a, ctx), simplify_num(b, ctx), ctx),
        NumExpr::Bin(NumOp::Mod, a, b) => simplify_mod(simplify_num(a, ctx), simplify_num(b, ctx), ctx),
        NumExpr::Rank(s) => {
            let s = simplify_shape(s, ctx);
            rank_of(&s, ctx)
        }
        NumExpr::Index(s, i) => {
            let s = simplify_shape(s, ctx);
            let i = simplify_num(i, ctx);
            index_of(s, i, ctx)
        }
        NumExpr::Prod(s) => {
            let s = simplify_shape(s, ctx);
            prod_of(s, ctx)
        }
    };
    match interval_of(&out, ctx).as_point() {
        Some(v) if !matches!(out, NumExpr::Const(_)) && defined::num(&out, ctx) => NumExpr::Const(v),
        _ => out,
    }
}

fn simplify_div(a: NumExpr, b: NumExpr, ctx: &Ranges) -> NumExpr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Ok(q) = crate::constraints::floor_div(x, y) {
            return NumExpr::Const(q);
        }
    }
    match b.as_const() {
        Some(1) => return a,
        Some(-1) => return normalize(NumExpr::Const(0) - a, ctx),
        _ => {}
    }
    if !defined::num(&NumExpr::bin(NumOp::Div, a.clone(), b.clone()), ctx) {
        return NumExpr::bin(NumOp::Div, a, b);
    }
    if a.as_const() == Some(0) {
        return NumExpr::Const(0);
    }
    if let (Some(pa), Some(pb)) = (Poly::from_expr(&a), Poly::from_expr(&b)) {
        if let Some(q) = pa.div_exact(&pb) {
            return q.to_expr();
        }
    }
    let ia = interval_of(&a, ctx);
    if let Some(q) = ia.floor_div(&interval_of(&b, ctx)).and_then(|q| q.as_point()) {
        return NumExpr::Const(q);
    }
    // (x // c1) // c2 == x // (c1 * c2) for positive constants.
    if let (NumExpr::Bin(NumOp::Div, x, c1), Some(c2)) = (&a, b.as_const()) {
        if let Some(c1) = c1.as_const() {
            if c1 > 0 && c2 > 0 {
                if let Some(c) = c1.checked_mul(c2) {
                    return NumExpr::bin(NumOp::Div, (**x).clone(), NumExpr::Const(c));
                }
            }
        }
    }
    NumExpr::bin(NumOp::Div, a, b)
}

fn simplify_mod(a: NumExpr, b: NumExpr, ctx: &Ranges) -> NumExpr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Ok(r) = crate::constraints::floor_mod(x, y) {
            return NumExpr::Const(r);
        }
    }
    if !defined::num(&NumExpr::bin(NumOp::Mod, a.clone(), b.clone()), ctx) {
        return NumExpr::bin(NumOp::Mod, a, b);
    }
    if matches!(b.as_const(), Some(1) | Some(-1)) || a.as_const() == Some(0) {
        return NumExpr::Const(0);
    }
    if let (Some(pa), Some(pb)) = (Poly::from_expr(&a), Poly::from_expr(&b)) {
        if pa.div_exact(&pb).is_some() {
            return NumExpr::Const(0);
        }
    }
    let ia = interval_of(&a, ctx);
    let ib = interval_of(&b, ctx);
    if let Some(c) = b.as_const().filter(|c| *c > 0) {
        if ia.lo.is_some_and(|l| l >= 0) && ia.hi.is_some_and(|h| h < c) {
            return a;
        }
        // (x % c) % c == x % c
        if let NumExpr::Bin(NumOp::Mod, _, inner) = &a {
            if inner.as_const() == Some(c) {
                return a;
            }
        }
    }
    if let Some(r) = ia.floor_mod(&ib).and_then(|r| r.as_point()) {
        return NumExpr::Const(r);
    }
    NumExpr::bin(NumOp::Mod, a, b)
}

/// Rank of an already simplified shape.
fn rank_of(s: &ShapeExpr, ctx: &Ranges) -> NumExpr {
    if !defined::shape(s, ctx) {
        return NumExpr::rank(s.clone());
    }
    match s {
        ShapeExpr::Tuple(d) => NumExpr::Const(d.len() as i64),
        ShapeExpr::Sym(_) => NumExpr::rank(s.clone()),
        ShapeExpr::Slice(_, lo, hi) => simplify_num(&((**hi).clone() - (**lo).clone()), ctx),
        ShapeExpr::Concat(a, b) => simplify_num(&(rank_of(a, ctx) + rank_of(b, ctx)), ctx),
    }
}

/// Ground rank of a simplified shape, if determined.
pub fn known_rank(s: &ShapeExpr, ctx: &Ranges) -> Option<usize> {
    point(&rank_of(s, ctx), ctx).and_then(|r| usize::try_from(r).ok())
}

fn index_of(s: ShapeExpr, i: NumExpr, ctx: &Ranges) -> NumExpr {
    let whole = NumExpr::index(s.clone(), i.clone());
    if !defined::num(&whole, ctx) {
        return whole;
    }
    match (&s, i.as_const()) {
        (ShapeExpr::Tuple(d), Some(k)) if k >= 0 && (k as usize) < d.len() => d[k as usize].clone(),
        (ShapeExpr::Concat(a, b), Some(k)) if k >= 0 => match known_rank(a, ctx) {
            Some(ra) if (k as usize) < ra => index_of((**a).clone(), i, ctx),
            Some(ra) => index_of((**b).clone(), NumExpr::Const(k - ra as i64), ctx),
            None => NumExpr::index(s, i),
        },
        (ShapeExpr::Slice(t, lo, _), _) => {
            let j = simplify_num(&((**lo).clone() + i.clone()), ctx);
            index_of((**t).clone(), j, ctx)
        }
        _ => NumExpr::index(s, i),
    }
}

fn prod_of(s: ShapeExpr, ctx: &Ranges) -> NumExpr {
    if !defined::shape(&s, ctx) {
        return NumExpr::prod(s);
    }
    match &s {
        ShapeExpr::Tuple(d) => {
            let mut acc = Some(Poly::constant(1));
            for x in d {
                acc = acc.and_then(|p| Poly::from_expr(x).and_then(|q| p.mul(&q)));
            }
            match acc {
                Some(p) => p.to_expr(),
                None => NumExpr::prod(s),
            }
        }
        ShapeExpr::Concat(a, b) => {
            let pa = prod_of((**a).clone(), ctx);
            let pb = prod_of((**b).clone(), ctx);
            normalize(pa * pb, ctx)
        }
        _ => NumExpr::prod(s),
    }
}

pub fn simplify_shape(e: &ShapeExpr, ctx: &Ranges) -> ShapeExpr {
    match e {
        ShapeExpr::Tuple(d) => ShapeExpr::Tuple(d.iter().map(|x| simplify_num(x, ctx)).collect()),
        ShapeExpr::Sym(_) => e.clone(),
        ShapeExpr::Slice(s, lo, hi) => {
            let s = simplify_shape(s, ctx);
            let lo = simplify_num(lo, ctx);
            let hi = simplify_num(hi, ctx);
            slice_of(s, lo, hi, ctx)
        }
        ShapeExpr::Concat(a, b) => {
            let a = simplify_shape(a, ctx);
            let b = simplify_shape(b, ctx);
            concat_of(a, b)
        }
    }
}

fn slice_of(s: ShapeExpr, lo: NumExpr, hi: NumExpr, ctx: &Ranges) -> ShapeExpr {
    if !defined::shape(&s.clone().slice(lo.clone(), hi.clone()), ctx) {
        return s.slice(lo, hi);
    }
    if lo.as_const() == Some(0) && hi == rank_of(&s, ctx) {
        return s;
    }
    match (&s, lo.as_const(), hi.as_const()) {
        (ShapeExpr::Tuple(d), Some(l), Some(h)) if 0 <= l && l <= h && (h as usize) <= d.len() => {
            ShapeExpr::Tuple(d[l as usize..h as usize].to_vec())
        }
        (ShapeExpr::Concat(a, b), Some(l), Some(h)) if 0 <= l && l <= h => match known_rank(a, ctx) {
            Some(ra) => {
                let ra = ra as i64;
                if h <= ra {
                    slice_of((**a).clone(), lo, hi, ctx)
                } else if l >= ra {
                    slice_of((**b).clone(), NumExpr::Const(l - ra), NumExpr::Const(h - ra), ctx)
                } else {
                    let left = slice_of((**a).clone(), lo, NumExpr::Const(ra), ctx);
                    let right = slice_of((**b).clone(), NumExpr::Const(0), NumExpr::Const(h - ra), ctx);
                    concat_of(left, right)
                }
            }
            None => s.slice(lo, hi),
        },
        (ShapeExpr::Concat(a, _), Some(0), _) if hi == rank_of(a, ctx) => (**a).clone(),
        (ShapeExpr::Slice(t, lo2, _), _, _) => {
            let nlo = simplify_num(&((**lo2).clone() + lo), ctx);
            let nhi = simplify_num(&((**lo2).clone() + hi), ctx);
            slice_of((**t).clone(), nlo, nhi, ctx)
        }
        _ => s.slice(lo, hi),
    }
}

fn flatten_concat(s: ShapeExpr, out: &mut Vec<ShapeExpr>) {
    match s {
        ShapeExpr::Concat(a, b) => {
            flatten_concat(*a, out);
            flatten_concat(*b, out);
        }
        other => out.push(other),
    }
}

fn concat_of(a: ShapeExpr, b: ShapeExpr) -> ShapeExpr {
    let mut flat = Vec::new();
    flatten_concat(a, &mut flat);
    flatten_concat(b, &mut flat);
    let mut parts: Vec<ShapeExpr> = Vec::new();
    for part in flat {
        match (parts.last_mut(), part) {
            (_, ShapeExpr::Tuple(d)) if d.is_empty() => {}
            (Some(ShapeExpr::Tuple(prev)), ShapeExpr::Tuple(d)) => prev.extend(d),
            (_, part) => parts.push(part),
        }
    }
    let mut it = parts.into_iter().rev();
    match it.next() {
        None => ShapeExpr::Tuple(Vec::new()),
        Some(last) => it.fold(last, |acc, p| p.concat(acc)),
    }
}

pub fn simplify_bool(e: &BoolExpr, ctx: &Ranges) -> BoolExpr {
    match e {
        BoolExpr::Const(_) => e.clone(),
        BoolExpr::Sym(s) => match ctx.get(s).and_then(Interval::as_point) {
            Some(v) => BoolExpr::Const(v != 0),
            None => e.clone(),
        },
        BoolExpr::And(a, b) => match (simplify_bool(a, ctx), simplify_bool(b, ctx)) {
            (BoolExpr::Const(false), _) => BoolExpr::Const(false),
            (BoolExpr::Const(true), x) => x,
            (x, BoolExpr::Const(true)) => x,
            (x, y) if x == y => x,
            (x, y) => BoolExpr::and(x, y),
        },
        BoolExpr::Or(a, b) => match (simplify_bool(a, ctx), simplify_bool(b, ctx)) {
            (BoolExpr::Const(true), _) => BoolExpr::Const(true),
            (BoolExpr::Const(false), x) => x,
            (x, BoolExpr::Const(false)) => x,
            (x, y) if x == y => x,
            (x, y) => BoolExpr::or(x, y),
        },
        BoolExpr::Not(a) => match simplify_bool(a, ctx) {
            BoolExpr::Const(v) => BoolExpr::Const(!v),
            BoolExpr::Not(inner) => *inner,
            x => BoolExpr::not(x),
        },
        BoolExpr::Eq(a, b) => simplify_eq(a, b, ctx),
        BoolExpr::Lt(a, b) => {
            let a = simplify_num(a, ctx);
            let b = simplify_num(b, ctx);
            if !defined::num(&a, ctx) || !defined::num(&b, ctx) {
                return BoolExpr::Lt(Box::new(a), Box::new(b));
            }
            if a == b {
                return BoolExpr::Const(false);
            }
            if let Some(d) = Poly::from_expr(&(a.clone() - b.clone())) {
                let d = d.to_expr();
                if let Some(v) = d.as_const() {
                    return BoolExpr::Const(v < 0);
                }
                let iv = interval_of(&d, ctx);
                if iv.hi.is_some_and(|h| h < 0) {
                    return BoolExpr::Const(true);
                }
                if iv.lo.is_some_and(|l| l >= 0) {
                    return BoolExpr::Const(false);
                }
            }
            let (ia, ib) = (interval_of(&a, ctx), interval_of(&b, ctx));
            if let (Some(ah), Some(bl)) = (ia.hi, ib.lo) {
                if ah < bl {
                    return BoolExpr::Const(true);
                }
            }
            if let (Some(al), Some(bh)) = (ia.lo, ib.hi) {
                if al >= bh {
                    return BoolExpr::Const(false);
                }
            }
            BoolExpr::Lt(Box::new(a), Box::new(b))
        }
    }
}

fn simplify_eq(a: &ValueExpr, b: &ValueExpr, ctx: &Ranges) -> BoolExpr {
    match (a, b) {
        (ValueExpr::Num(x), ValueExpr::Num(y)) => {
            let x = simplify_num(x, ctx);
            let y = simplify_num(y, ctx);
            if !defined::num(&x, ctx) || !defined::num(&y, ctx) {
                return x.eq(y);
            }
            if x == y {
                return BoolExpr::Const(true);
            }
            if let Some(d) = Poly::from_expr(&(x.clone() - y.clone())) {
                let d = d.to_expr();
                if let Some(v) = d.as_const() {
                    return BoolExpr::Const(v == 0);
                }
                let iv = interval_of(&d, ctx);
                if !iv.contains(0) {
                    return BoolExpr::Const(false);
                }
            }
            let (ix, iy) = (interval_of(&x, ctx), interval_of(&y, ctx));
            if ix.meet(&iy).is_empty() {
                return BoolExpr::Const(false);
            }
            x.eq(y)
        }
        (ValueExpr::Shape(x), ValueExpr::Shape(y)) => {
            let x = simplify_shape(x, ctx);
            let y = simplify_shape(y, ctx);
            if !defined::shape(&x, ctx) || !defined::shape(&y, ctx) {
                return x.eq(y);
            }
            if x == y {
                return BoolExpr::Const(true);
            }
            if let (ShapeExpr::Tuple(dx), ShapeExpr::Tuple(dy)) = (&x, &y) {
                if dx.len() != dy.len() {
                    return BoolExpr::Const(false);
                }
                let dims = dx.iter().zip(dy).map(|(p, q)| simplify_eq(&ValueExpr::Num(p.clone()), &ValueExpr::Num(q.clone()), ctx));
                return simplify_bool(&BoolExpr::all(dims), ctx);
            }
            x.eq(y)
        }
        (ValueExpr::Bool(x), ValueExpr::Bool(y)) => {
            let x = simplify_bool(x, ctx);
            let y = simplify_bool(y, ctx);
            match (x.as_const(), y.as_const()) {
                (Some(p), Some(q)) => BoolExpr::Const(p == q),
                _ if x == y && defined::boolean(&x, ctx) => BoolExpr::Const(true),
                _ => BoolExpr::Eq(Box::new(ValueExpr::Bool(x)), Box::new(ValueExpr::Bool(y))),
            }
        }
        _ => BoolExpr::Eq(Box::new(simplify(a, ctx)), Box::new(simplify(b, ctx))),
    }
}

pub fn simplify_pred(p: &Pred, ctx: &Ranges) -> Pred {
    match p {
        Pred::Atom(b) => Pred::Atom(simplify_bool(b, ctx)),
        Pred::And(items) => {
            let mut out = Vec::new();
            for item in items {
                match simplify_pred(item, ctx) {
                    Pred::And(inner) => out.extend(inner),
                    q if q.as_const() == Some(true) => {}
                    q if q.as_const() == Some(false) && out.iter().all(|o| defined::pred(o, ctx)) => return Pred::truth(false),
                    q => out.push(q),
                }
            }
            match out.len() {
                0 => Pred::truth(true),
                1 => out.pop().unwrap(),
                _ => Pred::And(out),
            }
        }
        Pred::Or(items) => {
            let mut out = Vec::new();
            for item in items {
                match simplify_pred(item, ctx) {
                    Pred::Or(inner) => out.extend(inner),
                    q if q.as_const() == Some(false) => {}
                    q if q.as_const() == Some(true) && out.iter().all(|o| defined::pred(o, ctx)) => return Pred::truth(true),
                    q => out.push(q),
                }
            }
            match out.len() {
                0 => Pred::truth(false),
                1 => out.pop().unwrap(),
                _ => Pred::Or(out),
            }
        }
        Pred::Not(a) => match simplify_pred(a, ctx) {
            q if q.as_const().is_some() => Pred::truth(!q.as_const().unwrap()),
            Pred::Not(inner) => *inner,
            Pred::Atom(b) => Pred::Atom(simplify_bool(&BoolExpr::not(b), ctx)),
            q => Pred::not(q),
        },
        Pred::Forall { var, lo, hi, body } => {
            let lo = simplify_num(lo, ctx);
            let hi = simplify_num(hi, ctx);
            if let (Some(l), Some(h)) = (lo.as_const(), hi.as_const()) {
                if h < l {
                    return Pred::truth(true);
                }
            }
            let mut inner = ctx.clone();
            let range = Interval::new(interval_of(&lo, ctx).lo, interval_of(&hi, ctx).hi);
            inner.insert(var.clone(), range);
            // A ground range does not let the body fold to a constant here:
            // the body is simplified once for the whole range.
            let body = simplify_pred(body, &widen_point(&inner, var));
            if body.as_const() == Some(true) && defined::num(&lo, ctx) && defined::num(&hi, ctx) {
                return Pred::truth(true);
            }
            Pred::Forall {
                var: var.clone(),
                lo,
                hi,
                body: Box::new(body),
            }
        }
    }
}

// A bound variable must not be replaced by a constant even when its range is
// a single point, or the binder would become vacuous in the output.
fn widen_point(ctx: &Ranges, var: &crate::constraints::Symbol) -> Ranges {
    let mut out = ctx.clone();
    if let Some(iv) = out.get(var).copied() {
        if iv.as_point().is_some() {
            out.remove(var);
        }
    }
    out
}
