//! Indexing, slicing and operators on symbolic values.

use std::sync::Arc;

use crate::constraints::{BoolExpr, NumExpr, ShapeExpr, ValueExpr};
use crate::shapeops::{self, as_num, OpCtx, OpError, Value};
use crate::simplify::{simplify_bool, simplify_num, simplify_shape, Ranges};
use crate::surface::IrOp;

fn c(n: i64) -> NumExpr {
    NumExpr::Const(n)
}

/// Canonical form of a value, used to compare merge candidates.
pub fn normalize(v: &Value) -> Value {
    let r = Ranges::new();
    match v {
        Value::Bool(b) => Value::Bool(simplify_bool(b, &r)),
        Value::Num(n) => Value::Num(simplify_num(n, &r)),
        Value::Tensor(s) => Value::Tensor(simplify_shape(s, &r)),
        Value::Size(s) => Value::Size(simplify_shape(s, &r)),
        Value::Tuple(items) => Value::Tuple(items.iter().map(normalize).collect()),
        Value::List(items) => Value::List(items.iter().map(normalize).collect()),
        Value::Dataset(d) => {
            let mut d = d.clone();
            d.length = simplify_num(&d.length, &r);
            d.batch = simplify_num(&d.batch, &r);
            d.item = simplify_shape(&d.item, &r);
            d.label = simplify_shape(&d.label, &r);
            Value::Dataset(d)
        }
        Value::None | Value::Str(_) => v.clone(),
    }
}

/// Bounds check for index `i` into a dimension of size `n`, Python style.
fn index_in_bounds(ctx: &mut OpCtx, i: &NumExpr, n: &NumExpr) -> NumExpr {
    match ctx.konst(i) {
        Some(k) if k >= 0 => {
            ctx.soft(c(k).lt(n.clone()));
            c(k)
        }
        Some(k) => {
            ctx.soft((c(0) - n.clone()).le(c(k)));
            ctx.num(&(n.clone() + k))
        }
        None => {
            ctx.soft((c(0) - n.clone()).le(i.clone()));
            ctx.soft(i.clone().lt(n.clone()));
            i.clone()
        }
    }
}

fn const_index(ctx: &OpCtx, i: &Value, len: usize) -> Result<usize, OpError> {
    let k = ctx.konst(&as_num(ctx, i, "index")?).ok_or_else(|| ctx.undetermined("index into a sequence"))?;
    let len = len as i64;
    let k = if k < 0 { k + len } else { k };
    if (0..len).contains(&k) {
        Ok(k as usize)
    } else {
        Err(ctx.bad(format!("index {k} out of range for length {len}")))
    }
}

pub fn index(ctx: &mut OpCtx, base: &Value, i: &Value) -> Result<Value, OpError> {
    match (base, i) {
        (Value::Tensor(t), Value::Tensor(mask)) => {
            // A boolean mask selects a number of rows known only at run time.
            let mr = mask.rank_expr();
            ctx.soft(mr.clone().le(t.rank_expr()));
            ctx.soft(t.clone().slice(0, mr.clone()).eq(mask.clone()));
            let n = ctx.fresh("selected");
            ctx.hard(c(0).le(n.clone()));
            Ok(Value::Tensor(ctx.shape(&ShapeExpr::Tuple(vec![n]).concat(t.clone().slice(mr, t.rank_expr())))))
        }
        (Value::Tensor(t), _) => {
            let i = as_num(ctx, i, "index")?;
            ctx.soft(c(1).le(t.rank_expr()));
            index_in_bounds(ctx, &i, &t.dim(0));
            Ok(Value::Tensor(ctx.shape(&t.clone().slice(1, t.rank_expr()))))
        }
        (Value::Size(s), _) => {
            let i = as_num(ctx, i, "index")?;
            let k = index_in_bounds(ctx, &i, &s.rank_expr());
            Ok(Value::Num(ctx.num(&s.dim(k))))
        }
        (Value::Tuple(items) | Value::List(items), _) => Ok(items[const_index(ctx, i, items.len())?].clone()),
        (other, _) => Err(ctx.bad(format!("cannot index a {}", other.kind_name()))),
    }
}

/// Python slice bounds over a ground length.
fn ground_bounds(lo: Option<i64>, hi: Option<i64>, len: i64) -> (i64, i64) {
    let fix = |b: i64| if b < 0 { (b + len).max(0) } else { b.min(len) };
    let lo = lo.map_or(0, fix);
    let hi = hi.map_or(len, fix);
    (lo, hi.max(lo))
}

pub fn slice(ctx: &mut OpCtx, base: &Value, lo: Option<&Value>, hi: Option<&Value>) -> Result<Value, OpError> {
    let lo = lo.filter(|v| **v != Value::None).map(|v| as_num(ctx, v, "slice start")).transpose()?;
    let hi = hi.filter(|v| **v != Value::None).map(|v| as_num(ctx, v, "slice end")).transpose()?;
    // None: bound absent; Some(None): bound not constant
    let lo_k = lo.as_ref().map(|e| ctx.konst(e));
    let hi_k = hi.as_ref().map(|e| ctx.konst(e));
    match base {
        Value::Tuple(items) | Value::List(items) => {
            let (Some(l), Some(h)) = (lo_k.unwrap_or(Some(0)), hi_k.unwrap_or(Some(items.len() as i64))) else {
                return Err(ctx.undetermined("sequence slice bounds"));
            };
            let (l, h) = ground_bounds(Some(l), Some(h), items.len() as i64);
            let part = items[l as usize..h as usize].to_vec();
            Ok(if matches!(base, Value::List(_)) { Value::List(part) } else { Value::Tuple(part) })
        }
        Value::Tensor(t) | Value::Size(t) => {
            let is_size = matches!(base, Value::Size(_));
            let len = if is_size { t.rank_expr() } else { t.dim(0) };
            if !is_size {
                ctx.soft(c(1).le(t.rank_expr()));
            }
            let len_k = ctx.konst(&len);
            let bounds = match (len_k, lo_k.unwrap_or(Some(0)), hi_k.unwrap_or(len_k)) {
                (Some(n), Some(l), Some(h)) => {
                    let (l, h) = ground_bounds(Some(l), Some(h), n);
                    (c(l), c(h))
                }
                _ => {
                    let fix = |ctx: &OpCtx, e: NumExpr| match ctx.konst(&e) {
                        Some(k) if k < 0 => ctx.num(&(len.clone() + k)),
                        _ => e,
                    };
                    let l = fix(ctx, lo.clone().unwrap_or(c(0)));
                    let h = fix(ctx, hi.clone().unwrap_or_else(|| len.clone()));
                    ctx.soft(c(0).le(l.clone()));
                    ctx.soft(l.clone().le(h.clone()));
                    ctx.soft(h.clone().le(len.clone()));
                    (l, h)
                }
            };
            if is_size {
                Ok(Value::Size(ctx.shape(&t.clone().slice(bounds.0, bounds.1))))
            } else {
                let rest = t.clone().slice(1, t.rank_expr());
                Ok(Value::Tensor(ctx.shape(&ShapeExpr::Tuple(vec![bounds.1 - bounds.0]).concat(rest))))
            }
        }
        other => Err(ctx.bad(format!("cannot slice a {}", other.kind_name()))),
    }
}

fn as_shape(v: &Value) -> Option<ShapeExpr> {
    match v {
        Value::Size(s) => Some(s.clone()),
        Value::Tuple(items) | Value::List(items) => items
            .iter()
            .map(|x| match x {
                Value::Num(n) => Some(n.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(ShapeExpr::Tuple),
        _ => None,
    }
}

fn numeric(v: &Value) -> Option<NumExpr> {
    match v {
        Value::Num(n) => Some(n.clone()),
        Value::Bool(b) => b.as_const().map(|b| c(b as i64)),
        _ => None,
    }
}

fn boolean(v: &Value) -> Option<BoolExpr> {
    match v {
        Value::Bool(b) => Some(b.clone()),
        Value::Num(n) => Some(BoolExpr::not(n.clone().eq(0))),
        Value::None => Some(BoolExpr::Const(false)),
        _ => None,
    }
}

/// Truth value of a condition.
pub fn truth(v: &Value) -> Option<BoolExpr> {
    boolean(v)
}

pub fn not(ctx: &mut OpCtx, v: &Value) -> Result<Value, OpError> {
    match v {
        Value::Tensor(t) => Ok(Value::Tensor(t.clone())),
        other => match boolean(other) {
            Some(b) => Ok(Value::Bool(simplify_bool(&BoolExpr::not(b), ctx.ranges))),
            None => Err(ctx.bad(format!("'not' of a {}", other.kind_name()))),
        },
    }
}

fn tensor_op(op: IrOp) -> &'static str {
    match op {
        IrOp::Add => "add",
        IrOp::Sub => "sub",
        IrOp::Mul => "mul",
        IrOp::FloorDiv => "floordiv",
        IrOp::Mod => "floordiv",
        // comparisons and logic produce a mask of the broadcast shape
        IrOp::Lt | IrOp::Eq | IrOp::And | IrOp::Or => "maximum",
    }
}

pub fn binop(ctx: &mut OpCtx, op: IrOp, a: &Value, b: &Value) -> Result<Value, OpError> {
    if matches!(a, Value::Tensor(_)) || matches!(b, Value::Tensor(_)) {
        return shapeops::apply(ctx, tensor_op(op), &[a.clone(), b.clone()], &[]);
    }
    if let (Some(x), Some(y)) = (numeric(a), numeric(b)) {
        if !matches!(op, IrOp::And | IrOp::Or) {
            let r = match op {
                IrOp::Add => x + y,
                IrOp::Sub => x - y,
                IrOp::Mul => x * y,
                IrOp::FloorDiv | IrOp::Mod => {
                    match ctx.konst(&y) {
                        Some(0) => return Err(ctx.bad("division by zero")),
                        Some(_) => {}
                        None => ctx.soft(BoolExpr::not(y.clone().eq(0))),
                    }
                    if op == IrOp::Mod {
                        x.modulo(y)
                    } else {
                        x.floor_div(y)
                    }
                }
                IrOp::Lt => return Ok(Value::Bool(simplify_bool(&x.lt(y), ctx.ranges))),
                IrOp::Eq => return Ok(Value::Bool(simplify_bool(&x.eq(y), ctx.ranges))),
                IrOp::And | IrOp::Or => unreachable!(),
            };
            return Ok(Value::Num(ctx.num(&r)));
        }
    }
    match op {
        IrOp::And | IrOp::Or => {
            let (Some(x), Some(y)) = (boolean(a), boolean(b)) else {
                return Err(ctx.bad(format!("'{}' of {} and {}", op.text(), a.kind_name(), b.kind_name())));
            };
            let r = if op == IrOp::And { BoolExpr::and(x, y) } else { BoolExpr::or(x, y) };
            Ok(Value::Bool(simplify_bool(&r, ctx.ranges)))
        }
        IrOp::Eq => equal(ctx, a, b).map(Value::Bool),
        IrOp::Add => match (a, b) {
            (Value::Str(x), Value::Str(y)) => Ok(Value::Str(Arc::from(format!("{x}{y}")))),
            (Value::Tuple(x), Value::Tuple(y)) => Ok(Value::Tuple(x.iter().chain(y).cloned().collect())),
            (Value::List(x), Value::List(y)) => Ok(Value::List(x.iter().chain(y).cloned().collect())),
            _ => match (as_shape(a), as_shape(b)) {
                (Some(x), Some(y)) if matches!(a, Value::Size(_)) || matches!(b, Value::Size(_)) => Ok(Value::Size(ctx.shape(&x.concat(y)))),
                _ => Err(ctx.bad(format!("'+' of {} and {}", a.kind_name(), b.kind_name()))),
            },
        },
        _ => Err(ctx.bad(format!("'{}' of {} and {}", op.text(), a.kind_name(), b.kind_name()))),
    }
}

fn equal(ctx: &mut OpCtx, a: &Value, b: &Value) -> Result<BoolExpr, OpError> {
    let r = match (a, b) {
        (Value::None, Value::None) => BoolExpr::Const(true),
        (Value::None, _) | (_, Value::None) => BoolExpr::Const(false),
        (Value::Str(x), Value::Str(y)) => BoolExpr::Const(x == y),
        (Value::Bool(x), Value::Bool(y)) => BoolExpr::Eq(Box::new(ValueExpr::Bool(x.clone())), Box::new(ValueExpr::Bool(y.clone()))),
        _ => match (as_shape(a), as_shape(b)) {
            (Some(x), Some(y)) => x.eq(y),
            _ => return Err(ctx.bad(format!("'==' of {} and {}", a.kind_name(), b.kind_name()))),
        },
    };
    Ok(simplify_bool(&r, ctx.ranges))
}
