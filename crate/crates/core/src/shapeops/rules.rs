use std::sync::Arc;

use crate::constraints::{BoolExpr, NumExpr, ShapeExpr, Sort};

use super::{as_dims, as_num, as_tensor, as_tensors, Args, Dataset, OpCtx, OpError, OpRule, Value, DATASET_STUBS};

type R = Result<Value, OpError>;

fn tensor(ctx: &OpCtx, s: ShapeExpr) -> Value {
    Value::Tensor(ctx.shape(&s))
}

fn c(n: i64) -> NumExpr {
    NumExpr::Const(n)
}

fn one_dim(d: NumExpr) -> ShapeExpr {
    ShapeExpr::Tuple(vec![d])
}

fn sum(items: impl IntoIterator<Item = NumExpr>) -> NumExpr {
    items.into_iter().reduce(|a, b| a + b).unwrap_or(c(0))
}

fn product(items: impl IntoIterator<Item = NumExpr>) -> NumExpr {
    items.into_iter().reduce(|a, b| a * b).unwrap_or(c(1))
}

/// Resolves a possibly negative dimension index against `rank`; `extra` is
/// 1 for operations inserting a dimension.
fn norm_dim(ctx: &OpCtx, d: &NumExpr, rank: &NumExpr, extra: i64) -> NumExpr {
    match ctx.konst(d) {
        Some(k) if k < 0 => ctx.num(&(rank.clone() + (k + extra))),
        Some(k) => c(k),
        None => d.clone(),
    }
}

/// `t[0:d] @ mid @ t[d+1:rank(t)]`.
fn replace_dim(t: &ShapeExpr, d: &NumExpr, mid: ShapeExpr) -> ShapeExpr {
    t.clone()
        .slice(0, d.clone())
        .concat(mid)
        .concat(t.clone().slice(d.clone() + 1, t.rank_expr()))
}

fn in_range(ctx: &mut OpCtx, d: &NumExpr, hi_exclusive: NumExpr) {
    ctx.soft(c(0).le(d.clone()));
    ctx.soft(d.clone().lt(hi_exclusive));
}

fn scalar_or_tensor(ctx: &OpCtx, v: &Value, what: &str) -> Result<Option<ShapeExpr>, OpError> {
    match v {
        Value::Num(_) | Value::Bool(_) => Ok(None),
        other => as_tensor(ctx, other, what).map(Some),
    }
}

// ---- elementwise and constructors -------------------------------------

fn identity(ctx: &mut OpCtx, a: &Args) -> R {
    Ok(Value::Tensor(a.tensor(ctx, 0, "input")?))
}

fn softmax(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let r = t.rank_expr();
    let d = norm_dim(ctx, &a.num(ctx, 1, "dim")?, &r, 0);
    in_range(ctx, &d, r);
    Ok(Value::Tensor(t))
}

fn literal_shape(ctx: &OpCtx, v: &Value) -> Result<Vec<NumExpr>, OpError> {
    match v {
        Value::Num(_) | Value::Bool(_) => Ok(Vec::new()),
        Value::List(items) | Value::Tuple(items) => {
            let inner = match items.first() {
                Some(x) => literal_shape(ctx, x)?,
                None => Vec::new(),
            };
            for x in items.iter().skip(1) {
                if literal_shape(ctx, x)? != inner {
                    return Err(ctx.bad("nested lists must be rectangular"));
                }
            }
            let mut dims = vec![c(items.len() as i64)];
            dims.extend(inner);
            Ok(dims)
        }
        other => Err(ctx.bad(format!("cannot build a tensor from {}", other.kind_name()))),
    }
}

fn scalar(ctx: &mut OpCtx, a: &Args) -> R {
    let dims = literal_shape(ctx, a.req(ctx, 0, "data")?)?;
    Ok(Value::Tensor(ShapeExpr::Tuple(dims)))
}

fn is_same_shape(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let y = a.tensor(ctx, 1, "other")?;
    ctx.soft(x.clone().eq(y));
    Ok(Value::Tensor(x))
}

fn ones(ctx: &mut OpCtx, a: &Args) -> R {
    let dims = a.dims_from(ctx, 0, "size")?;
    for d in &dims {
        ctx.soft(c(0).le(d.clone()));
    }
    Ok(tensor(ctx, ShapeExpr::Tuple(dims)))
}

fn eye(ctx: &mut OpCtx, a: &Args) -> R {
    let n = a.num(ctx, 0, "n")?;
    let m = a.opt_num(ctx, 1, "m")?.unwrap_or_else(|| n.clone());
    ctx.soft(c(0).le(n.clone()));
    ctx.soft(c(0).le(m.clone()));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![n, m])))
}

fn arange(ctx: &mut OpCtx, a: &Args) -> R {
    let first = a.num(ctx, 0, "start")?;
    let len = match a.opt_num(ctx, 1, "end")? {
        None => first,
        Some(end) => {
            ctx.soft(first.clone().le(end.clone()));
            end - first
        }
    };
    ctx.soft(c(0).le(len.clone()));
    Ok(tensor(ctx, one_dim(len)))
}

fn size(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    match a.opt_num(ctx, 1, "dim")? {
        None => Ok(Value::Size(t)),
        Some(d) => {
            let r = t.rank_expr();
            let d = norm_dim(ctx, &d, &r, 0);
            in_range(ctx, &d, r);
            Ok(Value::Num(ctx.num(&t.dim(d))))
        }
    }
}

fn dim(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    Ok(Value::Num(ctx.num(&t.rank_expr())))
}

fn numel(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    Ok(Value::Num(ctx.num(&NumExpr::prod(t))))
}

fn item(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    ctx.soft(NumExpr::prod(t).eq(1));
    Ok(Value::Num(ctx.fresh("item")))
}

fn len(ctx: &mut OpCtx, a: &Args) -> R {
    match a.req(ctx, 0, "obj")? {
        Value::Tensor(t) => {
            ctx.soft(c(1).le(t.rank_expr()));
            Ok(Value::Num(ctx.num(&t.dim(0))))
        }
        Value::Tuple(items) | Value::List(items) => Ok(Value::int(items.len() as i64)),
        Value::Size(s) => Ok(Value::Num(ctx.num(&s.rank_expr()))),
        other => Err(ctx.bad(format!("len() of {}", other.kind_name()))),
    }
}

fn noop(_ctx: &mut OpCtx, _a: &Args) -> R {
    Ok(Value::None)
}

// ---- broadcasting and products ----------------------------------------

/// Right-aligned broadcast of two shapes of known rank.
pub(super) fn broadcast_shapes(ctx: &mut OpCtx, x: &ShapeExpr, y: &ShapeExpr) -> Result<ShapeExpr, OpError> {
    let xd = ctx.dims(x, "first operand")?;
    let yd = ctx.dims(y, "second operand")?;
    let n = xd.len().max(yd.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = (i + xd.len()).checked_sub(n).map(|k| xd[k].clone());
        let b = (i + yd.len()).checked_sub(n).map(|k| yd[k].clone());
        out.push(match (a, b) {
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => {
                if ctx.konst(&a) == Some(1) {
                    b
                } else if ctx.konst(&b) == Some(1) || a == b {
                    a
                } else {
                    ctx.soft(a.clone().eq(b));
                    a
                }
            }
            (None, None) => unreachable!(),
        });
    }
    Ok(ShapeExpr::Tuple(out))
}

fn broadcast(ctx: &mut OpCtx, a: &Args) -> R {
    let x = scalar_or_tensor(ctx, a.req(ctx, 0, "input")?, "input")?;
    let y = scalar_or_tensor(ctx, a.req(ctx, 1, "other")?, "other")?;
    match (x, y) {
        (Some(x), Some(y)) => {
            let s = broadcast_shapes(ctx, &x, &y)?;
            Ok(tensor(ctx, s))
        }
        (Some(t), None) | (None, Some(t)) => Ok(Value::Tensor(t)),
        (None, None) => Err(ctx.bad("expects at least one tensor operand")),
    }
}

fn mm(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let y = a.tensor(ctx, 1, "mat2")?;
    ctx.soft(x.rank_expr().eq(2));
    ctx.soft(y.rank_expr().eq(2));
    ctx.soft(x.dim(1).eq(y.dim(0)));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![x.dim(0), y.dim(1)])))
}

fn matmul(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let y = a.tensor(ctx, 1, "other")?;
    let xd = ctx.dims(&x, "input")?;
    let yd = ctx.dims(&y, "other")?;
    let (rx, ry) = (xd.len(), yd.len());
    if rx == 0 || ry == 0 {
        ctx.soft(BoolExpr::Const(false));
        return Ok(Value::Tensor(ShapeExpr::Tuple(Vec::new())));
    }
    let out = match (rx, ry) {
        (1, 1) => {
            ctx.soft(xd[0].clone().eq(yd[0].clone()));
            Vec::new()
        }
        (1, _) => {
            ctx.soft(xd[0].clone().eq(yd[ry - 2].clone()));
            let mut d = yd[..ry - 2].to_vec();
            d.push(yd[ry - 1].clone());
            d
        }
        (_, 1) => {
            ctx.soft(xd[rx - 1].clone().eq(yd[0].clone()));
            xd[..rx - 1].to_vec()
        }
        _ => {
            ctx.soft(xd[rx - 1].clone().eq(yd[ry - 2].clone()));
            let batch = broadcast_shapes(ctx, &ShapeExpr::Tuple(xd[..rx - 2].to_vec()), &ShapeExpr::Tuple(yd[..ry - 2].to_vec()))?;
            let mut d = batch.as_tuple().map(<[NumExpr]>::to_vec).unwrap_or_default();
            d.push(xd[rx - 2].clone());
            d.push(yd[ry - 1].clone());
            d
        }
    };
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn bmm(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let y = a.tensor(ctx, 1, "mat2")?;
    ctx.soft(x.rank_expr().eq(3));
    ctx.soft(y.rank_expr().eq(3));
    ctx.soft(x.dim(0).eq(y.dim(0)));
    ctx.soft(x.dim(2).eq(y.dim(1)));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![x.dim(0), x.dim(1), y.dim(2)])))
}

fn linear(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let inf = a.num(ctx, 1, "in_features")?;
    let outf = a.num(ctx, 2, "out_features")?;
    let r = x.rank_expr();
    ctx.soft(c(1).le(r.clone()));
    ctx.soft(x.dim(r.clone() - 1).eq(inf));
    Ok(tensor(ctx, x.clone().slice(0, r - 1).concat(one_dim(outf))))
}

fn embedding(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let n = a.num(ctx, 1, "num_embeddings")?;
    let d = a.num(ctx, 2, "embedding_dim")?;
    ctx.soft(c(0).lt(n));
    ctx.soft(c(0).lt(d.clone()));
    Ok(tensor(ctx, x.concat(one_dim(d))))
}

// ---- shape manipulation ------------------------------------------------

fn transpose(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let r = t.rank_expr();
    let mut d0 = norm_dim(ctx, &a.num(ctx, 1, "dim0")?, &r, 0);
    let mut d1 = norm_dim(ctx, &a.num(ctx, 2, "dim1")?, &r, 0);
    if let (Some(x), Some(y)) = (ctx.konst(&d0), ctx.konst(&d1)) {
        if x > y {
            std::mem::swap(&mut d0, &mut d1);
        }
    }
    ctx.soft(c(0).le(d0.clone()));
    ctx.soft(d0.clone().lt(d1.clone()));
    ctx.soft(d1.clone().lt(r.clone()));
    let s = t
        .clone()
        .slice(0, d0.clone())
        .concat(one_dim(t.dim(d1.clone())))
        .concat(t.clone().slice(d0.clone() + 1, d1.clone()))
        .concat(one_dim(t.dim(d0)))
        .concat(t.clone().slice(d1 + 1, r));
    Ok(tensor(ctx, s))
}

fn t2(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let d = ctx.dims(&t, "input")?;
    Ok(match d.len() {
        0 | 1 => Value::Tensor(t),
        2 => tensor(ctx, ShapeExpr::Tuple(vec![d[1].clone(), d[0].clone()])),
        _ => {
            ctx.soft(BoolExpr::Const(false));
            Value::Tensor(t)
        }
    })
}

fn permute(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let d = ctx.dims(&t, "input")?;
    let r = d.len() as i64;
    let mut perm = Vec::new();
    for p in a.dims_from(ctx, 1, "dims")? {
        let k = ctx.konst(&p).ok_or_else(|| ctx.undetermined("permutation"))?;
        perm.push(if k < 0 { k + r } else { k });
    }
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    let ok = sorted == (0..r).collect::<Vec<_>>();
    ctx.soft(BoolExpr::Const(ok));
    if !ok {
        return Ok(Value::Tensor(t));
    }
    Ok(tensor(ctx, ShapeExpr::Tuple(perm.iter().map(|&k| d[k as usize].clone()).collect())))
}

fn reshape(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let dims = a.dims_from(ctx, 1, "shape")?;
    if dims.is_empty() {
        return Err(ctx.bad("target shape must not be empty"));
    }
    let inferred: Vec<usize> = dims.iter().enumerate().filter(|(_, d)| ctx.konst(d) == Some(-1)).map(|(i, _)| i).collect();
    let total = NumExpr::prod(t);
    match inferred[..] {
        [] => {
            for d in &dims {
                ctx.soft(c(0).lt(d.clone()));
            }
            ctx.soft(total.eq(product(dims.iter().cloned())));
            Ok(tensor(ctx, ShapeExpr::Tuple(dims)))
        }
        [k] => {
            let others: Vec<NumExpr> = dims.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, d)| d.clone()).collect();
            for d in &others {
                ctx.soft(c(0).lt(d.clone()));
            }
            let p = product(others);
            ctx.soft(total.clone().modulo(p.clone()).eq(0));
            let mut out = dims;
            out[k] = total.floor_div(p);
            Ok(tensor(ctx, ShapeExpr::Tuple(out)))
        }
        _ => Err(OpError::MultipleInferredDims { op: ctx.op.to_string() }),
    }
}

fn flatten(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let r = t.rank_expr();
    let s = norm_dim(ctx, &a.num_or(ctx, 1, "start_dim", 0)?, &r, 0);
    let e = norm_dim(ctx, &a.num_or(ctx, 2, "end_dim", -1)?, &r, 0);
    ctx.soft(c(0).le(s.clone()));
    ctx.soft(s.clone().le(e.clone()));
    ctx.soft(e.clone().lt(r.clone()));
    let mid = NumExpr::prod(t.clone().slice(s.clone(), e.clone() + 1));
    Ok(tensor(ctx, t.clone().slice(0, s).concat(one_dim(mid)).concat(t.clone().slice(e + 1, r))))
}

fn unsqueeze(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let r = t.rank_expr();
    let d = norm_dim(ctx, &a.num(ctx, 1, "dim")?, &r, 1);
    ctx.soft(c(0).le(d.clone()));
    ctx.soft(d.clone().le(r.clone()));
    Ok(tensor(ctx, t.clone().slice(0, d.clone()).concat(one_dim(c(1))).concat(t.clone().slice(d, r))))
}

/// Whether dimension value `d` equals 1 on this path.
fn is_one(ctx: &OpCtx, d: &NumExpr) -> Result<bool, OpError> {
    match ctx.konst(d) {
        Some(k) => Ok(k == 1),
        None => {
            let i = crate::simplify::interval_of(&ctx.num(d), ctx.ranges);
            if i.contains(1) {
                Err(ctx.undetermined("whether the squeezed dimension is 1"))
            } else {
                Ok(false)
            }
        }
    }
}

fn squeeze(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    match a.opt_num(ctx, 1, "dim")? {
        None => {
            let dims = ctx.dims(&t, "input")?;
            let mut out = Vec::new();
            for d in dims {
                if !is_one(ctx, &d)? {
                    out.push(d);
                }
            }
            Ok(tensor(ctx, ShapeExpr::Tuple(out)))
        }
        Some(d) => {
            let r = t.rank_expr();
            let d = norm_dim(ctx, &d, &r, 0);
            in_range(ctx, &d, r.clone());
            let (Some(k), Some(rk)) = (ctx.konst(&d), ctx.rank(&t)) else {
                return Err(ctx.undetermined("squeezed dimension"));
            };
            if k < 0 || k as usize >= rk {
                return Ok(Value::Tensor(t));
            }
            if is_one(ctx, &t.dim(k))? {
                Ok(tensor(ctx, t.clone().slice(0, k).concat(t.clone().slice(k + 1, r))))
            } else {
                Ok(Value::Tensor(t))
            }
        }
    }
}

fn expand_to(ctx: &mut OpCtx, t: ShapeExpr, sizes: Vec<NumExpr>) -> R {
    let td = ctx.dims(&t, "input")?;
    if sizes.len() < td.len() {
        ctx.soft(BoolExpr::Const(false));
        return Ok(Value::Tensor(t));
    }
    let lead = sizes.len() - td.len();
    let mut out = Vec::with_capacity(sizes.len());
    for (i, s) in sizes.into_iter().enumerate() {
        let keep = ctx.konst(&s) == Some(-1);
        if i < lead {
            ctx.soft(BoolExpr::Const(!keep));
            ctx.soft(c(0).le(s.clone()));
            out.push(s);
            continue;
        }
        let d = td[i - lead].clone();
        if keep {
            out.push(d);
        } else if ctx.konst(&d) == Some(1) {
            ctx.soft(c(0).le(s.clone()));
            out.push(s);
        } else {
            ctx.soft(d.eq(s.clone()));
            out.push(s);
        }
    }
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn expand(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let sizes = a.dims_from(ctx, 1, "size")?;
    expand_to(ctx, t, sizes)
}

fn expand_as(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let o = a.tensor(ctx, 1, "other")?;
    let sizes = ctx.dims(&o, "other")?;
    expand_to(ctx, t, sizes)
}

fn repeat(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let td = ctx.dims(&t, "input")?;
    let reps = a.dims_from(ctx, 1, "repeats")?;
    if reps.len() < td.len() {
        ctx.soft(BoolExpr::Const(false));
        return Ok(Value::Tensor(t));
    }
    let lead = reps.len() - td.len();
    let mut out = Vec::new();
    for (i, r) in reps.into_iter().enumerate() {
        ctx.soft(c(0).le(r.clone()));
        out.push(if i < lead { r } else { td[i - lead].clone() * r });
    }
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn reduced(ctx: &mut OpCtx, a: &Args, t: &ShapeExpr) -> Result<Option<ShapeExpr>, OpError> {
    let Some(d) = a.opt_num(ctx, 1, "dim")? else {
        return Ok(None);
    };
    let keepdim = a.flag(ctx, 2, "keepdim", false)?;
    let r = t.rank_expr();
    let d = norm_dim(ctx, &d, &r, 0);
    in_range(ctx, &d, r);
    let mid = ShapeExpr::Tuple(if keepdim { vec![c(1)] } else { Vec::new() });
    Ok(Some(replace_dim(t, &d, mid)))
}

fn reduce(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let s = reduced(ctx, a, &t)?.unwrap_or(ShapeExpr::Tuple(Vec::new()));
    Ok(tensor(ctx, s))
}

fn max(ctx: &mut OpCtx, a: &Args) -> R {
    if let Some(Value::Tensor(_)) = a.pos.get(1) {
        return broadcast(ctx, a);
    }
    let t = a.tensor(ctx, 0, "input")?;
    match reduced(ctx, a, &t)? {
        None => Ok(Value::Tensor(ShapeExpr::Tuple(Vec::new()))),
        Some(s) => {
            let v = tensor(ctx, s);
            Ok(Value::Tuple(vec![v.clone(), v]))
        }
    }
}

fn topk(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let k = a.num(ctx, 1, "k")?;
    let r = t.rank_expr();
    let d = norm_dim(ctx, &a.num_or(ctx, 2, "dim", -1)?, &r, 0);
    in_range(ctx, &d, r);
    ctx.soft(c(0).le(k.clone()));
    ctx.soft(k.clone().le(t.dim(d.clone())));
    let v = tensor(ctx, replace_dim(&t, &d, one_dim(k)));
    Ok(Value::Tuple(vec![v.clone(), v]))
}

fn cat(ctx: &mut OpCtx, a: &Args) -> R {
    let ts = as_tensors(ctx, a.req(ctx, 0, "tensors")?, "tensors")?;
    let Some(first) = ts.first().cloned() else {
        return Err(ctx.bad("expects at least one tensor"));
    };
    let r = first.rank_expr();
    let d = norm_dim(ctx, &a.num_or(ctx, 1, "dim", 0)?, &r, 0);
    in_range(ctx, &d, r.clone());
    for t in &ts[1..] {
        ctx.soft(t.rank_expr().eq(r.clone()));
        ctx.soft(t.clone().slice(0, d.clone()).eq(first.clone().slice(0, d.clone())));
        ctx.soft(t.clone().slice(d.clone() + 1, r.clone()).eq(first.clone().slice(d.clone() + 1, r.clone())));
    }
    let total = sum(ts.iter().map(|t| t.dim(d.clone())));
    Ok(tensor(ctx, replace_dim(&first, &d, one_dim(total))))
}

fn stack(ctx: &mut OpCtx, a: &Args) -> R {
    let ts = as_tensors(ctx, a.req(ctx, 0, "tensors")?, "tensors")?;
    let Some(first) = ts.first().cloned() else {
        return Err(ctx.bad("expects at least one tensor"));
    };
    for t in &ts[1..] {
        ctx.soft(t.clone().eq(first.clone()));
    }
    let r = first.rank_expr();
    let d = norm_dim(ctx, &a.num_or(ctx, 1, "dim", 0)?, &r, 1);
    ctx.soft(c(0).le(d.clone()));
    ctx.soft(d.clone().le(r.clone()));
    let n = c(ts.len() as i64);
    Ok(tensor(ctx, first.clone().slice(0, d.clone()).concat(one_dim(n)).concat(first.slice(d, r))))
}

/// `min(x, y)` when the order of the operands is determined.
fn min_of(ctx: &OpCtx, x: NumExpr, y: NumExpr) -> Result<NumExpr, OpError> {
    match ctx.nonneg(&(x.clone() - y.clone())) {
        Some(true) => Ok(y),
        Some(false) => Ok(x),
        None => Err(ctx.undetermined("diagonal length")),
    }
}

fn diag(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let k = a.num_or(ctx, 1, "diagonal", 0)?;
    let d = ctx.dims(&t, "input")?;
    match d.len() {
        1 => {
            let abs = match ctx.nonneg(&k) {
                Some(true) => k,
                Some(false) => c(0) - k,
                None => return Err(ctx.undetermined("sign of the diagonal offset")),
            };
            let n = d[0].clone() + abs;
            Ok(tensor(ctx, ShapeExpr::Tuple(vec![n.clone(), n])))
        }
        2 => {
            ctx.soft((c(0) - d[0].clone()).le(k.clone()));
            ctx.soft(k.clone().le(d[1].clone()));
            let n = match ctx.nonneg(&k) {
                Some(true) => min_of(ctx, d[0].clone(), d[1].clone() - k)?,
                Some(false) => min_of(ctx, d[0].clone() + k, d[1].clone())?,
                None => return Err(ctx.undetermined("sign of the diagonal offset")),
            };
            Ok(tensor(ctx, one_dim(n)))
        }
        _ => {
            ctx.soft(BoolExpr::Const(false));
            Ok(Value::Tensor(t))
        }
    }
}

fn narrow(ctx: &mut OpCtx, a: &Args) -> R {
    let t = a.tensor(ctx, 0, "input")?;
    let r = t.rank_expr();
    let d = norm_dim(ctx, &a.num(ctx, 1, "dim")?, &r, 0);
    let start = a.num(ctx, 2, "start")?;
    let length = a.num(ctx, 3, "length")?;
    in_range(ctx, &d, r);
    ctx.soft(c(0).le(start.clone()));
    ctx.soft(c(0).le(length.clone()));
    ctx.soft((start + length.clone()).le(t.dim(d.clone())));
    Ok(tensor(ctx, replace_dim(&t, &d, one_dim(length))))
}

// ---- convolution, pooling, normalization -------------------------------

fn window_out(size: NumExpr, k: &NumExpr, s: &NumExpr, p: &NumExpr, dil: &NumExpr) -> NumExpr {
    (size + p.clone() * 2 - dil.clone() * (k.clone() - 1) - 1).floor_div(s.clone()) + 1
}

fn conv2d(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let inc = a.num(ctx, 1, "in_channels")?;
    let outc = a.num(ctx, 2, "out_channels")?;
    let k = a.num(ctx, 3, "kernel_size")?;
    let s = a.num_or(ctx, 4, "stride", 1)?;
    let p = a.num_or(ctx, 5, "padding", 0)?;
    let dil = a.num_or(ctx, 6, "dilation", 1)?;
    ctx.soft(x.rank_expr().eq(4));
    ctx.soft(x.dim(1).eq(inc));
    for v in [&k, &s, &dil] {
        ctx.soft(c(0).lt(v.clone()));
    }
    ctx.soft(c(0).le(p.clone()));
    let h = window_out(x.dim(2), &k, &s, &p, &dil);
    let w = window_out(x.dim(3), &k, &s, &p, &dil);
    ctx.soft(c(1).le(h.clone()));
    ctx.soft(c(1).le(w.clone()));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![x.dim(0), outc, h, w])))
}

fn conv_transpose2d(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let inc = a.num(ctx, 1, "in_channels")?;
    let outc = a.num(ctx, 2, "out_channels")?;
    let k = a.num(ctx, 3, "kernel_size")?;
    let s = a.num_or(ctx, 4, "stride", 1)?;
    let p = a.num_or(ctx, 5, "padding", 0)?;
    let op = a.num_or(ctx, 6, "output_padding", 0)?;
    let dil = a.num_or(ctx, 7, "dilation", 1)?;
    ctx.soft(x.rank_expr().eq(4));
    ctx.soft(x.dim(1).eq(inc));
    for v in [&k, &s, &dil] {
        ctx.soft(c(0).lt(v.clone()));
    }
    ctx.soft(c(0).le(p.clone()));
    ctx.soft(c(0).le(op.clone()));
    ctx.soft(op.clone().lt(s.clone()));
    let out = |size: NumExpr| (size - 1) * s.clone() - p.clone() * 2 + dil.clone() * (k.clone() - 1) + op.clone() + 1;
    let h = out(x.dim(2));
    let w = out(x.dim(3));
    ctx.soft(c(1).le(h.clone()));
    ctx.soft(c(1).le(w.clone()));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![x.dim(0), outc, h, w])))
}

/// Leading (batch, channel) dims of a 3- or 4-rank spatial input.
fn spatial_lead(ctx: &mut OpCtx, x: &ShapeExpr) -> Result<Option<Vec<NumExpr>>, OpError> {
    let d = ctx.dims(x, "input")?;
    if d.len() == 3 || d.len() == 4 {
        Ok(Some(d))
    } else {
        ctx.soft(BoolExpr::Const(false));
        Ok(None)
    }
}

fn pool2d(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let k = a.num(ctx, 1, "kernel_size")?;
    let s = a.opt_num(ctx, 2, "stride")?.unwrap_or_else(|| k.clone());
    let p = a.num_or(ctx, 3, "padding", 0)?;
    let dil = a.num_or(ctx, 4, "dilation", 1)?;
    let Some(d) = spatial_lead(ctx, &x)? else {
        return Ok(Value::Tensor(x));
    };
    for v in [&k, &s, &dil] {
        ctx.soft(c(0).lt(v.clone()));
    }
    ctx.soft(c(0).le(p.clone()));
    ctx.soft((p.clone() * 2).le(k.clone()));
    let n = d.len();
    let h = window_out(d[n - 2].clone(), &k, &s, &p, &dil);
    let w = window_out(d[n - 1].clone(), &k, &s, &p, &dil);
    ctx.soft(c(1).le(h.clone()));
    ctx.soft(c(1).le(w.clone()));
    let mut out = d[..n - 2].to_vec();
    out.extend([h, w]);
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn pair(ctx: &OpCtx, v: &Value, what: &str) -> Result<(NumExpr, NumExpr), OpError> {
    let d = as_dims(ctx, v, what)?;
    match &d[..] {
        [x] => Ok((x.clone(), x.clone())),
        [x, y] => Ok((x.clone(), y.clone())),
        _ => Err(ctx.bad(format!("'{what}' must be one or two numbers"))),
    }
}

fn adaptive_pool2d(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let (oh, ow) = pair(ctx, a.req(ctx, 1, "output_size")?, "output_size")?;
    let Some(d) = spatial_lead(ctx, &x)? else {
        return Ok(Value::Tensor(x));
    };
    ctx.soft(c(1).le(oh.clone()));
    ctx.soft(c(1).le(ow.clone()));
    let mut out = d[..d.len() - 2].to_vec();
    out.extend([oh, ow]);
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn interpolate(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let d = ctx.dims(&x, "input")?;
    if d.len() < 3 {
        ctx.soft(BoolExpr::Const(false));
        return Ok(Value::Tensor(x));
    }
    let spatial = d.len() - 2;
    let size = a.get(1, "size").filter(|v| **v != Value::None);
    let scale = a.get(2, "scale_factor").filter(|v| **v != Value::None);
    let new: Vec<NumExpr> = match (size, scale) {
        (Some(v), None) => {
            let dims = as_dims(ctx, v, "size")?;
            match dims.len() {
                1 => vec![dims[0].clone(); spatial],
                n if n == spatial => dims,
                _ => {
                    ctx.soft(BoolExpr::Const(false));
                    return Ok(Value::Tensor(x));
                }
            }
        }
        (None, Some(v)) => {
            let f = as_num(ctx, v, "scale_factor")?;
            d[2..].iter().map(|x| x.clone() * f.clone()).collect()
        }
        _ => return Err(ctx.bad("exactly one of 'size' and 'scale_factor' must be given")),
    };
    for n in &new {
        ctx.soft(c(1).le(n.clone()));
    }
    let mut out = d[..2].to_vec();
    out.extend(new);
    Ok(tensor(ctx, ShapeExpr::Tuple(out)))
}

fn batch_norm2d(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let nf = a.num(ctx, 1, "num_features")?;
    ctx.soft(x.rank_expr().eq(4));
    ctx.soft(x.dim(1).eq(nf));
    Ok(Value::Tensor(x))
}

fn layer_norm(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let shape = as_dims(ctx, a.req(ctx, 1, "normalized_shape")?, "normalized_shape")?;
    let k = shape.len() as i64;
    let r = x.rank_expr();
    ctx.soft(c(k).le(r.clone()));
    ctx.soft(x.clone().slice(r.clone() - k, r).eq(ShapeExpr::Tuple(shape)));
    Ok(Value::Tensor(x))
}

fn nll_loss(ctx: &mut OpCtx, a: &Args) -> R {
    let out = a.tensor(ctx, 0, "input")?;
    let target = a.tensor(ctx, 1, "target")?;
    let r = out.rank_expr();
    ctx.soft(c(2).le(r.clone()));
    ctx.soft(out.clone().slice(0, 1).concat(out.clone().slice(2, r)).eq(target));
    Ok(Value::Tensor(ShapeExpr::Tuple(Vec::new())))
}

fn mse_loss(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let y = a.tensor(ctx, 1, "target")?;
    ctx.soft(x.eq(y));
    Ok(Value::Tensor(ShapeExpr::Tuple(Vec::new())))
}

fn pixel_shuffle(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let f = a.num(ctx, 1, "upscale_factor")?;
    let r = x.rank_expr();
    let f2 = f.clone() * f.clone();
    ctx.soft(c(3).le(r.clone()));
    ctx.soft(c(0).lt(f.clone()));
    let ch = x.dim(r.clone() - 3);
    ctx.soft(ch.clone().modulo(f2.clone()).eq(0));
    let tail = ShapeExpr::Tuple(vec![ch.floor_div(f2), x.dim(r.clone() - 2) * f.clone(), x.dim(r.clone() - 1) * f]);
    Ok(tensor(ctx, x.clone().slice(0, r - 3).concat(tail)))
}

fn pad(ctx: &mut OpCtx, a: &Args) -> R {
    let x = a.tensor(ctx, 0, "input")?;
    let pads = as_dims(ctx, a.req(ctx, 1, "pad")?, "pad")?;
    if pads.len() % 2 != 0 {
        return Err(ctx.bad("padding list must have even length"));
    }
    let m = (pads.len() / 2) as i64;
    let r = x.rank_expr();
    ctx.soft(c(m).le(r.clone()));
    // pads[2i], pads[2i+1] apply to dimension r-1-i.
    let mut tail = Vec::new();
    for j in 0..m {
        let i = (m - 1 - j) as usize;
        let d = x.dim(r.clone() - m + j) + pads[2 * i].clone() + pads[2 * i + 1].clone();
        ctx.soft(c(0).le(d.clone()));
        tail.push(d);
    }
    Ok(tensor(ctx, x.clone().slice(0, r - m).concat(ShapeExpr::Tuple(tail))))
}

// ---- inputs and randomness ---------------------------------------------

fn dataset(ctx: &mut OpCtx, a: &Args) -> R {
    let name: Arc<str> = match a.req(ctx, 0, "root")? {
        Value::Str(s) => s.clone(),
        other => return Err(ctx.bad(format!("dataset name must be a string, got {}", other.kind_name()))),
    };
    let key = name.trim_end_matches('/').rsplit('/').next().unwrap_or(&name).to_ascii_lowercase();
    let spec = ctx.datasets.get(&key).cloned().unwrap_or_default();
    let stub = DATASET_STUBS.iter().find(|(n, _, _)| *n == key);
    let batch = a.num_or(ctx, 1, "batch_size", 1)?;
    let drop_last = a.flag(ctx, 2, "drop_last", false)?;
    ctx.soft(c(0).lt(batch.clone()));
    let length = match (a.opt_num(ctx, 4, "length")?, spec.length, stub) {
        (Some(n), _, _) => n,
        (None, Some(n), _) => c(n),
        (None, None, Some((_, n, _))) => c(*n),
        (None, None, None) => {
            let n = ctx.fresh(&format!("len_{key}"));
            ctx.hard(c(1).le(n.clone()));
            n
        }
    };
    let item = match (a.get(3, "item_shape"), &spec.item_shape, stub) {
        (Some(v), _, _) => ShapeExpr::Tuple(as_dims(ctx, v, "item_shape")?),
        (None, Some(d), _) => ShapeExpr::tuple(d.iter().copied()),
        (None, None, Some((_, _, d))) => ShapeExpr::tuple(d.iter().copied()),
        (None, None, None) => {
            let hint = format!("item_{key}@{}:{}", ctx.origin.file, ctx.origin.line);
            ShapeExpr::Sym(ctx.syms.fresh(Sort::Shape, hint))
        }
    };
    let label = ShapeExpr::tuple(spec.label_shape.unwrap_or_default());
    Ok(Value::Dataset(Dataset {
        name: Arc::from(key.as_str()),
        length: ctx.num(&length),
        batch: ctx.num(&batch),
        drop_last,
        item,
        label,
    }))
}

fn read_image(ctx: &mut OpCtx, a: &Args) -> R {
    a.req(ctx, 0, "path")?;
    let ch = ctx.fresh("channels");
    let h = ctx.fresh("height");
    let w = ctx.fresh("width");
    ctx.hard(c(1).le(ch.clone()));
    ctx.hard(ch.clone().le(4));
    ctx.hard(c(0).lt(h.clone()));
    ctx.hard(c(0).lt(w.clone()));
    Ok(Value::Tensor(ShapeExpr::Tuple(vec![ch, h, w])))
}

fn resize(ctx: &mut OpCtx, a: &Args) -> R {
    let img = a.tensor(ctx, 0, "img")?;
    let (h, w) = pair(ctx, a.req(ctx, 1, "size")?, "size")?;
    ctx.soft(img.rank_expr().eq(3));
    ctx.soft(c(0).lt(h.clone()));
    ctx.soft(c(0).lt(w.clone()));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![img.dim(0), h, w])))
}

fn convert_channels(ctx: &mut OpCtx, a: &Args, ch: i64) -> R {
    let img = a.tensor(ctx, 0, "img")?;
    ctx.soft(img.rank_expr().eq(3));
    Ok(tensor(ctx, ShapeExpr::Tuple(vec![c(ch), img.dim(1), img.dim(2)])))
}

fn convert_monochrome(ctx: &mut OpCtx, a: &Args) -> R {
    convert_channels(ctx, a, 1)
}

fn convert_rgb(ctx: &mut OpCtx, a: &Args) -> R {
    convert_channels(ctx, a, 3)
}

fn rand_int(ctx: &mut OpCtx, a: &Args) -> R {
    let lo = a.num(ctx, 0, "low")?;
    let hi = a.num(ctx, 1, "high")?;
    let v = ctx.fresh("rand");
    ctx.hard(lo.le(v.clone()));
    ctx.hard(v.clone().le(hi));
    Ok(Value::Num(v))
}

macro_rules! rule {
    ($name:literal, [$($alias:literal),*], [$($param:literal),*], $result:literal, $cons:literal, $ext:expr, $f:expr) => {
        OpRule {
            name: $name,
            aliases: &[$($alias),*],
            params: &[$($param),*],
            result: $result,
            constraints: $cons,
            extrapolated: $ext,
            apply: $f,
        }
    };
}

pub(super) static CATALOG: &[OpRule] = &[
    rule!("identity", ["relu", "sigmoid", "tanh", "dropout", "clone", "detach", "contiguous", "to_tensor", "float", "long", "type", "to", "cuda", "cpu", "abs", "exp", "log", "neg", "zeros_like", "ones_like", "randn_like"],
        ["input", "args*"], "`input`", "none", false, identity),
    rule!("softmax", ["log_softmax"], ["input", "dim"], "`input`", "`-r <= dim < r`", true, softmax),
    rule!("scalar", ["tensor"], ["data"], "`()` for a number, list lengths for nested lists", "none", false, scalar),
    rule!("is_same_shape", [], ["input", "other"], "`input`", "`input = other`", false, is_same_shape),
    rule!("ones", ["zeros", "randn", "rand", "empty"], ["size*"], "`(d0, ..., dn)`", "`0 <= di`", false, ones),
    rule!("eye", [], ["n", "m?"], "`(n, m)`, `m` defaults to `n`", "`0 <= n`, `0 <= m`", true, eye),
    rule!("arange", [], ["start", "end?"], "`(end - start)` or `(start)` with one argument", "`start <= end`, `0 <= length`", true, arange),
    rule!("size", [], ["input", "dim?"], "the size of `input`, or `input[dim]`", "`-r <= dim < r`", false, size),
    rule!("dim", ["ndim"], ["input"], "`r`", "none", false, dim),
    rule!("numel", [], ["input"], "product of the dims", "none", false, numel),
    rule!("item", [], ["input"], "fresh number", "`prod(input) = 1`", false, item),
    rule!("len", [], ["obj"], "`obj[0]` for a tensor, element count otherwise", "`1 <= r` for a tensor", false, len),
    rule!("noop", ["backward", "zero_grad", "step", "print", "eval", "manual_seed"], ["args*"], "None", "none", false, noop),
    rule!("broadcast", ["add", "sub", "mul", "div", "floordiv", "maximum", "minimum", "pow"], ["input", "other"],
        "right-aligned broadcast; a dim equal to 1 takes the other operand's dim", "`x = y` for each aligned pair where neither dim is 1; ranks must be known", false, broadcast),
    rule!("mm", [], ["input", "mat2"], "`(input[0], mat2[1])`", "`rank(input) = 2`, `rank(mat2) = 2`, `input[1] = mat2[0]`", false, mm),
    rule!("matmul", [], ["input", "other"], "vector/matrix product with broadcast batch dims", "inner dims equal; ranks must be known", true, matmul),
    rule!("bmm", [], ["input", "mat2"], "`(input[0], input[1], mat2[2])`", "both rank 3, `input[0] = mat2[0]`, `input[2] = mat2[1]`", true, bmm),
    rule!("linear", [], ["input", "in_features", "out_features"], "`input[0:r-1] @ (out_features)`", "`1 <= r`, `input[r-1] = in_features`", false, linear),
    rule!("embedding", [], ["input", "num_embeddings", "embedding_dim"], "`input @ (embedding_dim)`", "`0 < num_embeddings`, `0 < embedding_dim`", true, embedding),
    rule!("transpose", [], ["input", "dim0", "dim1"], "`input` with dims `dim0` and `dim1` swapped", "`0 <= dim0 < dim1 < r` after normalizing negative dims and ordering constant dims", false, transpose),
    rule!("t", [], ["input"], "`input` for rank 0 or 1, swapped dims for rank 2", "`r <= 2`", true, t2),
    rule!("permute", [], ["input", "dims*"], "`(input[p0], ..., input[pn])`", "dims form a permutation of `0..r`", true, permute),
    rule!("reshape", ["view"], ["input", "shape*"], "target dims; a `-1` dim becomes `prod(input) // prod(others)`", "`0 < d` for explicit dims; `prod(input) = prod(dims)`, or `prod(input) % prod(others) = 0` with `-1`", false, reshape),
    rule!("flatten", [], ["input", "start_dim", "end_dim"], "`input[0:s] @ (prod(input[s:e+1])) @ input[e+1:r]`", "`0 <= s <= e < r`", true, flatten),
    rule!("unsqueeze", [], ["input", "dim"], "`input[0:d] @ (1) @ input[d:r]`", "`0 <= d <= r`", true, unsqueeze),
    rule!("squeeze", [], ["input", "dim?"], "`input` without dims equal to 1", "`-r <= dim < r`; each squeezed dim must be decidably 1 or not", true, squeeze),
    rule!("expand", [], ["input", "size*"], "`size`, with `-1` keeping the input dim", "`len(size) >= r`; `input[i] = size[i]` unless `input[i]` is 1", true, expand),
    rule!("expand_as", [], ["input", "other"], "shape of `other`", "as `expand`", true, expand_as),
    rule!("repeat", [], ["input", "repeats*"], "leading repeats, then `input[i] * repeats[i]`", "`len(repeats) >= r`, `0 <= repeats[i]`", true, repeat),
    rule!("sum", ["mean", "prod", "std", "var", "norm", "amax", "amin", "logsumexp", "argmax", "argmin", "all", "any"], ["input", "dim?", "keepdim?"],
        "`()` without `dim`; otherwise `dim` removed, or set to 1 with `keepdim`", "`-r <= dim < r`", false, reduce),
    rule!("max", ["min"], ["input", "dim?", "keepdim?"], "as `sum`, as a (values, indices) pair when `dim` is given; elementwise with a tensor second argument", "`-r <= dim < r`", true, max),
    rule!("topk", [], ["input", "k", "dim", "largest?", "sorted?"], "(values, indices), both `input` with `dim` set to `k`", "`-r <= dim < r`, `0 <= k <= input[dim]`", true, topk),
    rule!("cat", ["concat"], ["tensors", "dim"], "first tensor with `dim` set to the sum of the inputs' `dim`", "equal ranks, equal dims except `dim`, `-r <= dim < r`", false, cat),
    rule!("stack", [], ["tensors", "dim"], "`t[0:d] @ (n) @ t[d:r]`", "all shapes equal, `0 <= d <= r`", true, stack),
    rule!("diag", [], ["input", "diagonal"], "rank 1: `(n+|k|, n+|k|)`; rank 2: the length of diagonal `k`", "rank 1 or 2; for rank 2 `-input[0] <= k <= input[1]`", false, diag),
    rule!("narrow", [], ["input", "dim", "start", "length"], "`input` with `dim` set to `length`", "`0 <= start`, `0 <= length`, `start + length <= input[dim]`", true, narrow),
    rule!("conv2d", [], ["input", "in_channels", "out_channels", "kernel_size", "stride", "padding", "dilation"],
        "`(input[0], out_channels, H', W')`, `H' = (H + 2p - d(k-1) - 1) // s + 1`", "`r = 4`, `input[1] = in_channels`, `0 < k, s, d`, `0 <= p`, `1 <= H', W'`", true, conv2d),
    rule!("conv_transpose2d", [], ["input", "in_channels", "out_channels", "kernel_size", "stride", "padding", "output_padding", "dilation"],
        "`(input[0], out_channels, H', W')`, `H' = (H - 1)s - 2p + d(k-1) + op + 1`", "`r = 4`, `input[1] = in_channels`, `0 <= op < s`, `1 <= H', W'`", true, conv_transpose2d),
    rule!("max_pool2d", ["avg_pool2d"], ["input", "kernel_size", "stride?", "padding", "dilation"],
        "`input[0:r-2] @ (H', W')` with the conv2d formula; stride defaults to the kernel", "`r` is 3 or 4, `2p <= k`, `1 <= H', W'`", true, pool2d),
    rule!("adaptive_avg_pool2d", ["adaptive_max_pool2d"], ["input", "output_size"], "`input[0:r-2] @ output_size`", "`r` is 3 or 4", true, adaptive_pool2d),
    rule!("batch_norm2d", [], ["input", "num_features"], "`input`", "`r = 4`, `input[1] = num_features`", true, batch_norm2d),
    rule!("layer_norm", [], ["input", "normalized_shape"], "`input`", "`input[r-k:r] = normalized_shape`", true, layer_norm),
    rule!("interpolate", [], ["input", "size?", "scale_factor?"], "`input[0:2]` then `size` or `input[i] * scale_factor`", "`3 <= r`, new dims at least 1", true, interpolate),
    rule!("pixel_shuffle", [], ["input", "upscale_factor"], "`(.., C // f^2, H f, W f)`", "`3 <= r`, `C % f^2 = 0`", true, pixel_shuffle),
    rule!("pad", [], ["input", "pad"], "trailing dims grown by their pad pairs", "`len(pad) / 2 <= r`, padded dims nonnegative", true, pad),
    rule!("nll_loss", ["cross_entropy"], ["input", "target"], "`()`", "`2 <= r`, `input[0:1] @ input[2:r] = target`", false, nll_loss),
    rule!("mse_loss", ["l1_loss", "smooth_l1_loss"], ["input", "target"], "`()`", "`input = target`", true, mse_loss),
    rule!("dataset", [], ["root", "batch_size", "drop_last", "item_shape?", "length?"], "epoch of minibatches `(B) @ item`, labels `(B) @ label`",
        "`0 < batch_size`; unknown lengths are fresh `N` with hard `1 <= N`", false, dataset),
    rule!("read_image", [], ["path"], "`(c, h, w)`, all fresh", "hard `1 <= c <= 4`, `0 < h`, `0 < w`", false, read_image),
    rule!("resize", [], ["img", "size"], "`(img[0], h, w)`", "`rank(img) = 3`, `0 < h, w`", true, resize),
    rule!("convert_monochrome", [], ["img"], "`(1, img[1], img[2])`", "`rank(img) = 3`", false, convert_monochrome),
    rule!("convert_rgb", [], ["img"], "`(3, img[1], img[2])`", "`rank(img) = 3`", true, convert_rgb),
    rule!("rand_int", ["randint"], ["low", "high"], "fresh number", "hard `low <= x <= high`", false, rand_int),
];
