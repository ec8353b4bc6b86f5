//! Reference shape functions over ground shapes, one per catalog operation,
//! and a random call generator for each.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tslcheck_core::constraints::{eval_pred, Assignment, BoolExpr, Ground, Kind, NumExpr, Pred, ShapeExpr, Symbol, SymbolGen};
use tslcheck_core::pos::SourcePos;
use tslcheck_core::shapeops::{apply, OpCtx, Value};
use tslcheck_core::simplify::{simplify_num, simplify_shape, Ranges};

/// Values a fresh symbol may take are probed in this window.
const WINDOW: std::ops::RangeInclusive<i64> = -10..=10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Out {
    None,
    Tensor(Vec<i64>),
    Num(i64),
    Size(Vec<i64>),
    /// (values, indices) pair of equal shapes.
    Pair(Vec<i64>),
    /// Fresh number with its feasible range inside the probe window.
    FreshNum(Option<(i64, i64)>),
    /// Tensor of fresh dimensions with their feasible ranges.
    FreshTensor(Vec<Option<(i64, i64)>>),
    Dataset {
        name: String,
        length: Result<i64, Option<(i64, i64)>>,
        batch: i64,
        drop_last: bool,
        item: Option<Vec<i64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accept(Out),
    Reject,
    /// The rule refuses the call outright.
    Error,
}

use Outcome::{Accept, Error, Reject};

pub struct Call {
    pub name: String,
    pub pos: Vec<Value>,
    pub kw: Vec<(Arc<str>, Value)>,
    kw_only: bool,
}

impl Call {
    fn new(name: &str) -> Call {
        Call {
            name: name.to_string(),
            pos: Vec::new(),
            kw: Vec::new(),
            kw_only: false,
        }
    }

    fn arg(&mut self, v: Value) {
        assert!(!self.kw_only);
        self.pos.push(v);
    }

    /// Optional argument: positional while no earlier optional was skipped
    /// and the coin says so, keyword otherwise.
    fn opt(&mut self, r: &mut ChaCha8Rng, name: &str, v: Option<Value>) {
        match v {
            None => self.kw_only = true,
            Some(v) if !self.kw_only && r.gen_bool(0.5) => self.pos.push(v),
            Some(v) => {
                self.kw_only = true;
                self.kw.push((Arc::from(name), v));
            }
        }
    }
}

fn t(d: &[i64]) -> Value {
    Value::Tensor(ShapeExpr::tuple(d.iter().copied()))
}

fn n(v: i64) -> Value {
    Value::int(v)
}

fn b(v: bool) -> Value {
    Value::Bool(BoolExpr::Const(v))
}

fn nums(d: &[i64]) -> Vec<Value> {
    d.iter().map(|&x| n(x)).collect()
}

fn tuple(d: &[i64]) -> Value {
    Value::Tuple(nums(d))
}

fn list(d: &[i64]) -> Value {
    Value::List(nums(d))
}

fn shape(r: &mut ChaCha8Rng, ranks: std::ops::RangeInclusive<usize>, dims: std::ops::RangeInclusive<i64>) -> Vec<i64> {
    let k = r.gen_range(ranks);
    (0..k).map(|_| r.gen_range(dims.clone())).collect()
}

fn any_shape(r: &mut ChaCha8Rng) -> Vec<i64> {
    shape(r, 0..=4, 1..=4)
}

/// `x` or a copy with one dimension changed.
fn perturb(r: &mut ChaCha8Rng, x: &[i64], p: f64) -> Vec<i64> {
    let mut y = x.to_vec();
    if r.gen_bool(p) {
        match r.gen_range(0..3) {
            0 if !y.is_empty() => {
                let i = r.gen_range(0..y.len());
                y[i] += r.gen_range(1..=3);
            }
            1 => y.push(r.gen_range(1..=4)),
            _ => {
                y.pop();
            }
        }
    }
    y
}

/// Dimension list passed either as separate numbers or as one tuple/list.
fn dims_args(r: &mut ChaCha8Rng, c: &mut Call, d: &[i64]) {
    match r.gen_range(0..3) {
        0 => c.pos.extend(nums(d)),
        1 => c.arg(tuple(d)),
        _ => c.arg(list(d)),
    }
}

fn norm(d: i64, r: usize) -> i64 {
    if d < 0 {
        d + r as i64
    } else {
        d
    }
}

fn in_range(d: i64, r: usize) -> bool {
    0 <= d && d < r as i64
}

fn prod(d: &[i64]) -> i64 {
    d.iter().product()
}

fn floordiv(a: i64, b: i64) -> Option<i64> {
    if b == 0 {
        return None;
    }
    let q = a / b;
    Some(if a % b != 0 && (a < 0) != (b < 0) { q - 1 } else { q })
}

fn accept_if(ok: bool, out: impl FnOnce() -> Out) -> Outcome {
    if ok {
        Accept(out())
    } else {
        Reject
    }
}

fn pick<'a>(r: &mut ChaCha8Rng, names: &[&'a str]) -> &'a str {
    names.choose(r).copied().unwrap()
}

// ---- reference semantics --------------------------------------------------

fn broadcast(x: &[i64], y: &[i64]) -> Option<Vec<i64>> {
    let k = x.len().max(y.len());
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let a = (i + x.len()).checked_sub(k).map(|j| x[j]);
        let b = (i + y.len()).checked_sub(k).map(|j| y[j]);
        out.push(match (a, b) {
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) if a == b || b == 1 => a,
            (Some(1), Some(b)) => b,
            _ => return None,
        });
    }
    Some(out)
}

fn matmul(x: &[i64], y: &[i64]) -> Option<Vec<i64>> {
    let (rx, ry) = (x.len(), y.len());
    match (rx, ry) {
        (0, _) | (_, 0) => None,
        (1, 1) => (x[0] == y[0]).then(Vec::new),
        (1, _) => (x[0] == y[ry - 2]).then(|| {
            let mut d = y[..ry - 2].to_vec();
            d.push(y[ry - 1]);
            d
        }),
        (_, 1) => (x[rx - 1] == y[0]).then(|| x[..rx - 1].to_vec()),
        _ => {
            if x[rx - 1] != y[ry - 2] {
                return None;
            }
            let mut d = broadcast(&x[..rx - 2], &y[..ry - 2])?;
            d.extend([x[rx - 2], y[ry - 1]]);
            Some(d)
        }
    }
}

fn expand(x: &[i64], sizes: &[i64]) -> Option<Vec<i64>> {
    let lead = sizes.len().checked_sub(x.len())?;
    let mut out = Vec::new();
    for (i, &s) in sizes.iter().enumerate() {
        if i < lead {
            if s < 0 {
                return None;
            }
            out.push(s);
        } else if s == -1 {
            out.push(x[i - lead]);
        } else if x[i - lead] == 1 {
            if s < 0 {
                return None;
            }
            out.push(s);
        } else if x[i - lead] == s {
            out.push(s);
        } else {
            return None;
        }
    }
    Some(out)
}

fn window(size: i64, k: i64, s: i64, p: i64, d: i64) -> Option<i64> {
    Some(floordiv(size + 2 * p - d * (k - 1) - 1, s)? + 1)
}

fn literal(v: &Value) -> Option<Vec<i64>> {
    match v {
        Value::Num(_) => Some(Vec::new()),
        Value::List(items) => {
            let inner = match items.first() {
                Some(x) => literal(x)?,
                None => Vec::new(),
            };
            for x in items {
                if literal(x)? != inner {
                    return None;
                }
            }
            Some([vec![items.len() as i64], inner].concat())
        }
        _ => None,
    }
}

fn nested(r: &mut ChaCha8Rng, dims: &[i64]) -> Value {
    match dims.split_first() {
        None => n(r.gen_range(0..9)),
        Some((&k, rest)) => Value::List((0..k).map(|_| nested(r, rest)).collect()),
    }
}

// ---- per-operation generators --------------------------------------------

type Gen = fn(&mut ChaCha8Rng) -> (Call, Outcome);

fn g_identity(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let name = pick(r, &["identity", "relu", "dropout", "to", "float", "neg", "zeros_like", "contiguous", "type"]);
    let mut c = Call::new(name);
    let x = any_shape(r);
    c.arg(t(&x));
    for _ in 0..r.gen_range(0..=2) {
        c.arg(if r.gen_bool(0.5) { n(r.gen_range(0..3)) } else { Value::Str(Arc::from("cuda")) });
    }
    (c, Accept(Out::Tensor(x)))
}

fn g_softmax(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["softmax", "log_softmax"]));
    let x = any_shape(r);
    let d = r.gen_range(-5..=5);
    c.arg(t(&x));
    c.opt(r, "dim", Some(n(d)));
    let ok = in_range(norm(d, x.len()), x.len());
    (c, accept_if(ok, || Out::Tensor(x)))
}

fn g_scalar(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["scalar", "tensor"]));
    let dims = shape(r, 0..=3, 0..=3);
    let mut v = nested(r, &dims);
    if r.gen_bool(0.2) {
        if let Value::List(items) = &mut v {
            if let Some(Value::List(first)) = items.first_mut() {
                first.push(n(0));
            }
        }
    }
    let expected = match literal(&v) {
        Some(d) => Accept(Out::Tensor(d)),
        None => Error,
    };
    c.arg(v);
    (c, expected)
}

fn g_is_same_shape(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("is_same_shape");
    let x = any_shape(r);
    let y = perturb(r, &x, 0.5);
    c.arg(t(&x));
    c.arg(t(&y));
    (c, accept_if(x == y, || Out::Tensor(x)))
}

fn g_ones(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["ones", "zeros", "randn", "rand", "empty"]));
    let d = shape(r, 0..=4, -1..=4);
    dims_args(r, &mut c, &d);
    let ok = d.iter().all(|&x| x >= 0);
    (c, accept_if(ok, || Out::Tensor(d)))
}

fn g_eye(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("eye");
    let k = r.gen_range(-1..=5);
    let m = r.gen_bool(0.5).then(|| r.gen_range(-1..=5));
    c.arg(n(k));
    c.opt(r, "m", m.map(n));
    let m = m.unwrap_or(k);
    (c, accept_if(k >= 0 && m >= 0, || Out::Tensor(vec![k, m])))
}

fn g_arange(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("arange");
    let a = r.gen_range(-2..=6);
    let e = r.gen_bool(0.6).then(|| r.gen_range(-2..=6));
    c.arg(n(a));
    c.opt(r, "end", e.map(n));
    let out = match e {
        None => accept_if(a >= 0, || Out::Tensor(vec![a])),
        Some(e) => accept_if(a <= e, || Out::Tensor(vec![e - a])),
    };
    (c, out)
}

fn g_size(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("size");
    let x = any_shape(r);
    c.arg(t(&x));
    let d = r.gen_bool(0.7).then(|| r.gen_range(-5..=5));
    c.opt(r, "dim", d.map(n));
    let out = match d {
        None => Accept(Out::Size(x)),
        Some(d) => {
            let k = norm(d, x.len());
            accept_if(in_range(k, x.len()), || Out::Num(x[k as usize]))
        }
    };
    (c, out)
}

fn g_dim(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["dim", "ndim"]));
    let x = any_shape(r);
    c.arg(t(&x));
    (c, Accept(Out::Num(x.len() as i64)))
}

fn g_numel(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("numel");
    let x = shape(r, 0..=4, 0..=5);
    c.arg(t(&x));
    (c, Accept(Out::Num(prod(&x))))
}

fn g_item(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("item");
    let x = shape(r, 0..=3, 1..=2);
    c.arg(t(&x));
    let full = Some((*WINDOW.start(), *WINDOW.end()));
    (c, accept_if(prod(&x) == 1, || Out::FreshNum(full)))
}

fn g_len(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("len");
    let x = shape(r, 0..=3, 1..=5);
    let out = match r.gen_range(0..3) {
        0 => {
            c.arg(t(&x));
            accept_if(!x.is_empty(), || Out::Num(x[0]))
        }
        1 => {
            c.arg(list(&x));
            Accept(Out::Num(x.len() as i64))
        }
        _ => {
            c.arg(Value::Size(ShapeExpr::tuple(x.iter().copied())));
            Accept(Out::Num(x.len() as i64))
        }
    };
    (c, out)
}

fn g_noop(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["noop", "backward", "zero_grad", "step", "print", "eval", "manual_seed"]));
    for _ in 0..r.gen_range(0..=2) {
        c.arg(t(&any_shape(r)));
    }
    (c, Accept(Out::None))
}

fn broadcast_partner(r: &mut ChaCha8Rng, x: &[i64]) -> Vec<i64> {
    let k = r.gen_range(0..=4usize);
    (0..k)
        .map(|i| {
            let aligned = (i + x.len()).checked_sub(k).map(|j| x[j]);
            match (aligned, r.gen_range(0..4)) {
                (Some(a), 0 | 1) => a,
                (_, 2) => 1,
                _ => r.gen_range(1..=4),
            }
        })
        .collect()
}

fn g_broadcast(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["broadcast", "add", "sub", "mul", "div", "floordiv", "maximum", "minimum", "pow"]));
    let x = shape(r, 0..=4, 0..=4);
    let y = broadcast_partner(r, &x);
    let out = match r.gen_range(0..10) {
        0 => {
            c.arg(n(2));
            c.arg(t(&y));
            Accept(Out::Tensor(y))
        }
        1 => {
            c.arg(t(&x));
            c.arg(b(true));
            Accept(Out::Tensor(x))
        }
        2 => {
            c.arg(n(1));
            c.arg(n(2));
            Error
        }
        _ => {
            c.arg(t(&x));
            c.arg(t(&y));
            match broadcast(&x, &y) {
                Some(s) => Accept(Out::Tensor(s)),
                None => Reject,
            }
        }
    };
    (c, out)
}

fn g_mm(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("mm");
    let x = shape(r, 1..=3, 1..=4);
    let mut y = shape(r, 1..=3, 1..=4);
    if r.gen_bool(0.6) && x.len() >= 2 && !y.is_empty() {
        y[0] = x[1];
    }
    c.arg(t(&x));
    c.arg(t(&y));
    let ok = x.len() == 2 && y.len() == 2 && x[1] == y[0];
    (c, accept_if(ok, || Out::Tensor(vec![x[0], y[1]])))
}

fn g_matmul(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("matmul");
    let x = shape(r, 0..=4, 1..=3);
    let mut y = broadcast_partner(r, &x);
    if r.gen_bool(0.6) && !x.is_empty() && !y.is_empty() {
        let k = if y.len() >= 2 { y.len() - 2 } else { 0 };
        y[k] = x[x.len() - 1];
    }
    c.arg(t(&x));
    c.arg(t(&y));
    let out = match matmul(&x, &y) {
        Some(s) => Accept(Out::Tensor(s)),
        None => Reject,
    };
    (c, out)
}

fn g_bmm(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("bmm");
    let x = shape(r, 2..=4, 1..=3);
    let mut y = shape(r, 2..=4, 1..=3);
    if r.gen_bool(0.6) && x.len() >= 3 && y.len() >= 2 {
        y[0] = x[0];
        y[1] = x[2];
    }
    c.arg(t(&x));
    c.arg(t(&y));
    let ok = x.len() == 3 && y.len() == 3 && x[0] == y[0] && x[2] == y[1];
    (c, accept_if(ok, || Out::Tensor(vec![x[0], x[1], y[2]])))
}

fn g_linear(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("linear");
    let x = shape(r, 0..=3, 1..=5);
    let inf = match x.last() {
        Some(&d) if r.gen_bool(0.6) => d,
        _ => r.gen_range(1..=5),
    };
    let outf = r.gen_range(1..=6);
    c.arg(t(&x));
    c.arg(n(inf));
    c.arg(n(outf));
    let ok = x.last() == Some(&inf);
    (c, accept_if(ok, || Out::Tensor([&x[..x.len() - 1], &[outf][..]].concat())))
}

fn g_embedding(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("embedding");
    let x = shape(r, 0..=3, 1..=4);
    let k = r.gen_range(-1..=5);
    let d = r.gen_range(-1..=5);
    c.arg(t(&x));
    c.arg(n(k));
    c.arg(n(d));
    (c, accept_if(k > 0 && d > 0, || Out::Tensor([&x[..], &[d][..]].concat())))
}

fn g_transpose(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("transpose");
    let x = any_shape(r);
    let (d0, d1) = (r.gen_range(-5..=5), r.gen_range(-5..=5));
    c.arg(t(&x));
    c.arg(n(d0));
    c.arg(n(d1));
    let (a, z) = (norm(d0, x.len()), norm(d1, x.len()));
    let (lo, hi) = (a.min(z), a.max(z));
    let ok = 0 <= lo && lo < hi && hi < x.len() as i64;
    (c, accept_if(ok, || {
        let mut y = x.clone();
        y.swap(lo as usize, hi as usize);
        Out::Tensor(y)
    }))
}

fn g_t(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("t");
    let x = shape(r, 0..=3, 1..=4);
    c.arg(t(&x));
    let mut y = x.clone();
    y.reverse();
    (c, accept_if(x.len() <= 2, || Out::Tensor(y)))
}

fn g_permute(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("permute");
    let x = any_shape(r);
    let k = x.len() as i64;
    let p: Vec<i64> = if r.gen_bool(0.7) {
        let mut p: Vec<i64> = (0..k).collect();
        p.shuffle(r);
        p.iter().map(|&i| if r.gen_bool(0.3) { i - k } else { i }).collect()
    } else {
        let len = (k + r.gen_range(-1..=1)).max(0);
        (0..len).map(|_| r.gen_range(-k.max(1)..=k)).collect()
    };
    c.arg(t(&x));
    dims_args(r, &mut c, &p);
    let normed: Vec<i64> = p.iter().map(|&i| norm(i, x.len())).collect();
    let mut sorted = normed.clone();
    sorted.sort_unstable();
    let ok = sorted == (0..k).collect::<Vec<_>>();
    (c, accept_if(ok, || Out::Tensor(normed.iter().map(|&i| x[i as usize]).collect())))
}

fn g_reshape(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["reshape", "view"]));
    let x = shape(r, 0..=4, 1..=4);
    let total = prod(&x);
    let mut target: Vec<i64> = match r.gen_range(0..3) {
        0 => shape(r, 1..=3, 0..=4),
        _ => {
            // factor the total into a few dims
            let mut rest = total;
            let mut d = Vec::new();
            while rest > 1 && d.len() < 3 {
                let f = (1..=rest).filter(|f| rest % f == 0).collect::<Vec<_>>();
                let f = *f.choose(r).unwrap();
                d.push(f);
                rest /= f;
            }
            d.push(rest);
            d.shuffle(r);
            d
        }
    };
    match r.gen_range(0..20) {
        0 => target.clear(),
        1 if target.len() >= 2 => {
            target[0] = -1;
            target[1] = -1;
        }
        2..=9 => {
            let i = r.gen_range(0..target.len());
            target[i] = -1;
        }
        _ => {}
    }
    c.arg(t(&x));
    dims_args(r, &mut c, &target);
    let inferred: Vec<usize> = (0..target.len()).filter(|&i| target[i] == -1).collect();
    let out = if target.is_empty() || inferred.len() > 1 {
        Error
    } else if let [k] = inferred[..] {
        let others: Vec<i64> = target.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, &d)| d).collect();
        let p = prod(&others);
        let ok = others.iter().all(|&d| d > 0) && total % p == 0;
        accept_if(ok, || {
            let mut y = target.clone();
            y[k] = total / p;
            Out::Tensor(y)
        })
    } else {
        let ok = target.iter().all(|&d| d > 0) && prod(&target) == total;
        accept_if(ok, || Out::Tensor(target.clone()))
    };
    (c, out)
}

fn g_flatten(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("flatten");
    let x = any_shape(r);
    let s = r.gen_bool(0.7).then(|| r.gen_range(-4..=4));
    let e = r.gen_bool(0.5).then(|| r.gen_range(-4..=4));
    c.arg(t(&x));
    c.opt(r, "start_dim", s.map(n));
    c.opt(r, "end_dim", e.map(n));
    let rk = x.len();
    let (s, e) = (norm(s.unwrap_or(0), rk), norm(e.unwrap_or(-1), rk));
    let ok = 0 <= s && s <= e && e < rk as i64;
    (c, accept_if(ok, || {
        let (s, e) = (s as usize, e as usize);
        Out::Tensor([&x[..s], &[prod(&x[s..=e])][..], &x[e + 1..]].concat())
    }))
}

fn g_unsqueeze(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("unsqueeze");
    let x = any_shape(r);
    let d = r.gen_range(-6..=6);
    c.arg(t(&x));
    c.opt(r, "dim", Some(n(d)));
    let k = if d < 0 { d + x.len() as i64 + 1 } else { d };
    let ok = 0 <= k && k <= x.len() as i64;
    (c, accept_if(ok, || {
        let mut y = x.clone();
        y.insert(k as usize, 1);
        Out::Tensor(y)
    }))
}

fn g_squeeze(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("squeeze");
    let x = shape(r, 0..=4, 1..=2);
    let d = r.gen_bool(0.6).then(|| r.gen_range(-5..=5));
    c.arg(t(&x));
    c.opt(r, "dim", d.map(n));
    let out = match d {
        None => Accept(Out::Tensor(x.iter().copied().filter(|&v| v != 1).collect())),
        Some(d) => {
            let k = norm(d, x.len());
            accept_if(in_range(k, x.len()), || {
                let mut y = x.clone();
                if y[k as usize] == 1 {
                    y.remove(k as usize);
                }
                Out::Tensor(y)
            })
        }
    };
    (c, out)
}

fn expand_sizes(r: &mut ChaCha8Rng, x: &[i64]) -> Vec<i64> {
    let len = (x.len() as i64 + r.gen_range(-1..=2)).max(0) as usize;
    (0..len)
        .map(|i| {
            let aligned = (i + x.len()).checked_sub(len).map(|j| x[j]);
            match (aligned, r.gen_range(0..5)) {
                (_, 0) => -1,
                (Some(a), 1 | 2) => a,
                _ => r.gen_range(-1..=4),
            }
        })
        .collect()
}

fn g_expand(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("expand");
    let x = shape(r, 0..=3, 1..=3);
    let sizes = expand_sizes(r, &x);
    c.arg(t(&x));
    dims_args(r, &mut c, &sizes);
    let out = match expand(&x, &sizes) {
        Some(s) => Accept(Out::Tensor(s)),
        None => Reject,
    };
    (c, out)
}

fn g_expand_as(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("expand_as");
    let x = shape(r, 0..=3, 1..=3);
    let other: Vec<i64> = expand_sizes(r, &x).into_iter().map(|d| d.max(0)).collect();
    c.arg(t(&x));
    c.arg(t(&other));
    let out = match expand(&x, &other) {
        Some(s) => Accept(Out::Tensor(s)),
        None => Reject,
    };
    (c, out)
}

fn g_repeat(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("repeat");
    let x = shape(r, 0..=3, 0..=3);
    let len = (x.len() as i64 + r.gen_range(-1..=2)).max(0) as usize;
    let reps: Vec<i64> = (0..len).map(|_| r.gen_range(-1..=3)).collect();
    c.arg(t(&x));
    dims_args(r, &mut c, &reps);
    let ok = reps.len() >= x.len() && reps.iter().all(|&k| k >= 0);
    (c, accept_if(ok, || {
        let lead = reps.len() - x.len();
        Out::Tensor(reps.iter().enumerate().map(|(i, &k)| if i < lead { k } else { x[i - lead] * k }).collect())
    }))
}

fn reduced(x: &[i64], d: i64, keep: bool) -> Option<Vec<i64>> {
    let k = norm(d, x.len());
    in_range(k, x.len()).then(|| {
        let mut y = x.to_vec();
        if keep {
            y[k as usize] = 1;
        } else {
            y.remove(k as usize);
        }
        y
    })
}

fn g_sum(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["sum", "mean", "prod", "std", "var", "norm", "amax", "amin", "logsumexp", "argmax", "argmin", "all", "any"]));
    let x = any_shape(r);
    let d = r.gen_bool(0.7).then(|| r.gen_range(-5..=5));
    let keep = r.gen_bool(0.5).then(|| r.gen_bool(0.5));
    c.arg(t(&x));
    c.opt(r, "dim", d.map(n));
    if d.is_some() {
        c.opt(r, "keepdim", keep.map(b));
    }
    let out = match d {
        None => Accept(Out::Tensor(Vec::new())),
        Some(d) => match reduced(&x, d, keep.unwrap_or(false)) {
            Some(s) => Accept(Out::Tensor(s)),
            None => Reject,
        },
    };
    (c, out)
}

fn g_max(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["max", "min"]));
    let x = any_shape(r);
    c.arg(t(&x));
    if r.gen_bool(0.3) {
        let y = broadcast_partner(r, &x);
        c.arg(t(&y));
        let out = match broadcast(&x, &y) {
            Some(s) => Accept(Out::Tensor(s)),
            None => Reject,
        };
        return (c, out);
    }
    let d = r.gen_bool(0.7).then(|| r.gen_range(-5..=5));
    let keep = r.gen_bool(0.5).then(|| r.gen_bool(0.5));
    c.opt(r, "dim", d.map(n));
    if d.is_some() {
        c.opt(r, "keepdim", keep.map(b));
    }
    let out = match d {
        None => Accept(Out::Tensor(Vec::new())),
        Some(d) => match reduced(&x, d, keep.unwrap_or(false)) {
            Some(s) => Accept(Out::Pair(s)),
            None => Reject,
        },
    };
    (c, out)
}

fn g_topk(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("topk");
    let x = shape(r, 0..=3, 0..=5);
    let k = r.gen_range(-1..=5);
    let d = r.gen_bool(0.6).then(|| r.gen_range(-4..=4));
    c.arg(t(&x));
    c.arg(n(k));
    c.opt(r, "dim", d.map(n));
    if r.gen_bool(0.3) {
        c.opt(r, "largest", Some(b(false)));
    }
    let dd = norm(d.unwrap_or(-1), x.len());
    let ok = in_range(dd, x.len()) && 0 <= k && k <= x[dd as usize];
    (c, accept_if(ok, || {
        let mut y = x.clone();
        y[dd as usize] = k;
        Out::Pair(y)
    }))
}

fn g_cat(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["cat", "concat"]));
    let first = shape(r, 0..=3, 1..=4);
    let d = r.gen_bool(0.7).then(|| r.gen_range(-4..=4));
    let dd = norm(d.unwrap_or(0), first.len());
    let count = r.gen_range(0..=3);
    let ts: Vec<Vec<i64>> = (0..count)
        .map(|i| {
            if i == 0 {
                return first.clone();
            }
            let mut y = first.clone();
            if in_range(dd, y.len()) {
                y[dd as usize] = r.gen_range(0..=4);
            }
            perturb(r, &y, 0.25)
        })
        .collect();
    let items: Vec<Value> = ts.iter().map(|s| t(s)).collect();
    c.arg(if r.gen_bool(0.5) { Value::List(items) } else { Value::Tuple(items) });
    c.opt(r, "dim", d.map(n));
    let out = if ts.is_empty() {
        Error
    } else {
        let rk = first.len();
        let same_except = |y: &Vec<i64>| y.len() == rk && (0..rk).all(|i| i as i64 == dd || y[i] == first[i]);
        let ok = in_range(dd, rk) && ts.iter().all(same_except);
        accept_if(ok, || {
            let mut y = first.clone();
            y[dd as usize] = ts.iter().map(|s| s[dd as usize]).sum();
            Out::Tensor(y)
        })
    };
    (c, out)
}

fn g_stack(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("stack");
    let first = shape(r, 0..=3, 1..=4);
    let count = r.gen_range(0..=3);
    let ts: Vec<Vec<i64>> = (0..count).map(|i| if i == 0 { first.clone() } else { perturb(r, &first, 0.25) }).collect();
    let d = r.gen_bool(0.7).then(|| r.gen_range(-5..=5));
    c.arg(Value::List(ts.iter().map(|s| t(s)).collect()));
    c.opt(r, "dim", d.map(n));
    let out = if ts.is_empty() {
        Error
    } else {
        let d = d.unwrap_or(0);
        let k = if d < 0 { d + first.len() as i64 + 1 } else { d };
        let ok = ts.iter().all(|s| *s == first) && 0 <= k && k <= first.len() as i64;
        accept_if(ok, || {
            let mut y = first.clone();
            y.insert(k as usize, ts.len() as i64);
            Out::Tensor(y)
        })
    };
    (c, out)
}

fn g_diag(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("diag");
    let x = shape(r, 0..=3, 0..=5);
    let k = r.gen_bool(0.7).then(|| r.gen_range(-6..=6));
    c.arg(t(&x));
    c.opt(r, "diagonal", k.map(n));
    let k = k.unwrap_or(0);
    let out = match x[..] {
        [m] => Accept(Out::Tensor(vec![m + k.abs(); 2])),
        [a, z] => accept_if(-a <= k && k <= z, || {
            let len = if k >= 0 { a.min(z - k) } else { (a + k).min(z) };
            Out::Tensor(vec![len])
        }),
        _ => Reject,
    };
    (c, out)
}

fn g_narrow(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("narrow");
    let x = shape(r, 0..=3, 0..=5);
    let d = r.gen_range(-4..=4);
    let s = r.gen_range(-1..=4);
    let len = r.gen_range(-1..=4);
    c.arg(t(&x));
    c.arg(n(d));
    c.arg(n(s));
    c.arg(n(len));
    let k = norm(d, x.len());
    let ok = in_range(k, x.len()) && s >= 0 && len >= 0 && s + len <= x[k as usize];
    (c, accept_if(ok, || {
        let mut y = x.clone();
        y[k as usize] = len;
        Out::Tensor(y)
    }))
}

fn image(r: &mut ChaCha8Rng, ranks: std::ops::RangeInclusive<usize>) -> Vec<i64> {
    let k = r.gen_range(ranks);
    (0..k).map(|i| if i + 2 >= k { r.gen_range(1..=12) } else { r.gen_range(1..=4) }).collect()
}

fn g_conv2d(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("conv2d");
    let x = if r.gen_bool(0.8) { image(r, 4..=4) } else { image(r, 2..=5) };
    let inc = match x.get(1) {
        Some(&ch) if r.gen_bool(0.7) => ch,
        _ => r.gen_range(1..=4),
    };
    let outc = r.gen_range(1..=8);
    let k = r.gen_range(0..=5);
    let s = r.gen_bool(0.6).then(|| r.gen_range(0..=3));
    let p = r.gen_bool(0.6).then(|| r.gen_range(-1..=3));
    let dil = r.gen_bool(0.4).then(|| r.gen_range(0..=2));
    c.arg(t(&x));
    c.arg(n(inc));
    c.arg(n(outc));
    c.arg(n(k));
    c.opt(r, "stride", s.map(n));
    c.opt(r, "padding", p.map(n));
    c.opt(r, "dilation", dil.map(n));
    let (s, p, dil) = (s.unwrap_or(1), p.unwrap_or(0), dil.unwrap_or(1));
    let out = (|| {
        if x.len() != 4 || x[1] != inc || k <= 0 || s <= 0 || dil <= 0 || p < 0 {
            return Reject;
        }
        let h = window(x[2], k, s, p, dil).unwrap();
        let w = window(x[3], k, s, p, dil).unwrap();
        accept_if(h >= 1 && w >= 1, || Out::Tensor(vec![x[0], outc, h, w]))
    })();
    (c, out)
}

fn g_conv_transpose2d(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("conv_transpose2d");
    let x = if r.gen_bool(0.8) { image(r, 4..=4) } else { image(r, 2..=5) };
    let inc = match x.get(1) {
        Some(&ch) if r.gen_bool(0.7) => ch,
        _ => r.gen_range(1..=4),
    };
    let outc = r.gen_range(1..=8);
    let k = r.gen_range(0..=4);
    let s = r.gen_bool(0.6).then(|| r.gen_range(0..=3));
    let p = r.gen_bool(0.6).then(|| r.gen_range(-1..=4));
    let op = r.gen_bool(0.5).then(|| r.gen_range(-1..=3));
    let dil = r.gen_bool(0.4).then(|| r.gen_range(0..=2));
    c.arg(t(&x));
    c.arg(n(inc));
    c.arg(n(outc));
    c.arg(n(k));
    c.opt(r, "stride", s.map(n));
    c.opt(r, "padding", p.map(n));
    c.opt(r, "output_padding", op.map(n));
    c.opt(r, "dilation", dil.map(n));
    let (s, p, op, dil) = (s.unwrap_or(1), p.unwrap_or(0), op.unwrap_or(0), dil.unwrap_or(1));
    let out = (|| {
        if x.len() != 4 || x[1] != inc || k <= 0 || s <= 0 || dil <= 0 || p < 0 || op < 0 || op >= s {
            return Reject;
        }
        let size = |v: i64| (v - 1) * s - 2 * p + dil * (k - 1) + op + 1;
        let (h, w) = (size(x[2]), size(x[3]));
        accept_if(h >= 1 && w >= 1, || Out::Tensor(vec![x[0], outc, h, w]))
    })();
    (c, out)
}

fn g_pool2d(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["max_pool2d", "avg_pool2d"]));
    let x = image(r, 2..=5);
    let k = r.gen_range(0..=4);
    let s = r.gen_bool(0.5).then(|| r.gen_range(0..=3));
    let p = r.gen_bool(0.5).then(|| r.gen_range(-1..=2));
    let dil = r.gen_bool(0.3).then(|| r.gen_range(0..=2));
    c.arg(t(&x));
    c.arg(n(k));
    c.opt(r, "stride", s.map(n));
    c.opt(r, "padding", p.map(n));
    c.opt(r, "dilation", dil.map(n));
    let (s, p, dil) = (s.unwrap_or(k), p.unwrap_or(0), dil.unwrap_or(1));
    let rk = x.len();
    let out = (|| {
        if !(rk == 3 || rk == 4) || k <= 0 || s <= 0 || dil <= 0 || p < 0 || 2 * p > k {
            return Reject;
        }
        let h = window(x[rk - 2], k, s, p, dil).unwrap();
        let w = window(x[rk - 1], k, s, p, dil).unwrap();
        accept_if(h >= 1 && w >= 1, || Out::Tensor([&x[..rk - 2], &[h, w][..]].concat()))
    })();
    (c, out)
}

fn g_adaptive_pool2d(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["adaptive_avg_pool2d", "adaptive_max_pool2d"]));
    let x = image(r, 2..=5);
    let size = shape(r, 1..=3, 0..=4);
    c.arg(t(&x));
    if size.len() == 1 && r.gen_bool(0.5) {
        c.arg(n(size[0]));
    } else {
        c.arg(tuple(&size));
    }
    let rk = x.len();
    let (h, w) = match size[..] {
        [a] => (a, a),
        [h, w] => (h, w),
        _ => return (c, Error),
    };
    let out = accept_if((rk == 3 || rk == 4) && h >= 1 && w >= 1, || Out::Tensor([&x[..rk - 2], &[h, w][..]].concat()));
    (c, out)
}

fn g_batch_norm2d(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("batch_norm2d");
    let x = image(r, 2..=5);
    let nf = match x.get(1) {
        Some(&ch) if r.gen_bool(0.7) => ch,
        _ => r.gen_range(1..=4),
    };
    c.arg(t(&x));
    c.arg(n(nf));
    let ok = x.len() == 4 && x[1] == nf;
    (c, accept_if(ok, || Out::Tensor(x)))
}

fn g_layer_norm(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("layer_norm");
    let x = any_shape(r);
    let k = r.gen_range(0..=x.len() + 1);
    let mut ns: Vec<i64> = if k <= x.len() { x[x.len() - k..].to_vec() } else { shape(r, k..=k, 1..=4) };
    if r.gen_bool(0.3) && !ns.is_empty() {
        let i = r.gen_range(0..ns.len());
        ns[i] += 1;
    }
    c.arg(t(&x));
    if ns.len() == 1 && r.gen_bool(0.5) {
        c.arg(n(ns[0]));
    } else {
        c.arg(tuple(&ns));
    }
    let ok = ns.len() <= x.len() && x[x.len() - ns.len()..] == ns[..];
    (c, accept_if(ok, || Out::Tensor(x)))
}

fn g_interpolate(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("interpolate");
    let x = image(r, 1..=5);
    let spatial = x.len().saturating_sub(2);
    let size = r.gen_bool(0.55).then(|| {
        let len = if r.gen_bool(0.7) { spatial.max(1) } else { r.gen_range(1..=3) };
        shape(r, len..=len, 0..=6)
    });
    let scale = r.gen_bool(0.5).then(|| r.gen_range(0..=3));
    c.arg(t(&x));
    match &size {
        Some(s) if s.len() == 1 && r.gen_bool(0.5) => c.opt(r, "size", Some(n(s[0]))),
        Some(s) => c.opt(r, "size", Some(tuple(s))),
        None => c.opt(r, "size", None),
    }
    c.opt(r, "scale_factor", scale.map(n));
    let out = if x.len() < 3 {
        Reject
    } else {
        let new: Option<Vec<i64>> = match (&size, scale) {
            (Some(s), None) if s.len() == 1 => Some(vec![s[0]; spatial]),
            (Some(s), None) if s.len() == spatial => Some(s.clone()),
            (Some(_), None) => None,
            (None, Some(f)) => Some(x[2..].iter().map(|&d| d * f).collect()),
            _ => return (c, Error),
        };
        match new {
            Some(new) => accept_if(new.iter().all(|&d| d >= 1), || Out::Tensor([&x[..2], &new[..]].concat())),
            None => Reject,
        }
    };
    (c, out)
}

fn g_pixel_shuffle(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("pixel_shuffle");
    let k = r.gen_range(2..=5);
    let mut x = image(r, k..=k);
    let f = r.gen_range(-1..=3);
    if k >= 3 && r.gen_bool(0.6) {
        x[k - 3] = f * f * r.gen_range(1..=3);
    }
    c.arg(t(&x));
    c.arg(n(f));
    let ok = k >= 3 && f > 0 && x[k - 3] % (f * f) == 0;
    (c, accept_if(ok, || Out::Tensor([&x[..k - 3], &[x[k - 3] / (f * f), x[k - 2] * f, x[k - 1] * f][..]].concat())))
}

fn g_pad(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("pad");
    let x = shape(r, 0..=4, 0..=4);
    let pads = shape(r, 0..=6, -2..=3);
    c.arg(t(&x));
    c.arg(if r.gen_bool(0.5) { tuple(&pads) } else { list(&pads) });
    let m = pads.len() / 2;
    let out = if pads.len() % 2 == 1 {
        Error
    } else if m > x.len() {
        Reject
    } else {
        let mut y = x.clone();
        let rk = y.len();
        for i in 0..m {
            y[rk - 1 - i] += pads[2 * i] + pads[2 * i + 1];
        }
        accept_if(y[rk - m..].iter().all(|&d| d >= 0), || Out::Tensor(y))
    };
    (c, out)
}

fn g_nll_loss(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["nll_loss", "cross_entropy"]));
    let x = shape(r, 0..=4, 1..=5);
    let mut target: Vec<i64> = x.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, &d)| d).collect();
    target = perturb(r, &target, 0.4);
    c.arg(t(&x));
    c.arg(t(&target));
    let ok = x.len() >= 2 && [&x[..1], &x[2..]].concat() == target;
    (c, accept_if(ok, || Out::Tensor(Vec::new())))
}

fn g_mse_loss(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["mse_loss", "l1_loss", "smooth_l1_loss"]));
    let x = any_shape(r);
    let y = perturb(r, &x, 0.5);
    c.arg(t(&x));
    c.arg(t(&y));
    (c, accept_if(x == y, || Out::Tensor(Vec::new())))
}

fn g_dataset(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("dataset");
    let (root, key, stub) = match r.gen_range(0..4) {
        0 => ("./data/mnist", "mnist", Some((60000, vec![1, 28, 28]))),
        1 => ("data/CIFAR10/", "cifar10", Some((50000, vec![3, 32, 32]))),
        2 => ("fashion_mnist", "fashion_mnist", Some((60000, vec![1, 28, 28]))),
        _ => ("/tmp/custom", "custom", None),
    };
    let batch = r.gen_bool(0.8).then(|| r.gen_range(-1..=128));
    let drop_last = r.gen_bool(0.5).then(|| r.gen_bool(0.5));
    let item = r.gen_bool(0.3).then(|| shape(r, 0..=3, 1..=8));
    let length = r.gen_bool(0.3).then(|| r.gen_range(1..=1000));
    c.arg(Value::Str(Arc::from(root)));
    c.opt(r, "batch_size", batch.map(n));
    c.opt(r, "drop_last", drop_last.map(b));
    c.opt(r, "item_shape", item.as_deref().map(tuple));
    c.opt(r, "length", length.map(n));
    let batch = batch.unwrap_or(1);
    let length = match (length, &stub) {
        (Some(l), _) => Ok(l),
        (None, Some((l, _))) => Ok(*l),
        (None, None) => Err(Some((1, *WINDOW.end()))),
    };
    let item = item.or(stub.map(|(_, d)| d));
    (c, accept_if(batch > 0, || Out::Dataset {
        name: key.to_string(),
        length,
        batch,
        drop_last: drop_last.unwrap_or(false),
        item,
    }))
}

fn g_read_image(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("read_image");
    c.arg(Value::Str(Arc::from(*["a.png", "cat.jpg"].choose(r).unwrap())));
    let hi = *WINDOW.end();
    (c, Accept(Out::FreshTensor(vec![Some((1, 4)), Some((1, hi)), Some((1, hi))])))
}

fn g_resize(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new("resize");
    let x = shape(r, 2..=4, 1..=8);
    let size = shape(r, 1..=3, -1..=5);
    c.arg(t(&x));
    if size.len() == 1 && r.gen_bool(0.5) {
        c.arg(n(size[0]));
    } else {
        c.arg(tuple(&size));
    }
    let out = match size[..] {
        [h] => accept_if(x.len() == 3 && h > 0, || Out::Tensor(vec![x[0], h, h])),
        [h, w] => accept_if(x.len() == 3 && h > 0 && w > 0, || Out::Tensor(vec![x[0], h, w])),
        _ => Error,
    };
    (c, out)
}

fn g_convert(r: &mut ChaCha8Rng, name: &str, ch: i64) -> (Call, Outcome) {
    let mut c = Call::new(name);
    let x = shape(r, 1..=4, 1..=8);
    c.arg(t(&x));
    (c, accept_if(x.len() == 3, || Out::Tensor(vec![ch, x[1], x[2]])))
}

fn g_convert_monochrome(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    g_convert(r, "convert_monochrome", 1)
}

fn g_convert_rgb(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    g_convert(r, "convert_rgb", 3)
}

fn g_rand_int(r: &mut ChaCha8Rng) -> (Call, Outcome) {
    let mut c = Call::new(pick(r, &["rand_int", "randint"]));
    let lo = r.gen_range(-3..=5);
    let hi = r.gen_range(-3..=5);
    c.arg(n(lo));
    c.arg(n(hi));
    (c, Accept(Out::FreshNum((lo <= hi).then_some((lo, hi)))))
}

/// Generator for each catalog operation, by canonical name.
pub const GENERATORS: &[(&str, Gen)] = &[
    ("identity", g_identity),
    ("softmax", g_softmax),
    ("scalar", g_scalar),
    ("is_same_shape", g_is_same_shape),
    ("ones", g_ones),
    ("eye", g_eye),
    ("arange", g_arange),
    ("size", g_size),
    ("dim", g_dim),
    ("numel", g_numel),
    ("item", g_item),
    ("len", g_len),
    ("noop", g_noop),
    ("broadcast", g_broadcast),
    ("mm", g_mm),
    ("matmul", g_matmul),
    ("bmm", g_bmm),
    ("linear", g_linear),
    ("embedding", g_embedding),
    ("transpose", g_transpose),
    ("t", g_t),
    ("permute", g_permute),
    ("reshape", g_reshape),
    ("flatten", g_flatten),
    ("unsqueeze", g_unsqueeze),
    ("squeeze", g_squeeze),
    ("expand", g_expand),
    ("expand_as", g_expand_as),
    ("repeat", g_repeat),
    ("sum", g_sum),
    ("max", g_max),
    ("topk", g_topk),
    ("cat", g_cat),
    ("stack", g_stack),
    ("diag", g_diag),
    ("narrow", g_narrow),
    ("conv2d", g_conv2d),
    ("conv_transpose2d", g_conv_transpose2d),
    ("max_pool2d", g_pool2d),
    ("adaptive_avg_pool2d", g_adaptive_pool2d),
    ("batch_norm2d", g_batch_norm2d),
    ("layer_norm", g_layer_norm),
    ("interpolate", g_interpolate),
    ("pixel_shuffle", g_pixel_shuffle),
    ("pad", g_pad),
    ("nll_loss", g_nll_loss),
    ("mse_loss", g_mse_loss),
    ("dataset", g_dataset),
    ("read_image", g_read_image),
    ("resize", g_resize),
    ("convert_monochrome", g_convert_monochrome),
    ("convert_rgb", g_convert_rgb),
    ("rand_int", g_rand_int),
];

// ---- observation of the symbolic rule -------------------------------------

fn ground_shape(s: &ShapeExpr) -> Option<Vec<i64>> {
    simplify_shape(s, &Ranges::new()).as_ground()
}

fn ground_num(e: &NumExpr) -> Option<i64> {
    simplify_num(e, &Ranges::new()).as_const()
}

/// Feasible values of `sym` in the probe window under `hard`, with every
/// other symbol set to 1. `None` when no value is feasible; panics when the
/// feasible set has gaps.
fn feasible(sym: &Symbol, others: &[Symbol], hard: &[Pred]) -> Option<(i64, i64)> {
    let mut ok = Vec::new();
    for v in WINDOW {
        let mut rho: Assignment = others.iter().map(|s| (s.clone(), Ground::Int(1))).collect();
        rho.insert(sym.clone(), Ground::Int(v));
        if hard.iter().all(|p| eval_pred(p, &rho).unwrap_or(false)) {
            ok.push(v);
        }
    }
    let (lo, hi) = (*ok.first()?, *ok.last()?);
    assert_eq!(ok.len() as i64, hi - lo + 1, "feasible set of {sym} has gaps");
    Some((lo, hi))
}

fn fresh_syms(dims: &[NumExpr]) -> Option<Vec<Symbol>> {
    dims.iter()
        .map(|d| match d {
            NumExpr::Sym(s) => Some(s.clone()),
            _ => None,
        })
        .collect()
}

fn describe(v: &Value, hard: &[Pred]) -> Result<Out, String> {
    let bad = || Err(format!("unexpected result {v}"));
    Ok(match v {
        Value::None => Out::None,
        Value::Num(NumExpr::Sym(s)) => Out::FreshNum(feasible(s, &[], hard)),
        Value::Num(e) => match ground_num(e) {
            Some(k) => Out::Num(k),
            None => return bad(),
        },
        Value::Size(s) => match ground_shape(s) {
            Some(d) => Out::Size(d),
            None => return bad(),
        },
        Value::Tensor(s) => match ground_shape(s) {
            Some(d) => Out::Tensor(d),
            None => match s.as_tuple().and_then(fresh_syms) {
                Some(syms) => Out::FreshTensor(
                    syms.iter()
                        .map(|x| {
                            let others: Vec<Symbol> = syms.iter().filter(|y| *y != x).cloned().collect();
                            feasible(x, &others, hard)
                        })
                        .collect(),
                ),
                None => return bad(),
            },
        },
        Value::Tuple(items) => match &items[..] {
            [a @ Value::Tensor(_), b2] if a == b2 => match describe(a, hard)? {
                Out::Tensor(d) => Out::Pair(d),
                _ => return bad(),
            },
            _ => return bad(),
        },
        Value::Dataset(d) => Out::Dataset {
            name: d.name.to_string(),
            length: match &d.length {
                NumExpr::Sym(s) => Err(feasible(s, &[], hard)),
                e => Ok(ground_num(e).ok_or_else(|| format!("symbolic length {e}"))?),
            },
            batch: ground_num(&d.batch).ok_or("symbolic batch")?,
            drop_last: d.drop_last,
            item: ground_shape(&d.item),
        },
        _ => return bad(),
    })
}

/// Runs the symbolic rule on ground arguments and reports what it decided.
pub fn observe(call: &Call) -> Result<Outcome, String> {
    let mut syms = SymbolGen::new();
    let ranges = Ranges::new();
    let datasets = BTreeMap::new();
    let mut ctx = OpCtx::new(&mut syms, &ranges, &datasets, SourcePos::synthetic(), &call.name);
    let Ok(v) = apply(&mut ctx, &call.name, &call.pos, &call.kw) else {
        return Ok(Error);
    };
    let rho = Assignment::new();
    let accepted = ctx
        .emitted
        .iter()
        .filter(|(k, _)| *k == Kind::Soft)
        .all(|(_, p)| eval_pred(p, &rho).unwrap_or(false));
    if !accepted {
        return Ok(Reject);
    }
    let hard: Vec<Pred> = ctx.emitted.iter().filter(|(k, _)| *k == Kind::Hard).map(|(_, p)| p.clone()).collect();
    describe(&v, &hard).map(Accept)
}

pub fn render(call: &Call) -> String {
    let mut parts: Vec<String> = call.pos.iter().map(|v| v.to_string()).collect();
    parts.extend(call.kw.iter().map(|(k, v)| format!("{k}={v}")));
    format!("{}({})", call.name, parts.join(", "))
}
