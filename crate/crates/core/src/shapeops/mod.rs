//! Tensor-operation semantics: for each catalog operation, the symbolic
//! result and the constraints its inputs must satisfy.
//!
//! Rules emit soft constraints for operation preconditions and hard
//! constraints for facts about fresh unknowns (value ranges of random
//! numbers, image channels, dataset lengths). Emitted predicates are not
//! simplified here; the caller runs them through the online check.

mod rules;
mod value;

use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::Arc;

use crate::constraints::{BoolExpr, Kind, NumExpr, Pred, ShapeExpr, SymbolGen};
use crate::pos::SourcePos;
use crate::simplify::{interval_of, known_rank, simplify_num, simplify_shape, Ranges};

pub use value::{Dataset, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("unknown operation '{0}'")]
    UnknownOp(String),
    #[error("{op}: rank of {what} is not statically known")]
    DontKnowRank { op: String, what: String },
    #[error("{op}: {what} is not statically determined")]
    Undetermined { op: String, what: String },
    #[error("{op}: at most one dimension may be -1")]
    MultipleInferredDims { op: String },
    #[error("{op}: {message}")]
    BadArgs { op: String, message: String },
}

/// Shape information for a named dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct DatasetSpec {
    /// Number of samples; symbolic when absent.
    #[serde(default)]
    pub length: Option<i64>,
    #[serde(default)]
    pub item_shape: Option<Vec<i64>>,
    #[serde(default)]
    pub label_shape: Option<Vec<i64>>,
}

/// Built-in dataset stubs: (name, length, item shape).
pub const DATASET_STUBS: &[(&str, i64, &[i64])] = &[
    ("mnist", 60000, &[1, 28, 28]),
    ("fashion_mnist", 60000, &[1, 28, 28]),
    ("cifar10", 50000, &[3, 32, 32]),
    ("cifar100", 50000, &[3, 32, 32]),
];

/// State shared by a rule application: fresh symbols, the ranges known on
/// the current path, and the constraints emitted so far.
pub struct OpCtx<'a> {
    pub syms: &'a mut SymbolGen,
    pub ranges: &'a Ranges,
    pub datasets: &'a BTreeMap<String, DatasetSpec>,
    pub origin: SourcePos,
    pub op: Arc<str>,
    pub emitted: Vec<(Kind, Pred)>,
}

impl<'a> OpCtx<'a> {
    pub fn new(syms: &'a mut SymbolGen, ranges: &'a Ranges, datasets: &'a BTreeMap<String, DatasetSpec>, origin: SourcePos, op: &str) -> Self {
        OpCtx {
            syms,
            ranges,
            datasets,
            origin,
            op: Arc::from(op),
            emitted: Vec::new(),
        }
    }

    pub fn soft(&mut self, b: BoolExpr) {
        self.emitted.push((Kind::Soft, Pred::Atom(b)));
    }

    pub fn hard(&mut self, b: BoolExpr) {
        self.emitted.push((Kind::Hard, Pred::Atom(b)));
    }

    /// A fresh number symbol with hint `name@file:line`.
    pub fn fresh(&mut self, name: &str) -> NumExpr {
        let hint = format!("{name}@{}:{}", self.origin.file, self.origin.line);
        self.syms.fresh_num(hint)
    }

    pub fn num(&self, e: &NumExpr) -> NumExpr {
        simplify_num(e, self.ranges)
    }

    pub fn shape(&self, s: &ShapeExpr) -> ShapeExpr {
        simplify_shape(s, self.ranges)
    }

    /// Constant value of `e` on this path, if determined.
    pub fn konst(&self, e: &NumExpr) -> Option<i64> {
        let s = self.num(e);
        s.as_const().or_else(|| interval_of(&s, self.ranges).as_point())
    }

    /// Sign of `e` on this path: Some(true) when `e >= 0` always holds,
    /// Some(false) when `e < 0` always holds.
    pub fn nonneg(&self, e: &NumExpr) -> Option<bool> {
        let i = interval_of(&self.num(e), self.ranges);
        if i.lo.is_some_and(|l| l >= 0) {
            Some(true)
        } else if i.hi.is_some_and(|h| h < 0) {
            Some(false)
        } else {
            None
        }
    }

    pub fn rank(&self, s: &ShapeExpr) -> Option<usize> {
        known_rank(&self.shape(s), self.ranges)
    }

    pub fn require_rank(&self, s: &ShapeExpr, what: &str) -> Result<usize, OpError> {
        self.rank(s).ok_or_else(|| OpError::DontKnowRank {
            op: self.op.to_string(),
            what: what.to_string(),
        })
    }

    /// Dimensions of a shape of known rank.
    pub fn dims(&self, s: &ShapeExpr, what: &str) -> Result<Vec<NumExpr>, OpError> {
        let s = self.shape(s);
        if let ShapeExpr::Tuple(d) = &s {
            return Ok(d.clone());
        }
        let r = self.require_rank(&s, what)?;
        Ok((0..r).map(|i| self.num(&s.dim(i as i64))).collect())
    }

    pub fn bad(&self, message: impl Into<String>) -> OpError {
        OpError::BadArgs {
            op: self.op.to_string(),
            message: message.into(),
        }
    }

    pub fn undetermined(&self, what: impl Into<String>) -> OpError {
        OpError::Undetermined {
            op: self.op.to_string(),
            what: what.into(),
        }
    }
}

/// Keyword arguments accepted and ignored by every operation.
const IGNORED_KWARGS: &[&str] = &[
    "dtype",
    "device",
    "requires_grad",
    "shuffle",
    "num_workers",
    "inplace",
    "bias",
    "train",
    "transform",
    "download",
    "pin_memory",
    "non_blocking",
];

/// Positional and keyword arguments of one operation call.
pub struct Args<'v> {
    pub pos: &'v [Value],
    pub kw: &'v [(Arc<str>, Value)],
}

impl<'v> Args<'v> {
    pub fn new(pos: &'v [Value], kw: &'v [(Arc<str>, Value)]) -> Self {
        Args { pos, kw }
    }

    /// The argument at position `i` or named `name`.
    pub fn get(&self, i: usize, name: &str) -> Option<&'v Value> {
        self.pos.get(i).or_else(|| self.kw.iter().find(|(k, _)| &**k == name).map(|(_, v)| v))
    }

    fn check(&self, ctx: &OpCtx, names: &[&str], variadic: bool) -> Result<(), OpError> {
        if !variadic && self.pos.len() > names.len() {
            return Err(ctx.bad(format!("takes at most {} positional arguments, got {}", names.len(), self.pos.len())));
        }
        for (k, _) in self.kw {
            match names.iter().position(|n| *n == &**k) {
                Some(i) if i < self.pos.len() => return Err(ctx.bad(format!("argument '{k}' given twice"))),
                Some(_) => {}
                None if IGNORED_KWARGS.contains(&&**k) => {}
                None => return Err(ctx.bad(format!("unexpected keyword argument '{k}'"))),
            }
        }
        Ok(())
    }

    pub fn req(&self, ctx: &OpCtx, i: usize, name: &str) -> Result<&'v Value, OpError> {
        self.get(i, name).ok_or_else(|| ctx.bad(format!("missing argument '{name}'")))
    }

    pub fn tensor(&self, ctx: &OpCtx, i: usize, name: &str) -> Result<ShapeExpr, OpError> {
        as_tensor(ctx, self.req(ctx, i, name)?, name)
    }

    pub fn num(&self, ctx: &OpCtx, i: usize, name: &str) -> Result<NumExpr, OpError> {
        as_num(ctx, self.req(ctx, i, name)?, name)
    }

    pub fn num_or(&self, ctx: &OpCtx, i: usize, name: &str, default: i64) -> Result<NumExpr, OpError> {
        match self.get(i, name) {
            None | Some(Value::None) => Ok(NumExpr::Const(default)),
            Some(v) => as_num(ctx, v, name),
        }
    }

    pub fn opt_num(&self, ctx: &OpCtx, i: usize, name: &str) -> Result<Option<NumExpr>, OpError> {
        match self.get(i, name) {
            None | Some(Value::None) => Ok(None),
            Some(v) => as_num(ctx, v, name).map(Some),
        }
    }

    pub fn flag(&self, ctx: &OpCtx, i: usize, name: &str, default: bool) -> Result<bool, OpError> {
        match self.get(i, name) {
            None => Ok(default),
            Some(Value::Bool(b)) => b.as_const().ok_or_else(|| ctx.undetermined(format!("flag '{name}'"))),
            Some(v) => Err(ctx.bad(format!("'{name}' must be a boolean, got {}", v.kind_name()))),
        }
    }

    /// Dimension list given either as separate numbers from position `i` or
    /// as one tuple, list or size argument.
    pub fn dims_from(&self, ctx: &OpCtx, i: usize, name: &str) -> Result<Vec<NumExpr>, OpError> {
        let rest = if self.pos.len() > i {
            &self.pos[i..]
        } else {
            match self.kw.iter().find(|(k, _)| &**k == name) {
                Some((_, v)) => std::slice::from_ref(v),
                None => &[],
            }
        };
        match rest {
            [v @ (Value::Tuple(_) | Value::List(_) | Value::Size(_))] => as_dims(ctx, v, name),
            _ => rest.iter().map(|v| as_num(ctx, v, name)).collect(),
        }
    }
}

pub fn as_tensor(ctx: &OpCtx, v: &Value, what: &str) -> Result<ShapeExpr, OpError> {
    match v {
        Value::Tensor(s) => Ok(s.clone()),
        other => Err(ctx.bad(format!("'{what}' must be a tensor, got {}", other.kind_name()))),
    }
}

pub fn as_num(ctx: &OpCtx, v: &Value, what: &str) -> Result<NumExpr, OpError> {
    match v {
        Value::Num(n) => Ok(n.clone()),
        Value::Bool(b) => match b.as_const() {
            Some(b) => Ok(NumExpr::Const(b as i64)),
            None => Err(ctx.bad(format!("'{what}' must be a number, got a symbolic boolean"))),
        },
        other => Err(ctx.bad(format!("'{what}' must be a number, got {}", other.kind_name()))),
    }
}

/// Dimensions from a tuple, list, size or single number.
pub fn as_dims(ctx: &OpCtx, v: &Value, what: &str) -> Result<Vec<NumExpr>, OpError> {
    match v {
        Value::Tuple(items) | Value::List(items) => items.iter().map(|x| as_num(ctx, x, what)).collect(),
        Value::Size(s) => ctx.dims(s, what),
        Value::Num(n) => Ok(vec![n.clone()]),
        other => Err(ctx.bad(format!("'{what}' must be a list of dimensions, got {}", other.kind_name()))),
    }
}

pub fn as_tensors(ctx: &OpCtx, v: &Value, what: &str) -> Result<Vec<ShapeExpr>, OpError> {
    match v {
        Value::Tuple(items) | Value::List(items) => items.iter().map(|x| as_tensor(ctx, x, what)).collect(),
        other => Err(ctx.bad(format!("'{what}' must be a list of tensors, got {}", other.kind_name()))),
    }
}

type Apply = fn(&mut OpCtx, &Args) -> Result<Value, OpError>;

/// One catalog entry.
pub struct OpRule {
    pub name: &'static str,
    /// Other names resolving to the same rule.
    pub aliases: &'static [&'static str],
    /// Parameter names, positional order. A trailing `*` marks a variadic
    /// parameter.
    pub params: &'static [&'static str],
    pub result: &'static str,
    pub constraints: &'static str,
    /// Semantics taken from framework documentation rather than a published
    /// rule.
    pub extrapolated: bool,
    pub apply: Apply,
}

impl OpRule {
    fn variadic(&self) -> bool {
        self.params.last().is_some_and(|p| p.ends_with('*'))
    }

    fn param_names(&self) -> Vec<&'static str> {
        self.params.iter().map(|p| p.trim_end_matches('*').trim_end_matches('?')).collect()
    }
}

pub fn catalog() -> &'static [OpRule] {
    rules::CATALOG
}

pub fn lookup(name: &str) -> Result<&'static OpRule, OpError> {
    catalog()
        .iter()
        .find(|r| r.name == name || r.aliases.contains(&name))
        .ok_or_else(|| OpError::UnknownOp(name.to_string()))
}

/// Applies operation `name`; emitted constraints are left in `ctx.emitted`.
pub fn apply(ctx: &mut OpCtx, name: &str, pos: &[Value], kw: &[(Arc<str>, Value)]) -> Result<Value, OpError> {
    let rule = lookup(name)?;
    let args = Args::new(pos, kw);
    args.check(ctx, &rule.param_names(), rule.variadic())?;
    (rule.apply)(ctx, &args)
}

/// The catalog as a markdown table.
pub fn catalog_markdown() -> String {
    let mut out = String::new();
    out.push_str("# Operation catalog\n\n");
    out.push_str("Generated by `tslcheck catalog`. `x[i]` is dimension `i`, `x[a:b]` a shape slice, `@` shape concatenation, `r` the rank of the first tensor argument. Rules marked `*` follow framework documentation.\n\n");
    out.push_str("| op | aliases | arguments | result | constraints |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in catalog() {
        let star = if r.extrapolated { " *" } else { "" };
        let aliases = r.aliases.join(", ");
        let _ = writeln!(
            out,
            "| `{}`{star} | {} | {} | {} | {} |",
            r.name,
            aliases,
            r.params.join(", "),
            r.result,
            r.constraints
        );
    }
    out
}
