use std::fmt;
use std::sync::Arc;

use crate::constraints::{BoolExpr, NumExpr, ShapeExpr};

/// Runtime value of a kernel-language expression during symbolic
/// evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    None,
    Bool(BoolExpr),
    Num(NumExpr),
    Str(Arc<str>),
    /// A tensor, known only by its shape.
    Tensor(ShapeExpr),
    /// The shape of a tensor as a first-class value (`x.shape`).
    Size(ShapeExpr),
    Tuple(Vec<Value>),
    List(Vec<Value>),
    Dataset(Dataset),
}

/// An epoch of minibatches over a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dataset {
    pub name: Arc<str>,
    /// Total number of samples.
    pub length: NumExpr,
    pub batch: NumExpr,
    pub drop_last: bool,
    /// Shape of one sample.
    pub item: ShapeExpr,
    /// Shape of one label.
    pub label: ShapeExpr,
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::None => "None",
            Value::Bool(_) => "boolean",
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Tensor(_) => "tensor",
            Value::Size(_) => "size",
            Value::Tuple(_) => "tuple",
            Value::List(_) => "list",
            Value::Dataset(_) => "dataset",
        }
    }

    pub fn int(n: i64) -> Value {
        Value::Num(NumExpr::Const(n))
    }
}

fn seq(f: &mut fmt::Formatter<'_>, open: &str, items: &[Value], close: &str) -> fmt::Result {
    f.write_str(open)?;
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => f.write_str("None"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Tensor(s) => write!(f, "tensor{s}"),
            Value::Size(s) => write!(f, "size{s}"),
            Value::Tuple(items) => seq(f, "(", items, ")"),
            Value::List(items) => seq(f, "[", items, "]"),
            Value::Dataset(d) => write!(f, "dataset({}, length={}, batch={}, drop_last={})", d.name, d.length, d.batch, d.drop_last),
        }
    }
}
