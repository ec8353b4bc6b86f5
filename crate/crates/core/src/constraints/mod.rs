//! Symbolic value expressions and shape constraints.
//!
//! Three sorts of expressions are tracked: shapes (tuples of dimensions),
//! numbers (integers) and booleans. Constraints are boolean formulas over
//! those expressions, tagged hard (must hold on any real execution) or soft
//! (operation preconditions whose violation is a shape error).

mod eval;
mod pred;
mod subst;
mod text;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

pub use eval::{concrete_eval, eval_bool, eval_num, eval_pred, eval_shape, floor_div, floor_mod, Assignment, EvalError, Ground};
pub use pred::{Constraint, ConstraintSet, Kind, Pred};
pub use subst::{free_symbols, free_symbols_pred, substitute, substitute_pred, Binding, SortMismatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Shape,
    Num,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Shape => "shape",
            Sort::Num => "number",
            Sort::Bool => "boolean",
        })
    }
}

/// An unknown value. Identity is the numeric id alone; the hint only makes
/// reports readable.
#[derive(Debug, Clone)]
pub struct Symbol {
    pub id: u32,
    pub sort: Sort,
    pub hint: Arc<str>,
}

impl Symbol {
    pub fn new(id: u32, sort: Sort, hint: impl Into<Arc<str>>) -> Self {
        Symbol {
            id,
            sort,
            hint: hint.into(),
        }
    }

    /// Stable identifier of the form `s<id>_<hint>` restricted to
    /// `[A-Za-z0-9_]`, used in reports and SMT-LIB output.
    pub fn name(&self) -> String {
        let mut out = format!("s{}", self.id);
        if !self.hint.is_empty() {
            out.push('_');
            let mut last_us = true;
            for ch in self.hint.chars() {
                if ch.is_ascii_alphanumeric() {
                    out.push(ch);
                    last_us = false;
                } else if !last_us {
                    out.push('_');
                    last_us = true;
                }
            }
            while out.ends_with('_') {
                out.pop();
            }
        }
        out
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

/// Source of fresh symbols. Ids are unique within one analysis run.
#[derive(Debug, Clone, Default)]
pub struct SymbolGen {
    next: u32,
}

impl SymbolGen {
    pub fn new() -> Self {
        SymbolGen::default()
    }

    /// Continue numbering after `start`, for callers mixing in symbols built
    /// elsewhere.
    pub fn starting_at(start: u32) -> Self {
        SymbolGen { next: start }
    }

    pub fn fresh(&mut self, sort: Sort, hint: impl Into<Arc<str>>) -> Symbol {
        let id = self.next;
        self.next += 1;
        Symbol::new(id, sort, hint)
    }

    pub fn fresh_num(&mut self, hint: impl Into<Arc<str>>) -> NumExpr {
        NumExpr::Sym(self.fresh(Sort::Num, hint))
    }

    pub fn issued(&self) -> u32 {
        self.next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumOp {
    Add,
    Sub,
    Mul,
    /// Floor division.
    Div,
    /// Floor modulo; the result has the sign of the divisor.
    Mod,
}

impl NumOp {
    pub fn symbol(self) -> &'static str {
        match self {
            NumOp::Add => "+",
            NumOp::Sub => "-",
            NumOp::Mul => "*",
            NumOp::Div => "div",
            NumOp::Mod => "mod",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumExpr {
    Const(i64),
    Sym(Symbol),
    Bin(NumOp, Box<NumExpr>, Box<NumExpr>),
    Rank(Box<ShapeExpr>),
    Index(Box<ShapeExpr>, Box<NumExpr>),
    Prod(Box<ShapeExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeExpr {
    Tuple(Vec<NumExpr>),
    Sym(Symbol),
    Slice(Box<ShapeExpr>, Box<NumExpr>, Box<NumExpr>),
    Concat(Box<ShapeExpr>, Box<ShapeExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    Const(bool),
    Sym(Symbol),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Eq(Box<ValueExpr>, Box<ValueExpr>),
    Lt(Box<NumExpr>, Box<NumExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueExpr {
    Shape(ShapeExpr),
    Num(NumExpr),
    Bool(BoolExpr),
}

impl ValueExpr {
    pub fn sort(&self) -> Sort {
        match self {
            ValueExpr::Shape(_) => Sort::Shape,
            ValueExpr::Num(_) => Sort::Num,
            ValueExpr::Bool(_) => Sort::Bool,
        }
    }
}

impl From<NumExpr> for ValueExpr {
    fn from(e: NumExpr) -> Self {
        ValueExpr::Num(e)
    }
}

impl From<ShapeExpr> for ValueExpr {
    fn from(e: ShapeExpr) -> Self {
        ValueExpr::Shape(e)
    }
}

impl From<BoolExpr> for ValueExpr {
    fn from(e: BoolExpr) -> Self {
        ValueExpr::Bool(e)
    }
}

impl From<i64> for NumExpr {
    fn from(n: i64) -> Self {
        NumExpr::Const(n)
    }
}

impl NumExpr {
    pub fn bin(op: NumOp, a: NumExpr, b: NumExpr) -> NumExpr {
        NumExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn floor_div(self, rhs: NumExpr) -> NumExpr {
        NumExpr::bin(NumOp::Div, self, rhs)
    }

    pub fn modulo(self, rhs: NumExpr) -> NumExpr {
        NumExpr::bin(NumOp::Mod, self, rhs)
    }

    pub fn rank(s: ShapeExpr) -> NumExpr {
        NumExpr::Rank(Box::new(s))
    }

    pub fn index(s: ShapeExpr, i: impl Into<NumExpr>) -> NumExpr {
        NumExpr::Index(Box::new(s), Box::new(i.into()))
    }

    pub fn prod(s: ShapeExpr) -> NumExpr {
        NumExpr::Prod(Box::new(s))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            NumExpr::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn eq(self, rhs: impl Into<NumExpr>) -> BoolExpr {
        BoolExpr::Eq(Box::new(ValueExpr::Num(self)), Box::new(ValueExpr::Num(rhs.into())))
    }

    pub fn lt(self, rhs: impl Into<NumExpr>) -> BoolExpr {
        BoolExpr::Lt(Box::new(self), Box::new(rhs.into()))
    }

    /// `self <= rhs`, encoded as `not (rhs < self)`.
    pub fn le(self, rhs: impl Into<NumExpr>) -> BoolExpr {
        BoolExpr::not(BoolExpr::Lt(Box::new(rhs.into()), Box::new(self)))
    }
}

macro_rules! num_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl ops::$trait for NumExpr {
            type Output = NumExpr;
            fn $method(self, rhs: NumExpr) -> NumExpr {
                NumExpr::bin($op, self, rhs)
            }
        }
        impl ops::$trait<i64> for NumExpr {
            type Output = NumExpr;
            fn $method(self, rhs: i64) -> NumExpr {
                NumExpr::bin($op, self, NumExpr::Const(rhs))
            }
        }
    };
}

num_binop!(Add, add, NumOp::Add);
num_binop!(Sub, sub, NumOp::Sub);
num_binop!(Mul, mul, NumOp::Mul);

impl ShapeExpr {
    pub fn tuple<I, T>(dims: I) -> ShapeExpr
    where
        I: IntoIterator<Item = T>,
        T: Into<NumExpr>,
    {
        ShapeExpr::Tuple(dims.into_iter().map(Into::into).collect())
    }

    pub fn slice(self, lo: impl Into<NumExpr>, hi: impl Into<NumExpr>) -> ShapeExpr {
        ShapeExpr::Slice(Box::new(self), Box::new(lo.into()), Box::new(hi.into()))
    }

    pub fn concat(self, rhs: ShapeExpr) -> ShapeExpr {
        ShapeExpr::Concat(Box::new(self), Box::new(rhs))
    }

    pub fn dim(&self, i: impl Into<NumExpr>) -> NumExpr {
        NumExpr::index(self.clone(), i)
    }

    pub fn rank_expr(&self) -> NumExpr {
        NumExpr::rank(self.clone())
    }

    pub fn as_tuple(&self) -> Option<&[NumExpr]> {
        match self {
            ShapeExpr::Tuple(d) => Some(d),
            _ => None,
        }
    }

    /// Dimensions as constants when the whole shape is ground.
    pub fn as_ground(&self) -> Option<Vec<i64>> {
        self.as_tuple()?.iter().map(NumExpr::as_const).collect()
    }

    pub fn eq(self, rhs: ShapeExpr) -> BoolExpr {
        BoolExpr::Eq(Box::new(ValueExpr::Shape(self)), Box::new(ValueExpr::Shape(rhs)))
    }
}

impl BoolExpr {
    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(a))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        let mut it = items.into_iter();
        match it.next() {
            None => BoolExpr::Const(true),
            Some(first) => it.fold(first, BoolExpr::and),
        }
    }

    pub fn any(items: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        let mut it = items.into_iter();
        match it.next() {
            None => BoolExpr::Const(false),
            Some(first) => it.fold(first, BoolExpr::or),
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            BoolExpr::Const(b) => Some(*b),
            _ => None,
        }
    }
}
