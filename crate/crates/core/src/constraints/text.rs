//! Canonical s-expression rendering, used in reports and golden tests.

use std::fmt::{self, Display, Formatter};

use super::{BoolExpr, NumExpr, Pred, ShapeExpr, Symbol, ValueExpr};

impl Display for Symbol {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Display for NumExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Const(n) => write!(f, "{n}"),
            NumExpr::Sym(s) => write!(f, "{s}"),
            NumExpr::Bin(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            NumExpr::Rank(s) => write!(f, "(rank {s})"),
            NumExpr::Index(s, i) => write!(f, "(index {s} {i})"),
            NumExpr::Prod(s) => write!(f, "(prod {s})"),
        }
    }
}

impl Display for ShapeExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ShapeExpr::Tuple(dims) => {
                f.write_str("(shape")?;
                for d in dims {
                    write!(f, " {d}")?;
                }
                f.write_str(")")
            }
            ShapeExpr::Sym(s) => write!(f, "{s}"),
            ShapeExpr::Slice(s, lo, hi) => write!(f, "(slice {s} {lo} {hi})"),
            ShapeExpr::Concat(a, b) => write!(f, "(concat {a} {b})"),
        }
    }
}

impl Display for BoolExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Const(b) => write!(f, "{b}"),
            BoolExpr::Sym(s) => write!(f, "{s}"),
            BoolExpr::And(a, b) => write!(f, "(and {a} {b})"),
            BoolExpr::Or(a, b) => write!(f, "(or {a} {b})"),
            BoolExpr::Not(a) => write!(f, "(not {a})"),
            BoolExpr::Eq(a, b) => write!(f, "(= {a} {b})"),
            BoolExpr::Lt(a, b) => write!(f, "(< {a} {b})"),
        }
    }
}

impl Display for ValueExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::Num(n) => n.fmt(f),
            ValueExpr::Shape(s) => s.fmt(f),
            ValueExpr::Bool(b) => b.fmt(f),
        }
    }
}

impl Display for Pred {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Atom(b) => b.fmt(f),
            Pred::And(items) | Pred::Or(items) => {
                let head = if matches!(self, Pred::And(_)) { "and" } else { "or" };
                if items.is_empty() {
                    return f.write_str(if head == "and" { "true" } else { "false" });
                }
                write!(f, "({head}")?;
                for item in items {
                    write!(f, " {item}")?;
                }
                f.write_str(")")
            }
            Pred::Not(a) => write!(f, "(not {a})"),
            Pred::Forall { var, lo, hi, body } => write!(f, "(forall {var} {lo} {hi} {body})"),
        }
    }
}
