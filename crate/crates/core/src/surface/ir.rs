//! Kernel IR: an expression language where statements have become nested
//! lets, branches produce the variables they update, and loops thread their
//! updated variables through a tuple.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::pos::SourcePos;

pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrProgram {
    pub functions: BTreeMap<Name, IrFunction>,
    pub entry: IrExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: IrExpr,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrExpr {
    pub kind: IrKind,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Name(Name),
    Tuple(Vec<Pattern>),
}

impl Pattern {
    pub fn names(&self) -> Vec<&Name> {
        match self {
            Pattern::Name(n) => vec![n],
            Pattern::Tuple(items) => items.iter().flat_map(Pattern::names).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrOp {
    Add,
    Sub,
    Mul,
    FloorDiv,
    Mod,
    Lt,
    Eq,
    And,
    Or,
}

impl IrOp {
    pub fn text(self) -> &'static str {
        match self {
            IrOp::Add => "+",
            IrOp::Sub => "-",
            IrOp::Mul => "*",
            IrOp::FloorDiv => "//",
            IrOp::Mod => "%",
            IrOp::Lt => "<",
            IrOp::Eq => "=",
            IrOp::And => "and",
            IrOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrKind {
    Int(i64),
    Bool(bool),
    Str(Arc<str>),
    NoneConst,
    Var(Name),
    GlobalGet(Name),
    /// Writes a module-level variable; evaluates to None.
    GlobalSet(Name, Box<IrExpr>),
    Let(Pattern, Box<IrExpr>, Box<IrExpr>),
    If(Box<IrExpr>, Box<IrExpr>, Box<IrExpr>),
    BinOp(IrOp, Box<IrExpr>, Box<IrExpr>),
    Not(Box<IrExpr>),
    /// Call of a program function with arguments already matched to
    /// parameters.
    Call(Name, Vec<IrExpr>),
    TensorExpr {
        op: Name,
        args: Vec<IrExpr>,
        kwargs: Vec<(Name, IrExpr)>,
    },
    Index(Box<IrExpr>, Box<IrExpr>),
    Slice(Box<IrExpr>, Option<Box<IrExpr>>, Option<Box<IrExpr>>),
    Tuple(Vec<IrExpr>),
    List(Vec<IrExpr>),
    Seq(Vec<IrExpr>),
    /// Evaluates `body` for `var` = lo, lo+step, ... below hi. The body
    /// yields a tuple of the `carried` variables, which are rebound for the
    /// next iteration; the loop yields their final tuple.
    ForRange {
        var: Name,
        lo: i64,
        hi: i64,
        step: i64,
        carried: Vec<Name>,
        body: Box<IrExpr>,
    },
    /// Dataset iteration, analyzed for a regular and a residual minibatch.
    /// Carries variables like `ForRange`.
    ForDataset {
        pattern: Pattern,
        dataset: Box<IrExpr>,
        carried: Vec<Name>,
        body: Box<IrExpr>,
    },
}

impl IrExpr {
    pub fn new(kind: IrKind, pos: SourcePos) -> IrExpr {
        IrExpr { kind, pos }
    }

    pub fn boxed(self) -> Box<IrExpr> {
        Box::new(self)
    }

    /// Whether evaluating the expression can emit constraints or effects.
    pub fn is_pure(&self) -> bool {
        match &self.kind {
            IrKind::Int(_) | IrKind::Bool(_) | IrKind::Str(_) | IrKind::NoneConst | IrKind::Var(_) | IrKind::GlobalGet(_) => true,
            IrKind::BinOp(_, a, b) => a.is_pure() && b.is_pure(),
            IrKind::Not(a) => a.is_pure(),
            IrKind::Tuple(items) | IrKind::List(items) => items.iter().all(IrExpr::is_pure),
            _ => false,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Name(n) => f.write_str(n),
            Pattern::Tuple(items) => {
                f.write_str("(")?;
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn list(f: &mut fmt::Formatter<'_>, head: &str, items: &[IrExpr]) -> fmt::Result {
    write!(f, "({head}")?;
    for x in items {
        write!(f, " {x}")?;
    }
    f.write_str(")")
}

impl fmt::Display for IrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            IrKind::Int(n) => write!(f, "{n}"),
            IrKind::Bool(b) => write!(f, "{b}"),
            IrKind::Str(s) => write!(f, "{s:?}"),
            IrKind::NoneConst => f.write_str("none"),
            IrKind::Var(n) => f.write_str(n),
            IrKind::GlobalGet(n) => write!(f, "(global {n})"),
            IrKind::GlobalSet(n, e) => write!(f, "(set-global {n} {e})"),
            IrKind::Let(p, b, body) => write!(f, "(let {p} {b} {body})"),
            IrKind::If(c, t, e) => write!(f, "(if {c} {t} {e})"),
            IrKind::BinOp(op, a, b) => write!(f, "({} {a} {b})", op.text()),
            IrKind::Not(a) => write!(f, "(not {a})"),
            IrKind::Call(n, args) => list(f, &format!("call {n}"), args),
            IrKind::TensorExpr { op, args, kwargs } => {
                write!(f, "(tensor {op}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                for (k, v) in kwargs {
                    write!(f, " :{k} {v}")?;
                }
                f.write_str(")")
            }
            IrKind::Index(a, i) => write!(f, "(index {a} {i})"),
            IrKind::Slice(a, lo, hi) => {
                write!(f, "(slice {a}")?;
                for b in [lo, hi] {
                    match b {
                        Some(x) => write!(f, " {x}")?,
                        None => f.write_str(" _")?,
                    }
                }
                f.write_str(")")
            }
            IrKind::Tuple(items) => list(f, "tuple", items),
            IrKind::List(items) => list(f, "list", items),
            IrKind::Seq(items) => list(f, "seq", items),
            IrKind::ForRange {
                var,
                lo,
                hi,
                step,
                carried,
                body,
            } => write!(f, "(for-range {var} {lo} {hi} {step} ({}) {body})", carried.join(" ")),
            IrKind::ForDataset {
                pattern,
                dataset,
                carried,
                body,
            } => write!(f, "(for-dataset {pattern} {dataset} ({}) {body})", carried.join(" ")),
        }
    }
}
