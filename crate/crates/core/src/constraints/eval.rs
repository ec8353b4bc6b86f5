//! Ground semantics of expressions. This is the reference every oracle test
//! compares against.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{BoolExpr, NumExpr, NumOp, Pred, ShapeExpr, Symbol, ValueExpr};

/// Forall ranges wider than this are refused rather than iterated.
const MAX_FORALL_SPAN: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ground {
    Int(i64),
    Tuple(Vec<i64>),
    Bool(bool),
}

impl fmt::Display for Ground {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ground::Int(n) => write!(f, "{n}"),
            Ground::Bool(b) => write!(f, "{b}"),
            Ground::Tuple(d) => {
                f.write_str("(")?;
                for (i, x) in d.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub type Assignment = BTreeMap<Symbol, Ground>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: i64, rank: usize },
    #[error("slice [{lo}:{hi}] out of range for rank {rank}")]
    SliceOutOfRange { lo: i64, hi: i64, rank: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    Overflow,
    #[error("symbol {0} has no assigned value")]
    Unassigned(String),
    #[error("symbol {0} is assigned a value of the wrong sort")]
    SortMismatch(String),
    #[error("quantifier range too large")]
    ForallTooLarge,
}

pub fn floor_div(a: i64, b: i64) -> Result<i64, EvalError> {
    if b == 0 {
        return Err(EvalError::DivisionByZero);
    }
    let q = a.checked_div(b).ok_or(EvalError::Overflow)?;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        Ok(q - 1)
    } else {
        Ok(q)
    }
}

pub fn floor_mod(a: i64, b: i64) -> Result<i64, EvalError> {
    let q = floor_div(a, b)?;
    q.checked_mul(b)
        .and_then(|qb| a.checked_sub(qb))
        .ok_or(EvalError::Overflow)
}

fn apply(op: NumOp, a: i64, b: i64) -> Result<i64, EvalError> {
    match op {
        NumOp::Add => a.checked_add(b).ok_or(EvalError::Overflow),
        NumOp::Sub => a.checked_sub(b).ok_or(EvalError::Overflow),
        NumOp::Mul => a.checked_mul(b).ok_or(EvalError::Overflow),
        NumOp::Div => floor_div(a, b),
        NumOp::Mod => floor_mod(a, b),
    }
}

fn lookup<'a>(sym: &Symbol, rho: &'a Assignment) -> Result<&'a Ground, EvalError> {
    rho.get(sym).ok_or_else(|| EvalError::Unassigned(sym.name()))
}

pub fn eval_num(e: &NumExpr, rho: &Assignment) -> Result<i64, EvalError> {
    match e {
        NumExpr::Const(n) => Ok(*n),
        NumExpr::Sym(s) => match lookup(s, rho)? {
            Ground::Int(n) => Ok(*n),
            _ => Err(EvalError::SortMismatch(s.name())),
        },
        NumExpr::Bin(op, a, b) => {
            let a = eval_num(a, rho)?;
            let b = eval_num(b, rho)?;
            apply(*op, a, b)
        }
        NumExpr::Rank(s) => Ok(eval_shape(s, rho)?.len() as i64),
        NumExpr::Index(s, i) => {
            let dims = eval_shape(s, rho)?;
            let i = eval_num(i, rho)?;
            if i < 0 || i as usize >= dims.len() {
                return Err(EvalError::IndexOutOfRange {
                    index: i,
                    rank: dims.len(),
                });
            }
            Ok(dims[i as usize])
        }
        NumExpr::Prod(s) => eval_shape(s, rho)?
            .iter()
            .try_fold(1i64, |acc, d| acc.checked_mul(*d).ok_or(EvalError::Overflow)),
    }
}

pub fn eval_shape(e: &ShapeExpr, rho: &Assignment) -> Result<Vec<i64>, EvalError> {
    match e {
        ShapeExpr::Tuple(dims) => dims.iter().map(|d| eval_num(d, rho)).collect(),
        ShapeExpr::Sym(s) => match lookup(s, rho)? {
            Ground::Tuple(d) => Ok(d.clone()),
            _ => Err(EvalError::SortMismatch(s.name())),
        },
        ShapeExpr::Slice(s, lo, hi) => {
            let dims = eval_shape(s, rho)?;
            let lo = eval_num(lo, rho)?;
            let hi = eval_num(hi, rho)?;
            if lo < 0 || lo > hi || hi as usize > dims.len() {
                return Err(EvalError::SliceOutOfRange {
                    lo,
                    hi,
                    rank: dims.len(),
                });
            }
            Ok(dims[lo as usize..hi as usize].to_vec())
        }
        ShapeExpr::Concat(a, b) => {
            let mut a = eval_shape(a, rho)?;
            a.extend(eval_shape(b, rho)?);
            Ok(a)
        }
    }
}

pub fn eval_bool(e: &BoolExpr, rho: &Assignment) -> Result<bool, EvalError> {
    match e {
        BoolExpr::Const(b) => Ok(*b),
        BoolExpr::Sym(s) => match lookup(s, rho)? {
            Ground::Bool(b) => Ok(*b),
            _ => Err(EvalError::SortMismatch(s.name())),
        },
        BoolExpr::And(a, b) => Ok(eval_bool(a, rho)? && eval_bool(b, rho)?),
        BoolExpr::Or(a, b) => Ok(eval_bool(a, rho)? || eval_bool(b, rho)?),
        BoolExpr::Not(a) => Ok(!eval_bool(a, rho)?),
        BoolExpr::Eq(a, b) => Ok(concrete_eval(a, rho)? == concrete_eval(b, rho)?),
        BoolExpr::Lt(a, b) => Ok(eval_num(a, rho)? < eval_num(b, rho)?),
    }
}

pub fn eval_pred(p: &Pred, rho: &Assignment) -> Result<bool, EvalError> {
    match p {
        Pred::Atom(b) => eval_bool(b, rho),
        Pred::And(items) => {
            for item in items {
                if !eval_pred(item, rho)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Pred::Or(items) => {
            for item in items {
                if eval_pred(item, rho)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Pred::Not(a) => Ok(!eval_pred(a, rho)?),
        Pred::Forall { var, lo, hi, body } => {
            let lo = eval_num(lo, rho)?;
            let hi = eval_num(hi, rho)?;
            if hi.saturating_sub(lo) > MAX_FORALL_SPAN {
                return Err(EvalError::ForallTooLarge);
            }
            let mut inner = rho.clone();
            for v in lo..=hi {
                inner.insert(var.clone(), Ground::Int(v));
                if !eval_pred(body, &inner)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Evaluates `e` under a total assignment of its free symbols.
pub fn concrete_eval(e: &ValueExpr, rho: &Assignment) -> Result<Ground, EvalError> {
    match e {
        ValueExpr::Num(n) => eval_num(n, rho).map(Ground::Int),
        ValueExpr::Shape(s) => eval_shape(s, rho).map(Ground::Tuple),
        ValueExpr::Bool(b) => eval_bool(b, rho).map(Ground::Bool),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Sort, Symbol};

    fn t(d: &[i64]) -> ShapeExpr {
        ShapeExpr::tuple(d.iter().copied())
    }

    #[test]
    fn prod_of_cube_shape() {
        let e = ValueExpr::Num(NumExpr::prod(t(&[2, 3, 4])));
        assert_eq!(concrete_eval(&e, &Assignment::new()), Ok(Ground::Int(24)));
    }

    #[test]
    fn slice_drops_leading_axis() {
        let e = ValueExpr::Shape(t(&[2, 3, 4]).slice(1, 3));
        assert_eq!(concrete_eval(&e, &Assignment::new()), Ok(Ground::Tuple(vec![3, 4])));
    }

    #[test]
    fn index_past_rank_is_an_error() {
        let e = ValueExpr::Num(t(&[2, 3, 4]).dim(3));
        assert_eq!(
            concrete_eval(&e, &Assignment::new()),
            Err(EvalError::IndexOutOfRange { index: 3, rank: 3 })
        );
    }

    #[test]
    fn slice_never_clamps() {
        let e = ValueExpr::Shape(t(&[2, 3]).slice(1, 5));
        assert!(matches!(
            concrete_eval(&e, &Assignment::new()),
            Err(EvalError::SliceOutOfRange { .. })
        ));
    }

    #[test]
    fn floor_semantics() {
        assert_eq!(floor_div(7, 2), Ok(3));
        assert_eq!(floor_div(-7, 2), Ok(-4));
        assert_eq!(floor_div(7, -2), Ok(-4));
        assert_eq!(floor_mod(-7, 2), Ok(1));
        assert_eq!(floor_mod(7, -2), Ok(-1));
        assert_eq!(floor_div(1, 0), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn symbols_resolve_through_assignment() {
        let a = Symbol::new(0, Sort::Num, "a");
        let s = Symbol::new(1, Sort::Shape, "s");
        let mut rho = Assignment::new();
        rho.insert(a.clone(), Ground::Int(5));
        rho.insert(s.clone(), Ground::Tuple(vec![4, 5]));
        let e = NumExpr::Sym(a).eq(NumExpr::index(ShapeExpr::Sym(s), 1));
        assert_eq!(eval_bool(&e, &rho), Ok(true));
    }

    #[test]
    fn forall_is_inclusive() {
        let v = Symbol::new(9, Sort::Num, "v");
        let p = Pred::Forall {
            var: v.clone(),
            lo: NumExpr::Const(0),
            hi: NumExpr::Const(3),
            body: Box::new(Pred::Atom(NumExpr::Sym(v).lt(4))),
        };
        assert_eq!(eval_pred(&p, &Assignment::new()), Ok(true));
    }
}
