//! SMT-LIB2 export of a path's constraint set.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::{elaborate, SolveError};
use crate::constraints::{free_symbols_pred, BoolExpr, NumExpr, NumOp, Pred, ShapeExpr, Sort, Symbol, ValueExpr};

const PRELUDE: &str = "(define-fun pydiv ((a Int) (b Int)) Int (ite (> b 0) (div a b) (div (- a) (- b))))
(define-fun pymod ((a Int) (b Int)) Int (- a (* b (pydiv a b))))
";

fn int(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

fn dims(s: &ShapeExpr) -> Result<Vec<String>, SolveError> {
    match s {
        ShapeExpr::Tuple(ds) => ds.iter().map(num).collect(),
        ShapeExpr::Sym(sym) => Err(SolveError::UnresolvedRank(sym.name())),
        ShapeExpr::Concat(a, b) => {
            let mut out = dims(a)?;
            out.extend(dims(b)?);
            Ok(out)
        }
        ShapeExpr::Slice(inner, lo, hi) => {
            let all = dims(inner)?;
            match (lo.as_const(), hi.as_const()) {
                (Some(lo), Some(hi)) if 0 <= lo && lo <= hi && hi as usize <= all.len() => {
                    Ok(all[lo as usize..hi as usize].to_vec())
                }
                _ => Err(SolveError::UnresolvedRank(s.to_string())),
            }
        }
    }
}

fn num(e: &NumExpr) -> Result<String, SolveError> {
    Ok(match e {
        NumExpr::Const(n) => int(*n),
        NumExpr::Sym(s) => s.name(),
        NumExpr::Bin(op, a, b) => {
            let f = match op {
                NumOp::Add => "+",
                NumOp::Sub => "-",
                NumOp::Mul => "*",
                NumOp::Div => "pydiv",
                NumOp::Mod => "pymod",
            };
            format!("({f} {} {})", num(a)?, num(b)?)
        }
        NumExpr::Rank(s) => dims(s)?.len().to_string(),
        NumExpr::Prod(s) => {
            let ds = dims(s)?;
            match ds.len() {
                0 => "1".into(),
                1 => ds[0].clone(),
                _ => format!("(* {})", ds.join(" ")),
            }
        }
        NumExpr::Index(s, i) => {
            let ds = dims(s)?;
            if let Some(k) = i.as_const() {
                if 0 <= k && (k as usize) < ds.len() {
                    return Ok(ds[k as usize].clone());
                }
            }
            let i = num(i)?;
            // Out-of-range positions fall through to the last dimension.
            let mut out = ds.last().cloned().unwrap_or_else(|| "0".into());
            for (k, d) in ds.iter().enumerate().rev().skip(1) {
                out = format!("(ite (= {i} {k}) {d} {out})");
            }
            out
        }
    })
}

fn value_eq(a: &ValueExpr, b: &ValueExpr) -> Result<String, SolveError> {
    Ok(match (a, b) {
        (ValueExpr::Num(x), ValueExpr::Num(y)) => format!("(= {} {})", num(x)?, num(y)?),
        (ValueExpr::Bool(x), ValueExpr::Bool(y)) => format!("(= {} {})", boolean(x)?, boolean(y)?),
        (ValueExpr::Shape(x), ValueExpr::Shape(y)) => {
            let (x, y) = (dims(x)?, dims(y)?);
            if x.len() != y.len() {
                "false".into()
            } else if x.is_empty() {
                "true".into()
            } else {
                let eqs: Vec<String> = x.iter().zip(&y).map(|(p, q)| format!("(= {p} {q})")).collect();
                if eqs.len() == 1 {
                    eqs[0].clone()
                } else {
                    format!("(and {})", eqs.join(" "))
                }
            }
        }
        _ => "false".into(),
    })
}

fn boolean(e: &BoolExpr) -> Result<String, SolveError> {
    Ok(match e {
        BoolExpr::Const(b) => b.to_string(),
        BoolExpr::Sym(s) => s.name(),
        BoolExpr::And(a, b) => format!("(and {} {})", boolean(a)?, boolean(b)?),
        BoolExpr::Or(a, b) => format!("(or {} {})", boolean(a)?, boolean(b)?),
        BoolExpr::Not(a) => format!("(not {})", boolean(a)?),
        BoolExpr::Eq(a, b) => value_eq(a, b)?,
        BoolExpr::Lt(a, b) => format!("(< {} {})", num(a)?, num(b)?),
    })
}

fn nary(op: &str, unit: &str, items: &[Pred]) -> Result<String, SolveError> {
    let parts: Vec<String> = items.iter().map(pred).collect::<Result<_, _>>()?;
    Ok(match parts.len() {
        0 => unit.into(),
        1 => parts[0].clone(),
        _ => format!("({op} {})", parts.join(" ")),
    })
}

fn pred(p: &Pred) -> Result<String, SolveError> {
    Ok(match p {
        Pred::Atom(b) => boolean(b)?,
        Pred::And(items) => nary("and", "true", items)?,
        Pred::Or(items) => nary("or", "false", items)?,
        Pred::Not(a) => format!("(not {})", pred(a)?),
        Pred::Forall { var, lo, hi, body } => {
            let v = var.name();
            format!(
                "(forall (({v} Int)) (=> (and (<= {} {v}) (<= {v} {})) {}))",
                num(lo)?,
                num(hi)?,
                pred(body)?
            )
        }
    })
}

fn declare(out: &mut String, s: &Symbol) -> Result<(), SolveError> {
    let sort = match s.sort {
        Sort::Num => "Int",
        Sort::Bool => "Bool",
        Sort::Shape => return Err(SolveError::UnresolvedRank(s.name())),
    };
    writeln!(out, "(declare-fun {} () {sort})", s.name()).unwrap();
    Ok(())
}

/// Renders the hard constraints as assertions and the disjunction of negated
/// soft constraints as one more assertion, so `sat` means some soft
/// constraint can fail. An empty set renders as a bare `(check-sat)`.
pub fn emit_smtlib(cs: &crate::constraints::ConstraintSet) -> Result<String, SolveError> {
    if cs.is_empty() {
        return Ok("(check-sat)\n".into());
    }
    let e = elaborate(cs)?;
    let mut syms = BTreeSet::new();
    for (_, p) in e.hard.iter().chain(&e.soft) {
        syms.extend(free_symbols_pred(p));
    }
    let mut out = String::from("(set-logic ALL)\n");
    for s in &syms {
        declare(&mut out, s)?;
    }
    out.push_str(PRELUDE);
    for (i, p) in &e.hard {
        let c = &cs.as_slice()[*i];
        writeln!(out, "; hard gen {} line {}", c.gen, c.origin.line).unwrap();
        writeln!(out, "(assert {})", pred(p)?).unwrap();
    }
    if !e.soft.is_empty() {
        let negs: Vec<String> = e
            .soft
            .iter()
            .map(|(_, p)| pred(p).map(|s| format!("(not {s})")))
            .collect::<Result<_, _>>()?;
        let gens: Vec<String> = e.soft.iter().map(|(i, _)| cs.as_slice()[*i].gen.to_string()).collect();
        writeln!(out, "; soft gens {}", gens.join(" ")).unwrap();
        if negs.len() == 1 {
            writeln!(out, "(assert {})", negs[0]).unwrap();
        } else {
            writeln!(out, "(assert (or {}))", negs.join(" ")).unwrap();
        }
    }
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}
