use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{BoolExpr, NumExpr, Pred, ShapeExpr, Sort, Symbol, ValueExpr};

pub type Binding = BTreeMap<Symbol, ValueExpr>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("symbol {symbol} has sort {expected} but is bound to a {found} expression")]
pub struct SortMismatch {
    pub symbol: String,
    pub expected: Sort,
    pub found: Sort,
}

fn check(binding: &Binding) -> Result<(), SortMismatch> {
    for (sym, value) in binding {
        if sym.sort != value.sort() {
            return Err(SortMismatch {
                symbol: sym.name(),
                expected: sym.sort,
                found: value.sort(),
            });
        }
    }
    Ok(())
}

/// Replaces every free occurrence of a bound symbol.
pub fn substitute(e: &ValueExpr, binding: &Binding) -> Result<ValueExpr, SortMismatch> {
    check(binding)?;
    Ok(match e {
        ValueExpr::Num(n) => ValueExpr::Num(subst_num(n, binding)),
        ValueExpr::Shape(s) => ValueExpr::Shape(subst_shape(s, binding)),
        ValueExpr::Bool(b) => ValueExpr::Bool(subst_bool(b, binding)),
    })
}

pub fn substitute_pred(p: &Pred, binding: &Binding) -> Result<Pred, SortMismatch> {
    check(binding)?;
    Ok(subst_pred(p, binding))
}

fn subst_num(e: &NumExpr, b: &Binding) -> NumExpr {
    match e {
        NumExpr::Const(_) => e.clone(),
        NumExpr::Sym(s) => match b.get(s) {
            Some(ValueExpr::Num(v)) => v.clone(),
            _ => e.clone(),
        },
        NumExpr::Bin(op, x, y) => NumExpr::bin(*op, subst_num(x, b), subst_num(y, b)),
        NumExpr::Rank(s) => NumExpr::rank(subst_shape(s, b)),
        NumExpr::Index(s, i) => NumExpr::index(subst_shape(s, b), subst_num(i, b)),
        NumExpr::Prod(s) => NumExpr::prod(subst_shape(s, b)),
    }
}

fn subst_shape(e: &ShapeExpr, b: &Binding) -> ShapeExpr {
    match e {
        ShapeExpr::Tuple(d) => ShapeExpr::Tuple(d.iter().map(|x| subst_num(x, b)).collect()),
        ShapeExpr::Sym(s) => match b.get(s) {
            Some(ValueExpr::Shape(v)) => v.clone(),
            _ => e.clone(),
        },
        ShapeExpr::Slice(s, lo, hi) => subst_shape(s, b).slice(subst_num(lo, b), subst_num(hi, b)),
        ShapeExpr::Concat(x, y) => subst_shape(x, b).concat(subst_shape(y, b)),
    }
}

fn subst_bool(e: &BoolExpr, b: &Binding) -> BoolExpr {
    match e {
        BoolExpr::Const(_) => e.clone(),
        BoolExpr::Sym(s) => match b.get(s) {
            Some(ValueExpr::Bool(v)) => v.clone(),
            _ => e.clone(),
        },
        BoolExpr::And(x, y) => BoolExpr::and(subst_bool(x, b), subst_bool(y, b)),
        BoolExpr::Or(x, y) => BoolExpr::or(subst_bool(x, b), subst_bool(y, b)),
        BoolExpr::Not(x) => BoolExpr::not(subst_bool(x, b)),
        BoolExpr::Eq(x, y) => BoolExpr::Eq(Box::new(subst_value(x, b)), Box::new(subst_value(y, b))),
        BoolExpr::Lt(x, y) => BoolExpr::Lt(Box::new(subst_num(x, b)), Box::new(subst_num(y, b))),
    }
}

fn subst_value(e: &ValueExpr, b: &Binding) -> ValueExpr {
    match e {
        ValueExpr::Num(n) => ValueExpr::Num(subst_num(n, b)),
        ValueExpr::Shape(s) => ValueExpr::Shape(subst_shape(s, b)),
        ValueExpr::Bool(x) => ValueExpr::Bool(subst_bool(x, b)),
    }
}

fn subst_pred(p: &Pred, b: &Binding) -> Pred {
    match p {
        Pred::Atom(x) => Pred::Atom(subst_bool(x, b)),
        Pred::And(items) => Pred::And(items.iter().map(|x| subst_pred(x, b)).collect()),
        Pred::Or(items) => Pred::Or(items.iter().map(|x| subst_pred(x, b)).collect()),
        Pred::Not(x) => Pred::not(subst_pred(x, b)),
        Pred::Forall { var, lo, hi, body } => {
            let lo = subst_num(lo, b);
            let hi = subst_num(hi, b);
            // The binder shadows any binding for the same symbol.
            let mut inner: Binding = b.iter().filter(|(k, _)| *k != var).map(|(k, v)| (k.clone(), v.clone())).collect();
            let captured = inner.values().any(|v| value_mentions(v, var));
            let (var, body) = if captured {
                // Rename the binder to a symbol no binding value can mention.
                let fresh_id = max_symbol_id(p, b) + 1;
                let fresh = Symbol::new(fresh_id, var.sort, var.hint.clone());
                let mut rename = Binding::new();
                rename.insert(var.clone(), ValueExpr::Num(NumExpr::Sym(fresh.clone())));
                (fresh, subst_pred(body, &rename))
            } else {
                (var.clone(), (**body).clone())
            };
            inner.remove(&var);
            Pred::Forall {
                var,
                lo,
                hi,
                body: Box::new(subst_pred(&body, &inner)),
            }
        }
    }
}

fn value_mentions(v: &ValueExpr, sym: &Symbol) -> bool {
    let mut out = BTreeSet::new();
    collect_value(v, &mut out);
    out.contains(sym)
}

fn max_symbol_id(p: &Pred, b: &Binding) -> u32 {
    let mut all = BTreeSet::new();
    collect_pred_all(p, &mut all);
    for (k, v) in b {
        all.insert(k.clone());
        collect_value(v, &mut all);
    }
    all.iter().map(|s| s.id).max().unwrap_or(0)
}

fn collect_pred_all(p: &Pred, out: &mut BTreeSet<Symbol>) {
    match p {
        Pred::Atom(x) => collect_bool(x, out),
        Pred::And(items) | Pred::Or(items) => items.iter().for_each(|x| collect_pred_all(x, out)),
        Pred::Not(x) => collect_pred_all(x, out),
        Pred::Forall { var, lo, hi, body } => {
            out.insert(var.clone());
            collect_num(lo, out);
            collect_num(hi, out);
            collect_pred_all(body, out);
        }
    }
}

fn collect_num(e: &NumExpr, out: &mut BTreeSet<Symbol>) {
    match e {
        NumExpr::Const(_) => {}
        NumExpr::Sym(s) => {
            out.insert(s.clone());
        }
        NumExpr::Bin(_, a, b) => {
            collect_num(a, out);
            collect_num(b, out);
        }
        NumExpr::Rank(s) | NumExpr::Prod(s) => collect_shape(s, out),
        NumExpr::Index(s, i) => {
            collect_shape(s, out);
            collect_num(i, out);
        }
    }
}

fn collect_shape(e: &ShapeExpr, out: &mut BTreeSet<Symbol>) {
    match e {
        ShapeExpr::Tuple(d) => d.iter().for_each(|x| collect_num(x, out)),
        ShapeExpr::Sym(s) => {
            out.insert(s.clone());
        }
        ShapeExpr::Slice(s, lo, hi) => {
            collect_shape(s, out);
            collect_num(lo, out);
            collect_num(hi, out);
        }
        ShapeExpr::Concat(a, b) => {
            collect_shape(a, out);
            collect_shape(b, out);
        }
    }
}

fn collect_bool(e: &BoolExpr, out: &mut BTreeSet<Symbol>) {
    match e {
        BoolExpr::Const(_) => {}
        BoolExpr::Sym(s) => {
            out.insert(s.clone());
        }
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
            collect_bool(a, out);
            collect_bool(b, out);
        }
        BoolExpr::Not(a) => collect_bool(a, out),
        BoolExpr::Eq(a, b) => {
            collect_value(a, out);
            collect_value(b, out);
        }
        BoolExpr::Lt(a, b) => {
            collect_num(a, out);
            collect_num(b, out);
        }
    }
}

fn collect_value(e: &ValueExpr, out: &mut BTreeSet<Symbol>) {
    match e {
        ValueExpr::Num(n) => collect_num(n, out),
        ValueExpr::Shape(s) => collect_shape(s, out),
        ValueExpr::Bool(b) => collect_bool(b, out),
    }
}

fn collect_pred_free(p: &Pred, out: &mut BTreeSet<Symbol>) {
    match p {
        Pred::Atom(x) => collect_bool(x, out),
        Pred::And(items) | Pred::Or(items) => items.iter().for_each(|x| collect_pred_free(x, out)),
        Pred::Not(x) => collect_pred_free(x, out),
        Pred::Forall { var, lo, hi, body } => {
            collect_num(lo, out);
            collect_num(hi, out);
            let mut inner = BTreeSet::new();
            collect_pred_free(body, &mut inner);
            inner.remove(var);
            out.extend(inner);
        }
    }
}

/// Symbols occurring in `e`. Value expressions have no binders.
pub fn free_symbols(e: &ValueExpr) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    collect_value(e, &mut out);
    out
}

/// Symbols occurring in `p` outside the scope of their own `Forall` binder.
pub fn free_symbols_pred(p: &Pred) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    collect_pred_free(p, &mut out);
    out
}
