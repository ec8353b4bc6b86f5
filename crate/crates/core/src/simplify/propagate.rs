//! Interval propagation over conjunctions of comparison atoms.

use crate::constraints::{BoolExpr, ConstraintSet, NumExpr, Pred, Symbol, ValueExpr};

use super::interval::{interval_of, Interval, Ranges};
use super::poly::Poly;
use super::simplify_bool;

const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Propagation {
    pub ranges: Ranges,
    /// Some atom is false under every assignment within the ranges, so the
    /// conjunction has no solution.
    pub infeasible: bool,
}

/// Narrows symbol ranges using the hard constraints of `cs`.
pub fn propagate(cs: &ConstraintSet) -> Propagation {
    let preds: Vec<&Pred> = cs.hard().map(|c| &c.pred).collect();
    propagate_preds(preds, Ranges::new())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rel {
    /// difference = 0
    Zero,
    /// difference <= -1
    Negative,
}

fn collect_atoms(b: &BoolExpr, out: &mut Vec<(NumExpr, Rel)>, flags: &mut Vec<(Symbol, bool)>) {
    match b {
        BoolExpr::And(x, y) => {
            collect_atoms(x, out, flags);
            collect_atoms(y, out, flags);
        }
        BoolExpr::Eq(x, y) => match (x.as_ref(), y.as_ref()) {
            (ValueExpr::Num(p), ValueExpr::Num(q)) => out.push((p.clone() - q.clone(), Rel::Zero)),
            (ValueExpr::Shape(_), ValueExpr::Shape(_)) => {
                // Decompose pointwise when the ranks are known.
                let d = simplify_bool(b, &Ranges::new());
                if !matches!(d, BoolExpr::Eq(..)) {
                    collect_atoms(&d, out, flags);
                }
            }
            _ => {}
        },
        BoolExpr::Lt(x, y) => out.push(((**x).clone() - (**y).clone(), Rel::Negative)),
        BoolExpr::Not(inner) => match inner.as_ref() {
            // not (x < y)  <=>  y - x <= 0  <=>  y - x - 1 <= -1
            BoolExpr::Lt(x, y) => out.push(((**y).clone() - (**x).clone() - 1, Rel::Negative)),
            BoolExpr::Sym(s) => flags.push((s.clone(), false)),
            BoolExpr::Not(x) => collect_atoms(x, out, flags),
            _ => {}
        },
        BoolExpr::Sym(s) => flags.push((s.clone(), true)),
        BoolExpr::Const(false) => out.push((NumExpr::Const(1), Rel::Zero)),
        _ => {}
    }
}

fn collect_pred(p: &Pred, out: &mut Vec<(NumExpr, Rel)>, flags: &mut Vec<(Symbol, bool)>) {
    match p {
        Pred::Atom(b) => collect_atoms(b, out, flags),
        Pred::And(items) => items.iter().for_each(|i| collect_pred(i, out, flags)),
        Pred::Not(inner) => {
            if let Pred::Atom(b) = inner.as_ref() {
                collect_atoms(&BoolExpr::not(b.clone()), out, flags);
            }
        }
        _ => {}
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

fn clamp(v: i128) -> Option<i64> {
    i64::try_from(v).ok()
}

/// Propagates over a conjunction of predicates starting from `seed`.
pub fn propagate_preds<'a>(preds: impl IntoIterator<Item = &'a Pred>, seed: Ranges) -> Propagation {
    let mut atoms = Vec::new();
    let mut flags = Vec::new();
    for p in preds {
        collect_pred(p, &mut atoms, &mut flags);
    }
    let mut ranges = seed;
    for (sym, value) in flags {
        let iv = Interval::point(value as i64);
        let cur = ranges.get(&sym).copied().unwrap_or(Interval::range(0, 1));
        let next = cur.meet(&iv);
        if next.is_empty() {
            return Propagation { ranges, infeasible: true };
        }
        ranges.insert(sym, next);
    }
    let polys: Vec<(Poly, Rel)> = atoms
        .into_iter()
        .filter_map(|(d, rel)| Poly::from_expr(&super::simplify_num(&d, &Ranges::new())).map(|p| (p, rel)))
        .collect();

    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for (poly, rel) in &polys {
            // Interval of each term under the current ranges.
            let terms: Vec<(Option<&Symbol>, i64, Interval)> = poly
                .terms()
                .map(|(m, c)| {
                    let single = match m.as_slice() {
                        [NumExpr::Sym(s)] => Some(s),
                        _ => None,
                    };
                    let iv = if m.is_empty() {
                        Interval::point(c)
                    } else {
                        let prod = m
                            .iter()
                            .map(|a| interval_of(a, &ranges))
                            .fold(Interval::point(1), |acc, x| acc.mul(&x));
                        prod.scale(c)
                    };
                    (single, c, iv)
                })
                .collect();
            let total = terms.iter().fold(Interval::point(0), |acc, t| acc.add(&t.2));
            let definitely_false = match rel {
                Rel::Zero => !total.contains(0),
                Rel::Negative => total.lo.is_some_and(|l| l > -1),
            };
            if definitely_false {
                return Propagation { ranges, infeasible: true };
            }
            for (i, (single, coef, _)) in terms.iter().enumerate() {
                let Some(sym) = single else { continue };
                let rest = terms
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(Interval::point(0), |acc, (_, t)| acc.add(&t.2));
                // coef * x in [lo_t, hi_t]
                let (lo_t, hi_t): (Option<i128>, Option<i128>) = match rel {
                    Rel::Zero => (rest.hi.map(|h| -(h as i128)), rest.lo.map(|l| -(l as i128))),
                    Rel::Negative => (None, rest.lo.map(|l| -1 - l as i128)),
                };
                let c = *coef as i128;
                let (lo_x, hi_x) = if c > 0 {
                    (lo_t.map(|v| div_ceil(v, c)), hi_t.map(|v| div_floor(v, c)))
                } else {
                    (hi_t.map(|v| div_ceil(v, c)), lo_t.map(|v| div_floor(v, c)))
                };
                let bound = Interval::new(lo_x.and_then(clamp), hi_x.and_then(clamp));
                let cur = ranges.get(*sym).copied().unwrap_or(Interval::TOP);
                let next = cur.meet(&bound);
                if next.is_empty() {
                    ranges.insert((*sym).clone(), next);
                    return Propagation { ranges, infeasible: true };
                }
                if next != cur {
                    ranges.insert((*sym).clone(), next);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Propagation { ranges, infeasible: false }
}
