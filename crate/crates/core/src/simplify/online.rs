use crate::constraints::{BoolExpr, Constraint, Kind, Pred};

use super::{simplify, simplify_num, simplify_pred, Ranges};

/// Outcome of checking one constraint as it is emitted.
#[derive(Debug, Clone, PartialEq)]
pub enum Disposition {
    /// Undecided; keep this simplified formula.
    Record(Pred),
    /// True under the path's ranges; nothing to record.
    TriviallyTrue,
    /// A soft constraint is false and no symbolic branch decision could make
    /// the path infeasible.
    ImmediateFail(Pred),
    /// A constraint is false but the path may be infeasible anyway.
    PotentialUnreachable(Pred),
    /// A branch condition that is constant under the path's ranges.
    ResolvedBranch(bool),
}

/// Simplifies `c` under the path ranges `ctx` and decides what to do with it.
/// `symbolic_branches` tells whether the path carries branch constraints
/// that mention symbols.
pub fn online_check(c: &Constraint, ctx: &Ranges, symbolic_branches: bool) -> Disposition {
    let decided = simplify_pred(&c.pred, ctx);
    // The recorded form does not depend on the ranges, so it stays readable
    // and valid outside this path.
    let recorded = || simplify_pred(&c.pred, &Ranges::new());
    if c.branch {
        return match decided.as_const() {
            Some(v) => Disposition::ResolvedBranch(v),
            None => Disposition::Record(recorded()),
        };
    }
    match decided.as_const() {
        Some(true) => Disposition::TriviallyTrue,
        Some(false) => match c.kind {
            Kind::Soft if !symbolic_branches => Disposition::ImmediateFail(operands_reduced(&c.pred)),
            _ => Disposition::PotentialUnreachable(operands_reduced(&c.pred)),
        },
        None => Disposition::Record(recorded()),
    }
}

/// Simplifies the operands of each comparison but keeps the comparison, so a
/// false constraint still shows what was compared.
fn operands_reduced(p: &Pred) -> Pred {
    let none = Ranges::new();
    match p {
        Pred::Atom(BoolExpr::Eq(a, b)) => Pred::Atom(BoolExpr::Eq(Box::new(simplify(a, &none)), Box::new(simplify(b, &none)))),
        Pred::Atom(BoolExpr::Lt(a, b)) => Pred::Atom(BoolExpr::Lt(Box::new(simplify_num(a, &none)), Box::new(simplify_num(b, &none)))),
        Pred::Atom(BoolExpr::Not(x)) => Pred::not(operands_reduced(&Pred::Atom((**x).clone()))),
        Pred::Not(x) => Pred::not(operands_reduced(x)),
        Pred::And(items) => Pred::And(items.iter().map(operands_reduced).collect()),
        Pred::Or(items) => Pred::Or(items.iter().map(operands_reduced).collect()),
        _ => simplify_pred(p, &none),
    }
}
