//! Offline check of completed paths: verdict per path from the hard and
//! soft constraint sets, counterexamples and first-violation attribution.

mod search;
mod smtlib;

use std::time::Duration;

use crate::constraints::{free_symbols_pred, Assignment, Constraint, ConstraintSet, Kind, NumExpr, Pred, Sort};
use crate::simplify::{simplify_pred, Ranges};

pub use search::{check_sat, holds, satisfies, violates, Query, SatResult};
pub use smtlib::emit_smtlib;

/// Forall ranges up to this many values are expanded into conjunctions.
pub const MAX_FORALL_EXPANSION: i64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of complete assignments evaluated.
    pub max_tuples: u64,
    pub timeout: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_tuples: 1_000_000,
            timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("rank of {0} is not determined")]
    UnresolvedRank(String),
    #[error("quantifier over a range that is not ground or wider than {MAX_FORALL_EXPANSION}")]
    UnboundedForall,
}

/// A constraint set reduced to integer and boolean formulas. Entries keep the
/// index of the constraint they came from.
#[derive(Debug, Clone, Default)]
pub struct Elaborated {
    pub hard: Vec<(usize, Pred)>,
    pub soft: Vec<(usize, Pred)>,
}

fn expand_forall(p: &Pred) -> Result<Pred, SolveError> {
    Ok(match p {
        Pred::Atom(_) => p.clone(),
        Pred::And(items) => Pred::And(items.iter().map(expand_forall).collect::<Result<_, _>>()?),
        Pred::Or(items) => Pred::Or(items.iter().map(expand_forall).collect::<Result<_, _>>()?),
        Pred::Not(x) => Pred::not(expand_forall(x)?),
        Pred::Forall { var, lo, hi, body } => {
            let (Some(lo), Some(hi)) = (lo.as_const(), hi.as_const()) else {
                return Err(SolveError::UnboundedForall);
            };
            if hi.saturating_sub(lo) >= MAX_FORALL_EXPANSION {
                return Err(SolveError::UnboundedForall);
            }
            let body = expand_forall(body)?;
            let mut items = Vec::new();
            for v in lo..=hi {
                let mut b = crate::constraints::Binding::new();
                b.insert(var.clone(), crate::constraints::ValueExpr::Num(NumExpr::Const(v)));
                let inst = crate::constraints::substitute_pred(&body, &b).expect("integer binder");
                items.push(simplify_pred(&inst, &Ranges::new()));
            }
            Pred::And(items)
        }
    })
}

/// Simplifies each constraint, expands bounded quantifiers and rejects shape
/// symbols, whose rank the solver cannot enumerate.
pub fn elaborate(cs: &ConstraintSet) -> Result<Elaborated, SolveError> {
    let mut out = Elaborated::default();
    for (i, c) in cs.iter().enumerate() {
        let p = expand_forall(&simplify_pred(&c.pred, &Ranges::new()))?;
        if let Some(s) = free_symbols_pred(&p).into_iter().find(|s| s.sort == Sort::Shape) {
            return Err(SolveError::UnresolvedRank(s.name()));
        }
        match c.kind {
            Kind::Hard => out.hard.push((i, p)),
            Kind::Soft => out.soft.push((i, p)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathVerdict {
    Valid,
    Invalid { model: Assignment, first_violation: Constraint },
    Unreachable,
    DontKnow { reason: String },
}

impl PathVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            PathVerdict::Valid => "valid",
            PathVerdict::Invalid { .. } => "invalid",
            PathVerdict::Unreachable => "unreachable",
            PathVerdict::DontKnow { .. } => "dontknow",
        }
    }
}

/// Verdict of one path: unreachable when the hard constraints are
/// unsatisfiable, valid when no soft constraint can fail, invalid with a
/// counterexample otherwise.
pub fn analyze_path(cs: &ConstraintSet, budget: &Budget) -> PathVerdict {
    let e = match elaborate(cs) {
        Ok(e) => e,
        Err(err) => return PathVerdict::DontKnow { reason: err.to_string() },
    };
    let hard: Vec<Pred> = e.hard.iter().map(|(_, p)| p.clone()).collect();
    let h = Query {
        all: hard.clone(),
        violated: Vec::new(),
    };
    if check_sat(&h, budget) == SatResult::Unsat {
        return PathVerdict::Unreachable;
    }
    if e.soft.is_empty() {
        return PathVerdict::Valid;
    }
    let q = Query {
        all: hard,
        violated: e.soft.iter().map(|(_, p)| p.clone()).collect(),
    };
    match check_sat(&q, budget) {
        SatResult::Unsat => PathVerdict::Valid,
        SatResult::Unknown(reason) => PathVerdict::DontKnow { reason },
        SatResult::Sat(model) => {
            let (idx, _) = e
                .soft
                .iter()
                .find(|(_, p)| violates(p, &model))
                .expect("model violates some soft constraint");
            PathVerdict::Invalid {
                model,
                first_violation: cs.as_slice()[*idx].clone(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProgramVerdict {
    NoError,
    /// Invalid path indices, ordered by first-violation generation, then
    /// dontknow path indices.
    Error { invalid: Vec<usize>, dontknow: Vec<usize> },
    Inconclusive { dontknow: Vec<usize> },
}

impl ProgramVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramVerdict::NoError => "no-error",
            ProgramVerdict::Error { .. } => "error",
            ProgramVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

pub fn summarize(verdicts: &[PathVerdict]) -> ProgramVerdict {
    let mut invalid: Vec<(u64, usize)> = Vec::new();
    let mut dontknow = Vec::new();
    for (i, v) in verdicts.iter().enumerate() {
        match v {
            PathVerdict::Invalid { first_violation, .. } => invalid.push((first_violation.gen, i)),
            PathVerdict::DontKnow { .. } => dontknow.push(i),
            PathVerdict::Valid | PathVerdict::Unreachable => {}
        }
    }
    invalid.sort();
    if !invalid.is_empty() {
        ProgramVerdict::Error {
            invalid: invalid.into_iter().map(|(_, i)| i).collect(),
            dontknow,
        }
    } else if !dontknow.is_empty() {
        ProgramVerdict::Inconclusive { dontknow }
    } else {
        ProgramVerdict::NoError
    }
}
