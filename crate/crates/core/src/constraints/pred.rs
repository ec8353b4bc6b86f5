use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BoolExpr, NumExpr, Symbol};
use crate::pos::SourcePos;

/// Constraint formula: boolean expressions closed under the connectives plus
/// bounded universal quantification over an integer variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Atom(BoolExpr),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    /// `body` holds for every integer `var` in the closed range `[lo, hi]`.
    Forall {
        var: Symbol,
        lo: NumExpr,
        hi: NumExpr,
        body: Box<Pred>,
    },
}

impl From<BoolExpr> for Pred {
    fn from(b: BoolExpr) -> Self {
        Pred::Atom(b)
    }
}

impl Pred {
    pub fn truth(b: bool) -> Pred {
        Pred::Atom(BoolExpr::Const(b))
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            Pred::Atom(b) => b.as_const(),
            Pred::And(items) if items.is_empty() => Some(true),
            Pred::Or(items) if items.is_empty() => Some(false),
            _ => None,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub pred: Pred,
    pub kind: Kind,
    /// Generation index, monotone in emission order.
    pub gen: u64,
    pub origin: SourcePos,
    /// Tensor operation that emitted the constraint, if any.
    pub op: Option<Arc<str>>,
    /// Set on the hard constraints recording a branch decision.
    pub branch: bool,
}

impl Constraint {
    pub fn hard(pred: impl Into<Pred>, gen: u64, origin: SourcePos) -> Self {
        Constraint {
            pred: pred.into(),
            kind: Kind::Hard,
            gen,
            origin,
            op: None,
            branch: false,
        }
    }

    pub fn soft(pred: impl Into<Pred>, gen: u64, origin: SourcePos) -> Self {
        Constraint {
            pred: pred.into(),
            kind: Kind::Soft,
            gen,
            origin,
            op: None,
            branch: false,
        }
    }

    pub fn with_op(mut self, op: impl Into<Arc<str>>) -> Self {
        self.op = Some(op.into());
        self
    }

    pub fn is_hard(&self) -> bool {
        self.kind == Kind::Hard
    }
}

/// Constraints of one path in generation order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    /// Appends `c`. Panics if `c.gen` does not exceed the last index.
    pub fn push(&mut self, c: Constraint) {
        if let Some(last) = self.items.last() {
            assert!(c.gen > last.gen, "constraint generation index must increase");
        }
        self.items.push(c);
    }

    /// Order-preserving union: the result is sorted by generation index.
    pub fn union(&self, other: &ConstraintSet) -> ConstraintSet {
        let mut items: Vec<Constraint> = self.items.iter().chain(&other.items).cloned().collect();
        items.sort_by_key(|c| c.gen);
        items.dedup_by_key(|c| c.gen);
        ConstraintSet { items }
    }

    pub fn from_sorted(items: Vec<Constraint>) -> ConstraintSet {
        let mut set = ConstraintSet::new();
        for c in items {
            set.push(c);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.items.iter()
    }

    pub fn hard(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter().filter(|c| c.kind == Kind::Hard)
    }

    pub fn soft(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter().filter(|c| c.kind == Kind::Soft)
    }

    pub fn as_slice(&self) -> &[Constraint] {
        &self.items
    }

    pub fn truncate(&mut self, len: usize) {
        self.items.truncate(len);
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Constraint;
    type IntoIter = std::slice::Iter<'a, Constraint>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}
