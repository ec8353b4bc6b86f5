//! Lowering from the surface AST to the kernel IR.
//!
//! Statement sequences become nested lets. An `if` without `return` yields
//! the tuple of variables its arms update; an `if` containing `return`
//! duplicates the rest of the block into both arms. Loops thread updated
//! variables through a tuple. Command-line constants (`args.NAME`) and
//! module-level names bound once to a constant are substituted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::pos::SourcePos;

use super::ast::*;
use super::ir::*;

/// A command-line constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Bool(bool),
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("{pos}: missing command-line argument '{name}'")]
    MissingArgument { name: String, pos: SourcePos },
    #[error("{0}: loop bound is not a constant")]
    NonConstantLoopBound(SourcePos),
    #[error("{pos}: {message}")]
    ArityMismatch { pos: SourcePos, message: String },
    #[error("{pos}: {message}")]
    Unsupported { pos: SourcePos, message: String },
}

fn unsupported<T>(pos: &SourcePos, message: impl Into<String>) -> Result<T, LowerError> {
    Err(LowerError::Unsupported {
        pos: pos.clone(),
        message: message.into(),
    })
}

type LResult<T> = Result<T, LowerError>;

#[derive(Debug, Clone, PartialEq)]
enum Const {
    Int(i64),
    Bool(bool),
    Str(Arc<str>),
}

impl Const {
    fn to_ir(&self, pos: &SourcePos) -> IrExpr {
        let kind = match self {
            Const::Int(n) => IrKind::Int(*n),
            Const::Bool(b) => IrKind::Bool(*b),
            Const::Str(s) => IrKind::Str(s.clone()),
        };
        IrExpr::new(kind, pos.clone())
    }
}

/// Folds an IR expression built from literals and known names.
fn fold(e: &IrExpr, known: &HashMap<Name, Const>) -> Option<Const> {
    match &e.kind {
        IrKind::Int(n) => Some(Const::Int(*n)),
        IrKind::Bool(b) => Some(Const::Bool(*b)),
        IrKind::Str(s) => Some(Const::Str(s.clone())),
        IrKind::Var(n) | IrKind::GlobalGet(n) => known.get(n).cloned(),
        IrKind::Not(a) => match fold(a, known)? {
            Const::Bool(b) => Some(Const::Bool(!b)),
            _ => None,
        },
        IrKind::BinOp(op, a, b) => {
            let (a, b) = (fold(a, known)?, fold(b, known)?);
            Some(match (op, a, b) {
                (IrOp::Add, Const::Int(x), Const::Int(y)) => Const::Int(x.checked_add(y)?),
                (IrOp::Sub, Const::Int(x), Const::Int(y)) => Const::Int(x.checked_sub(y)?),
                (IrOp::Mul, Const::Int(x), Const::Int(y)) => Const::Int(x.checked_mul(y)?),
                (IrOp::FloorDiv, Const::Int(x), Const::Int(y)) => Const::Int(crate::constraints::floor_div(x, y).ok()?),
                (IrOp::Mod, Const::Int(x), Const::Int(y)) => Const::Int(crate::constraints::floor_mod(x, y).ok()?),
                (IrOp::Lt, Const::Int(x), Const::Int(y)) => Const::Bool(x < y),
                (IrOp::Eq, x, y) => Const::Bool(x == y),
                (IrOp::And, Const::Bool(x), Const::Bool(y)) => Const::Bool(x && y),
                (IrOp::Or, Const::Bool(x), Const::Bool(y)) => Const::Bool(x || y),
                _ => return None,
            })
        }
        _ => None,
    }
}

/// Names assigned anywhere in `body`, including nested blocks.
fn assigned_names(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(t, _) => out.extend(t.names().into_iter().map(String::from)),
            StmtKind::If(arms, orelse) => {
                for (_, b) in arms {
                    assigned_names(b, out);
                }
                if let Some(b) = orelse {
                    assigned_names(b, out);
                }
            }
            StmtKind::For(t, _, b) => {
                out.extend(t.names().into_iter().map(String::from));
                assigned_names(b, out);
            }
            _ => {}
        }
    }
}

fn declared_globals(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Global(names) => out.extend(names.iter().cloned()),
            StmtKind::If(arms, orelse) => {
                for (_, b) in arms {
                    declared_globals(b, out);
                }
                if let Some(b) = orelse {
                    declared_globals(b, out);
                }
            }
            StmtKind::For(_, _, b) => declared_globals(b, out),
            _ => {}
        }
    }
}

fn contains_return(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If(arms, orelse) => arms.iter().any(|(_, b)| contains_return(b)) || orelse.as_deref().is_some_and(contains_return),
        StmtKind::For(_, _, b) => contains_return(b),
        _ => false,
    })
}

fn expr_names(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Name(n) => {
            out.insert(n.clone());
        }
        ExprKind::Attr(o, _) => expr_names(o, out),
        ExprKind::Call { func, args, kwargs } => {
            expr_names(func, out);
            args.iter().for_each(|a| expr_names(a, out));
            kwargs.iter().for_each(|(_, a)| expr_names(a, out));
        }
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            expr_names(a, out);
            expr_names(b, out);
        }
        ExprKind::Slice(a, lo, hi) => {
            expr_names(a, out);
            for x in [lo, hi].into_iter().flatten() {
                expr_names(x, out);
            }
        }
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter().for_each(|a| expr_names(a, out)),
        ExprKind::Unary(_, a) => expr_names(a, out),
        _ => {}
    }
}

fn stmt_names(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(_, e) | StmtKind::Expr(e) | StmtKind::Return(Some(e)) => expr_names(e, out),
            StmtKind::If(arms, orelse) => {
                for (c, b) in arms {
                    expr_names(c, out);
                    stmt_names(b, out);
                }
                if let Some(b) = orelse {
                    stmt_names(b, out);
                }
            }
            StmtKind::For(_, e, b) => {
                expr_names(e, out);
                stmt_names(b, out);
            }
            _ => {}
        }
    }
}

struct Signature {
    params: Vec<Name>,
    defaults: Vec<Option<IrExpr>>,
}

struct Lowerer<'a> {
    args: &'a BTreeMap<String, ArgValue>,
    signatures: BTreeMap<Name, Signature>,
    /// Module-level names bound once to a constant.
    module_consts: HashMap<Name, Const>,
    /// Module-level variables shared with functions.
    module_globals: BTreeSet<String>,
}

/// Per-function (or module) lowering state.
#[derive(Clone)]
struct Scope {
    /// Names resolved as local variables.
    locals: BTreeSet<String>,
    /// Names resolved through the global store.
    globals: BTreeSet<String>,
    /// Locals currently bound on every path reaching this point.
    bound: BTreeSet<String>,
    /// Constant values of bound locals, where known.
    known: HashMap<Name, Const>,
    in_function: bool,
}

#[derive(Clone)]
enum Tail {
    /// End of a function body or of the module: evaluates to None.
    Done,
    /// End of an `if` arm or loop body: yields the carried variables.
    Carry(Vec<Name>),
}

fn name(s: &str) -> Name {
    Arc::from(s)
}

impl<'a> Lowerer<'a> {
    fn resolve_name(&self, scope: &Scope, n: &str, pos: &SourcePos) -> IrExpr {
        if scope.locals.contains(n) {
            return IrExpr::new(IrKind::Var(name(n)), pos.clone());
        }
        if scope.globals.contains(n) {
            return IrExpr::new(IrKind::GlobalGet(name(n)), pos.clone());
        }
        if let Some(c) = self.module_consts.get(n) {
            return c.to_ir(pos);
        }
        IrExpr::new(IrKind::Var(name(n)), pos.clone())
    }

    fn is_bound_name(&self, scope: &Scope, n: &str) -> bool {
        scope.locals.contains(n) || scope.globals.contains(n) || self.module_consts.contains_key(n)
    }

    fn expr(&self, scope: &Scope, e: &Expr) -> LResult<IrExpr> {
        let pos = &e.pos;
        let mk = |kind| Ok(IrExpr::new(kind, pos.clone()));
        match &e.kind {
            ExprKind::Int(n) => mk(IrKind::Int(*n)),
            ExprKind::Bool(b) => mk(IrKind::Bool(*b)),
            ExprKind::Str(s) => mk(IrKind::Str(Arc::from(s.as_str()))),
            ExprKind::None => mk(IrKind::NoneConst),
            ExprKind::Name(n) => {
                if self.signatures.contains_key(n.as_str()) && !self.is_bound_name(scope, n) {
                    return unsupported(pos, format!("function '{n}' used as a value"));
                }
                Ok(self.resolve_name(scope, n, pos))
            }
            ExprKind::Attr(obj, attr) => {
                if let ExprKind::Name(head) = &obj.kind {
                    if head == "args" && !self.is_bound_name(scope, head) {
                        return match self.args.get(attr) {
                            Some(ArgValue::Int(n)) => mk(IrKind::Int(*n)),
                            Some(ArgValue::Bool(b)) => mk(IrKind::Bool(*b)),
                            Some(ArgValue::Str(s)) => mk(IrKind::Str(Arc::from(s.as_str()))),
                            None => Err(LowerError::MissingArgument {
                                name: attr.clone(),
                                pos: pos.clone(),
                            }),
                        };
                    }
                }
                match attr.as_str() {
                    "shape" => mk(IrKind::TensorExpr {
                        op: name("size"),
                        args: vec![self.expr(scope, obj)?],
                        kwargs: Vec::new(),
                    }),
                    _ => match &obj.kind {
                        // `torch.long`: an opaque constant, like a string.
                        ExprKind::Name(q) if !self.is_bound_name(scope, q) && !self.signatures.contains_key(q.as_str()) => {
                            mk(IrKind::Str(Arc::from(format!("{q}.{attr}").as_str())))
                        }
                        _ => unsupported(pos, format!("attribute '{attr}' is not supported")),
                    },
                }
            }
            ExprKind::Call { func, args, kwargs } => self.call(scope, func, args, kwargs, pos),
            ExprKind::Index(obj, idx) => mk(IrKind::Index(self.expr(scope, obj)?.boxed(), self.expr(scope, idx)?.boxed())),
            ExprKind::Slice(obj, lo, hi) => {
                let lo = lo.as_ref().map(|x| self.expr(scope, x).map(IrExpr::boxed)).transpose()?;
                let hi = hi.as_ref().map(|x| self.expr(scope, x).map(IrExpr::boxed)).transpose()?;
                mk(IrKind::Slice(self.expr(scope, obj)?.boxed(), lo, hi))
            }
            ExprKind::Tuple(items) => mk(IrKind::Tuple(self.exprs(scope, items)?)),
            ExprKind::List(items) => mk(IrKind::List(self.exprs(scope, items)?)),
            ExprKind::Unary(UnaryOp::Neg, x) => {
                let x = self.expr(scope, x)?;
                mk(IrKind::BinOp(IrOp::Sub, IrExpr::new(IrKind::Int(0), pos.clone()).boxed(), x.boxed()))
            }
            ExprKind::Unary(UnaryOp::Not, x) => mk(IrKind::Not(self.expr(scope, x)?.boxed())),
            ExprKind::Binary(op, l, r) => {
                let l = self.expr(scope, l)?;
                let r = self.expr(scope, r)?;
                Ok(binary(*op, l, r, pos))
            }
        }
    }

    fn exprs(&self, scope: &Scope, items: &[Expr]) -> LResult<Vec<IrExpr>> {
        items.iter().map(|x| self.expr(scope, x)).collect()
    }

    fn call(&self, scope: &Scope, func: &Expr, args: &[Expr], kwargs: &[(String, Expr)], pos: &SourcePos) -> LResult<IrExpr> {
        let (fname, receiver) = match &func.kind {
            ExprKind::Name(n) => (n.clone(), None),
            ExprKind::Attr(obj, m) => match &obj.kind {
                // `torch.cat(...)`: the qualifier is a namespace, not a value.
                ExprKind::Name(q) if !self.is_bound_name(scope, q) && !self.signatures.contains_key(q.as_str()) => (m.clone(), None),
                _ => (m.clone(), Some(obj.as_ref())),
            },
            _ => return unsupported(pos, "only named functions and methods can be called"),
        };
        if self.is_bound_name(scope, &fname) && receiver.is_none() {
            return unsupported(pos, format!("'{fname}' is a variable, not a function"));
        }
        let mut ir_args = Vec::new();
        if let Some(r) = receiver {
            ir_args.push(self.expr(scope, r)?);
        }
        ir_args.extend(self.exprs(scope, args)?);
        let ir_kwargs: Vec<(Name, IrExpr)> = kwargs
            .iter()
            .map(|(k, v)| Ok((name(k), self.expr(scope, v)?)))
            .collect::<LResult<_>>()?;
        if fname == "range" {
            return unsupported(pos, "range() is only allowed as a for-loop iterator");
        }
        if let Some(sig) = self.signatures.get(fname.as_str()) {
            return Ok(IrExpr::new(IrKind::Call(name(&fname), self.match_args(&fname, sig, ir_args, ir_kwargs, pos)?), pos.clone()));
        }
        Ok(IrExpr::new(
            IrKind::TensorExpr {
                op: name(&fname),
                args: ir_args,
                kwargs: ir_kwargs,
            },
            pos.clone(),
        ))
    }

    fn match_args(&self, fname: &str, sig: &Signature, args: Vec<IrExpr>, kwargs: Vec<(Name, IrExpr)>, pos: &SourcePos) -> LResult<Vec<IrExpr>> {
        let arity = |message: String| LowerError::ArityMismatch { pos: pos.clone(), message };
        if args.len() > sig.params.len() {
            return Err(arity(format!(
                "{fname}() takes {} arguments but {} were given",
                sig.params.len(),
                args.len()
            )));
        }
        let mut slots: Vec<Option<IrExpr>> = args.into_iter().map(Some).collect();
        slots.resize(sig.params.len(), None);
        for (k, v) in kwargs {
            let Some(i) = sig.params.iter().position(|p| *p == k) else {
                return Err(arity(format!("{fname}() got an unexpected keyword argument '{k}'")));
            };
            if slots[i].is_some() {
                return Err(arity(format!("{fname}() got multiple values for argument '{k}'")));
            }
            slots[i] = Some(v);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| match s {
                Some(v) => Ok(v),
                None => match &sig.defaults[i] {
                    Some(d) => Ok(d.clone()),
                    None => Err(arity(format!("{fname}() missing argument '{}'", sig.params[i]))),
                },
            })
            .collect()
    }

    fn tail_expr(tail: &Tail, pos: &SourcePos) -> IrExpr {
        match tail {
            Tail::Done => IrExpr::new(IrKind::NoneConst, pos.clone()),
            Tail::Carry(names) => IrExpr::new(
                IrKind::Tuple(names.iter().map(|n| IrExpr::new(IrKind::Var(n.clone()), pos.clone())).collect()),
                pos.clone(),
            ),
        }
    }

    fn block(&self, scope: &mut Scope, body: &[Stmt], tail: &Tail, end: &SourcePos) -> LResult<IrExpr> {
        let Some((s, rest)) = body.split_first() else {
            return Ok(Self::tail_expr(tail, end));
        };
        let pos = &s.pos;
        match &s.kind {
            StmtKind::Pass | StmtKind::Global(_) => self.block(scope, rest, tail, end),
            StmtKind::Return(value) => {
                if !scope.in_function {
                    return unsupported(pos, "'return' outside a function");
                }
                if matches!(tail, Tail::Carry(_)) {
                    return unsupported(pos, "'return' inside a loop is not supported");
                }
                match value {
                    Some(v) => self.expr(scope, v),
                    None => Ok(IrExpr::new(IrKind::NoneConst, pos.clone())),
                }
            }
            StmtKind::Expr(e) => {
                let first = self.expr(scope, e)?;
                let rest = self.block(scope, rest, tail, end)?;
                Ok(seq(first, rest, pos))
            }
            StmtKind::Assign(target, value) => {
                let value = self.expr(scope, value)?;
                self.assign(scope, target, value, rest, tail, end, pos)
            }
            StmtKind::If(arms, orelse) => self.if_stmt(scope, arms, orelse.as_deref(), rest, tail, end, pos),
            StmtKind::For(target, iter, body) => self.for_stmt(scope, target, iter, body, rest, tail, end, pos),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(&self, scope: &mut Scope, target: &Target, value: IrExpr, rest: &[Stmt], tail: &Tail, end: &SourcePos, pos: &SourcePos) -> LResult<IrExpr> {
        let names = target.names();
        let global_count = names.iter().filter(|n| scope.globals.contains(**n)).count();
        if global_count > 0 {
            let Target::Name(n, _) = target else {
                return unsupported(pos, "tuple assignment to global variables is not supported");
            };
            let set = IrExpr::new(IrKind::GlobalSet(name(n), value.boxed()), pos.clone());
            let rest = self.block(scope, rest, tail, end)?;
            return Ok(seq(set, rest, pos));
        }
        let folded = match target {
            Target::Name(..) => fold(&value, &scope.known),
            Target::Tuple(_) => None,
        };
        for n in &names {
            scope.bound.insert(n.to_string());
            scope.known.remove(*n);
        }
        if let (Target::Name(n, _), Some(c)) = (target, folded) {
            scope.known.insert(name(n), c);
        }
        let pattern = to_pattern(target);
        let rest = self.block(scope, rest, tail, end)?;
        Ok(IrExpr::new(IrKind::Let(pattern, value.boxed(), rest.boxed()), pos.clone()))
    }

    #[allow(clippy::too_many_arguments)]
    fn if_stmt(
        &self,
        scope: &mut Scope,
        arms: &[(Expr, Vec<Stmt>)],
        orelse: Option<&[Stmt]>,
        rest: &[Stmt],
        tail: &Tail,
        end: &SourcePos,
        pos: &SourcePos,
    ) -> LResult<IrExpr> {
        let returns = arms.iter().any(|(_, b)| contains_return(b)) || orelse.is_some_and(contains_return);
        if returns {
            if matches!(tail, Tail::Carry(_)) {
                return unsupported(pos, "'return' inside a loop or a branch of a loop is not supported");
            }
            // Duplicate the continuation into every arm.
            let cond = self.expr(scope, &arms[0].0)?;
            let mut then_body = arms[0].1.clone();
            then_body.extend_from_slice(rest);
            let mut else_body: Vec<Stmt> = if arms.len() > 1 {
                vec![Stmt {
                    kind: StmtKind::If(arms[1..].to_vec(), orelse.map(<[Stmt]>::to_vec)),
                    pos: arms[1].0.pos.clone(),
                }]
            } else {
                orelse.map(<[Stmt]>::to_vec).unwrap_or_default()
            };
            else_body.extend_from_slice(rest);
            let t = self.block(&mut scope.clone(), &then_body, tail, end)?;
            let e = self.block(&mut scope.clone(), &else_body, tail, end)?;
            return Ok(IrExpr::new(IrKind::If(cond.boxed(), t.boxed(), e.boxed()), pos.clone()));
        }
        // Variables updated by the statement and visible afterwards.
        let mut per_arm: Vec<BTreeSet<String>> = arms
            .iter()
            .map(|(_, b)| {
                let mut s = BTreeSet::new();
                assigned_names(b, &mut s);
                s
            })
            .collect();
        per_arm.push({
            let mut s = BTreeSet::new();
            if let Some(b) = orelse {
                assigned_names(b, &mut s);
            }
            s
        });
        let any: BTreeSet<String> = per_arm.iter().flatten().cloned().collect();
        let carried: Vec<Name> = any
            .iter()
            .filter(|n| !scope.globals.contains(*n))
            .filter(|n| scope.bound.contains(*n) || per_arm.iter().all(|a| a.contains(*n)))
            .map(|n| name(n))
            .collect();
        let arm_tail = Tail::Carry(carried.clone());
        let stmt_if = self.if_chain(scope, arms, orelse, &arm_tail, pos)?;
        for n in &any {
            scope.known.remove(n.as_str());
        }
        for n in &carried {
            scope.bound.insert(n.to_string());
        }
        let rest = self.block(scope, rest, tail, end)?;
        let pattern = Pattern::Tuple(carried.into_iter().map(Pattern::Name).collect());
        Ok(IrExpr::new(IrKind::Let(pattern, stmt_if.boxed(), rest.boxed()), pos.clone()))
    }

    fn if_chain(&self, scope: &Scope, arms: &[(Expr, Vec<Stmt>)], orelse: Option<&[Stmt]>, tail: &Tail, pos: &SourcePos) -> LResult<IrExpr> {
        let Some(((cond, body), more)) = arms.split_first() else {
            return self.block(&mut scope.clone(), orelse.unwrap_or(&[]), tail, pos);
        };
        let c = self.expr(scope, cond)?;
        let t = self.block(&mut scope.clone(), body, tail, &cond.pos)?;
        let e = match more.first() {
            Some((next, _)) => self.if_chain(scope, more, orelse, tail, &next.pos)?,
            None => self.block(&mut scope.clone(), orelse.unwrap_or(&[]), tail, pos)?,
        };
        Ok(IrExpr::new(IrKind::If(c.boxed(), t.boxed(), e.boxed()), cond.pos.clone()))
    }

    #[allow(clippy::too_many_arguments)]
    fn for_stmt(
        &self,
        scope: &mut Scope,
        target: &Target,
        iter: &Expr,
        body: &[Stmt],
        rest: &[Stmt],
        tail: &Tail,
        end: &SourcePos,
        pos: &SourcePos,
    ) -> LResult<IrExpr> {
        let mut assigned = BTreeSet::new();
        assigned_names(body, &mut assigned);
        let carried: Vec<Name> = assigned
            .iter()
            .filter(|n| scope.bound.contains(*n) && !scope.globals.contains(*n))
            .map(|n| name(n))
            .collect();
        let mut inner = scope.clone();
        for n in assigned.iter().map(String::as_str) {
            inner.known.remove(n);
        }
        for n in target.names() {
            inner.known.remove(n);
            inner.bound.insert(n.to_string());
        }
        let body_tail = Tail::Carry(carried.clone());
        let range_args = match &iter.kind {
            ExprKind::Call { func, args, kwargs } if matches!(&func.kind, ExprKind::Name(n) if n == "range") && kwargs.is_empty() => Some(args),
            _ => None,
        };
        let loop_expr = if let Some(args) = range_args {
            let Target::Name(var, _) = target else {
                return unsupported(pos, "a range loop binds a single variable");
            };
            let mut bounds = Vec::new();
            for a in args {
                let ir = self.expr(scope, a)?;
                match fold(&ir, &scope.known) {
                    Some(Const::Int(n)) => bounds.push(n),
                    _ => return Err(LowerError::NonConstantLoopBound(a.pos.clone())),
                }
            }
            let (lo, hi, step) = match bounds[..] {
                [hi] => (0, hi, 1),
                [lo, hi] => (lo, hi, 1),
                [lo, hi, step] if step != 0 => (lo, hi, step),
                [_, _, _] => return unsupported(pos, "range() step must not be zero"),
                _ => return unsupported(pos, "range() takes one to three arguments"),
            };
            let body = self.block(&mut inner, body, &body_tail, pos)?;
            IrKind::ForRange {
                var: name(var),
                lo,
                hi,
                step,
                carried: carried.clone(),
                body: body.boxed(),
            }
        } else {
            let dataset = self.expr(scope, iter)?;
            let body = self.block(&mut inner, body, &body_tail, pos)?;
            IrKind::ForDataset {
                pattern: to_pattern(target),
                dataset: dataset.boxed(),
                carried: carried.clone(),
                body: body.boxed(),
            }
        };
        for n in &assigned {
            scope.known.remove(n.as_str());
        }
        let rest = self.block(scope, rest, tail, end)?;
        let pattern = Pattern::Tuple(carried.into_iter().map(Pattern::Name).collect());
        Ok(IrExpr::new(
            IrKind::Let(pattern, IrExpr::new(loop_expr, pos.clone()).boxed(), rest.boxed()),
            pos.clone(),
        ))
    }
}

fn to_pattern(t: &Target) -> Pattern {
    match t {
        Target::Name(n, _) => Pattern::Name(name(n)),
        Target::Tuple(items) => Pattern::Tuple(items.iter().map(to_pattern).collect()),
    }
}

fn seq(first: IrExpr, rest: IrExpr, pos: &SourcePos) -> IrExpr {
    let mut items = vec![first];
    match rest.kind {
        IrKind::Seq(more) => items.extend(more),
        other => items.push(IrExpr::new(other, rest.pos)),
    }
    IrExpr::new(IrKind::Seq(items), pos.clone())
}

fn binary(op: BinOp, l: IrExpr, r: IrExpr, pos: &SourcePos) -> IrExpr {
    let mk = |kind| IrExpr::new(kind, pos.clone());
    let bin = |op, a: IrExpr, b: IrExpr| mk(IrKind::BinOp(op, a.boxed(), b.boxed()));
    // Comparisons reduce to `<`, `=` and negation. Swapped operands keep
    // left-to-right evaluation through temporaries when needed.
    let swapped = |op, l: IrExpr, r: IrExpr| {
        if r.is_pure() {
            bin(op, r, l)
        } else {
            let (tl, tr) = (name("%lhs"), name("%rhs"));
            let var = |n: &Name| mk(IrKind::Var(n.clone()));
            let inner = bin(op, var(&tr), var(&tl));
            let inner = mk(IrKind::Let(Pattern::Name(tr.clone()), r.boxed(), inner.boxed()));
            mk(IrKind::Let(Pattern::Name(tl.clone()), l.boxed(), inner.boxed()))
        }
    };
    let not = |e: IrExpr| mk(IrKind::Not(e.boxed()));
    match op {
        BinOp::Add => bin(IrOp::Add, l, r),
        BinOp::Sub => bin(IrOp::Sub, l, r),
        BinOp::Mul => bin(IrOp::Mul, l, r),
        BinOp::FloorDiv => bin(IrOp::FloorDiv, l, r),
        BinOp::Mod => bin(IrOp::Mod, l, r),
        BinOp::And => bin(IrOp::And, l, r),
        BinOp::Or => bin(IrOp::Or, l, r),
        BinOp::Lt => bin(IrOp::Lt, l, r),
        BinOp::Gt => swapped(IrOp::Lt, l, r),
        BinOp::Le => not(swapped(IrOp::Lt, l, r)),
        BinOp::Ge => not(bin(IrOp::Lt, l, r)),
        BinOp::Eq => bin(IrOp::Eq, l, r),
        BinOp::Ne => not(bin(IrOp::Eq, l, r)),
    }
}

/// Lowers a parsed program, substituting command-line constants.
pub fn lower(p: &Program, args: &BTreeMap<String, ArgValue>) -> Result<IrProgram, LowerError> {
    // Module-level constants: bound exactly once at top level, never rebound
    // inside a function, and foldable at their definition.
    let mut module_assigned: BTreeMap<String, usize> = BTreeMap::new();
    count_assignments(&p.entry, &mut module_assigned);
    let mut declared = BTreeSet::new();
    let mut free_in_functions = BTreeSet::new();
    for f in &p.functions {
        let mut g = BTreeSet::new();
        declared_globals(&f.body, &mut g);
        let mut locals = BTreeSet::new();
        assigned_names(&f.body, &mut locals);
        let mut used = BTreeSet::new();
        stmt_names(&f.body, &mut used);
        for d in f.params.iter().filter_map(|p| p.default.as_ref()) {
            expr_names(d, &mut used);
        }
        for n in used {
            if g.contains(&n) || (!locals.contains(&n) && !f.params.iter().any(|q| q.name == n)) {
                free_in_functions.insert(n);
            }
        }
        declared.extend(g);
    }

    let mut lw = Lowerer {
        args,
        signatures: BTreeMap::new(),
        module_consts: HashMap::new(),
        module_globals: BTreeSet::new(),
    };

    // Fold module constants in program order.
    let mut known = HashMap::new();
    let probe = Scope {
        locals: BTreeSet::new(),
        globals: BTreeSet::new(),
        bound: BTreeSet::new(),
        known: HashMap::new(),
        in_function: false,
    };
    for s in &p.entry {
        if let StmtKind::Assign(Target::Name(n, _), e) = &s.kind {
            if module_assigned.get(n) == Some(&1) && !declared.contains(n) {
                let mut sc = probe.clone();
                sc.known = known.clone();
                if let Ok(ir) = lw.expr(&sc, e) {
                    if let Some(c) = fold(&ir, &known) {
                        known.insert(name(n), c);
                    }
                }
            }
        }
    }
    lw.module_consts = known;
    lw.module_globals = module_assigned
        .keys()
        .filter(|n| !lw.module_consts.contains_key(n.as_str()))
        .filter(|n| declared.contains(*n) || free_in_functions.contains(*n))
        .cloned()
        .collect();
    lw.module_globals.extend(declared.iter().cloned());

    // Signatures first so calls resolve regardless of definition order.
    let module_scope = Scope {
        locals: BTreeSet::new(),
        globals: BTreeSet::new(),
        bound: BTreeSet::new(),
        known: HashMap::new(),
        in_function: false,
    };
    for f in &p.functions {
        let defaults = f
            .params
            .iter()
            .map(|q| q.default.as_ref().map(|d| lw.expr(&module_scope, d)).transpose())
            .collect::<LResult<Vec<_>>>()?;
        lw.signatures.insert(
            name(&f.name),
            Signature {
                params: f.params.iter().map(|q| name(&q.name)).collect(),
                defaults,
            },
        );
    }

    let mut functions = BTreeMap::new();
    for f in &p.functions {
        let mut g = BTreeSet::new();
        declared_globals(&f.body, &mut g);
        let mut locals = BTreeSet::new();
        assigned_names(&f.body, &mut locals);
        locals.extend(f.params.iter().map(|q| q.name.clone()));
        locals.retain(|n| !g.contains(n));
        let mut globals: BTreeSet<String> = lw.module_globals.iter().filter(|n| !locals.contains(*n)).cloned().collect();
        globals.extend(g);
        let mut scope = Scope {
            locals,
            globals,
            bound: f.params.iter().map(|q| q.name.clone()).collect(),
            known: HashMap::new(),
            in_function: true,
        };
        let end = f.body.last().map_or(f.pos.clone(), |s| s.pos.clone());
        let body = lw.block(&mut scope, &f.body, &Tail::Done, &end)?;
        functions.insert(
            name(&f.name),
            IrFunction {
                name: name(&f.name),
                params: f.params.iter().map(|q| name(&q.name)).collect(),
                body,
                pos: f.pos.clone(),
            },
        );
    }

    let mut locals: BTreeSet<String> = module_assigned.keys().cloned().collect();
    locals.retain(|n| !lw.module_globals.contains(n));
    let mut scope = Scope {
        locals,
        globals: lw.module_globals.clone(),
        bound: BTreeSet::new(),
        known: HashMap::new(),
        in_function: false,
    };
    let start = SourcePos::new(p.file.clone(), 1, 1, 0);
    let entry = if p.entry.is_empty() {
        IrExpr::new(IrKind::Seq(Vec::new()), start)
    } else {
        let end = p.entry.last().map(|s| s.pos.clone()).unwrap_or(start);
        lw.block(&mut scope, &p.entry, &Tail::Done, &end)?
    };
    Ok(IrProgram { functions, entry })
}

fn count_assignments(body: &[Stmt], out: &mut BTreeMap<String, usize>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(t, _) => {
                for n in t.names() {
                    *out.entry(n.to_string()).or_default() += 1;
                }
            }
            StmtKind::If(arms, orelse) => {
                // Assignments under a branch never count as a single binding.
                let mut inner = BTreeSet::new();
                for (_, b) in arms {
                    assigned_names(b, &mut inner);
                }
                if let Some(b) = orelse {
                    assigned_names(b, &mut inner);
                }
                for n in inner {
                    *out.entry(n).or_default() += 2;
                }
            }
            StmtKind::For(t, _, b) => {
                let mut inner: BTreeSet<String> = t.names().into_iter().map(String::from).collect();
                assigned_names(b, &mut inner);
                for n in inner {
                    *out.entry(n).or_default() += 2;
                }
            }
            _ => {}
        }
    }
}
