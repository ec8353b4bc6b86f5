//! Path-sensitive symbolic evaluation of kernel IR.
//!
//! Each path carries its own constraint set. Branches on undecided
//! conditions split the path; the two arms are merged back when they are
//! independent of the condition, write no globals and produce the same value.
//! Symbol ids and generation indices come from counters shared by all paths,
//! so constraints keep a single global order.

mod values;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::constraints::{free_symbols_pred, BoolExpr, Constraint, ConstraintSet, Kind, NumExpr, Pred, ShapeExpr, Symbol, SymbolGen};
use crate::pos::SourcePos;
use crate::shapeops::{self, DatasetSpec, OpCtx, OpError, Value};
use crate::simplify::{online_check, propagate, Disposition, Ranges};
use crate::surface::{IrExpr, IrKind, IrProgram, Name, Pattern};

pub use values::normalize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("{pos}: unbound variable '{name}'")]
    UnboundVariable { name: String, pos: SourcePos },
    #[error("{pos}: {message}")]
    SortError { pos: SourcePos, message: String },
    #[error("{pos}: {message}")]
    ArityMismatch { pos: SourcePos, message: String },
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Maximum number of open paths kept at a join point.
    pub path_cap: usize,
    pub merge: bool,
    pub datasets: BTreeMap<String, DatasetSpec>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            path_cap: 4096,
            merge: true,
            datasets: BTreeMap::new(),
        }
    }
}

/// Lexically scoped variable bindings, as an immutable chain of frames.
#[derive(Debug, Clone, Default)]
pub struct Env(Option<Arc<Frame>>);

#[derive(Debug)]
struct Frame {
    name: Name,
    value: Value,
    parent: Env,
}

impl Env {
    pub fn bind(&self, name: Name, value: Value) -> Env {
        Env(Some(Arc::new(Frame {
            name,
            value,
            parent: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self.0.as_ref();
        while let Some(f) = cur {
            if &*f.name == name {
                return Some(&f.value);
            }
            cur = f.parent.0.as_ref();
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathStatus {
    Open,
    /// A soft constraint simplified to false on a path without symbolic
    /// branch decisions.
    ImmediateFail(Constraint),
    /// A constraint simplified to false on a path that may be infeasible.
    PotentialUnreachable(Constraint),
    /// Evaluation could not continue.
    DontKnow { reason: String, pos: SourcePos },
}

#[derive(Debug, Clone)]
pub struct PathState {
    pub constraints: ConstraintSet,
    pub ranges: Ranges,
    pub globals: BTreeMap<Name, Value>,
    /// Globals written so far, in order.
    pub effects: Vec<Name>,
    pub symbolic_branches: bool,
    pub status: PathStatus,
}

impl PathState {
    pub fn new() -> Self {
        PathState {
            constraints: ConstraintSet::new(),
            ranges: Ranges::new(),
            globals: BTreeMap::new(),
            effects: Vec::new(),
            symbolic_branches: false,
            status: PathStatus::Open,
        }
    }

    pub fn is_open(&self) -> bool {
        self.status == PathStatus::Open
    }

    fn dont_know(&mut self, reason: impl Into<String>, pos: &SourcePos) {
        if self.is_open() {
            self.status = PathStatus::DontKnow {
                reason: reason.into(),
                pos: pos.clone(),
            };
        }
    }
}

impl Default for PathState {
    fn default() -> Self {
        PathState::new()
    }
}

/// Classification of a finished path by the online check alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OnlineClass {
    PotentialSuccess,
    PotentialUnreachable,
    ImmediateFail,
    DontKnow,
}

impl fmt::Display for OnlineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OnlineClass::PotentialSuccess => "potential success",
            OnlineClass::PotentialUnreachable => "potential unreachable",
            OnlineClass::ImmediateFail => "immediate fail",
            OnlineClass::DontKnow => "dontknow",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub id: usize,
    pub value: Value,
    pub state: PathState,
}

impl PathResult {
    pub fn online_class(&self) -> OnlineClass {
        match self.state.status {
            PathStatus::Open => OnlineClass::PotentialSuccess,
            PathStatus::ImmediateFail(_) => OnlineClass::ImmediateFail,
            PathStatus::PotentialUnreachable(_) => OnlineClass::PotentialUnreachable,
            PathStatus::DontKnow { .. } => OnlineClass::DontKnow,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub paths: Vec<PathResult>,
    /// Number of branch merges performed.
    pub merges: usize,
    /// Open paths discarded because of the path cap.
    pub dropped: usize,
}

type Paths = Vec<(Value, PathState)>;
type Res = Result<Paths, ExecError>;

pub struct Executor<'p> {
    program: &'p IrProgram,
    opts: ExecOptions,
    syms: SymbolGen,
    gen: u64,
    merges: usize,
    dropped: usize,
}

/// Runs the program's entry expression from an empty state.
pub fn execute(program: &IrProgram, opts: &ExecOptions) -> Result<Execution, ExecError> {
    let mut ex = Executor::new(program, opts.clone());
    let paths = ex.eval(PathState::new(), &Env::default(), &program.entry)?;
    Ok(ex.finish(paths))
}

impl<'p> Executor<'p> {
    pub fn new(program: &'p IrProgram, opts: ExecOptions) -> Self {
        Executor {
            program,
            opts,
            syms: SymbolGen::new(),
            gen: 0,
            merges: 0,
            dropped: 0,
        }
    }

    pub fn finish(&self, paths: Paths) -> Execution {
        Execution {
            paths: paths
                .into_iter()
                .enumerate()
                .map(|(id, (value, state))| PathResult { id, value, state })
                .collect(),
            merges: self.merges,
            dropped: self.dropped,
        }
    }

    fn next_gen(&mut self) -> u64 {
        self.gen += 1;
        self.gen
    }

    /// Online-checks and records one emitted constraint.
    fn emit(&mut self, st: &mut PathState, kind: Kind, pred: Pred, origin: &SourcePos, op: Option<&str>) {
        if !st.is_open() {
            return;
        }
        let mut c = Constraint {
            pred,
            kind,
            gen: self.next_gen(),
            origin: origin.clone(),
            op: op.map(Arc::from),
            branch: false,
        };
        match online_check(&c, &st.ranges, st.symbolic_branches) {
            Disposition::TriviallyTrue | Disposition::ResolvedBranch(_) => {}
            Disposition::Record(p) => {
                c.pred = p;
                self.push(st, c);
            }
            Disposition::ImmediateFail(p) => {
                c.pred = p;
                st.constraints.push(c.clone());
                st.status = PathStatus::ImmediateFail(c);
            }
            Disposition::PotentialUnreachable(p) => {
                c.pred = p;
                st.constraints.push(c.clone());
                st.status = PathStatus::PotentialUnreachable(c);
            }
        }
    }

    /// Appends a constraint; hard constraints refresh the path's ranges.
    fn push(&mut self, st: &mut PathState, c: Constraint) {
        let hard = c.kind == Kind::Hard;
        st.constraints.push(c.clone());
        if hard {
            let p = propagate(&st.constraints);
            st.ranges = p.ranges;
            if p.infeasible {
                st.status = PathStatus::PotentialUnreachable(c);
            }
        }
    }

    fn emit_all(&mut self, st: &mut PathState, emitted: Vec<(Kind, Pred)>, origin: &SourcePos, op: &str) {
        for (k, p) in emitted {
            self.emit(st, k, p, origin, Some(op));
        }
    }

    /// Runs a value-level operation under a fresh op context and records what
    /// it emits. Operation errors end the path with dontknow.
    fn with_ctx<F>(&mut self, st: &mut PathState, pos: &SourcePos, op: &str, f: F) -> Value
    where
        F: FnOnce(&mut OpCtx) -> Result<Value, OpError>,
    {
        let (result, emitted) = {
            let mut ctx = OpCtx::new(&mut self.syms, &st.ranges, &self.opts.datasets, pos.clone(), op);
            let r = f(&mut ctx);
            (r, ctx.emitted)
        };
        match result {
            Ok(v) => {
                self.emit_all(st, emitted, pos, op);
                v
            }
            Err(e) => {
                st.dont_know(e.to_string(), pos);
                Value::None
            }
        }
    }

    /// Continues every open path with `k`; closed paths pass through.
    /// Enforces the path cap on the combined result.
    fn bind<F>(&mut self, paths: Paths, mut k: F) -> Res
    where
        F: FnMut(&mut Self, Value, PathState) -> Res,
    {
        let mut out = Vec::with_capacity(paths.len());
        for (v, st) in paths {
            if st.is_open() {
                out.extend(k(self, v, st)?);
            } else {
                out.push((Value::None, st));
            }
        }
        Ok(self.cap(out))
    }

    fn cap(&mut self, paths: Paths) -> Paths {
        let open = paths.iter().filter(|(_, s)| s.is_open()).count();
        if open <= self.opts.path_cap {
            return paths;
        }
        let mut kept = 0;
        let mut reported = false;
        let mut out = Vec::new();
        for (v, mut st) in paths {
            if !st.is_open() {
                out.push((v, st));
            } else if kept < self.opts.path_cap {
                kept += 1;
                out.push((v, st));
            } else if !reported {
                reported = true;
                let extra = open - self.opts.path_cap;
                self.dropped += extra - 1;
                st.status = PathStatus::DontKnow {
                    reason: format!("path cap of {} exceeded; {} paths not analyzed", self.opts.path_cap, extra),
                    pos: SourcePos::synthetic(),
                };
                out.push((Value::None, st));
            } else {
                // counted in the single report above
            }
        }
        out
    }

    /// Evaluates `items` left to right, collecting their values.
    fn eval_list(&mut self, st: PathState, env: &Env, items: &[IrExpr]) -> Result<Vec<(Vec<Value>, PathState)>, ExecError> {
        let mut acc: Vec<(Vec<Value>, PathState)> = vec![(Vec::new(), st)];
        for e in items {
            let mut next = Vec::new();
            for (vals, st) in acc {
                if !st.is_open() {
                    next.push((vals, st));
                    continue;
                }
                for (v, st) in self.eval(st, env, e)? {
                    let mut vals = vals.clone();
                    vals.push(v);
                    next.push((vals, st));
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    pub fn eval(&mut self, mut st: PathState, env: &Env, e: &IrExpr) -> Res {
        if !st.is_open() {
            return Ok(vec![(Value::None, st)]);
        }
        let pos = &e.pos;
        match &e.kind {
            IrKind::Int(n) => Ok(vec![(Value::int(*n), st)]),
            IrKind::Bool(b) => Ok(vec![(Value::Bool(BoolExpr::Const(*b)), st)]),
            IrKind::Str(s) => Ok(vec![(Value::Str(s.clone()), st)]),
            IrKind::NoneConst => Ok(vec![(Value::None, st)]),
            IrKind::Var(n) => match env.lookup(n) {
                Some(v) => Ok(vec![(v.clone(), st)]),
                None => Err(ExecError::UnboundVariable {
                    name: n.to_string(),
                    pos: pos.clone(),
                }),
            },
            IrKind::GlobalGet(n) => match st.globals.get(n) {
                Some(v) => {
                    let v = v.clone();
                    Ok(vec![(v, st)])
                }
                None => Err(ExecError::UnboundVariable {
                    name: n.to_string(),
                    pos: pos.clone(),
                }),
            },
            IrKind::GlobalSet(n, value) => {
                let paths = self.eval(st, env, value)?;
                self.bind(paths, |_, v, mut st| {
                    st.globals.insert(n.clone(), v);
                    st.effects.push(n.clone());
                    Ok(vec![(Value::None, st)])
                })
            }
            IrKind::Let(pat, bound, body) => {
                let paths = self.eval(st, env, bound)?;
                self.bind(paths, |ex, v, st| {
                    let env = destructure(env, pat, v, pos)?;
                    ex.eval(st, &env, body)
                })
            }
            IrKind::Seq(items) => {
                let mut paths = vec![(Value::None, st)];
                for item in items {
                    paths = self.bind(paths, |ex, _, st| ex.eval(st, env, item))?;
                }
                Ok(paths)
            }
            IrKind::If(cond, then, els) => {
                let paths = self.eval(st, env, cond)?;
                self.bind(paths, |ex, v, st| ex.eval_if(st, env, v, then, els, pos))
            }
            IrKind::BinOp(op, a, b) => {
                let op = *op;
                let lists = self.eval_list(st, env, &[(**a).clone(), (**b).clone()])?;
                Ok(self.map_lists(lists, |ex, vals, st| ex.with_ctx(st, pos, op.text(), |ctx| values::binop(ctx, op, &vals[0], &vals[1]))))
            }
            IrKind::Not(a) => {
                let paths = self.eval(st, env, a)?;
                self.bind(paths, |ex, v, mut st| {
                    let r = ex.with_ctx(&mut st, pos, "not", |ctx| values::not(ctx, &v));
                    Ok(vec![(r, st)])
                })
            }
            IrKind::Index(a, i) => {
                let lists = self.eval_list(st, env, &[(**a).clone(), (**i).clone()])?;
                Ok(self.map_lists(lists, |ex, vals, st| ex.with_ctx(st, pos, "index", |ctx| values::index(ctx, &vals[0], &vals[1]))))
            }
            IrKind::Slice(a, lo, hi) => {
                let mut items = vec![(**a).clone()];
                items.extend(lo.iter().map(|x| (**x).clone()));
                items.extend(hi.iter().map(|x| (**x).clone()));
                let lists = self.eval_list(st, env, &items)?;
                let (has_lo, has_hi) = (lo.is_some(), hi.is_some());
                Ok(self.map_lists(lists, |ex, vals, st| {
                    let lo = if has_lo { vals.get(1) } else { None };
                    let hi = if has_hi { vals.last() } else { None };
                    ex.with_ctx(st, pos, "slice", |ctx| values::slice(ctx, &vals[0], lo, hi))
                }))
            }
            IrKind::Tuple(items) => {
                let lists = self.eval_list(st, env, items)?;
                Ok(self.map_lists(lists, |_, vals, _| Value::Tuple(vals)))
            }
            IrKind::List(items) => {
                let lists = self.eval_list(st, env, items)?;
                Ok(self.map_lists(lists, |_, vals, _| Value::List(vals)))
            }
            IrKind::Call(name, args) => {
                let Some(f) = self.program.functions.get(name) else {
                    st.dont_know(format!("unknown function '{name}'"), pos);
                    return Ok(vec![(Value::None, st)]);
                };
                if f.params.len() != args.len() {
                    return Err(ExecError::ArityMismatch {
                        pos: pos.clone(),
                        message: format!("'{name}' takes {} arguments, got {}", f.params.len(), args.len()),
                    });
                }
                let lists = self.eval_list(st, env, args)?;
                let mut out = Vec::new();
                for (vals, st) in lists {
                    if !st.is_open() {
                        out.push((Value::None, st));
                        continue;
                    }
                    let mut callee = Env::default();
                    for (p, v) in f.params.iter().zip(vals) {
                        callee = callee.bind(p.clone(), v);
                    }
                    out.extend(self.eval(st, &callee, &f.body)?);
                }
                Ok(self.cap(out))
            }
            IrKind::TensorExpr { op, args, kwargs } => {
                let mut items = args.clone();
                items.extend(kwargs.iter().map(|(_, v)| v.clone()));
                let lists = self.eval_list(st, env, &items)?;
                let n = args.len();
                Ok(self.map_lists(lists, |ex, vals, st| {
                    let kw: Vec<(Arc<str>, Value)> = kwargs.iter().map(|(k, _)| k.clone()).zip(vals[n..].iter().cloned()).collect();
                    ex.with_ctx(st, pos, op, |ctx| shapeops::apply(ctx, op, &vals[..n], &kw))
                }))
            }
            IrKind::ForRange {
                var,
                lo,
                hi,
                step,
                carried,
                body,
            } => {
                let init = carried_values(env, carried);
                let mut paths = vec![(init, st)];
                let mut i = *lo;
                while (*step > 0 && i < *hi) || (*step < 0 && i > *hi) {
                    let loop_env = env.bind(var.clone(), Value::int(i));
                    paths = self.bind(paths, |ex, v, st| {
                        let env = bind_carried(&loop_env, carried, v, pos)?;
                        ex.eval(st, &env, body)
                    })?;
                    i += step;
                }
                Ok(paths)
            }
            IrKind::ForDataset {
                pattern,
                dataset,
                carried,
                body,
            } => {
                let paths = self.eval(st, env, dataset)?;
                self.bind(paths, |ex, d, st| ex.eval_dataset_loop(st, env, d, pattern, carried, body, pos))
            }
        }
    }

    fn map_lists<F>(&mut self, lists: Vec<(Vec<Value>, PathState)>, mut f: F) -> Paths
    where
        F: FnMut(&mut Self, Vec<Value>, &mut PathState) -> Value,
    {
        let out = lists
            .into_iter()
            .map(|(vals, mut st)| {
                if !st.is_open() {
                    return (Value::None, st);
                }
                let v = f(self, vals, &mut st);
                (v, st)
            })
            .collect();
        self.cap(out)
    }

    fn eval_if(&mut self, st: PathState, env: &Env, cond: Value, then: &IrExpr, els: &IrExpr, pos: &SourcePos) -> Res {
        let Some(b) = values::truth(&cond) else {
            return Err(ExecError::SortError {
                pos: pos.clone(),
                message: format!("branch condition is a {}, not a boolean", cond.kind_name()),
            });
        };
        let mut c = Constraint {
            pred: Pred::Atom(b),
            kind: Kind::Hard,
            gen: 0,
            origin: pos.clone(),
            op: None,
            branch: true,
        };
        let p = match online_check(&c, &st.ranges, st.symbolic_branches) {
            Disposition::ResolvedBranch(v) => return self.eval(st, env, if v { then } else { els }),
            Disposition::Record(p) => p,
            _ => unreachable!("branch constraints are resolved or recorded"),
        };
        let base_len = st.constraints.len();
        let base_effects = st.effects.len();
        let cond_syms = free_symbols_pred(&p);

        let mut arms = Vec::new();
        for (arm, pred) in [(then, p.clone()), (els, Pred::not(p.clone()))] {
            let mut s = st.clone();
            s.symbolic_branches = true;
            c.gen = self.next_gen();
            c.pred = pred;
            self.push(&mut s, c.clone());
            arms.push(self.eval(s, env, arm)?);
        }
        let else_paths = arms.pop().unwrap();
        let then_paths = arms.pop().unwrap();

        if self.opts.merge {
            if let Some(merged) = self.try_merge(&st, base_len, base_effects, &cond_syms, &then_paths, &else_paths) {
                self.merges += 1;
                return Ok(vec![merged]);
            }
        }
        let mut out = then_paths;
        out.extend(else_paths);
        Ok(self.cap(out))
    }

    /// Merges the two arms of a split when each produced one open path, the
    /// arms emitted no hard constraints besides the branch condition, the
    /// constraints they emitted do not mention the condition's symbols, no
    /// globals were written and the results agree.
    fn try_merge(
        &self,
        base: &PathState,
        base_len: usize,
        base_effects: usize,
        cond_syms: &BTreeSet<Symbol>,
        then_paths: &Paths,
        else_paths: &Paths,
    ) -> Option<(Value, PathState)> {
        let ([(tv, ts)], [(ev, es)]) = (&then_paths[..], &else_paths[..]) else {
            return None;
        };
        if !ts.is_open() || !es.is_open() {
            return None;
        }
        if ts.effects.len() != base_effects || es.effects.len() != base_effects {
            return None;
        }
        let arm_constraints = |s: &PathState| -> Option<Vec<Constraint>> {
            let added = &s.constraints.as_slice()[base_len..];
            let mut out = Vec::new();
            for c in added {
                if c.branch {
                    continue;
                }
                if c.kind == Kind::Hard || !free_symbols_pred(&c.pred).is_disjoint(cond_syms) {
                    return None;
                }
                out.push(c.clone());
            }
            Some(out)
        };
        let mut extra = arm_constraints(ts)?;
        extra.extend(arm_constraints(es)?);
        if normalize(tv) != normalize(ev) {
            return None;
        }
        let mut all: Vec<Constraint> = base.constraints.as_slice().to_vec();
        extra.sort_by_key(|c| c.gen);
        all.extend(extra);
        let mut st = base.clone();
        st.constraints = ConstraintSet::from_sorted(all);
        Some((tv.clone(), st))
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_dataset_loop(&mut self, st: PathState, env: &Env, d: Value, pattern: &Pattern, carried: &[Name], body: &IrExpr, pos: &SourcePos) -> Res {
        let Value::Dataset(d) = d else {
            return Err(ExecError::SortError {
                pos: pos.clone(),
                message: format!("cannot iterate over a {}", d.kind_name()),
            });
        };
        let init = carried_values(env, carried);
        let mut out = Vec::new();

        // Regular minibatches of the full batch size.
        let mut regular = st.clone();
        self.emit(&mut regular, Kind::Hard, Pred::Atom(d.batch.clone().le(d.length.clone())), pos, Some("dataset"));
        out.extend(self.run_batch(regular, env, &d.batch, &d.item, &d.label, pattern, carried, &init, body, pos)?);

        // The residual minibatch of the last step.
        if !d.drop_last {
            let mut residual = st;
            let hint = format!("residual@{}:{}", pos.file, pos.line);
            let r = self.syms.fresh_num(hint);
            for b in [
                r.clone().eq(d.length.clone().modulo(d.batch.clone())),
                NumExpr::Const(0).lt(r.clone()),
                r.clone().lt(d.batch.clone()),
            ] {
                self.emit(&mut residual, Kind::Hard, Pred::Atom(b), pos, Some("dataset"));
            }
            out.extend(self.run_batch(residual, env, &r, &d.item, &d.label, pattern, carried, &init, body, pos)?);
        }
        Ok(self.cap(out))
    }

    #[allow(clippy::too_many_arguments)]
    fn run_batch(
        &mut self,
        st: PathState,
        env: &Env,
        lead: &NumExpr,
        item: &ShapeExpr,
        label: &ShapeExpr,
        pattern: &Pattern,
        carried: &[Name],
        init: &Value,
        body: &IrExpr,
        pos: &SourcePos,
    ) -> Res {
        if !st.is_open() {
            return Ok(vec![(Value::None, st)]);
        }
        let lead = ShapeExpr::Tuple(vec![lead.clone()]);
        let batch = Value::Tuple(vec![
            Value::Tensor(lead.clone().concat(item.clone())),
            Value::Tensor(lead.concat(label.clone())),
        ]);
        let env = bind_carried(env, carried, init.clone(), pos)?;
        let env = destructure(&env, pattern, normalize(&batch), pos)?;
        self.eval(st, &env, body)
    }
}

fn carried_values(env: &Env, carried: &[Name]) -> Value {
    Value::Tuple(carried.iter().map(|n| env.lookup(n).cloned().unwrap_or(Value::None)).collect())
}

fn bind_carried(env: &Env, carried: &[Name], v: Value, pos: &SourcePos) -> Result<Env, ExecError> {
    let pat = Pattern::Tuple(carried.iter().cloned().map(Pattern::Name).collect());
    destructure(env, &pat, v, pos)
}

fn destructure(env: &Env, pat: &Pattern, v: Value, pos: &SourcePos) -> Result<Env, ExecError> {
    match pat {
        Pattern::Name(n) => Ok(env.bind(n.clone(), v)),
        Pattern::Tuple(pats) => {
            let items = match v {
                Value::Tuple(items) | Value::List(items) => items,
                Value::Size(ShapeExpr::Tuple(dims)) => dims.into_iter().map(Value::Num).collect(),
                other => {
                    return Err(ExecError::SortError {
                        pos: pos.clone(),
                        message: format!("cannot unpack a {} into {} names", other.kind_name(), pats.len()),
                    })
                }
            };
            if items.len() != pats.len() {
                return Err(ExecError::SortError {
                    pos: pos.clone(),
                    message: format!("cannot unpack {} values into {} names", items.len(), pats.len()),
                });
            }
            let mut env = env.clone();
            for (p, v) in pats.iter().zip(items) {
                env = destructure(&env, p, v, pos)?;
            }
            Ok(env)
        }
    }
}

#[cfg(test)]
mod tests;
