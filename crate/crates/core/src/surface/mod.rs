//! The kernel surface language: lexing, parsing, printing and lowering.

mod ast;
mod ir;
mod lexer;
mod lower;
mod parser;
mod printer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::pos::SourcePos;

pub use ast::*;
pub use ir::*;
pub use lower::{lower, ArgValue, LowerError};
pub use printer::{print_expr, print_program};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: SourcePos,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{}", join_errors(.0))]
    Syntax(Vec<SyntaxError>),
    /// A cycle in the call graph, listed from the first function back to
    /// itself.
    #[error("recursive call cycle: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
}

fn join_errors(errors: &[SyntaxError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

/// Parses a source file, reporting every syntax error found.
pub fn parse_source(text: &str, file: &str) -> Result<Program, ParseError> {
    let file: Arc<str> = Arc::from(file);
    let mut parser = parser::Parser::new(text, &file);
    let program = parser.program(file);
    let mut errors = std::mem::take(&mut parser.errors);
    let mut seen = BTreeSet::new();
    for f in &program.functions {
        if !seen.insert(f.name.as_str()) {
            errors.push(SyntaxError {
                pos: f.pos.clone(),
                message: format!("function '{}' is defined more than once", f.name),
            });
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| (e.pos.line, e.pos.column));
        return Err(ParseError::Syntax(errors));
    }
    if let Some(cycle) = find_cycle(&program) {
        return Err(ParseError::Recursion(cycle));
    }
    Ok(program)
}

fn callees(e: &Expr, defined: &BTreeSet<&str>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Call { func, args, kwargs } => {
            match &func.kind {
                ExprKind::Name(n) | ExprKind::Attr(_, n) if defined.contains(n.as_str()) => {
                    out.insert(n.clone());
                }
                _ => {}
            }
            callees(func, defined, out);
            args.iter().for_each(|a| callees(a, defined, out));
            kwargs.iter().for_each(|(_, a)| callees(a, defined, out));
        }
        ExprKind::Attr(o, _) | ExprKind::Unary(_, o) => callees(o, defined, out),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            callees(a, defined, out);
            callees(b, defined, out);
        }
        ExprKind::Slice(a, lo, hi) => {
            callees(a, defined, out);
            for x in [lo, hi].into_iter().flatten() {
                callees(x, defined, out);
            }
        }
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter().for_each(|a| callees(a, defined, out)),
        _ => {}
    }
}

fn stmt_callees(body: &[Stmt], defined: &BTreeSet<&str>, out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign(_, e) | StmtKind::Expr(e) | StmtKind::Return(Some(e)) => callees(e, defined, out),
            StmtKind::If(arms, orelse) => {
                for (c, b) in arms {
                    callees(c, defined, out);
                    stmt_callees(b, defined, out);
                }
                if let Some(b) = orelse {
                    stmt_callees(b, defined, out);
                }
            }
            StmtKind::For(_, e, b) => {
                callees(e, defined, out);
                stmt_callees(b, defined, out);
            }
            _ => {}
        }
    }
}

fn find_cycle(p: &Program) -> Option<Vec<String>> {
    let defined: BTreeSet<&str> = p.functions.iter().map(|f| f.name.as_str()).collect();
    let mut graph: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &p.functions {
        let mut out = BTreeSet::new();
        stmt_callees(&f.body, &defined, &mut out);
        for d in f.params.iter().filter_map(|q| q.default.as_ref()) {
            callees(d, &defined, &mut out);
        }
        graph.insert(f.name.clone(), out);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(n: &str, graph: &BTreeMap<String, BTreeSet<String>>, marks: &mut BTreeMap<String, Mark>, stack: &mut Vec<String>) -> Option<Vec<String>> {
        match marks.get(n) {
            Some(Mark::Done) => return None,
            Some(Mark::Open) => {
                let start = stack.iter().position(|s| s == n).unwrap_or(0);
                let mut cycle = stack[start..].to_vec();
                cycle.push(n.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(n.to_string(), Mark::Open);
        stack.push(n.to_string());
        for m in graph.get(n).into_iter().flatten() {
            if let Some(c) = visit(m, graph, marks, stack) {
                return Some(c);
            }
        }
        stack.pop();
        marks.insert(n.to_string(), Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for n in graph.keys() {
        let mut stack = Vec::new();
        if let Some(c) = visit(n, &graph, &mut marks, &mut stack) {
            return Some(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_args() -> BTreeMap<String, ArgValue> {
        BTreeMap::new()
    }

    fn lowered(src: &str) -> String {
        let p = parse_source(src, "t.tsl").unwrap();
        lower(&p, &no_args()).unwrap().entry.to_string()
    }

    #[test]
    fn minimal_program() {
        assert_eq!(lowered("x = 1 + 2\n"), "(let x (+ 1 2) none)");
    }

    #[test]
    fn empty_program_is_empty_seq() {
        assert_eq!(lowered(""), "(seq)");
    }

    #[test]
    fn self_recursion_rejected() {
        let err = parse_source("def f():\n    return f()\n", "t.tsl").unwrap_err();
        assert_eq!(err, ParseError::Recursion(vec!["f".into(), "f".into()]));
    }

    #[test]
    fn mutual_recursion_rejected() {
        let src = "def f(x):\n    return g(x)\ndef g(x):\n    return x.f()\n";
        assert!(matches!(parse_source(src, "t.tsl"), Err(ParseError::Recursion(c)) if c.len() == 3));
    }

    #[test]
    fn duplicate_function_rejected() {
        let src = "def f():\n    pass\ndef f():\n    pass\n";
        assert!(matches!(parse_source(src, "t.tsl"), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn all_syntax_errors_reported() {
        let src = "x = (1 +\ny = 2\nz = ]\nw = 3 / 4\n";
        match parse_source(src, "t.tsl") {
            Err(ParseError::Syntax(errs)) => assert!(errs.len() >= 2, "{errs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cli_args_substituted_into_range() {
        let src = "for e in range(args.epochs):\n    x = e\n";
        let p = parse_source(src, "t.tsl").unwrap();
        let mut args = no_args();
        args.insert("epochs".into(), ArgValue::Int(1));
        let ir = lower(&p, &args).unwrap();
        assert_eq!(ir.entry.to_string(), "(let () (for-range e 0 1 1 () (let x e (tuple))) none)");
    }

    #[test]
    fn missing_argument() {
        let p = parse_source("n = args.epochs\n", "t.tsl").unwrap();
        assert!(matches!(lower(&p, &no_args()), Err(LowerError::MissingArgument { name, .. }) if name == "epochs"));
    }

    #[test]
    fn non_constant_loop_bound() {
        let src = "def f(n):\n    for i in range(n):\n        pass\n    return n\nf(3)\n";
        let p = parse_source(src, "t.tsl").unwrap();
        assert!(matches!(lower(&p, &no_args()), Err(LowerError::NonConstantLoopBound(_))));
    }

    #[test]
    fn constant_loop_bound_through_locals() {
        let out = lowered("n = 2\nm = n * 3\nfor i in range(1, m):\n    pass\n");
        assert!(out.contains("(for-range i 1 6 1"), "{out}");
    }

    #[test]
    fn branch_carries_updated_names() {
        let out = lowered("x = 1\nif x < 2:\n    x = 3\n    y = 4\nz = x\n");
        assert_eq!(out, "(let x 1 (let (x) (if (< x 2) (let x 3 (let y 4 (tuple x))) (tuple x)) (let z x none)))");
    }

    #[test]
    fn return_in_branch_duplicates_continuation() {
        let src = "def f(a):\n    if a:\n        return 1\n    b = 2\n    return b\n";
        let p = parse_source(src, "t.tsl").unwrap();
        let ir = lower(&p, &no_args()).unwrap();
        assert_eq!(ir.functions["f"].body.to_string(), "(if a 1 (let b 2 b))");
    }

    #[test]
    fn comparisons_normalized() {
        assert_eq!(lowered("a = 1 >= 2\n"), "(let a (not (< 1 2)) none)");
        assert_eq!(lowered("a = 1 > 2\n"), "(let a (< 2 1) none)");
        assert_eq!(lowered("a = 1 != 2\n"), "(let a (not (= 1 2)) none)");
    }

    #[test]
    fn calls_match_keywords_and_defaults() {
        let src = "def f(a, b=2, c=3):\n    return a\ny = f(1, c=5)\n";
        assert_eq!(lowered(src), "(let y (call f 1 2 5) none)");
        let p = parse_source("def f(a):\n    return a\nf(1, 2)\n", "t.tsl").unwrap();
        assert!(matches!(lower(&p, &no_args()), Err(LowerError::ArityMismatch { .. })));
    }

    #[test]
    fn qualified_and_method_calls() {
        assert_eq!(lowered("x = torch.ones(2, 3)\n"), "(let x (tensor ones 2 3) none)");
        assert_eq!(lowered("x = ones(2)\ny = x.view(2, -1)\n"), "(let x (tensor ones 2) (let y (tensor view x 2 -1) none))");
        assert_eq!(lowered("x = ones(2)\ns = x.shape\n"), "(let x (tensor ones 2) (let s (tensor size x) none))");
    }

    #[test]
    fn globals_read_and_written_by_functions() {
        let src = "count = 0\ndef bump():\n    global count\n    count = count + 1\n    return count\nbump()\n";
        let p = parse_source(src, "t.tsl").unwrap();
        let ir = lower(&p, &no_args()).unwrap();
        assert_eq!(
            ir.functions["bump"].body.to_string(),
            "(seq (set-global count (+ (global count) 1)) (global count))"
        );
        assert_eq!(ir.entry.to_string(), "(seq (set-global count 0) (call bump) none)");
    }

    #[test]
    fn module_constants_inlined_into_functions() {
        let src = "B = 64\ndef f(x):\n    return x.view(B, -1)\n";
        let p = parse_source(src, "t.tsl").unwrap();
        let ir = lower(&p, &no_args()).unwrap();
        assert_eq!(ir.functions["f"].body.to_string(), "(tensor view x 64 -1)");
    }

    #[test]
    fn dataset_loop() {
        let out = lowered("loss = 0\nfor x, y in dataset(\"mnist\", batch_size=64):\n    loss = x\n");
        assert_eq!(
            out,
            "(let loss 0 (let (loss) (for-dataset (x y) (tensor dataset \"mnist\" :batch_size 64) (loss) (let loss x (tuple loss))) none))"
        );
    }

    #[test]
    fn lowering_is_deterministic() {
        let src = "def g(x):\n    if x < 1:\n        y = 1\n    else:\n        y = 2\n    return y\nfor i in range(3):\n    z = g(i)\n";
        let p = parse_source(src, "t.tsl").unwrap();
        assert_eq!(lower(&p, &no_args()).unwrap(), lower(&p, &no_args()).unwrap());
    }

    #[test]
    fn round_trip_is_fixpoint() {
        let src = "def net(x, k=3):\n    if not x and k >= -2:\n        return (x, k)\n    y = x[1:] + -(3) * (k - 1)\n    return y.view(k, -1)[0]\nfor a, b in dataset(\"mnist\", batch_size=64, drop_last=True):\n    c = net(a, k=2) // 2 % 3\n";
        let once = print_program(&parse_source(src, "t.tsl").unwrap());
        let twice = print_program(&parse_source(&once, "t.tsl").unwrap());
        assert_eq!(once, twice);
    }
}
