//! Pretty-printer producing source that parses back to the same tree.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.functions {
        print_function(&mut out, f);
        out.push('\n');
    }
    print_block(&mut out, &p.entry, 0);
    out
}

fn print_function(out: &mut String, f: &FunctionDef) {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| match &p.default {
            Some(d) => format!("{}={}", p.name, print_expr(d)),
            None => p.name.clone(),
        })
        .collect();
    let _ = writeln!(out, "def {}({}):", f.name, params.join(", "));
    print_suite(out, &f.body, 1);
}

fn print_suite(out: &mut String, body: &[Stmt], level: usize) {
    if body.is_empty() {
        let _ = writeln!(out, "{}pass", INDENT.repeat(level));
    } else {
        print_block(out, body, level);
    }
}

fn print_block(out: &mut String, body: &[Stmt], level: usize) {
    for s in body {
        print_stmt(out, s, level);
    }
}

fn print_target(t: &Target) -> String {
    match t {
        Target::Name(n, _) => n.clone(),
        Target::Tuple(items) if items.len() == 1 => format!("({},)", print_target(&items[0])),
        Target::Tuple(items) => format!("({})", items.iter().map(print_target).collect::<Vec<_>>().join(", ")),
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    let pad = INDENT.repeat(level);
    match &s.kind {
        StmtKind::Assign(t, e) => {
            let _ = writeln!(out, "{pad}{} = {}", print_target(t), print_expr(e));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{pad}{}", print_expr(e));
        }
        StmtKind::If(arms, orelse) => {
            for (i, (cond, body)) in arms.iter().enumerate() {
                let kw = if i == 0 { "if" } else { "elif" };
                let _ = writeln!(out, "{pad}{kw} {}:", print_expr(cond));
                print_suite(out, body, level + 1);
            }
            if let Some(body) = orelse {
                let _ = writeln!(out, "{pad}else:");
                print_suite(out, body, level + 1);
            }
        }
        StmtKind::For(t, iter, body) => {
            let _ = writeln!(out, "{pad}for {} in {}:", print_target(t), print_expr(iter));
            print_suite(out, body, level + 1);
        }
        StmtKind::Return(None) => {
            let _ = writeln!(out, "{pad}return");
        }
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "{pad}return {}", print_expr(e));
        }
        StmtKind::Pass => {
            let _ = writeln!(out, "{pad}pass");
        }
        StmtKind::Global(names) => {
            let _ = writeln!(out, "{pad}global {}", names.join(", "));
        }
    }
}

const POSTFIX: u8 = 9;
const NEG: u8 = 7;
const NOT: u8 = 3;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Int(n) if *n < 0 => NEG,
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(UnaryOp::Neg, _) => NEG,
        ExprKind::Unary(UnaryOp::Not, _) => NOT,
        _ => POSTFIX,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let s = print_expr(e);
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(n) => n.to_string(),
        ExprKind::Bool(true) => "True".into(),
        ExprKind::Bool(false) => "False".into(),
        ExprKind::Str(s) => format!("{s:?}"),
        ExprKind::None => "None".into(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Attr(obj, name) => format!("{}.{name}", wrap(obj, POSTFIX)),
        ExprKind::Call { func, args, kwargs } => {
            let mut parts: Vec<String> = args.iter().map(print_expr).collect();
            parts.extend(kwargs.iter().map(|(k, v)| format!("{k}={}", print_expr(v))));
            format!("{}({})", wrap(func, POSTFIX), parts.join(", "))
        }
        ExprKind::Index(obj, idx) => format!("{}[{}]", wrap(obj, POSTFIX), print_expr(idx)),
        ExprKind::Slice(obj, lo, hi) => format!(
            "{}[{}:{}]",
            wrap(obj, POSTFIX),
            lo.as_ref().map(|x| print_expr(x)).unwrap_or_default(),
            hi.as_ref().map(|x| print_expr(x)).unwrap_or_default()
        ),
        ExprKind::Tuple(items) if items.len() == 1 => format!("({},)", print_expr(&items[0])),
        ExprKind::Tuple(items) => format!("({})", items.iter().map(print_expr).collect::<Vec<_>>().join(", ")),
        ExprKind::List(items) => format!("[{}]", items.iter().map(print_expr).collect::<Vec<_>>().join(", ")),
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let comparison = p == 4;
            let left = wrap(l, if comparison { p + 1 } else { p });
            let right = wrap(r, p + 1);
            format!("{left} {} {right}", op.text())
        }
        ExprKind::Unary(UnaryOp::Neg, x) => {
            // Keep `-(3)` distinct from the literal -3.
            if matches!(x.kind, ExprKind::Int(_)) {
                format!("-({})", print_expr(x))
            } else {
                format!("-{}", wrap(x, NEG))
            }
        }
        ExprKind::Unary(UnaryOp::Not, x) => format!("not {}", wrap(x, NOT)),
    }
}
