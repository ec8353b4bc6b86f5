use std::sync::Arc;

use crate::pos::SourcePos;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

pub(super) struct Parser {
    toks: Vec<Token>,
    i: usize,
    pub(super) errors: Vec<SyntaxError>,
}

type PResult<T> = Result<T, SyntaxError>;

type CallArgs = (Vec<Expr>, Vec<(String, Expr)>);

impl Parser {
    pub(super) fn new(text: &str, file: &Arc<str>) -> Parser {
        let (toks, errors) = tokenize(text, file);
        Parser { toks, i: 0, errors }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> SourcePos {
        self.toks[self.i].pos.clone()
    }

    fn prev_pos(&self) -> SourcePos {
        self.toks[self.i.saturating_sub(1)].pos.clone()
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            pos: self.pos(),
            message: message.into(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<Token> {
        if self.peek() == &t {
            Ok(self.advance())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourcePos)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let t = self.advance();
                Ok((name, t.pos))
            }
            other => Err(self.error_here(format!("expected a name, found {}", other.describe()))),
        }
    }

    /// Skips the rest of a broken statement, including any block it opens.
    fn recover(&mut self) {
        while !matches!(self.peek(), Tok::Newline | Tok::Eof) {
            self.advance();
        }
        self.eat(&Tok::Newline);
        if self.peek() == &Tok::Indent {
            let mut depth = 0usize;
            loop {
                match self.advance().tok {
                    Tok::Indent => depth += 1,
                    Tok::Dedent => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Tok::Eof => break,
                    _ => {}
                }
            }
        }
    }

    pub(super) fn program(&mut self, file: Arc<str>) -> Program {
        let mut functions = Vec::new();
        let mut entry = Vec::new();
        while self.peek() != &Tok::Eof {
            match self.peek() {
                Tok::Def => match self.funcdef() {
                    Ok(f) => functions.push(f),
                    Err(e) => {
                        self.errors.push(e);
                        self.recover();
                    }
                },
                Tok::Indent => {
                    let e = self.error_here("unexpected indent");
                    self.errors.push(e);
                    self.recover_block();
                }
                Tok::Dedent | Tok::Newline => {
                    self.advance();
                }
                _ => {
                    if let Some(s) = self.statement() {
                        entry.push(s);
                    }
                }
            }
        }
        Program { file, functions, entry }
    }

    fn recover_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.advance().tok {
                Tok::Indent => depth += 1,
                Tok::Dedent => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        break;
                    }
                }
                Tok::Eof => break,
                _ => {}
            }
        }
    }

    fn funcdef(&mut self) -> PResult<FunctionDef> {
        let start = self.expect(Tok::Def, "'def'")?.pos;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen, "'('")?;
        let mut params = Vec::new();
        while self.peek() != &Tok::RParen {
            let (pname, ppos) = self.ident()?;
            let default = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
            if default.is_none() && params.iter().any(|p: &Param| p.default.is_some()) {
                return Err(SyntaxError {
                    pos: ppos,
                    message: "parameter without a default follows a parameter with a default".into(),
                });
            }
            params.push(Param {
                name: pname,
                default,
                pos: ppos,
            });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen, "')'")?;
        self.expect(Tok::Colon, "':'")?;
        let body = self.block()?;
        Ok(FunctionDef {
            name,
            params,
            body,
            pos: start,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if self.peek() != &Tok::Newline {
            // Single-line suite: `if c: x = 1`
            let s = self.simple_statement()?;
            self.expect(Tok::Newline, "end of line")?;
            return Ok(vec![s]);
        }
        self.advance();
        self.expect(Tok::Indent, "an indented block")?;
        let mut body = Vec::new();
        while !matches!(self.peek(), Tok::Dedent | Tok::Eof) {
            if self.peek() == &Tok::Def {
                let e = self.error_here("nested function definitions are not supported");
                self.errors.push(e);
                self.recover();
                continue;
            }
            if let Some(s) = self.statement() {
                body.push(s);
            }
        }
        self.eat(&Tok::Dedent);
        Ok(body)
    }

    /// Parses one statement; on error records it, recovers and returns None.
    fn statement(&mut self) -> Option<Stmt> {
        let r = match self.peek() {
            Tok::If => self.if_stmt(),
            Tok::For => self.for_stmt(),
            _ => self.simple_statement().and_then(|s| {
                self.expect(Tok::Newline, "end of line")?;
                Ok(s)
            }),
        };
        match r {
            Ok(s) => Some(s),
            Err(e) => {
                self.errors.push(e);
                self.recover();
                None
            }
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect(Tok::If, "'if'")?.pos;
        let mut arms = Vec::new();
        let cond = self.expr()?;
        self.expect(Tok::Colon, "':'")?;
        arms.push((cond, self.block()?));
        let mut orelse = None;
        loop {
            if self.eat(&Tok::Elif) {
                let cond = self.expr()?;
                self.expect(Tok::Colon, "':'")?;
                arms.push((cond, self.block()?));
            } else if self.eat(&Tok::Else) {
                self.expect(Tok::Colon, "':'")?;
                orelse = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt {
            kind: StmtKind::If(arms, orelse),
            pos: start,
        })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect(Tok::For, "'for'")?.pos;
        let first = self.postfix()?;
        let target = if self.peek() == &Tok::Comma {
            let mut items = vec![first];
            while self.eat(&Tok::Comma) {
                if self.peek() == &Tok::In {
                    break;
                }
                items.push(self.postfix()?);
            }
            let pos = items[0].pos.clone();
            self.to_target(Expr::new(ExprKind::Tuple(items), pos))?
        } else {
            self.to_target(first)?
        };
        self.expect(Tok::In, "'in'")?;
        let iter = self.exprlist()?;
        self.expect(Tok::Colon, "':'")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::For(target, iter, body),
            pos: start,
        })
    }

    fn to_target(&self, e: Expr) -> PResult<Target> {
        match e.kind {
            ExprKind::Name(n) => Ok(Target::Name(n, e.pos)),
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                Ok(Target::Tuple(items.into_iter().map(|x| self.to_target(x)).collect::<PResult<_>>()?))
            }
            _ => Err(SyntaxError {
                pos: e.pos,
                message: "cannot assign to this expression".into(),
            }),
        }
    }

    fn simple_statement(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek() {
            Tok::Pass => {
                self.advance();
                StmtKind::Pass
            }
            Tok::Return => {
                self.advance();
                if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.exprlist()?))
                }
            }
            Tok::Global => {
                self.advance();
                let mut names = vec![self.ident()?.0];
                while self.eat(&Tok::Comma) {
                    names.push(self.ident()?.0);
                }
                StmtKind::Global(names)
            }
            Tok::Def => return Err(self.error_here("function definitions are only allowed at the top level")),
            _ => {
                let e = self.exprlist()?;
                if self.eat(&Tok::Assign) {
                    let target = self.to_target(e)?;
                    let value = self.exprlist()?;
                    if self.peek() == &Tok::Assign {
                        return Err(self.error_here("chained assignment is not supported"));
                    }
                    StmtKind::Assign(target, value)
                } else {
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(Stmt { kind, pos })
    }

    /// Comma-separated expressions; more than one (or a trailing comma)
    /// forms a tuple.
    fn exprlist(&mut self) -> PResult<Expr> {
        let first = self.expr()?;
        if self.peek() != &Tok::Comma {
            return Ok(first);
        }
        let pos = first.pos.clone();
        let mut items = vec![first];
        while self.eat(&Tok::Comma) {
            if matches!(self.peek(), Tok::Newline | Tok::Assign | Tok::Colon | Tok::RParen | Tok::Eof) {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), pos))
    }

    pub(super) fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &Tok::Or {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.peek() == &Tok::And {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Not {
            let pos = self.advance().pos;
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(inner)), pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.arith()?;
        if matches!(self.peek(), Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::EqEq | Tok::NotEq) {
            return Err(self.error_here("chained comparisons are not supported"));
        }
        Ok(binary(op, lhs, rhs))
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::SlashSlash => BinOp::FloorDiv,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Minus {
            let pos = self.advance().pos;
            let literal = matches!(self.peek(), Tok::Int(_));
            let inner = self.unary()?;
            if let (true, ExprKind::Int(n)) = (literal, &inner.kind) {
                if let Some(m) = n.checked_neg() {
                    return Ok(Expr::new(ExprKind::Int(m), pos.to(&inner.pos)));
                }
            }
            return Ok(Expr::new(ExprKind::Unary(UnaryOp::Neg, Box::new(inner)), pos));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Tok::LParen => {
                    self.advance();
                    let (args, kwargs) = self.call_args()?;
                    let end = self.expect(Tok::RParen, "')'")?.pos;
                    let pos = e.pos.to(&end);
                    e = Expr::new(
                        ExprKind::Call {
                            func: Box::new(e),
                            args,
                            kwargs,
                        },
                        pos,
                    );
                }
                Tok::Dot => {
                    self.advance();
                    let (name, npos) = self.ident()?;
                    let pos = e.pos.to(&npos);
                    e = Expr::new(ExprKind::Attr(Box::new(e), name), pos);
                }
                Tok::LBracket => {
                    self.advance();
                    let lo = if self.peek() == &Tok::Colon { None } else { Some(self.expr()?) };
                    if self.eat(&Tok::Colon) {
                        let hi = if self.peek() == &Tok::RBracket { None } else { Some(self.expr()?) };
                        let end = self.expect(Tok::RBracket, "']'")?.pos;
                        let pos = e.pos.to(&end);
                        e = Expr::new(ExprKind::Slice(Box::new(e), lo.map(Box::new), hi.map(Box::new)), pos);
                    } else {
                        if self.peek() == &Tok::Comma {
                            return Err(self.error_here("multi-dimensional subscripts are not supported"));
                        }
                        let end = self.expect(Tok::RBracket, "']'")?.pos;
                        let pos = e.pos.to(&end);
                        e = Expr::new(ExprKind::Index(Box::new(e), Box::new(lo.expect("index present"))), pos);
                    }
                }
                _ => return Ok(e),
            }
        }
    }

    fn call_args(&mut self) -> PResult<CallArgs> {
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Expr)> = Vec::new();
        while self.peek() != &Tok::RParen {
            if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1).clone()) {
                let pos = self.pos();
                self.advance();
                self.advance();
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return Err(SyntaxError {
                        pos,
                        message: format!("keyword argument '{name}' repeated"),
                    });
                }
                kwargs.push((name, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error_here("positional argument follows keyword argument"));
                }
                if self.peek() == &Tok::Star {
                    return Err(self.error_here("argument unpacking is not supported"));
                }
                args.push(self.expr()?);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                ExprKind::Int(n)
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Tok::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            Tok::None => {
                self.advance();
                ExprKind::None
            }
            Tok::Ident(name) => {
                self.advance();
                ExprKind::Name(name)
            }
            Tok::LParen => {
                self.advance();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::new(ExprKind::Tuple(Vec::new()), pos.to(&self.prev_pos())));
                }
                let first = self.expr()?;
                if self.eat(&Tok::RParen) {
                    // Parentheses only group.
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat(&Tok::Comma) {
                    if self.peek() == &Tok::RParen {
                        break;
                    }
                    items.push(self.expr()?);
                }
                let end = self.expect(Tok::RParen, "')'")?.pos;
                return Ok(Expr::new(ExprKind::Tuple(items), pos.to(&end)));
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                while self.peek() != &Tok::RBracket {
                    items.push(self.expr()?);
                    if self.peek() == &Tok::For {
                        return Err(self.error_here("comprehensions are not supported; use a for loop"));
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                let end = self.expect(Tok::RBracket, "']'")?.pos;
                return Ok(Expr::new(ExprKind::List(items), pos.to(&end)));
            }
            other => return Err(self.error_here(format!("expected an expression, found {}", other.describe()))),
        };
        let end = self.prev_pos();
        Ok(Expr::new(kind, pos.to(&end)))
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let pos = lhs.pos.to(&rhs.pos);
    Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos)
}
