//! Tokenizer with Python-style layout: NEWLINE, INDENT and DEDENT tokens are
//! synthesized from line structure, and newlines inside brackets are ignored.

use std::sync::Arc;

use crate::pos::SourcePos;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    // keywords
    Def,
    Return,
    If,
    Elif,
    Else,
    For,
    In,
    Pass,
    Global,
    And,
    Or,
    Not,
    True,
    False,
    None,
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    SlashSlash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    // layout
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ident(s) => format!("name '{s}'"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of file".into(),
            other => format!("'{}'", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Def => "def",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Elif => "elif",
            Tok::Else => "else",
            Tok::For => "for",
            Tok::In => "in",
            Tok::Pass => "pass",
            Tok::Global => "global",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Not => "not",
            Tok::True => "True",
            Tok::False => "False",
            Tok::None => "None",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::SlashSlash => "//",
            Tok::Percent => "%",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: SourcePos,
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "def" => Tok::Def,
        "return" => Tok::Return,
        "if" => Tok::If,
        "elif" => Tok::Elif,
        "else" => Tok::Else,
        "for" => Tok::For,
        "in" => Tok::In,
        "pass" => Tok::Pass,
        "global" => Tok::Global,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "True" => Tok::True,
        "False" => Tok::False,
        "None" => Tok::None,
        _ => return None,
    })
}

struct Lexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    file: &'a Arc<str>,
    out: Vec<Token>,
    errors: Vec<SyntaxError>,
    indents: Vec<u32>,
    depth: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.i + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self, line: u32, col: u32, span: u32) -> SourcePos {
        SourcePos::new(self.file.clone(), line, col, span)
    }

    fn push(&mut self, tok: Tok, line: u32, col: u32) {
        let span = if line == self.line { self.col - col } else { 1 };
        let pos = self.pos(line, col, span);
        self.out.push(Token { tok, pos });
    }

    fn error(&mut self, line: u32, col: u32, message: impl Into<String>) {
        let pos = self.pos(line, col, 1);
        self.errors.push(SyntaxError {
            pos,
            message: message.into(),
        });
    }

    /// Handles indentation at the start of a logical line. Returns false at
    /// end of input.
    fn line_start(&mut self) -> bool {
        loop {
            let mut width = 0u32;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\r' => {}
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return false,
                Some('\n') => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                Some(_) => {
                    let (line, col) = (self.line, self.col);
                    let cur = *self.indents.last().unwrap();
                    if width > cur {
                        self.indents.push(width);
                        self.out.push(Token {
                            tok: Tok::Indent,
                            pos: self.pos(line, 1, width),
                        });
                    } else if width < cur {
                        while width < *self.indents.last().unwrap() {
                            self.indents.pop();
                            self.out.push(Token {
                                tok: Tok::Dedent,
                                pos: self.pos(line, col, 0),
                            });
                        }
                        if width != *self.indents.last().unwrap() {
                            self.error(line, col, "unindent does not match any outer indentation level");
                        }
                    }
                    return true;
                }
            }
        }
    }

    fn run(&mut self) {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.line_start() {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\\' if self.peek2() == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '#' => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.out.push(Token {
                            tok: Tok::Newline,
                            pos: self.pos(line, col, 1),
                        });
                        at_line_start = true;
                    }
                }
                '0'..='9' => {
                    let mut text = String::new();
                    while let Some(d) = self.peek().filter(|d| d.is_ascii_digit() || *d == '_') {
                        if d != '_' {
                            text.push(d);
                        }
                        self.bump();
                    }
                    if matches!(self.peek(), Some('.')) && self.peek2().is_some_and(|d| d.is_ascii_digit()) {
                        while self.peek().is_some_and(|d| d.is_ascii_digit() || d == '.') {
                            self.bump();
                        }
                        self.error(line, col, "floating-point literals are not supported");
                        self.push(Tok::Int(0), line, col);
                        continue;
                    }
                    match text.parse::<i64>() {
                        Ok(n) => self.push(Tok::Int(n), line, col),
                        Err(_) => {
                            self.error(line, col, "integer literal out of range");
                            self.push(Tok::Int(0), line, col);
                        }
                    }
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut text = String::new();
                    while let Some(d) = self.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                        text.push(d);
                        self.bump();
                    }
                    let tok = keyword(&text).unwrap_or(Tok::Ident(text));
                    self.push(tok, line, col);
                }
                '"' | '\'' => {
                    let quote = c;
                    self.bump();
                    let mut text = String::new();
                    loop {
                        match self.peek() {
                            None | Some('\n') => {
                                self.error(line, col, "unterminated string literal");
                                break;
                            }
                            Some(d) if d == quote => {
                                self.bump();
                                break;
                            }
                            Some('\\') => {
                                self.bump();
                                if let Some(e) = self.bump() {
                                    text.push(match e {
                                        'n' => '\n',
                                        't' => '\t',
                                        other => other,
                                    });
                                }
                            }
                            Some(d) => {
                                text.push(d);
                                self.bump();
                            }
                        }
                    }
                    self.push(Tok::Str(text), line, col);
                }
                _ => {
                    self.bump();
                    let two = |l: &mut Self, next: char| {
                        if l.peek() == Some(next) {
                            l.bump();
                            true
                        } else {
                            false
                        }
                    };
                    let tok = match c {
                        '(' => {
                            self.depth += 1;
                            Tok::LParen
                        }
                        ')' => {
                            self.depth = self.depth.saturating_sub(1);
                            Tok::RParen
                        }
                        '[' => {
                            self.depth += 1;
                            Tok::LBracket
                        }
                        ']' => {
                            self.depth = self.depth.saturating_sub(1);
                            Tok::RBracket
                        }
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        '.' => Tok::Dot,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '%' => Tok::Percent,
                        '/' if two(self, '/') => Tok::SlashSlash,
                        '/' => {
                            self.error(line, col, "true division '/' is not supported; use '//'");
                            Tok::SlashSlash
                        }
                        '<' if two(self, '=') => Tok::Le,
                        '<' => Tok::Lt,
                        '>' if two(self, '=') => Tok::Ge,
                        '>' => Tok::Gt,
                        '=' if two(self, '=') => Tok::EqEq,
                        '=' => Tok::Assign,
                        '!' if two(self, '=') => Tok::NotEq,
                        other => {
                            self.error(line, col, format!("unexpected character '{other}'"));
                            continue;
                        }
                    };
                    self.push(tok, line, col);
                }
            }
        }
        let (line, col) = (self.line, self.col);
        if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
            self.out.push(Token {
                tok: Tok::Newline,
                pos: self.pos(line, col, 0),
            });
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.out.push(Token {
                tok: Tok::Dedent,
                pos: self.pos(line, col, 0),
            });
        }
        self.out.push(Token {
            tok: Tok::Eof,
            pos: self.pos(line, col, 0),
        });
    }
}

pub fn tokenize(text: &str, file: &Arc<str>) -> (Vec<Token>, Vec<SyntaxError>) {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
        file,
        out: Vec::new(),
        errors: Vec::new(),
        indents: vec![0],
        depth: 0,
    };
    lx.run();
    (lx.out, lx.errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let file: Arc<str> = Arc::from("t.tsl");
        let (t, e) = tokenize(src, &file);
        assert!(e.is_empty(), "{e:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn layout_tokens() {
        let t = toks("def f(x):\n    return x\ny = 1\n");
        assert_eq!(
            t,
            vec![
                Tok::Def,
                Tok::Ident("f".into()),
                Tok::LParen,
                Tok::Ident("x".into()),
                Tok::RParen,
                Tok::Colon,
                Tok::Newline,
                Tok::Indent,
                Tok::Return,
                Tok::Ident("x".into()),
                Tok::Newline,
                Tok::Dedent,
                Tok::Ident("y".into()),
                Tok::Assign,
                Tok::Int(1),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn brackets_join_lines_and_crlf_is_accepted() {
        let t = toks("x = f(1,\r\n      2)\r\n");
        assert!(!t[..t.len() - 2].contains(&Tok::Newline));
        assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn positions_are_one_based() {
        let file: Arc<str> = Arc::from("t.tsl");
        let (t, _) = tokenize("a = 10\n  # c\nbb", &file);
        assert_eq!((t[2].pos.line, t[2].pos.column, t[2].pos.span), (1, 5, 2));
        let bb = t.iter().find(|t| t.tok == Tok::Ident("bb".into())).unwrap();
        assert_eq!((bb.pos.line, bb.pos.column), (3, 1));
    }

    #[test]
    fn reports_bad_characters() {
        let file: Arc<str> = Arc::from("t.tsl");
        let (_, e) = tokenize("x = 1 $ 2\ny = 3.5\n", &file);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].pos.line, 1);
        assert_eq!(e[1].pos.line, 2);
    }
}
