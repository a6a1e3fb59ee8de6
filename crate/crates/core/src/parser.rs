//! Concrete syntax: lexer, recursive-descent parser and pretty-printer.
//!
//! ```text
//! term    ::= base [";" term]
//! base    ::= "\" ident [":" type] "." term
//!           | "try" term "with" ident {"," ident} "->" term
//!           | app
//! app     ::= atom {atom}
//! atom    ::= ident | numeral | "S" | "rec" | "nil" | "cons" | "fold" | "#"
//!           | "raise" ident | "(" term [":" type] ")" | "[" [base {";" base}] "]"
//! type    ::= "forall" ident "." type | post ["->" type]
//! post    ::= basetype {("+" | "^") "{" [ident {"," ident}] "}"}
//! basetype::= ident | "nat" | "list" basetype | "(" type ")"
//! ```
//!
//! Inside a list literal `;` separates elements, so sequencing there needs
//! parentheses.

use std::fmt;

use thiserror::Error;

use crate::syntax::{ExcName, ExcSet, Term, Type, TypingContext};

/// Largest numeric literal accepted; numerals expand to unary terms.
pub const MAX_NUMERAL: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub start: Pos,
    pub end: Pos,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start.line, self.start.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Lambda,
    Dot,
    Colon,
    Semi,
    Comma,
    Arrow,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Plus,
    Caret,
    Hash,
    Turnstile,
    SubLe,
    At,
    Equals,
    Forall,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Lambda => f.write_str("`\\`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Hash => f.write_str("`#`"),
            Tok::Turnstile => f.write_str("`|-`"),
            Tok::SubLe => f.write_str("`<=`"),
            Tok::At => f.write_str("`@`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Forall => f.write_str("`forall`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "try", "with", "raise", "rec", "nil", "cons", "fold", "forall", "nat", "list", "let", "eval",
    "check", "S",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: Pos,
    end: Pos,
}

fn lex(src: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let err = |pos: Pos, msg: String| ParseError {
        span: SourceSpan {
            file: file.to_string(),
            start: pos,
            end: pos,
        },
        message: msg,
        expected: Vec::new(),
    };
    while i < chars.len() {
        let c = chars[i];
        let start = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "->" => (Tok::Arrow, 2),
            "|-" => (Tok::Turnstile, 2),
            "<=" => (Tok::SubLe, 2),
            _ => match c {
                '\\' | 'λ' => (Tok::Lambda, 1),
                '.' => (Tok::Dot, 1),
                ':' => (Tok::Colon, 1),
                ';' => (Tok::Semi, 1),
                ',' => (Tok::Comma, 1),
                '→' => (Tok::Arrow, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBrack, 1),
                ']' => (Tok::RBrack, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '+' => (Tok::Plus, 1),
                '^' => (Tok::Caret, 1),
                '#' | '⋆' => (Tok::Hash, 1),
                '@' => (Tok::At, 1),
                '=' => (Tok::Equals, 1),
                '∀' => (Tok::Forall, 1),
                '⊢' => (Tok::Turnstile, 1),
                '⊑' => (Tok::SubLe, 1),
                d if d.is_ascii_digit() => {
                    let mut j = i;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let text: String = chars[i..j].iter().collect();
                    let n = text
                        .parse::<u64>()
                        .ok()
                        .filter(|n| *n <= MAX_NUMERAL)
                        .ok_or_else(|| err(start, format!("numeral `{text}` is too large")))?;
                    (Tok::Num(n), j - i)
                }
                a if a.is_ascii_alphabetic() || a == '_' => {
                    let mut j = i;
                    while j < chars.len()
                        && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'')
                    {
                        j += 1;
                    }
                    let text: String = chars[i..j].iter().collect();
                    let tok = if text == "forall" {
                        Tok::Forall
                    } else {
                        Tok::Ident(text)
                    };
                    (tok, j - i)
                }
                other => return Err(err(start, format!("unexpected character `{other}`"))),
            },
        };
        advance(len, &mut i, &mut col);
        out.push(Token {
            tok,
            start,
            end: Pos { line, col },
        });
    }
    let end = Pos { line, col };
    out.push(Token {
        tok: Tok::Eof,
        start: end,
        end,
    });
    Ok(out)
}

/// One top-level item of a `.fx` file.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Let {
        name: String,
        ty: Option<Type>,
        term: Term,
        span: SourceSpan,
    },
    Eval {
        term: Term,
        span: SourceSpan,
    },
    Check {
        term: Term,
        ty: Type,
        span: SourceSpan,
    },
}

impl Item {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Item::Let { span, .. } | Item::Eval { span, .. } | Item::Check { span, .. } => span,
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
}

impl Parser {
    fn new(src: &str, file: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src, file)?,
            pos: 0,
            file: file.to_string(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].start
    }

    fn last_end(&self) -> Pos {
        if self.pos == 0 {
            self.toks[0].start
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            span: SourceSpan {
                file: self.file.clone(),
                start: t.start,
                end: t.end,
            },
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let msg = format!(
            "unexpected {}, expected {}",
            self.peek(),
            expected.join(" or ")
        );
        self.error(msg, expected)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let name = tok.to_string();
            Err(self.unexpected(&[name.as_str()]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            let name = format!("`{kw}`");
            Err(self.unexpected(&[name.as_str()]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn exc_name(&mut self) -> Result<ExcName, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => match ExcName::new(s.clone()) {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => Err(self.error(
                    format!("`{s}` is not a valid exception name"),
                    &["exception name"],
                )),
            },
            _ => Err(self.unexpected(&["exception name"])),
        }
    }

    // ---- terms ----

    fn term(&mut self, in_list: bool) -> Result<Term, ParseError> {
        let left = self.base(in_list)?;
        if !in_list && *self.peek() == Tok::Semi {
            self.bump();
            let right = self.term(in_list)?;
            return Ok(Term::seq(left, right));
        }
        Ok(left)
    }

    fn base(&mut self, in_list: bool) -> Result<Term, ParseError> {
        if *self.peek() == Tok::Lambda {
            self.bump();
            let x = self.ident()?;
            let ann = if *self.peek() == Tok::Colon {
                self.bump();
                Some(self.ty()?)
            } else {
                None
            };
            self.expect(Tok::Dot)?;
            let body = self.term(in_list)?;
            return Ok(Term::Lam(x, ann, Box::new(body)));
        }
        if self.is_kw("try") {
            self.bump();
            let body = self.term(in_list)?;
            self.expect_kw("with")?;
            let mut names = vec![self.exc_name()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                names.push(self.exc_name()?);
            }
            self.expect(Tok::Arrow)?;
            let handler = self.term(in_list)?;
            return Ok(names.into_iter().fold(body, |acc, e| {
                Term::Try(Box::new(acc), e, Box::new(handler.clone()))
            }));
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                !is_keyword(s)
                    || matches!(s.as_str(), "S" | "rec" | "nil" | "cons" | "fold" | "raise")
            }
            Tok::Num(_) | Tok::Hash | Tok::LParen | Tok::LBrack => true,
            _ => false,
        }
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        if !self.starts_atom() {
            return Err(self.unexpected(&["term"]));
        }
        let mut t = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::numeral(n))
            }
            Tok::Hash => {
                self.bump();
                Ok(Term::Daimon)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "S" => Term::Succ,
                    "rec" => Term::Rec,
                    "nil" => Term::Nil,
                    "cons" => Term::Cons,
                    "fold" => Term::Fold,
                    "raise" => Term::Raise(self.exc_name()?),
                    _ => Term::Var(s),
                })
            }
            Tok::LParen => {
                self.bump();
                let t = self.term(false)?;
                let t = if *self.peek() == Tok::Colon {
                    self.bump();
                    Term::annot(t, self.ty()?)
                } else {
                    t
                };
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::LBrack => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBrack {
                    items.push(self.term(true)?);
                    while *self.peek() == Tok::Semi {
                        self.bump();
                        items.push(self.term(true)?);
                    }
                }
                self.expect(Tok::RBrack)?;
                Ok(Term::list(items))
            }
            _ => Err(self.unexpected(&["term"])),
        }
    }

    // ---- types ----

    fn ty(&mut self) -> Result<Type, ParseError> {
        if *self.peek() == Tok::Forall {
            self.bump();
            let a = self.ident()?;
            self.expect(Tok::Dot)?;
            let body = self.ty()?;
            return Ok(Type::forall(&a, body));
        }
        let left = self.post_type()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.ty()?;
            return Ok(Type::arrow(left, right));
        }
        Ok(left)
    }

    fn post_type(&mut self) -> Result<Type, ParseError> {
        let mut t = self.base_type()?;
        loop {
            let union = match self.peek() {
                Tok::Plus => true,
                Tok::Caret => false,
                _ => return Ok(t),
            };
            self.bump();
            let delta = self.exc_set()?;
            t = if union {
                Type::union(t, delta)
            } else {
                Type::corrupt(t, delta)
            };
        }
    }

    fn exc_set(&mut self) -> Result<ExcSet, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut set = ExcSet::empty();
        if *self.peek() != Tok::RBrace {
            set.insert(self.exc_name()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                set.insert(self.exc_name()?);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(set)
    }

    fn base_type(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "nat" => {
                self.bump();
                Ok(Type::Nat)
            }
            Tok::Ident(s) if s == "list" => {
                self.bump();
                Ok(Type::list(self.base_type()?))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Type::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected(&["type"])),
        }
    }

    // ---- files ----

    fn items(&mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            let start = self.here();
            let item = if self.is_kw("let") {
                self.bump();
                let name = self.ident()?;
                let ty = if *self.peek() == Tok::Colon {
                    self.bump();
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect(Tok::Equals)?;
                let term = self.term(false)?;
                Item::Let {
                    name,
                    ty,
                    term,
                    span: self.span_from(start),
                }
            } else if self.is_kw("eval") {
                self.bump();
                let term = self.term(false)?;
                Item::Eval {
                    term,
                    span: self.span_from(start),
                }
            } else if self.is_kw("check") {
                self.bump();
                let term = self.term(false)?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                Item::Check {
                    term,
                    ty,
                    span: self.span_from(start),
                }
            } else {
                return Err(self.unexpected(&["`let`", "`eval`", "`check`"]));
            };
            items.push(item);
        }
        Ok(items)
    }

    fn span_from(&self, start: Pos) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start,
            end: self.last_end(),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn context(&mut self) -> Result<TypingContext, ParseError> {
        let mut ctx = TypingContext::new();
        if *self.peek() == Tok::Dot {
            self.bump();
            return Ok(ctx);
        }
        loop {
            let start = self.here();
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            ctx = ctx.extend(&x, t).map_err(|e| ParseError {
                span: self.span_from(start),
                message: e.to_string(),
                expected: Vec::new(),
            })?;
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(ctx);
            }
        }
    }

    fn witnesses(&mut self) -> Result<Vec<Type>, ParseError> {
        let mut out = Vec::new();
        while *self.peek() == Tok::At {
            self.bump();
            out.push(self.ty()?);
        }
        Ok(out)
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, "<input>")?;
    let t = p.term(false)?;
    p.finish()?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src, "<input>")?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_exc_set(src: &str) -> Result<ExcSet, ParseError> {
    let mut p = Parser::new(src, "<input>")?;
    let s = p.exc_set()?;
    p.finish()?;
    Ok(s)
}

/// Parses a `.fx` file into its items.
pub fn parse_file(src: &str, file: &str) -> Result<Vec<Item>, ParseError> {
    Parser::new(src, file)?.items()
}

/// Body of a subtyping derivation line after the rule: `A <= B [@ W]`.
pub(crate) fn parse_sub_judgment(
    src: &str,
    file: &str,
) -> Result<(Type, Type, Vec<Type>), ParseError> {
    let mut p = Parser::new(src, file)?;
    let a = p.ty()?;
    p.expect(Tok::SubLe)?;
    let b = p.ty()?;
    let w = p.witnesses()?;
    p.finish()?;
    Ok((a, b, w))
}

/// Body of a typing derivation line after the rule:
/// `ctx |- term : type {@ W}`, with `.` for the empty context.
pub(crate) fn parse_typing_judgment(
    src: &str,
    file: &str,
) -> Result<(TypingContext, Term, Type, Vec<Type>), ParseError> {
    let mut p = Parser::new(src, file)?;
    let ctx = p.context()?;
    p.expect(Tok::Turnstile)?;
    let m = p.term(false)?;
    p.expect(Tok::Colon)?;
    let a = p.ty()?;
    let w = p.witnesses()?;
    p.finish()?;
    Ok((ctx, m, a, w))
}

/// True when the text looks like a subtyping judgment (contains `<=`).
pub(crate) fn looks_like_sub_judgment(src: &str) -> bool {
    match lex(src, "") {
        Ok(toks) => {
            toks.iter().any(|t| t.tok == Tok::SubLe)
                && !toks.iter().any(|t| t.tok == Tok::Turnstile)
        }
        Err(_) => false,
    }
}

// ---- printing ----

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Seq,
    Base,
    App,
    Atom,
}

pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, Prec::Seq, false);
    s
}

fn term_prec(t: &Term) -> Prec {
    if t.as_numeral().is_some() {
        return Prec::Atom;
    }
    if matches!(t.as_list(), Some(items) if !items.is_empty()) {
        return Prec::Atom;
    }
    match t {
        Term::Seq(..) => Prec::Seq,
        // `raise e` gets parentheses whenever it sits inside an application
        Term::Lam(..) | Term::Try(..) | Term::Raise(_) => Prec::Base,
        Term::App(..) => Prec::App,
        _ => Prec::Atom,
    }
}

fn write_term(out: &mut String, t: &Term, need: Prec, in_list: bool) {
    let own = term_prec(t);
    let parens = own < need || (in_list && own == Prec::Seq);
    if parens {
        out.push('(');
        write_term_inner(out, t, false);
        out.push(')');
    } else {
        write_term_inner(out, t, in_list);
    }
}

fn write_term_inner(out: &mut String, t: &Term, in_list: bool) {
    if let Some(n) = t.as_numeral() {
        out.push_str(&n.to_string());
        return;
    }
    if let Some(items) = t.as_list() {
        if !items.is_empty() {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_term(out, item, Prec::Base, true);
            }
            out.push(']');
            return;
        }
    }
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Lam(x, ann, body) => {
            out.push('\\');
            out.push_str(x);
            if let Some(a) = ann {
                out.push_str(" : ");
                write_type(out, a, TPrec::Arrow);
            }
            out.push_str(". ");
            write_term(out, body, Prec::Seq, in_list);
        }
        Term::App(f, a) => {
            write_term(out, f, Prec::App, in_list);
            out.push(' ');
            write_term(out, a, Prec::Atom, in_list);
        }
        Term::Raise(e) => {
            out.push_str("raise ");
            out.push_str(e.as_str());
        }
        Term::Try(body, e, handler) => {
            out.push_str("try ");
            write_term(out, body, Prec::Seq, in_list);
            out.push_str(" with ");
            out.push_str(e.as_str());
            out.push_str(" -> ");
            write_term(out, handler, Prec::Seq, in_list);
        }
        Term::Zero => out.push('0'),
        Term::Succ => out.push('S'),
        Term::Rec => out.push_str("rec"),
        Term::Nil => out.push_str("nil"),
        Term::Cons => out.push_str("cons"),
        Term::Fold => out.push_str("fold"),
        Term::Daimon => out.push('#'),
        Term::Seq(a, b) => {
            write_term(out, a, Prec::App, in_list);
            out.push_str(" ; ");
            write_term(out, b, Prec::Seq, in_list);
        }
        Term::Annot(m, a) => {
            out.push('(');
            write_term(out, m, Prec::Seq, false);
            out.push_str(" : ");
            write_type(out, a, TPrec::Forall);
            out.push(')');
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TPrec {
    Forall,
    Arrow,
    Post,
    Base,
}

pub fn print_type(t: &Type) -> String {
    let mut s = String::new();
    write_type(&mut s, t, TPrec::Forall);
    s
}

fn write_type(out: &mut String, t: &Type, need: TPrec) {
    let own = match t {
        Type::Forall(..) => TPrec::Forall,
        Type::Arrow(..) => TPrec::Arrow,
        Type::Union(..) | Type::Corrupt(..) => TPrec::Post,
        Type::Var(_) | Type::Nat | Type::List(_) => TPrec::Base,
    };
    if own < need {
        out.push('(');
        write_type(out, t, TPrec::Forall);
        out.push(')');
        return;
    }
    match t {
        Type::Var(a) => out.push_str(a),
        Type::Nat => out.push_str("nat"),
        Type::List(a) => {
            out.push_str("list ");
            write_type(out, a, TPrec::Base);
        }
        Type::Arrow(a, b) => {
            write_type(out, a, TPrec::Post);
            out.push_str(" -> ");
            write_type(out, b, TPrec::Arrow);
        }
        Type::Forall(a, body) => {
            out.push_str("forall ");
            out.push_str(a);
            out.push_str(". ");
            write_type(out, body, TPrec::Forall);
        }
        Type::Union(a, d) => {
            write_type(out, a, TPrec::Post);
            out.push_str(&format!(" + {d}"));
        }
        Type::Corrupt(a, d) => {
            write_type(out, a, TPrec::Post);
            out.push_str(&format!(" ^ {d}"));
        }
    }
}

pub fn print_context(ctx: &TypingContext) -> String {
    if ctx.is_empty() {
        return ".".to_string();
    }
    ctx.bindings()
        .iter()
        .map(|(x, t)| format!("{x} : {}", print_type(t)))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}
