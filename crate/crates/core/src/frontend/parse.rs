//! Statement and module structure.

use num_bigint::BigInt;

use super::token::{Token, TokenKind};
use crate::error::{Error, Location, Result};

/// Unresolved expression syntax. Names are resolved against declarations
/// when the statement executes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(BigInt),
    Name(String),
    /// A bracket symbol, stored with its brackets.
    Bracket(String),
    Wildcard(String),
    Call(String, Vec<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Symbols(Vec<String>),
    Functions(Vec<String>),
    Local {
        name: String,
        global: bool,
        rhs: Expr,
    },
    Drop(Vec<String>),
    Skip(Vec<String>),
    Print(Vec<String>),
    /// `write statistics` (true) or `nwrite statistics` (false).
    Statistics(bool),
    Identify {
        lhs: Expr,
        rhs: Expr,
    },
    RepeatBegin,
    RepeatEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub kind: StatementKind,
    pub at: Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    Sort,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleUnit {
    pub statements: Vec<Statement>,
    pub terminator: Terminator,
    /// First and last source line of the unit (the directive's line).
    pub span: (u32, u32),
    /// Echo lines that must be written before this unit executes.
    pub echo_end: usize,
    pub at: Location,
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    names: &'t [String],
}

fn location(names: &[String], t: &Token) -> Location {
    let file = names.get(t.file as usize).map_or("<input>", |s| s.as_str());
    Location::new(file, t.line)
}

impl<'t> Parser<'t> {
    fn at(&self) -> Location {
        let t = self
            .toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .expect("statement has tokens");
        location(self.names, t)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::compile(&self.at(), msg))
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected `{t}`")),
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.next() {
            Some(t) if matches!(t.kind, TokenKind::Name | TokenKind::Keyword) => Ok(t.text.clone()),
            Some(t) => {
                self.pos -= 1;
                self.err(format!("expected a name, found `{t}`"))
            }
            None => self.err("expected a name"),
        }
    }

    fn name_list(&mut self, allow_brackets: bool) -> Result<Vec<String>> {
        let mut out = Vec::new();
        while !self.done() {
            let t = self.peek().unwrap();
            if allow_brackets && t.kind == TokenKind::BracketName {
                out.push(format!("[{}]", t.text));
                self.pos += 1;
            } else {
                out.push(self.name()?);
            }
            match self.next() {
                None => break,
                Some(t) if t.is_punct(",") => continue,
                Some(t) => {
                    self.pos -= 1;
                    return self.err(format!("expected `,`, found `{t}`"));
                }
            }
        }
        Ok(out)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(t) = self.peek() {
            if t.is_op("+") {
                self.pos += 1;
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if t.is_op("-") {
                self.pos += 1;
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            if t.is_op("*") {
                self.pos += 1;
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if t.is_op("/") {
                self.pos += 1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(t) if t.is_op("-") => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(t) if t.is_op("+") => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        match self.peek() {
            Some(t) if t.is_op("^") => {
                self.pos += 1;
                let exp = match self.peek() {
                    Some(t) if t.is_op("-") => {
                        self.pos += 1;
                        Expr::Neg(Box::new(self.atom()?))
                    }
                    _ => self.atom()?,
                };
                Ok(Expr::Pow(Box::new(base), Box::new(exp)))
            }
            _ => Ok(base),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(t) = self.next() else {
            return self.err("unexpected end of expression");
        };
        match t.kind {
            TokenKind::Number => Ok(Expr::Num(t.text.parse().expect("digits"))),
            TokenKind::BracketName => Ok(Expr::Bracket(format!("[{}]", t.text))),
            TokenKind::Name | TokenKind::Keyword => {
                let name = t.text.clone();
                match self.peek() {
                    Some(n) if n.is_op("?") => {
                        self.pos += 1;
                        Ok(Expr::Wildcard(name))
                    }
                    Some(n) if n.is_punct("(") => {
                        self.pos += 1;
                        let mut args = Vec::new();
                        if matches!(self.peek(), Some(c) if c.is_punct(")")) {
                            self.pos += 1;
                            return Ok(Expr::Call(name, args));
                        }
                        loop {
                            args.push(self.expr()?);
                            match self.next() {
                                Some(c) if c.is_punct(",") => continue,
                                Some(c) if c.is_punct(")") => break,
                                _ => {
                                    self.pos -= 1;
                                    return self.err("expected `,` or `)` in argument list");
                                }
                            }
                        }
                        Ok(Expr::Call(name, args))
                    }
                    _ => Ok(Expr::Name(name)),
                }
            }
            TokenKind::Punct if t.text == "(" => {
                let e = self.expr()?;
                match self.next() {
                    Some(c) if c.is_punct(")") => Ok(e),
                    _ => {
                        self.pos -= 1;
                        self.err("missing `)`")
                    }
                }
            }
            _ => {
                self.pos -= 1;
                self.err(format!("unexpected `{t}`"))
            }
        }
    }

    fn split_assignment(&mut self) -> Result<(Expr, Expr)> {
        let lhs = self.expr()?;
        match self.next() {
            Some(t) if t.is_op("=") => {}
            _ => {
                self.pos -= 1;
                return self.err("expected `=`");
            }
        }
        let rhs = self.expr()?;
        self.expect_end()?;
        Ok((lhs, rhs))
    }

    fn statement(&mut self) -> Result<StatementKind> {
        let head = self.next().expect("non-empty statement");
        if !matches!(head.kind, TokenKind::Keyword | TokenKind::Name) {
            self.pos -= 1;
            return self.err(format!("a statement cannot start with `{head}`"));
        }
        let kw = head.text.to_ascii_lowercase();
        let kind = match kw.as_str() {
            "symbol" | "symbols" | "s" => StatementKind::Symbols(self.name_list(true)?),
            "function" | "functions" | "f" | "cfunction" | "cfunctions" => {
                StatementKind::Functions(self.name_list(false)?)
            }
            "local" | "l" | "global" | "g" => {
                let name = self.name()?;
                match self.next() {
                    Some(t) if t.is_op("=") => {}
                    _ => {
                        self.pos -= 1;
                        return self.err("expected `=` after expression name");
                    }
                }
                let rhs = self.expr()?;
                self.expect_end()?;
                StatementKind::Local {
                    name,
                    global: kw.starts_with('g'),
                    rhs,
                }
            }
            "drop" => StatementKind::Drop(self.name_list(false)?),
            "skip" => StatementKind::Skip(self.name_list(false)?),
            "print" => StatementKind::Print(self.name_list(false)?),
            "nwrite" | "write" => {
                match self.next() {
                    Some(t) if t.text.eq_ignore_ascii_case("statistics") => {}
                    _ => {
                        self.pos -= 1;
                        return self.err(format!("expected `{kw} statistics`"));
                    }
                }
                self.expect_end()?;
                StatementKind::Statistics(kw == "write")
            }
            "identify" | "id" => {
                let (lhs, rhs) = self.split_assignment()?;
                StatementKind::Identify { lhs, rhs }
            }
            "repeat" => {
                self.expect_end()?;
                StatementKind::RepeatBegin
            }
            "endrepeat" => {
                self.expect_end()?;
                StatementKind::RepeatEnd
            }
            _ => {
                self.pos -= 1;
                return self.err(format!("unknown statement `{}`", head.text));
            }
        };
        Ok(kind)
    }
}

/// Parses one statement's tokens (without the terminating `;`).
pub fn parse_statement(tokens: &[Token], names: &[String]) -> Result<Statement> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        names,
    };
    let at = p.at();
    let kind = p.statement()?;
    Ok(Statement { kind, at })
}

/// Parses a single expression, e.g. for tests and tools.
pub fn parse_expr(tokens: &[Token]) -> Result<Expr> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        names: &[],
    };
    if tokens.is_empty() {
        return Err(Error::compile(&Location::new("<input>", 0), "empty expression"));
    }
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// Splits an expanded token stream into statements at `;` and into module
/// units at directives. `names` maps token file indices to display names.
pub fn parse_modules(tokens: &[Token], names: &[String]) -> Result<Vec<ModuleUnit>> {
    let mut modules = Vec::new();
    let mut statements: Vec<Statement> = Vec::new();
    let mut pending: Vec<Token> = Vec::new();
    let mut repeat_open: Vec<Location> = Vec::new();
    let mut first_line: Option<u32> = None;
    let mut ended = false;

    for tok in tokens {
        if ended {
            return Err(Error::compile(&location(names, tok), "text after .end"));
        }
        first_line.get_or_insert(tok.line);
        match tok.kind {
            TokenKind::Punct if tok.text == ";" => {
                if pending.is_empty() {
                    continue;
                }
                let st = parse_statement(&pending, names)?;
                pending.clear();
                match st.kind {
                    StatementKind::RepeatBegin => repeat_open.push(st.at.clone()),
                    StatementKind::RepeatEnd if repeat_open.pop().is_none() => {
                        return Err(Error::compile(&st.at, "endrepeat without repeat"));
                    }
                    _ => {}
                }
                statements.push(st);
            }
            TokenKind::Directive => {
                let at = location(names, tok);
                if let Some(p) = pending.first() {
                    return Err(Error::compile(
                        &location(names, p),
                        format!("missing `;` before {}", tok.text),
                    ));
                }
                if let Some(open) = repeat_open.first() {
                    return Err(Error::compile(open, "unbalanced repeat: no matching endrepeat"));
                }
                let terminator = match tok.text.as_str() {
                    ".sort" => Terminator::Sort,
                    ".end" => Terminator::End,
                    other => return Err(Error::compile(&at, format!("unsupported directive `{other}`"))),
                };
                ended = terminator == Terminator::End;
                modules.push(ModuleUnit {
                    statements: std::mem::take(&mut statements),
                    terminator,
                    span: (first_line.take().unwrap_or(tok.line), tok.line),
                    echo_end: tok.echo,
                    at,
                });
            }
            TokenKind::Preproc | TokenKind::MacroRef | TokenKind::BraceGroup | TokenKind::Str => {
                return Err(Error::compile(
                    &location(names, tok),
                    format!("unexpected `{tok}` after preprocessing"),
                ))
            }
            _ => pending.push(tok.clone()),
        }
    }
    if !ended {
        let at = tokens
            .last()
            .map(|t| location(names, t))
            .unwrap_or_else(|| Location::new(names.first().map_or("<input>", |s| s.as_str()), 1));
        if !pending.is_empty() {
            return Err(Error::compile(&at, "missing `;` and missing .end"));
        }
        return Err(Error::compile(&at, "program does not end with .end"));
    }
    Ok(modules)
}
