//! Textual macro expansion: `#define`, `#do`/`#enddo`, `#include`, `'name'`
//! references and `{...}` integer arithmetic.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::token::{strip_comments, tokenize, Token, TokenKind};
use super::SourceFile;
use crate::error::{Error, Location, Result};

pub const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct MacroEnv {
    bindings: HashMap<String, String>,
    loop_vars: Vec<(String, i64)>,
}

impl MacroEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name`. Redefinition is rejected.
    pub fn define(&mut self, name: &str, value: &str) -> Result<(), String> {
        if self.bindings.contains_key(name) {
            return Err(format!("macro `{name}` is already defined"));
        }
        self.bindings.insert(name.to_string(), value.to_string());
        Ok(())
    }

    pub fn push_loop(&mut self, name: &str, value: i64) {
        self.loop_vars.push((name.to_string(), value));
    }

    pub fn pop_loop(&mut self) {
        self.loop_vars.pop();
    }

    /// Open loop variables shadow `#define` bindings.
    pub fn lookup(&self, name: &str) -> Option<String> {
        if let Some((_, v)) = self.loop_vars.iter().rev().find(|(n, _)| n == name) {
            return Some(v.to_string());
        }
        self.bindings.get(name).cloned()
    }
}

/// Replaces every `'name'` in `text` by its value.
fn substitute_refs(text: &str, env: &MacroEnv) -> Result<String, String> {
    let mut out = String::new();
    let mut rest = text;
    while let Some(open) = rest.find('\'') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('\'')
            .ok_or_else(|| "unterminated macro reference".to_string())?;
        let name = &after[..close];
        let value = env.lookup(name).ok_or_else(|| format!("unbound macro '{name}'"))?;
        out.push_str(&value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

struct Arith<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Arith<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<i64, String> {
        let mut v = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.term()?;
            v = if op == b'+' { v.checked_add(r) } else { v.checked_sub(r) }.ok_or("integer overflow")?;
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<i64, String> {
        let mut v = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let r = self.unary()?;
            v = if op == b'*' {
                v.checked_mul(r).ok_or("integer overflow")?
            } else {
                if r == 0 {
                    return Err("division by zero".into());
                }
                if v % r != 0 {
                    return Err(format!("{v}/{r} is not an integer"));
                }
                v / r
            };
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<i64, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.unary()?.checked_neg().ok_or_else(|| "integer overflow".into())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<i64, String> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                std::str::from_utf8(&self.s[start..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| "integer overflow".into())
            }
            Some(c) => Err(format!("unexpected `{}` in arithmetic", c as char)),
            None => Err("unexpected end of arithmetic".into()),
        }
    }
}

/// Evaluates integer arithmetic such as `{'i'-3}`. Outer braces are optional.
pub fn eval_brace_arith(expr: &str, env: &MacroEnv) -> Result<i64, String> {
    let inner = expr
        .trim()
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .unwrap_or(expr);
    let text = substitute_refs(inner, env)?;
    let mut p = Arith {
        s: text.as_bytes(),
        pos: 0,
    };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(format!("trailing input in `{text}`"));
    }
    Ok(v)
}

/// Output of preprocessing a whole program.
#[derive(Debug, Clone, Default)]
pub struct Expansion {
    pub tokens: Vec<Token>,
    pub files: Vec<SourceFile>,
    /// Source lines in the order they were read, as (file, 1-based line).
    pub echo: Vec<(u16, u32)>,
}

pub(crate) struct Preprocessor<'a> {
    env: &'a mut MacroEnv,
    include_dirs: &'a [PathBuf],
    comment_char: char,
    files: Vec<SourceFile>,
    frontier: Vec<u32>,
    echo: Vec<(u16, u32)>,
    out: Vec<Token>,
    include_stack: Vec<PathBuf>,
}

impl<'a> Preprocessor<'a> {
    pub(crate) fn new(env: &'a mut MacroEnv, include_dirs: &'a [PathBuf], comment_char: char) -> Self {
        Preprocessor {
            env,
            include_dirs,
            comment_char,
            files: Vec::new(),
            frontier: Vec::new(),
            echo: Vec::new(),
            out: Vec::new(),
            include_stack: Vec::new(),
        }
    }

    /// Registers a source file and returns its comment-stripped tokens.
    pub(crate) fn load(&mut self, name: &str, path: Option<PathBuf>, text: &str) -> Result<Vec<Token>> {
        let id = u16::try_from(self.files.len()).expect("fewer than 65536 source files");
        let lines: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
        let stripped: Vec<String> = lines.iter().map(|l| strip_comments(l, self.comment_char)).collect();
        self.files.push(SourceFile {
            name: name.to_string(),
            path,
            lines,
        });
        self.frontier.push(0);
        let mut tokens = tokenize(&stripped.join("\n")).map_err(|e| Error::Compile {
            at: Location::new(name, e.line),
            msg: e.msg,
        })?;
        for t in &mut tokens {
            t.file = id;
        }
        Ok(tokens)
    }

    pub(crate) fn finish(self) -> Expansion {
        Expansion {
            tokens: self.out,
            files: self.files,
            echo: self.echo,
        }
    }

    fn at(&self, t: &Token) -> Location {
        let name = self
            .files
            .get(t.file as usize)
            .map(|f| f.name.as_str())
            .unwrap_or("<input>");
        Location::new(name, t.line)
    }

    fn advance(&mut self, file: u16, line: u32) {
        let f = file as usize;
        if f >= self.frontier.len() {
            return;
        }
        let last = self.files[f].lines.len() as u32;
        while self.frontier[f] < line.min(last) {
            self.frontier[f] += 1;
            self.echo.push((file, self.frontier[f]));
        }
    }

    fn emit(&mut self, mut tok: Token) {
        tok.echo = self.echo.len();
        if let Some(last) = self.out.last_mut() {
            let pasting = tok.glued
                && (tok.spliced || last.spliced)
                && last.file == tok.file
                && matches!(
                    (last.kind, tok.kind),
                    (
                        TokenKind::Name | TokenKind::Keyword,
                        TokenKind::Name | TokenKind::Number
                    ) | (TokenKind::Number, TokenKind::Number)
                );
            if pasting {
                last.text.push_str(&tok.text);
                if last.kind == TokenKind::Keyword {
                    last.kind = TokenKind::Name;
                }
                last.spliced = true;
                last.echo = tok.echo;
                return;
            }
        }
        self.out.push(tok);
    }

    /// Expands `tokens`. `live` is false inside `#do` replication, where the
    /// body's lines have already been echoed.
    pub(crate) fn run(&mut self, tokens: &[Token], live: bool) -> Result<()> {
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            if live {
                self.advance(tok.file, tok.line);
            }
            match tok.kind {
                TokenKind::Preproc => {
                    let end = tokens[i..]
                        .iter()
                        .position(|t| t.line != tok.line || t.file != tok.file)
                        .map_or(tokens.len(), |p| i + p);
                    let args = &tokens[i + 1..end];
                    i = match tok.text.as_str() {
                        "#define" => {
                            self.define(tok, args)?;
                            end
                        }
                        "#do" => self.do_loop(tokens, i, end, live)?,
                        "#enddo" => return Err(Error::compile(&self.at(tok), "#enddo without #do")),
                        "#include" => {
                            self.include(tok, args, live)?;
                            end
                        }
                        other => {
                            return Err(Error::compile(
                                &self.at(tok),
                                format!("unsupported preprocessor command `{other}`"),
                            ))
                        }
                    };
                }
                TokenKind::MacroRef => {
                    let value = self
                        .env
                        .lookup(&tok.text)
                        .ok_or_else(|| Error::compile(&self.at(tok), format!("unbound macro '{}'", tok.text)))?;
                    let at = self.at(tok);
                    let pieces = tokenize(&value).map_err(|e| Error::compile(&at, e.msg))?;
                    for (k, mut p) in pieces.into_iter().enumerate() {
                        p.line = tok.line;
                        p.file = tok.file;
                        p.spliced = true;
                        if k == 0 {
                            p.glued = tok.glued;
                        }
                        if p.kind == TokenKind::Keyword {
                            p.kind = TokenKind::Name;
                        }
                        self.emit(p);
                    }
                    i += 1;
                }
                TokenKind::BraceGroup => {
                    let v = eval_brace_arith(&tok.text, self.env).map_err(|m| Error::compile(&self.at(tok), m))?;
                    let mk = |kind, text: String, glued| Token {
                        glued,
                        spliced: true,
                        file: tok.file,
                        ..Token::new(kind, text, tok.line)
                    };
                    if v < 0 {
                        self.emit(mk(TokenKind::Operator, "-".into(), tok.glued));
                        self.emit(mk(TokenKind::Number, v.unsigned_abs().to_string(), true));
                    } else {
                        self.emit(mk(TokenKind::Number, v.to_string(), tok.glued));
                    }
                    i += 1;
                }
                _ => {
                    self.emit(tok.clone());
                    i += 1;
                }
            }
        }
        Ok(())
    }

    fn define(&mut self, tok: &Token, args: &[Token]) -> Result<()> {
        let at = self.at(tok);
        let (name, value) = match args {
            [n, v] if n.kind == TokenKind::Name || n.kind == TokenKind::Keyword => {
                let value = match v.kind {
                    TokenKind::Str | TokenKind::Number | TokenKind::Name => v.text.clone(),
                    _ => return Err(Error::compile(&at, "#define value must be a string")),
                };
                (n.text.clone(), value)
            }
            _ => return Err(Error::compile(&at, "expected `#define NAME \"value\"`")),
        };
        self.env.define(&name, &value).map_err(|m| Error::compile(&at, m))
    }

    /// Evaluates a `#do` bound made of numbers, macro references, braces
    /// and arithmetic operators.
    fn bound(&self, tok: &Token, parts: &[Token]) -> Result<i64> {
        let at = self.at(tok);
        if parts.is_empty() {
            return Err(Error::compile(&at, "missing #do bound"));
        }
        let mut text = String::new();
        for p in parts {
            match p.kind {
                TokenKind::BraceGroup => text.push_str(&format!("({})", p.text)),
                TokenKind::Number | TokenKind::Operator | TokenKind::Punct => text.push_str(&p.text),
                TokenKind::MacroRef => text.push_str(&format!("'{}'", p.text)),
                _ => return Err(Error::compile(&at, format!("unexpected `{p}` in #do bound"))),
            }
        }
        eval_brace_arith(&text, self.env).map_err(|m| Error::compile(&at, m))
    }

    fn do_loop(&mut self, tokens: &[Token], start: usize, header_end: usize, live: bool) -> Result<usize> {
        let tok = &tokens[start];
        let at = self.at(tok);
        let header = &tokens[start + 1..header_end];
        let var = match header {
            [v, eq, ..] if matches!(v.kind, TokenKind::Name | TokenKind::Keyword) && eq.is_op("=") => v.text.clone(),
            _ => return Err(Error::compile(&at, "expected `#do var = low, high`")),
        };
        let comma = header
            .iter()
            .position(|t| t.is_punct(","))
            .ok_or_else(|| Error::compile(&at, "expected `,` in #do"))?;
        let lo = self.bound(tok, &header[2..comma])?;
        let hi = self.bound(tok, &header[comma + 1..])?;

        let mut depth = 0usize;
        let mut close = None;
        for (k, t) in tokens.iter().enumerate().skip(header_end) {
            if t.kind == TokenKind::Preproc {
                match t.text.as_str() {
                    "#do" => depth += 1,
                    "#enddo" if depth == 0 => {
                        close = Some(k);
                        break;
                    }
                    "#enddo" => depth -= 1,
                    _ => {}
                }
            }
        }
        let close = close.ok_or_else(|| Error::compile(&at, "unterminated #do"))?;
        let enddo = &tokens[close];
        let after = tokens[close..]
            .iter()
            .position(|t| t.line != enddo.line || t.file != enddo.file)
            .map_or(tokens.len(), |p| close + p);
        if after > close + 1 {
            return Err(Error::compile(&self.at(enddo), "unexpected text after #enddo"));
        }
        if live {
            self.advance(enddo.file, enddo.line);
        }
        let body = &tokens[header_end..close];
        let mut v = lo;
        while v <= hi {
            self.env.push_loop(&var, v);
            let r = self.run(body, false);
            self.env.pop_loop();
            r?;
            v += 1;
        }
        Ok(after)
    }

    fn resolve_include(&self, tok: &Token, name: &str) -> Option<PathBuf> {
        let p = Path::new(name);
        if p.is_absolute() {
            return p.is_file().then(|| p.to_path_buf());
        }
        let current = self
            .files
            .get(tok.file as usize)
            .and_then(|f| f.path.as_ref())
            .and_then(|p| p.parent())
            .map(Path::to_path_buf)
            .unwrap_or_default();
        std::iter::once(current)
            .chain(self.include_dirs.iter().cloned())
            .map(|d| d.join(name))
            .find(|c| c.is_file())
    }

    fn include(&mut self, tok: &Token, args: &[Token], live: bool) -> Result<()> {
        let at = self.at(tok);
        let name = match args {
            [a] if a.kind == TokenKind::Str && !a.text.is_empty() => a.text.clone(),
            _ => return Err(Error::compile(&at, "expected `#include file`")),
        };
        let path = self
            .resolve_include(tok, &name)
            .ok_or_else(|| Error::compile(&at, format!("include file `{name}` not found")))?;
        let canon = fs::canonicalize(&path).unwrap_or_else(|_| path.clone());
        if self.include_stack.contains(&canon) {
            return Err(Error::compile(&at, format!("include cycle through `{name}`")));
        }
        if self.include_stack.len() >= MAX_INCLUDE_DEPTH {
            return Err(Error::compile(&at, "include depth limit exceeded"));
        }
        let text = fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let tokens = self.load(&path.display().to_string(), Some(path.clone()), &text)?;
        let id = (self.files.len() - 1) as u16;
        self.include_stack.push(canon);
        let r = self.run(&tokens, live);
        self.include_stack.pop();
        r?;
        if live {
            self.advance(id, u32::MAX);
        }
        Ok(())
    }
}

/// Expands an already tokenized main program. Includes are resolved
/// relative to the process working directory, then `include_dirs`.
pub fn preprocess(tokens: &[Token], env: &mut MacroEnv, include_dirs: &[PathBuf]) -> Result<Vec<Token>> {
    let mut pp = Preprocessor::new(env, include_dirs, '*');
    pp.run(tokens, false)?;
    Ok(pp.finish().tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_with(vars: &[(&str, i64)]) -> MacroEnv {
        let mut e = MacroEnv::new();
        for (n, v) in vars {
            e.push_loop(n, *v);
        }
        e
    }

    fn texts(src: &str, env: &mut MacroEnv) -> Vec<String> {
        let toks = tokenize(src).unwrap();
        preprocess(&toks, env, &[])
            .unwrap()
            .into_iter()
            .map(|t| t.text)
            .collect()
    }

    #[test]
    fn brace_arithmetic() {
        let env = env_with(&[("i", 4)]);
        assert_eq!(eval_brace_arith("{'i'-3}", &env), Ok(1));
        assert_eq!(eval_brace_arith("{7}", &env), Ok(7));
        assert_eq!(eval_brace_arith("{'i'*2+1}", &env), Ok(9));
        assert_eq!(eval_brace_arith("{('i'+2)/3}", &env), Ok(2));
        assert!(eval_brace_arith("{'i'/3}", &env)
            .unwrap_err()
            .contains("not an integer"));
        assert!(eval_brace_arith("{'j'}", &env).unwrap_err().contains("unbound"));
    }

    #[test]
    fn define_then_reference() {
        let mut env = MacroEnv::new();
        assert_eq!(
            texts("#define N \"100\"\nLocal a = 'N';", &mut env),
            ["Local", "a", "=", "100", ";"]
        );
    }

    #[test]
    fn redefinition_rejected() {
        let mut env = MacroEnv::new();
        let toks = tokenize("#define N \"1\"\n#define N \"2\"").unwrap();
        assert!(preprocess(&toks, &mut env, &[]).is_err());
    }

    #[test]
    fn loop_pastes_names() {
        let mut env = MacroEnv::new();
        let out = texts(
            "#do i = 4, 6\nLocal T'i' = T{'i'-1}+T{'i'-2}+T{'i'-3};\n#enddo",
            &mut env,
        );
        let locals: Vec<_> = out.iter().filter(|t| t.starts_with('T')).cloned().collect();
        assert_eq!(
            locals,
            ["T4", "T3", "T2", "T1", "T5", "T4", "T3", "T2", "T6", "T5", "T4", "T3"]
        );
    }

    #[test]
    fn bare_reference_concatenates_then_subtracts() {
        let mut env = env_with(&[("i", 4)]);
        assert_eq!(texts("drop T'i'-3;", &mut env), ["drop", "T4", "-", "3", ";"]);
    }

    #[test]
    fn empty_range() {
        let mut env = MacroEnv::new();
        assert!(texts("#do i = 5, 4\nprint;\n#enddo", &mut env).is_empty());
    }

    #[test]
    fn nested_loops() {
        let mut env = MacroEnv::new();
        let out = texts("#do i = 1, 2\n#do j = 'i', 2\nx'i''j'\n#enddo\n#enddo", &mut env);
        assert_eq!(out, ["x11", "x12", "x22"]);
    }

    #[test]
    fn loop_variable_shadows_define() {
        let mut env = MacroEnv::new();
        let out = texts("#define i \"9\"\n#do i = 1, 1\n'i'\n#enddo\n'i'", &mut env);
        assert_eq!(out, ["1", "9"]);
    }

    #[test]
    fn errors() {
        for src in ["'N'", "#do i = 1, 2\nprint;", "#enddo", "#if 1", "#include nowhere.h"] {
            let toks = tokenize(src).unwrap();
            assert!(preprocess(&toks, &mut MacroEnv::new(), &[]).is_err(), "{src}");
        }
    }

    #[test]
    fn case_sensitive_macro_names() {
        let toks = tokenize("#define n \"100\"\n'N'").unwrap();
        let e = preprocess(&toks, &mut MacroEnv::new(), &[]).unwrap_err();
        assert!(e.to_string().contains("unbound macro 'N'"));
    }
}
