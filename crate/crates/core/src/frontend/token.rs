use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Name,
    /// Text between `[` and `]`, uninterpreted.
    BracketName,
    Number,
    Operator,
    Punct,
    /// `.sort`, `.end`; text is lowercased.
    Directive,
    /// `#define`, `#do`, ...; text is lowercased.
    Preproc,
    /// `'name'`; text is the name.
    MacroRef,
    /// `{...}`; text is the inside of the braces.
    BraceGroup,
    Str,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    /// Index of the source file the token came from.
    pub file: u16,
    /// No whitespace separates this token from the previous one.
    pub glued: bool,
    /// Produced by macro substitution.
    pub spliced: bool,
    /// Number of echo lines read when this token was produced.
    pub echo: usize,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, line: u32) -> Token {
        Token {
            kind,
            text: text.into(),
            line,
            file: 0,
            glued: false,
            spliced: false,
            echo: 0,
        }
    }

    /// Keywords match case-insensitively, names only exactly.
    pub fn is_word(&self, word: &str) -> bool {
        match self.kind {
            TokenKind::Keyword => self.text.eq_ignore_ascii_case(word),
            TokenKind::Name => self.text == word,
            _ => false,
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Operator && self.text == op
    }
}

/// Structural equality ignoring position and glue metadata; keywords compare
/// case-insensitively.
impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && match self.kind {
                TokenKind::Keyword => self.text.eq_ignore_ascii_case(&other.text),
                _ => self.text == other.text,
            }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::BracketName => write!(f, "[{}]", self.text),
            TokenKind::MacroRef => write!(f, "'{}'", self.text),
            TokenKind::BraceGroup => write!(f, "{{{}}}", self.text),
            TokenKind::Str => write!(f, "\"{}\"", self.text),
            _ => f.write_str(&self.text),
        }
    }
}

pub const STATEMENT_KEYWORDS: &[&str] = &[
    "symbol",
    "symbols",
    "s",
    "function",
    "functions",
    "f",
    "cfunction",
    "cfunctions",
    "local",
    "l",
    "global",
    "g",
    "drop",
    "skip",
    "print",
    "nwrite",
    "write",
    "identify",
    "id",
    "repeat",
    "endrepeat",
];

pub fn is_statement_keyword(word: &str) -> bool {
    STATEMENT_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub msg: String,
}

/// Blanks a full-line comment: a line whose first non-blank character is
/// the comment character. A `*` anywhere else is multiplication.
pub fn strip_comments(line: &str, comment_char: char) -> String {
    if line.trim_start().starts_with(comment_char) {
        String::new()
    } else {
        line.to_string()
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

/// Splits program text into tokens. Comments must already be stripped.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut glued = false;
    let mut stmt_start = true;
    let mut preproc_line: Option<u32> = None;

    // scans to `close` on the current line or, when `multiline`, anywhere
    let find_close = |from: usize, open: char, close: char, nest: bool, multiline: bool| -> Option<usize> {
        let mut depth = 0usize;
        for (j, &c) in chars.iter().enumerate().skip(from) {
            if c == '\n' && !multiline {
                return None;
            }
            if nest && c == open {
                depth += 1;
            } else if c == close {
                if depth == 0 {
                    return Some(j);
                }
                depth -= 1;
            }
        }
        None
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            glued = false;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            glued = false;
            i += 1;
            continue;
        }
        if matches!(preproc_line, Some(p) if line > p) {
            preproc_line = None;
            stmt_start = true;
        }
        let err = |msg: String| LexError { line, msg };
        let start_line = line;
        let (kind, text, next) = match c {
            '#' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_alphabetic() {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(err("`#` must start a preprocessor command".into()));
                }
                let word: String = chars[i..j].iter().collect::<String>().to_ascii_lowercase();
                preproc_line = Some(line);
                stmt_start = false;
                if word == "#include" {
                    // the rest of the line is the file name
                    let mut k = j;
                    while k < chars.len() && chars[k] != '\n' {
                        k += 1;
                    }
                    let arg: String = chars[j..k].iter().collect();
                    let arg = arg.trim().trim_matches('"').to_string();
                    out.push(Token {
                        glued,
                        ..Token::new(TokenKind::Preproc, word, line)
                    });
                    out.push(Token {
                        glued: false,
                        ..Token::new(TokenKind::Str, arg, line)
                    });
                    i = k;
                    glued = true;
                    continue;
                }
                (TokenKind::Preproc, word, j)
            }
            '.' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_alphabetic() {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(err("illegal character `.`".into()));
                }
                stmt_start = true;
                let word: String = chars[i..j].iter().collect::<String>().to_ascii_lowercase();
                (TokenKind::Directive, word, j)
            }
            '\'' => {
                let close = find_close(i + 1, '\'', '\'', false, false)
                    .ok_or_else(|| err("unterminated macro reference".into()))?;
                stmt_start = false;
                (TokenKind::MacroRef, chars[i + 1..close].iter().collect(), close + 1)
            }
            '{' => {
                let close = find_close(i + 1, '{', '}', true, false).ok_or_else(|| err("unterminated `{`".into()))?;
                stmt_start = false;
                (TokenKind::BraceGroup, chars[i + 1..close].iter().collect(), close + 1)
            }
            '"' => {
                let close =
                    find_close(i + 1, '"', '"', false, false).ok_or_else(|| err("unterminated string".into()))?;
                stmt_start = false;
                (TokenKind::Str, chars[i + 1..close].iter().collect(), close + 1)
            }
            '[' => {
                let close =
                    find_close(i + 1, '[', ']', true, true).ok_or_else(|| err("unterminated bracket".into()))?;
                stmt_start = false;
                let inner: String = chars[i + 1..close].iter().collect();
                line += inner.matches('\n').count() as u32;
                (TokenKind::BracketName, inner, close + 1)
            }
            c if is_name_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let kind = if stmt_start && preproc_line.is_none() && is_statement_keyword(&word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Name
                };
                stmt_start = false;
                (kind, word, j)
            }
            c if c.is_ascii_digit() => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                stmt_start = false;
                (TokenKind::Number, chars[i..j].iter().collect(), j)
            }
            '+' | '-' | '*' | '/' | '^' | '=' | '?' => {
                stmt_start = false;
                (TokenKind::Operator, c.to_string(), i + 1)
            }
            '(' | ')' | ',' | ';' => {
                stmt_start = c == ';';
                (TokenKind::Punct, c.to_string(), i + 1)
            }
            other => return Err(err(format!("illegal character `{other}`"))),
        };
        out.push(Token {
            glued,
            ..Token::new(kind, text, start_line)
        });
        glued = true;
        i = next;
    }
    Ok(out)
}
