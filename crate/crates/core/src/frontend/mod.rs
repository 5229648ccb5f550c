//! Program text to module units: comment stripping, tokenizing,
//! preprocessing and statement parsing.

mod parse;
mod preprocess;
mod token;

use std::path::{Path, PathBuf};

pub use parse::{parse_expr, parse_modules, parse_statement, Expr, ModuleUnit, Statement, StatementKind, Terminator};
pub use preprocess::{eval_brace_arith, preprocess, Expansion, MacroEnv, MAX_INCLUDE_DEPTH};
pub use token::{is_statement_keyword, strip_comments, tokenize, LexError, Token, TokenKind};

use crate::error::{Error, Result};
use crate::settings::Settings;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub path: Option<PathBuf>,
    pub lines: Vec<String>,
}

/// A compiled program: its module units plus the source lines to echo.
#[derive(Debug, Clone)]
pub struct Program {
    pub files: Vec<SourceFile>,
    pub echo: Vec<(u16, u32)>,
    pub modules: Vec<ModuleUnit>,
}

impl Program {
    pub fn echo_line(&self, idx: usize) -> &str {
        let (file, line) = self.echo[idx];
        &self.files[file as usize].lines[line as usize - 1]
    }
}

/// Expands program text without parsing it into modules.
pub fn expand(name: &str, path: Option<&Path>, text: &str, settings: &Settings) -> Result<Expansion> {
    let mut env = MacroEnv::new();
    let mut pp = preprocess::Preprocessor::new(&mut env, &settings.include_dirs, settings.comment_char);
    let tokens = pp.load(name, path.map(Path::to_path_buf), text)?;
    pp.run(&tokens, true)?;
    Ok(pp.finish())
}

pub fn compile(name: &str, path: Option<&Path>, text: &str, settings: &Settings) -> Result<Program> {
    let exp = expand(name, path, text, settings)?;
    let names: Vec<String> = exp.files.iter().map(|f| f.name.clone()).collect();
    let modules = parse_modules(&exp.tokens, &names)?;
    Ok(Program {
        files: exp.files,
        echo: exp.echo,
        modules,
    })
}

pub fn compile_file(path: &Path, settings: &Settings) -> Result<Program> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    compile(&path.display().to_string(), Some(path), &text, settings)
}
