//! Canonical terms: a coefficient times symbol powers and function applications.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::coeff::Coefficient;
use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decl {
    Symbol(SymbolId),
    Function(FunctionId),
}

/// Symbol and function tables. Ids follow declaration order, which is also
/// the canonical factor order. Bracket symbols are stored with their brackets
/// so that `[sin(x)]` and the function `sin` never collide.
#[derive(Debug, Clone, Default)]
pub struct Declarations {
    symbols: Vec<String>,
    functions: Vec<String>,
    names: HashMap<String, Decl>,
}

impl Declarations {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a symbol; redeclaring an existing symbol returns its id.
    pub fn declare_symbol(&mut self, name: &str) -> Result<SymbolId, String> {
        match self.names.get(name) {
            Some(Decl::Symbol(id)) => Ok(*id),
            Some(Decl::Function(_)) => Err(format!("`{name}` is already declared as a function")),
            None => {
                let id = SymbolId(self.symbols.len() as u32);
                self.symbols.push(name.to_string());
                self.names.insert(name.to_string(), Decl::Symbol(id));
                Ok(id)
            }
        }
    }

    pub fn declare_function(&mut self, name: &str) -> Result<FunctionId, String> {
        match self.names.get(name) {
            Some(Decl::Function(id)) => Ok(*id),
            Some(Decl::Symbol(_)) => Err(format!("`{name}` is already declared as a symbol")),
            None => {
                let id = FunctionId(self.functions.len() as u32);
                self.functions.push(name.to_string());
                self.names.insert(name.to_string(), Decl::Function(id));
                Ok(id)
            }
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Decl> {
        self.names.get(name).copied()
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        match self.lookup(name)? {
            Decl::Symbol(id) => Some(id),
            Decl::Function(_) => None,
        }
    }

    pub fn function(&self, name: &str) -> Option<FunctionId> {
        match self.lookup(name)? {
            Decl::Function(id) => Some(id),
            Decl::Symbol(_) => None,
        }
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.symbols[id.0 as usize]
    }

    pub fn function_name(&self, id: FunctionId) -> &str {
        &self.functions[id.0 as usize]
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Argument {
    Int(BigInt),
    Symbol(SymbolId),
    /// A merged, canonically sorted sum that is not a bare integer or symbol.
    Sum(Vec<Term>),
}

impl Argument {
    /// Canonical argument form of a merged sum: the empty sum is `0`, a lone
    /// integer is `Int`, a lone unit symbol is `Symbol`.
    pub fn from_sum(terms: Vec<Term>) -> Argument {
        match terms.as_slice() {
            [] => Argument::Int(BigInt::from(0)),
            [t] if t.is_constant() && t.coeff.is_integer() => Argument::Int(t.coeff.numer().clone()),
            [t] if t.coeff.is_one() && t.functions.is_empty() && t.symbols.len() == 1 && t.symbols[0].1 == 1 => {
                Argument::Symbol(t.symbols[0].0)
            }
            _ => Argument::Sum(terms),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Argument::Int(_) => 0,
            Argument::Symbol(_) => 1,
            Argument::Sum(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionApp {
    pub id: FunctionId,
    pub args: Vec<Argument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Coefficient,
    pub symbols: Vec<(SymbolId, i32)>,
    pub functions: Vec<FunctionApp>,
}

impl Term {
    pub fn constant(c: Coefficient) -> Term {
        Term {
            coeff: c,
            symbols: Vec::new(),
            functions: Vec::new(),
        }
    }

    pub fn one() -> Term {
        Term::constant(Coefficient::one())
    }

    pub fn symbol(id: SymbolId, exp: i32) -> Term {
        Term {
            coeff: Coefficient::one(),
            symbols: vec![(id, exp)],
            functions: Vec::new(),
        }
    }

    pub fn function(app: FunctionApp) -> Term {
        Term {
            coeff: Coefficient::one(),
            symbols: Vec::new(),
            functions: vec![app],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.symbols.is_empty() && self.functions.is_empty()
    }

    /// Raw product: factor lists are concatenated, nothing is merged.
    pub fn mul_raw(&self, other: &Term) -> Term {
        let mut symbols = Vec::with_capacity(self.symbols.len() + other.symbols.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(&other.symbols);
        let mut functions = Vec::with_capacity(self.functions.len() + other.functions.len());
        functions.extend_from_slice(&self.functions);
        functions.extend_from_slice(&other.functions);
        Term {
            coeff: &self.coeff * &other.coeff,
            symbols,
            functions,
        }
    }

    pub fn with_coeff(mut self, coeff: Coefficient) -> Term {
        self.coeff = coeff;
        self
    }
}

/// Brings a raw term into canonical form: symbol powers are contracted and
/// sorted, zero exponents removed, function applications sorted but kept
/// with their multiplicity. Returns `None` for a zero coefficient.
pub fn normalize(mut raw: Term) -> Result<Option<Term>, EngineError> {
    if raw.coeff.is_zero() {
        return Ok(None);
    }
    raw.symbols.sort_by_key(|&(id, _)| id);
    let mut symbols: Vec<(SymbolId, i32)> = Vec::with_capacity(raw.symbols.len());
    for (id, exp) in raw.symbols {
        match symbols.last_mut() {
            Some((last, e)) if *last == id => {
                *e = e.checked_add(exp).ok_or(EngineError::ExponentOverflow)?;
            }
            _ => symbols.push((id, exp)),
        }
    }
    symbols.retain(|&(_, e)| e != 0);
    raw.functions.sort_by(compare_apps);
    Ok(Some(Term {
        coeff: raw.coeff,
        symbols,
        functions: raw.functions,
    }))
}

/// Lexicographic comparison where the shorter sequence sorts after any
/// extension of itself.
fn lex<T>(a: &[T], b: &[T], mut cmp: impl FnMut(&T, &T) -> Ordering) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

fn compare_symbol_power(a: &(SymbolId, i32), b: &(SymbolId, i32)) -> Ordering {
    a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1))
}

pub fn compare_args(a: &Argument, b: &Argument) -> Ordering {
    match (a, b) {
        (Argument::Int(x), Argument::Int(y)) => x.cmp(y),
        (Argument::Symbol(x), Argument::Symbol(y)) => x.cmp(y),
        (Argument::Sum(x), Argument::Sum(y)) => lex(x, y, |s, t| compare(s, t).then_with(|| s.coeff.cmp(&t.coeff))),
        _ => a.rank().cmp(&b.rank()),
    }
}

pub fn compare_apps(a: &FunctionApp, b: &FunctionApp) -> Ordering {
    a.id.cmp(&b.id).then_with(|| lex(&a.args, &b.args, compare_args))
}

/// Total order on normalized terms, ignoring coefficients. `Equal` exactly
/// when the two terms are like terms.
pub fn compare(a: &Term, b: &Term) -> Ordering {
    lex(&a.symbols, &b.symbols, compare_symbol_power).then_with(|| lex(&a.functions, &b.functions, compare_apps))
}

pub fn like_terms(a: &Term, b: &Term) -> bool {
    a.symbols == b.symbols && a.functions == b.functions
}

fn write_factors(out: &mut String, t: &Term, decls: &Declarations) {
    let mut first = true;
    for &(id, exp) in &t.symbols {
        if !first {
            out.push('*');
        }
        first = false;
        out.push_str(decls.symbol_name(id));
        if exp != 1 {
            let _ = write!(out, "^{exp}");
        }
    }
    for app in &t.functions {
        if !first {
            out.push('*');
        }
        first = false;
        out.push_str(decls.function_name(app.id));
        out.push('(');
        for (i, arg) in app.args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match arg {
                Argument::Int(n) => {
                    let _ = write!(out, "{n}");
                }
                Argument::Symbol(s) => out.push_str(decls.symbol_name(*s)),
                Argument::Sum(terms) => out.push_str(&format_compact_sum(terms, decls)),
            }
        }
        out.push(')');
    }
}

/// The unsigned body of a term: `|c|*factors`, with a unit coefficient
/// suppressed when factors are present.
pub fn format_magnitude(t: &Term, decls: &Declarations) -> String {
    let mut out = String::new();
    let mag = t.coeff.abs();
    if t.is_constant() {
        let _ = write!(out, "{mag}");
        return out;
    }
    if !mag.is_one() {
        let _ = write!(out, "{mag}*");
    }
    write_factors(&mut out, t, decls);
    out
}

/// Leading form of a term, e.g. `512*[sin(x)]*[cos(x)]^9` or `-x`.
pub fn format_term(t: &Term, decls: &Declarations) -> String {
    let body = format_magnitude(t, decls);
    if t.coeff.is_negative() {
        format!("-{body}")
    } else {
        body
    }
}

/// Form of a non-leading term: ` + x` or ` - x`.
pub fn format_trailing(t: &Term, decls: &Declarations) -> String {
    let sign = if t.coeff.is_negative() { '-' } else { '+' };
    format!(" {sign} {}", format_magnitude(t, decls))
}

fn format_compact_sum(terms: &[Term], decls: &Declarations) -> String {
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        if i > 0 && !t.coeff.is_negative() {
            out.push('+');
        }
        out.push_str(&format_term(t, decls));
    }
    out
}
