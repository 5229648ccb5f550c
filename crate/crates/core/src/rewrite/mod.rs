//! Pattern matching and substitution for `identify` statements and
//! `repeat` blocks.
//!
//! An `id` statement makes a single pass over a term: every factor unit of
//! the original term (each power of a symbol, each function application)
//! is consumed at most once, and factors produced by the right-hand side
//! are not rescanned. `repeat` supplies the closure.

mod template;

use num_bigint::BigInt;

pub use template::{
    compile_rhs, evaluate, expand, Affine, AppTemplate, ArgTemplate, ExprLookup, RhsTemplate, Scope, TemplateTerm,
};

use crate::error::{EngineError, Error, Location, Result};
use crate::frontend::Expr;
use crate::sort::sort_merge;
use crate::term::{normalize, Argument, Decl, Declarations, FunctionApp, FunctionId, SymbolId, Term};

pub const DEFAULT_REPEAT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternArg {
    Int(BigInt),
    Symbol(SymbolId),
    /// Binding slot of an integer wildcard.
    Wildcard(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    /// Matches one power of a symbol with positive exponent.
    Symbol(SymbolId),
    Function {
        id: FunctionId,
        args: Vec<PatternArg>,
    },
}

/// Compiled left-hand side plus the names of its wildcards by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPattern {
    pub pattern: Pattern,
    pub wildcards: Vec<String>,
}

fn pattern_arg(e: &Expr, decls: &Declarations, wildcards: &mut Vec<String>, at: &Location) -> Result<PatternArg> {
    let int = |e: &Expr| match e {
        Expr::Num(n) => Some(n.clone()),
        Expr::Neg(inner) => match &**inner {
            Expr::Num(n) => Some(-n),
            _ => None,
        },
        _ => None,
    };
    if let Some(n) = int(e) {
        return Ok(PatternArg::Int(n));
    }
    match e {
        Expr::Name(n) | Expr::Bracket(n) => match decls.symbol(n) {
            Some(id) => Ok(PatternArg::Symbol(id)),
            None => Err(Error::compile(at, format!("`{n}` is not a declared symbol"))),
        },
        Expr::Wildcard(w) => {
            if wildcards.contains(w) {
                return Err(Error::compile(at, format!("wildcard `{w}?` appears more than once")));
            }
            wildcards.push(w.clone());
            Ok(PatternArg::Wildcard(wildcards.len() - 1))
        }
        _ => Err(Error::compile(
            at,
            "pattern arguments must be integers, symbols or wildcards",
        )),
    }
}

pub fn compile_pattern(lhs: &Expr, decls: &Declarations, at: &Location) -> Result<CompiledPattern> {
    let mut wildcards = Vec::new();
    let pattern = match lhs {
        Expr::Name(n) | Expr::Bracket(n) => match decls.lookup(n) {
            Some(Decl::Symbol(id)) => Pattern::Symbol(id),
            Some(Decl::Function(id)) => Pattern::Function { id, args: Vec::new() },
            None => return Err(Error::compile(at, format!("unknown name `{n}` in pattern"))),
        },
        Expr::Call(name, args) => {
            let id = decls
                .function(name)
                .ok_or_else(|| Error::compile(at, format!("`{name}` is not a declared function")))?;
            let args = args
                .iter()
                .map(|a| pattern_arg(a, decls, &mut wildcards, at))
                .collect::<Result<_>>()?;
            Pattern::Function { id, args }
        }
        Expr::Wildcard(w) => {
            return Err(Error::compile(
                at,
                format!("`{w}?` would bind a symbol; wildcards only bind integer function arguments"),
            ))
        }
        _ => {
            return Err(Error::compile(
                at,
                "left-hand side must be a symbol or a function application",
            ))
        }
    };
    Ok(CompiledPattern { pattern, wildcards })
}

/// Wildcard values by slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Binding(pub Vec<BigInt>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Symbol(usize),
    Function(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub site: Site,
    pub binding: Binding,
}

fn match_app(p: &CompiledPattern, app: &FunctionApp) -> Option<Binding> {
    let Pattern::Function { id, args } = &p.pattern else {
        return None;
    };
    if *id != app.id || args.len() != app.args.len() {
        return None;
    }
    let mut binding = vec![BigInt::from(0); p.wildcards.len()];
    for (pa, a) in args.iter().zip(&app.args) {
        match (pa, a) {
            (PatternArg::Int(x), Argument::Int(y)) if x == y => {}
            (PatternArg::Symbol(x), Argument::Symbol(y)) if x == y => {}
            (PatternArg::Wildcard(slot), Argument::Int(v)) => binding[*slot] = v.clone(),
            _ => return None,
        }
    }
    Some(Binding(binding))
}

/// First matching factor of `t`, scanning symbols then functions left to right.
pub fn match_term(p: &CompiledPattern, t: &Term) -> Option<Match> {
    match &p.pattern {
        Pattern::Symbol(id) => t.symbols.iter().position(|&(s, e)| s == *id && e >= 1).map(|i| Match {
            site: Site::Symbol(i),
            binding: Binding::default(),
        }),
        Pattern::Function { .. } => t.functions.iter().enumerate().find_map(|(i, app)| {
            match_app(p, app).map(|binding| Match {
                site: Site::Function(i),
                binding,
            })
        }),
    }
}

/// Rebuilds the factor a binding was taken from.
pub fn instantiate_pattern(p: &CompiledPattern, b: &Binding) -> Term {
    match &p.pattern {
        Pattern::Symbol(id) => Term::symbol(*id, 1),
        Pattern::Function { id, args } => Term::function(FunctionApp {
            id: *id,
            args: args
                .iter()
                .map(|a| match a {
                    PatternArg::Int(n) => Argument::Int(n.clone()),
                    PatternArg::Symbol(s) => Argument::Symbol(*s),
                    PatternArg::Wildcard(slot) => Argument::Int(b.0[*slot].clone()),
                })
                .collect(),
        }),
    }
}

/// Removes one unit of the matched factor and multiplies the residual into
/// every instantiated right-hand-side term. Results are raw.
pub fn substitute(t: &Term, m: &Match, rhs: &RhsTemplate) -> Result<Vec<Term>, EngineError> {
    let mut residual = t.clone();
    match m.site {
        Site::Symbol(i) => {
            residual.symbols[i].1 -= 1;
        }
        Site::Function(i) => {
            residual.functions.remove(i);
        }
    }
    let rhs_terms = rhs.instantiate(&m.binding.0)?;
    Ok(rhs_terms.iter().map(|r| r.mul_raw(&residual)).collect())
}

#[derive(Debug, Clone)]
pub struct Identify {
    pub pattern: CompiledPattern,
    pub rhs: RhsTemplate,
    pub at: Location,
}

impl Identify {
    pub fn compile(
        lhs: &Expr,
        rhs: &Expr,
        decls: &Declarations,
        exprs: &dyn ExprLookup,
        at: &Location,
    ) -> Result<Self> {
        let pattern = compile_pattern(lhs, decls, at)?;
        let scope = Scope {
            decls,
            exprs,
            wildcards: &pattern.wildcards,
            at,
        };
        let rhs = compile_rhs(rhs, &scope)?;
        Ok(Identify {
            pattern,
            rhs,
            at: at.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdOutcome {
    pub terms: Vec<Term>,
    pub matched: bool,
}

fn distribute(partials: Vec<Term>, factors: &[Term]) -> Result<Vec<Term>, EngineError> {
    let mut out = Vec::with_capacity(partials.len() * factors.len());
    for p in &partials {
        for f in factors {
            if let Some(t) = normalize(p.mul_raw(f))? {
                out.push(t);
            }
        }
    }
    Ok(sort_merge(out))
}

/// One `id` pass over `t`. Non-matching terms come back unchanged.
pub fn apply_id(stmt: &Identify, t: &Term) -> Result<IdOutcome, EngineError> {
    let mut partials = vec![Term::constant(t.coeff.clone())];
    let mut matched = false;
    let empty = Binding::default();
    for &(id, exp) in &t.symbols {
        if stmt.pattern.pattern == Pattern::Symbol(id) && exp >= 1 {
            matched = true;
            let rhs = stmt.rhs.instantiate(&empty.0)?;
            for _ in 0..exp {
                partials = distribute(partials, &rhs)?;
                if partials.is_empty() {
                    break;
                }
            }
        } else {
            for p in &mut partials {
                p.symbols.push((id, exp));
            }
        }
        if partials.is_empty() {
            break;
        }
    }
    for app in &t.functions {
        if partials.is_empty() {
            break;
        }
        match match_app(&stmt.pattern, app) {
            Some(b) => {
                matched = true;
                let rhs = stmt.rhs.instantiate(&b.0)?;
                partials = distribute(partials, &rhs)?;
            }
            None => {
                for p in &mut partials {
                    p.functions.push(app.clone());
                }
            }
        }
    }
    if !matched {
        return Ok(IdOutcome {
            terms: vec![t.clone()],
            matched: false,
        });
    }
    let mut terms = Vec::with_capacity(partials.len());
    for p in partials {
        if let Some(n) = normalize(p)? {
            terms.push(n);
        }
    }
    Ok(IdOutcome { terms, matched: true })
}

/// An executable module statement.
#[derive(Debug, Clone)]
pub enum Executable {
    Id(Identify),
    Repeat(RepeatBlock),
}

#[derive(Debug, Clone)]
pub struct RepeatBlock {
    pub body: Vec<Executable>,
    pub lines: (u32, u32),
    pub cap: usize,
}

impl RepeatBlock {
    pub fn new(body: Vec<Executable>, lines: (u32, u32)) -> Self {
        RepeatBlock {
            body,
            lines,
            cap: DEFAULT_REPEAT_CAP,
        }
    }
}

/// Applies one statement; the flag reports whether the term changed.
pub fn apply_statement(stmt: &Executable, t: &Term) -> Result<(Vec<Term>, bool), EngineError> {
    match stmt {
        Executable::Id(id) => {
            let out = apply_id(id, t)?;
            let changed = out.matched && !(out.terms.len() == 1 && out.terms[0] == *t);
            Ok((out.terms, changed))
        }
        Executable::Repeat(block) => {
            let out = apply_repeat(block, t)?;
            let changed = !(out.len() == 1 && out[0] == *t);
            Ok((out, changed))
        }
    }
}

/// Passes `t` through `body` in order; each statement's output feeds the next.
pub fn apply_sequence(body: &[Executable], t: &Term) -> Result<(Vec<Term>, bool), EngineError> {
    let mut current = vec![t.clone()];
    let mut changed = false;
    for stmt in body {
        let mut next = Vec::with_capacity(current.len());
        for term in &current {
            let (out, c) = apply_statement(stmt, term)?;
            changed |= c;
            next.extend(out);
        }
        current = next;
        if current.is_empty() {
            break;
        }
    }
    Ok((current, changed))
}

/// Runs a `repeat` block on `t` until no statement changes any pending term.
///
/// The work list is processed in rounds. Pending terms are merged by
/// like-term addition before each round, every pending term goes through
/// the block once, unchanged terms become final and changed outputs form
/// the next round. More than `cap` rounds is reported as non-termination.
pub fn apply_repeat(block: &RepeatBlock, t: &Term) -> Result<Vec<Term>, EngineError> {
    apply_repeat_with(block, t, &mut |_| {})
}

/// [`apply_repeat`] with a hook that may reorder the pending list before
/// each round.
pub fn apply_repeat_with(
    block: &RepeatBlock,
    t: &Term,
    reorder: &mut dyn FnMut(&mut Vec<Term>),
) -> Result<Vec<Term>, EngineError> {
    let mut pending = vec![t.clone()];
    let mut finals = Vec::new();
    let mut rounds = 0usize;
    while !pending.is_empty() {
        rounds += 1;
        if rounds > block.cap {
            return Err(EngineError::RepeatCapExceeded {
                cap: block.cap,
                lines: format!("{}-{}", block.lines.0, block.lines.1),
            });
        }
        reorder(&mut pending);
        let mut next = Vec::new();
        for term in pending {
            let (out, changed) = apply_sequence(&block.body, &term)?;
            if changed {
                next.extend(out);
            } else {
                finals.push(term);
            }
        }
        pending = if next.len() > 1 { sort_merge(next) } else { next };
    }
    Ok(finals)
}
