//! Expansion of expression syntax into sums of terms. Function arguments
//! that mention wildcards stay symbolic as affine forms until a match
//! supplies integer values.

use num_bigint::BigInt;

use crate::coeff::Coefficient;
use crate::error::{EngineError, Error, Location, Result};
use crate::frontend::Expr;
use crate::sort::sort_merge;
use crate::term::{normalize, Argument, Decl, Declarations, FunctionApp, FunctionId, SymbolId, Term};

/// Access to the current values of named expressions.
pub trait ExprLookup {
    fn expression(&self, name: &str) -> Option<&[Term]>;
}

impl ExprLookup for () {
    fn expression(&self, _: &str) -> Option<&[Term]> {
        None
    }
}

pub struct Scope<'a> {
    pub decls: &'a Declarations,
    pub exprs: &'a dyn ExprLookup,
    /// Wildcard names visible to the expression, indexed by binding slot.
    pub wildcards: &'a [String],
    pub at: &'a Location,
}

impl Scope<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::compile(self.at, msg))
    }

    fn engine(&self, e: EngineError) -> Error {
        Error::Engine {
            at: self.at.clone(),
            source: e,
        }
    }

    fn wildcard(&self, name: &str) -> Option<usize> {
        self.wildcards.iter().position(|w| w == name)
    }
}

/// `constant + sum(coeff * wildcard)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub constant: Coefficient,
    pub coeffs: Vec<(usize, Coefficient)>,
}

impl Affine {
    fn constant(c: Coefficient) -> Affine {
        Affine {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    fn var(slot: usize) -> Affine {
        Affine {
            constant: Coefficient::zero(),
            coeffs: vec![(slot, Coefficient::one())],
        }
    }

    fn scale(mut self, c: &Coefficient) -> Affine {
        self.constant = &self.constant * c;
        for (_, k) in &mut self.coeffs {
            *k = &*k * c;
        }
        self
    }

    fn add(mut self, other: Affine) -> Affine {
        self.constant = &self.constant + &other.constant;
        for (slot, k) in other.coeffs {
            match self.coeffs.iter_mut().find(|(s, _)| *s == slot) {
                Some((_, e)) => *e = &*e + &k,
                None => self.coeffs.push((slot, k)),
            }
        }
        self
    }

    fn as_constant(&self) -> Option<&Coefficient> {
        self.coeffs.iter().all(|(_, k)| k.is_zero()).then_some(&self.constant)
    }

    pub fn eval(&self, binding: &[BigInt]) -> Result<BigInt, EngineError> {
        let mut v = self.constant.clone();
        for (slot, k) in &self.coeffs {
            v = &v + &(k * &Coefficient::from_int(binding[*slot].clone()));
        }
        v.to_integer()
            .ok_or_else(|| EngineError::NonIntegerArgument(v.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgTemplate {
    Fixed(Argument),
    Affine(Affine),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppTemplate {
    pub id: FunctionId,
    pub args: Vec<ArgTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateTerm {
    pub coeff: Coefficient,
    pub symbols: Vec<(SymbolId, i32)>,
    pub functions: Vec<AppTemplate>,
}

impl TemplateTerm {
    fn constant(c: Coefficient) -> Self {
        TemplateTerm {
            coeff: c,
            symbols: Vec::new(),
            functions: Vec::new(),
        }
    }

    fn from_term(t: &Term) -> Self {
        TemplateTerm {
            coeff: t.coeff.clone(),
            symbols: t.symbols.clone(),
            functions: t
                .functions
                .iter()
                .map(|a| AppTemplate {
                    id: a.id,
                    args: a.args.iter().cloned().map(ArgTemplate::Fixed).collect(),
                })
                .collect(),
        }
    }

    fn is_fixed(&self) -> bool {
        self.functions
            .iter()
            .all(|f| f.args.iter().all(|a| matches!(a, ArgTemplate::Fixed(_))))
    }

    fn mul(&self, other: &TemplateTerm) -> TemplateTerm {
        let mut out = self.clone();
        out.coeff = &self.coeff * &other.coeff;
        out.symbols.extend_from_slice(&other.symbols);
        out.functions.extend_from_slice(&other.functions);
        out
    }

    /// A raw term with every affine argument evaluated under `binding`.
    pub fn instantiate(&self, binding: &[BigInt]) -> Result<Term, EngineError> {
        let mut functions = Vec::with_capacity(self.functions.len());
        for f in &self.functions {
            let mut args = Vec::with_capacity(f.args.len());
            for a in &f.args {
                args.push(match a {
                    ArgTemplate::Fixed(arg) => arg.clone(),
                    ArgTemplate::Affine(aff) => Argument::Int(aff.eval(binding)?),
                });
            }
            functions.push(FunctionApp { id: f.id, args });
        }
        Ok(Term {
            coeff: self.coeff.clone(),
            symbols: self.symbols.clone(),
            functions,
        })
    }
}

/// A right-hand side ready for instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RhsTemplate {
    pub terms: Vec<TemplateTerm>,
}

impl RhsTemplate {
    pub fn instantiate(&self, binding: &[BigInt]) -> Result<Vec<Term>, EngineError> {
        self.terms.iter().map(|t| t.instantiate(binding)).collect()
    }
}

fn mentions_wildcard(e: &Expr, scope: &Scope) -> bool {
    match e {
        Expr::Name(n) => scope.wildcard(n).is_some(),
        Expr::Wildcard(_) => true,
        Expr::Num(_) | Expr::Bracket(_) => false,
        Expr::Call(_, args) => args.iter().any(|a| mentions_wildcard(a, scope)),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            mentions_wildcard(a, scope) || mentions_wildcard(b, scope)
        }
        Expr::Neg(a) => mentions_wildcard(a, scope),
    }
}

fn affine(e: &Expr, scope: &Scope) -> Result<Affine> {
    Ok(match e {
        Expr::Num(n) => Affine::constant(Coefficient::from_int(n.clone())),
        Expr::Name(n) => match scope.wildcard(n) {
            Some(slot) => Affine::var(slot),
            None => return scope.err(format!("`{n}` cannot be mixed with wildcard arithmetic")),
        },
        Expr::Add(a, b) => affine(a, scope)?.add(affine(b, scope)?),
        Expr::Sub(a, b) => affine(a, scope)?.add(affine(b, scope)?.scale(&Coefficient::from(-1))),
        Expr::Neg(a) => affine(a, scope)?.scale(&Coefficient::from(-1)),
        Expr::Mul(a, b) => {
            let (x, y) = (affine(a, scope)?, affine(b, scope)?);
            if let Some(c) = x.as_constant() {
                y.scale(c)
            } else if let Some(c) = y.as_constant() {
                x.scale(c)
            } else {
                return scope.err("wildcard arithmetic must be affine");
            }
        }
        Expr::Div(a, b) => {
            let (x, y) = (affine(a, scope)?, affine(b, scope)?);
            match y.as_constant() {
                Some(c) => x.scale(&c.recip().map_err(|e| scope.engine(e))?),
                None => return scope.err("wildcard arithmetic must be affine"),
            }
        }
        _ => return scope.err("wildcard arithmetic must be affine"),
    })
}

type Poly = Vec<TemplateTerm>;

/// Merges like terms when no affine arguments remain.
fn compact(p: Poly, scope: &Scope) -> Result<Poly> {
    if p.len() < 2 || !p.iter().all(TemplateTerm::is_fixed) {
        return Ok(p);
    }
    let terms = to_terms(&p, scope)?;
    Ok(terms.iter().map(TemplateTerm::from_term).collect())
}

fn to_terms(p: &Poly, scope: &Scope) -> Result<Vec<Term>> {
    let mut out = Vec::with_capacity(p.len());
    for t in p {
        let raw = t.instantiate(&[]).map_err(|e| scope.engine(e))?;
        if let Some(n) = normalize(raw).map_err(|e| scope.engine(e))? {
            out.push(n);
        }
    }
    Ok(sort_merge(out))
}

fn product(a: &Poly, b: &Poly) -> Poly {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x.mul(y));
        }
    }
    out
}

fn single_fixed(p: &Poly) -> Option<&TemplateTerm> {
    match p.as_slice() {
        [t] if t.is_fixed() => Some(t),
        _ => None,
    }
}

fn invert(t: &TemplateTerm, scope: &Scope) -> Result<TemplateTerm> {
    if !t.functions.is_empty() {
        return scope.err("cannot divide by a function");
    }
    Ok(TemplateTerm {
        coeff: t.coeff.recip().map_err(|e| scope.engine(e))?,
        symbols: t
            .symbols
            .iter()
            .map(|&(s, e)| e.checked_neg().map(|n| (s, n)).ok_or(EngineError::ExponentOverflow))
            .collect::<Result<_, _>>()
            .map_err(|e| scope.engine(e))?,
        functions: Vec::new(),
    })
}

fn integer_exponent(p: &Poly, scope: &Scope) -> Result<i64> {
    let terms = if p.iter().all(TemplateTerm::is_fixed) {
        to_terms(p, scope)?
    } else {
        return scope.err("exponent must be an integer constant");
    };
    let n = match terms.as_slice() {
        [] => BigInt::from(0),
        [t] if t.is_constant() && t.coeff.is_integer() => t.coeff.numer().clone(),
        _ => return scope.err("exponent must be an integer constant"),
    };
    i64::try_from(n).or_else(|_| scope.err("exponent out of range"))
}

fn argument(e: &Expr, scope: &Scope) -> Result<ArgTemplate> {
    if mentions_wildcard(e, scope) {
        return Ok(ArgTemplate::Affine(affine(e, scope)?));
    }
    let p = expand(e, scope)?;
    Ok(ArgTemplate::Fixed(Argument::from_sum(to_terms(&p, scope)?)))
}

/// Expands `e` into a sum of template terms.
pub fn expand(e: &Expr, scope: &Scope) -> Result<Poly> {
    let p = match e {
        Expr::Num(n) => vec![TemplateTerm::constant(Coefficient::from_int(n.clone()))],
        Expr::Name(n) | Expr::Bracket(n) => {
            if scope.wildcard(n).is_some() {
                return scope.err(format!("wildcard `{n}` may only appear inside function arguments"));
            }
            match scope.decls.lookup(n) {
                Some(Decl::Symbol(id)) => vec![TemplateTerm {
                    symbols: vec![(id, 1)],
                    ..TemplateTerm::constant(Coefficient::one())
                }],
                Some(Decl::Function(id)) => vec![TemplateTerm {
                    functions: vec![AppTemplate { id, args: Vec::new() }],
                    ..TemplateTerm::constant(Coefficient::one())
                }],
                None => match scope.exprs.expression(n) {
                    Some(terms) => terms.iter().map(TemplateTerm::from_term).collect(),
                    None => return scope.err(format!("unknown name `{n}`")),
                },
            }
        }
        Expr::Wildcard(w) => return scope.err(format!("`{w}?` is only allowed on the left-hand side of id")),
        Expr::Call(name, args) => {
            let id = match scope.decls.lookup(name) {
                Some(Decl::Function(id)) => id,
                Some(Decl::Symbol(_)) => return scope.err(format!("`{name}` is a symbol, not a function")),
                None => return scope.err(format!("unknown function `{name}`")),
            };
            let args = args.iter().map(|a| argument(a, scope)).collect::<Result<_>>()?;
            vec![TemplateTerm {
                functions: vec![AppTemplate { id, args }],
                ..TemplateTerm::constant(Coefficient::one())
            }]
        }
        Expr::Add(a, b) => {
            let mut p = expand(a, scope)?;
            p.extend(expand(b, scope)?);
            compact(p, scope)?
        }
        Expr::Sub(a, b) => {
            let mut p = expand(a, scope)?;
            p.extend(expand(b, scope)?.into_iter().map(|mut t| {
                t.coeff = -t.coeff;
                t
            }));
            compact(p, scope)?
        }
        Expr::Neg(a) => expand(a, scope)?
            .into_iter()
            .map(|mut t| {
                t.coeff = -t.coeff;
                t
            })
            .collect(),
        Expr::Mul(a, b) => compact(product(&expand(a, scope)?, &expand(b, scope)?), scope)?,
        Expr::Div(a, b) => {
            let den = compact(expand(b, scope)?, scope)?;
            let inv = match (den.as_slice(), single_fixed(&den)) {
                ([], _) => return Err(scope.engine(EngineError::DivisionByZero)),
                (_, Some(t)) => invert(t, scope)?,
                _ => return scope.err("can only divide by a single term"),
            };
            compact(product(&expand(a, scope)?, &vec![inv]), scope)?
        }
        Expr::Pow(base, exp) => {
            let n = integer_exponent(&expand(exp, scope)?, scope)?;
            let mut b = compact(expand(base, scope)?, scope)?;
            if n < 0 {
                b = match single_fixed(&b) {
                    Some(t) => vec![invert(t, scope)?],
                    None if b.is_empty() => return Err(scope.engine(EngineError::DivisionByZero)),
                    None => return scope.err("negative power of a sum"),
                };
            }
            let mut acc = vec![TemplateTerm::constant(Coefficient::one())];
            for _ in 0..n.unsigned_abs() {
                acc = compact(product(&acc, &b), scope)?;
            }
            acc
        }
    };
    Ok(p)
}

/// Compiles a right-hand side whose function arguments may use the given
/// wildcards.
pub fn compile_rhs(e: &Expr, scope: &Scope) -> Result<RhsTemplate> {
    Ok(RhsTemplate {
        terms: compact(expand(e, scope)?, scope)?,
    })
}

/// Evaluates an expression to a merged, canonically ordered sum.
pub fn evaluate(e: &Expr, scope: &Scope) -> Result<Vec<Term>> {
    let p = expand(e, scope)?;
    to_terms(&p, scope)
}
