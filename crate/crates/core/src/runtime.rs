//! Program execution: expression bookkeeping, the per-module term pipeline,
//! printing and statistics.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use indexmap::IndexMap;

use crate::codec::encoded_len;
use crate::error::{EngineError, Error, Location, Result};
use crate::frontend::{ModuleUnit, Program, Statement, StatementKind};
use crate::rewrite::{self, apply_sequence, Executable, ExprLookup, Identify, RepeatBlock};
use crate::settings::Settings;
use crate::sort::{Sorter, SpillStats};
use crate::term::{format_magnitude, format_term, Declarations, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprScope {
    Local,
    /// Accepted for compatibility; behaves like a local expression.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprStatus {
    Active,
    Skipped,
    DropPending,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expression {
    pub name: String,
    pub scope: ExprScope,
    pub status: ExprStatus,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprStats {
    pub name: String,
    pub generated_terms: usize,
    pub terms_in_output: usize,
    pub bytes_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    /// Wall-clock seconds since the run started.
    pub elapsed: f64,
    pub expressions: Vec<ExprStats>,
}

/// What happened in one module, kept for inspection by callers and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleReport {
    pub index: usize,
    /// Expressions alive after the statements ran, before drops took effect.
    pub expressions_during: usize,
    pub expressions_after: usize,
    pub statistics: RunStatistics,
    pub spill: SpillStats,
}

#[derive(Debug)]
pub struct RunState {
    pub declarations: Declarations,
    pub expressions: IndexMap<String, Expression>,
    pub statistics_enabled: bool,
    pub module_index: usize,
    pub reports: Vec<ModuleReport>,
    start: Instant,
}

impl Default for RunState {
    fn default() -> Self {
        RunState::new()
    }
}

impl RunState {
    pub fn new() -> Self {
        RunState {
            declarations: Declarations::new(),
            expressions: IndexMap::new(),
            statistics_enabled: true,
            module_index: 0,
            reports: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn expression_terms(&self, name: &str) -> Option<&[Term]> {
        self.expressions.get(name).map(|e| e.terms.as_slice())
    }
}

struct Values<'a>(&'a IndexMap<String, Expression>);

impl ExprLookup for Values<'_> {
    fn expression(&self, name: &str) -> Option<&[Term]> {
        self.0.get(name).map(|e| e.terms.as_slice())
    }
}

fn sink_error(source: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<output>"),
        source,
    }
}

fn engine(at: &Location, source: EngineError) -> Error {
    Error::Engine { at: at.clone(), source }
}

/// Writes an expression in the log layout: a blank line, `NAME =`, then one
/// term per line with the sign of the following term at the line end.
pub fn print_expression(name: &str, terms: &[Term], decls: &Declarations, sink: &mut dyn Write) -> std::io::Result<()> {
    writeln!(sink)?;
    writeln!(sink, "{name} =")?;
    if terms.is_empty() {
        return writeln!(sink, "   0;");
    }
    for (i, t) in terms.iter().enumerate() {
        let body = if i == 0 {
            format_term(t, decls)
        } else {
            format_magnitude(t, decls)
        };
        let end = match terms.get(i + 1) {
            None => ";",
            Some(next) if next.coeff.is_negative() => " -",
            Some(_) => " +",
        };
        writeln!(sink, "   {body}{end}")?;
    }
    Ok(())
}

pub fn emit_statistics(elapsed: f64, st: &ExprStats, sink: &mut dyn Write) -> std::io::Result<()> {
    writeln!(sink)?;
    writeln!(
        sink,
        "Time = {elapsed:.2} sec   Generated terms = {}",
        st.generated_terms
    )?;
    writeln!(sink, "{}   Terms in output = {}", st.name, st.terms_in_output)?;
    writeln!(sink, "   Bytes used = {}", st.bytes_used)
}

fn lookup<'m>(exprs: &'m mut IndexMap<String, Expression>, name: &str, at: &Location) -> Result<&'m mut Expression> {
    exprs
        .get_mut(name)
        .ok_or_else(|| Error::runtime(at, format!("unknown expression `{name}`")))
}

/// Runs one module against `state`, writing prints and statistics to `sink`.
pub fn execute_module(m: &ModuleUnit, state: &mut RunState, settings: &Settings, sink: &mut dyn Write) -> Result<()> {
    state.module_index += 1;
    let mut executables: Vec<Executable> = Vec::new();
    // open repeat blocks: (enclosing body, first line)
    let mut open: Vec<(Vec<Executable>, u32)> = Vec::new();
    let mut print_all = false;
    let mut print_names: Vec<(String, Location)> = Vec::new();

    for Statement { kind, at } in &m.statements {
        match kind {
            StatementKind::Symbols(names) => {
                for n in names {
                    state
                        .declarations
                        .declare_symbol(n)
                        .map_err(|msg| Error::compile(at, msg))?;
                }
            }
            StatementKind::Functions(names) => {
                for n in names {
                    state
                        .declarations
                        .declare_function(n)
                        .map_err(|msg| Error::compile(at, msg))?;
                }
            }
            StatementKind::Local { name, global, rhs } => {
                if state.expressions.contains_key(name) {
                    return Err(Error::runtime(at, format!("expression `{name}` is already defined")));
                }
                if state.declarations.lookup(name).is_some() {
                    return Err(Error::compile(
                        at,
                        format!("`{name}` is already declared as a symbol or function"),
                    ));
                }
                let scope = rewrite::Scope {
                    decls: &state.declarations,
                    exprs: &Values(&state.expressions),
                    wildcards: &[],
                    at,
                };
                let terms = rewrite::evaluate(rhs, &scope)?;
                state.expressions.insert(
                    name.clone(),
                    Expression {
                        name: name.clone(),
                        scope: if *global { ExprScope::Global } else { ExprScope::Local },
                        status: ExprStatus::Active,
                        terms,
                    },
                );
            }
            StatementKind::Drop(names) => {
                for n in names {
                    lookup(&mut state.expressions, n, at)?.status = ExprStatus::DropPending;
                }
            }
            StatementKind::Skip(names) => {
                for n in names {
                    let e = lookup(&mut state.expressions, n, at)?;
                    if e.status == ExprStatus::Active {
                        e.status = ExprStatus::Skipped;
                    }
                }
            }
            StatementKind::Print(names) => {
                if names.is_empty() {
                    print_all = true;
                }
                print_names.extend(names.iter().map(|n| (n.clone(), at.clone())));
            }
            StatementKind::Statistics(on) => state.statistics_enabled = *on,
            StatementKind::Identify { lhs, rhs } => {
                let id = Identify::compile(lhs, rhs, &state.declarations, &Values(&state.expressions), at)?;
                let target = open.last_mut().map_or(&mut executables, |(body, _)| body);
                target.push(Executable::Id(id));
            }
            StatementKind::RepeatBegin => open.push((Vec::new(), at.line)),
            StatementKind::RepeatEnd => {
                let (body, first) = open
                    .pop()
                    .ok_or_else(|| Error::compile(at, "endrepeat without repeat"))?;
                let block = Executable::Repeat(RepeatBlock::new(body, (first, at.line)));
                let target = open.last_mut().map_or(&mut executables, |(b, _)| b);
                target.push(block);
            }
        }
    }
    if let Some((_, first)) = open.last() {
        let at = Location::new(m.at.file.clone(), *first);
        return Err(Error::compile(&at, "unbalanced repeat: no matching endrepeat"));
    }
    for (n, at) in &print_names {
        if !state.expressions.contains_key(n) {
            return Err(Error::runtime(at, format!("unknown expression `{n}`")));
        }
    }

    let expressions_during = state.expressions.len();
    let mut stats = Vec::new();
    let mut spill = SpillStats::default();
    for e in state.expressions.values_mut() {
        if e.status != ExprStatus::Active {
            continue;
        }
        let mut sorter = Sorter::new(settings);
        let mut generated = 0usize;
        for t in &e.terms {
            if executables.is_empty() {
                generated += 1;
                sorter.push(t.clone()).map_err(|err| engine(&m.at, err))?;
                continue;
            }
            let (out, _) = apply_sequence(&executables, t).map_err(|err| engine(&m.at, err))?;
            generated += out.len();
            for o in out {
                sorter.push(o).map_err(|err| engine(&m.at, err))?;
            }
        }
        let (terms, s) = sorter.finish().map_err(|err| engine(&m.at, err))?;
        spill.runs_written += s.runs_written;
        spill.bytes_spilled += s.bytes_spilled;
        e.terms = terms;
        stats.push(ExprStats {
            name: e.name.clone(),
            generated_terms: generated,
            terms_in_output: e.terms.len(),
            bytes_used: e.terms.iter().map(encoded_len).sum(),
        });
    }

    let elapsed = state.start.elapsed().as_secs_f64();
    if state.statistics_enabled {
        for st in &stats {
            emit_statistics(elapsed, st, sink).map_err(sink_error)?;
        }
    }
    for e in state.expressions.values() {
        let wanted = print_all || print_names.iter().any(|(n, _)| *n == e.name);
        if wanted && e.status == ExprStatus::Active {
            print_expression(&e.name, &e.terms, &state.declarations, sink).map_err(sink_error)?;
        }
    }

    state.expressions.retain(|_, e| e.status != ExprStatus::DropPending);
    for e in state.expressions.values_mut() {
        e.status = ExprStatus::Active;
    }
    state.reports.push(ModuleReport {
        index: state.module_index,
        expressions_during,
        expressions_after: state.expressions.len(),
        statistics: RunStatistics {
            elapsed,
            expressions: stats,
        },
        spill,
    });
    Ok(())
}

/// Runs every module of `program` in order, echoing each source line once
/// before the module that consumes it.
pub fn execute_program(program: &Program, sink: &mut dyn Write, settings: &Settings) -> Result<RunState> {
    let mut state = RunState::new();
    let mut echoed = 0usize;
    for m in &program.modules {
        while echoed < m.echo_end.min(program.echo.len()) {
            writeln!(sink, "{}", program.echo_line(echoed)).map_err(sink_error)?;
            echoed += 1;
        }
        execute_module(m, &mut state, settings, sink)?;
    }
    sink.flush().map_err(sink_error)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile;

    fn run(src: &str) -> Result<(String, RunState)> {
        let settings = Settings::default();
        let program = compile("t.frm", None, src, &settings)?;
        let mut out = Vec::new();
        let state = execute_program(&program, &mut out, &settings)?;
        Ok((String::from_utf8(out).unwrap(), state))
    }

    #[test]
    fn drop_and_skip() {
        let src = "nwrite statistics;\nLocal T1 = 1;\nLocal T2 = 1;\nLocal T3 = 2;\n.sort\ndrop T1;\nskip T2;\nskip T3;\nLocal T4 = T1+T2+T3;\nprint;\n.end\n";
        let (out, state) = run(src).unwrap();
        assert!(out.ends_with("\nT4 =\n   4;\n"), "{out}");
        assert!(!out.contains("\nT2 =\n"));
        assert!(state.expressions.get("T1").is_none());
        assert_eq!(state.expressions.keys().collect::<Vec<_>>(), ["T2", "T3", "T4"]);
        assert_eq!(state.reports[1].expressions_during, 4);
        assert_eq!(state.reports[1].expressions_after, 3);
    }

    #[test]
    fn duplicate_local() {
        let e = run("Local a = 1;\nLocal a = 2;\n.end\n").unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("t.frm:2"), "{e}");
    }

    #[test]
    fn unknown_expression() {
        assert!(run("drop nothere;\n.end\n").is_err());
        assert!(run("print nothere;\n.end\n").is_err());
        assert!(run("Local a = b;\n.end\n").is_err());
    }

    #[test]
    fn empty_module_is_noop() {
        let (_, state) = run("Local a = 3;\n.sort\n.sort\n.end\n").unwrap();
        assert_eq!(state.expression_terms("a").unwrap().len(), 1);
        assert_eq!(state.reports.len(), 3);
    }

    #[test]
    fn statistics_block() {
        let (out, _) = run("Symbols x;\nLocal e = x + 1;\n.sort\nid x = -1;\n.end\n").unwrap();
        assert!(out.contains("e   Terms in output = 2\n"), "{out}");
        assert!(out.contains("e   Terms in output = 0\n"), "{out}");
        assert!(out.contains("Generated terms = 2"), "{out}");
        let (out, _) = run("nwrite statistics;\nSymbols x;\nLocal e = x;\n.end\n").unwrap();
        assert!(!out.contains("Time ="));
    }

    #[test]
    fn print_layout() {
        let (out, _) =
            run("nwrite statistics;\nSymbols x, y;\nLocal e = (x - y)^2;\nLocal z = x - x;\nprint;\n.end\n").unwrap();
        assert!(out.contains("\ne =\n   x^2 -\n   2*x*y +\n   y^2;\n"), "{out}");
        assert!(out.contains("\nz =\n   0;\n"), "{out}");
    }

    #[test]
    fn value_capture() {
        let src =
            "nwrite statistics;\nSymbols x;\nLocal a = x + 1;\nLocal b = a^2;\n.sort\ndrop a;\n.sort\nprint;\n.end\n";
        let (out, state) = run(src).unwrap();
        assert!(out.contains("b =\n   x^2 +\n   2*x +\n   1;"), "{out}");
        assert!(state.expressions.get("a").is_none());
    }

    #[test]
    fn echo_once_in_order() {
        let src = "* header\nnwrite statistics;\nLocal a = 1;\nprint;\n.end\ntrailing text is not echoed\n";
        let r = run(src);
        // text after .end is rejected at compile time
        assert!(r.is_err());
        let (out, _) = run("* header\nnwrite statistics;\nLocal a = 1;\nprint;\n.end\n").unwrap();
        assert_eq!(
            out,
            "* header\nnwrite statistics;\nLocal a = 1;\nprint;\n.end\n\na =\n   1;\n"
        );
    }
}
