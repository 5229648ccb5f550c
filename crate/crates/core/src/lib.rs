//! Core of the miniform interpreter: exact coefficients, canonical terms,
//! sorting with disk spill, the rewriting engine, the program front end and
//! the module runtime.

pub mod codec;
pub mod coeff;
pub mod error;
pub mod frontend;
pub mod rewrite;
pub mod runtime;
pub mod settings;
pub mod sort;
pub mod term;

pub use coeff::Coefficient;
pub use error::{EngineError, Error, Location, Result};
pub use frontend::{compile, compile_file, Program};
pub use runtime::{execute_program, RunState};
pub use settings::{resolve_settings, Settings, SettingsSource};
pub use sort::{sort_merge, spill_sort, Sorter, SpillStats};
pub use term::{Argument, Declarations, FunctionApp, FunctionId, SymbolId, Term};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
