//! Command-line driver: argument handling, per-file settings resolution,
//! log naming and tee'd execution.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use miniform_core::settings::{resolve_settings, Settings, SettingsSource, DEFAULT_SYSTEM_SETTINGS};
use miniform_core::{compile_file, execute_program, Error, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 4;

/// Environment variable naming the system default settings file.
pub const SYSTEM_SETTINGS_ENV: &str = "MINIFORM_SET";

const USAGE_LINE: &str = "Correct use is 'miniform [-options] inputfile'";

const AFTER_HELP: &str = "\
Settings are read from exactly one file per input: form.set beside the input,
else the -s file, else the system default ($MINIFORM_SET or /etc/form.set),
else built-in defaults (SmallSize 16M, LargeSize 256M, MaxTermSize 64K,
WorkSpace 64M). -t overrides TempDir in every case.

Each input's output goes to standard output and to a log beside the input
(input.frm -> input.log). Inputs run in order; the first failing input stops
the run and its exit status is returned.

Exit status: 0 success, 1 usage, 2 compile error, 3 runtime error, 4 I/O or
settings error.";

#[derive(Debug, Parser)]
#[command(name = "miniform", version, about = "Batch interpreter for a FORM dialect", after_help = AFTER_HELP)]
struct Args {
    /// Settings file used when no form.set sits beside the input.
    #[arg(short = 's', value_name = "settingsfile")]
    settings: Option<PathBuf>,
    /// Directory for temporary sort files.
    #[arg(short = 't', value_name = "tempdir")]
    temp_dir: Option<PathBuf>,
    /// Accepted for compatibility; a log is always written.
    #[arg(short = 'l')]
    log: bool,
    files: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct PlanEntry {
    pub input: PathBuf,
    pub log: PathBuf,
    pub settings: Settings,
    pub source: SettingsSource,
}

#[derive(Debug)]
pub struct RunPlan {
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug)]
pub enum PlanError {
    /// Help or version output requested; not a failure.
    Info(String),
    Usage(String),
    Setup(Error),
}

impl PlanError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PlanError::Info(_) => EXIT_OK,
            PlanError::Usage(_) => EXIT_USAGE,
            PlanError::Setup(e) => e.exit_code(),
        }
    }
}

/// `dir/name.frm` -> `dir/name.log`; other names get `.log` appended.
pub fn log_path(input: &Path) -> PathBuf {
    let s = input.as_os_str().to_string_lossy();
    let stem = s.strip_suffix(".frm").unwrap_or(&s);
    PathBuf::from(format!("{stem}.log"))
}

/// Parses arguments (without the program name) and resolves settings for
/// every input file.
pub fn plan_run<I, T>(args: I, system_default: Option<&Path>) -> Result<RunPlan, PlanError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("miniform")).chain(args.into_iter().map(Into::into));
    let args = Args::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => PlanError::Info(e.to_string()),
        _ => PlanError::Usage(format!("{}{USAGE_LINE}", e.render())),
    })?;
    if args.files.is_empty() {
        return Err(PlanError::Usage(format!(
            "{USAGE_LINE}\nYou must specify an input file."
        )));
    }
    let mut entries = Vec::with_capacity(args.files.len());
    for input in args.files {
        if !input.is_file() {
            return Err(PlanError::Setup(Error::Io {
                source: io::Error::new(io::ErrorKind::NotFound, "input file not found"),
                path: input,
            }));
        }
        let (settings, source) = resolve_settings(
            &input,
            args.settings.as_deref(),
            args.temp_dir.as_deref(),
            system_default,
        )
        .map_err(PlanError::Setup)?;
        entries.push(PlanEntry {
            log: log_path(&input),
            input,
            settings,
            source,
        });
    }
    Ok(RunPlan { entries })
}

/// Duplicates everything written to two sinks.
pub struct Tee<A: Write, B: Write> {
    a: A,
    b: B,
}

impl<A: Write, B: Write> Tee<A, B> {
    pub fn new(a: A, b: B) -> Self {
        Tee { a, b }
    }

    pub fn into_inner(self) -> (A, B) {
        (self.a, self.b)
    }
}

impl<A: Write, B: Write> Write for Tee<A, B> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.a.write_all(buf)?;
        self.b.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.a.flush()?;
        self.b.flush()
    }
}

pub fn banner() -> String {
    let now = chrono::Local::now();
    format!(
        "miniform version {VERSION}  Run at: {}",
        now.format("%a %b %e %H:%M:%S %Y")
    )
}

/// Runs one plan entry with output tee'd to `out` and the entry's log file.
pub fn run_entry(entry: &PlanEntry, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let log = match File::create(&entry.log) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "miniform: cannot write log {}: {e}", entry.log.display());
            return EXIT_IO;
        }
    };
    for (k, v) in &entry.settings.unknown_keys {
        let _ = writeln!(err, "miniform: warning: setting {k} {v} has no effect");
    }
    let mut tee = Tee::new(out, BufWriter::new(log));
    let result = writeln!(tee, "{}", banner())
        .map_err(|source| Error::Io {
            path: entry.log.clone(),
            source,
        })
        .and_then(|_| compile_file(&entry.input, &entry.settings))
        .and_then(|program| execute_program(&program, &mut tee, &entry.settings));
    let code = match result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(tee, "miniform: {e}");
            e.exit_code()
        }
    };
    if let Err(e) = tee.flush() {
        let _ = writeln!(err, "miniform: cannot write log {}: {e}", entry.log.display());
        return if code == EXIT_OK { EXIT_IO } else { code };
    }
    code
}

/// Runs entries in order, stopping at the first failure.
pub fn run(plan: &RunPlan, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    for entry in &plan.entries {
        let code = run_entry(entry, out, err);
        if code != EXIT_OK {
            return code;
        }
    }
    EXIT_OK
}

/// Whole-program entry point with injectable streams and system settings path.
pub fn main_with<I, T>(args: I, system_default: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match plan_run(args, system_default) {
        Ok(plan) => run(&plan, out, err),
        Err(e) => {
            match &e {
                PlanError::Info(text) => {
                    let _ = write!(out, "{text}");
                }
                PlanError::Usage(text) => {
                    let _ = writeln!(err, "{text}");
                }
                PlanError::Setup(inner) => {
                    let _ = writeln!(err, "miniform: {inner}");
                }
            }
            e.exit_code()
        }
    }
}

/// The system default settings path: `$MINIFORM_SET` if set, else `/etc/form.set`.
pub fn system_settings_path() -> PathBuf {
    std::env::var_os(SYSTEM_SETTINGS_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SYSTEM_SETTINGS))
}
