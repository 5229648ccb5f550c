use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use miniform_cli::{main_with, plan_run};
use miniform_core::settings::SettingsSource;

fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn copy_program(name: &str, dir: &Path) -> PathBuf {
    let dst = dir.join(name);
    fs::copy(programs_dir().join(name), &dst).unwrap();
    dst
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_miniform"));
    c.env("MINIFORM_SET", "/nonexistent/form.set");
    c
}

#[test]
fn log_equals_stdout() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["example1.frm", "example2.frm"] {
        let input = copy_program(name, dir.path());
        let out = bin().arg(&input).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let log = fs::read(input.with_extension("log")).unwrap();
        assert_eq!(out.stdout, log, "{name}");
        assert!(String::from_utf8(log).unwrap().starts_with("miniform version "));
    }
}

#[test]
fn failing_run_still_tees_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.frm");
    fs::write(&input, "Local a = 1;\nfrobnicate a;\n.end\n").unwrap();
    let out = bin().arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let log = fs::read(dir.path().join("bad.log")).unwrap();
    assert_eq!(out.stdout, log);
    assert!(String::from_utf8(log).unwrap().contains("bad.frm:2"));
}

#[test]
fn usage_without_inputs() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("Correct use is 'miniform [-options] inputfile'"));
    assert!(err.contains("You must specify an input file."));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let ok = write("ok.frm", "Local a = 1;\nprint;\n.end\n");
    let compile = write("compile.frm", "Local a = 1;\n.sort\n");
    let code = |args: &[&Path]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&[&ok]), Some(0));
    assert_eq!(code(&[&compile]), Some(2));
    assert_eq!(code(&[&dir.path().join("missing.frm")]), Some(4));
    let runtime = write("runtime.frm", "Symbols x;\nLocal a = 1/(1-1);\n.end\n");
    let mut sink = Vec::new();
    let mut err = Vec::new();
    assert_eq!(main_with([runtime.as_os_str()], None, &mut sink, &mut err), 3);
}

#[test]
fn unwritable_log_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prog");
    fs::write(&input, "Local a = 1;\nprint;\n.end\n").unwrap();
    fs::create_dir(dir.path().join("prog.log")).unwrap();
    let out = bin().arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());
}

#[test]
fn input_without_extension_gets_log_suffix() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prog");
    fs::write(&input, "Local a = 1;\nprint;\n.end\n").unwrap();
    assert!(bin().arg(&input).status().unwrap().success());
    assert!(dir.path().join("prog.log").is_file());
}

#[test]
fn multiple_inputs_run_in_order_and_stop_at_first_failure() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("sub");
    fs::create_dir(&sub).unwrap();
    let f1 = dir.path().join("f1.frm");
    let f2 = sub.join("f2.frm");
    let bad = dir.path().join("bad.frm");
    let f3 = dir.path().join("f3.frm");
    fs::write(&f1, "Local one = 1;\nprint;\n.end\n").unwrap();
    fs::write(&f2, "Local two = 2;\nprint;\n.end\n").unwrap();
    fs::write(&bad, "Local a = 1;\n").unwrap();
    fs::write(&f3, "Local three = 3;\nprint;\n.end\n").unwrap();

    let out = bin().args([&f1, &f2]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.find("one =").unwrap() < text.find("two =").unwrap());
    assert!(dir.path().join("f1.log").is_file());
    assert!(sub.join("f2.log").is_file());

    let out = bin().args([&f1, &bad, &f3]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("f3.log").exists());
}

#[test]
fn plan_has_one_entry_per_input() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["f1.frm", "f2.frm", "f3.frm"];
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.path().join(n)).collect();
    for p in &paths {
        fs::write(p, ".end\n").unwrap();
    }
    let plan = plan_run(paths.iter().map(|p| p.as_os_str()), None).unwrap();
    let logs: Vec<PathBuf> = plan.entries.iter().map(|e| e.log.clone()).collect();
    assert_eq!(
        logs,
        ["f1.log", "f2.log", "f3.log"].map(|n| dir.path().join(n)).to_vec()
    );
}

/// Precedence: local form.set > -s > system default > built-in, each with and without -t.
#[test]
fn settings_precedence_matrix() {
    let root = tempfile::tempdir().unwrap();
    let r = root.path();
    let sfile = r.join("flag.set");
    let sys = r.join("system.set");
    fs::write(&sfile, "TempDir /from/flag\n").unwrap();
    fs::write(&sys, "TempDir /from/system\n").unwrap();

    let cases = [
        ("local", true, true, true, "/from/local"),
        ("flag", false, true, true, "/from/flag"),
        ("system", false, false, true, "/from/system"),
        ("builtin", false, false, false, ""),
    ];
    for (label, local, flag, system, expected) in cases {
        let work = r.join(label);
        fs::create_dir(&work).unwrap();
        let input = work.join("in.frm");
        fs::write(&input, ".end\n").unwrap();
        if local {
            fs::write(work.join("form.set"), "TempDir /from/local\n").unwrap();
        }
        for with_t in [false, true] {
            let mut args: Vec<String> = Vec::new();
            if flag {
                args.extend(["-s".into(), sfile.display().to_string()]);
            }
            if with_t {
                args.extend(["-t".into(), "/scratch".into()]);
            }
            args.push(input.display().to_string());
            let system_path = if system {
                Some(sys.as_path())
            } else {
                Some(Path::new("/nonexistent/x.set"))
            };
            let plan = plan_run(&args, system_path).unwrap();
            let entry = &plan.entries[0];
            let source_ok = matches!(
                (&entry.source, label),
                (SettingsSource::Local(_), "local")
                    | (SettingsSource::Flag(_), "flag")
                    | (SettingsSource::System(_), "system")
                    | (SettingsSource::BuiltIn, "builtin")
            );
            assert!(source_ok, "{label}: {:?}", entry.source);
            let want = if with_t {
                PathBuf::from("/scratch")
            } else if expected.is_empty() {
                std::env::temp_dir()
            } else {
                PathBuf::from(expected)
            };
            assert_eq!(entry.settings.temp_dir, want, "{label} -t={with_t}");
        }
    }
}

#[test]
fn missing_settings_flag_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.frm");
    fs::write(&input, ".end\n").unwrap();
    let out = bin()
        .arg("-s")
        .arg(dir.path().join("nope.set"))
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn local_comment_char_applies_to_program() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("form.set"), "CommentChar !\n").unwrap();
    let input = dir.path().join("in.frm");
    fs::write(&input, "! a comment; .sort\nLocal a = 2;\nprint;\n.end\n").unwrap();
    let out = bin().arg(&input).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().contains("\na =\n   2;\n"));
}

#[test]
fn unknown_setting_warns_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("form.set"), "MaxNumbers 20\n").unwrap();
    let input = dir.path().join("in.frm");
    fs::write(&input, ".end\n").unwrap();
    let out = bin().arg(&input).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("MaxNumbers"));
}

#[test]
fn l_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.frm");
    fs::write(&input, ".end\n").unwrap();
    assert!(bin().arg("-l").arg(&input).status().unwrap().success());
}
