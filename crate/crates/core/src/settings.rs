//! `form.set` parsing and settings resolution.
//!
//! A settings file holds one `Keyword value` pair per line. Keywords are
//! case-insensitive. Lines beginning with the comment character (default
//! `*`) are ignored; `CommentChar` changes it for the rest of the file and
//! for programs run under the resulting settings.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const SETTINGS_FILE_NAME: &str = "form.set";
pub const DEFAULT_SYSTEM_SETTINGS: &str = "/etc/form.set";

const KIB: usize = 1024;
const MIB: usize = 1024 * KIB;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    pub temp_dir: PathBuf,
    pub include_dirs: Vec<PathBuf>,
    pub comment_char: char,
    /// In-memory sort buffer budget in bytes; beyond it runs spill to disk.
    pub small_size: usize,
    pub large_size: usize,
    pub max_term_size: usize,
    pub work_space: usize,
    /// Keys that were accepted but have no effect here.
    pub unknown_keys: Vec<(String, String)>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            temp_dir: std::env::temp_dir(),
            include_dirs: Vec::new(),
            comment_char: '*',
            small_size: 16 * MIB,
            large_size: 256 * MIB,
            max_term_size: 64 * KIB,
            work_space: 64 * MIB,
            unknown_keys: Vec::new(),
        }
    }
}

/// The keys set by one settings file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SettingsOverlay {
    pub temp_dir: Option<PathBuf>,
    pub include_dirs: Option<Vec<PathBuf>>,
    pub comment_char: Option<char>,
    pub small_size: Option<usize>,
    pub large_size: Option<usize>,
    pub max_term_size: Option<usize>,
    pub work_space: Option<usize>,
    pub unknown_keys: Vec<(String, String)>,
}

impl SettingsOverlay {
    pub fn is_empty(&self) -> bool {
        *self == SettingsOverlay::default()
    }
}

impl Settings {
    pub fn apply(&mut self, overlay: SettingsOverlay) {
        if let Some(v) = overlay.temp_dir {
            self.temp_dir = v;
        }
        if let Some(v) = overlay.include_dirs {
            self.include_dirs = v;
        }
        if let Some(v) = overlay.comment_char {
            self.comment_char = v;
        }
        if let Some(v) = overlay.small_size {
            self.small_size = v;
        }
        if let Some(v) = overlay.large_size {
            self.large_size = v;
        }
        if let Some(v) = overlay.max_term_size {
            self.max_term_size = v;
        }
        if let Some(v) = overlay.work_space {
            self.work_space = v;
        }
        self.unknown_keys.extend(overlay.unknown_keys);
    }
}

/// Parses a byte count with an optional `K`, `M` or `G` suffix (powers of 1024).
pub fn parse_size(value: &str) -> Option<usize> {
    let v = value.trim();
    let (digits, mult) = match v.chars().last()?.to_ascii_uppercase() {
        'K' => (&v[..v.len() - 1], KIB),
        'M' => (&v[..v.len() - 1], MIB),
        'G' => (&v[..v.len() - 1], 1024 * MIB),
        _ => (v, 1),
    };
    digits.parse::<usize>().ok()?.checked_mul(mult)
}

pub fn parse_settings_file(text: &str, origin: &str) -> Result<SettingsOverlay> {
    let mut overlay = SettingsOverlay::default();
    let mut comment = '*';
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let err = |msg: String| Error::Settings {
            origin: origin.to_string(),
            line: line_no,
            msg,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with(comment) {
            continue;
        }
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) if !v.trim().is_empty() => (k, v.trim()),
            _ => return Err(err(format!("`{line}` has no value"))),
        };
        let size = || parse_size(value).ok_or_else(|| err(format!("invalid value `{value}` for {key}")));
        match key.to_ascii_lowercase().as_str() {
            "tempdir" => overlay.temp_dir = Some(PathBuf::from(value)),
            "incdir" => {
                overlay.include_dirs = Some(value.split(':').filter(|p| !p.is_empty()).map(PathBuf::from).collect())
            }
            "commentchar" => {
                let mut chars = value.chars();
                let c = match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_graphic() => c,
                    _ => {
                        return Err(err(format!(
                            "CommentChar must be one printable character, got `{value}`"
                        )))
                    }
                };
                if c == ';' {
                    return Err(err("CommentChar `;` collides with statement termination".into()));
                }
                comment = c;
                overlay.comment_char = Some(c);
            }
            "smallsize" => overlay.small_size = Some(size()?),
            "largesize" => overlay.large_size = Some(size()?),
            "maxtermsize" => overlay.max_term_size = Some(size()?),
            "workspace" => overlay.work_space = Some(size()?),
            _ => overlay.unknown_keys.push((key.to_string(), value.to_string())),
        }
    }
    Ok(overlay)
}

/// Where the effective settings came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SettingsSource {
    Local(PathBuf),
    Flag(PathBuf),
    System(PathBuf),
    BuiltIn,
}

fn load(path: &Path) -> Result<SettingsOverlay> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings_file(&text, &path.display().to_string())
}

/// Resolves the settings for one input file. Precedence, highest first:
/// `form.set` beside the input, the `-s` file, the system default file,
/// built-in defaults. Exactly one file is read. `-t` overrides the
/// temporary directory in every case.
pub fn resolve_settings(
    input: &Path,
    flag_s: Option<&Path>,
    flag_t: Option<&Path>,
    system_default: Option<&Path>,
) -> Result<(Settings, SettingsSource)> {
    if let Some(s) = flag_s {
        if !s.is_file() {
            return Err(Error::Io {
                path: s.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "settings file not found"),
            });
        }
    }
    let dir = match input.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let local = dir.join(SETTINGS_FILE_NAME);
    let source = if local.is_file() {
        SettingsSource::Local(local)
    } else if let Some(s) = flag_s {
        SettingsSource::Flag(s.to_path_buf())
    } else if let Some(sys) = system_default.filter(|p| p.is_file()) {
        SettingsSource::System(sys.to_path_buf())
    } else {
        SettingsSource::BuiltIn
    };
    let mut settings = Settings::default();
    match &source {
        SettingsSource::Local(p) | SettingsSource::Flag(p) | SettingsSource::System(p) => settings.apply(load(p)?),
        SettingsSource::BuiltIn => {}
    }
    if let Some(t) = flag_t {
        settings.temp_dir = t.to_path_buf();
    }
    Ok((settings, source))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_SET: &str = "*\n* form.set - global FORM config\n*\n* setting up temporary directory\nTempDir /tmp\n* where to look for external code\nInCDir /usr/share/form:/scratch\n";

    #[test]
    fn parses_minimal_configuration() {
        let o = parse_settings_file(SAMPLE_SET, "form.set").unwrap();
        assert_eq!(o.temp_dir, Some(PathBuf::from("/tmp")));
        assert_eq!(
            o.include_dirs,
            Some(vec![PathBuf::from("/usr/share/form"), PathBuf::from("/scratch")])
        );
    }

    #[test]
    fn comment_only_is_empty() {
        assert!(parse_settings_file("* comment only", "t").unwrap().is_empty());
    }

    #[test]
    fn invalid_number() {
        let e = parse_settings_file("SmallSize notanumber", "t").unwrap_err();
        assert!(e.to_string().contains("invalid value"), "{e}");
        assert!(parse_settings_file("TempDir", "t").is_err());
    }

    #[test]
    fn sizes_and_case() {
        let o = parse_settings_file("smallsize 4K\nMAXTERMSIZE 2m\nWorkSpace 100", "t").unwrap();
        assert_eq!(o.small_size, Some(4096));
        assert_eq!(o.max_term_size, Some(2 * MIB));
        assert_eq!(o.work_space, Some(100));
    }

    #[test]
    fn unknown_keys_are_warnings() {
        let o = parse_settings_file("MaxWildcards 100\nBracketIndexSize 2000", "t").unwrap();
        assert_eq!(o.unknown_keys.len(), 2);
        assert_eq!(o.unknown_keys[0], ("MaxWildcards".into(), "100".into()));
    }

    #[test]
    fn comment_char_switches_mid_file() {
        let o = parse_settings_file("CommentChar #\n# TempDir /nope\n* this is not a comment now", "t");
        // `*` lines are no longer comments, so `*` becomes an unknown key
        let o = o.unwrap();
        assert_eq!(o.comment_char, Some('#'));
        assert_eq!(o.temp_dir, None);
        assert_eq!(o.unknown_keys.len(), 1);
    }

    #[test]
    fn comment_char_semicolon_rejected() {
        let e = parse_settings_file("CommentChar ;", "t").unwrap_err();
        assert!(e.to_string().contains("collides"));
    }

    #[test]
    fn any_other_printable_comment_char_round_trips() {
        for c in (b'!'..=b'~').map(char::from).filter(|&c| c != ';') {
            let o = parse_settings_file(&format!("CommentChar {c}\n{c} ignored line"), "t").unwrap();
            assert_eq!(o.comment_char, Some(c));
            assert!(o.unknown_keys.is_empty(), "{c}");
        }
    }
}
