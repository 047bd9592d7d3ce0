//! Settings resolution: CLI flag > config file > environment (seed only) >
//! built-in default. Every resolved value is recorded and echoed to
//! `effective-config.txt` in the output directory, so a run's full parameter
//! set lives next to its artifacts.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Environment variable consulted for the master seed when neither the
/// `--seed` flag nor a config-file `seed` entry is present.
pub const SEED_ENV: &str = "RANDSET_SEED";

/// Every key a config file may set, across all subcommands. Shared files are
/// fine; misspelled keys are not.
const KNOWN_KEYS: &[&str] = &[
    "ax-max",
    "ax-min",
    "bins",
    "bootstrap",
    "bx-max",
    "bx-min",
    "connectivity",
    "count-fixed",
    "count-mean",
    "depth",
    "discard-border",
    "fixed-side",
    "intensity",
    "invert",
    "k",
    "law-realisations",
    "min-pixels",
    "n",
    "orientation",
    "out",
    "p-delete",
    "pairs",
    "perimeter-law",
    "permutations",
    "radius",
    "radius-const",
    "radius-max",
    "radius-min",
    "ratio-law",
    "realisations",
    "repeats",
    "restrict",
    "seed",
    "threshold",
    "window",
];

#[derive(Debug)]
pub struct Settings {
    file: BTreeMap<String, String>,
    echo: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    /// Loads `key = value` lines; `#` starts a comment, blank lines are
    /// skipped. Unknown keys are rejected so typos surface immediately.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(path.to_path_buf(), e))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}:{}: expected `key = value`, got `{raw}`",
                        path.display(),
                        i + 1
                    ))
                })?;
                let key = key.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(CliError::Usage(format!(
                        "{}:{}: unknown config key `{key}`",
                        path.display(),
                        i + 1
                    )));
                }
                file.insert(key, value.trim().to_string());
            }
        }
        Ok(Settings {
            file,
            echo: RefCell::new(BTreeMap::new()),
        })
    }

    fn record(&self, key: &str, value: impl Display) {
        self.echo.borrow_mut().insert(key.to_string(), value.to_string());
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, CliError> {
        raw.parse().map_err(|_| {
            CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))
        })
    }

    /// Flag beats file beats `default`.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => self.parse(key, raw)?,
                None => default,
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Like `resolve` but with no default; absence is `None`.
    pub fn resolve_opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(self.parse(key, raw)?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    /// Boolean knob: a bare flag can only switch it on; the file form takes
    /// `true`/`false`.
    pub fn resolve_bool(&self, key: &str, flag: bool) -> Result<bool, CliError> {
        let value = if flag {
            true
        } else {
            match self.file.get(key) {
                Some(raw) => self.parse(key, raw)?,
                None => false,
            }
        };
        self.record(key, value);
        Ok(value)
    }

    /// Master seed: flag > file > RANDSET_SEED > 0.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get("seed") {
                Some(raw) => self.parse("seed", raw)?,
                None => match std::env::var(SEED_ENV) {
                    Ok(raw) => raw.parse().map_err(|_| {
                        CliError::Usage(format!("{SEED_ENV}: cannot parse `{raw}` as a seed"))
                    })?,
                    Err(_) => 0,
                },
            },
        };
        self.record("seed", value);
        Ok(value)
    }

    /// Output directory: flag > file > current directory. Created if absent.
    pub fn out_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        let dir = match flag {
            Some(v) => v,
            None => match self.file.get("out") {
                Some(raw) => PathBuf::from(raw),
                None => PathBuf::from("."),
            },
        };
        self.record("out", dir.display());
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
        Ok(dir)
    }

    /// Writes the resolved `key = value` lines, sorted, plus the command name.
    pub fn write_echo(&self, dir: &Path, command: &str) -> Result<(), CliError> {
        let mut out = format!("command = {command}\n");
        for (k, v) in self.echo.borrow().iter() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        let path = dir.join("effective-config.txt");
        fs::write(&path, out).map_err(|e| CliError::Io(path.clone(), e))
    }
}
