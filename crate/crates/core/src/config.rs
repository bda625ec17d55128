//! Run configuration: flat `key = value` lines grouped by `[section]`
//! headers. `#` starts a comment. Keys before any header belong to
//! `[experiment]`.
//!
//! ```text
//! [experiment]
//! schemes = scheme1_anc, scheme2_fnc
//! constellation = 4qam
//! fading = rician
//! rician_k = 10
//! snr_db = 0:5:30          # start:step:end, or a comma list
//! min_errors = 200
//! max_trials = 10000000
//! seed = 7
//!
//! [run]
//! workers = 4
//! out = results
//! catalog_cache = results/catalogs
//! ```

use crate::channel::Fading;
use crate::constellation::Constellation;
use crate::engine::{ExperimentSpec, Scheme, StopRule};
use std::collections::HashMap;
use std::path::PathBuf;
use thiserror::Error;

/// Largest number of points an SNR range may expand to.
const MAX_GRID: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}` (line {line}): {message}")]
    Value {
        key: String,
        line: usize,
        message: String,
    },
    #[error("missing required key `{0}`")]
    Missing(String),
}

impl ConfigError {
    /// The key the error is about, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Value { key, .. } | ConfigError::Missing(key) => Some(key),
            ConfigError::Syntax { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// One experiment per requested scheme, sharing every other setting.
    pub experiments: Vec<ExperimentSpec>,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub catalog_cache: Option<PathBuf>,
}

const EXPERIMENT_KEYS: [&str; 8] = [
    "schemes",
    "constellation",
    "fading",
    "rician_k",
    "snr_db",
    "min_errors",
    "max_trials",
    "seed",
];
const RUN_KEYS: [&str; 3] = ["workers", "out", "catalog_cache"];

struct Entry {
    value: String,
    line: usize,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut section = "experiment".to_string();
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: "unterminated section header".into(),
                })?
                .trim();
            if name != "experiment" && name != "run" {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown section `{name}`"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let allowed: &[&str] = if section == "run" {
            &RUN_KEYS
        } else {
            &EXPERIMENT_KEYS
        };
        if !allowed.contains(&key) {
            return Err(ConfigError::Value {
                key: key.to_string(),
                line,
                message: format!("unknown key in [{section}]"),
            });
        }
        if entries
            .insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            )
            .is_some()
        {
            return Err(ConfigError::Value {
                key: key.to_string(),
                line,
                message: "duplicate key".into(),
            });
        }
    }
    build(&entries)
}

fn value_err(key: &str, e: &Entry, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        line: e.line,
        message: message.into(),
    }
}

fn required<'a>(entries: &'a HashMap<String, Entry>, key: &str) -> Result<&'a Entry, ConfigError> {
    entries
        .get(key)
        .ok_or_else(|| ConfigError::Missing(key.to_string()))
}

fn parsed<T: std::str::FromStr>(
    entries: &HashMap<String, Entry>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    entries
        .get(key)
        .map(|e| {
            e.value
                .parse::<T>()
                .map_err(|_| value_err(key, e, format!("cannot parse `{}`", e.value)))
        })
        .transpose()
}

fn build(entries: &HashMap<String, Entry>) -> Result<RunConfig, ConfigError> {
    let schemes_entry = required(entries, "schemes")?;
    let mut schemes = Vec::new();
    for name in schemes_entry.value.split(',').map(str::trim) {
        let s: Scheme = name
            .parse()
            .map_err(|m: String| value_err("schemes", schemes_entry, m))?;
        if schemes.contains(&s) {
            return Err(value_err(
                "schemes",
                schemes_entry,
                format!("scheme `{name}` listed twice"),
            ));
        }
        schemes.push(s);
    }

    let c_entry = required(entries, "constellation")?;
    Constellation::by_name(&c_entry.value, None)
        .map_err(|e| value_err("constellation", c_entry, e.to_string()))?;

    let k: Option<f64> = parsed(entries, "rician_k")?;
    let fading = match entries.get("fading").map(|e| (e, e.value.as_str())) {
        None | Some((_, "rayleigh")) => {
            if k.is_some_and(|k| k != 0.0) {
                let e = &entries["rician_k"];
                return Err(value_err(
                    "rician_k",
                    e,
                    "set `fading = rician` to use a Rician factor",
                ));
            }
            Fading::Rayleigh
        }
        Some((e, "rician")) => {
            let k = k.ok_or_else(|| ConfigError::Missing("rician_k".into()))?;
            Fading::rician(k).map_err(|err| {
                value_err(
                    "rician_k",
                    entries.get("rician_k").unwrap_or(e),
                    err.to_string(),
                )
            })?
        }
        Some((e, other)) => {
            return Err(value_err("fading", e, format!("unknown fading `{other}`")))
        }
    };

    let snr_entry = required(entries, "snr_db")?;
    let snr_db = parse_grid(&snr_entry.value).map_err(|m| value_err("snr_db", snr_entry, m))?;

    let defaults = StopRule::default();
    let stop = StopRule {
        min_errors: parsed(entries, "min_errors")?.unwrap_or(defaults.min_errors),
        max_trials: parsed(entries, "max_trials")?.unwrap_or(defaults.max_trials),
    };
    for (key, v) in [
        ("min_errors", stop.min_errors),
        ("max_trials", stop.max_trials),
    ] {
        if v == 0 {
            return Err(value_err(key, &entries[key], "must be positive"));
        }
    }
    let seed = parsed(entries, "seed")?.unwrap_or(1);

    let workers: Option<usize> = parsed(entries, "workers")?;
    if workers == Some(0) {
        return Err(value_err(
            "workers",
            &entries["workers"],
            "must be positive",
        ));
    }
    let out_dir = entries
        .get("out")
        .map_or_else(|| PathBuf::from("plnc-out"), |e| PathBuf::from(&e.value));
    let catalog_cache = entries
        .get("catalog_cache")
        .map(|e| PathBuf::from(&e.value));

    let experiments = schemes
        .into_iter()
        .map(|scheme| ExperimentSpec {
            scheme,
            constellation: c_entry.value.clone(),
            fading,
            snr_db: snr_db.clone(),
            stop,
            seed,
        })
        .collect();
    Ok(RunConfig {
        experiments,
        out_dir,
        workers,
        catalog_cache,
    })
}

/// `a, b, c` or `start:step:end` (inclusive); must be strictly increasing.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| -> Result<f64, String> {
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| format!("bad number `{}`", t.trim()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value `{}`", t.trim()))
        }
    };
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, step, b] = parts.as_slice() else {
            return Err("range must be start:step:end".into());
        };
        let (a, step, b) = (num(a)?, num(step)?, num(b)?);
        if step <= 0.0 || b < a {
            return Err("range needs a positive step and end >= start".into());
        }
        let n = ((b - a) / step + 1e-9).floor();
        if n >= MAX_GRID as f64 {
            return Err(format!("range has more than {MAX_GRID} points"));
        }
        (0..=n as usize).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("grid must be non-empty and strictly increasing".into());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# comment line
schemes = scheme1_anc, scheme2_fnc
constellation = 4qam
fading = rician
rician_k = 10   # line of sight
snr_db = 0:5:20
min_errors = 100
seed = 42

[run]
workers = 2
out = results
";

    #[test]
    fn full_config() {
        let cfg = parse_config(FULL).unwrap();
        assert_eq!(cfg.experiments.len(), 2);
        let e = &cfg.experiments[1];
        assert_eq!(e.scheme, Scheme::Scheme2Fnc);
        assert_eq!(e.fading, Fading::Rician { k: 10.0 });
        assert_eq!(e.snr_db, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(e.stop.min_errors, 100);
        assert_eq!(e.stop.max_trials, StopRule::default().max_trials);
        assert_eq!(e.seed, 42);
        assert_eq!(cfg.workers, Some(2));
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
        assert_eq!(cfg.catalog_cache, None);
    }

    #[test]
    fn unknown_scheme_names_key() {
        let err = parse_config("schemes = scheme9\nconstellation = 4qam\nsnr_db = 1").unwrap_err();
        assert_eq!(err.key(), Some("schemes"));
        assert!(err.to_string().contains("scheme9"));
    }

    #[test]
    fn errors_point_at_keys() {
        let base = "schemes = p2p_siso\nconstellation = 4qam\nsnr_db = 1\n";
        for (extra, key) in [
            ("min_errors = -3\n", "min_errors"),
            ("seed = x\n", "seed"),
            ("fading = nakagami\n", "fading"),
            ("colour = red\n", "colour"),
            ("[run]\nworkers = 0\n", "workers"),
        ] {
            let err = parse_config(&format!("{base}{extra}")).unwrap_err();
            assert_eq!(err.key(), Some(key), "{extra}");
        }
        assert_eq!(
            parse_config("schemes = p2p_siso\nsnr_db = 1")
                .unwrap_err()
                .key(),
            Some("constellation")
        );
        let dup = parse_config(&format!("{base}seed = 1\nseed = 2\n")).unwrap_err();
        assert!(dup.to_string().contains("duplicate"));
        assert!(matches!(
            parse_config("[weird]\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("novalue\n"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("5").unwrap(), vec![5.0]);
        assert_eq!(parse_grid("0, 2.5, 5").unwrap(), vec![0.0, 2.5, 5.0]);
        assert_eq!(parse_grid("20:5:30").unwrap(), vec![20.0, 25.0, 30.0]);
        assert!(parse_grid("3, 1").is_err());
        assert!(parse_grid("0:0:5").is_err());
        assert!(parse_grid("0:1e-9:1e9").is_err());
        assert!(parse_grid("nan").is_err());
        assert!(parse_grid("").is_err());
    }
}
