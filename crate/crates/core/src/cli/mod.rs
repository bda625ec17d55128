//! `plnc` command line: `simulate`, `catalog` and `verify`.

mod verify;

pub use verify::{run_checks, CheckResult};

use crate::config::{parse_config, RunConfig};
use crate::constellation::Constellation;
use crate::decode::TieRule;
use crate::engine::{
    build_catalog, estimate_sep_with, write_csv, EngineError, Manifest, ManifestCurve, Scheme,
    SchemeSetup,
};
use crate::netcode::{CatalogKind, MapCatalog, Target};
use clap::{Parser, Subcommand};
use std::collections::hash_map::{Entry, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "plnc",
    version,
    about = "Two-way relay network coding simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiments of a config file and write CSV curves plus a manifest.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config's `out`.
        #[arg(long, env = "PLNC_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Enumerate singular fades for a constellation and write the map catalog.
    Catalog {
        constellation: String,
        /// `siso`, `scheme2`, or any scheme name that uses a catalog.
        scheme: String,
        #[arg(long, env = "PLNC_OUT_DIR", default_value = "plnc-out")]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Verify {
        /// Make the conditional decoder break ties the wrong way.
        #[arg(long, hide = true)]
        flip_tie_break: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    ExitCode::from(match cli.command {
        Command::Simulate {
            config,
            workers,
            seed,
            out,
        } => simulate(&config, workers, seed, out),
        Command::Catalog {
            constellation,
            scheme,
            out,
        } => catalog(&constellation, &scheme, &out),
        Command::Verify { flip_tie_break } => verify(if flip_tie_break {
            TieRule::Last
        } else {
            TieRule::First
        }),
    })
}

fn simulate(path: &Path, workers: Option<usize>, seed: Option<u64>, out: Option<PathBuf>) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    if workers == Some(0) {
        eprintln!("error: --workers must be positive");
        return EXIT_CONFIG;
    }
    cfg.workers = workers.or(cfg.workers);
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    if let Some(seed) = seed {
        cfg.experiments.iter_mut().for_each(|e| e.seed = seed);
    }
    match run_simulation(&cfg) {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn run_simulation(cfg: &RunConfig) -> Result<(), (u8, String)> {
    let io = |what: &str, p: &Path, e: &dyn std::fmt::Display| {
        (EXIT_CONFIG, format!("{what} {}: {e}", p.display()))
    };
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io("cannot create", &cfg.out_dir, &e))?;
    let cache = cfg
        .catalog_cache
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("catalogs"));
    let Some(first) = cfg.experiments.first() else {
        return Err((EXIT_CONFIG, "no schemes requested".into()));
    };
    let base = Constellation::by_name(&first.constellation, None)
        .map_err(|e| (EXIT_CONFIG, e.to_string()))?;

    let mut catalogs: HashMap<CatalogKind, MapCatalog> = HashMap::new();
    let mut curves = Vec::new();
    for spec in &cfg.experiments {
        spec.validate().map_err(|e| (EXIT_CONFIG, e.to_string()))?;
        let catalog = match spec.scheme.catalog_kind() {
            Some(kind) => Some(match catalogs.entry(kind) {
                Entry::Occupied(e) => e.get().clone(),
                Entry::Vacant(e) => e
                    .insert(
                        cached_catalog(spec.scheme, &base, &cache)
                            .map_err(|e| (EXIT_FAILURE, e))?,
                    )
                    .clone(),
            }),
            None => None,
        };
        let setup = SchemeSetup::with_catalog(spec.scheme, &base, catalog)
            .map_err(|e| (EXIT_FAILURE, e.to_string()))?;
        let curve = estimate_sep_with(spec, &setup, cfg.workers).map_err(|e| match e {
            EngineError::Config(_) => (EXIT_CONFIG, e.to_string()),
            _ => (EXIT_FAILURE, e.to_string()),
        })?;
        let file = format!("{}.csv", spec.scheme);
        let path = cfg.out_dir.join(&file);
        let f = fs::File::create(&path).map_err(|e| io("cannot create", &path, &e))?;
        write_csv(&curve, f).map_err(|e| io("cannot write", &path, &e))?;
        println!("wrote {}", path.display());
        curves.push(ManifestCurve::new(&curve, file));
    }

    let manifest = Manifest {
        version: VERSION.to_string(),
        seed: first.seed,
        constellation: first.constellation.clone(),
        fading: first.fading.name().to_string(),
        rician_k: first.fading.k_factor(),
        snr_db: first.snr_db.clone(),
        min_errors: first.stop.min_errors,
        max_trials: first.stop.max_trials,
        curves,
    };
    let path = cfg.out_dir.join("manifest.json");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| io("cannot write", &path, &e))?;
    Ok(())
}

fn catalog_file_name(ma_set: &Constellation, kind: CatalogKind) -> String {
    format!("{}-{}-v{VERSION}.catalog", ma_set.name(), kind.as_str())
}

/// Loads the scheme's catalog from `dir`, or builds and stores it when the
/// file is missing or does not fit.
fn cached_catalog(scheme: Scheme, base: &Constellation, dir: &Path) -> Result<MapCatalog, String> {
    let kind = scheme.catalog_kind().ok_or("scheme has no catalog")?;
    let ma_set = scheme.ma_set(base).map_err(|e| e.to_string())?;
    let path = dir.join(catalog_file_name(&ma_set, kind));
    if let Ok(text) = fs::read_to_string(&path) {
        match MapCatalog::parse_text(&text) {
            Ok(cat) if cat.kind() == kind && cat.constellation() == &ma_set && !cat.is_empty() => {
                return Ok(cat)
            }
            _ => eprintln!("warning: rebuilding stale catalog {}", path.display()),
        }
    }
    let cat = build_catalog(scheme, base)
        .map_err(|e| e.to_string())?
        .ok_or("scheme has no catalog")?;
    // the cache is an optimisation, so failing to write it is not fatal
    if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(&path, cat.to_text())) {
        eprintln!("warning: cannot cache catalog at {}: {e}", path.display());
    }
    Ok(cat)
}

fn catalog(constellation: &str, scheme: &str, out: &Path) -> u8 {
    let kind = match scheme.parse::<CatalogKind>() {
        Ok(k) => Some(k),
        Err(_) => match scheme.parse::<Scheme>() {
            Ok(s) => s.catalog_kind(),
            Err(e) => {
                eprintln!("error: scheme: {e}");
                return EXIT_CONFIG;
            }
        },
    };
    let Some(kind) = kind else {
        eprintln!("error: scheme: `{scheme}` uses a fixed map and has no catalog");
        return EXIT_CONFIG;
    };
    let base = match Constellation::by_name(constellation, None) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: constellation: {e}");
            return EXIT_CONFIG;
        }
    };
    let representative = match kind {
        CatalogKind::Siso => Scheme::SisoAnc,
        CatalogKind::Scheme2 => Scheme::Scheme2Anc,
    };
    let cat = match build_catalog(representative, &base) {
        Ok(Some(cat)) => cat,
        Ok(None) => unreachable!("catalog schemes always build a catalog"),
        Err(e) => {
            eprintln!("error: map construction failed: {e}");
            return EXIT_FAILURE;
        }
    };
    let n_states = cat
        .entries()
        .iter()
        .filter(|e| matches!(e.target, Target::State(_)))
        .count();
    match kind {
        CatalogKind::Siso => println!("states: {n_states}"),
        CatalogKind::Scheme2 => println!("subspaces: {}", cat.len() - n_states),
    }
    if let Some((lo, hi)) = cat.color_range() {
        println!("colors: {lo}-{hi}");
    }
    let path = out.join(catalog_file_name(cat.constellation(), kind));
    if let Err(e) = fs::create_dir_all(out).and_then(|_| fs::write(&path, cat.to_text())) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_CONFIG;
    }
    println!("wrote {}", path.display());
    EXIT_OK
}

fn verify(rule: TieRule) -> u8 {
    let mut code = EXIT_OK;
    for r in run_checks(rule) {
        match r.failure {
            None => println!("ok {}", r.name),
            Some(msg) => {
                println!("FAIL {}: {msg}", r.name);
                code = EXIT_FAILURE;
            }
        }
    }
    code
}
