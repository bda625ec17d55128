//! Monte Carlo estimation of end-to-end symbol error probability.

mod io;
mod round;

pub use io::{read_csv, write_csv, Manifest, ManifestCurve, SepRecord};
pub use round::{build_catalog, scheme2_bc_set, siso_bc_sets, RoundOutcome, SchemeSetup};

use crate::channel::{draw_realization, ChannelError, Fading, Layout, NoiseModel};
use crate::constellation::{Constellation, ConstellationError};
use crate::netcode::{CatalogKind, NetcodeError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Trials per RNG stream.
pub const BATCH_TRIALS: u64 = 1000;
/// Batches run between two checks of the stop rule.
const CHUNK_BATCHES: u64 = 8;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Netcode(#[from] NetcodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Scheme1Anc,
    Scheme1Fnc,
    Scheme2Fnc,
    Scheme2Anc,
    SisoFnc,
    SisoAnc,
    P2pCiod2x1,
    P2pSiso,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::Scheme1Anc,
        Scheme::Scheme1Fnc,
        Scheme::Scheme2Fnc,
        Scheme::Scheme2Anc,
        Scheme::SisoFnc,
        Scheme::SisoAnc,
        Scheme::P2pCiod2x1,
        Scheme::P2pSiso,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Scheme1Anc => "scheme1_anc",
            Scheme::Scheme1Fnc => "scheme1_fnc",
            Scheme::Scheme2Fnc => "scheme2_fnc",
            Scheme::Scheme2Anc => "scheme2_anc",
            Scheme::SisoFnc => "siso_fnc",
            Scheme::SisoAnc => "siso_anc",
            Scheme::P2pCiod2x1 => "p2p_ciod_2x1",
            Scheme::P2pSiso => "p2p_siso",
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            Scheme::Scheme2Fnc | Scheme::Scheme2Anc | Scheme::P2pCiod2x1 => Layout::Two,
            _ => Layout::One,
        }
    }

    /// Symbol decisions per round: both symbols at both end nodes for relay
    /// schemes, two symbols for point-to-point links.
    pub fn symbols_per_trial(&self) -> u64 {
        match self {
            Scheme::P2pCiod2x1 | Scheme::P2pSiso => 2,
            _ => 4,
        }
    }

    pub fn catalog_kind(&self) -> Option<CatalogKind> {
        match self {
            Scheme::Scheme1Anc | Scheme::SisoAnc => Some(CatalogKind::Siso),
            Scheme::Scheme2Anc => Some(CatalogKind::Scheme2),
            _ => None,
        }
    }

    /// Set the end nodes transmit with: rotated for two-antenna senders.
    pub fn ma_set(&self, base: &Constellation) -> Result<Constellation, ConstellationError> {
        match self.layout() {
            Layout::Two => base.ciod_ready(),
            Layout::One => Ok(base.clone()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_trials: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 200,
            max_trials: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    pub constellation: String,
    pub fading: Fading,
    pub snr_db: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.snr_db.is_empty() {
            return Err(EngineError::Config("snr grid is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite())
            || self.snr_db.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(EngineError::Config(
                "snr grid must be finite and strictly increasing".into(),
            ));
        }
        if self.stop.min_errors == 0 || self.stop.max_trials == 0 {
            return Err(EngineError::Config(
                "stop rule needs min_errors and max_trials above zero".into(),
            ));
        }
        Constellation::by_name(&self.constellation, None)?;
        Ok(())
    }
}

/// Per-decision rates of the error decomposition at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Decomposition {
    /// Relay output wrong.
    pub cluster: f64,
    /// Broadcast symbol misdetected.
    pub bc: f64,
    /// Broadcast symbol misdetected while the relay output was right.
    pub bc_given_cluster: f64,
    /// Fraction of rounds with every relay output right.
    pub clean_rounds: f64,
    /// Rounds whose relay detector fell back to exhaustive search.
    pub fallbacks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepPoint {
    pub snr_db: f64,
    pub sep: f64,
    pub errors: u64,
    pub trials: u64,
    pub ci95: f64,
    /// Trial budget ran out before the error target was reached.
    pub low_confidence: bool,
    pub decomposition: Decomposition,
}

impl SepPoint {
    pub fn record(&self) -> SepRecord {
        SepRecord {
            snr_db: self.snr_db,
            sep: self.sep,
            errors: self.errors,
            trials: self.trials,
            ci95: self.ci95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepCurve {
    pub spec: ExperimentSpec,
    pub version: String,
    pub points: Vec<SepPoint>,
}

impl SepCurve {
    pub fn records(&self) -> Vec<SepRecord> {
        self.points.iter().map(SepPoint::record).collect()
    }

    pub fn at(&self, snr_db: f64) -> Option<&SepPoint> {
        self.points
            .iter()
            .find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    decisions: u64,
    errors: u64,
    cluster: u64,
    bc: u64,
    bc_given_cluster: u64,
    clean: u64,
    fallbacks: u64,
}

impl Tally {
    fn add(&mut self, o: &RoundOutcome) {
        self.trials += 1;
        self.decisions += o.decisions as u64;
        self.errors += o.errors as u64;
        self.cluster += o.cluster_errors as u64;
        self.bc += o.bc_errors as u64;
        self.bc_given_cluster += o.bc_errors_given_cluster as u64;
        self.clean += o.clean_cluster as u64;
        self.fallbacks += o.fallback as u64;
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.decisions += o.decisions;
        self.errors += o.errors;
        self.cluster += o.cluster;
        self.bc += o.bc;
        self.bc_given_cluster += o.bc_given_cluster;
        self.clean += o.clean;
        self.fallbacks += o.fallbacks;
        self
    }
}

/// Key of the RNG for one SNR point; batches use separate streams.
fn point_key(seed: u64, snr_index: usize) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(snr_index as u64).to_le_bytes());
    key
}

fn run_batch(
    setup: &SchemeSetup,
    fading: Fading,
    noise: &NoiseModel,
    key: [u8; 32],
    batch: u64,
    trials: u64,
) -> Tally {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(batch);
    let mut t = Tally::default();
    for _ in 0..trials {
        let h = draw_realization(setup.layout(), fading, &mut rng);
        t.add(&setup.run_round(&h, Some(noise), &mut rng));
    }
    t
}

/// Runs the experiment with a fresh setup on the global worker pool.
pub fn estimate_sep(spec: &ExperimentSpec) -> Result<SepCurve, EngineError> {
    spec.validate()?;
    let base = Constellation::by_name(&spec.constellation, None)?;
    let setup = SchemeSetup::new(spec.scheme, &base)?;
    estimate_sep_with(spec, &setup, None)
}

/// Runs the experiment with a prepared setup. `workers = None` uses the
/// global pool. Results do not depend on the worker count: trials are
/// grouped into fixed batches, each with its own RNG stream, and the stop
/// rule is checked only between fixed groups of batches.
pub fn estimate_sep_with(
    spec: &ExperimentSpec,
    setup: &SchemeSetup,
    workers: Option<usize>,
) -> Result<SepCurve, EngineError> {
    spec.validate()?;
    if setup.scheme() != spec.scheme {
        return Err(EngineError::Config(
            "setup was prepared for another scheme".into(),
        ));
    }
    let run = || -> Result<Vec<SepPoint>, EngineError> {
        spec.snr_db
            .iter()
            .enumerate()
            .map(|(i, &snr)| estimate_point(spec, setup, i, snr))
            .collect()
    };
    let points = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(SepCurve {
        spec: spec.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        points,
    })
}

fn estimate_point(
    spec: &ExperimentSpec,
    setup: &SchemeSetup,
    index: usize,
    snr: f64,
) -> Result<SepPoint, EngineError> {
    let noise = NoiseModel::from_snr_db(snr)?;
    let key = point_key(spec.seed, index);
    let stop = spec.stop;
    let mut total = Tally::default();
    let mut next_batch = 0u64;
    while total.errors < stop.min_errors && total.trials < stop.max_trials {
        let first = next_batch;
        let last = first + CHUNK_BATCHES;
        next_batch = last;
        let chunk = (first..last)
            .into_par_iter()
            .map(|b| {
                let start = b * BATCH_TRIALS;
                let n = BATCH_TRIALS.min(stop.max_trials.saturating_sub(start));
                run_batch(setup, spec.fading, &noise, key, b, n)
            })
            .reduce(Tally::default, Tally::merge);
        total = total.merge(chunk);
    }
    let n = (spec.scheme.symbols_per_trial() * total.trials) as f64;
    let sep = total.errors as f64 / n;
    let decisions = total.decisions.max(1) as f64;
    Ok(SepPoint {
        snr_db: snr,
        sep,
        errors: total.errors,
        trials: total.trials,
        ci95: 1.96 * (sep * (1.0 - sep) / n).sqrt(),
        low_confidence: total.errors < stop.min_errors,
        decomposition: Decomposition {
            cluster: total.cluster as f64 / decisions,
            bc: total.bc as f64 / decisions,
            bc_given_cluster: total.bc_given_cluster as f64 / decisions,
            clean_rounds: total.clean as f64 / total.trials.max(1) as f64,
            fallbacks: total.fallbacks,
        },
    })
}

/// Negated least-squares slope of `log10(SEP)` against `SNR_dB / 10` over
/// the confident, non-zero points in `[lo_db, hi_db]`.
pub fn diversity_slope(curve: &SepCurve, lo_db: f64, hi_db: f64) -> Result<f64, EngineError> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db && p.errors > 0 && !p.low_confidence)
        .map(|p| (p.snr_db / 10.0, p.sep.log10()))
        .collect();
    slope_of(&pts).map(|s| -s).ok_or_else(|| {
        EngineError::Analysis(format!(
            "need two confident points in [{lo_db}, {hi_db}] dB, have {}",
            pts.len()
        ))
    })
}

fn slope_of(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
