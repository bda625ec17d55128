//! CSV curves and the run manifest.

use super::SepCurve;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One CSV row: `snr_db,sep,errors,trials,ci95`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SepRecord {
    pub snr_db: f64,
    pub sep: f64,
    pub errors: u64,
    pub trials: u64,
    pub ci95: f64,
}

pub fn write_csv<W: Write>(curve: &SepCurve, w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in curve.records() {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<SepRecord>, csv::Error> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["snr_db", "sep", "errors", "trials", "ci95"] {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "unexpected header `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        )));
    }
    rd.deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCurve {
    pub scheme: String,
    pub file: String,
    /// SNR points whose error target was not reached.
    pub low_confidence_snr_db: Vec<f64>,
    pub cluster_error_rate: Vec<f64>,
    pub bc_error_rate: Vec<f64>,
    pub fallbacks: Vec<u64>,
}

impl ManifestCurve {
    pub fn new(curve: &SepCurve, file: String) -> Self {
        let p = &curve.points;
        Self {
            scheme: curve.spec.scheme.to_string(),
            file,
            low_confidence_snr_db: p
                .iter()
                .filter(|p| p.low_confidence)
                .map(|p| p.snr_db)
                .collect(),
            cluster_error_rate: p.iter().map(|p| p.decomposition.cluster).collect(),
            bc_error_rate: p.iter().map(|p| p.decomposition.bc).collect(),
            fallbacks: p.iter().map(|p| p.decomposition.fallbacks).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub constellation: String,
    pub fading: String,
    pub rician_k: f64,
    pub snr_db: Vec<f64>,
    pub min_errors: u64,
    pub max_trials: u64,
    pub curves: Vec<ManifestCurve>,
}
