//! Flat-file formats: channel JSON, solution JSON, and the sweep CSV.
//!
//! Infinite objectives are serialized as the literal string `inf` in both
//! JSON and CSV. CSV floats carry 12 significant digits.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChannelSet, ModelError, Solution, SolveStatus};
use crate::sweep::SweepRow;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Channel file schema:
/// `{"N": int, "K": int, "sigma2": float, "channels": [[[re, im], ..N], ..K]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub sigma2: f64,
    pub channels: Vec<Vec<[f64; 2]>>,
}

impl ChannelFile {
    pub fn from_channel_set(ch: &ChannelSet) -> Self {
        Self {
            n: ch.num_antennas(),
            k: ch.num_users(),
            sigma2: ch.noise_power(),
            channels: ch
                .channels()
                .iter()
                .map(|h| h.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn into_channel_set(self) -> Result<ChannelSet, IoError> {
        if self.channels.len() != self.k || self.channels.iter().any(|h| h.len() != self.n) {
            return Err(IoError::Model(ModelError::InvalidInstance(format!(
                "file claims K={} N={} but carries {} rows",
                self.k,
                self.n,
                self.channels.len()
            ))));
        }
        let channels = self
            .channels
            .iter()
            .map(|h| h.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            .collect();
        Ok(ChannelSet::new(channels, self.sigma2)?)
    }
}

pub fn write_channels(path: &Path, ch: &ChannelSet) -> Result<(), IoError> {
    let file = ChannelFile::from_channel_set(ch);
    let mut out = serde_json::to_string_pretty(&file)?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_channels(path: &Path) -> Result<ChannelSet, IoError> {
    let text = std::fs::read_to_string(path)?;
    let file: ChannelFile = serde_json::from_str(&text)?;
    file.into_channel_set()
}

fn ser_f64_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Solution file schema; complex weights are `[re, im]` pairs.
#[derive(Debug, Serialize)]
pub struct SolutionFile {
    pub phases: Vec<f64>,
    pub weights: Vec<[f64; 2]>,
    #[serde(serialize_with = "ser_f64_or_inf")]
    pub objective: f64,
    pub powers: Vec<f64>,
    pub snr_floor: f64,
    #[serde(serialize_with = "ser_f64_or_inf")]
    pub gap: f64,
    pub nodes_explored: u64,
    pub status: SolveStatus,
}

impl SolutionFile {
    pub fn from_solution(sol: &Solution) -> Self {
        Self {
            phases: sol.beamformer.phases().to_vec(),
            weights: sol
                .beamformer
                .weights()
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
            objective: sol.objective,
            powers: sol.powers.clone(),
            snr_floor: sol.snr_floor,
            gap: sol.certificate.gap,
            nodes_explored: sol.certificate.nodes_explored,
            status: sol.status,
        }
    }
}

pub fn write_solution(path: &Path, sol: &Solution) -> Result<(), IoError> {
    let mut out = serde_json::to_string_pretty(&SolutionFile::from_solution(sol))?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

/// Formats a float with 12 significant digits, or the `inf` sentinel.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.11e}")
}

pub const SWEEP_CSV_HEADER: &str =
    "trial,N,K,solver,constraint,objective,snr_floor,gap,nodes,wall_time_s";

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.trial,
            row.n,
            row.k,
            row.solver,
            row.constraint,
            format_float(row.objective),
            format_float(row.snr_floor),
            format_float(row.gap),
            row.nodes,
            format_float(row.wall_time_s),
        )?;
    }
    out.flush()?;
    Ok(())
}
