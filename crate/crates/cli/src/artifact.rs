//! On-disk artifacts. Every JSON artifact is wrapped in an [`Artifact`]
//! envelope carrying its kind, schema version and the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thinsieve::group::GroupPresentation;
use thinsieve::spectral::GrowthFit;
use thinsieve::SieveReport;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub version: u32,
    pub config_hash: String,
    pub data: T,
}

/// One sample of the counting function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    #[serde(rename = "T")]
    pub height: f64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitData {
    pub presentation: GroupPresentation,
    #[serde(rename = "T")]
    pub height: String,
    pub enumeration_height: String,
    pub beta: f64,
    pub exhausted: bool,
    pub count: u64,
    pub parity: String,
    pub contains_negative_identity: bool,
    pub growth: Vec<GrowthPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub q: u64,
    pub o_q: u64,
    pub index: u64,
    pub omega: String,
    pub ramified_flag: bool,
    /// Surjectivity onto SL2(Z/pZ); primes only.
    pub onto: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetFailure {
    pub q: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplicativity {
    pub checked: usize,
    pub failures: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityData {
    pub prime_bound: u64,
    pub ramified: Vec<u64>,
    pub rows: Vec<DensityRow>,
    pub multiplicativity: Multiplicativity,
    pub budget_failures: Vec<BudgetFailure>,
}

/// `|𝒪(10^k, R)| log 10^k / 10^{k δ̂}` for one decade.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeRatio {
    pub decade: u32,
    pub r: u32,
    pub count: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveData {
    pub delta_hat: f64,
    pub delta_source: String,
    pub theta_preset: String,
    pub r_source: String,
    pub report: SieveReport,
    pub decade_ratios: Vec<DecadeRatio>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetRow {
    pub name: String,
    pub theta: String,
    pub admissible_r: Option<u32>,
    pub q_theory: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRow {
    pub label: String,
    pub delta: f64,
    pub theta: String,
    pub r: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub delta_hat: f64,
    pub delta_source: String,
    pub fit: GrowthFit,
    #[serde(rename = "T")]
    pub height: f64,
    pub b: f64,
    pub steps: f64,
    pub s: f64,
    pub lambda0: f64,
    pub kernel_k: Option<f64>,
    pub kernel_l: Option<f64>,
    /// Relative error of rebuilding the fitted `c0 T^s` at T from its
    /// values at 1 and b.
    pub reconstruction_error: Option<f64>,
    pub presets: Vec<PresetRow>,
    pub corollary: Vec<CorollaryRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config_hash: String,
    pub config: String,
    pub missing: Vec<String>,
    pub orbit: Option<OrbitData>,
    pub density: Option<DensityData>,
    pub sieve: Option<SieveData>,
    pub spectral: Option<SpectralData>,
}

/// The pipeline steps in order, with the file each one writes.
pub const STEPS: [(&str, &str); 4] =
    [("orbit", "orbit.json"), ("density", "density.json"), ("sieve", "sieve.json"), ("spectral", "spectral.json")];

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_artifact<T: Serialize>(dir: &Path, file: &str, kind: &str, hash: &str, data: T) -> Result<PathBuf> {
    let artifact = Artifact { kind: kind.to_string(), version: ARTIFACT_VERSION, config_hash: hash.to_string(), data };
    let path = dir.join(file);
    write_text(&path, &(serde_json::to_string_pretty(&artifact)? + "\n"))?;
    Ok(path)
}

/// Reads an artifact; `Ok(None)` if the file does not exist.
pub fn read_artifact<T: DeserializeOwned>(dir: &Path, file: &str, kind: &str) -> Result<Option<Artifact<T>>> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let artifact: Artifact<T> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if artifact.kind != kind {
        bail!("{} holds a `{}` artifact, expected `{kind}`", path.display(), artifact.kind);
    }
    if artifact.version != ARTIFACT_VERSION {
        bail!("{} has artifact version {}, expected {ARTIFACT_VERSION}", path.display(), artifact.version);
    }
    Ok(Some(artifact))
}

/// A CSV file whose first line records the config hash as a `#` comment.
pub fn write_csv(path: &Path, hash: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut text = format!("# config_hash={hash}\n{header}\n");
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_text(path, &text)
}
