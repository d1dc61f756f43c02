//! CSV and manifest writers. Every file name and column set here is part of
//! the stable output schema; bump [`SCHEMA_VERSION`] when one changes.

use std::fs;
use std::path::{Path, PathBuf};

use hetdet_core::{CalibratedThreshold, CurvePoint, DetectorKind};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("HETDET_VERSION");
pub const MANIFEST: &str = "manifest.json";

/// One row of a probability curve (`pd_vs_snr.csv`, `pfa_vs_*.csv`).
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CurveRow {
    pub detector: String,
    pub abscissa: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

impl CurveRow {
    pub fn new(detector: DetectorKind, p: &CurvePoint) -> Self {
        Self {
            detector: detector.tag().to_string(),
            abscissa: p.abscissa,
            estimate: p.estimate,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            trials: p.trials,
        }
    }
}

/// One row of `thresholds.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ThresholdRow {
    pub detector: String,
    pub eta: f64,
    pub nominal_pfa: f64,
    pub trials: usize,
    pub seed: u64,
}

impl From<&CalibratedThreshold> for ThresholdRow {
    fn from(t: &CalibratedThreshold) -> Self {
        Self {
            detector: t.detector.tag().to_string(),
            eta: t.eta,
            nominal_pfa: t.nominal_pfa,
            trials: t.trials,
            seed: t.seed,
        }
    }
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ConvergenceRow {
    pub algorithm: String,
    pub snr_db: f64,
    pub iteration: usize,
    pub mean_abs_change: f64,
    pub trials: usize,
}

/// One row of `power_trace.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct PowerRow {
    pub bin_index: usize,
    pub pulse_index: usize,
    pub power: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    version: &'a str,
    command: crate::config::CommandKind,
    seed: u64,
    trials: usize,
    config: &'a RunConfig,
    thresholds: &'a [CalibratedThreshold],
    outputs: Vec<String>,
    wall_time_s: f64,
}

/// Creates the output directory and checks that it accepts files.
pub fn prepare_dir(dir: &Path) -> CliResult<()> {
    let unwritable = |e: std::io::Error| {
        CliError::Config(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(".hetdet-probe");
    fs::write(&probe, b"").map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)
}

pub fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let fail = |e: csv::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(fail)?;
    for row in rows {
        w.serialize(row).map_err(fail)?;
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_manifest(
    run: &RunConfig,
    thresholds: &[CalibratedThreshold],
    outputs: &[PathBuf],
    wall_time_s: f64,
) -> CliResult<PathBuf> {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        version: VERSION,
        command: run.command,
        seed: run.seed,
        trials: run.trials,
        config: run,
        thresholds,
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect(),
        wall_time_s,
    };
    let path = run.out.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Runtime(format!("serializing manifest: {e}")))?;
    fs::write(&path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}
