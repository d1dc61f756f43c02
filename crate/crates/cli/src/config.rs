//! Command-line flags, the TOML config file, and their resolution into a
//! single [`RunConfig`]. Flags take precedence over file values, which take
//! precedence over defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetdet_core::detectors::parse_detector_list;
use hetdet_core::estimation::Stage;
use hetdet_core::{DetectorKind, EstimationConfig, Init, InterferenceModel, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hetdet", version = env!("HETDET_VERSION"), about = "Adaptive detection experiments in heterogeneous interference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate detection thresholds on noise-only bursts.
    Calibrate(CalibrateArgs),
    /// Estimated false-alarm probability across interference scenarios or recorded bins.
    CfarSweep(SweepArgs),
    /// Detection probability against SNR.
    PdCurve(PdArgs),
    /// Mean likelihood change per iteration of the estimation procedures.
    Convergence(ConvergenceArgs),
    /// Per-pulse power of a recorded series.
    PowerTrace(PowerTraceArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct Common {
    /// TOML file with run settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed; every sub-experiment derives its own stream from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Nominal false-alarm probability.
    #[arg(long)]
    pub pfa: Option<f64>,
    /// Pulses per burst.
    #[arg(long)]
    pub k: Option<usize>,
    /// Uniform heterogeneity level.
    #[arg(long, conflicts_with = "texture_shape")]
    pub delta: Option<f64>,
    /// Gamma texture shape of compound-Gaussian interference.
    #[arg(long)]
    pub texture_shape: Option<f64>,
    /// Lower bound on every variance estimate.
    #[arg(long)]
    pub c0: Option<f64>,
    /// Thermal noise power per real axis.
    #[arg(long)]
    pub sigma_n2: Option<f64>,
    /// Comma-separated detector tags, e.g. `AGD,GD-HE,CD`.
    #[arg(long)]
    pub detectors: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Start the EM procedure from the sample centroid instead of the
    /// centroid of the directions.
    #[arg(long)]
    pub sample_centroid_init: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    /// SNR in dB that defines the clairvoyant detector's mean.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Delta,
    TextureShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetModeArg {
    NoiseFloor,
    Literal,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario parameter varied along the sweep.
    #[arg(long, value_enum)]
    pub sweep: Option<SweepParam>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Calibration trials (default: the larger of `--trials` and 100/Pfa).
    #[arg(long)]
    pub calibration_trials: Option<usize>,
    /// Sweep over the range bins of a recorded series instead.
    #[arg(long)]
    pub recorded: Option<PathBuf>,
    #[command(flatten)]
    pub offset: OffsetArgs,
    /// Pulses between consecutive sliding bursts (default: K).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct OffsetArgs {
    /// Additive floor applied to recorded samples.
    #[arg(long)]
    pub offset: Option<f64>,
    /// `noise-floor` adds white Gaussian noise of that power, `literal` adds
    /// the offset to both quadratures
    #[arg(long, value_enum)]
    pub offset_mode: Option<OffsetModeArg>,
}

#[derive(Debug, Clone, Args)]
pub struct PdArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub calibration_trials: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated stage tags: ALG1, EM_M, EM_SIGMA, CYCLIC_EM.
    #[arg(long)]
    pub stages: Option<String>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PowerTraceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub recorded: Option<PathBuf>,
    #[command(flatten)]
    pub offset: OffsetArgs,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub calibration_trials: Option<usize>,
    pub pfa: Option<f64>,
    pub k: Option<usize>,
    pub delta: Option<f64>,
    pub texture_shape: Option<f64>,
    pub c0: Option<f64>,
    pub sigma_n2: Option<f64>,
    pub target_phase: Option<f64>,
    pub detectors: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub sample_centroid_init: Option<bool>,
    pub sweep: Option<SweepParam>,
    pub grid: Option<Vec<f64>>,
    pub snr: Option<f64>,
    pub snr_grid: Option<Vec<f64>>,
    pub recorded: Option<PathBuf>,
    pub offset: Option<f64>,
    pub offset_mode: Option<OffsetModeArg>,
    pub stride: Option<usize>,
    pub stages: Option<Vec<String>>,
    pub iterations: Option<usize>,
    pub estimation: Option<EstimationConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Calibrate,
    CfarSweep,
    PdCurve,
    Convergence,
    PowerTrace,
}

/// Recorded-data settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedConfig {
    pub path: PathBuf,
    pub offset: f64,
    pub offset_mode: OffsetModeArg,
    pub stride: usize,
}

/// A fully resolved run, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub scenario: ScenarioConfig,
    pub estimation: EstimationConfig,
    pub detectors: Vec<DetectorKind>,
    pub pfa: f64,
    pub trials: usize,
    pub calibration_trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    /// Sweep values: Δ or q for `cfar-sweep`, SNR in dB for `pd-curve` and
    /// `convergence`.
    pub grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParam>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recorded: Option<RecordedConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_PFA: f64 = 1e-2;
pub const DEFAULT_OUT: &str = "hetdet-out";

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn model_from(
    delta: Option<f64>,
    shape: Option<f64>,
    source: &str,
) -> CliResult<Option<InterferenceModel>> {
    match (delta, shape) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "{source} sets both delta and texture_shape; choose one interference model"
        ))),
        (Some(delta), None) => Ok(Some(InterferenceModel::UniformHeterogeneous { delta })),
        (None, Some(shape)) => Ok(Some(InterferenceModel::CompoundGaussian { shape })),
        (None, None) => Ok(None),
    }
}

fn detectors(
    flag: Option<&str>,
    file: Option<&[String]>,
    default: &[DetectorKind],
) -> CliResult<Vec<DetectorKind>> {
    match (flag, file) {
        (Some(list), _) => Ok(parse_detector_list(list)?),
        (None, Some(list)) => Ok(parse_detector_list(&list.join(","))?),
        (None, None) => Ok(default.to_vec()),
    }
}

fn grid(values: Vec<f64>, what: &str) -> CliResult<Vec<f64>> {
    if values.is_empty() {
        return Err(CliError::Config(format!("{what} grid is empty")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::Config(format!("{what} grid contains NaN")));
    }
    Ok(values)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

use DetectorKind::*;

const PROPOSED: [DetectorKind; 4] = [GdHe, Agd, CGdHe, CAgd];
const PD_DEFAULT: [DetectorKind; 7] = [Cd, Ed, GdHe, Agd, CGdHe, CAgd, Chd];
const CALIBRATE_DEFAULT: [DetectorKind; 7] = [GdHe, Agd, CGdHe, CAgd, Ed, Chd, CaChd];

impl Cli {
    /// Resolves flags, the optional config file and defaults.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let common = match &self.command {
            Command::Calibrate(a) => &a.common,
            Command::CfarSweep(a) => &a.common,
            Command::PdCurve(a) => &a.common,
            Command::Convergence(a) => &a.common,
            Command::PowerTrace(a) => &a.common,
        };
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let model = match model_from(common.delta, common.texture_shape, "the command line")? {
            Some(m) => m,
            None => model_from(file.delta, file.texture_shape, "the config file")?
                .unwrap_or(InterferenceModel::UniformHeterogeneous { delta: 0.0 }),
        };
        let defaults = ScenarioConfig::default();
        let sigma_n2 = pick(common.sigma_n2, file.sigma_n2, defaults.sigma_n2);
        let scenario = ScenarioConfig {
            k: pick(common.k, file.k, defaults.k),
            model,
            sigma_n2,
            snr_db: f64::NEG_INFINITY,
            target_phase: file.target_phase.unwrap_or(defaults.target_phase),
            c0: sigma_n2,
        };

        let mut estimation = file.estimation.clone().unwrap_or_default();
        if let Some(c0) = common.c0.or(file.c0) {
            estimation.c0 = c0;
        } else if file.estimation.as_ref().is_none() {
            estimation.c0 = sigma_n2;
        }
        if common.sample_centroid_init || file.sample_centroid_init == Some(true) {
            estimation.init = Init::SampleCentroid;
        }
        estimation.validate()?;
        let scenario = ScenarioConfig {
            c0: estimation.c0,
            ..scenario
        };
        scenario.validate()?;

        let pfa = pick(common.pfa, file.pfa, DEFAULT_PFA);
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(CliError::Config(format!(
                "pfa must be in (0, 1), got {pfa}"
            )));
        }
        let trials = pick(common.trials, file.trials, DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        let workers = pick(common.workers, file.workers, default_workers());
        if workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let min_cal = hetdet_core::montecarlo::min_trials(pfa);

        let mut run = RunConfig {
            command: CommandKind::Calibrate,
            scenario,
            estimation,
            detectors: Vec::new(),
            pfa,
            trials,
            calibration_trials: trials.max(min_cal),
            seed: pick(common.seed, file.seed, DEFAULT_SEED),
            out: pick(
                common.out.clone(),
                file.out.clone(),
                PathBuf::from(DEFAULT_OUT),
            ),
            workers,
            grid: Vec::new(),
            sweep: None,
            snr: None,
            recorded: None,
            stages: Vec::new(),
            iterations: None,
        };
        let dets = |default: &[DetectorKind]| {
            detectors(
                common.detectors.as_deref(),
                file.detectors.as_deref(),
                default,
            )
        };
        let cal_trials = |flag: Option<usize>| -> CliResult<usize> {
            let n = flag
                .or(file.calibration_trials)
                .unwrap_or(trials.max(min_cal));
            if n < min_cal {
                return Err(CliError::Config(format!(
                    "{n} calibration trials are fewer than 100/Pfa = {min_cal}"
                )));
            }
            Ok(n)
        };

        match &self.command {
            Command::Calibrate(a) => {
                run.detectors = dets(&CALIBRATE_DEFAULT)?;
                run.snr = a.snr.or(file.snr);
                run.calibration_trials = cal_trials(Some(trials))?;
                if run.detectors.contains(&Cd) && !run.snr.is_some_and(f64::is_finite) {
                    return Err(CliError::Config(
                        "calibrating CD needs a finite --snr".into(),
                    ));
                }
            }
            Command::CfarSweep(a) => {
                run.command = CommandKind::CfarSweep;
                run.detectors = dets(&PROPOSED)?;
                if run.detectors.contains(&Cd) {
                    return Err(CliError::Config(
                        "CD has no false-alarm sweep: its mean is undefined under H0".into(),
                    ));
                }
                run.calibration_trials = cal_trials(a.calibration_trials)?;
                match a.recorded.clone().or(file.recorded.clone()) {
                    Some(path) => {
                        run.recorded = Some(recorded(
                            &a.offset,
                            &file,
                            path,
                            a.stride.or(file.stride),
                            run.scenario.k,
                        )?);
                    }
                    None => {
                        let sweep = a.sweep.or(file.sweep).unwrap_or(SweepParam::Delta);
                        let default = match sweep {
                            SweepParam::Delta => (0..=10).map(|i| 5.0 * i as f64).collect(),
                            SweepParam::TextureShape => vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
                        };
                        run.grid = grid(pick(a.grid.clone(), file.grid.clone(), default), "sweep")?;
                        run.sweep = Some(sweep);
                    }
                }
            }
            Command::PdCurve(a) => {
                run.command = CommandKind::PdCurve;
                run.detectors = dets(&PD_DEFAULT)?;
                run.calibration_trials = cal_trials(a.calibration_trials)?;
                let default = (-10..=20).map(f64::from).collect();
                run.grid = grid(
                    pick(a.snr_grid.clone(), file.snr_grid.clone(), default),
                    "SNR",
                )?;
                if run.grid.iter().any(|s| !s.is_finite()) {
                    return Err(CliError::Config("SNR grid values must be finite".into()));
                }
            }
            Command::Convergence(a) => {
                run.command = CommandKind::Convergence;
                let tags = match (&a.stages, &file.stages) {
                    (Some(s), _) => s.split(',').map(str::to_string).collect(),
                    (None, Some(s)) => s.clone(),
                    (None, None) => Stage::ALL
                        .iter()
                        .map(|s| s.tag().to_string())
                        .collect::<Vec<_>>(),
                };
                run.stages = tags
                    .iter()
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.parse())
                    .collect::<Result<_, _>>()?;
                if run.stages.is_empty() {
                    return Err(CliError::Config("stage list is empty".into()));
                }
                run.grid = grid(
                    pick(a.snr.clone(), file.snr_grid.clone(), vec![0.0, 10.0]),
                    "SNR",
                )?;
                let iterations = pick(a.iterations, file.iterations, 20);
                if iterations == 0 {
                    return Err(CliError::Config("iterations must be at least 1".into()));
                }
                run.iterations = Some(iterations);
            }
            Command::PowerTrace(a) => {
                run.command = CommandKind::PowerTrace;
                let path = a
                    .recorded
                    .clone()
                    .or(file.recorded.clone())
                    .ok_or_else(|| CliError::Config("power-trace needs --recorded".into()))?;
                run.recorded = Some(recorded(&a.offset, &file, path, Some(1), run.scenario.k)?);
            }
        }
        Ok(run)
    }
}

fn recorded(
    args: &OffsetArgs,
    file: &FileConfig,
    path: PathBuf,
    stride: Option<usize>,
    k: usize,
) -> CliResult<RecordedConfig> {
    let offset = pick(args.offset, file.offset, 0.0);
    if !(offset.is_finite() && offset >= 0.0) {
        return Err(CliError::Config(format!(
            "offset must be >= 0, got {offset}"
        )));
    }
    let stride = stride.unwrap_or(k);
    if stride == 0 {
        return Err(CliError::Config("stride must be at least 1".into()));
    }
    Ok(RecordedConfig {
        path,
        offset,
        offset_mode: pick(
            args.offset_mode,
            file.offset_mode,
            OffsetModeArg::NoiseFloor,
        ),
        stride,
    })
}
