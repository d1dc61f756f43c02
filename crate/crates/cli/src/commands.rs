//! Experiment drivers, one per subcommand.

use std::path::PathBuf;
use std::time::Instant;

use hetdet_core::montecarlo::{derive_seed, Runner};
use hetdet_core::scenario::{ingest_recorded, OffsetMode, RecordedSeries};
use hetdet_core::{CalibratedThreshold, CurvePoint, DetectorKind, InterferenceModel};

use crate::config::{CommandKind, OffsetModeArg, RecordedConfig, RunConfig, SweepParam};
use crate::error::{CliError, CliResult};
use crate::output::{self, ConvergenceRow, CurveRow, PowerRow, ThresholdRow};

const CALIBRATION: u64 = 1;
const EVALUATION: u64 = 2;
const CONVERGENCE: u64 = 3;
const NOISE_FLOOR: u64 = 4;

fn progress(msg: impl AsRef<str>) {
    eprintln!("hetdet: {}", msg.as_ref());
}

/// Runs a resolved configuration and returns the paths it wrote, the
/// manifest last.
pub fn execute(run: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let start = Instant::now();
    output::prepare_dir(&run.out)?;
    let runner = Runner::new(run.workers)?;
    let (thresholds, mut written) = match run.command {
        CommandKind::Calibrate => calibrate(run, &runner)?,
        CommandKind::CfarSweep if run.recorded.is_some() => cfar_recorded(run, &runner)?,
        CommandKind::CfarSweep => cfar_synthetic(run, &runner)?,
        CommandKind::PdCurve => pd_curve(run, &runner)?,
        CommandKind::Convergence => (Vec::new(), convergence(run, &runner)?),
        CommandKind::PowerTrace => (Vec::new(), power_trace(run)?),
    };
    let manifest =
        output::write_manifest(run, &thresholds, &written, start.elapsed().as_secs_f64())?;
    written.push(manifest);
    progress(format!("done in {:.1} s", start.elapsed().as_secs_f64()));
    Ok(written)
}

type Outcome = (Vec<CalibratedThreshold>, Vec<PathBuf>);

fn calibrate_at(
    run: &RunConfig,
    runner: &Runner,
    scen: &hetdet_core::ScenarioConfig,
) -> CliResult<Vec<CalibratedThreshold>> {
    progress(format!(
        "calibrating {} detector(s) on {} noise-only bursts",
        run.detectors.len(),
        run.calibration_trials
    ));
    Ok(runner.calibrate(
        &run.detectors,
        &run.estimation,
        scen,
        run.pfa,
        run.calibration_trials,
        derive_seed(run.seed, CALIBRATION),
    )?)
}

fn calibrate(run: &RunConfig, runner: &Runner) -> CliResult<Outcome> {
    let scen = run
        .scenario
        .with_snr_db(run.snr.unwrap_or(f64::NEG_INFINITY));
    let th = calibrate_at(run, runner, &scen)?;
    let rows: Vec<ThresholdRow> = th.iter().map(ThresholdRow::from).collect();
    let path = output::write_csv(&run.out, "thresholds.csv", &rows)?;
    Ok((th, vec![path]))
}

fn curve_rows(kinds: &[DetectorKind], curves: &[Vec<CurvePoint>]) -> Vec<CurveRow> {
    kinds
        .iter()
        .zip(curves)
        .flat_map(|(&k, c)| c.iter().map(move |p| CurveRow::new(k, p)))
        .collect()
}

/// Thresholds from homogeneous white noise, then false-alarm rates across
/// the sweep.
fn cfar_synthetic(run: &RunConfig, runner: &Runner) -> CliResult<Outcome> {
    let sweep = run.sweep.unwrap_or(SweepParam::Delta);
    let white = run
        .scenario
        .with_model(InterferenceModel::UniformHeterogeneous { delta: 0.0 });
    let th = calibrate_at(run, runner, &white)?;
    let mut curves = vec![Vec::with_capacity(run.grid.len()); th.len()];
    for &v in &run.grid {
        let model = match sweep {
            SweepParam::Delta => InterferenceModel::UniformHeterogeneous { delta: v },
            SweepParam::TextureShape => InterferenceModel::CompoundGaussian { shape: v },
        };
        progress(format!("false-alarm rate at {sweep:?} = {v}"));
        let points = runner.estimate_pfa(
            &th,
            &run.estimation,
            &run.scenario.with_model(model),
            v,
            run.trials,
            derive_seed(run.seed, EVALUATION),
        )?;
        for (c, p) in curves.iter_mut().zip(points) {
            c.push(p);
        }
    }
    let name = match sweep {
        SweepParam::Delta => "pfa_vs_delta.csv",
        SweepParam::TextureShape => "pfa_vs_texture_shape.csv",
    };
    let path = output::write_csv(&run.out, name, &curve_rows(&run.detectors, &curves))?;
    Ok((th, vec![path]))
}

fn load(run: &RunConfig, rec: &RecordedConfig) -> CliResult<RecordedSeries> {
    let mode = match rec.offset_mode {
        OffsetModeArg::Literal => OffsetMode::Literal,
        OffsetModeArg::NoiseFloor => OffsetMode::NoiseFloor {
            seed: derive_seed(run.seed, NOISE_FLOOR),
        },
    };
    if !rec.path.is_file() {
        return Err(CliError::Config(format!(
            "recorded file {} not found",
            rec.path.display()
        )));
    }
    progress(format!("reading {}", rec.path.display()));
    Ok(ingest_recorded(&rec.path, rec.offset, mode)?)
}

/// Thresholds from homogeneous white noise, then the exceedance rate of the
/// sliding bursts of every range bin.
fn cfar_recorded(run: &RunConfig, runner: &Runner) -> CliResult<Outcome> {
    let rec = run.recorded.as_ref().expect("recorded settings");
    let series = load(run, rec)?;
    let k = run.scenario.k;
    if k > series.pulses() {
        return Err(CliError::Config(format!(
            "K = {k} exceeds the {} pulses per bin of the recorded series",
            series.pulses()
        )));
    }
    let white = run
        .scenario
        .with_model(InterferenceModel::UniformHeterogeneous { delta: 0.0 });
    let th = calibrate_at(run, runner, &white)?;
    let mut curves = vec![Vec::with_capacity(series.bins()); th.len()];
    for bin in 0..series.bins() {
        let bursts = series.sliding_bursts(bin, k, rec.stride)?;
        let stats = runner.statistics_on(&run.detectors, &run.estimation, &bursts)?;
        for ((c, s), t) in curves.iter_mut().zip(&stats).zip(&th) {
            let hits = s.iter().filter(|&&v| v > t.eta).count();
            c.push(CurvePoint::from_count(bin as f64, hits, bursts.len()));
        }
    }
    progress(format!(
        "{} bins, {} bursts each",
        series.bins(),
        curves[0].first().map_or(0, |p| p.trials)
    ));
    let path = output::write_csv(
        &run.out,
        "pfa_vs_bin.csv",
        &curve_rows(&run.detectors, &curves),
    )?;
    Ok((th, vec![path]))
}

/// Thresholds at the scenario's own interference law, then detection rates
/// along the SNR grid on common bursts.
fn pd_curve(run: &RunConfig, runner: &Runner) -> CliResult<Outcome> {
    let cal = run.scenario.with_snr_db(run.grid[0]);
    let th = calibrate_at(run, runner, &cal)?;
    progress(format!(
        "detection rates at {} SNR values, {} bursts each",
        run.grid.len(),
        run.trials
    ));
    let curves = runner.pd_curves(
        &th,
        &run.estimation,
        &run.scenario,
        &run.grid,
        run.trials,
        derive_seed(run.seed, EVALUATION),
    )?;
    let path = output::write_csv(
        &run.out,
        "pd_vs_snr.csv",
        &curve_rows(&run.detectors, &curves),
    )?;
    Ok((th, vec![path]))
}

fn convergence(run: &RunConfig, runner: &Runner) -> CliResult<Vec<PathBuf>> {
    let iterations = run.iterations.unwrap_or(20);
    let mut rows = Vec::new();
    for &stage in &run.stages {
        for &snr in &run.grid {
            progress(format!("{} at {snr} dB", stage.tag()));
            let trace = runner.convergence_trace(
                stage,
                &run.estimation,
                &run.scenario,
                snr,
                iterations,
                run.trials,
                derive_seed(run.seed, CONVERGENCE),
            )?;
            rows.extend(trace.into_iter().map(|(iteration, change)| ConvergenceRow {
                algorithm: stage.tag().to_string(),
                snr_db: snr,
                iteration,
                mean_abs_change: change,
                trials: run.trials,
            }));
        }
    }
    Ok(vec![output::write_csv(&run.out, "convergence.csv", &rows)?])
}

fn power_trace(run: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let rec = run.recorded.as_ref().expect("recorded settings");
    let series = load(run, rec)?;
    let mut rows = Vec::with_capacity(series.len());
    for bin in 0..series.bins() {
        rows.extend(
            series
                .power_trace(bin)?
                .into_iter()
                .map(|(pulse_index, power)| PowerRow {
                    bin_index: bin,
                    pulse_index,
                    power,
                }),
        );
    }
    Ok(vec![output::write_csv(&run.out, "power_trace.csv", &rows)?])
}
