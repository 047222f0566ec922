//! Subcommand bodies. Each one is a function of its config and input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{info, warn};
use mnn_core::eval::{overlay_pairs, HorizonReport};
use mnn_core::{
    constant_velocity_baseline, differentiate, emit_overlay, emit_report, horizon_table, init_parameters, load_params,
    predict_positions, read_overlay, save_csv, save_params, split, steps_for, train_dataset_from, write_overlay,
    NetworkParameters, OverlayRow, ReportFormat, Trajectory, TrajectoryDatabase,
};

use crate::config::ExperimentConfig;

pub const FLEET_CSV: &str = "fleet.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.txt";
pub const TRAINING_LOG: &str = "training_log.jsonl";
pub const CONFIG_ECHO: &str = "config.json";
pub const OVERLAY_DIR: &str = "overlays";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes the fleet CSV and its manifest. Returns the vehicle count.
pub fn cmd_generate(config: &ExperimentConfig, out: &Path) -> anyhow::Result<usize> {
    let fleet = mnn_core::generate_fleet(&config.fleet_spec()?)?;
    ensure_dir(out)?;
    save_csv(&fleet.database, out.join(FLEET_CSV))?;
    write(&out.join(MANIFEST_JSON), fleet.manifest.to_json())?;
    info!("generated {} vehicles into {}", fleet.database.len(), out.display());
    Ok(fleet.database.len())
}

fn train_split(config: &ExperimentConfig) -> anyhow::Result<(TrajectoryDatabase, TrajectoryDatabase)> {
    let db = config.load_database()?;
    if db.len() < 2 {
        // nothing to hold out
        return Ok((db.clone(), db));
    }
    Ok(split(&db, &config.split_spec())?)
}

pub struct TrainOutcome {
    pub params: NetworkParameters,
    pub fingerprint: String,
}

/// Trains on the training split. `resume` continues from saved parameters;
/// zero epochs then returns them unchanged.
pub fn cmd_train(config: &ExperimentConfig, out: &Path, resume: Option<&Path>) -> anyhow::Result<TrainOutcome> {
    let mut params = match resume {
        Some(path) => {
            let p = load_params(path)?;
            if p.topology != config.topology {
                bail!(
                    "{}: topology {:?} differs from the config's {:?}",
                    path.display(),
                    p.topology,
                    config.topology
                );
            }
            p
        }
        None => init_parameters(&config.topology, config.seed, config.learning.weight_scale)?,
    };
    let log = if config.learning.epochs == 0 {
        mnn_core::TrainingLog::default()
    } else {
        let (train, _) = train_split(config)?;
        let data = train.differentials()?;
        train_dataset_from(&mut params, &data, &config.learning)?
    };
    ensure_dir(out)?;
    save_params(&params, out.join(PARAMS_FILE))?;
    write(&out.join(TRAINING_LOG), log.to_json_lines())?;
    write(&out.join(CONFIG_ECHO), serde_json::to_string_pretty(&config.echo())? + "\n")?;
    Ok(TrainOutcome {
        params,
        fingerprint: config.fingerprint(),
    })
}

/// Indices of the last observed point of every forecast window on a
/// trajectory with `len` points.
pub fn window_anchors(len: usize, history_steps: usize, horizon_steps: usize, stride_steps: Option<usize>) -> Vec<usize> {
    if len < history_steps + horizon_steps + 1 {
        return vec![];
    }
    let last = len - 1 - horizon_steps;
    match stride_steps {
        None => vec![history_steps],
        Some(s) => (history_steps..=last).step_by(s.max(1)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Mnn,
    ConstantVelocity,
}

/// Forecasts every window of every test vehicle and writes one overlay file
/// per vehicle. Returns the number of windows written.
pub fn cmd_predict(
    config: &ExperimentConfig,
    params: Option<&NetworkParameters>,
    predictor: Predictor,
    out: &Path,
) -> anyhow::Result<usize> {
    let (_, test) = train_split(config)?;
    let rate = test.sample_rate_hz();
    let request = &config.prediction;
    let h = request.history_steps(rate);
    let f = request.horizon_steps(rate);
    if h == 0 || f == 0 {
        bail!("history and horizon must each cover at least one sample at {rate} Hz");
    }
    let stride = config
        .evaluation
        .window_stride_seconds
        .map(|s| steps_for(s, rate).max(1));
    let dir = out.join(OVERLAY_DIR);
    ensure_dir(&dir)?;
    let mut written = 0;
    for traj in test.iter() {
        let anchors = window_anchors(traj.points.len(), h, f, stride);
        if anchors.is_empty() {
            warn!(
                "skipping vehicle {}: {} samples cannot cover {} s of history plus {} s of horizon",
                traj.vehicle_id,
                traj.points.len(),
                request.history_seconds,
                request.horizon_seconds
            );
            continue;
        }
        let mut rows: Vec<OverlayRow> = Vec::new();
        for &i in &anchors {
            let key = match stride {
                None => traj.vehicle_id.clone(),
                Some(_) => format!("{}@{i}", traj.vehicle_id),
            };
            let slice = |a: usize, b: usize| Trajectory {
                vehicle_id: key.clone(),
                sample_rate_hz: rate,
                points: traj.points[a..b].to_vec(),
            };
            let history = slice(i - h, i + 1);
            let truth = slice(i + 1, i + 1 + f);
            let prediction = match (predictor, params) {
                (Predictor::Mnn, Some(p)) => predict_positions(p, request, &differentiate(&history)?)?,
                (Predictor::Mnn, None) => bail!("MNN prediction needs parameters"),
                (Predictor::ConstantVelocity, _) => constant_velocity_baseline(&history, request.horizon_seconds)?,
            };
            // one history row per consumed delta, ending at the anchor point
            rows.extend(emit_overlay(&prediction, Some(&truth), &slice(i + 1 - h, i + 1)));
            written += 1;
        }
        let mut buf = Vec::new();
        write_overlay(&rows, &mut buf, true)?;
        write(&dir.join(format!("{}.csv", traj.vehicle_id)), buf)?;
    }
    if written == 0 {
        bail!("no test vehicle is long enough for a forecast window");
    }
    Ok(written)
}

fn overlay_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if dir.is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    files.sort();
    if files.is_empty() {
        bail!("no overlay files in {}", dir.display());
    }
    Ok(files)
}

fn read_overlays(dir: &Path) -> anyhow::Result<Vec<OverlayRow>> {
    let mut rows = Vec::new();
    for path in overlay_files(dir)? {
        let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        rows.extend(read_overlay(file).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(rows)
}

fn infer_rate(rows: &[OverlayRow]) -> anyhow::Result<f64> {
    let first = rows
        .iter()
        .filter(|r| r.phase == mnn_core::Phase::Prediction)
        .map(|r| r.t_seconds)
        .fold(f64::INFINITY, f64::min);
    if !(first.is_finite() && first > 0.0) {
        bail!("overlay files contain no prediction rows");
    }
    Ok(((1.0 / first) * 1e6).round() / 1e6)
}

/// Scores overlay predictions against ground truth. Truth comes from the
/// `truths` overlays when given, else from the prediction overlays' own
/// truth columns.
pub fn cmd_eval(
    predictions: &Path,
    truths: Option<&Path>,
    config: Option<&ExperimentConfig>,
    out: &Path,
) -> anyhow::Result<HorizonReport> {
    let rows = read_overlays(predictions)?;
    let rate = infer_rate(&rows)?;
    let pred_pairs = overlay_pairs(&rows, rate)?;
    let truth_pairs = match truths {
        Some(dir) => {
            let t = read_overlays(dir)?;
            let truth_rate = infer_rate(&t)?;
            if truth_rate != rate {
                bail!("predictions are sampled at {rate} Hz but truths at {truth_rate} Hz");
            }
            overlay_pairs(&t, rate)?
        }
        None => pred_pairs.clone(),
    };
    let pred_keys: Vec<&String> = pred_pairs.keys().collect();
    let truth_keys: Vec<&String> = truth_pairs.keys().collect();
    if pred_keys != truth_keys {
        let missing: Vec<&&String> = pred_keys.iter().filter(|k| !truth_pairs.contains_key(**k)).collect();
        let extra: Vec<&&String> = truth_keys.iter().filter(|k| !pred_pairs.contains_key(**k)).collect();
        bail!("prediction and truth sets differ: no truth for {missing:?}, no prediction for {extra:?}");
    }
    let (preds, truths): (Vec<Trajectory>, Vec<Trajectory>) = pred_pairs
        .into_iter()
        .zip(truth_pairs)
        .map(|((_, (p, _)), (_, (_, t)))| (p, t))
        .unzip();
    let horizons = config.map_or_else(|| crate::config::EvaluationConfig::default().horizons_s, |c| c.evaluation.horizons_s.clone());
    let mut report = horizon_table(&preds, &truths, rate, &horizons)?;
    if let Some(c) = config {
        report = report.with_config(c.echo(), Some(c.seed));
    }
    ensure_dir(out)?;
    write(&out.join(REPORT_TEXT), emit_report(&report, ReportFormat::TableText))?;
    write(&out.join(REPORT_JSON), emit_report(&report, ReportFormat::Structured))?;
    Ok(report)
}

/// Counts rows per phase in an overlay directory, keyed by vehicle key.
pub fn overlay_row_counts(dir: &Path) -> anyhow::Result<BTreeMap<String, (usize, usize)>> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in read_overlays(dir)? {
        let c = counts.entry(r.vehicle_id).or_default();
        match r.phase {
            mnn_core::Phase::History => c.0 += 1,
            mnn_core::Phase::Prediction => c.1 += 1,
        }
    }
    Ok(counts)
}
