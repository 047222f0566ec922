//! RMSE over the look-ahead horizon, per-horizon tables, and overlay data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MnnError, Result};
use crate::trajectory::{steps_for, Point, Trajectory};

pub const REPORT_VERSION: u32 = 1;

const REPORT_NOTE: &str = "cumulative: per-vehicle root mean squared position error over every step up to the horizon, \
averaged over vehicles (headline). instantaneous: position error at the horizon step, averaged over vehicles. \
Published per-second tables do not always say which of the two they report.";

fn sq_dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn check_pairs(predictions: &[Trajectory], truths: &[Trajectory], horizon_steps: usize) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(MnnError::Data(format!(
            "{} predictions but {} ground-truth trajectories",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(MnnError::Data("no trajectories to score".into()));
    }
    if horizon_steps == 0 {
        return Err(MnnError::Data("horizon must cover at least one step".into()));
    }
    for (p, t) in predictions.iter().zip(truths) {
        if p.points.len() < horizon_steps || t.points.len() < horizon_steps {
            return Err(MnnError::Data(format!(
                "vehicle {}: horizon needs {horizon_steps} steps, prediction has {} and truth has {}",
                p.vehicle_id,
                p.points.len(),
                t.points.len()
            )));
        }
    }
    Ok(())
}

/// Mean over vehicles of each vehicle's root mean squared Euclidean error
/// over its first `horizon_steps` future positions.
pub fn rmse(predictions: &[Trajectory], truths: &[Trajectory], horizon_steps: usize) -> Result<f64> {
    check_pairs(predictions, truths, horizon_steps)?;
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| {
            let sum: f64 = p.points[..horizon_steps]
                .iter()
                .zip(&t.points[..horizon_steps])
                .map(|(a, b)| sq_dist(a, b))
                .sum();
            (sum / horizon_steps as f64).sqrt()
        })
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Mean over vehicles of the Euclidean error at exactly step `horizon_steps`.
pub fn instantaneous_error(predictions: &[Trajectory], truths: &[Trajectory], horizon_steps: usize) -> Result<f64> {
    check_pairs(predictions, truths, horizon_steps)?;
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| sq_dist(&p.points[horizon_steps - 1], &t.points[horizon_steps - 1]).sqrt())
        .sum();
    Ok(total / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub version: u32,
    pub horizons_s: Vec<f64>,
    pub horizon_steps: Vec<usize>,
    pub rmse_cumulative: Vec<f64>,
    pub rmse_instantaneous: Vec<f64>,
    pub n_vehicles: usize,
    pub sample_rate_hz: f64,
    pub seed: Option<u64>,
    /// Full configuration echo of the run that produced the predictions.
    pub config: serde_json::Value,
    pub fingerprint: String,
    pub note: String,
}

impl HorizonReport {
    /// Attaches the run configuration and recomputes the fingerprint.
    pub fn with_config(mut self, config: serde_json::Value, seed: Option<u64>) -> Self {
        self.fingerprint = fingerprint(&config);
        self.config = config;
        self.seed = seed;
        self
    }
}

/// Short stable hash of a configuration value.
pub fn fingerprint(config: &serde_json::Value) -> String {
    // serde_json maps are ordered by key, so this text is canonical.
    let text = serde_json::to_string(config).expect("json value serializes");
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

pub fn horizon_table(predictions: &[Trajectory], truths: &[Trajectory], rate_hz: f64, horizons_s: &[f64]) -> Result<HorizonReport> {
    if horizons_s.is_empty() {
        return Err(MnnError::Config("no horizons requested".into()));
    }
    let steps: Vec<usize> = horizons_s.iter().map(|&h| steps_for(h, rate_hz)).collect();
    let mut cumulative = Vec::with_capacity(steps.len());
    let mut instantaneous = Vec::with_capacity(steps.len());
    for &s in &steps {
        cumulative.push(rmse(predictions, truths, s)?);
        instantaneous.push(instantaneous_error(predictions, truths, s)?);
    }
    let config = serde_json::Value::Null;
    Ok(HorizonReport {
        version: REPORT_VERSION,
        horizons_s: horizons_s.to_vec(),
        horizon_steps: steps,
        rmse_cumulative: cumulative,
        rmse_instantaneous: instantaneous,
        n_vehicles: predictions.len(),
        sample_rate_hz: rate_hz,
        seed: None,
        fingerprint: fingerprint(&config),
        config,
        note: REPORT_NOTE.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    TableText,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = MnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table-text" | "table" | "text" => Ok(Self::TableText),
            "structured" | "json" => Ok(Self::Structured),
            other => Err(MnnError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn emit_report(report: &HorizonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::TableText => {
            let mut out = String::new();
            let _ = writeln!(out, "{:>9}  {:>5}  {:>17}  {:>20}", "horizon_s", "steps", "rmse_cumulative_m", "rmse_instantaneous_m");
            for i in 0..report.horizons_s.len() {
                let _ = writeln!(
                    out,
                    "{:>9.2}  {:>5}  {:>17.4}  {:>20.4}",
                    report.horizons_s[i], report.horizon_steps[i], report.rmse_cumulative[i], report.rmse_instantaneous[i]
                );
            }
            let _ = writeln!(
                out,
                "vehicles: {}  rate_hz: {}  fingerprint: {}",
                report.n_vehicles, report.sample_rate_hz, report.fingerprint
            );
            let _ = writeln!(out, "note: {}", report.note);
            out
        }
    }
}

pub fn parse_report(text: &str) -> Result<HorizonReport> {
    let report: HorizonReport = serde_json::from_str(text)?;
    if report.version != REPORT_VERSION {
        return Err(MnnError::Parse {
            location: "report".into(),
            message: format!("unsupported report version {}", report.version),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    History,
    Prediction,
}

/// One row of plot-ready overlay data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub vehicle_id: String,
    pub phase: Phase,
    pub step_index: usize,
    /// Seconds relative to the last observed sample.
    pub t_seconds: f64,
    pub x_pred: Option<f64>,
    pub y_pred: Option<f64>,
    pub x_true: Option<f64>,
    pub y_true: Option<f64>,
}

/// History rows (observed positions, ending at the last observed sample)
/// followed by one prediction row per predicted position, paired with the
/// ground truth when available.
pub fn emit_overlay(prediction: &Trajectory, truth: Option<&Trajectory>, history: &Trajectory) -> Vec<OverlayRow> {
    let rate = history.sample_rate_hz;
    let h = history.points.len();
    let mut rows = Vec::with_capacity(h + prediction.points.len());
    for (i, p) in history.points.iter().enumerate() {
        rows.push(OverlayRow {
            vehicle_id: history.vehicle_id.clone(),
            phase: Phase::History,
            step_index: i,
            t_seconds: (i as f64 - (h as f64 - 1.0)) / rate,
            x_pred: None,
            y_pred: None,
            x_true: Some(p[0]),
            y_true: Some(p[1]),
        });
    }
    for (k, p) in prediction.points.iter().enumerate() {
        let t = truth.and_then(|t| t.points.get(k));
        rows.push(OverlayRow {
            vehicle_id: history.vehicle_id.clone(),
            phase: Phase::Prediction,
            step_index: h + k,
            t_seconds: (k + 1) as f64 / rate,
            x_pred: Some(p[0]),
            y_pred: Some(p[1]),
            x_true: t.map(|t| t[0]),
            y_true: t.map(|t| t[1]),
        });
    }
    rows
}

const OVERLAY_HEADER: [&str; 8] = ["vehicle_id", "phase", "step_index", "t_seconds", "x_pred", "y_pred", "x_true", "y_true"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_overlay<W: Write>(rows: &[OverlayRow], writer: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    if header {
        w.write_record(OVERLAY_HEADER)?;
    }
    for r in rows {
        let phase = match r.phase {
            Phase::History => "history",
            Phase::Prediction => "prediction",
        };
        w.write_record([
            r.vehicle_id.clone(),
            phase.to_string(),
            r.step_index.to_string(),
            r.t_seconds.to_string(),
            opt(r.x_pred),
            opt(r.y_pred),
            opt(r.x_true),
            opt(r.y_true),
        ])?;
    }
    w.flush().map_err(|e| MnnError::io("<overlay writer>", e))?;
    Ok(())
}

pub fn read_overlay<R: Read>(reader: R) -> Result<Vec<OverlayRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = OVERLAY_HEADER
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| MnnError::Schema(format!("overlay file lacks column `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |m: String| MnnError::Parse {
            location: format!("line {line}"),
            message: m,
        };
        let get = |i: usize| record.get(cols[i]).unwrap_or("");
        let num = |i: usize| -> Result<Option<f64>> {
            let raw = get(i);
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>().map(Some).map_err(|_| err(format!("`{}` is not a number: `{raw}`", OVERLAY_HEADER[i])))
        };
        let phase = match get(1) {
            "history" => Phase::History,
            "prediction" => Phase::Prediction,
            other => return Err(err(format!("unknown phase `{other}`"))),
        };
        rows.push(OverlayRow {
            vehicle_id: get(0).to_string(),
            phase,
            step_index: get(2).parse().map_err(|_| err(format!("bad step index `{}`", get(2))))?,
            t_seconds: num(3)?.ok_or_else(|| err("missing t_seconds".into()))?,
            x_pred: num(4)?,
            y_pred: num(5)?,
            x_true: num(6)?,
            y_true: num(7)?,
        });
    }
    Ok(rows)
}

/// Per-vehicle predicted and true future positions recovered from overlay
/// rows, keyed by vehicle id. Rows without ground truth are rejected.
pub fn overlay_pairs(rows: &[OverlayRow], rate_hz: f64) -> Result<BTreeMap<String, (Trajectory, Trajectory)>> {
    let mut out: BTreeMap<String, (Trajectory, Trajectory)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.phase == Phase::Prediction) {
        let (Some(xp), Some(yp)) = (r.x_pred, r.y_pred) else {
            return Err(MnnError::Data(format!("vehicle {}: prediction row {} has no prediction", r.vehicle_id, r.step_index)));
        };
        let (Some(xt), Some(yt)) = (r.x_true, r.y_true) else {
            return Err(MnnError::Data(format!("vehicle {}: prediction row {} has no ground truth", r.vehicle_id, r.step_index)));
        };
        let entry = out.entry(r.vehicle_id.clone()).or_insert_with(|| {
            let empty = Trajectory {
                vehicle_id: r.vehicle_id.clone(),
                sample_rate_hz: rate_hz,
                points: vec![],
            };
            (empty.clone(), empty)
        });
        entry.0.points.push([xp, yp]);
        entry.1.points.push([xt, yt]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tr(points: Vec<Point>) -> Trajectory {
        Trajectory { vehicle_id: "v".into(), sample_rate_hz: 10.0, points }
    }

    fn line(n: usize) -> Vec<Point> {
        (0..n).map(|i| [0.1 * i as f64, 1.5 * i as f64]).collect()
    }

    #[test]
    fn perfect_prediction_scores_zero() {
        let t = vec![tr(line(50))];
        assert_eq!(rmse(&t, &t, 50).unwrap(), 0.0);
        let report = horizon_table(&t, &t, 10.0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(report.rmse_cumulative.iter().chain(&report.rmse_instantaneous).all(|&x| x == 0.0));
        assert_eq!(report.horizon_steps, vec![10, 20, 30, 40, 50]);
        let text = emit_report(&report, ReportFormat::TableText);
        assert_eq!(text.matches("0.0000").count(), 10);
    }

    #[test]
    fn constant_offset() {
        let truth = tr(line(20));
        let pred = tr(truth.points.iter().map(|p| [p[0] + 1.0, p[1] + 1.0]).collect());
        let r = rmse(&[pred], &[truth], 20).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn mean_of_roots_across_vehicles() {
        // vehicle a: errors 3 and 4 over two steps -> sqrt(12.5); vehicle b: constant 1 -> 1
        let ta = tr(vec![[0.0, 0.0], [0.0, 0.0]]);
        let pa = tr(vec![[3.0, 0.0], [0.0, 4.0]]);
        let tb = tr(vec![[1.0, 1.0], [2.0, 2.0]]);
        let pb = tr(vec![[1.0, 2.0], [2.0, 3.0]]);
        let a = 12.5f64.sqrt();
        let b = 1.0;
        let r = rmse(&[pa, pb], &[ta, tb], 2).unwrap();
        assert_eq!(r, (a + b) / 2.0);
        // root of pooled mean would be sqrt((12.5 + 1) / 2)
        assert!((r - (13.5f64 / 2.0).sqrt()).abs() > 0.1);
    }

    #[test]
    fn length_mismatch_is_a_data_error() {
        let t = tr(line(10));
        assert!(matches!(rmse(std::slice::from_ref(&t), &[], 5), Err(MnnError::Data(_))));
        assert!(matches!(rmse(std::slice::from_ref(&t), std::slice::from_ref(&t), 11), Err(MnnError::Data(_))));
        assert!(matches!(horizon_table(std::slice::from_ref(&t), std::slice::from_ref(&t), 10.0, &[2.0]), Err(MnnError::Data(_))));
    }

    #[test]
    fn growing_error_gives_growing_cumulative_rmse() {
        let truth = tr(line(50));
        let pred = tr(truth.points.iter().enumerate().map(|(k, p)| [p[0] + 0.05 * k as f64, p[1]]).collect());
        let report = horizon_table(&[pred], &[truth], 10.0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(report.rmse_cumulative.windows(2).all(|w| w[1] >= w[0]));
        assert!(report.rmse_instantaneous.windows(2).all(|w| w[1] >= w[0]));
        assert!(report.rmse_cumulative.iter().zip(&report.rmse_instantaneous).all(|(c, i)| c <= i));
    }

    #[test]
    fn constant_error_makes_both_variants_equal() {
        let truth = tr(line(50));
        let pred = tr(truth.points.iter().map(|p| [p[0] + 0.3, p[1] - 0.4]).collect());
        let report = horizon_table(&[pred], &[truth], 10.0, &[1.0, 3.0, 5.0]).unwrap();
        for (c, i) in report.rmse_cumulative.iter().zip(&report.rmse_instantaneous) {
            assert!((c - i).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn structured_report_round_trips() {
        let truth = tr(line(50));
        let pred = tr(truth.points.iter().map(|p| [p[0] + 0.1 / 3.0, p[1]]).collect());
        let report = horizon_table(&[pred], &[truth], 10.0, &[1.0, 5.0])
            .unwrap()
            .with_config(serde_json::json!({"seed": 3, "eta": 0.001}), Some(3));
        let text = emit_report(&report, ReportFormat::Structured);
        assert_eq!(parse_report(&text).unwrap(), report);
        let other = report.clone().with_config(serde_json::json!({"seed": 3, "eta": 0.002}), Some(3));
        assert_ne!(other.fingerprint, report.fingerprint);
        assert_eq!(emit_report(&report, ReportFormat::Structured), text);
    }

    #[test]
    fn overlay_rows_and_round_trip() {
        let rate = 10.0;
        let history = Trajectory { vehicle_id: "v7".into(), sample_rate_hz: rate, points: line(30) };
        let pred = Trajectory { points: line(50), ..history.clone() };
        let truth = Trajectory { points: (0..50).map(|i| [0.0, i as f64]).collect(), ..history.clone() };
        let rows = emit_overlay(&pred, Some(&truth), &history);
        assert_eq!(rows.iter().filter(|r| r.phase == Phase::History).count(), 30);
        assert_eq!(rows.iter().filter(|r| r.phase == Phase::Prediction).count(), 50);
        assert_eq!(rows[29].t_seconds, 0.0);
        assert_eq!(rows[30].t_seconds, 0.1);

        let mut buf = Vec::new();
        write_overlay(&rows, &mut buf, true).unwrap();
        let back = read_overlay(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let pairs = overlay_pairs(&back, rate).unwrap();
        assert_eq!(pairs["v7"].0.points, pred.points);
        assert_eq!(pairs["v7"].1.points, truth.points);

        let empty = Trajectory { points: vec![], ..history.clone() };
        let only_history = emit_overlay(&empty, None, &history);
        assert_eq!(only_history.len(), 30);
        assert!(only_history.iter().all(|r| r.phase == Phase::History));
    }

    fn arb_traj(n: usize) -> impl Strategy<Value = Vec<Point>> {
        proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0).prop_map(|(a, b)| [a, b]), n)
    }

    proptest! {
        #[test]
        fn rmse_symmetry_translation_scaling(p in arb_traj(12), t in arb_traj(12), dx in -100.0f64..100.0, dy in -100.0f64..100.0, c in -4.0f64..4.0) {
            let (pp, tt) = (tr(p.clone()), tr(t.clone()));
            let base = rmse(std::slice::from_ref(&pp), std::slice::from_ref(&tt), 12).unwrap();
            prop_assert!((base - rmse(std::slice::from_ref(&tt), std::slice::from_ref(&pp), 12).unwrap()).abs() < 1e-12);

            let shift = |v: &[Point]| tr(v.iter().map(|q| [q[0] + dx, q[1] + dy]).collect());
            let moved = rmse(&[shift(&p)], &[shift(&t)], 12).unwrap();
            prop_assert!((moved - base).abs() < 1e-9 * (1.0 + base));

            let scaled: Vec<Point> = t.iter().zip(&p).map(|(a, b)| [a[0] + c * (b[0] - a[0]), a[1] + c * (b[1] - a[1])]).collect();
            let s = rmse(&[tr(scaled)], &[tt], 12).unwrap();
            prop_assert!((s - c.abs() * base).abs() < 1e-9 * (1.0 + base));
        }
    }
}
