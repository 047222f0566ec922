//! Absolute and differential trajectories, priming, teacher-forced history
//! feeding and closed-loop look-ahead rollout.

use serde::{Deserialize, Serialize};

use crate::error::{MnnError, Result};
use crate::learn::{LearningConfig, Trainer};
use crate::network::{forward_in_place, reset_state, ForwardTrace, NetworkParameters};

/// `(x, y)` in meters: `x` lateral, `y` longitudinal.
pub type Point = [f64; 2];

/// Uniformly sampled absolute track of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vehicle_id: String,
    pub sample_rate_hz: f64,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn new(vehicle_id: impl Into<String>, sample_rate_hz: f64, points: Vec<Point>) -> Result<Self> {
        let t = Self {
            vehicle_id: vehicle_id.into(),
            sample_rate_hz,
            points,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(MnnError::Config(format!(
                "vehicle {}: sample rate must be positive, got {}",
                self.vehicle_id, self.sample_rate_hz
            )));
        }
        if self.points.len() < 2 {
            return Err(MnnError::Data(format!(
                "vehicle {} has {} points, at least 2 are required",
                self.vehicle_id,
                self.points.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.points.len().saturating_sub(1) as f64 / self.sample_rate_hz
    }
}

/// Consecutive position differences plus the absolute first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialTrajectory {
    pub vehicle_id: String,
    pub sample_rate_hz: f64,
    pub anchor: Point,
    pub deltas: Vec<Point>,
}

/// Number of whole samples in `seconds` at `rate_hz`, tolerant of binary
/// rounding (`0.3 * 10.0` counts as 3).
pub fn steps_for(seconds: f64, rate_hz: f64) -> usize {
    (seconds * rate_hz + 1e-9).floor().max(0.0) as usize
}

pub fn differentiate(traj: &Trajectory) -> Result<DifferentialTrajectory> {
    if traj.points.len() < 2 {
        return Err(MnnError::Data(format!(
            "vehicle {} has {} points, differencing needs at least 2",
            traj.vehicle_id,
            traj.points.len()
        )));
    }
    Ok(DifferentialTrajectory {
        vehicle_id: traj.vehicle_id.clone(),
        sample_rate_hz: traj.sample_rate_hz,
        anchor: traj.points[0],
        deltas: traj
            .points
            .windows(2)
            .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
            .collect(),
    })
}

/// Running sum of the deltas starting at the anchor.
pub fn reconstruct(diff: &DifferentialTrajectory) -> Trajectory {
    let mut points = Vec::with_capacity(diff.deltas.len() + 1);
    let mut p = diff.anchor;
    points.push(p);
    for d in &diff.deltas {
        p = [p[0] + d[0], p[1] + d[1]];
        points.push(p);
    }
    Trajectory {
        vehicle_id: diff.vehicle_id.clone(),
        sample_rate_hz: diff.sample_rate_hz,
        points,
    }
}

/// Learning rates for continued training while the history is fed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineAdaptation {
    pub eta: f64,
    pub eta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionRequest {
    pub history_seconds: f64,
    pub horizon_seconds: f64,
    /// Times the first history sample is fed before the history itself.
    pub prime_repeats: usize,
    /// Keep learning on the history. Inference only when `None`.
    pub online_adaptation: Option<OnlineAdaptation>,
}

impl Default for PredictionRequest {
    fn default() -> Self {
        Self {
            history_seconds: 3.0,
            horizon_seconds: 5.0,
            prime_repeats: 50,
            online_adaptation: None,
        }
    }
}

impl PredictionRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.history_seconds.is_finite() && self.history_seconds > 0.0) {
            return Err(MnnError::Config(format!("history_seconds must be positive, got {}", self.history_seconds)));
        }
        if !(self.horizon_seconds.is_finite() && self.horizon_seconds > 0.0) {
            return Err(MnnError::Config(format!("horizon_seconds must be positive, got {}", self.horizon_seconds)));
        }
        Ok(())
    }

    pub fn history_steps(&self, rate_hz: f64) -> usize {
        steps_for(self.history_seconds, rate_hz)
    }

    pub fn horizon_steps(&self, rate_hz: f64) -> usize {
        steps_for(self.horizon_seconds, rate_hz)
    }
}

/// Closed-loop prediction of the horizon deltas.
///
/// The most recent `history_steps` deltas of `history` are consumed: the
/// first of them is fed `prime_repeats` times, then all of them once in
/// order. The output after the last history delta is the first predicted
/// delta; every further prediction feeds the previous output back as input.
///
/// The returned trajectory is anchored at the last observed absolute
/// position, so [`reconstruct`] yields that position followed by the
/// predicted future positions.
pub fn predict(
    params: &NetworkParameters,
    request: &PredictionRequest,
    history: &DifferentialTrajectory,
) -> Result<DifferentialTrajectory> {
    request.validate()?;
    let rate = history.sample_rate_hz;
    let need = request.history_steps(rate);
    let horizon = request.horizon_steps(rate);
    if need == 0 || history.deltas.len() < need {
        return Err(MnnError::Data(format!(
            "vehicle {}: prediction needs {} history deltas ({} s at {} Hz), got {}",
            history.vehicle_id,
            need.max(1),
            request.history_seconds,
            rate,
            history.deltas.len()
        )));
    }
    let window = &history.deltas[history.deltas.len() - need..];

    let mut adapted;
    let params = match request.online_adaptation {
        Some(rates) => {
            adapted = params.clone();
            let config = LearningConfig {
                eta: rates.eta,
                eta_prime: rates.eta_prime,
                ..LearningConfig::default()
            };
            let mut trainer = Trainer::new(&adapted.topology);
            let mut state = reset_state(&adapted.topology);
            for _ in 0..request.prime_repeats {
                trainer.step(&mut adapted, &mut state, &window[0], &window[0], &config)?;
            }
            for pair in window.windows(2) {
                trainer.step(&mut adapted, &mut state, &pair[0], &pair[1], &config)?;
            }
            &adapted
        }
        None => params,
    };

    let mut state = reset_state(&params.topology);
    let mut trace = ForwardTrace::empty(&params.topology);
    for _ in 0..request.prime_repeats {
        forward_in_place(params, &mut state, &window[0], &mut trace)?;
    }
    let mut last = [0.0; 2];
    for d in window {
        let out = forward_in_place(params, &mut state, d, &mut trace)?;
        last = to_point(out)?;
    }

    let mut deltas = Vec::with_capacity(horizon);
    for k in 0..horizon {
        if k > 0 {
            let out = forward_in_place(params, &mut state, &last, &mut trace)?;
            last = to_point(out)?;
        }
        if !(last[0].is_finite() && last[1].is_finite()) {
            return Err(MnnError::Numeric(format!(
                "vehicle {}: rollout became non-finite at step {k}",
                history.vehicle_id
            )));
        }
        deltas.push(last);
    }

    let anchor = history
        .deltas
        .iter()
        .fold(history.anchor, |p, d| [p[0] + d[0], p[1] + d[1]]);
    Ok(DifferentialTrajectory {
        vehicle_id: history.vehicle_id.clone(),
        sample_rate_hz: rate,
        anchor,
        deltas,
    })
}

fn to_point(out: &[f64]) -> Result<Point> {
    match out {
        [x, y] => Ok([*x, *y]),
        _ => Err(MnnError::Config(format!(
            "trajectory prediction needs a network with 2 outputs, got {}",
            out.len()
        ))),
    }
}

/// Predicted future absolute positions, excluding the last observed point.
pub fn predict_positions(
    params: &NetworkParameters,
    request: &PredictionRequest,
    history: &DifferentialTrajectory,
) -> Result<Trajectory> {
    let diff = predict(params, request, history)?;
    let mut traj = reconstruct(&diff);
    traj.points.remove(0);
    Ok(traj)
}

/// Constant-velocity extrapolation using the mean delta over the last half
/// second of `history`. Returns the future positions only.
pub fn constant_velocity_baseline(history: &Trajectory, horizon_seconds: f64) -> Result<Trajectory> {
    history.validate()?;
    let rate = history.sample_rate_hz;
    let available = history.points.len() - 1;
    let span = steps_for(0.5, rate).clamp(1, available);
    let last = history.points[available];
    let first = history.points[available - span];
    let v = [(last[0] - first[0]) / span as f64, (last[1] - first[1]) / span as f64];
    let points = (1..=steps_for(horizon_seconds, rate))
        .map(|k| [last[0] + v[0] * k as f64, last[1] + v[1] * k as f64])
        .collect();
    Ok(Trajectory {
        vehicle_id: history.vehicle_id.clone(),
        sample_rate_hz: rate,
        points,
    })
}
