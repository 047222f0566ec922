//! Deterministic synthetic trajectories: straight driving, lane changes,
//! turns, and rogue zig-zag driving with speed spikes and abrupt lane
//! changes.
//!
//! Positions are sampled at `t = i / rate_hz` for `i = 0..=floor(duration * rate)`.
//! Gaussian position noise is added after the clean path is built and uses
//! its own random stream, so the clean path does not depend on the noise level.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{DatabaseManifest, ManifestEntry, Provenance, TrajectoryDatabase};
use crate::error::{MnnError, Result};
use crate::trajectory::{steps_for, Point, Trajectory};

const EVENT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Shape of the clean path, with its kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Maneuver {
    Straight,
    /// Cosine-ramp lateral shift of `lane_width` over `window_s`, starting at `start_s`.
    LaneChange {
        lane_width: f64,
        start_s: f64,
        window_s: f64,
    },
    /// Constant-speed circular arc starting at the origin heading along +y.
    ArcTurn {
        radius: f64,
        #[serde(default = "yes")]
        left: bool,
    },
    /// Sinusoidal weaving inside the lane, random speed spikes, and random
    /// abrupt lane changes.
    RogueZigzag {
        amplitude: f64,
        period_s: f64,
        /// Chance per whole second that a speed spike starts.
        spike_probability: f64,
        /// Upper bound on the speed multiplier during a spike.
        spike_factor: f64,
        /// Chance per whole second that a lane change starts.
        lane_change_probability: f64,
        lane_width: f64,
        /// Duration of one abrupt lane change.
        lane_change_window_s: f64,
    },
}

fn yes() -> bool {
    true
}

impl Maneuver {
    pub fn name(&self) -> &'static str {
        match self {
            Maneuver::Straight => "straight",
            Maneuver::LaneChange { .. } => "lane_change",
            Maneuver::ArcTurn { .. } => "arc_turn",
            Maneuver::RogueZigzag { .. } => "rogue_zigzag",
        }
    }

    pub fn is_rogue(&self) -> bool {
        matches!(self, Maneuver::RogueZigzag { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub maneuver: Maneuver,
    /// Nominal speed, m/s.
    pub speed: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Standard deviation of additive position noise, meters.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(maneuver: Maneuver, speed: f64, duration_s: f64, rate_hz: f64) -> Self {
        Self {
            maneuver,
            speed,
            duration_s,
            rate_hz,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MnnError::Config(format!("{} scenario: {msg}", self.maneuver.name())));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration_s));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate_hz));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return bad(format!("speed must be non-negative, got {}", self.speed));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma));
        }
        if steps_for(self.duration_s, self.rate_hz) < 1 {
            return bad("duration is shorter than one sample period".into());
        }
        match self.maneuver {
            Maneuver::Straight => {}
            Maneuver::LaneChange { lane_width, start_s, window_s } => {
                if !(lane_width.is_finite() && start_s >= 0.0 && window_s > 0.0) {
                    return bad("lane change needs finite width, start >= 0 and window > 0".into());
                }
            }
            Maneuver::ArcTurn { radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return bad(format!("turn radius must be positive, got {radius}"));
                }
            }
            Maneuver::RogueZigzag {
                amplitude,
                period_s,
                spike_probability,
                spike_factor,
                lane_change_probability,
                lane_width,
                lane_change_window_s,
            } => {
                if !(lane_width.is_finite() && lane_width > 0.0) {
                    return bad(format!("lane width must be positive, got {lane_width}"));
                }
                if !(amplitude >= 0.0 && amplitude <= lane_width / 2.0) {
                    return bad(format!("zig-zag amplitude {amplitude} must lie in [0, lane_width / 2]"));
                }
                if !(period_s.is_finite() && period_s > 0.0) {
                    return bad(format!("zig-zag period must be positive, got {period_s}"));
                }
                if !(spike_factor >= 1.0 && spike_factor.is_finite()) {
                    return bad(format!("spike factor must be at least 1, got {spike_factor}"));
                }
                for p in [spike_probability, lane_change_probability] {
                    if !(0.0..=1.0).contains(&p) {
                        return bad(format!("event probability {p} outside [0, 1]"));
                    }
                }
                if !(lane_change_window_s.is_finite() && lane_change_window_s > 0.0) {
                    return bad("lane change window must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Upper bound on the speed along either axis of the clean path.
    pub fn max_axis_speed(&self) -> f64 {
        match self.maneuver {
            Maneuver::Straight | Maneuver::ArcTurn { .. } => self.speed,
            Maneuver::LaneChange { lane_width, window_s, .. } => self.speed.max(lane_width.abs() * PI / (2.0 * window_s)),
            Maneuver::RogueZigzag {
                amplitude,
                period_s,
                spike_factor,
                lane_change_probability,
                lane_width,
                lane_change_window_s,
                ..
            } => {
                let weave = amplitude * 2.0 * PI / period_s;
                let shift = if lane_change_probability > 0.0 {
                    lane_width * PI / (2.0 * lane_change_window_s)
                } else {
                    0.0
                };
                (self.speed * spike_factor).max(weave + shift)
            }
        }
    }

    pub fn sample_count(&self) -> usize {
        steps_for(self.duration_s, self.rate_hz) + 1
    }
}

/// `0 -> 0`, `1 -> 1`, smooth in between.
fn cosine_ramp(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    0.5 * (1.0 - (PI * s).cos())
}

struct LaneShift {
    start_s: f64,
    offset: f64,
}

fn zigzag_path(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let Maneuver::RogueZigzag {
        amplitude,
        period_s,
        spike_probability,
        spike_factor,
        lane_change_probability,
        lane_width,
        lane_change_window_s,
    } = spec.maneuver
    else {
        unreachable!("zigzag_path called for another maneuver")
    };
    let n = spec.sample_count();
    let rate = spec.rate_hz;
    let whole_seconds = spec.duration_s.ceil() as usize;

    // speed multiplier per sample
    let mut multiplier = vec![1.0; n];
    for second in 0..whole_seconds {
        if rng.random::<f64>() < spike_probability {
            let factor = rng.random_range(1.0..=spike_factor);
            let length_s = rng.random_range(1.0..=3.0);
            let first = steps_for(second as f64, rate);
            let last = steps_for(second as f64 + length_s, rate).min(n);
            multiplier[first.min(n)..last].iter_mut().for_each(|m| *m = factor);
        }
    }

    let mut shifts: Vec<LaneShift> = Vec::new();
    let mut lane = 0.0;
    let mut busy_until = f64::NEG_INFINITY;
    for second in 0..whole_seconds {
        let start = second as f64;
        if start < busy_until {
            continue;
        }
        if rng.random::<f64>() < lane_change_probability {
            let direction = if lane > 0.0 {
                -1.0
            } else if lane < 0.0 || rng.random::<bool>() {
                1.0
            } else {
                -1.0
            };
            lane += direction * lane_width;
            shifts.push(LaneShift {
                start_s: start,
                offset: direction * lane_width,
            });
            busy_until = start + lane_change_window_s;
        }
    }

    let mut points = Vec::with_capacity(n);
    let mut y = 0.0;
    for (i, m) in multiplier.iter().enumerate() {
        let t = i as f64 / rate;
        let weave = amplitude * (2.0 * PI * t / period_s).sin();
        let shift: f64 = shifts
            .iter()
            .map(|s| s.offset * cosine_ramp((t - s.start_s) / lane_change_window_s))
            .sum();
        points.push([weave + shift, y]);
        y += spec.speed * m / rate;
    }
    points
}

fn clean_path(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = spec.sample_count();
    let rate = spec.rate_hz;
    let time = |i: usize| i as f64 / rate;
    match spec.maneuver {
        Maneuver::Straight => (0..n).map(|i| [0.0, spec.speed * i as f64 / rate]).collect(),
        Maneuver::LaneChange { lane_width, start_s, window_s } => (0..n)
            .map(|i| {
                let t = time(i);
                [lane_width * cosine_ramp((t - start_s) / window_s), spec.speed * i as f64 / rate]
            })
            .collect(),
        Maneuver::ArcTurn { radius, left } => {
            let side = if left { -1.0 } else { 1.0 };
            (0..n)
                .map(|i| {
                    let theta = spec.speed * time(i) / radius;
                    [side * radius * (1.0 - theta.cos()), radius * theta.sin()]
                })
                .collect()
        }
        Maneuver::RogueZigzag { .. } => zigzag_path(spec, rng),
    }
}

/// Builds the trajectory described by `spec`; `vehicle_id` labels it.
pub fn generate_with_id(spec: &ScenarioSpec, vehicle_id: impl Into<String>) -> Result<Trajectory> {
    spec.validate()?;
    let mut events = ChaCha8Rng::seed_from_u64(spec.seed);
    events.set_stream(EVENT_STREAM);
    let mut points = clean_path(spec, &mut events);
    if spec.noise_sigma > 0.0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        noise_rng.set_stream(NOISE_STREAM);
        let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| MnnError::Config(e.to_string()))?;
        for p in &mut points {
            p[0] += noise.sample(&mut noise_rng);
            p[1] += noise.sample(&mut noise_rng);
        }
    }
    Trajectory::new(vehicle_id, spec.rate_hz, points)
}

pub fn generate(spec: &ScenarioSpec) -> Result<Trajectory> {
    generate_with_id(spec, spec.maneuver.name())
}

/// Relative weights of each behavior class in a fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KindMix {
    pub straight: f64,
    pub lane_change: f64,
    pub arc_turn: f64,
    pub rogue_zigzag: f64,
}

impl Default for KindMix {
    fn default() -> Self {
        Self {
            straight: 0.4,
            lane_change: 0.3,
            arc_turn: 0.1,
            rogue_zigzag: 0.2,
        }
    }
}

impl KindMix {
    pub fn all_rogue() -> Self {
        Self {
            straight: 0.0,
            lane_change: 0.0,
            arc_turn: 0.0,
            rogue_zigzag: 1.0,
        }
    }

    fn weights(&self) -> [f64; 4] {
        [self.straight, self.lane_change, self.arc_turn, self.rogue_zigzag]
    }

    /// Per-kind vehicle counts summing to `count`, by largest remainder.
    pub fn allocate(&self, count: usize) -> Result<[usize; 4]> {
        let w = self.weights();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(MnnError::Config("mix weights must be finite and non-negative".into()));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(MnnError::Config("mix weights sum to zero".into()));
        }
        let exact: Vec<f64> = w.iter().map(|x| x / total * count as f64).collect();
        let mut counts = [0usize; 4];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = (e + 1e-9).floor() as usize;
        }
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - counts[a] as f64;
            let fb = exact[b] - counts[b] as f64;
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let mut missing = count - counts.iter().sum::<usize>();
        for k in order {
            if missing == 0 {
                break;
            }
            if w[k] > 0.0 {
                counts[k] += 1;
                missing -= 1;
            }
        }
        Ok(counts)
    }
}

/// Declarative description of a synthetic fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSpec {
    pub count: usize,
    pub mix: KindMix,
    pub seed: u64,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub noise_sigma: f64,
    /// Speed range for regular vehicles, m/s.
    pub speed_range: [f64; 2],
    /// Speed range for rogue vehicles, m/s.
    pub rogue_speed_range: [f64; 2],
    pub lane_width: f64,
    pub lane_change_window_range: [f64; 2],
    pub turn_radius_range: [f64; 2],
    pub zigzag_amplitude_range: [f64; 2],
    pub zigzag_period_range: [f64; 2],
    pub spike_probability: f64,
    pub spike_factor: f64,
    pub rogue_lane_change_probability: f64,
    pub rogue_lane_change_window_s: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            count: 20,
            mix: KindMix::default(),
            seed: 0,
            duration_s: 60.0,
            rate_hz: 20.0,
            noise_sigma: 0.05,
            speed_range: [8.0, 15.0],
            rogue_speed_range: [15.0, 25.0],
            lane_width: 3.5,
            lane_change_window_range: [3.0, 6.0],
            turn_radius_range: [40.0, 120.0],
            zigzag_amplitude_range: [0.5, 1.5],
            zigzag_period_range: [2.0, 6.0],
            spike_probability: 0.05,
            spike_factor: 1.5,
            rogue_lane_change_probability: 0.03,
            rogue_lane_change_window_s: 1.0,
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..=range[1])
    } else {
        range[0]
    }
}

impl FleetSpec {
    /// Scenario for vehicle `index` of kind `kind` (0 straight, 1 lane change,
    /// 2 arc turn, 3 rogue). Depends only on `(seed, index, kind)`.
    fn vehicle_spec(&self, index: usize, kind: usize) -> ScenarioSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2 + index as u64);
        let seed: u64 = rng.random();
        let (maneuver, speed) = match kind {
            0 => (Maneuver::Straight, draw(&mut rng, self.speed_range)),
            1 => {
                let window_s = draw(&mut rng, self.lane_change_window_range);
                let latest = (self.duration_s - window_s).max(0.0);
                let start_s = rng.random_range(0.0..=latest);
                let width = if rng.random::<bool>() { self.lane_width } else { -self.lane_width };
                (
                    Maneuver::LaneChange {
                        lane_width: width,
                        start_s,
                        window_s,
                    },
                    draw(&mut rng, self.speed_range),
                )
            }
            2 => (
                Maneuver::ArcTurn {
                    radius: draw(&mut rng, self.turn_radius_range),
                    left: rng.random::<bool>(),
                },
                draw(&mut rng, self.speed_range),
            ),
            _ => (
                Maneuver::RogueZigzag {
                    amplitude: draw(&mut rng, self.zigzag_amplitude_range).min(self.lane_width / 2.0),
                    period_s: draw(&mut rng, self.zigzag_period_range),
                    spike_probability: self.spike_probability,
                    spike_factor: self.spike_factor,
                    lane_change_probability: self.rogue_lane_change_probability,
                    lane_width: self.lane_width,
                    lane_change_window_s: self.rogue_lane_change_window_s,
                },
                draw(&mut rng, self.rogue_speed_range),
            ),
        };
        ScenarioSpec {
            maneuver,
            speed,
            duration_s: self.duration_s,
            rate_hz: self.rate_hz,
            noise_sigma: self.noise_sigma,
            seed,
        }
    }
}

/// Generated fleet and its manifest, which records every vehicle's scenario.
#[derive(Debug, Clone)]
pub struct Fleet {
    pub database: TrajectoryDatabase,
    pub manifest: DatabaseManifest,
}

impl Fleet {
    /// Ids of vehicles whose scenario is `kind` (e.g. `"rogue_zigzag"`).
    pub fn ids_of_kind(&self, kind: &str) -> Vec<String> {
        self.manifest
            .vehicles
            .iter()
            .filter(|v| v.scenario.as_ref().is_some_and(|s| s.maneuver.name() == kind))
            .map(|v| v.vehicle_id.clone())
            .collect()
    }
}

pub fn generate_fleet(spec: &FleetSpec) -> Result<Fleet> {
    if spec.count == 0 {
        return Err(MnnError::Config("fleet count must be at least 1".into()));
    }
    let counts = spec.mix.allocate(spec.count)?;
    let mut kinds: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(EVENT_STREAM);
    kinds.shuffle(&mut rng);

    let width = (spec.count - 1).to_string().len().max(3);
    let mut trajectories = Vec::with_capacity(spec.count);
    let mut entries = Vec::with_capacity(spec.count);
    for (index, kind) in kinds.into_iter().enumerate() {
        let id = format!("veh-{index:0width$}");
        let scenario = spec.vehicle_spec(index, kind);
        let traj = generate_with_id(&scenario, id.clone())?;
        entries.push(ManifestEntry {
            vehicle_id: id,
            points: traj.points.len(),
            duration_s: traj.duration_s(),
            scenario: Some(scenario),
        });
        trajectories.push(traj);
    }
    let database = TrajectoryDatabase::new(spec.rate_hz, Provenance::Synthetic, trajectories)?;
    entries.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id));
    Ok(Fleet {
        manifest: DatabaseManifest {
            version: 1,
            provenance: Provenance::Synthetic,
            sample_rate_hz: spec.rate_hz,
            vehicles: entries,
        },
        database,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::differentiate;
    use proptest::prelude::*;

    fn zigzag(amplitude: f64, lane_changes: f64) -> Maneuver {
        Maneuver::RogueZigzag {
            amplitude,
            period_s: 4.0,
            spike_probability: 0.2,
            spike_factor: 2.0,
            lane_change_probability: lane_changes,
            lane_width: 3.5,
            lane_change_window_s: 1.0,
        }
    }

    #[test]
    fn straight_deltas_are_exact() {
        let t = generate(&ScenarioSpec::new(Maneuver::Straight, 10.0, 1.0, 20.0)).unwrap();
        let d = differentiate(&t).unwrap();
        assert_eq!(d.deltas.len(), 20);
        assert!(d.deltas.iter().all(|d| *d == [0.0, 0.5]));
    }

    #[test]
    fn quarter_turn_chord() {
        // 200 samples over a quarter circle of radius 50 m at 10 m/s
        let duration = PI / 2.0 * 50.0 / 10.0;
        let rate = 200.0 / duration;
        let spec = ScenarioSpec::new(Maneuver::ArcTurn { radius: 50.0, left: true }, 10.0, duration, rate);
        let t = generate(&spec).unwrap();
        assert_eq!(t.points.len(), 201);
        let end = t.points.last().unwrap();
        let chord = (end[0] * end[0] + end[1] * end[1]).sqrt();
        assert!((chord - 50.0 * 2f64.sqrt()).abs() < 1e-6, "{chord}");
        assert!((end[0] + 50.0).abs() < 1e-6 && (end[1] - 50.0).abs() < 1e-6);
    }

    #[test]
    fn zigzag_peak_is_amplitude() {
        let t = generate(&ScenarioSpec::new(zigzag(1.0, 0.0), 20.0, 60.0, 20.0).with_seed(3)).unwrap();
        let max = t.points.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-6, "{max}");
    }

    #[test]
    fn lane_change_reaches_the_next_lane() {
        let spec = ScenarioSpec::new(Maneuver::LaneChange { lane_width: 3.5, start_s: 2.0, window_s: 3.0 }, 12.0, 10.0, 20.0);
        let t = generate(&spec).unwrap();
        assert_eq!(t.points[0][0], 0.0);
        assert!((t.points.last().unwrap()[0] - 3.5).abs() < 1e-12);
        assert!(t.points.windows(2).all(|w| w[1][0] >= w[0][0]));
    }

    #[test]
    fn inconsistent_parameters_are_rejected() {
        let e = generate(&ScenarioSpec::new(zigzag(2.0, 0.0), 20.0, 10.0, 20.0)).unwrap_err();
        assert!(matches!(e, MnnError::Config(ref m) if m.contains("amplitude")), "{e}");
        assert!(generate(&ScenarioSpec::new(Maneuver::ArcTurn { radius: 0.0, left: true }, 10.0, 5.0, 20.0)).is_err());
        assert!(generate(&ScenarioSpec::new(Maneuver::Straight, 10.0, 0.0, 20.0)).is_err());
        assert!(generate(&ScenarioSpec::new(Maneuver::Straight, -1.0, 1.0, 20.0)).is_err());
    }

    #[test]
    fn noise_is_seeded_and_separate_from_the_path() {
        let base = ScenarioSpec::new(zigzag(1.0, 0.1), 20.0, 30.0, 20.0).with_seed(9);
        let clean = generate(&base).unwrap();
        let noisy = generate(&base.clone().with_noise(0.05)).unwrap();
        assert_eq!(noisy, generate(&base.clone().with_noise(0.05)).unwrap());
        let dev: f64 = clean.points.iter().zip(&noisy.points).map(|(a, b)| (a[0] - b[0]).powi(2)).sum::<f64>() / clean.len() as f64;
        assert!((dev.sqrt() - 0.05).abs() < 0.01, "{}", dev.sqrt());
    }

    #[test]
    fn rogue_fleet_shape() {
        let spec = FleetSpec { count: 20, mix: KindMix::all_rogue(), seed: 1, ..Default::default() };
        let fleet = generate_fleet(&spec).unwrap();
        assert_eq!(fleet.database.len(), 20);
        assert_eq!(fleet.ids_of_kind("rogue_zigzag").len(), 20);
        // one minute at 20 Hz, both endpoints sampled
        assert!(fleet.database.iter().all(|t| t.points.len() == 1201));
    }

    #[test]
    fn mixed_fleet_has_exact_rogue_share() {
        let mix = KindMix { straight: 0.5, lane_change: 0.3, arc_turn: 0.0, rogue_zigzag: 0.2 };
        let spec = FleetSpec { count: 100, mix, seed: 2, duration_s: 5.0, ..Default::default() };
        let fleet = generate_fleet(&spec).unwrap();
        assert_eq!(fleet.ids_of_kind("rogue_zigzag").len(), 20);
        assert_eq!(fleet.ids_of_kind("straight").len(), 50);
        assert_eq!(fleet.manifest.vehicles.len(), 100);
    }

    #[test]
    fn fleet_is_reproducible() {
        let spec = FleetSpec { count: 12, seed: 5, duration_s: 10.0, ..Default::default() };
        let a = generate_fleet(&spec).unwrap();
        let b = generate_fleet(&spec).unwrap();
        assert_eq!(a.database, b.database);
        assert_eq!(a.manifest, b.manifest);
        let c = generate_fleet(&FleetSpec { seed: 6, ..spec }).unwrap();
        assert_ne!(a.database, c.database);
    }

    #[test]
    fn allocation_sums_to_count() {
        let mix = KindMix { straight: 1.0, lane_change: 1.0, arc_turn: 1.0, rogue_zigzag: 0.0 };
        assert_eq!(mix.allocate(10).unwrap(), [4, 3, 3, 0]);
        assert!(KindMix { straight: 0.0, lane_change: 0.0, arc_turn: 0.0, rogue_zigzag: 0.0 }.allocate(3).is_err());
    }

    #[test]
    fn scenario_spec_text_round_trip() {
        let spec = ScenarioSpec::new(zigzag(1.0, 0.05), 18.0, 60.0, 20.0).with_noise(0.05).with_seed(4);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"rogue_zigzag\""));
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&json).unwrap(), spec);
    }

    fn any_maneuver() -> impl Strategy<Value = Maneuver> {
        prop_oneof![
            Just(Maneuver::Straight),
            (1.0f64..4.0, 0.0f64..5.0, 0.5f64..6.0).prop_map(|(lane_width, start_s, window_s)| Maneuver::LaneChange { lane_width, start_s, window_s }),
            (5.0f64..200.0, any::<bool>()).prop_map(|(radius, left)| Maneuver::ArcTurn { radius, left }),
            (0.0f64..1.75, 2.0f64..6.0, 0.0f64..0.5, 1.0f64..2.0, 0.0f64..0.3, 0.3f64..2.0).prop_map(|(a, p, sp, sf, lc, w)| Maneuver::RogueZigzag {
                amplitude: a, period_s: p, spike_probability: sp, spike_factor: sf,
                lane_change_probability: lc, lane_width: 3.5, lane_change_window_s: w,
            }),
        ]
    }

    proptest! {
        #[test]
        fn deltas_bounded_by_axis_speed(m in any_maneuver(), speed in 0.0f64..40.0, rate in prop_oneof![Just(10.0), Just(20.0)], seed in any::<u64>()) {
            let spec = ScenarioSpec::new(m, speed, 15.0, rate).with_seed(seed);
            let t = generate(&spec).unwrap();
            let bound = spec.max_axis_speed() / rate + 1e-9;
            for d in differentiate(&t).unwrap().deltas {
                prop_assert!(d[0].abs() <= bound && d[1].abs() <= bound, "{:?} > {}", d, bound);
            }
            prop_assert_eq!(t.points.len(), spec.sample_count());
            prop_assert_eq!(generate(&spec).unwrap(), t);
        }
    }
}
