//! Trajectory database: CSV ingestion, resampling, splitting and manifests.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MnnError, Result};
use crate::synth::ScenarioSpec;
use crate::trajectory::{differentiate, steps_for, DifferentialTrajectory, Point, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    NgsimCsv,
    Synthetic,
    Replay,
}

/// Vehicle tracks sharing one sample rate, iterated in vehicle-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDatabase {
    sample_rate_hz: f64,
    provenance: Provenance,
    trajectories: BTreeMap<String, Trajectory>,
}

impl TrajectoryDatabase {
    pub fn new(sample_rate_hz: f64, provenance: Provenance, trajectories: impl IntoIterator<Item = Trajectory>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(MnnError::Config(format!("database sample rate must be positive, got {sample_rate_hz}")));
        }
        let mut map = BTreeMap::new();
        for t in trajectories {
            t.validate()?;
            if t.sample_rate_hz != sample_rate_hz {
                return Err(MnnError::Data(format!(
                    "vehicle {} is sampled at {} Hz, database rate is {} Hz",
                    t.vehicle_id, t.sample_rate_hz, sample_rate_hz
                )));
            }
            let id = t.vehicle_id.clone();
            if map.insert(id.clone(), t).is_some() {
                return Err(MnnError::Data(format!("duplicate vehicle id {id}")));
            }
        }
        Ok(Self {
            sample_rate_hz,
            provenance,
            trajectories: map,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, vehicle_id: &str) -> Option<&Trajectory> {
        self.trajectories.get(vehicle_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.values()
    }

    pub fn vehicle_ids(&self) -> impl Iterator<Item = &str> {
        self.trajectories.keys().map(String::as_str)
    }

    /// Differential samples of every vehicle, in id order.
    pub fn differentials(&self) -> Result<Vec<DifferentialTrajectory>> {
        self.iter().map(differentiate).collect()
    }

    /// Sub-database holding only `ids`.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let picked = ids
            .into_iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| MnnError::Data(format!("unknown vehicle id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.sample_rate_hz, self.provenance, picked)
    }

    pub fn manifest(&self) -> DatabaseManifest {
        DatabaseManifest {
            version: 1,
            provenance: self.provenance,
            sample_rate_hz: self.sample_rate_hz,
            vehicles: self
                .iter()
                .map(|t| ManifestEntry {
                    vehicle_id: t.vehicle_id.clone(),
                    points: t.points.len(),
                    duration_s: t.duration_s(),
                    scenario: None,
                })
                .collect(),
        }
    }
}

/// Column names and unit conversion for trajectory CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub vehicle_id: String,
    pub frame: String,
    pub x: String,
    pub y: String,
    /// Multiplier converting file distances to meters.
    pub unit_scale: f64,
}

impl CsvSchema {
    /// Standard NGSIM export: local coordinates in feet.
    pub fn ngsim() -> Self {
        Self {
            vehicle_id: "Vehicle_ID".into(),
            frame: "Frame_ID".into(),
            x: "Local_X".into(),
            y: "Local_Y".into(),
            unit_scale: 0.3048,
        }
    }

    /// Format written by [`save_csv`], in meters.
    pub fn native() -> Self {
        Self {
            vehicle_id: "vehicle_id".into(),
            frame: "frame".into(),
            x: "x".into(),
            y: "y".into(),
            unit_scale: 1.0,
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "ngsim" => Ok(Self::ngsim()),
            "native" | "synthetic" => Ok(Self::native()),
            other => Err(MnnError::Config(format!("unknown csv profile `{other}`"))),
        }
    }
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self::native()
    }
}

/// Loaded database plus rows that could not become part of a trajectory.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub database: TrajectoryDatabase,
    pub diagnostics: Vec<String>,
}

struct Row {
    line: u64,
    frame: i64,
    point: Point,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| MnnError::Schema(format!("missing column `{name}`")))
}

/// Reads an NGSIM-shaped CSV. Rows are grouped by vehicle and ordered by
/// frame; a jump of more than one frame starts a new segment with id
/// `<vehicle>_s<k>`.
pub fn load_csv_from_reader<R: Read>(reader: R, schema: &CsvSchema, rate_hz: f64, provenance: Provenance) -> Result<CsvLoad> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (ci, cf, cx, cy) = (
        column(&headers, &schema.vehicle_id)?,
        column(&headers, &schema.frame)?,
        column(&headers, &schema.x)?,
        column(&headers, &schema.y)?,
    );

    let mut groups: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| {
            record.get(idx).ok_or_else(|| MnnError::Parse {
                location: format!("line {line}"),
                message: format!("missing value for `{name}`"),
            })
        };
        let number = |idx: usize, name: &str| -> Result<f64> {
            let raw = field(idx, name)?;
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| MnnError::Parse {
                location: format!("line {line}"),
                message: format!("`{name}` is not a finite number: `{raw}`"),
            })
        };
        let id = field(ci, &schema.vehicle_id)?.to_string();
        let frame_raw = number(cf, &schema.frame)?;
        if frame_raw.fract() != 0.0 {
            return Err(MnnError::Parse {
                location: format!("line {line}"),
                message: format!("frame index `{frame_raw}` is not an integer"),
            });
        }
        let point = [number(cx, &schema.x)? * schema.unit_scale, number(cy, &schema.y)? * schema.unit_scale];
        groups.entry(id).or_default().push(Row {
            line,
            frame: frame_raw as i64,
            point,
        });
    }

    let mut trajectories = Vec::new();
    let mut diagnostics = Vec::new();
    for (id, mut rows) in groups {
        rows.sort_by_key(|r| (r.frame, r.line));
        if let Some(w) = rows.windows(2).find(|w| w[0].frame == w[1].frame) {
            return Err(MnnError::Data(format!(
                "vehicle {id}: duplicate frame {} on line {} and line {}",
                w[0].frame, w[0].line, w[1].line
            )));
        }
        let mut segments: Vec<Vec<&Row>> = vec![vec![]];
        for (i, row) in rows.iter().enumerate() {
            if i > 0 && row.frame != rows[i - 1].frame + 1 {
                segments.push(vec![]);
            }
            segments.last_mut().expect("non-empty").push(row);
        }
        let multi = segments.len() > 1;
        for (k, seg) in segments.into_iter().enumerate() {
            let seg_id = if multi { format!("{id}_s{k}") } else { id.clone() };
            if seg.len() < 2 {
                diagnostics.push(format!(
                    "line {}: vehicle {seg_id} segment has a single point and was skipped",
                    seg[0].line
                ));
                continue;
            }
            trajectories.push(Trajectory::new(seg_id, rate_hz, seg.iter().map(|r| r.point).collect())?);
        }
    }
    Ok(CsvLoad {
        database: TrajectoryDatabase::new(rate_hz, provenance, trajectories)?,
        diagnostics,
    })
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema, rate_hz: f64) -> Result<TrajectoryDatabase> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| MnnError::io(path, e))?;
    let provenance = if *schema == CsvSchema::native() { Provenance::Replay } else { Provenance::NgsimCsv };
    let load = load_csv_from_reader(file, schema, rate_hz, provenance)?;
    for d in &load.diagnostics {
        warn!("{}: {d}", path.display());
    }
    Ok(load.database)
}

/// Writes the database in the native schema, one row per point.
pub fn write_csv<W: Write>(db: &TrajectoryDatabase, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["vehicle_id", "frame", "x", "y"])?;
    for t in db.iter() {
        for (frame, p) in t.points.iter().enumerate() {
            w.write_record([t.vehicle_id.clone(), frame.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
    }
    w.flush().map_err(|e| MnnError::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(db: &TrajectoryDatabase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| MnnError::io(path, e))?;
    write_csv(db, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub vehicle_id: String,
    pub points: usize,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseManifest {
    pub version: u32,
    pub provenance: Provenance,
    pub sample_rate_hz: f64,
    pub vehicles: Vec<ManifestEntry>,
}

impl DatabaseManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn resample_one(t: &Trajectory, target_hz: f64) -> Result<Trajectory> {
    let src = t.sample_rate_hz;
    let last = t.points.len() - 1;
    let count = steps_for(last as f64 / src, target_hz) + 1;
    if count < 2 {
        return Err(MnnError::Data(format!(
            "vehicle {} spans {} s, too short for {} Hz",
            t.vehicle_id,
            t.duration_s(),
            target_hz
        )));
    }
    let points = (0..count)
        .map(|i| {
            let s = i as f64 * src / target_hz;
            let k = ((s + 1e-9).floor() as usize).min(last);
            let frac = s - k as f64;
            if frac.abs() < 1e-9 || k == last {
                t.points[k]
            } else {
                let (a, b) = (t.points[k], t.points[k + 1]);
                [a[0] + (b[0] - a[0]) * frac, a[1] + (b[1] - a[1]) * frac]
            }
        })
        .collect();
    Trajectory::new(t.vehicle_id.clone(), target_hz, points)
}

/// Linear interpolation onto a uniform grid at `target_hz` that starts at the
/// first sample. The grid never extends past the last source sample.
pub fn resample(db: &TrajectoryDatabase, target_hz: f64) -> Result<TrajectoryDatabase> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(MnnError::Config(format!("target rate must be positive, got {target_hz}")));
    }
    if target_hz == db.sample_rate_hz {
        return Ok(db.clone());
    }
    if target_hz > 10.0 * db.sample_rate_hz {
        warn!(
            "upsampling from {} Hz to {} Hz exceeds 10x the source rate",
            db.sample_rate_hz, target_hz
        );
    }
    let trajectories = db.iter().map(|t| resample_one(t, target_hz)).collect::<Result<Vec<_>>>()?;
    TrajectoryDatabase::new(target_hz, db.provenance, trajectories)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Share of vehicles held out for testing, in `(0, 1)`.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Seeded by-vehicle split into `(train, test)`.
pub fn split(db: &TrajectoryDatabase, spec: &SplitSpec) -> Result<(TrajectoryDatabase, TrajectoryDatabase)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(MnnError::Config(format!("test fraction must be in (0, 1), got {}", spec.test_fraction)));
    }
    let n = db.len();
    if n < 2 {
        return Err(MnnError::Data(format!("splitting needs at least 2 vehicles, database has {n}")));
    }
    let mut ids: Vec<&str> = db.vehicle_ids().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_test = ((n as f64 * spec.test_fraction).round() as usize).clamp(1, n - 1);
    let (test, train) = ids.split_at(n_test);
    Ok((db.subset(train.iter().copied())?, db.subset(test.iter().copied())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(id: &str, rate: f64, n: usize) -> Trajectory {
        Trajectory::new(id, rate, (0..n).map(|i| [0.1 * i as f64, 2.0 * i as f64 + 1.0]).collect()).unwrap()
    }

    const TWO_VEHICLES: &str = "\
Vehicle_ID,Frame_ID,Total_Frames,Local_X,Local_Y
1,10,5,1.0,100.0
2,7,5,12.0,50.0
1,11,5,1.5,110.0
2,8,5,12.0,55.0
1,12,5,2.0,120.0
2,9,5,12.0,60.0
1,13,5,2.5,130.0
2,10,5,12.0,65.0
1,14,5,3.0,140.0
2,11,5,12.0,70.0
";

    #[test]
    fn loads_two_vehicles() {
        let load = load_csv_from_reader(TWO_VEHICLES.as_bytes(), &CsvSchema::ngsim(), 10.0, Provenance::NgsimCsv).unwrap();
        let db = load.database;
        assert_eq!(db.len(), 2);
        assert!(db.iter().all(|t| t.points.len() == 5));
        let v1 = db.get("1").unwrap();
        assert!((v1.points[1][1] - 110.0 * 0.3048).abs() < 1e-12);
        assert!(load.diagnostics.is_empty());
    }

    #[test]
    fn frame_gap_splits_vehicle() {
        let text = "vehicle_id,frame,x,y\na,0,0,0\na,1,0,1\na,2,0,2\na,5,0,5\na,6,0,6\nb,0,1,1\n";
        let load = load_csv_from_reader(text.as_bytes(), &CsvSchema::native(), 10.0, Provenance::Replay).unwrap();
        let ids: Vec<&str> = load.database.vehicle_ids().collect();
        assert_eq!(ids, vec!["a_s0", "a_s1"]);
        assert_eq!(load.database.get("a_s1").unwrap().points, vec![[0.0, 5.0], [0.0, 6.0]]);
        assert_eq!(load.diagnostics.len(), 1);
        assert!(load.diagnostics[0].contains("line 7"), "{:?}", load.diagnostics);
    }

    #[test]
    fn missing_column_and_duplicates() {
        let err = load_csv_from_reader("vehicle_id,frame,x\n".as_bytes(), &CsvSchema::native(), 10.0, Provenance::Replay).unwrap_err();
        assert!(matches!(err, MnnError::Schema(ref m) if m.contains("`y`")), "{err}");
        let dup = "vehicle_id,frame,x,y\na,0,0,0\na,1,0,1\na,0,0,2\n";
        let err = load_csv_from_reader(dup.as_bytes(), &CsvSchema::native(), 10.0, Provenance::Replay).unwrap_err();
        assert!(matches!(err, MnnError::Data(ref m) if m.contains("line 2") && m.contains("line 4")), "{err}");
        let bad = "vehicle_id,frame,x,y\na,0,0,zero\n";
        let err = load_csv_from_reader(bad.as_bytes(), &CsvSchema::native(), 10.0, Provenance::Replay).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unordered_frames_are_sorted() {
        let text = "vehicle_id,frame,x,y\na,2,0,2\na,0,0,0\na,1,0,1\n";
        let load = load_csv_from_reader(text.as_bytes(), &CsvSchema::native(), 10.0, Provenance::Replay).unwrap();
        assert_eq!(load.database.get("a").unwrap().points, vec![[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]]);
    }

    #[test]
    fn csv_round_trip_via_file() {
        let db = TrajectoryDatabase::new(
            20.0,
            Provenance::Synthetic,
            vec![ramp("v1", 20.0, 7), Trajectory::new("v2", 20.0, vec![[0.1, 1.0 / 3.0], [1e-7, -2.5e6]]).unwrap()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fleet.csv");
        save_csv(&db, &path).unwrap();
        let back = load_csv(&path, &CsvSchema::native(), 20.0).unwrap();
        for (a, b) in db.iter().zip(back.iter()) {
            assert_eq!(a.vehicle_id, b.vehicle_id);
            assert_eq!(a.points, b.points);
        }
    }

    #[test]
    fn database_invariants() {
        assert!(TrajectoryDatabase::new(10.0, Provenance::Replay, vec![ramp("a", 10.0, 3), ramp("a", 10.0, 4)]).is_err());
        assert!(TrajectoryDatabase::new(10.0, Provenance::Replay, vec![ramp("a", 20.0, 3)]).is_err());
        let db = TrajectoryDatabase::new(10.0, Provenance::Replay, vec![ramp("b", 10.0, 3), ramp("a", 10.0, 4)]).unwrap();
        assert_eq!(db.vehicle_ids().collect::<Vec<_>>(), vec!["a", "b"]);
        let m = db.manifest();
        assert_eq!(DatabaseManifest::from_json(&m.to_json()).unwrap(), m);
        assert_eq!(m.vehicles[0].points, 4);
    }

    #[test]
    fn resample_examples() {
        let db = TrajectoryDatabase::new(20.0, Provenance::Synthetic, vec![ramp("r", 20.0, 41)]).unwrap();
        let down = resample(&db, 10.0).unwrap();
        let src = db.get("r").unwrap();
        let r = down.get("r").unwrap();
        assert_eq!(r.points.len(), 21);
        for (i, p) in r.points.iter().enumerate() {
            assert_eq!(*p, src.points[2 * i]);
        }
        assert_eq!(resample(&db, 20.0).unwrap(), db);
        assert!(resample(&db, 0.0).is_err());

        let ten = TrajectoryDatabase::new(10.0, Provenance::Synthetic, vec![ramp("r", 10.0, 31)]).unwrap();
        let there = resample(&ten, 20.0).unwrap();
        assert_eq!(there.get("r").unwrap().points.len(), 61);
        let back = resample(&there, 10.0).unwrap();
        for (a, b) in back.get("r").unwrap().points.iter().zip(&ten.get("r").unwrap().points) {
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn split_examples() {
        let db = TrajectoryDatabase::new(10.0, Provenance::Synthetic, (0..10).map(|i| ramp(&format!("v{i}"), 10.0, 3))).unwrap();
        let spec = SplitSpec { test_fraction: 0.2, seed: 4 };
        let (train, test) = split(&db, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train2, test2) = split(&db, &spec).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        let mut all: Vec<&str> = train.vehicle_ids().chain(test.vehicle_ids()).collect();
        all.sort();
        assert_eq!(all, db.vehicle_ids().collect::<Vec<_>>());
        assert!(test.vehicle_ids().all(|id| train.get(id).is_none()));

        let one = TrajectoryDatabase::new(10.0, Provenance::Synthetic, vec![ramp("solo", 10.0, 3)]).unwrap();
        assert!(matches!(split(&one, &spec), Err(MnnError::Data(_))));
    }

    proptest! {
        #[test]
        fn resample_keeps_start_and_stays_in_range(n in 2usize..200, target in 1.0f64..80.0) {
            let t = Trajectory::new("p", 20.0, (0..n).map(|i| [(i as f64 * 0.37).sin(), i as f64 * 0.9]).collect()).unwrap();
            let db = TrajectoryDatabase::new(20.0, Provenance::Synthetic, vec![t.clone()]).unwrap();
            if let Ok(r) = resample(&db, target) {
                let r = r.get("p").unwrap();
                prop_assert_eq!(r.points[0], t.points[0]);
                prop_assert!(r.duration_s() <= t.duration_s() + 1e-9);
                let ymax = t.points.last().unwrap()[1];
                prop_assert!(r.points.iter().all(|p| p[1] <= ymax + 1e-9));
                if (t.duration_s() * target - (t.duration_s() * target).round()).abs() < 1e-9 {
                    let a = r.points.last().unwrap();
                    let b = t.points.last().unwrap();
                    prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
                }
            }
        }
    }
}
