//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mnn_core::{
    load_csv, resample, CsvSchema, FleetSpec, LearningConfig, PredictionRequest, SplitSpec, Topology,
    TrajectoryDatabase,
};
use serde::{Deserialize, Serialize};

/// Prefix of environment variables that override config keys. Nested keys
/// are separated by a double underscore: `MNN_LEARNING__ETA=0.001`.
pub const ENV_PREFIX: &str = "MNN_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaChoice {
    /// `ngsim` or `native`.
    Profile(String),
    Custom(CsvSchema),
}

impl SchemaChoice {
    pub fn resolve(&self) -> mnn_core::Result<CsvSchema> {
        match self {
            Self::Profile(name) => CsvSchema::profile(name),
            Self::Custom(schema) => Ok(schema.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", try_from = "RawDataset")]
pub enum DatasetSource {
    Synthetic {
        #[serde(default)]
        fleet: FleetSpec,
    },
    Csv {
        /// Relative paths are resolved against the config file's directory.
        path: PathBuf,
        schema: SchemaChoice,
        sample_rate_hz: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resample_hz: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceKind {
    Synthetic,
    Csv,
}

// Plain mirror of the `[dataset]` table. Deserializing a tagged enum
// directly would lose the line numbers of errors inside the table.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    source: SourceKind,
    fleet: Option<FleetSpec>,
    path: Option<PathBuf>,
    schema: Option<SchemaChoice>,
    sample_rate_hz: Option<f64>,
    resample_hz: Option<f64>,
}

impl TryFrom<RawDataset> for DatasetSource {
    type Error = String;

    fn try_from(raw: RawDataset) -> Result<Self, String> {
        match raw.source {
            SourceKind::Synthetic => {
                if raw.path.is_some() || raw.schema.is_some() || raw.sample_rate_hz.is_some() || raw.resample_hz.is_some() {
                    return Err("csv keys given for a synthetic dataset".into());
                }
                Ok(Self::Synthetic {
                    fleet: raw.fleet.unwrap_or_default(),
                })
            }
            SourceKind::Csv => {
                if raw.fleet.is_some() {
                    return Err("fleet table given for a csv dataset".into());
                }
                Ok(Self::Csv {
                    path: raw.path.ok_or("csv dataset needs `path`")?,
                    schema: raw.schema.ok_or("csv dataset needs `schema`")?,
                    sample_rate_hz: raw.sample_rate_hz.ok_or("csv dataset needs `sample_rate_hz`")?,
                    resample_hz: raw.resample_hz,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub horizons_s: Vec<f64>,
    /// Seconds between successive forecast windows on one vehicle. With no
    /// stride each vehicle gets one window whose history is its first
    /// `history_seconds`.
    pub window_stride_seconds: Option<f64>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            horizons_s: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            window_stride_seconds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Drives fleet generation, the train/test split and weight
    /// initialization. Seeds inside nested tables are replaced by this one.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub topology: Topology,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub prediction: PredictionRequest,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn parse_scalar(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `MNN_`-prefixed overrides to a parsed config table.
pub fn apply_env_overrides<I>(table: &mut toml::Table, vars: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
        if path.iter().any(String::is_empty) {
            bail!("malformed override variable `{key}`");
        }
        let (last, parents) = path.split_last().expect("non-empty path");
        let mut node = &mut *table;
        for p in parents {
            let entry = node.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            node = entry
                .as_table_mut()
                .with_context(|| format!("override `{key}`: `{p}` is not a table"))?;
        }
        node.insert(last.clone(), parse_scalar(&raw));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, vars: impl IntoIterator<Item = (String, String)>) -> anyhow::Result<Self> {
        let vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        let config: Self = if vars.is_empty() {
            // straight from the text so errors carry line and column
            toml::from_str(text)?
        } else {
            let mut table: toml::Table = toml::from_str(text)?;
            apply_env_overrides(&mut table, vars)?;
            toml::Value::Table(table).try_into()?
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, applying overrides from the process environment.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config = Self::from_toml_str(&text, std::env::vars())
            .with_context(|| format!("invalid config {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.topology.validate()?;
        self.prediction.validate()?;
        if self.evaluation.horizons_s.is_empty() {
            bail!("evaluation.horizons_s is empty");
        }
        if let Some(h) = self.evaluation.horizons_s.iter().find(|&&h| !(h > 0.0 && h <= self.prediction.horizon_seconds)) {
            bail!(
                "evaluation horizon {h} s is outside (0, {}] (prediction.horizon_seconds)",
                self.prediction.horizon_seconds
            );
        }
        if let Some(s) = self.evaluation.window_stride_seconds {
            if !(s.is_finite() && s > 0.0) {
                bail!("evaluation.window_stride_seconds must be positive, got {s}");
            }
        }
        if let DatasetSource::Csv { schema, sample_rate_hz, .. } = &self.dataset {
            schema.resolve()?;
            if !(sample_rate_hz.is_finite() && *sample_rate_hz > 0.0) {
                bail!("dataset.sample_rate_hz must be positive, got {sample_rate_hz}");
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn fleet_spec(&self) -> anyhow::Result<FleetSpec> {
        match &self.dataset {
            DatasetSource::Synthetic { fleet } => Ok(FleetSpec {
                seed: self.seed,
                ..fleet.clone()
            }),
            DatasetSource::Csv { .. } => bail!("this command needs a synthetic dataset source"),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            seed: self.seed,
            ..self.split.clone()
        }
    }

    pub fn load_database(&self) -> anyhow::Result<TrajectoryDatabase> {
        match &self.dataset {
            DatasetSource::Synthetic { .. } => Ok(mnn_core::generate_fleet(&self.fleet_spec()?)?.database),
            DatasetSource::Csv {
                path,
                schema,
                sample_rate_hz,
                resample_hz,
            } => {
                let path = self.base_dir.join(path);
                let db = load_csv(&path, &schema.resolve()?, *sample_rate_hz)
                    .with_context(|| format!("loading {}", path.display()))?;
                Ok(match resample_hz {
                    Some(hz) => resample(&db, *hz)?,
                    None => db,
                })
            }
        }
    }

    /// The run-defining part of the config with seeds resolved and the
    /// output location left out, so moving a run does not change it.
    pub fn echo(&self) -> serde_json::Value {
        let mut resolved = self.clone();
        if let DatasetSource::Synthetic { fleet } = &mut resolved.dataset {
            fleet.seed = self.seed;
        }
        resolved.split.seed = self.seed;
        let mut value = serde_json::to_value(&resolved).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        value
    }

    pub fn fingerprint(&self) -> String {
        mnn_core::eval::fingerprint(&self.echo())
    }
}
