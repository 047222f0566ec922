//! Library side of the `mnn` command-line tool.

pub mod commands;
pub mod config;

pub use commands::{cmd_eval, cmd_generate, cmd_predict, cmd_train, Predictor};
pub use config::{DatasetSource, EvaluationConfig, ExperimentConfig, SchemaChoice};
