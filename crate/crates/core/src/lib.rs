//! Memory neuron network (MNN) for look-ahead vehicle trajectory prediction.
//!
//! The network runs over per-step position increments. Every neuron carries a
//! leaky memory trace, which gives the network recurrence without feedback
//! loops between neurons.

#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod eval;
pub mod learn;
pub mod network;
pub mod params_io;
pub mod synth;
pub mod trajectory;

pub use data::{
    load_csv, load_csv_from_reader, resample, save_csv, split, write_csv, CsvLoad, CsvSchema, DatabaseManifest,
    ManifestEntry, Provenance, SplitSpec, TrajectoryDatabase,
};
pub use error::{MnnError, Result};
pub use eval::{
    emit_overlay, emit_report, horizon_table, instantaneous_error, parse_report, read_overlay, rmse, write_overlay,
    HorizonReport, OverlayRow, Phase, ReportFormat,
};
pub use learn::{
    apply_gradients, compute_gradients, evaluate_teacher_forced, step_error, train_dataset, train_dataset_from,
    train_on_sequence, train_per_vehicle, EpochOrder, EpochRecord, LearningConfig, StepGradients, Trainer, TrainingLog,
};
pub use network::{
    forward_in_place, forward_step, init_parameters, reset_state, update_memory, ForwardTrace, Matrix,
    NetworkParameters, NetworkState, StepOutput, Topology,
};
pub use params_io::{load_params, params_from_text, params_to_text, save_params};
pub use synth::{generate, generate_fleet, generate_with_id, Fleet, FleetSpec, KindMix, Maneuver, ScenarioSpec};
pub use trajectory::{
    constant_velocity_baseline, differentiate, predict, predict_positions, reconstruct, steps_for,
    DifferentialTrajectory, OnlineAdaptation, Point, PredictionRequest, Trajectory,
};
