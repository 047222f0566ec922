//! Online learning rules for the memory neuron network.
//!
//! Errors are instantaneous: the output error `e^L = (n^L - d) * g'` is pushed
//! back one layer through the tanh derivative, the `w`/`f` weights move along
//! `error * activation` and `error * memory output`, and each memory
//! coefficient moves along `de/dv * (n(t-1) - v(t-1))`. No gradient flows
//! through the recursion of the memory state. After every update the memory
//! coefficients are hard-limited to `[0, 1]`.
//!
//! The update direction is the exact gradient of half the squared error of a
//! single step, with the memory state held at its value for that step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{MnnError, Result};
use crate::network::{forward_in_place, init_parameters, reset_state, ForwardTrace, Matrix, NetworkParameters, NetworkState, Topology};
use crate::trajectory::DifferentialTrajectory;

/// Order in which vehicles and epochs are visited by [`train_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpochOrder {
    /// Every epoch of one vehicle before moving to the next.
    #[default]
    PerVehicle,
    /// One pass over every vehicle per epoch.
    Interleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    /// Learning rate for `w` and `f`.
    pub eta: f64,
    /// Learning rate for `alpha` and `beta`.
    pub eta_prime: f64,
    pub epochs: usize,
    /// Zero-input, zero-target steps run before the first vehicle.
    pub warmup_zero_steps: usize,
    /// Half-width of the uniform weight initialization.
    pub weight_scale: f64,
    pub order: EpochOrder,
    /// Record wall time per epoch in the log. Off by default so logs are
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            eta: 4e-6,
            eta_prime: 4e-6,
            epochs: 100_000,
            warmup_zero_steps: 100,
            weight_scale: 0.1,
            order: EpochOrder::PerVehicle,
            record_wall_time: false,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0 && self.eta_prime.is_finite() && self.eta_prime >= 0.0) {
            return Err(MnnError::Config(format!(
                "learning rates must be finite and non-negative, got eta={} eta_prime={}",
                self.eta, self.eta_prime
            )));
        }
        if self.epochs == 0 {
            return Err(MnnError::Config("epochs must be at least 1".into()));
        }
        if !(self.weight_scale.is_finite() && self.weight_scale >= 0.0) {
            return Err(MnnError::Config(format!("bad weight scale {}", self.weight_scale)));
        }
        Ok(())
    }
}

/// Per-step update directions; shapes mirror [`NetworkParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepGradients {
    pub d_w_input_hidden: Matrix,
    pub d_f_input_hidden: Matrix,
    pub d_w_hidden_output: Matrix,
    pub d_f_hidden_output: Matrix,
    pub d_alpha_input: Vec<f64>,
    pub d_alpha_hidden: Vec<f64>,
    pub d_alpha_output: Vec<f64>,
    pub d_beta_output: Vec<f64>,
    /// Output-layer error `e^L`.
    pub e_output: Vec<f64>,
    /// Back-propagated hidden error `e^h`.
    pub e_hidden: Vec<f64>,
}

impl StepGradients {
    pub fn zeros(topology: &Topology) -> Self {
        let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
        Self {
            d_w_input_hidden: Matrix::zeros(i, h),
            d_f_input_hidden: Matrix::zeros(i, h),
            d_w_hidden_output: Matrix::zeros(h, o),
            d_f_hidden_output: Matrix::zeros(h, o),
            d_alpha_input: vec![0.0; i],
            d_alpha_hidden: vec![0.0; h],
            d_alpha_output: vec![0.0; o],
            d_beta_output: vec![0.0; o],
            e_output: vec![0.0; o],
            e_hidden: vec![0.0; h],
        }
    }

    /// Every component, in a fixed order, for componentwise comparisons.
    pub fn flatten(&self) -> Vec<f64> {
        [
            self.d_w_input_hidden.as_slice(),
            self.d_f_input_hidden.as_slice(),
            self.d_w_hidden_output.as_slice(),
            self.d_f_hidden_output.as_slice(),
            &self.d_alpha_input,
            &self.d_alpha_hidden,
            &self.d_alpha_output,
            &self.d_beta_output,
            &self.e_output,
            &self.e_hidden,
        ]
        .concat()
    }

    fn matches(&self, topology: &Topology) -> bool {
        let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
        self.d_w_input_hidden.shape() == (i, h)
            && self.d_f_input_hidden.shape() == (i, h)
            && self.d_w_hidden_output.shape() == (h, o)
            && self.d_f_hidden_output.shape() == (h, o)
            && self.d_alpha_input.len() == i
            && self.d_alpha_hidden.len() == h
            && self.d_alpha_output.len() == o
            && self.d_beta_output.len() == o
            && self.e_output.len() == o
            && self.e_hidden.len() == h
    }
}

/// Sum of squared componentwise differences.
pub fn step_error(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(MnnError::Config(format!(
            "output has {} components, target has {}",
            output.len(),
            target.len()
        )));
    }
    if output.iter().chain(target).any(|x| !x.is_finite()) {
        return Err(MnnError::Numeric("non-finite value in step error".into()));
    }
    Ok(output.iter().zip(target).map(|(y, d)| (y - d) * (y - d)).sum())
}

fn check_trace(params: &NetworkParameters, trace: &ForwardTrace, target: &[f64]) -> Result<()> {
    let t = &params.topology;
    let ok = trace.previous.matches(t)
        && trace.input.len() == t.n_inputs
        && trace.v_input.len() == t.n_inputs
        && trace.v_hidden.len() == t.n_hidden
        && trace.out_hidden.len() == t.n_hidden
        && trace.net_hidden.len() == t.n_hidden
        && trace.v_output.len() == t.n_outputs
        && trace.out_output.len() == t.n_outputs
        && trace.output_gain.len() == t.n_outputs
        && target.len() == t.n_outputs;
    if ok {
        Ok(())
    } else {
        Err(MnnError::Config("trace or target shape does not match topology".into()))
    }
}

pub fn compute_gradients(params: &NetworkParameters, trace: &ForwardTrace, target: &[f64]) -> Result<StepGradients> {
    let mut grads = StepGradients::zeros(&params.topology);
    compute_gradients_into(params, trace, target, &mut grads)?;
    Ok(grads)
}

/// Fills `grads` for the step recorded in `trace`.
pub fn compute_gradients_into(
    params: &NetworkParameters,
    trace: &ForwardTrace,
    target: &[f64],
    grads: &mut StepGradients,
) -> Result<()> {
    check_trace(params, trace, target)?;
    let t = &params.topology;
    if !grads.matches(t) {
        return Err(MnnError::Config("gradient buffer shape does not match topology".into()));
    }
    let prev = &trace.previous;

    for j in 0..t.n_outputs {
        let e = (trace.out_output[j] - target[j]) * trace.output_gain[j];
        grads.e_output[j] = e;
        grads.d_beta_output[j] = e * trace.v_output[j];
        let de_dv = params.beta_output[j] * e;
        grads.d_alpha_output[j] = de_dv * (prev.n_output_prev[j] - prev.v_output[j]);
    }

    for k in 0..t.n_hidden {
        let mut back = 0.0;
        let mut de_dv = 0.0;
        for j in 0..t.n_outputs {
            let e = grads.e_output[j];
            grads.d_w_hidden_output.set(k, j, e * trace.out_hidden[k]);
            grads.d_f_hidden_output.set(k, j, e * trace.v_hidden[k]);
            back += e * params.w_hidden_output.get(k, j);
            de_dv += e * params.f_hidden_output.get(k, j);
        }
        let h = trace.out_hidden[k];
        grads.e_hidden[k] = (1.0 - h * h) * back;
        grads.d_alpha_hidden[k] = de_dv * (prev.n_hidden_prev[k] - prev.v_hidden[k]);
    }

    for k in 0..t.n_inputs {
        let mut de_dv = 0.0;
        for j in 0..t.n_hidden {
            let e = grads.e_hidden[j];
            grads.d_w_input_hidden.set(k, j, e * trace.input[k]);
            grads.d_f_input_hidden.set(k, j, e * trace.v_input[k]);
            de_dv += e * params.f_input_hidden.get(k, j);
        }
        grads.d_alpha_input[k] = de_dv * (prev.n_input_prev[k] - prev.v_input[k]);
    }
    Ok(())
}

fn clamp_unit(values: &mut [f64]) -> usize {
    let mut events = 0;
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
            events += 1;
        } else if *v > 1.0 {
            *v = 1.0;
            events += 1;
        }
    }
    events
}

/// Gradient step on every parameter followed by hard-limiting of the memory
/// coefficients. Returns the number of coefficients that had to be clamped.
pub fn apply_gradients(params: &mut NetworkParameters, grads: &StepGradients, config: &LearningConfig) -> Result<usize> {
    if !grads.matches(&params.topology) {
        return Err(MnnError::Config("gradient shape does not match parameters".into()));
    }
    let descend = |p: &mut [f64], g: &[f64], rate: f64| {
        for (p, g) in p.iter_mut().zip(g) {
            *p -= rate * g;
        }
    };
    descend(params.w_input_hidden.as_mut_slice(), grads.d_w_input_hidden.as_slice(), config.eta);
    descend(params.f_input_hidden.as_mut_slice(), grads.d_f_input_hidden.as_slice(), config.eta);
    descend(params.w_hidden_output.as_mut_slice(), grads.d_w_hidden_output.as_slice(), config.eta);
    descend(params.f_hidden_output.as_mut_slice(), grads.d_f_hidden_output.as_slice(), config.eta);
    descend(&mut params.alpha_input, &grads.d_alpha_input, config.eta_prime);
    descend(&mut params.alpha_hidden, &grads.d_alpha_hidden, config.eta_prime);
    descend(&mut params.alpha_output, &grads.d_alpha_output, config.eta_prime);
    descend(&mut params.beta_output, &grads.d_beta_output, config.eta_prime);

    Ok(clamp_unit(&mut params.alpha_input)
        + clamp_unit(&mut params.alpha_hidden)
        + clamp_unit(&mut params.alpha_output)
        + clamp_unit(&mut params.beta_output))
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Vehicle trained in this record; `None` for interleaved epochs.
    pub vehicle: Option<String>,
    /// Mean squared step error over the samples of the epoch.
    pub mean_error: f64,
    pub clamp_events: usize,
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            // EpochRecord serialization cannot fail.
            out.push_str(&serde_json::to_string(r).expect("serializable record"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { records })
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean_error).collect()
    }
}

/// Reusable buffers for the per-sample loop.
pub struct Trainer {
    trace: ForwardTrace,
    grads: StepGradients,
}

impl Trainer {
    pub fn new(topology: &Topology) -> Self {
        Self {
            trace: ForwardTrace::empty(topology),
            grads: StepGradients::zeros(topology),
        }
    }

    /// Forward, error, gradients and update for one (input, target) pair.
    /// Returns the step error and the number of clamp events.
    pub fn step(
        &mut self,
        params: &mut NetworkParameters,
        state: &mut NetworkState,
        input: &[f64],
        target: &[f64],
        config: &LearningConfig,
    ) -> Result<(f64, usize)> {
        let output = forward_in_place(params, state, input, &mut self.trace)?;
        let err = step_error(output, target)?;
        compute_gradients_into(params, &self.trace, target, &mut self.grads)?;
        let clamps = apply_gradients(params, &self.grads, config)?;
        Ok((err, clamps))
    }

    /// One pass over `sequence`: each delta is the input for predicting the
    /// next one. `state` is carried through.
    pub fn epoch(
        &mut self,
        params: &mut NetworkParameters,
        state: &mut NetworkState,
        sequence: &DifferentialTrajectory,
        config: &LearningConfig,
    ) -> Result<(f64, usize)> {
        let deltas = &sequence.deltas;
        if deltas.len() < 2 {
            return Err(MnnError::Data(format!(
                "vehicle {} has {} differential samples, training needs at least 2",
                sequence.vehicle_id,
                deltas.len()
            )));
        }
        let mut total = 0.0;
        let mut clamps = 0;
        for pair in deltas.windows(2) {
            let (err, c) = self.step(params, state, &pair[0], &pair[1], config)?;
            total += err;
            clamps += c;
        }
        Ok((total / (deltas.len() - 1) as f64, clamps))
    }
}

/// One epoch of online training over a single differential sequence.
pub fn train_on_sequence(
    params: &mut NetworkParameters,
    state: &mut NetworkState,
    sequence: &DifferentialTrajectory,
    config: &LearningConfig,
) -> Result<EpochRecord> {
    let started = Instant::now();
    let mut trainer = Trainer::new(&params.topology);
    let (mean_error, clamp_events) = trainer.epoch(params, state, sequence, config)?;
    Ok(EpochRecord {
        epoch: 0,
        vehicle: Some(sequence.vehicle_id.clone()),
        mean_error,
        clamp_events,
        elapsed_ms: config.record_wall_time.then(|| started.elapsed().as_secs_f64() * 1e3),
    })
}

fn guard(params: &NetworkParameters, mean_error: f64, epoch: usize, vehicle: &str) -> Result<()> {
    if let Some(field) = params.first_non_finite() {
        return Err(MnnError::Numeric(format!(
            "parameter {field} became non-finite in epoch {epoch} on vehicle {vehicle}"
        )));
    }
    if !mean_error.is_finite() {
        return Err(MnnError::Numeric(format!(
            "training error became non-finite in epoch {epoch} on vehicle {vehicle}"
        )));
    }
    Ok(())
}

/// Re-labels step failures with the epoch and vehicle they happened in.
fn locate(err: MnnError, epoch: usize, vehicle: &str) -> MnnError {
    match err {
        MnnError::Numeric(m) | MnnError::Input(m) => {
            MnnError::Numeric(format!("{m} (epoch {epoch}, vehicle {vehicle})"))
        }
        other => other,
    }
}

/// Initializes a network from `seed` and trains it on `dataset`.
pub fn train_dataset(
    dataset: &[DifferentialTrajectory],
    topology: &Topology,
    config: &LearningConfig,
    seed: u64,
) -> Result<(NetworkParameters, TrainingLog)> {
    config.validate()?;
    let mut params = init_parameters(topology, seed, config.weight_scale)?;
    let log = train_dataset_from(&mut params, dataset, config)?;
    Ok((params, log))
}

/// Continues training `params` on `dataset`. The recurrent state starts from
/// zero for every vehicle and is carried across that vehicle's epochs.
pub fn train_dataset_from(
    params: &mut NetworkParameters,
    dataset: &[DifferentialTrajectory],
    config: &LearningConfig,
) -> Result<TrainingLog> {
    config.validate()?;
    params.validate()?;
    if dataset.is_empty() {
        return Err(MnnError::Data("training dataset is empty".into()));
    }
    if let Some(short) = dataset.iter().find(|d| d.deltas.len() < 2) {
        return Err(MnnError::Data(format!(
            "vehicle {} has {} differential samples, training needs at least 2",
            short.vehicle_id,
            short.deltas.len()
        )));
    }
    let topo = params.topology.clone();
    let mut trainer = Trainer::new(&topo);
    let mut log = TrainingLog::default();

    if config.warmup_zero_steps > 0 {
        let mut state = reset_state(&topo);
        let zi = vec![0.0; topo.n_inputs];
        let zo = vec![0.0; topo.n_outputs];
        for _ in 0..config.warmup_zero_steps {
            trainer
                .step(params, &mut state, &zi, &zo, config)
                .map_err(|e| locate(e, 0, "warm-up"))?;
        }
        guard(params, 0.0, 0, "warm-up")?;
    }

    let mut run_epoch = |params: &mut NetworkParameters, state: &mut NetworkState, seq: &DifferentialTrajectory, epoch: usize| {
        let started = Instant::now();
        let (mean_error, clamp_events) = trainer
            .epoch(params, state, seq, config)
            .map_err(|e| locate(e, epoch, &seq.vehicle_id))?;
        guard(params, mean_error, epoch, &seq.vehicle_id)?;
        Ok::<_, MnnError>((mean_error, clamp_events, started.elapsed().as_secs_f64() * 1e3))
    };

    match config.order {
        EpochOrder::PerVehicle => {
            for seq in dataset {
                let mut state = reset_state(&topo);
                for epoch in 0..config.epochs {
                    let (mean_error, clamp_events, ms) = run_epoch(params, &mut state, seq, epoch)?;
                    log.records.push(EpochRecord {
                        epoch,
                        vehicle: Some(seq.vehicle_id.clone()),
                        mean_error,
                        clamp_events,
                        elapsed_ms: config.record_wall_time.then_some(ms),
                    });
                }
            }
        }
        EpochOrder::Interleaved => {
            let mut states: Vec<NetworkState> = dataset.iter().map(|_| reset_state(&topo)).collect();
            for epoch in 0..config.epochs {
                let mut total = 0.0;
                let mut clamps = 0;
                let mut ms = 0.0;
                for (seq, state) in dataset.iter().zip(states.iter_mut()) {
                    let (e, c, t) = run_epoch(params, state, seq, epoch)?;
                    total += e;
                    clamps += c;
                    ms += t;
                }
                log.records.push(EpochRecord {
                    epoch,
                    vehicle: None,
                    mean_error: total / dataset.len() as f64,
                    clamp_events: clamps,
                    elapsed_ms: config.record_wall_time.then_some(ms),
                });
            }
        }
    }
    Ok(log)
}

/// One independently initialized network per vehicle, all from the same seed.
pub fn train_per_vehicle(
    dataset: &[DifferentialTrajectory],
    topology: &Topology,
    config: &LearningConfig,
    seed: u64,
) -> Result<Vec<(String, NetworkParameters, TrainingLog)>> {
    if dataset.is_empty() {
        return Err(MnnError::Data("training dataset is empty".into()));
    }
    dataset
        .iter()
        .map(|seq| {
            let (p, log) = train_dataset(std::slice::from_ref(seq), topology, config, seed)?;
            Ok((seq.vehicle_id.clone(), p, log))
        })
        .collect()
}

/// Mean squared step error of `params` over `dataset` with teacher forcing
/// and no updates. State starts from zero for each vehicle.
pub fn evaluate_teacher_forced(params: &NetworkParameters, dataset: &[DifferentialTrajectory]) -> Result<f64> {
    let mut trace = ForwardTrace::empty(&params.topology);
    let mut total = 0.0;
    let mut count = 0usize;
    for seq in dataset {
        let mut state = reset_state(&params.topology);
        for pair in seq.deltas.windows(2) {
            let out = forward_in_place(params, &mut state, &pair[0], &mut trace)?;
            total += step_error(out, &pair[1])?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MnnError::Data("no samples to evaluate".into()));
    }
    Ok(total / count as f64)
}

/// Naive scalar implementation of the learning rules, kept separate from
/// [`compute_gradients`] so the two can be checked against each other.
///
/// It re-runs the forward pass from the pre-step snapshot in the trace and
/// evaluates every partial derivative with its own loops.
pub mod reference {
    use super::StepGradients;
    use crate::network::{ForwardTrace, Matrix, NetworkParameters};

    pub fn reference_gradients(trace: &ForwardTrace, target: &[f64], params: &NetworkParameters) -> StepGradients {
        let ni = params.topology.n_inputs;
        let nh = params.topology.n_hidden;
        let no = params.topology.n_outputs;
        let slope = params.topology.output_slope;
        let range = params.topology.output_range;
        let s = &trace.previous;
        let x = &trace.input;

        // memory neurons
        let mut vi = vec![0.0; ni];
        for k in 0..ni {
            let a = params.alpha_input[k];
            vi[k] = a * s.n_input_prev[k] + (1.0 - a) * s.v_input[k];
        }
        let mut vh = vec![0.0; nh];
        for k in 0..nh {
            let a = params.alpha_hidden[k];
            vh[k] = a * s.n_hidden_prev[k] + (1.0 - a) * s.v_hidden[k];
        }
        let mut vo = vec![0.0; no];
        for k in 0..no {
            let a = params.alpha_output[k];
            vo[k] = a * s.n_output_prev[k] + (1.0 - a) * s.v_output[k];
        }

        let mut h = vec![0.0; nh];
        for j in 0..nh {
            let mut m = 0.0;
            for k in 0..ni {
                m += params.w_input_hidden.get(k, j) * x[k];
            }
            for k in 0..ni {
                m += params.f_input_hidden.get(k, j) * vi[k];
            }
            h[j] = m.tanh();
        }

        let mut y = vec![0.0; no];
        let mut gain = vec![0.0; no];
        for j in 0..no {
            let mut m = 0.0;
            for k in 0..nh {
                m += params.w_hidden_output.get(k, j) * h[k];
            }
            for k in 0..nh {
                m += params.f_hidden_output.get(k, j) * vh[k];
            }
            m += params.beta_output[j] * vo[j];
            let lin = slope * m;
            let clipped = matches!(range, Some(r) if lin.abs() > r);
            y[j] = match range {
                Some(r) if lin > r => r,
                Some(r) if lin < -r => -r,
                _ => lin,
            };
            gain[j] = if clipped { 0.0 } else { slope };
        }

        let mut e_out = vec![0.0; no];
        for j in 0..no {
            e_out[j] = (y[j] - target[j]) * gain[j];
        }
        let mut e_hid = vec![0.0; nh];
        for j in 0..nh {
            let mut sum = 0.0;
            for p in 0..no {
                sum += e_out[p] * params.w_hidden_output.get(j, p);
            }
            e_hid[j] = (1.0 - h[j] * h[j]) * sum;
        }

        let mut dw_ih = Matrix::zeros(ni, nh);
        let mut df_ih = Matrix::zeros(ni, nh);
        for k in 0..ni {
            for j in 0..nh {
                dw_ih.set(k, j, e_hid[j] * x[k]);
                df_ih.set(k, j, e_hid[j] * vi[k]);
            }
        }
        let mut dw_ho = Matrix::zeros(nh, no);
        let mut df_ho = Matrix::zeros(nh, no);
        for k in 0..nh {
            for j in 0..no {
                dw_ho.set(k, j, e_out[j] * h[k]);
                df_ho.set(k, j, e_out[j] * vh[k]);
            }
        }

        let mut da_in = vec![0.0; ni];
        for j in 0..ni {
            let mut de_dv = 0.0;
            for q in 0..nh {
                de_dv += params.f_input_hidden.get(j, q) * e_hid[q];
            }
            da_in[j] = de_dv * (s.n_input_prev[j] - s.v_input[j]);
        }
        let mut da_hid = vec![0.0; nh];
        for j in 0..nh {
            let mut de_dv = 0.0;
            for q in 0..no {
                de_dv += params.f_hidden_output.get(j, q) * e_out[q];
            }
            da_hid[j] = de_dv * (s.n_hidden_prev[j] - s.v_hidden[j]);
        }
        let mut da_out = vec![0.0; no];
        let mut db_out = vec![0.0; no];
        for j in 0..no {
            da_out[j] = params.beta_output[j] * e_out[j] * (s.n_output_prev[j] - s.v_output[j]);
            db_out[j] = e_out[j] * vo[j];
        }

        StepGradients {
            d_w_input_hidden: dw_ih,
            d_f_input_hidden: df_ih,
            d_w_hidden_output: dw_ho,
            d_f_hidden_output: df_ho,
            d_alpha_input: da_in,
            d_alpha_hidden: da_hid,
            d_alpha_output: da_out,
            d_beta_output: db_out,
            e_output: e_out,
            e_hidden: e_hid,
        }
    }
}
