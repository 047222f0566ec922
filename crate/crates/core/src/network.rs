//! Memory neuron network: topology, trainable parameters, recurrent state and
//! the single-step forward pass.
//!
//! Every network neuron owns a memory neuron whose output is a running convex
//! combination of the neuron's previous activation and its own previous value:
//!
//! ```text
//! v(t) = alpha * n(t-1) + (1 - alpha) * v(t-1)
//! ```
//!
//! Within one time step all memory neurons are advanced first (they depend on
//! step `t-1` quantities only), then the hidden and output affine sums are
//! evaluated with the fresh memory values.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MnnError, Result};

/// Dense row-major matrix. Entry `(k, j)` is the weight from unit `k` of the
/// source layer to unit `j` of the destination layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MnnError::Config(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Layer sizes and output activation shape. Exactly one hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Topology {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    /// Slope of the linear output activation.
    pub output_slope: f64,
    /// Optional symmetric clipping bound on the output (meters per step).
    pub output_range: Option<f64>,
}

impl Default for Topology {
    /// Two inputs, six tanh hidden units, two linear outputs.
    fn default() -> Self {
        Self::new(2, 6, 2)
    }
}

impl Topology {
    pub fn new(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_hidden,
            n_outputs,
            output_slope: 1.0,
            output_range: None,
        }
    }

    pub fn with_output_slope(mut self, slope: f64) -> Self {
        self.output_slope = slope;
        self
    }

    pub fn with_output_range(mut self, range: Option<f64>) -> Self {
        self.output_range = range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.n_hidden == 0 || self.n_outputs == 0 {
            return Err(MnnError::Config(format!(
                "layer sizes must be at least 1, got {}-{}-{}",
                self.n_inputs, self.n_hidden, self.n_outputs
            )));
        }
        if !(self.output_slope.is_finite() && self.output_slope > 0.0) {
            return Err(MnnError::Config(format!(
                "output slope must be positive and finite, got {}",
                self.output_slope
            )));
        }
        if let Some(r) = self.output_range {
            if !(r.is_finite() && r > 0.0) {
                return Err(MnnError::Config(format!(
                    "output range must be positive and finite, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Output activation and its derivative at `net`.
    #[inline]
    pub(crate) fn output_activation(&self, net: f64) -> (f64, f64) {
        let y = self.output_slope * net;
        match self.output_range {
            Some(r) if y > r => (r, 0.0),
            Some(r) if y < -r => (-r, 0.0),
            _ => (y, self.output_slope),
        }
    }
}

/// All trainable quantities of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParameters {
    pub topology: Topology,
    /// Input to hidden weights, `[n_inputs x n_hidden]`.
    pub w_input_hidden: Matrix,
    /// Input memory to hidden weights, `[n_inputs x n_hidden]`.
    pub f_input_hidden: Matrix,
    /// Hidden to output weights, `[n_hidden x n_outputs]`.
    pub w_hidden_output: Matrix,
    /// Hidden memory to output weights, `[n_hidden x n_outputs]`.
    pub f_hidden_output: Matrix,
    pub alpha_input: Vec<f64>,
    pub alpha_hidden: Vec<f64>,
    pub alpha_output: Vec<f64>,
    /// Output memory self-feedback weights.
    pub beta_output: Vec<f64>,
}

impl NetworkParameters {
    pub fn zeros(topology: &Topology) -> Self {
        let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
        Self {
            topology: topology.clone(),
            w_input_hidden: Matrix::zeros(i, h),
            f_input_hidden: Matrix::zeros(i, h),
            w_hidden_output: Matrix::zeros(h, o),
            f_hidden_output: Matrix::zeros(h, o),
            alpha_input: vec![0.0; i],
            alpha_hidden: vec![0.0; h],
            alpha_output: vec![0.0; o],
            beta_output: vec![0.0; o],
        }
    }

    /// Checks shapes against the topology, finiteness, and the `[0, 1]`
    /// bound on every memory coefficient.
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        t.validate()?;
        let (i, h, o) = (t.n_inputs, t.n_hidden, t.n_outputs);
        let shapes = [
            ("w_input_hidden", self.w_input_hidden.shape(), (i, h)),
            ("f_input_hidden", self.f_input_hidden.shape(), (i, h)),
            ("w_hidden_output", self.w_hidden_output.shape(), (h, o)),
            ("f_hidden_output", self.f_hidden_output.shape(), (h, o)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(MnnError::Config(format!(
                    "{name} has shape {got:?}, topology requires {want:?}"
                )));
            }
        }
        let lens = [
            ("alpha_input", self.alpha_input.len(), i),
            ("alpha_hidden", self.alpha_hidden.len(), h),
            ("alpha_output", self.alpha_output.len(), o),
            ("beta_output", self.beta_output.len(), o),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(MnnError::Config(format!(
                    "{name} has length {got}, topology requires {want}"
                )));
            }
        }
        if let Some(name) = self.first_non_finite() {
            return Err(MnnError::Numeric(format!("{name} contains a non-finite value")));
        }
        for (name, v) in self.coefficients() {
            if v.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(MnnError::Config(format!(
                    "{name} has an entry outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Name of the first field holding a NaN or infinity, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.matrices()
            .into_iter()
            .map(|(n, m)| (n, m.as_slice()))
            .chain(self.coefficients())
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
            .map(|(n, _)| n)
    }

    pub(crate) fn matrices(&self) -> [(&'static str, &Matrix); 4] {
        [
            ("w_input_hidden", &self.w_input_hidden),
            ("f_input_hidden", &self.f_input_hidden),
            ("w_hidden_output", &self.w_hidden_output),
            ("f_hidden_output", &self.f_hidden_output),
        ]
    }

    pub(crate) fn coefficients(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("alpha_input", &self.alpha_input),
            ("alpha_hidden", &self.alpha_hidden),
            ("alpha_output", &self.alpha_output),
            ("beta_output", &self.beta_output),
        ]
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.matrices().iter().map(|(_, m)| m.as_slice().len()).sum::<usize>()
            + self.coefficients().iter().map(|(_, v)| v.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws every `w` and `f` weight uniformly from `[-weight_scale, weight_scale]`
/// and sets every memory coefficient to zero.
pub fn init_parameters(topology: &Topology, seed: u64, weight_scale: f64) -> Result<NetworkParameters> {
    topology.validate()?;
    if !(weight_scale.is_finite() && weight_scale >= 0.0) {
        return Err(MnnError::Config(format!(
            "weight scale must be finite and non-negative, got {weight_scale}"
        )));
    }
    let mut params = NetworkParameters::zeros(topology);
    if weight_scale == 0.0 {
        return Ok(params);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-weight_scale, weight_scale)
        .map_err(|e| MnnError::Config(e.to_string()))?;
    for m in [
        &mut params.w_input_hidden,
        &mut params.f_input_hidden,
        &mut params.w_hidden_output,
        &mut params.f_hidden_output,
    ] {
        for w in m.as_mut_slice() {
            *w = dist.sample(&mut rng);
        }
    }
    Ok(params)
}

/// Recurrent state carried between time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub v_input: Vec<f64>,
    pub v_hidden: Vec<f64>,
    pub v_output: Vec<f64>,
    /// Network-neuron activations from the previous step.
    pub n_input_prev: Vec<f64>,
    pub n_hidden_prev: Vec<f64>,
    pub n_output_prev: Vec<f64>,
}

/// All-zero state for `topology`.
pub fn reset_state(topology: &Topology) -> NetworkState {
    let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
    NetworkState {
        v_input: vec![0.0; i],
        v_hidden: vec![0.0; h],
        v_output: vec![0.0; o],
        n_input_prev: vec![0.0; i],
        n_hidden_prev: vec![0.0; h],
        n_output_prev: vec![0.0; o],
    }
}

impl NetworkState {
    pub fn matches(&self, topology: &Topology) -> bool {
        let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
        self.v_input.len() == i
            && self.n_input_prev.len() == i
            && self.v_hidden.len() == h
            && self.n_hidden_prev.len() == h
            && self.v_output.len() == o
            && self.n_output_prev.len() == o
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.v_input,
            &self.v_hidden,
            &self.v_output,
            &self.n_input_prev,
            &self.n_hidden_prev,
            &self.n_output_prev,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[inline]
fn advance_memory(v: &mut [f64], alpha: &[f64], n_prev: &[f64]) {
    for ((v, &a), &n) in v.iter_mut().zip(alpha).zip(n_prev) {
        *v = a * n + (1.0 - a) * *v;
    }
}

/// Advances every memory neuron by one step. Previous activations are left
/// untouched.
pub fn update_memory(state: &NetworkState, params: &NetworkParameters) -> NetworkState {
    let mut next = state.clone();
    advance_memory(&mut next.v_input, &params.alpha_input, &state.n_input_prev);
    advance_memory(&mut next.v_hidden, &params.alpha_hidden, &state.n_hidden_prev);
    advance_memory(&mut next.v_output, &params.alpha_output, &state.n_output_prev);
    next
}

/// Intermediate values of one forward step, consumed by the learning rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    /// State before this step's memory update.
    pub previous: NetworkState,
    /// Input-layer activations `n^i(t)`.
    pub input: Vec<f64>,
    /// Memory outputs `v(t)` used in the affine sums.
    pub v_input: Vec<f64>,
    pub v_hidden: Vec<f64>,
    pub v_output: Vec<f64>,
    pub net_hidden: Vec<f64>,
    pub out_hidden: Vec<f64>,
    pub net_output: Vec<f64>,
    pub out_output: Vec<f64>,
    /// Derivative of the output activation at `net_output`.
    pub output_gain: Vec<f64>,
}

impl ForwardTrace {
    pub fn empty(topology: &Topology) -> Self {
        let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
        Self {
            previous: reset_state(topology),
            input: vec![0.0; i],
            v_input: vec![0.0; i],
            v_hidden: vec![0.0; h],
            v_output: vec![0.0; o],
            net_hidden: vec![0.0; h],
            out_hidden: vec![0.0; h],
            net_output: vec![0.0; o],
            out_output: vec![0.0; o],
            output_gain: vec![0.0; o],
        }
    }
}

/// Result of [`forward_step`].
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub output: Vec<f64>,
    pub trace: ForwardTrace,
    pub next_state: NetworkState,
}

fn check_step(params: &NetworkParameters, state: &NetworkState, input: &[f64]) -> Result<()> {
    let t = &params.topology;
    if input.len() != t.n_inputs {
        return Err(MnnError::Config(format!(
            "input has {} components, network expects {}",
            input.len(),
            t.n_inputs
        )));
    }
    if !state.matches(t) {
        return Err(MnnError::Config("state dimensions do not match topology".into()));
    }
    if let Some(x) = input.iter().find(|x| !x.is_finite()) {
        return Err(MnnError::Input(format!("non-finite input component {x}")));
    }
    Ok(())
}

/// One time step: advance memory, evaluate the hidden and output layers,
/// and produce the next state.
pub fn forward_step(params: &NetworkParameters, state: &NetworkState, input: &[f64]) -> Result<StepOutput> {
    let mut next_state = state.clone();
    let mut trace = ForwardTrace::empty(&params.topology);
    forward_in_place(params, &mut next_state, input, &mut trace)?;
    Ok(StepOutput {
        output: trace.out_output.clone(),
        trace,
        next_state,
    })
}

/// Allocation-free variant of [`forward_step`]: `state` is advanced in place
/// and `trace` is overwritten. Returns the network output as a slice of the
/// trace.
pub fn forward_in_place<'t>(
    params: &NetworkParameters,
    state: &mut NetworkState,
    input: &[f64],
    trace: &'t mut ForwardTrace,
) -> Result<&'t [f64]> {
    check_step(params, state, input)?;
    let topo = &params.topology;

    trace.previous.clone_from(state);
    trace.input.copy_from_slice(input);

    advance_memory(&mut state.v_input, &params.alpha_input, &state.n_input_prev);
    advance_memory(&mut state.v_hidden, &params.alpha_hidden, &state.n_hidden_prev);
    advance_memory(&mut state.v_output, &params.alpha_output, &state.n_output_prev);

    trace.v_input.copy_from_slice(&state.v_input);
    trace.v_hidden.copy_from_slice(&state.v_hidden);
    trace.v_output.copy_from_slice(&state.v_output);

    for j in 0..topo.n_hidden {
        let mut m = 0.0;
        for k in 0..topo.n_inputs {
            m += params.w_input_hidden.get(k, j) * input[k]
                + params.f_input_hidden.get(k, j) * state.v_input[k];
        }
        trace.net_hidden[j] = m;
        trace.out_hidden[j] = m.tanh();
    }

    for j in 0..topo.n_outputs {
        let mut m = params.beta_output[j] * state.v_output[j];
        for k in 0..topo.n_hidden {
            m += params.w_hidden_output.get(k, j) * trace.out_hidden[k]
                + params.f_hidden_output.get(k, j) * state.v_hidden[k];
        }
        let (y, gain) = topo.output_activation(m);
        trace.net_output[j] = m;
        trace.out_output[j] = y;
        trace.output_gain[j] = gain;
    }

    state.n_input_prev.copy_from_slice(input);
    state.n_hidden_prev.copy_from_slice(&trace.out_hidden);
    state.n_output_prev.copy_from_slice(&trace.out_output);

    Ok(&trace.out_output)
}
