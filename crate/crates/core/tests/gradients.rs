//! Learning rules against finite differences of the step error, with the
//! previous memory state held fixed.

use mnn_core::learn::reference::reference_gradients;
use mnn_core::{compute_gradients, forward_step, NetworkParameters, NetworkState, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fill(rng: &mut ChaCha8Rng, xs: &mut [f64], lo: f64, hi: f64) {
    for x in xs {
        *x = rng.random_range(lo..hi);
    }
}

fn instance(rng: &mut ChaCha8Rng, topology: &Topology) -> (NetworkParameters, NetworkState, Vec<f64>, Vec<f64>) {
    let mut p = NetworkParameters::zeros(topology);
    fill(rng, p.w_input_hidden.as_mut_slice(), -1.0, 1.0);
    fill(rng, p.f_input_hidden.as_mut_slice(), -1.0, 1.0);
    fill(rng, p.w_hidden_output.as_mut_slice(), -1.0, 1.0);
    fill(rng, p.f_hidden_output.as_mut_slice(), -1.0, 1.0);
    // keep coefficients away from the box edges so the stencil stays inside
    fill(rng, &mut p.alpha_input, 0.05, 0.95);
    fill(rng, &mut p.alpha_hidden, 0.05, 0.95);
    fill(rng, &mut p.alpha_output, 0.05, 0.95);
    fill(rng, &mut p.beta_output, 0.05, 0.95);
    let mut s = mnn_core::reset_state(topology);
    for v in [
        &mut s.v_input,
        &mut s.v_hidden,
        &mut s.v_output,
        &mut s.n_input_prev,
        &mut s.n_output_prev,
    ] {
        fill(rng, v, -1.0, 1.0);
    }
    fill(rng, &mut s.n_hidden_prev, -0.99, 0.99);
    let mut x = vec![0.0; topology.n_inputs];
    fill(rng, &mut x, -1.0, 1.0);
    let mut d = vec![0.0; topology.n_outputs];
    fill(rng, &mut d, -1.0, 1.0);
    (p, s, x, d)
}

/// Squared error of one step, computed here rather than by the library.
fn error(p: &NetworkParameters, s: &NetworkState, x: &[f64], d: &[f64]) -> f64 {
    let out = forward_step(p, s, x).unwrap().output;
    out.iter().zip(d).map(|(o, t)| (o - t) * (o - t)).sum()
}

/// Mutable view of parameter `k` in the same order as `StepGradients::flatten`.
fn slot(p: &mut NetworkParameters, mut k: usize) -> &mut f64 {
    macro_rules! take {
        ($s:expr) => {{
            let len = $s.len();
            if k < len {
                return &mut $s[k];
            }
            k -= len;
        }};
    }
    take!(p.w_input_hidden.as_mut_slice());
    take!(p.f_input_hidden.as_mut_slice());
    take!(p.w_hidden_output.as_mut_slice());
    take!(p.f_hidden_output.as_mut_slice());
    take!(p.alpha_input);
    take!(p.alpha_hidden);
    take!(p.alpha_output);
    take!(p.beta_output);
    panic!("parameter index out of range by {k}")
}

fn central_difference(p: &NetworkParameters, s: &NetworkState, x: &[f64], d: &[f64], k: usize, h: f64) -> f64 {
    let mut plus = p.clone();
    *slot(&mut plus, k) += h;
    let mut minus = p.clone();
    *slot(&mut minus, k) -= h;
    (error(&plus, s, x, d) - error(&minus, s, x, d)) / (2.0 * h)
}

fn rel_norm_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

#[test]
fn all_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for topology in [Topology::default(), Topology::new(3, 4, 1), Topology::new(2, 6, 2).with_output_slope(0.7)] {
        let n = NetworkParameters::zeros(&topology).len();
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let (p, s, x, d) = instance(&mut rng, &topology);
            let step = forward_step(&p, &s, &x).unwrap();
            let g = compute_gradients(&p, &step.trace, &d).unwrap().flatten();
            // the rules descend half the squared error
            let analytic: Vec<f64> = g[..n].iter().map(|v| 2.0 * v).collect();
            let numeric: Vec<f64> = (0..n).map(|k| central_difference(&p, &s, &x, &d, k, 1e-6)).collect();
            worst = worst.max(rel_norm_error(&analytic, &numeric));
        }
        assert!(worst < 1e-7, "{topology:?}: worst relative error {worst:e}");
    }
}

#[test]
fn gradients_of_clipped_outputs_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let topology = Topology::default().with_output_range(Some(1e-3));
    let mut clipped = 0;
    for _ in 0..50 {
        let (p, s, x, d) = instance(&mut rng, &topology);
        let step = forward_step(&p, &s, &x).unwrap();
        let g = compute_gradients(&p, &step.trace, &d).unwrap();
        for (o, e) in step.output.iter().zip(&g.e_output) {
            if o.abs() >= 1e-3 {
                clipped += 1;
                assert_eq!(*e, 0.0);
            }
        }
        let n = p.len();
        for k in 0..n {
            let analytic = 2.0 * g.flatten()[k];
            let numeric = central_difference(&p, &s, &x, &d, k, 1e-9);
            assert!((analytic - numeric).abs() < 1e-5, "param {k}: {analytic} vs {numeric}");
        }
    }
    assert!(clipped > 0);
}

#[test]
fn reference_matches_on_wide_and_narrow_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for topology in [Topology::new(1, 1, 1), Topology::new(5, 17, 3), Topology::new(2, 6, 2)] {
        for _ in 0..200 {
            let (p, s, x, d) = instance(&mut rng, &topology);
            let step = forward_step(&p, &s, &x).unwrap();
            let fast = compute_gradients(&p, &step.trace, &d).unwrap().flatten();
            let slow = reference_gradients(&step.trace, &d, &p).flatten();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }
}
