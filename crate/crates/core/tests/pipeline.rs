//! End-to-end behavior of training, rollout and scoring.

use mnn_core::{
    differentiate, emit_report, forward_step, generate_fleet, horizon_table, load_csv_from_reader, parse_report,
    predict, predict_positions, reset_state, train_dataset, train_on_sequence, CsvSchema, DifferentialTrajectory, EpochOrder, FleetSpec,
    LearningConfig, PredictionRequest, Provenance, ReportFormat, Topology, Trajectory,
};

fn constant(d: [f64; 2], n: usize) -> DifferentialTrajectory {
    DifferentialTrajectory {
        vehicle_id: "const".into(),
        sample_rate_hz: 20.0,
        anchor: [0.0, 0.0],
        deltas: vec![d; n],
    }
}

fn rates(eta: f64, epochs: usize) -> LearningConfig {
    LearningConfig {
        eta,
        eta_prime: eta,
        epochs,
        ..LearningConfig::default()
    }
}

#[test]
fn fixed_point_on_constant_deltas_holds_through_the_horizon() {
    let d = [0.3, 0.3];
    let seq = constant(d, 200);
    let config = rates(1e-2, 1);
    let mut params = mnn_core::init_parameters(&Topology::default(), 0, config.weight_scale).unwrap();
    let mut state = reset_state(&params.topology);
    let mut last = f64::INFINITY;
    for _ in 0..300 {
        last = train_on_sequence(&mut params, &mut state, &seq, &config).unwrap().mean_error;
    }
    assert!(last < 1e-8, "{last:e}");

    // closed loop from where training left the memory
    let mut x = d.to_vec();
    for k in 0..100 {
        let step = forward_step(&params, &state, &x).unwrap();
        assert!((step.output[0] - d[0]).abs() < 1e-3 && (step.output[1] - d[1]).abs() < 1e-3, "step {k}: {:?}", step.output);
        x = step.output;
        state = step.next_state;
    }

    // a fresh state has to rebuild the slow memories first, so priming only
    // approaches the fixed point
    let gap = |prime_repeats| {
        let request = PredictionRequest {
            prime_repeats,
            ..PredictionRequest::default()
        };
        let out = predict(&params, &request, &seq).unwrap();
        (out.deltas[0][0] - d[0]).abs().max((out.deltas[0][1] - d[1]).abs())
    };
    assert!(gap(1000) < gap(50));
}

fn trained_on_fleet(seed: u64, epochs: usize) -> (mnn_core::NetworkParameters, Vec<DifferentialTrajectory>) {
    let fleet = generate_fleet(&FleetSpec {
        count: 4,
        seed,
        duration_s: 20.0,
        ..FleetSpec::default()
    })
    .unwrap();
    let data = fleet.database.differentials().unwrap();
    let config = LearningConfig {
        order: EpochOrder::Interleaved,
        ..rates(1e-3, epochs)
    };
    let (params, _) = train_dataset(&data, &Topology::default(), &config, seed).unwrap();
    (params, data)
}

#[test]
fn rollouts_of_trained_networks_stay_finite_and_bounded() {
    for seed in 0..100 {
        let (params, data) = trained_on_fleet(seed, 3);
        for seq in &data {
            let out = predict(&params, &PredictionRequest::default(), seq).unwrap();
            assert!(out.deltas.iter().flatten().all(|v| v.is_finite()), "seed {seed}");

            // replay the closed loop by hand to look at the hidden layer
            let mut state = reset_state(&params.topology);
            let mut x = seq.deltas[0].to_vec();
            for _ in 0..160 {
                let step = forward_step(&params, &state, &x).unwrap();
                assert!(step.trace.out_hidden.iter().all(|h| h.abs() <= 1.0));
                x = step.output;
                state = step.next_state;
            }
        }
    }
}

#[test]
fn priming_length_does_not_destabilize_rollouts() {
    let (params, data) = trained_on_fleet(5, 20);
    for seq in &data {
        for prime_repeats in [0, 100] {
            let request = PredictionRequest {
                prime_repeats,
                ..PredictionRequest::default()
            };
            let out = predict(&params, &request, seq).unwrap();
            assert!(out.deltas.iter().flatten().all(|v| v.is_finite() && v.abs() < 5.0), "{prime_repeats}");
        }
    }
}

#[test]
fn ngsim_export_runs_through_the_whole_pipeline() {
    // NGSIM column names, extra columns, feet, 10 Hz, rows out of order
    let mut text = String::from("Vehicle_ID,Frame_ID,Total_Frames,Local_X,Local_Y,v_Vel\n");
    for v in 1..=3 {
        for f in (0..120).rev() {
            let x = 12.0 * v as f64 + 0.5 * (f as f64 / 15.0).sin();
            let y = 100.0 + 3.0 * f as f64 * (1.0 + 0.1 * v as f64);
            text += &format!("{v},{},{},{x},{y},30\n", f + 1000, 120);
        }
    }
    let load = load_csv_from_reader(text.as_bytes(), &CsvSchema::ngsim(), 10.0, Provenance::NgsimCsv).unwrap();
    assert!(load.diagnostics.is_empty());
    let db = load.database;
    assert_eq!(db.len(), 3);
    let first = db.get("1").unwrap();
    assert!((first.points[0][1] - 100.0 * 0.3048).abs() < 1e-9);

    let data = db.differentials().unwrap();
    let (params, _) = train_dataset(&data, &Topology::default(), &rates(1e-3, 5), 0).unwrap();
    let request = PredictionRequest::default();
    let (mut preds, mut truths) = (vec![], vec![]);
    for traj in db.iter() {
        let history = Trajectory {
            points: traj.points[..=30].to_vec(),
            ..traj.clone()
        };
        preds.push(predict_positions(&params, &request, &differentiate(&history).unwrap()).unwrap());
        truths.push(Trajectory {
            points: traj.points[31..81].to_vec(),
            ..traj.clone()
        });
    }
    let report = horizon_table(&preds, &truths, 10.0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(report.horizon_steps, vec![10, 20, 30, 40, 50]);
    assert!(report.rmse_cumulative.iter().all(|v| v.is_finite() && *v >= 0.0));
    let json = emit_report(&report, ReportFormat::Structured);
    assert_eq!(parse_report(&json).unwrap(), report);
}
