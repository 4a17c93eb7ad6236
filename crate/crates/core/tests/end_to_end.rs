use cqdon_core::conformal::{nonconformity, predict_interval, quantile_rank, Calibration, PeakMeasure};
use cqdon_core::data::Split;
use cqdon_core::datagen::{build_operator_dataset, AntiderivativeParams, SplitSpec, TaskSpec};
use cqdon_core::ensemble::Ensemble;
use cqdon_core::fullstate::RegisterCircuit;
use cqdon_core::noise::{execute, Execution, NoiseProfile, SamplingMethod, Shots};
use cqdon_core::operator::{relative_l2, LossKind, MiniBatch, ModelSpec, TrainConfig};
use cqdon_core::rng;
use cqdon_core::unary::{pyramid_layout, tomography_circuit};

#[test]
fn train_calibrate_and_score_a_small_ensemble() {
    let task = TaskSpec::Antiderivative(AntiderivativeParams {
        sensors: 4,
        resolution: 24,
        splits: SplitSpec::Counts { train: 40, cal: 20, test: 20 },
        ..Default::default()
    });
    let ds = build_operator_dataset(&task, 11).unwrap();
    let spec = ModelSpec { layers: 2, width: 4, residual: false, fourier: None };
    let cfg = TrainConfig { iterations: 400, lr: 1e-2, decay: None, min_lr: None, loss: LossKind::Mse, batch: MiniBatch::default(), log_every: 100 };
    let (ens, traces) = Ensemble::train(&ds, &spec, &cfg, 3, 5, 3).unwrap();
    assert_eq!(ens.len(), 3);
    for t in &traces {
        assert!(t.last().unwrap().loss < 0.5 * t[0].loss, "{t:?}");
    }

    let cal = ds.batch(Split::Cal);
    let p = ens.predict_exact(&cal).unwrap();
    let c = Calibration::fit(&cal.targets, &p.mu, &p.sigma, 0.1, 1e-8).unwrap();
    // at least the corrected rank of calibration scores sits at or under q_hat
    let inside = (0..cal.targets.len()).filter(|&i| nonconformity(cal.targets[i], p.mu[i], p.sigma[i], c.epsilon) <= c.q_hat).count();
    assert!(inside >= quantile_rank(cal.targets.len(), 0.1).unwrap());

    let test = ds.batch(Split::Test);
    let p = ens.predict_exact(&test).unwrap();
    let intervals: Vec<_> = p.mu.iter().zip(&p.sigma).map(|(&m, &s)| predict_interval(m, s, c.q_hat)).collect();
    let m = cqdon_core::conformal::metrics(&test.targets, &intervals, PeakMeasure::FullWidth).unwrap();
    assert!(m.avg_width > 0.0 && m.peak_uncertainty >= m.avg_width);
    assert!(relative_l2(&p.mu, &test) < 1.0);
}

#[test]
fn per_shot_trajectories_follow_the_density_matrix_distribution() {
    let layout = pyramid_layout(3, 3);
    let angles = rng::uniform_angles(8, layout.angle_count());
    let x = rng::unit_vector(9, 3);
    let circuit = RegisterCircuit::from_circuit(&tomography_circuit(&layout, &angles, &x).unwrap());
    let noise = NoiseProfile::depolarizing(0.02, 0.01).unwrap();
    let exact = Execution { noise, shots: Shots::Exact, method: SamplingMethod::Multinomial, postselect: false };
    let probs = execute(&circuit, 3, 0, &exact, &mut rng::stream(0, &[])).unwrap().swap_remove(0);

    let shots = 200_000u64;
    let traj = exact.with_method(SamplingMethod::Trajectory);
    let traj = Execution { shots: Shots::Finite(shots), ..traj };
    let counts = execute(&circuit, 3, 0, &traj, &mut rng::stream(1, &[])).unwrap().swap_remove(0);
    assert_eq!(counts.total(), shots as f64);
    let n = shots as f64;
    for ((_, _, p), (_, _, c)) in probs.iter().zip(counts.iter()) {
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((c / n - p).abs() <= 5.0 * se + 1e-5, "p = {p}, freq = {}", c / n);
    }
}
