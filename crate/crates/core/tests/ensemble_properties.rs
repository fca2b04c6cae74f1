use cavity_thermo::ensemble::{
    excess_kurtosis, run_ensemble, summarize, summarize_direction, EnsembleConfig, ProtocolPair,
    WorkEnsemble, WorkSample,
};
use cavity_thermo::model::{mean_work, Direction, PhysicalParams, RampProtocol};
use cavity_thermo::sde::IntegratorConfig;
use cavity_thermo::Error;

fn pair() -> ProtocolPair {
    ProtocolPair::from_forward(RampProtocol::default())
}

fn coarse() -> IntegratorConfig {
    IntegratorConfig { dt: 1e-2, ..Default::default() }
}

#[test]
fn summary_of_constant_samples() {
    let rows: Vec<WorkSample> = (0..4)
        .flat_map(|i| {
            [Direction::Forward, Direction::Backward]
                .map(|direction| WorkSample { traj_id: i, direction, work: 1.0 })
        })
        .collect();
    let ens = WorkEnsemble::from_samples(0, &pair(), &rows).unwrap();
    let s = summarize(&ens).unwrap();
    assert_eq!(s.forward.mean, 1.0);
    assert_eq!(s.forward.variance, 0.0);
    assert_eq!(s.backward.n, 4);

    let only_forward: Vec<WorkSample> = rows.into_iter().filter(|r| r.direction == Direction::Forward).collect();
    let ens = WorkEnsemble::from_samples(0, &pair(), &only_forward).unwrap();
    assert!(matches!(summarize(&ens), Err(Error::MissingData(_))));
}

#[test]
fn default_ensemble_statistics() {
    let p = PhysicalParams::default();
    let ens = run_ensemble(&p, &pair(), &EnsembleConfig::default(), &IntegratorConfig::default()).unwrap();
    let s = summarize(&ens).unwrap();
    assert_eq!(s.forward.n, 20_000);
    assert_eq!(s.backward.n, 20_000);

    let expected = mean_work(&p, &pair().forward);
    assert!((s.forward.mean - expected).abs() <= 3.0 * s.forward.std_error);

    let ratio = s.forward.variance / (p.work_variance_factor() * s.forward.mean);
    assert!((ratio - 1.0).abs() < 0.05, "variance ratio {ratio}");

    let vr = s.forward.variance / s.backward.variance;
    assert!((vr - 1.0).abs() < 0.1, "forward/backward variance ratio {vr}");

    let k = excess_kurtosis(ens.work_samples(Direction::Forward).unwrap());
    assert!(k.abs() < 0.1, "excess kurtosis {k}");
}

#[test]
fn standard_error_scales_with_sample_size() {
    let p = PhysicalParams::default();
    let cfg = |n_traj| EnsembleConfig {
        n_traj,
        directions: vec![Direction::Forward],
        ..Default::default()
    };
    let small = run_ensemble(&p, &pair(), &cfg(5_000), &coarse()).unwrap();
    let large = run_ensemble(&p, &pair(), &cfg(10_000), &coarse()).unwrap();
    // paired seeds: the smaller run is a prefix of the larger one
    assert_eq!(
        small.work_samples(Direction::Forward).unwrap(),
        &large.work_samples(Direction::Forward).unwrap()[..5_000]
    );
    let a = summarize_direction(&small, Direction::Forward).unwrap().std_error;
    let b = summarize_direction(&large, Direction::Forward).unwrap().std_error;
    let ratio = a / b;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "SE ratio {ratio}");
}

#[test]
fn repeated_runs_are_bit_identical() {
    let p = PhysicalParams::default();
    let cfg = EnsembleConfig { n_traj: 300, workers: 3, ..Default::default() };
    let a = run_ensemble(&p, &pair(), &cfg, &coarse()).unwrap();
    let b = run_ensemble(&p, &pair(), &EnsembleConfig { workers: 1, ..cfg.clone() }, &coarse()).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&p, &pair(), &EnsembleConfig { master_seed: 43, ..cfg }, &coarse()).unwrap();
    assert_ne!(a.work_samples(Direction::Forward).unwrap(), c.work_samples(Direction::Forward).unwrap());
}

#[test]
fn variances_are_positive_with_noise() {
    let p = PhysicalParams::default();
    let ens = run_ensemble(&p, &pair(), &EnsembleConfig { n_traj: 2, ..Default::default() }, &coarse()).unwrap();
    let s = summarize(&ens).unwrap();
    assert!(s.forward.variance > 0.0 && s.backward.variance > 0.0);
}
