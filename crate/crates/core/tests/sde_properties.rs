use cavity_thermo::ensemble::Welford;
use cavity_thermo::model::{mean_q, Direction, PhysicalParams, RampProtocol};
use cavity_thermo::sde::{
    draw_initial, synthesize_homodyne_current, Channel, Coarsened, IncrementSource,
    InitialCondition, Integrator, IntegratorConfig, NoiseStream, TrajectoryState,
};

fn final_x<S: IncrementSource>(integ: &Integrator, p: &PhysicalParams, x0: f64, noise: &mut S) -> f64 {
    integ
        .run(TrajectoryState::initial(p, integ.protocol(), x0), noise, |_, _, _| {})
        .unwrap()
        .x
}

#[test]
fn stationary_autocovariance_decays_exponentially() {
    let p = PhysicalParams::default();
    let protocol = RampProtocol {
        sigma: 2.0,
        t0: 1e6,
        tau: 2000.0,
        ..Default::default()
    };
    let cfg = IntegratorConfig { dt: 1e-2, record_stride: 1, ..Default::default() };
    let integ = Integrator::new(&p, &protocol, &cfg).unwrap();
    let stream = NoiseStream::new(11, 0);
    let x0 = draw_initial(&p, &protocol, InitialCondition::Stationary, &stream);
    let mut xs = Vec::with_capacity(integ.n_records());
    integ
        .run(
            TrajectoryState::initial(&p, &protocol, x0),
            &mut stream.wiener(Channel::Path(Direction::Forward), integ.dt()),
            |_, _, s| xs.push(s.x),
        )
        .unwrap();
    let lag = (1.0 / p.gamma / integ.dt()).round() as usize;
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let cov = xs
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / (xs.len() - lag) as f64;
    let expected = p.estimate_variance() * (-0.5 * p.gamma * lag as f64 * integ.dt()).exp();
    assert!((cov / expected - 1.0).abs() < 0.1, "cov {cov} vs {expected}");
}

#[test]
fn weak_error_halves_with_the_step() {
    // Three step sizes on common random numbers: successive differences of
    // the mean cancel the shared sampling noise and expose the O(dt) bias.
    let p = PhysicalParams::default();
    let protocol = RampProtocol::default();
    let exact = mean_q(&p, &protocol, protocol.tau).unwrap();
    let n = 400_000u64;
    let finest = 0.025;
    let levels: Vec<Integrator> = [0.1, 0.05, finest]
        .iter()
        .map(|&dt| Integrator::new(&p, &protocol, &IntegratorConfig { dt, ..Default::default() }).unwrap())
        .collect();
    let mut means = [Welford::new(), Welford::new(), Welford::new()];
    let ch = Channel::Path(Direction::Forward);
    for id in 0..n {
        let stream = NoiseStream::new(5, id);
        means[0].push(final_x(&levels[0], &p, 0.0, &mut Coarsened::new(stream.wiener(ch, finest), 4)));
        means[1].push(final_x(&levels[1], &p, 0.0, &mut Coarsened::new(stream.wiener(ch, finest), 2)));
        means[2].push(final_x(&levels[2], &p, 0.0, &mut stream.wiener(ch, finest)));
    }
    let d1 = means[0].mean() - means[1].mean();
    let d2 = means[1].mean() - means[2].mean();
    let ratio = d1 / d2;
    assert!((1.6..2.4).contains(&ratio), "difference ratio {ratio}: {d1} vs {d2}");
    // the finest level sits within sampling error of the exact mean
    assert!((means[2].mean() - exact).abs() < 4.0 * means[2].std_error());
}

#[test]
fn homodyne_current_tracks_steady_state_signal() {
    let p = PhysicalParams::default();
    let protocol = RampProtocol::constant(2000.0).with_direction(Direction::Backward);
    let cfg = IntegratorConfig { dt: 1e-2, record_stride: 10, ..Default::default() };
    let integ = Integrator::new(&p, &protocol, &cfg).unwrap();
    let stream = NoiseStream::new(3, 0);
    let x0 = draw_initial(&p, &protocol, InitialCondition::Stationary, &stream);
    let traj = cavity_thermo::sde::record_trajectory(
        &integ,
        &p,
        0,
        x0,
        &mut stream.wiener(Channel::Path(Direction::Backward), integ.dt()),
    )
    .unwrap();
    let record_dt = 0.1;
    let current = synthesize_homodyne_current(&traj, &p, record_dt, &mut stream.wiener(Channel::Homodyne, record_dt));
    let late: Welford = current.iter().filter(|j| j.t > 50.0).map(|j| j.current).collect();
    let expected = p.gamma * p.eta * (2.0 * p.omega / p.hbar).sqrt() * p.q_steady();
    assert!((late.mean() - expected).abs() < 4.0 * late.std_error() + 0.05, "{} vs {expected}", late.mean());
}
