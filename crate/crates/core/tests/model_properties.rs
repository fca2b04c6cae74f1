use approx::assert_relative_eq;
use proptest::prelude::*;

use cavity_thermo::model::{
    beta_eff, delta_f, energy_flows, mean_q, mean_work, work_pdf, Direction, PhysicalParams,
    RampProtocol,
};

/// Midpoint-rule recursion for the mean on a dense grid, with the work
/// integral accumulated by the trapezoid rule.
fn brute_force(params: &PhysicalParams, protocol: &RampProtocol, h: f64) -> (Vec<f64>, f64) {
    let n = (protocol.tau / h).round() as usize;
    let lam = |t: f64| cavity_thermo::model::lambda_at(protocol, t.min(protocol.tau)).unwrap();
    let decay = (-0.5 * params.gamma * h).exp();
    let half_decay = (-0.25 * params.gamma * h).exp();
    let mut q = protocol.initial_displacement(params);
    let mut qs = Vec::with_capacity(n + 1);
    qs.push(q);
    let mut work = 0.0;
    let mut prev = lam(0.0) * q;
    for k in 0..n {
        let t = k as f64 * h;
        q = decay * q + params.g / params.omega * h * half_decay * lam(t + 0.5 * h);
        qs.push(q);
        let next = lam(t + h) * q;
        work += 0.5 * h * (prev + next);
        prev = next;
    }
    (qs, params.g * params.omega * work)
}

#[test]
fn quadrature_agrees_with_dense_riemann_sums() {
    let params = PhysicalParams::default();
    for direction in [Direction::Forward, Direction::Backward] {
        let protocol = RampProtocol::default().with_direction(direction);
        let h = 1e-5;
        let (qs, work) = brute_force(&params, &protocol, h);
        for &t in &[0.5, 2.0, 5.0, 7.5, 10.0] {
            let k = (t / h).round() as usize;
            let quad = mean_q(&params, &protocol, t).unwrap();
            assert_relative_eq!(quad, qs[k], max_relative = 1e-6);
        }
        assert_relative_eq!(mean_work(&params, &protocol), work, max_relative = 1e-6);
    }
}

#[test]
fn high_temperature_limit() {
    for &nbar in &[50.0, 80.0, 200.0, 1e4] {
        let p = PhysicalParams { nbar, eta: 1.0, ..Default::default() };
        let b = beta_eff(&p);
        assert!((b - 1.0 / (p.hbar * p.omega * nbar)).abs() / b < 0.02);
    }
    for &eta in &[0.1, 0.5, 1.0] {
        let p = PhysicalParams { nbar: 60.0, eta, ..Default::default() };
        assert_relative_eq!(beta_eff(&p) * p.hbar * p.omega * (p.nbar + 0.5), eta, max_relative = 1e-15);
    }
}

#[test]
fn work_density_normalizes() {
    let p = PhysicalParams::default();
    let mean = 4.0067;
    let h = 1e-3;
    let total: f64 = (0..80_000)
        .map(|i| work_pdf(&p, mean, -36.0 + (i as f64 + 0.5) * h).unwrap() * h)
        .sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-9);
}

proptest! {
    #[test]
    fn free_energy_matches_steady_state_occupation(g in 0.0f64..5.0, gamma in 0.1f64..10.0) {
        // natural units: the occupation form carries no overall hbar omega
        let p = PhysicalParams { g, gamma, ..Default::default() };
        let q = p.q_steady();
        let expected = -p.hbar * p.omega * (p.omega / (2.0 * p.hbar)) * q * q;
        prop_assert!((delta_f(&p) - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
    }

    #[test]
    fn steady_state_power_balances_heat(
        g in 0.01f64..5.0, gamma in 0.1f64..10.0, omega in 0.2f64..3.0, nbar in 0.0f64..10.0,
    ) {
        let p = PhysicalParams { g, gamma, omega, nbar, ..Default::default() };
        let f = energy_flows(&p, 1.0, p.q_steady());
        prop_assert!((f.power + f.heat).abs() <= 1e-12 * f.power.abs());
    }

    #[test]
    fn flat_variance_is_independent_of_drive(nbar in 0.0f64..20.0, hbar in 0.1f64..3.0, omega in 0.1f64..3.0) {
        let p = PhysicalParams { nbar, hbar, omega, ..Default::default() };
        prop_assert!((p.q_variance() - hbar * (2.0 * nbar + 1.0) / (2.0 * omega)).abs() < 1e-12 * p.q_variance());
    }
}
