//! Physical parameters, drive protocols and the closed-form thermodynamics of
//! the driven, damped cavity mode.
//!
//! Everything here is a pure function of its inputs. Quantities that are
//! integrals over the protocol (`mean_q`, `mean_work`) are evaluated by
//! adaptive double-exponential quadrature, split at the protocol's
//! discontinuities.

use std::f64::consts::PI;
use std::fmt;

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub omega: f64,
    /// Drive amplitude.
    pub g: f64,
    /// Bath coupling rate.
    pub gamma: f64,
    /// Bath mean photon number.
    pub nbar: f64,
    /// Detector efficiency.
    pub eta: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            omega: 1.0,
            g: 1.0,
            gamma: 2.0,
            nbar: 1.0,
            eta: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hbar", self.hbar),
            ("omega", self.omega),
            ("gamma", self.gamma),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        for (name, value) in [("g", self.g), ("nbar", self.nbar)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and >= 0",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(())
    }

    /// Noise coefficient `L = 2 nbar + 1`.
    pub fn l(&self) -> f64 {
        2.0 * self.nbar + 1.0
    }

    /// Steady-state displacement `2g / (omega gamma)` with the drive fully on.
    pub fn q_steady(&self) -> f64 {
        2.0 * self.g / (self.omega * self.gamma)
    }

    /// Conditional quadrature variance `hbar L / (2 omega)`.
    pub fn q_variance(&self) -> f64 {
        self.hbar * self.l() / (2.0 * self.omega)
    }

    /// Stationary variance of the estimate process, `hbar L / (2 omega eta)`.
    pub fn estimate_variance(&self) -> f64 {
        self.q_variance() / self.eta
    }

    /// Diffusion coefficient of the estimate SDE, `sqrt(gamma hbar L / (2 omega eta))`.
    pub fn estimate_diffusion(&self) -> f64 {
        (self.gamma * self.q_variance() / self.eta).sqrt()
    }

    /// Proportionality constant between work variance and mean work,
    /// `hbar omega L / eta`.
    pub fn work_variance_factor(&self) -> f64 {
        self.hbar * self.omega * self.l() / self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "forward" | "F" | "f" => Some(Direction::Forward),
            "backward" | "B" | "b" => Some(Direction::Backward),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    Sigmoid,
    Step,
    Constant,
}

impl RampShape {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "sigmoid" => Some(RampShape::Sigmoid),
            "step" => Some(RampShape::Step),
            "constant" => Some(RampShape::Constant),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RampShape::Sigmoid => "sigmoid",
            RampShape::Step => "step",
            RampShape::Constant => "constant",
        }
    }
}

/// Drive schedule `lambda(t)` on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub shape: RampShape,
    /// Ramp steepness.
    pub sigma: f64,
    /// Ramp centre.
    pub t0: f64,
    /// Protocol duration.
    pub tau: f64,
    pub direction: Direction,
}

impl Default for RampProtocol {
    fn default() -> Self {
        Self {
            shape: RampShape::Sigmoid,
            sigma: 2.0,
            t0: 5.0,
            tau: 10.0,
            direction: Direction::Forward,
        }
    }
}

impl RampProtocol {
    pub fn sigmoid(sigma: f64, t0: f64, tau: f64) -> Self {
        Self {
            shape: RampShape::Sigmoid,
            sigma,
            t0,
            tau,
            direction: Direction::Forward,
        }
    }

    pub fn constant(tau: f64) -> Self {
        Self {
            shape: RampShape::Constant,
            sigma: 0.0,
            t0: 0.0,
            tau,
            direction: Direction::Forward,
        }
    }

    pub fn step(t0: f64, tau: f64) -> Self {
        Self {
            shape: RampShape::Step,
            sigma: 0.0,
            t0,
            tau,
            direction: Direction::Forward,
        }
    }

    pub fn with_direction(self, direction: Direction) -> Self {
        Self { direction, ..self }
    }

    /// The time-reversed schedule.
    pub fn reversed(self) -> Self {
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        self.with_direction(direction)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau,
                reason: "must be finite and > 0",
            });
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t0",
                value: self.t0,
                reason: "must be finite",
            });
        }
        if self.shape == RampShape::Sigmoid && !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be finite and > 0 for a sigmoid ramp",
            });
        }
        Ok(())
    }

    /// Drive strength at time `t` without the domain check.
    pub(crate) fn lambda_unchecked(&self, t: f64) -> f64 {
        let s = match self.direction {
            Direction::Forward => t,
            Direction::Backward => self.tau - t,
        };
        match self.shape {
            RampShape::Sigmoid => 1.0 / ((-self.sigma * (s - self.t0)).exp() + 1.0),
            RampShape::Step => {
                if s >= self.t0 {
                    1.0
                } else {
                    0.0
                }
            }
            RampShape::Constant => 1.0,
        }
    }

    /// Points inside `(0, tau)` where `lambda` is discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        if self.shape != RampShape::Step {
            return Vec::new();
        }
        let at = match self.direction {
            Direction::Forward => self.t0,
            Direction::Backward => self.tau - self.t0,
        };
        if at > 0.0 && at < self.tau {
            vec![at]
        } else {
            Vec::new()
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.tau;
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(Error::domain(format!(
                "t = {t} outside protocol window [0, {}]",
                self.tau
            )));
        }
        Ok(())
    }

    /// Mean displacement the protocol starts from: the undisplaced state for
    /// the forward run, the driven steady state for the reversed run.
    pub fn initial_displacement(&self, params: &PhysicalParams) -> f64 {
        match self.direction {
            Direction::Forward => 0.0,
            Direction::Backward => params.q_steady(),
        }
    }
}

pub fn lambda_at(protocol: &RampProtocol, t: f64) -> Result<f64> {
    protocol.check_time(t)?;
    Ok(protocol.lambda_unchecked(t.clamp(0.0, protocol.tau)))
}

/// Bose-Einstein occupation for `mu = hbar omega / k_B T`.
pub fn nbar_from_temperature(mu: f64) -> Result<f64> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::domain(format!(
            "mu = {mu}: occupation requires mu > 0"
        )));
    }
    Ok(1.0 / mu.exp_m1())
}

/// Integrate `f` over `[a, b]`, splitting at any `breaks` inside the interval.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    knots
        .windows(2)
        .map(|w| double_exponential::integrate(&f, w[0], w[1], QUAD_TOL).integral)
        .sum()
}

/// Unconditional mean displacement at time `t`:
/// `q0 e^{-gamma t/2} + (g/omega) int_0^t e^{-gamma (t-s)/2} lambda(s) ds`,
/// with `q0` given by [`RampProtocol::initial_displacement`].
pub fn mean_q(params: &PhysicalParams, protocol: &RampProtocol, t: f64) -> Result<f64> {
    protocol.check_time(t)?;
    let t = t.clamp(0.0, protocol.tau);
    Ok(mean_q_unchecked(params, protocol, t))
}

fn mean_q_unchecked(params: &PhysicalParams, protocol: &RampProtocol, t: f64) -> f64 {
    let half_gamma = 0.5 * params.gamma;
    let q0 = protocol.initial_displacement(params);
    let driven = integrate(
        |s| (-half_gamma * (t - s)).exp() * protocol.lambda_unchecked(s),
        0.0,
        t,
        &protocol.breakpoints(),
    );
    q0 * (-half_gamma * t).exp() + params.g / params.omega * driven
}

/// Average work `g omega int_0^tau lambda(t) <q(t)> dt`.
pub fn mean_work(params: &PhysicalParams, protocol: &RampProtocol) -> f64 {
    if params.g == 0.0 {
        return 0.0;
    }
    let integral = integrate(
        |t| protocol.lambda_unchecked(t) * mean_q_unchecked(params, protocol, t),
        0.0,
        protocol.tau,
        &protocol.breakpoints(),
    );
    params.g * params.omega * integral
}

/// Free-energy change between the undriven and fully driven states,
/// `-2 hbar omega g^2 / gamma^2`.
pub fn delta_f(params: &PhysicalParams) -> f64 {
    -2.0 * params.hbar * params.omega * params.g * params.g / (params.gamma * params.gamma)
}

/// Effective inverse temperature `eta / (hbar omega (nbar + 1/2))`.
pub fn beta_eff(params: &PhysicalParams) -> f64 {
    params.eta / (params.hbar * params.omega * (params.nbar + 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFlows {
    pub power: f64,
    pub heat: f64,
    pub mean_n: f64,
}

/// Work rate and heat current for drive strength `lambda_now` at mean
/// displacement `q_now` (zero mean momentum).
pub fn energy_flows(params: &PhysicalParams, lambda_now: f64, q_now: f64) -> EnergyFlows {
    let power = params.g * params.omega * lambda_now * q_now;
    let excess = params.omega / (2.0 * params.hbar) * q_now * q_now;
    EnergyFlows {
        power,
        heat: -params.hbar * params.omega * params.gamma * excess,
        mean_n: params.nbar + excess,
    }
}

fn gaussian_density(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * PI * variance).sqrt()
}

/// Gaussian work density with mean `mean_work` and variance
/// `hbar omega L mean_work / eta`.
pub fn work_pdf(params: &PhysicalParams, mean_work: f64, w: f64) -> Result<f64> {
    if !(mean_work > 0.0) {
        return Err(Error::domain(format!(
            "work density needs mean_work > 0, got {mean_work}"
        )));
    }
    if params.eta == 0.0 {
        return Err(Error::domain("work density undefined for eta = 0"));
    }
    Ok(gaussian_density(
        w,
        mean_work,
        params.work_variance_factor() * mean_work,
    ))
}

/// Density of the estimate `x` around the conditional mean `q_mean`.
pub fn estimate_pdf(params: &PhysicalParams, q_mean: f64, x: f64) -> Result<f64> {
    if params.eta == 0.0 {
        return Err(Error::domain("estimate variance is infinite for eta = 0"));
    }
    Ok(gaussian_density(x, q_mean, params.estimate_variance()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            nq: n,
            p_min: -half_width,
            p_max: half_width,
            np: n,
        }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        let step = (max - min) / (n - 1) as f64;
        (0..n).map(|i| min + step * i as f64).collect()
    }
}

/// Phase-space density sampled on a rectangular grid; `density[i * p.len() + j]`
/// is the value at `(q[i], p[j])`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub density: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.density[iq * self.p.len() + ip]
    }

    /// Riemann-sum mass over the grid.
    pub fn total_mass(&self) -> f64 {
        let dq = if self.q.len() > 1 { self.q[1] - self.q[0] } else { 1.0 };
        let dp = if self.p.len() > 1 { self.p[1] - self.p[0] } else { 1.0 };
        self.density.iter().sum::<f64>() * dq * dp
    }

    pub fn peak(&self) -> (f64, f64) {
        let (idx, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (self.q[idx / self.p.len()], self.p[idx % self.p.len()])
    }
}

/// Gaussian Wigner function of a (displaced) thermal state centred at
/// `(q_mean, 0)` with variances `hbar L / (2 omega)` and `hbar omega L / 2`.
pub fn wigner_grid(params: &PhysicalParams, q_mean: f64, grid: &GridSpec) -> Result<WignerGrid> {
    let bounds = [grid.q_min, grid.q_max, grid.p_min, grid.p_max];
    if bounds.iter().any(|b| !b.is_finite()) || grid.nq == 0 || grid.np == 0 {
        return Err(Error::domain("wigner grid needs finite bounds and non-empty axes"));
    }
    let q = GridSpec::axis(grid.q_min, grid.q_max, grid.nq);
    let p = GridSpec::axis(grid.p_min, grid.p_max, grid.np);
    let var_q = params.q_variance();
    let var_p = params.hbar * params.omega * params.l() / 2.0;
    let mut density = Vec::with_capacity(q.len() * p.len());
    for &qi in &q {
        let wq = gaussian_density(qi, q_mean, var_q);
        density.extend(p.iter().map(|&pj| wq * gaussian_density(pj, 0.0, var_p)));
    }
    Ok(WignerGrid { q, p, density })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSummary {
    pub mean_q_final: f64,
    pub mean_work: f64,
    pub work_variance: f64,
    pub delta_f: f64,
    pub beta_eff: f64,
    pub q_variance: f64,
    pub x_variance: f64,
}

impl AnalyticSummary {
    pub fn compute(params: &PhysicalParams, protocol: &RampProtocol) -> Result<Self> {
        params.validate()?;
        protocol.validate()?;
        let mean_work = mean_work(params, protocol);
        Ok(Self {
            mean_q_final: mean_q_unchecked(params, protocol, protocol.tau),
            mean_work,
            work_variance: params.work_variance_factor() * mean_work,
            delta_f: delta_f(params),
            beta_eff: beta_eff(params),
            q_variance: params.q_variance(),
            x_variance: params.estimate_variance(),
        })
    }
}
