//! Pathwise integration of the homodyne estimate process
//!
//! ```text
//! dX = (g/omega) lambda(t) dt - (gamma/2) X dt + sqrt(gamma hbar L / (2 omega eta)) dW
//! ```
//!
//! together with the conditional quadrature moments and the running work
//! estimate `W = g omega int lambda X dt` (left-point, non-anticipating).
//!
//! Noise comes from per-trajectory ChaCha8 streams keyed by
//! `(master_seed, channel)` with the trajectory index as the stream number,
//! so every path is reproducible independently of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lambda_at, Direction, PhysicalParams, RampProtocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Steps between recorded samples.
    pub record_stride: usize,
    /// Also integrate the conditional mean and variance.
    pub track_moments: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::EulerMaruyama,
            record_stride: 100,
            track_moments: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be finite and > 0",
            });
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter {
                name: "record_stride",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// Warning text when `dt` exceeds the `0.1 / gamma` stability guard.
    pub fn stability_warning(&self, params: &PhysicalParams) -> Option<String> {
        let limit = 0.1 / params.gamma;
        (self.dt > limit).then(|| {
            format!(
                "dt = {} exceeds the stability guard 0.1/gamma = {limit}; results may be inaccurate",
                self.dt
            )
        })
    }

    /// Number of steps covering `[0, tau]`; the step is rescaled to `tau / n`.
    pub fn steps_for(&self, tau: f64) -> usize {
        ((tau / self.dt).round() as usize).max(1)
    }
}

/// Independent noise channels drawn from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Wiener increments driving a trajectory.
    Path(Direction),
    /// Initial-condition draw.
    Initial(Direction),
    /// Detector noise for synthesized homodyne currents.
    Homodyne,
}

impl Channel {
    fn tag(self) -> u64 {
        match self {
            Channel::Path(Direction::Forward) => 1,
            Channel::Path(Direction::Backward) => 2,
            Channel::Initial(Direction::Forward) => 3,
            Channel::Initial(Direction::Backward) => 4,
            Channel::Homodyne => 5,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self, channel: Channel) -> ChaCha8Rng {
        let mut state = self.master_seed ^ channel.tag().wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Wiener increments with variance `dt` on the given channel.
    pub fn wiener(&self, channel: Channel, dt: f64) -> WienerIncrements {
        WienerIncrements {
            rng: self.rng(channel),
            sqrt_dt: dt.sqrt(),
        }
    }
}

/// Source of Wiener increments for successive steps.
pub trait IncrementSource {
    fn next_increment(&mut self) -> f64;
}

pub struct WienerIncrements {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
}

impl IncrementSource for WienerIncrements {
    #[inline]
    fn next_increment(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sqrt_dt * z
    }
}

/// Noise switched off.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl IncrementSource for ZeroNoise {
    fn next_increment(&mut self) -> f64 {
        0.0
    }
}

/// Sums `factor` consecutive increments of a finer source, giving the coarse
/// path that shares its Brownian motion with the fine one.
pub struct Coarsened<S> {
    inner: S,
    factor: usize,
}

impl<S: IncrementSource> Coarsened<S> {
    pub fn new(inner: S, factor: usize) -> Self {
        assert!(factor >= 1);
        Self { inner, factor }
    }
}

impl<S: IncrementSource> IncrementSource for Coarsened<S> {
    fn next_increment(&mut self) -> f64 {
        (0..self.factor).map(|_| self.inner.next_increment()).sum()
    }
}

/// Replays a fixed sequence of increments, then zeros.
pub struct Scripted<I>(pub I);

impl<I: Iterator<Item = f64>> IncrementSource for Scripted<I> {
    fn next_increment(&mut self) -> f64 {
        self.0.next().unwrap_or(0.0)
    }
}

/// Where the estimate process starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Stationary estimate distribution around the protocol's initial displacement.
    #[default]
    Stationary,
    /// Exactly the initial displacement.
    PointMass,
}

impl InitialCondition {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "stationary" => Some(InitialCondition::Stationary),
            "point" | "point_mass" => Some(InitialCondition::PointMass),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitialCondition::Stationary => "stationary",
            InitialCondition::PointMass => "point",
        }
    }
}

pub fn draw_initial(
    params: &PhysicalParams,
    protocol: &RampProtocol,
    mode: InitialCondition,
    stream: &NoiseStream,
) -> f64 {
    let centre = protocol.initial_displacement(params);
    match mode {
        InitialCondition::PointMass => centre,
        InitialCondition::Stationary => {
            let z: f64 = stream
                .rng(Channel::Initial(protocol.direction))
                .sample(StandardNormal);
            centre + params.estimate_variance().sqrt() * z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    /// Estimate `X(t)`.
    pub x: f64,
    /// Accumulated work estimate.
    pub work: f64,
    /// Conditional mean of the quadrature.
    pub q_mean: f64,
    /// Conditional variance of the quadrature.
    pub q_var: f64,
}

impl TrajectoryState {
    /// State at `t = 0` with flat (Gaussian) conditional moments.
    pub fn initial(params: &PhysicalParams, protocol: &RampProtocol, x0: f64) -> Self {
        Self {
            t: 0.0,
            x: x0,
            work: 0.0,
            q_mean: protocol.initial_displacement(params),
            q_var: params.q_variance(),
        }
    }
}

/// Coefficients shared by the single-step operations and the integrator loop.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    drive: f64,
    half_gamma: f64,
    diffusion: f64,
    work_rate: f64,
    gamma: f64,
    flat_variance: f64,
    /// `2 gamma eta omega / (hbar L)`.
    backaction: f64,
}

impl Coefficients {
    fn new(params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        if params.eta == 0.0 {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: 0.0,
                reason: "estimate diffusion is infinite for eta = 0",
            });
        }
        let flat_variance = params.q_variance();
        Ok(Self {
            drive: params.g / params.omega,
            half_gamma: 0.5 * params.gamma,
            diffusion: params.estimate_diffusion(),
            work_rate: params.g * params.omega,
            gamma: params.gamma,
            flat_variance,
            backaction: params.gamma * params.eta / flat_variance,
        })
    }

    #[inline(always)]
    fn estimate(&self, x: f64, work: f64, lambda: f64, dt: f64, dw: f64) -> (f64, f64) {
        let next = x + self.drive * lambda * dt - self.half_gamma * x * dt + self.diffusion * dw;
        (next, work + self.work_rate * lambda * x * dt)
    }

    /// Exponential step for the conditional mean (Simpson rule on the
    /// forcing) and RK4 for the variance excess `u = q_var - flat`, which
    /// obeys `u' = -gamma u - backaction u^2`.
    fn moments(&self, q_mean: f64, q_var: f64, lam: [f64; 3], dt: f64, dw: f64) -> (f64, f64) {
        let e_full = (-self.half_gamma * dt).exp();
        let e_half = (-0.5 * self.half_gamma * dt).exp();
        let forcing = self.drive * dt / 6.0 * (lam[0] * e_full + 4.0 * lam[1] * e_half + lam[2]);
        let excess = q_var - self.flat_variance;
        let mean = e_full * q_mean + forcing + self.backaction.sqrt() * excess * dw;

        let f = |u: f64| -self.gamma * u - self.backaction * u * u;
        let k1 = f(excess);
        let k2 = f(excess + 0.5 * dt * k1);
        let k3 = f(excess + 0.5 * dt * k2);
        let k4 = f(excess + dt * k3);
        let u = excess + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        (mean, self.flat_variance + u)
    }
}

fn check_step(state: &TrajectoryState, protocol: &RampProtocol, dt: f64) -> Result<()> {
    if state.t + dt > protocol.tau * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "step from t = {} by dt = {dt} overruns tau = {}",
            state.t, protocol.tau
        )));
    }
    Ok(())
}

/// One Euler-Maruyama step of the estimate and the left-point work sum.
pub fn step_estimate(
    state: &TrajectoryState,
    params: &PhysicalParams,
    protocol: &RampProtocol,
    config: &IntegratorConfig,
    dw: f64,
) -> Result<TrajectoryState> {
    let c = Coefficients::new(params)?;
    check_step(state, protocol, config.dt)?;
    let lambda = lambda_at(protocol, state.t)?;
    let (x, work) = c.estimate(state.x, state.work, lambda, config.dt, dw);
    Ok(TrajectoryState {
        t: state.t + config.dt,
        x,
        work,
        ..*state
    })
}

/// One step of the conditional mean and variance.
pub fn step_conditional_moments(
    state: &TrajectoryState,
    params: &PhysicalParams,
    protocol: &RampProtocol,
    config: &IntegratorConfig,
    dw: f64,
) -> Result<TrajectoryState> {
    let c = Coefficients::new(params)?;
    let dt = config.dt;
    check_step(state, protocol, dt)?;
    let end = (state.t + dt).min(protocol.tau);
    let lam = [
        lambda_at(protocol, state.t)?,
        lambda_at(protocol, state.t + 0.5 * dt)?,
        lambda_at(protocol, end)?,
    ];
    let (q_mean, q_var) = c.moments(state.q_mean, state.q_var, lam, dt, dw);
    Ok(TrajectoryState {
        t: state.t + dt,
        q_mean,
        q_var,
        ..*state
    })
}

/// Integrates many trajectories of one protocol on a shared time grid.
/// Immutable once built, so one instance can serve concurrent workers.
#[derive(Debug, Clone)]
pub struct Integrator {
    coeffs: Coefficients,
    protocol: RampProtocol,
    config: IntegratorConfig,
    n_steps: usize,
    dt: f64,
    lambda: Vec<f64>,
    lambda_mid: Vec<f64>,
}

impl Integrator {
    pub fn new(
        params: &PhysicalParams,
        protocol: &RampProtocol,
        config: &IntegratorConfig,
    ) -> Result<Self> {
        let coeffs = Coefficients::new(params)?;
        protocol.validate()?;
        config.validate()?;
        let n_steps = config.steps_for(protocol.tau);
        let dt = protocol.tau / n_steps as f64;
        let lambda = (0..=n_steps)
            .map(|k| protocol.lambda_unchecked(k as f64 * dt))
            .collect();
        let lambda_mid = if config.track_moments {
            (0..n_steps)
                .map(|k| protocol.lambda_unchecked((k as f64 + 0.5) * dt))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            coeffs,
            protocol: *protocol,
            config: *config,
            n_steps,
            dt,
            lambda,
            lambda_mid,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Effective step, `tau / n_steps`.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn protocol(&self) -> &RampProtocol {
        &self.protocol
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda
    }

    /// Number of recorded samples per trajectory (including both endpoints).
    pub fn n_records(&self) -> usize {
        let stride = self.config.record_stride;
        self.n_steps / stride + 1 + usize::from(!self.n_steps.is_multiple_of(stride))
    }

    fn is_record_step(&self, k: usize) -> bool {
        k.is_multiple_of(self.config.record_stride) || k == self.n_steps
    }

    /// Relaxes the estimate for `steps` steps at the protocol's initial drive
    /// strength without accumulating work.
    pub fn relax<S: IncrementSource>(&self, x0: f64, steps: usize, noise: &mut S) -> Result<f64> {
        let lambda = self.lambda[0];
        let mut x = x0;
        for step in 0..steps {
            (x, _) = self
                .coeffs
                .estimate(x, 0.0, lambda, self.dt, noise.next_increment());
            if !x.is_finite() {
                return Err(Error::IntegrationDiverged {
                    step,
                    t: -((steps - step) as f64) * self.dt,
                });
            }
        }
        Ok(x)
    }

    /// Integrates from `start` over the whole protocol. `observe` is called
    /// with `(record_index, lambda, state)` at t = 0, every `record_stride`
    /// steps and at t = tau.
    pub fn run<S, O>(&self, start: TrajectoryState, noise: &mut S, mut observe: O) -> Result<TrajectoryState>
    where
        S: IncrementSource,
        O: FnMut(usize, f64, &TrajectoryState),
    {
        let mut state = start;
        let mut record = 0;
        observe(record, self.lambda[0], &state);
        for k in 0..self.n_steps {
            let dw = noise.next_increment();
            let lam = self.lambda[k];
            let (x, work) = self.coeffs.estimate(state.x, state.work, lam, self.dt, dw);
            if self.config.track_moments {
                let lams = [lam, self.lambda_mid[k], self.lambda[k + 1]];
                (state.q_mean, state.q_var) =
                    self.coeffs
                        .moments(state.q_mean, state.q_var, lams, self.dt, dw);
            }
            state.x = x;
            state.work = work;
            state.t = (k + 1) as f64 * self.dt;
            if !(x.is_finite() && work.is_finite()) {
                return Err(Error::IntegrationDiverged {
                    step: k + 1,
                    t: state.t,
                });
            }
            if self.is_record_step(k + 1) {
                record += 1;
                observe(record, self.lambda[k + 1], &state);
            }
        }
        Ok(state)
    }
}

/// A recorded path.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub direction: Direction,
    pub stream_id: u64,
    pub lambda: Vec<f64>,
    pub samples: Vec<TrajectoryState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &TrajectoryState {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_work(&self) -> f64 {
        self.final_state().work
    }
}

/// Full path on `[0, tau]` driven by the stream's path channel.
pub fn simulate_trajectory(
    params: &PhysicalParams,
    protocol: &RampProtocol,
    config: &IntegratorConfig,
    stream: &NoiseStream,
    x0: f64,
) -> Result<Trajectory> {
    let integrator = Integrator::new(params, protocol, config)?;
    let mut noise = stream.wiener(Channel::Path(protocol.direction), integrator.dt());
    record_trajectory(&integrator, params, stream.stream_id, x0, &mut noise)
}

/// As [`simulate_trajectory`] with an explicit increment source.
pub fn record_trajectory<S: IncrementSource>(
    integrator: &Integrator,
    params: &PhysicalParams,
    stream_id: u64,
    x0: f64,
    noise: &mut S,
) -> Result<Trajectory> {
    let protocol = *integrator.protocol();
    let capacity = integrator.n_records();
    let mut lambda = Vec::with_capacity(capacity);
    let mut samples = Vec::with_capacity(capacity);
    integrator.run(TrajectoryState::initial(params, &protocol, x0), noise, |_, lam, s| {
        lambda.push(lam);
        samples.push(*s);
    })?;
    Ok(Trajectory {
        direction: protocol.direction,
        stream_id,
        lambda,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomodyneSample {
    pub t: f64,
    pub current: f64,
}

/// Homodyne current `J = gamma eta sqrt(2 omega / hbar) X + sqrt(gamma eta L) xi`
/// at the recorded samples, with `xi = dW / record_dt` drawn from `noise`
/// (which must produce increments of variance `record_dt`).
pub fn synthesize_homodyne_current<S: IncrementSource>(
    trajectory: &Trajectory,
    params: &PhysicalParams,
    record_dt: f64,
    noise: &mut S,
) -> Vec<HomodyneSample> {
    let signal_gain = params.gamma * params.eta * (2.0 * params.omega / params.hbar).sqrt();
    let noise_gain = (params.gamma * params.eta * params.l()).sqrt();
    trajectory
        .samples
        .iter()
        .map(|s| {
            let xi = noise.next_increment() / record_dt;
            HomodyneSample {
                t: s.t,
                current: signal_gain * s.x + noise_gain * xi,
            }
        })
        .collect()
}
