//! Seeded forward/backward Monte Carlo ensembles of the work estimate.
//!
//! Trajectories are integrated in parallel in fixed-size chunks; each chunk
//! is folded into the statistics in stream-id order, so results are
//! bit-identical for any worker count.

pub mod histogram;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use histogram::{build_histogram, rebin, Binning, Histogram, HistogramAccumulator};
pub use stats::{excess_kurtosis, ks_distance, Welford};

use crate::error::{Error, Result};
use crate::model::{Direction, PhysicalParams, RampProtocol};
use crate::sde::{
    draw_initial, record_trajectory, Channel, IncrementSource, InitialCondition, Integrator,
    IntegratorConfig, NoiseStream, Trajectory, TrajectoryState, WienerIncrements,
};

const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub master_seed: u64,
    pub directions: Vec<Direction>,
    /// Relaxation time at the initial drive strength before the protocol starts.
    pub burn_in: f64,
    pub initial: InitialCondition,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    /// Keep every work sample (needed for auto-binned histograms and CSV output).
    pub retain_samples: bool,
    /// Fixed edges for streaming histograms when samples are not retained.
    pub stream_edges: Option<Vec<f64>>,
    /// Accumulate the ensemble mean and variance of `X` at every recorded time.
    pub track_paths: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_traj: 20_000,
            master_seed: 42,
            directions: vec![Direction::Forward, Direction::Backward],
            burn_in: 0.0,
            initial: InitialCondition::Stationary,
            workers: 0,
            retain_samples: true,
            stream_edges: None,
            track_paths: false,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter {
                name: "n_traj",
                value: 0.0,
                reason: "must be > 0",
            });
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "burn_in",
                value: self.burn_in,
                reason: "must be finite and >= 0",
            });
        }
        if self.directions.is_empty() {
            return Err(Error::domain("ensemble needs at least one direction"));
        }
        Ok(())
    }
}

/// A forward protocol and its time reversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolPair {
    pub forward: RampProtocol,
    pub backward: RampProtocol,
}

impl ProtocolPair {
    pub fn from_forward(forward: RampProtocol) -> Self {
        let forward = forward.with_direction(Direction::Forward);
        Self {
            forward,
            backward: forward.reversed(),
        }
    }

    pub fn get(&self, direction: Direction) -> &RampProtocol {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }
}

/// Ensemble statistics of the estimate and the accumulated work at the
/// recorded times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub x: Vec<Welford>,
    pub work: Vec<Welford>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRun {
    pub direction: Direction,
    pub protocol: RampProtocol,
    pub work: Welford,
    /// Work samples ordered by stream id, when retained.
    pub samples: Option<Vec<f64>>,
    pub histogram: Option<Histogram>,
    pub path: Option<PathStats>,
}

impl DirectionRun {
    pub fn n(&self) -> u64 {
        self.work.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkSample {
    pub traj_id: u64,
    pub direction: Direction,
    /// Work as measured; backward samples are not negated.
    pub work: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkEnsemble {
    pub master_seed: u64,
    pub runs: Vec<DirectionRun>,
}

impl WorkEnsemble {
    pub fn get(&self, direction: Direction) -> Option<&DirectionRun> {
        self.runs.iter().find(|r| r.direction == direction)
    }

    pub fn forward(&self) -> Option<&DirectionRun> {
        self.get(Direction::Forward)
    }

    pub fn backward(&self) -> Option<&DirectionRun> {
        self.get(Direction::Backward)
    }

    /// Retained samples of one direction.
    pub fn work_samples(&self, direction: Direction) -> Result<&[f64]> {
        self.get(direction)
            .and_then(|r| r.samples.as_deref())
            .ok_or_else(|| Error::MissingData(format!("no retained {direction} work samples")))
    }

    /// All retained samples, forward first, each direction in stream order.
    pub fn samples(&self) -> impl Iterator<Item = WorkSample> + '_ {
        self.runs.iter().flat_map(|run| {
            run.samples.iter().flatten().enumerate().map(|(i, &work)| WorkSample {
                traj_id: i as u64,
                direction: run.direction,
                work,
            })
        })
    }

    /// Assembles an ensemble from stored samples (e.g. a samples file).
    pub fn from_samples(master_seed: u64, protocols: &ProtocolPair, samples: &[WorkSample]) -> Result<Self> {
        let mut runs = Vec::new();
        for direction in [Direction::Forward, Direction::Backward] {
            let mut rows: Vec<&WorkSample> =
                samples.iter().filter(|s| s.direction == direction).collect();
            if rows.is_empty() {
                continue;
            }
            rows.sort_by_key(|s| s.traj_id);
            let values: Vec<f64> = rows.iter().map(|s| s.work).collect();
            runs.push(DirectionRun {
                direction,
                protocol: *protocols.get(direction),
                work: values.iter().copied().collect(),
                histogram: Some(build_histogram(&values, &Binning::Auto)?),
                samples: Some(values),
                path: None,
            });
        }
        Ok(Self { master_seed, runs })
    }
}

struct Outcome {
    work: f64,
    path: Vec<(f64, f64)>,
}

/// Runs every configured direction with independent Wiener streams.
pub fn run_ensemble(
    params: &PhysicalParams,
    protocols: &ProtocolPair,
    ensemble: &EnsembleConfig,
    integrator: &IntegratorConfig,
) -> Result<WorkEnsemble> {
    run_ensemble_with(params, protocols, ensemble, integrator, |stream, direction, dt| {
        stream.wiener(Channel::Path(direction), dt)
    })
}

/// As [`run_ensemble`], with the per-trajectory increment source built by
/// `noise(stream, direction, dt)`.
pub fn run_ensemble_with<S, F>(
    params: &PhysicalParams,
    protocols: &ProtocolPair,
    ensemble: &EnsembleConfig,
    integrator: &IntegratorConfig,
    noise: F,
) -> Result<WorkEnsemble>
where
    S: IncrementSource,
    F: Fn(&NoiseStream, Direction, f64) -> S + Sync,
{
    ensemble.validate()?;
    let pool = if ensemble.workers > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(ensemble.workers)
                .build()
                .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?,
        )
    } else {
        None
    };
    let mut runs = Vec::with_capacity(ensemble.directions.len());
    for &direction in &ensemble.directions {
        let protocol = protocols.get(direction).with_direction(direction);
        let integ = Integrator::new(params, &protocol, integrator)?;
        let run = || run_direction(params, &integ, ensemble, &noise);
        let run = match &pool {
            Some(pool) => pool.install(run)?,
            None => run()?,
        };
        runs.push(run);
    }
    Ok(WorkEnsemble {
        master_seed: ensemble.master_seed,
        runs,
    })
}

fn run_direction<S, F>(
    params: &PhysicalParams,
    integ: &Integrator,
    ensemble: &EnsembleConfig,
    noise: &F,
) -> Result<DirectionRun>
where
    S: IncrementSource,
    F: Fn(&NoiseStream, Direction, f64) -> S + Sync,
{
    let protocol = *integ.protocol();
    let direction = protocol.direction;
    let burn_steps = (ensemble.burn_in / integ.dt()).round() as usize;
    let n_records = integ.n_records();

    let simulate = |id: u64| -> Result<Outcome> {
        let stream = NoiseStream::new(ensemble.master_seed, id);
        let x0 = draw_initial(params, &protocol, ensemble.initial, &stream);
        let mut increments = noise(&stream, direction, integ.dt());
        let diverged = |e: Error| match e {
            Error::IntegrationDiverged { step, .. } => Error::TrajectoryDiverged {
                direction,
                stream_id: id,
                step,
            },
            other => other,
        };
        let x0 = integ.relax(x0, burn_steps, &mut increments).map_err(diverged)?;
        let mut path = Vec::new();
        if ensemble.track_paths {
            path.reserve(n_records);
        }
        let end = integ
            .run(
                TrajectoryState::initial(params, &protocol, x0),
                &mut increments,
                |_, _, s| {
                    if ensemble.track_paths {
                        path.push((s.x, s.work));
                    }
                },
            )
            .map_err(diverged)?;
        Ok(Outcome {
            work: end.work,
            path,
        })
    };

    let mut work = Welford::new();
    let mut samples = ensemble
        .retain_samples
        .then(|| Vec::with_capacity(ensemble.n_traj));
    let mut streamed = match &ensemble.stream_edges {
        Some(edges) if !ensemble.retain_samples => Some(HistogramAccumulator::new(edges.clone())?),
        _ => None,
    };
    let tracked = if ensemble.track_paths { n_records } else { 0 };
    let mut path_x = vec![Welford::new(); tracked];
    let mut path_w = vec![Welford::new(); tracked];

    let n = ensemble.n_traj as u64;
    let mut lo = 0u64;
    while lo < n {
        let hi = (lo + CHUNK as u64).min(n);
        let outcomes: Vec<Result<Outcome>> = (lo..hi).into_par_iter().map(simulate).collect();
        for outcome in outcomes {
            let outcome = outcome?;
            work.push(outcome.work);
            if let Some(s) = samples.as_mut() {
                s.push(outcome.work);
            }
            if let Some(h) = streamed.as_mut() {
                h.add(outcome.work);
            }
            for ((ax, aw), &(x, w)) in path_x.iter_mut().zip(&mut path_w).zip(&outcome.path) {
                ax.push(x);
                aw.push(w);
            }
        }
        lo = hi;
    }

    let histogram = match (&samples, streamed) {
        (Some(s), _) => Some(build_histogram(s, &Binning::Auto)?),
        (None, Some(acc)) => Some(acc.finish()),
        (None, None) => None,
    };
    let path = ensemble.track_paths.then(|| {
        let mut t = Vec::with_capacity(n_records);
        let mut lambda = Vec::with_capacity(n_records);
        // the recording schedule is the same for every trajectory
        integ
            .run(
                TrajectoryState::initial(params, &protocol, 0.0),
                &mut crate::sde::ZeroNoise,
                |_, lam, s| {
                    t.push(s.t);
                    lambda.push(lam);
                },
            )
            .ok();
        PathStats {
            t,
            lambda,
            x: path_x,
            work: path_w,
        }
    });

    Ok(DirectionRun {
        direction,
        protocol,
        work,
        samples,
        histogram,
        path,
    })
}

/// Recorded path of one ensemble member, reproducing exactly the initial
/// draw, burn-in and increments used by [`run_ensemble`].
pub fn ensemble_trajectory(
    params: &PhysicalParams,
    protocol: &RampProtocol,
    ensemble: &EnsembleConfig,
    integrator: &IntegratorConfig,
    stream_id: u64,
) -> Result<Trajectory> {
    let integ = Integrator::new(params, protocol, integrator)?;
    let stream = NoiseStream::new(ensemble.master_seed, stream_id);
    let x0 = draw_initial(params, protocol, ensemble.initial, &stream);
    let mut noise = stream.wiener(Channel::Path(protocol.direction), integ.dt());
    let burn_steps = (ensemble.burn_in / integ.dt()).round() as usize;
    let x0 = integ.relax(x0, burn_steps, &mut noise)?;
    record_trajectory(&integ, params, stream_id, x0, &mut noise)
}

/// Convenience: the default Wiener source, for callers naming the type.
pub type DefaultNoise = WienerIncrements;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub forward: DirectionSummary,
    pub backward: DirectionSummary,
}

pub fn summarize_direction(ensemble: &WorkEnsemble, direction: Direction) -> Result<DirectionSummary> {
    let run = ensemble
        .get(direction)
        .filter(|r| r.n() > 0)
        .ok_or_else(|| Error::MissingData(format!("no {direction} samples")))?;
    if run.n() < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: run.n() as usize,
        });
    }
    Ok(DirectionSummary {
        n: run.n(),
        mean: run.work.mean(),
        variance: run.work.variance(),
        std_error: run.work.std_error(),
    })
}

/// Unbiased means, variances and standard errors for both directions.
pub fn summarize(ensemble: &WorkEnsemble) -> Result<EnsembleSummary> {
    Ok(EnsembleSummary {
        forward: summarize_direction(ensemble, Direction::Forward)?,
        backward: summarize_direction(ensemble, Direction::Backward)?,
    })
}
