//! The four commands: simulate, analyze, verify and figures.

use std::path::{Path, PathBuf};

use crate::analysis::{analyze, Analysis, ThermoReport};
use crate::config::{Emit, RunConfig};
use crate::ensemble::{ensemble_trajectory, run_ensemble, EnsembleConfig, WorkEnsemble};
use crate::error::Result;
use crate::figures::{self, FigureInputs};
use crate::io;
use crate::sde::Trajectory;
use crate::verify::Suite;

pub const WORK_SAMPLES: &str = "work_samples.csv";
pub const TRAJECTORIES: &str = "trajectories.csv";
pub const HISTOGRAM: &str = "histogram.csv";
pub const CROOKS_POINTS: &str = "crooks_points.csv";
pub const REPORT: &str = "report.json";

pub fn warn_if_unstable(cfg: &RunConfig) {
    if let Some(msg) = cfg.integrator.stability_warning(&cfg.params) {
        log::warn!("{msg}");
    }
}

/// Forward and backward ensembles for the configuration.
pub fn simulate(cfg: &RunConfig, track_paths: bool) -> Result<WorkEnsemble> {
    warn_if_unstable(cfg);
    let ens = EnsembleConfig {
        track_paths,
        retain_samples: true,
        ..cfg.ensemble.clone()
    };
    run_ensemble(&cfg.params, &cfg.protocols(), &ens, &cfg.integrator)
}

/// The first `n` ensemble members of each direction, fully recorded.
pub fn record_trajectories(cfg: &RunConfig, n: usize) -> Result<Vec<Trajectory>> {
    let pair = cfg.protocols();
    let mut out = Vec::new();
    for &direction in &cfg.ensemble.directions {
        for id in 0..n.min(cfg.ensemble.n_traj) as u64 {
            out.push(ensemble_trajectory(
                &cfg.params,
                pair.get(direction),
                &cfg.ensemble,
                &cfg.integrator,
                id,
            )?);
        }
    }
    Ok(out)
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

/// Writes `work_samples.csv` (and `trajectories.csv` when requested).
pub fn cmd_simulate(cfg: &RunConfig) -> Result<WorkEnsemble> {
    let dir = output_dir(cfg)?;
    let ensemble = simulate(cfg, false)?;
    io::write_work_samples(&dir.join(WORK_SAMPLES), ensemble.samples())?;
    if cfg.emits(Emit::Trajectories) {
        io::write_trajectories(&dir.join(TRAJECTORIES), &record_trajectories(cfg, cfg.record_traj)?)?;
    }
    log::info!("wrote {} work samples to {}", ensemble.samples().count(), dir.display());
    Ok(ensemble)
}

fn write_analysis(cfg: &RunConfig, dir: &Path, ensemble: &WorkEnsemble, analysis: &Analysis) -> Result<()> {
    if cfg.emits(Emit::Report) {
        io::write_report(&dir.join(REPORT), &analysis.report)?;
    }
    if cfg.emits(Emit::Crooks) {
        io::write_crooks_points(&dir.join(CROOKS_POINTS), &analysis.points)?;
    }
    if cfg.emits(Emit::Histograms) {
        let hists: Vec<_> = ensemble
            .runs
            .iter()
            .filter_map(|r| r.histogram.as_ref().map(|h| (r.direction, h)))
            .collect();
        io::write_histograms(&dir.join(HISTOGRAM), &hists)?;
    }
    Ok(())
}

/// Reads work samples (default: `work_samples.csv` in the output directory)
/// and writes the report, Crooks points and histograms.
pub fn cmd_analyze(cfg: &RunConfig, samples: Option<&Path>) -> Result<ThermoReport> {
    let dir = output_dir(cfg)?;
    let path: PathBuf = samples.map_or_else(|| dir.join(WORK_SAMPLES), Path::to_path_buf);
    let rows = io::read_work_samples(&path)?;
    let ensemble = WorkEnsemble::from_samples(cfg.ensemble.master_seed, &cfg.protocols(), &rows)?;
    let analysis = analyze(&cfg.params, &cfg.protocol, &ensemble)?;
    write_analysis(cfg, dir, &ensemble, &analysis)?;
    Ok(analysis.report)
}

/// Runs the acceptance suite, printing one line per criterion. Returns the
/// process exit code: 0 when every criterion passes, 1 otherwise.
pub fn cmd_verify(cfg: &RunConfig, out: &mut impl std::io::Write) -> Result<i32> {
    warn_if_unstable(cfg);
    let suite = Suite::new(cfg.clone());
    let results = suite.run_all(out)?;
    Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
}

/// Simulates with tracked mean paths and writes every figure file plus the
/// report they annotate.
pub fn cmd_figures(cfg: &RunConfig) -> Result<()> {
    let dir = output_dir(cfg)?;
    let ensemble = simulate(cfg, true)?;
    let analysis = analyze(&cfg.params, &cfg.protocol, &ensemble)?;
    let trajectories = record_trajectories(cfg, cfg.record_traj.min(5))?;
    let steps = cfg.integrator.steps_for(cfg.protocol.tau);
    let record_dt = cfg.protocol.tau / steps as f64 * cfg.integrator.record_stride as f64;
    figures::write_all(
        dir,
        &FigureInputs {
            params: &cfg.params,
            ensemble: &ensemble,
            analysis: &analysis,
            trajectories: &trajectories,
            record_dt,
        },
    )?;
    io::write_report(&dir.join(REPORT), &analysis.report)?;
    Ok(())
}
