//! Tabulated data behind the five figures. Each file holds exactly what one
//! plot needs; schemas are listed in the README.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{self, Analysis};
use crate::ensemble::{PathStats, WorkEnsemble};
use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::model::{self, Direction, GridSpec, PhysicalParams};
use crate::sde::{synthesize_homodyne_current, Channel, NoiseStream, Trajectory};

pub const FIG1_WIGNER: &str = "fig1_wigner.csv";
pub const FIG1_CYCLE: &str = "fig1_cycle.csv";
pub const FIG2_TRAJECTORIES: &str = "fig2_trajectories.csv";
pub const FIG3_HIST: &str = "fig3_hist.csv";
pub const FIG3_WORKPATHS: &str = "fig3_workpaths.csv";
pub const FIG4_CROOKS: &str = "fig4_crooks.csv";
pub const FIG5_INEQUALITY: &str = "fig5_inequality.csv";

/// Phase-space grid: q in [-4, 5], p in [-4, 4], spacing 0.05.
pub fn wigner_spec() -> GridSpec {
    GridSpec {
        q_min: -4.0,
        q_max: 5.0,
        nq: 181,
        p_min: -4.0,
        p_max: 4.0,
        np: 161,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WignerRow {
    pub state: &'static str,
    pub q: f64,
    pub p: f64,
    pub density: f64,
}

/// Thermal state at the origin and the displaced steady state.
pub fn fig1_wigner(params: &PhysicalParams) -> Result<Vec<WignerRow>> {
    let spec = wigner_spec();
    let mut rows = Vec::with_capacity(2 * spec.nq * spec.np);
    for (state, centre) in [("initial", 0.0), ("final", params.q_steady())] {
        let grid = model::wigner_grid(params, centre, &spec)?;
        for (i, &q) in grid.q.iter().enumerate() {
            for (j, &p) in grid.p.iter().enumerate() {
                rows.push(WignerRow {
                    state,
                    q,
                    p,
                    density: grid.at(i, j),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CycleRow {
    pub direction: Direction,
    pub t: f64,
    pub lambda: f64,
    /// Monte Carlo mean of the estimate.
    pub q_mean: f64,
    pub q_analytic: f64,
    pub power: f64,
    pub heat: f64,
    pub mean_n: f64,
}

/// Power and heat along both protocols, from the ensemble-mean estimate.
pub fn fig1_cycle(params: &PhysicalParams, ensemble: &WorkEnsemble) -> Result<Vec<CycleRow>> {
    let mut rows = Vec::new();
    for run in &ensemble.runs {
        let path = tracked_path(run.path.as_ref(), run.direction)?;
        for (i, &t) in path.t.iter().enumerate() {
            let q = path.x[i].mean();
            let flows = model::energy_flows(params, path.lambda[i], q);
            rows.push(CycleRow {
                direction: run.direction,
                t,
                lambda: path.lambda[i],
                q_mean: q,
                q_analytic: model::mean_q(params, &run.protocol, t)?,
                power: flows.power,
                heat: flows.heat,
                mean_n: flows.mean_n,
            });
        }
    }
    Ok(rows)
}

fn tracked_path(path: Option<&PathStats>, direction: Direction) -> Result<&PathStats> {
    path.ok_or_else(|| Error::MissingData(format!("{direction} ensemble has no tracked mean path")))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryFigRow {
    pub traj_id: u64,
    pub direction: Direction,
    pub t: f64,
    pub lambda: f64,
    pub x: f64,
    pub work: f64,
    /// Synthesized homodyne current at the same instant.
    pub current: f64,
}

pub fn fig2_trajectories(
    params: &PhysicalParams,
    master_seed: u64,
    record_dt: f64,
    trajectories: &[Trajectory],
) -> Vec<TrajectoryFigRow> {
    let mut rows = Vec::new();
    for traj in trajectories {
        let stream = NoiseStream::new(master_seed, traj.stream_id);
        let mut noise = stream.wiener(Channel::Homodyne, record_dt);
        let current = synthesize_homodyne_current(traj, params, record_dt, &mut noise);
        for ((s, &lambda), j) in traj.samples.iter().zip(&traj.lambda).zip(&current) {
            rows.push(TrajectoryFigRow {
                traj_id: traj.stream_id,
                direction: traj.direction,
                t: s.t,
                lambda,
                x: s.x,
                work: s.work,
                current: j.current,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HistRow {
    /// `forward` for P_F(W), `backward_negated` for P_B(-W).
    pub series: &'static str,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
    pub density: f64,
    /// Analytic Gaussian density at the bin centre.
    pub gaussian: f64,
}

pub fn fig3_hist(params: &PhysicalParams, analysis: &Analysis) -> Result<Vec<HistRow>> {
    let r = &analysis.report;
    let mean_b = model::mean_work(params, &r.protocol.reversed());
    let mut rows = Vec::new();
    for (series, h, mean, sign) in [
        ("forward", &analysis.histograms.forward, r.mean_work_analytic, 1.0),
        ("backward_negated", &analysis.histograms.backward_negated, mean_b, -1.0),
    ] {
        for i in 0..h.n_bins() {
            let gaussian = if mean > 0.0 && params.eta > 0.0 {
                model::work_pdf(params, mean, sign * h.center(i))?
            } else {
                f64::NAN
            };
            rows.push(HistRow {
                series,
                bin_lo: h.edges[i],
                bin_hi: h.edges[i + 1],
                count: h.counts[i],
                density: h.density[i],
                gaussian,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WorkPathRow {
    pub direction: Direction,
    pub t: f64,
    pub lambda: f64,
    #[serde(rename = "mean_W")]
    pub mean_w: f64,
    #[serde(rename = "sd_W")]
    pub sd_w: f64,
}

/// Ensemble mean and spread of the accumulated work along each protocol.
pub fn fig3_workpaths(ensemble: &WorkEnsemble) -> Result<Vec<WorkPathRow>> {
    let mut rows = Vec::new();
    for run in &ensemble.runs {
        let path = tracked_path(run.path.as_ref(), run.direction)?;
        for (i, &t) in path.t.iter().enumerate() {
            let w = &path.work[i];
            rows.push(WorkPathRow {
                direction: run.direction,
                t,
                lambda: path.lambda[i],
                mean_w: w.mean(),
                sd_w: w.variance().max(0.0).sqrt(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrooksFigRow {
    #[serde(rename = "W")]
    pub w: f64,
    pub log_ratio: f64,
    pub weight: f64,
    /// Fitted line.
    pub fit: f64,
    /// `beta_eff (W - delta_F)`.
    pub analytic: f64,
}

pub fn fig4_crooks(analysis: &Analysis) -> Vec<CrooksFigRow> {
    let r = &analysis.report;
    analysis
        .points
        .iter()
        .map(|p| CrooksFigRow {
            w: p.w,
            log_ratio: p.log_ratio,
            weight: p.weight,
            fit: analysis.fit.predict(p.w),
            analytic: analysis::entropy_production_sample(r.beta_eff_analytic, p.w, r.delta_f_analytic),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityRow {
    /// `grid` for closed-form points, `monte_carlo` for the simulated run.
    pub source: &'static str,
    pub nbar: f64,
    pub eta: f64,
    #[serde(rename = "mean_W")]
    pub mean_w: f64,
    pub beta_eff: f64,
    pub sigma_avg: f64,
    pub fisher: f64,
    pub info_product: f64,
    pub info_bound: f64,
    pub margin: f64,
}

pub const FIG5_NBAR: [f64; 4] = [0.0, 0.5, 1.0, 3.0];
pub const FIG5_ETA: [f64; 3] = [0.25, 0.5, 1.0];
pub const FIG5_POINTS: usize = 60;

/// Information inequality over log-spaced mean work in [0.5, 50] for several
/// bath occupations and efficiencies, plus the Monte Carlo point.
pub fn fig5_inequality(params: &PhysicalParams, analysis: Option<&Analysis>) -> Result<Vec<InequalityRow>> {
    let mut rows = Vec::new();
    for &nbar in &FIG5_NBAR {
        for &eta in &FIG5_ETA {
            let p = PhysicalParams { nbar, eta, ..*params };
            for k in 0..FIG5_POINTS {
                let mean_w = 0.5 * 100f64.powf(k as f64 / (FIG5_POINTS - 1) as f64);
                let pt = analysis::inequality_point(&p, mean_w)?;
                rows.push(InequalityRow {
                    source: "grid",
                    nbar,
                    eta,
                    mean_w,
                    beta_eff: pt.beta,
                    sigma_avg: pt.sigma_avg,
                    fisher: pt.fisher,
                    info_product: pt.info_product,
                    info_bound: pt.info_bound,
                    margin: pt.info_margin(),
                });
            }
        }
    }
    if let Some(a) = analysis {
        let r = &a.report;
        rows.push(InequalityRow {
            source: "monte_carlo",
            nbar: params.nbar,
            eta: params.eta,
            mean_w: r.mean_w_f,
            beta_eff: r.beta_eff_analytic,
            sigma_avg: r.sigma_avg_kl,
            fisher: r.fisher_info,
            info_product: r.fisher_info * r.sigma_avg_kl,
            info_bound: 0.5 * r.beta_eff_analytic.powi(2),
            margin: r.info_margin,
        });
    }
    Ok(rows)
}

/// Randomized parameter points for checking the analytic inequalities.
pub fn random_parameter_grid(seed: u64, n: usize) -> Vec<(PhysicalParams, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let params = PhysicalParams {
                hbar: 1.0,
                omega: rng.random_range(0.5..2.0),
                g: rng.random_range(0.0..3.0),
                gamma: rng.random_range(0.2..5.0),
                nbar: rng.random_range(0.0..5.0),
                eta: rng.random_range(0.1..=1.0),
            };
            let mean_w = 0.5 * 100f64.powf(rng.random_range(0.0..1.0));
            (params, mean_w)
        })
        .collect()
}

pub struct FigureInputs<'a> {
    pub params: &'a PhysicalParams,
    pub ensemble: &'a WorkEnsemble,
    pub analysis: &'a Analysis,
    pub trajectories: &'a [Trajectory],
    pub record_dt: f64,
}

/// Writes all seven figure files into `dir`.
pub fn write_all(dir: &Path, inputs: &FigureInputs) -> Result<()> {
    let params = inputs.params;
    write_csv(&dir.join(FIG1_WIGNER), fig1_wigner(params)?)?;
    write_csv(&dir.join(FIG1_CYCLE), fig1_cycle(params, inputs.ensemble)?)?;
    write_csv(
        &dir.join(FIG2_TRAJECTORIES),
        fig2_trajectories(params, inputs.ensemble.master_seed, inputs.record_dt, inputs.trajectories),
    )?;
    write_csv(&dir.join(FIG3_HIST), fig3_hist(params, inputs.analysis)?)?;
    write_csv(&dir.join(FIG3_WORKPATHS), fig3_workpaths(inputs.ensemble)?)?;
    write_csv(&dir.join(FIG4_CROOKS), fig4_crooks(inputs.analysis))?;
    write_csv(&dir.join(FIG5_INEQUALITY), fig5_inequality(params, Some(inputs.analysis))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_peaks_at_origin_and_steady_state() {
        let rows = fig1_wigner(&PhysicalParams::default()).unwrap();
        for (state, q_peak) in [("initial", 0.0), ("final", 1.0)] {
            let best = rows
                .iter()
                .filter(|r| r.state == state)
                .max_by(|a, b| a.density.total_cmp(&b.density))
                .unwrap();
            assert!((best.q - q_peak).abs() < 1e-12, "{state}: {}", best.q);
            assert!(best.p.abs() < 1e-12);
        }
    }

    #[test]
    fn inequality_grid_holds() {
        let rows = fig5_inequality(&PhysicalParams::default(), None).unwrap();
        assert_eq!(rows.len(), FIG5_NBAR.len() * FIG5_ETA.len() * FIG5_POINTS);
        assert!(rows.iter().all(|r| r.margin >= 0.0));
        assert!((rows[0].mean_w - 0.5).abs() < 1e-12);
        assert!((rows[FIG5_POINTS - 1].mean_w - 50.0).abs() < 1e-9);
    }

    #[test]
    fn random_grid_is_seeded() {
        let a = random_parameter_grid(7, 100);
        assert_eq!(a, random_parameter_grid(7, 100));
        assert_ne!(a, random_parameter_grid(8, 100));
        assert!(a.iter().all(|(p, w)| p.validate().is_ok() && *w >= 0.5 && *w <= 50.0));
    }
}
