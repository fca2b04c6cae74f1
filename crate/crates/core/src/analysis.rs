//! Crooks-ratio regression, entropy production, the thermodynamic
//! uncertainty relation and Fisher-information bounds.
//!
//! Convention: backward work samples are negated once, here, and rebinned
//! onto the forward histogram's edges. The fitted line is then
//! `ln ρ_F(W)/ρ_B(−W) = β̂ (W − ΔF̂)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ensemble::{
    build_histogram, rebin, summarize, Binning, DirectionSummary, Histogram, WorkEnsemble,
};
use crate::error::{Error, Result};
use crate::model::{self, Direction, PhysicalParams, RampProtocol};

/// Minimum count, in both histograms, for a bin to enter the log-ratio.
pub const MIN_BIN_COUNT: u64 = 10;
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrooksPoint {
    #[serde(rename = "W")]
    pub w: f64,
    pub log_ratio: f64,
    /// Inverse variance of the log ratio, `1/(1/c_F + 1/c_B)`.
    pub weight: f64,
}

/// Forward histogram and negated backward samples on the same edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CrooksHistograms {
    pub forward: Histogram,
    pub backward_negated: Histogram,
}

pub fn crooks_histograms(forward: &[f64], backward: &[f64], binning: &Binning) -> Result<CrooksHistograms> {
    let forward_hist = build_histogram(forward, binning)?;
    let negated: Vec<f64> = backward.iter().map(|w| -w).collect();
    let backward_negated = rebin(&negated, &forward_hist)?;
    Ok(CrooksHistograms {
        forward: forward_hist,
        backward_negated,
    })
}

/// Log density ratio at the centres of bins holding at least `min_count`
/// samples in both histograms.
pub fn crooks_log_ratio(hist_f: &Histogram, hist_b: &Histogram, min_count: u64) -> Result<Vec<CrooksPoint>> {
    if !hist_f.same_edges(hist_b) {
        return Err(Error::BinningMismatch);
    }
    let points: Vec<CrooksPoint> = (0..hist_f.n_bins())
        .filter(|&i| hist_f.counts[i] >= min_count && hist_b.counts[i] >= min_count)
        .map(|i| {
            let (cf, cb) = (hist_f.counts[i] as f64, hist_b.counts[i] as f64);
            CrooksPoint {
                w: hist_f.center(i),
                log_ratio: (hist_f.density[i] / hist_b.density[i]).ln(),
                weight: 1.0 / (1.0 / cf + 1.0 / cb),
            }
        })
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientOverlap {
            qualifying: points.len(),
            required: MIN_FIT_POINTS,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrooksFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub cov_slope_intercept: f64,
    #[serde(rename = "delta_F_hat")]
    pub delta_f_hat: f64,
    #[serde(rename = "delta_F_hat_stderr")]
    pub delta_f_hat_stderr: f64,
    pub r_squared: f64,
    pub n_bins_used: usize,
    /// Slope was zero or negative; `delta_f_hat` is then not meaningful.
    pub degenerate: bool,
}

impl CrooksFit {
    pub fn predict(&self, w: f64) -> f64 {
        self.intercept + self.slope * w
    }
}

/// Weighted least-squares line through the log-ratio points. Standard
/// errors treat the weights as known inverse variances.
pub fn fit_crooks(points: &[CrooksPoint]) -> Result<CrooksFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientOverlap {
            qualifying: points.len(),
            required: MIN_FIT_POINTS,
        });
    }
    if points.iter().any(|p| !(p.weight.is_finite() && p.weight > 0.0)) {
        return Err(Error::domain("fit weights must be finite and > 0"));
    }
    let sw: f64 = points.iter().map(|p| p.weight).sum();
    let xbar = points.iter().map(|p| p.weight * p.w).sum::<f64>() / sw;
    let ybar = points.iter().map(|p| p.weight * p.log_ratio).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in points {
        let (dx, dy) = (p.w - xbar, p.log_ratio - ybar);
        sxx += p.weight * dx * dx;
        sxy += p.weight * dx * dy;
        syy += p.weight * dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::domain("log-ratio points share a single abscissa"));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let var_slope = 1.0 / sxx;
    let var_intercept = 1.0 / sw + xbar * xbar / sxx;
    let cov = -xbar / sxx;
    let rss: f64 = points
        .iter()
        .map(|p| p.weight * (p.log_ratio - intercept - slope * p.w).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };

    let degenerate = !(slope > 0.0);
    if degenerate {
        log::warn!("Crooks fit degenerate: slope = {slope}, intercept = {intercept}");
    }
    let delta_f_hat = -intercept / slope;
    let delta_f_hat_stderr = (var_intercept / slope.powi(2) + intercept.powi(2) * var_slope / slope.powi(4)
        - 2.0 * intercept * cov / slope.powi(3))
    .max(0.0)
    .sqrt();
    Ok(CrooksFit {
        slope,
        intercept,
        slope_stderr: var_slope.sqrt(),
        intercept_stderr: var_intercept.sqrt(),
        cov_slope_intercept: cov,
        delta_f_hat,
        delta_f_hat_stderr,
        r_squared,
        n_bins_used: points.len(),
        degenerate,
    })
}

/// Entropy produced by one realization, `β (w − ΔF)`.
pub fn entropy_production_sample(beta: f64, w: f64, delta_f: f64) -> f64 {
    beta * (w - delta_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramKl {
    /// Plug-in relative entropy over bins populated in both histograms,
    /// each renormalised on that overlap.
    pub kl: f64,
    /// Forward probability mass inside the overlap.
    pub coverage: f64,
    pub bins: usize,
}

/// Relative entropy of the forward histogram to the negated-backward one.
pub fn histogram_kl(hist_f: &Histogram, hist_b: &Histogram) -> Result<HistogramKl> {
    if !hist_f.same_edges(hist_b) {
        return Err(Error::BinningMismatch);
    }
    let overlap: Vec<usize> = (0..hist_f.n_bins())
        .filter(|&i| hist_f.counts[i] > 0 && hist_b.counts[i] > 0)
        .collect();
    if overlap.is_empty() {
        return Err(Error::InsufficientOverlap {
            qualifying: 0,
            required: 1,
        });
    }
    let nf: u64 = overlap.iter().map(|&i| hist_f.counts[i]).sum();
    let nb: u64 = overlap.iter().map(|&i| hist_b.counts[i]).sum();
    let kl = overlap
        .iter()
        .map(|&i| {
            let p = hist_f.counts[i] as f64 / nf as f64;
            let q = hist_b.counts[i] as f64 / nb as f64;
            p * (p / q).ln()
        })
        .sum::<f64>()
        .max(0.0);
    Ok(HistogramKl {
        kl,
        coverage: nf as f64 / hist_f.total as f64,
        bins: overlap.len(),
    })
}

/// Forward-weighted mean of the log ratio: the empirical ratio where a bin
/// qualifies for the fit, the fitted line elsewhere. Returns the estimate and
/// the forward mass it covers (out-of-range samples are not covered).
pub fn hybrid_kl(hist_f: &Histogram, hist_b: &Histogram, fit: &CrooksFit, min_count: u64) -> Result<(f64, f64)> {
    if !hist_f.same_edges(hist_b) {
        return Err(Error::BinningMismatch);
    }
    let n = hist_f.total as f64;
    let mut kl = 0.0;
    let mut mass = 0.0;
    for i in 0..hist_f.n_bins() {
        let cf = hist_f.counts[i];
        if cf == 0 {
            continue;
        }
        let p = cf as f64 / n;
        let r = if cf >= min_count && hist_b.counts[i] >= min_count {
            (hist_f.density[i] / hist_b.density[i]).ln()
        } else {
            fit.predict(hist_f.center(i))
        };
        kl += p * r;
        mass += p;
    }
    Ok((kl, mass))
}

/// Relative entropy between Gaussian fits N(μ_F, s_F²) and the negated
/// backward N(−μ_B, s_B²).
pub fn gaussian_kl(mean_f: f64, var_f: f64, mean_b: f64, var_b: f64) -> f64 {
    let shift = mean_f + mean_b;
    0.5 * (var_b / var_f).ln() + (var_f + shift * shift) / (2.0 * var_b) - 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProduction {
    /// `β_eff (W̄_F − ΔF)`.
    pub analytic: f64,
    pub kl: f64,
    pub kl_coverage: f64,
    pub kl_hybrid: Option<f64>,
    pub kl_gaussian: f64,
}

pub fn average_entropy_production(
    beta: f64,
    delta_f: f64,
    forward: &DirectionSummary,
    backward: &DirectionSummary,
    hists: &CrooksHistograms,
    fit: Option<&CrooksFit>,
) -> Result<EntropyProduction> {
    let plug_in = histogram_kl(&hists.forward, &hists.backward_negated)?;
    let kl_hybrid = match fit {
        Some(fit) if !fit.degenerate => {
            Some(hybrid_kl(&hists.forward, &hists.backward_negated, fit, MIN_BIN_COUNT)?.0)
        }
        _ => None,
    };
    Ok(EntropyProduction {
        analytic: entropy_production_sample(beta, forward.mean, delta_f),
        kl: plug_in.kl,
        kl_coverage: plug_in.coverage,
        kl_hybrid,
        kl_gaussian: gaussian_kl(forward.mean, forward.variance, backward.mean, backward.variance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurCheck {
    /// `Σ̄ − β W̄`.
    pub margin: f64,
    /// `Σ̄ − 2 W̄² / ΔW²`.
    pub variance_form_margin: f64,
}

pub fn tur_check(beta: f64, mean_w: f64, var_w: f64, sigma_avg: f64) -> TurCheck {
    TurCheck {
        margin: sigma_avg - beta * mean_w,
        variance_form_margin: sigma_avg - 2.0 * mean_w * mean_w / var_w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInformation {
    /// `β/(2W̄) + 1/W̄²`.
    pub value: f64,
    /// Cramér–Rao comparison value `1/ΔW²`.
    pub bound: f64,
}

impl FisherInformation {
    pub fn margin(&self) -> f64 {
        self.value - self.bound
    }
}

pub fn fisher_information(beta: f64, mean_w: f64, var_w: f64) -> Result<FisherInformation> {
    if !(mean_w > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean_w",
            value: mean_w,
            reason: "Fisher information needs a positive mean work",
        });
    }
    Ok(FisherInformation {
        value: beta / (2.0 * mean_w) + 1.0 / (mean_w * mean_w),
        bound: 1.0 / var_w,
    })
}

/// Fisher information of a Gaussian whose variance is `(2/β) W̄`, keeping the
/// mean dependence of the normaliser: `β/(2W̄) + 1/(2W̄²)`.
pub fn exact_gaussian_fisher_information(beta: f64, mean_w: f64) -> Result<f64> {
    if !(mean_w > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean_w",
            value: mean_w,
            reason: "Fisher information needs a positive mean work",
        });
    }
    Ok(beta / (2.0 * mean_w) + 0.5 / (mean_w * mean_w))
}

/// `I Σ̄ − β²/2`.
pub fn information_inequality(fisher: f64, sigma_avg: f64, beta: f64) -> f64 {
    fisher * sigma_avg - 0.5 * beta * beta
}

/// Kolmogorov–Smirnov distance of forward work samples to the analytic
/// Gaussian work distribution with the given mean.
pub fn work_ks_distance(params: &PhysicalParams, mean_work: f64, samples: &[f64]) -> Result<f64> {
    let sd = (params.work_variance_factor() * mean_work).sqrt();
    let normal = Normal::new(mean_work, sd)
        .map_err(|e| Error::domain(format!("invalid work distribution: {e}")))?;
    Ok(crate::ensemble::ks_distance(samples, |w| normal.cdf(w)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub params: PhysicalParams,
    pub protocol: RampProtocol,
    pub n_traj: u64,
    pub seed: u64,

    pub beta_eff_analytic: f64,
    pub beta_hat: f64,
    pub beta_hat_stderr: f64,
    #[serde(rename = "delta_F_analytic")]
    pub delta_f_analytic: f64,
    #[serde(rename = "delta_F_hat")]
    pub delta_f_hat: f64,
    #[serde(rename = "delta_F_hat_stderr")]
    pub delta_f_hat_stderr: f64,
    pub crooks_intercept: f64,
    pub crooks_r_squared: f64,
    pub crooks_bins_used: usize,
    pub crooks_degenerate: bool,

    pub mean_work_analytic: f64,
    #[serde(rename = "mean_W_F")]
    pub mean_w_f: f64,
    #[serde(rename = "var_W_F")]
    pub var_w_f: f64,
    #[serde(rename = "se_W_F")]
    pub se_w_f: f64,
    #[serde(rename = "mean_W_B")]
    pub mean_w_b: f64,
    #[serde(rename = "var_W_B")]
    pub var_w_b: f64,

    pub sigma_avg_analytic: f64,
    pub sigma_avg_kl: f64,
    pub sigma_kl_coverage: f64,
    pub sigma_avg_kl_hybrid: Option<f64>,
    pub sigma_avg_kl_gaussian: f64,

    pub fisher_info: f64,
    pub fisher_info_exact_gaussian: f64,
    pub cramer_rao_bound: f64,
    pub tur_margin: f64,
    pub tur_variance_form_margin: f64,
    pub info_margin: f64,
    /// Forward average of `exp(−β_eff (W − ΔF))`; not exactly 1 for these
    /// work distributions.
    pub jarzynski_diagnostic: f64,
}

impl ThermoReport {
    /// Every scalar in the report, by its JSON name.
    pub fn numeric_fields(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("beta_eff_analytic", self.beta_eff_analytic),
            ("beta_hat", self.beta_hat),
            ("beta_hat_stderr", self.beta_hat_stderr),
            ("delta_F_analytic", self.delta_f_analytic),
            ("delta_F_hat", self.delta_f_hat),
            ("delta_F_hat_stderr", self.delta_f_hat_stderr),
            ("crooks_intercept", self.crooks_intercept),
            ("crooks_r_squared", self.crooks_r_squared),
            ("mean_work_analytic", self.mean_work_analytic),
            ("mean_W_F", self.mean_w_f),
            ("var_W_F", self.var_w_f),
            ("se_W_F", self.se_w_f),
            ("mean_W_B", self.mean_w_b),
            ("var_W_B", self.var_w_b),
            ("sigma_avg_analytic", self.sigma_avg_analytic),
            ("sigma_avg_kl", self.sigma_avg_kl),
            ("sigma_kl_coverage", self.sigma_kl_coverage),
            ("sigma_avg_kl_gaussian", self.sigma_avg_kl_gaussian),
            ("fisher_info", self.fisher_info),
            ("fisher_info_exact_gaussian", self.fisher_info_exact_gaussian),
            ("cramer_rao_bound", self.cramer_rao_bound),
            ("tur_margin", self.tur_margin),
            ("tur_variance_form_margin", self.tur_variance_form_margin),
            ("info_margin", self.info_margin),
            ("jarzynski_diagnostic", self.jarzynski_diagnostic),
        ];
        if let Some(h) = self.sigma_avg_kl_hybrid {
            out.push(("sigma_avg_kl_hybrid", h));
        }
        out
    }

    /// Names of fields holding NaN or infinity.
    pub fn non_finite_fields(&self) -> Vec<&'static str> {
        self.numeric_fields()
            .into_iter()
            .filter(|(_, v)| !v.is_finite())
            .map(|(k, _)| k)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: ThermoReport,
    pub histograms: CrooksHistograms,
    pub points: Vec<CrooksPoint>,
    pub fit: CrooksFit,
}

/// Full analysis of a forward/backward ensemble with retained samples.
pub fn analyze(params: &PhysicalParams, protocol: &RampProtocol, ensemble: &WorkEnsemble) -> Result<Analysis> {
    params.validate()?;
    let forward = ensemble.work_samples(Direction::Forward)?;
    let backward = ensemble.work_samples(Direction::Backward)?;
    let summary = summarize(ensemble)?;
    let (f, b) = (summary.forward, summary.backward);

    let beta = model::beta_eff(params);
    let delta_f = model::delta_f(params);
    let histograms = crooks_histograms(forward, backward, &Binning::Auto)?;
    let points = crooks_log_ratio(&histograms.forward, &histograms.backward_negated, MIN_BIN_COUNT)?;
    let fit = fit_crooks(&points)?;
    let sigma = average_entropy_production(beta, delta_f, &f, &b, &histograms, Some(&fit))?;
    let tur = tur_check(beta, f.mean, f.variance, sigma.kl);
    let fisher = fisher_information(beta, f.mean, f.variance)?;
    let jarzynski = forward
        .iter()
        .map(|&w| (-entropy_production_sample(beta, w, delta_f)).exp())
        .sum::<f64>()
        / forward.len() as f64;

    let report = ThermoReport {
        params: *params,
        protocol: protocol.with_direction(Direction::Forward),
        n_traj: f.n,
        seed: ensemble.master_seed,
        beta_eff_analytic: beta,
        beta_hat: fit.slope,
        beta_hat_stderr: fit.slope_stderr,
        delta_f_analytic: delta_f,
        delta_f_hat: fit.delta_f_hat,
        delta_f_hat_stderr: fit.delta_f_hat_stderr,
        crooks_intercept: fit.intercept,
        crooks_r_squared: fit.r_squared,
        crooks_bins_used: fit.n_bins_used,
        crooks_degenerate: fit.degenerate,
        mean_work_analytic: model::mean_work(params, &protocol.with_direction(Direction::Forward)),
        mean_w_f: f.mean,
        var_w_f: f.variance,
        se_w_f: f.std_error,
        mean_w_b: b.mean,
        var_w_b: b.variance,
        sigma_avg_analytic: sigma.analytic,
        sigma_avg_kl: sigma.kl,
        sigma_kl_coverage: sigma.kl_coverage,
        sigma_avg_kl_hybrid: sigma.kl_hybrid,
        sigma_avg_kl_gaussian: sigma.kl_gaussian,
        fisher_info: fisher.value,
        fisher_info_exact_gaussian: exact_gaussian_fisher_information(beta, f.mean)?,
        cramer_rao_bound: fisher.bound,
        tur_margin: tur.margin,
        tur_variance_form_margin: tur.variance_form_margin,
        info_margin: information_inequality(fisher.value, sigma.kl, beta),
        jarzynski_diagnostic: jarzynski,
    };
    Ok(Analysis {
        report,
        histograms,
        points,
        fit,
    })
}

/// Analytic inequality margins at one parameter point, with `Σ̄` from its
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityPoint {
    pub beta: f64,
    pub mean_w: f64,
    pub var_w: f64,
    pub sigma_avg: f64,
    pub fisher: f64,
    pub tur_margin: f64,
    pub cramer_rao_margin: f64,
    pub info_product: f64,
    pub info_bound: f64,
}

impl InequalityPoint {
    pub fn info_margin(&self) -> f64 {
        self.info_product - self.info_bound
    }

    pub fn all_hold(&self) -> bool {
        self.tur_margin >= 0.0 && self.cramer_rao_margin >= 0.0 && self.info_margin() >= 0.0
    }
}

pub fn inequality_point(params: &PhysicalParams, mean_w: f64) -> Result<InequalityPoint> {
    params.validate()?;
    let beta = model::beta_eff(params);
    let var_w = params.work_variance_factor() * mean_w;
    let sigma_avg = entropy_production_sample(beta, mean_w, model::delta_f(params));
    let fisher = fisher_information(beta, mean_w, var_w)?;
    Ok(InequalityPoint {
        beta,
        mean_w,
        var_w,
        sigma_avg,
        fisher: fisher.value,
        tur_margin: tur_check(beta, mean_w, var_w, sigma_avg).margin,
        cramer_rao_margin: fisher.margin(),
        info_product: fisher.value * sigma_avg,
        info_bound: 0.5 * beta * beta,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn line(slope: f64, intercept: f64, xs: &[f64]) -> Vec<CrooksPoint> {
        xs.iter()
            .map(|&w| CrooksPoint {
                w,
                log_ratio: intercept + slope * w,
                weight: 1.0 + w.abs(),
            })
            .collect()
    }

    #[test]
    fn identical_histograms_give_zero_ratio() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = build_histogram(&samples, &Binning::Width(0.1)).unwrap();
        let pts = crooks_log_ratio(&h, &h, MIN_BIN_COUNT).unwrap();
        assert!(pts.iter().all(|p| p.log_ratio == 0.0));
        let kl = histogram_kl(&h, &h).unwrap();
        assert_eq!(kl.kl, 0.0);
        assert_eq!(kl.coverage, 1.0);
    }

    #[test]
    fn mismatched_edges_are_rejected() {
        let a = build_histogram(&[0.0, 1.0, 2.0], &Binning::Edges(vec![0.0, 1.0, 2.0])).unwrap();
        let b = build_histogram(&[0.0, 1.0, 2.0], &Binning::Edges(vec![0.0, 1.5, 2.0])).unwrap();
        assert!(matches!(crooks_log_ratio(&a, &b, 1), Err(Error::BinningMismatch)));
        assert!(matches!(histogram_kl(&a, &b), Err(Error::BinningMismatch)));
    }

    #[test]
    fn too_few_qualifying_bins() {
        let a = build_histogram(&[0.5; 30], &Binning::Edges(vec![0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!(matches!(
            crooks_log_ratio(&a, &a, MIN_BIN_COUNT),
            Err(Error::InsufficientOverlap { qualifying: 1, required: 3 })
        ));
    }

    #[test]
    fn exact_gaussian_line_is_recovered() {
        // mu_F = 4, mu_B = 3, s^2 = 7: slope (4+3)/7 = 1, crossing at (4-3)/2
        let (mf, mb, s2) = (4.0, 3.0, 7.0);
        let xs: Vec<f64> = (0..20).map(|i| -2.0 + 0.5 * i as f64).collect();
        let pts: Vec<CrooksPoint> = xs
            .iter()
            .map(|&w| {
                let lf = -(w - mf).powi(2) / (2.0 * s2);
                let lb = -(w + mb).powi(2) / (2.0 * s2);
                CrooksPoint { w, log_ratio: lf - lb, weight: 1.0 }
            })
            .collect();
        for p in &pts {
            assert_relative_eq!(p.log_ratio, ((mf + mb) / s2) * (p.w - (mf - mb) / 2.0), epsilon = 1e-12);
        }
        let fit = fit_crooks(&pts).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.delta_f_hat, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(!fit.degenerate);
    }

    #[test]
    fn negative_slope_is_flagged_not_dropped() {
        let fit = fit_crooks(&line(-0.5, 1.0, &[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!(fit.degenerate);
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_crooks(&line(1.0, 0.0, &[0.0, 1.0])).is_err());
        assert!(fit_crooks(&line(1.0, 0.0, &[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn entropy_production_examples() {
        assert_eq!(entropy_production_sample(0.7, -0.5, -0.5), 0.0);
        assert_relative_eq!(entropy_production_sample(2.0 / 3.0, 1.0, -0.5), 1.0, epsilon = 1e-15);
        assert_eq!(entropy_production_sample(2.0, 1.0, 0.0), 2.0);
    }

    #[test]
    fn equal_variance_gaussian_kl_identity() {
        let (mf, mb, s2) = (4.0, 3.0, 7.0);
        let kl = gaussian_kl(mf, s2, mb, s2);
        assert_relative_eq!(kl, (mf + mb).powi(2) / (2.0 * s2), epsilon = 1e-12);
        let slope = (mf + mb) / s2;
        assert_relative_eq!(kl, slope * (mf - (mf - mb) / 2.0), epsilon = 1e-12);
        assert_eq!(gaussian_kl(-2.0, 3.0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn tur_examples() {
        let t = tur_check(0.8, 3.0, 2.0 * 3.0 / 0.8, 0.8 * 3.0);
        assert_relative_eq!(t.margin, 0.0, epsilon = 1e-15);
        assert_relative_eq!(t.variance_form_margin, 0.0, epsilon = 1e-14);

        let beta = 2.0 / 3.0;
        let w = 4.0067;
        let sigma = entropy_production_sample(beta, w, -0.5);
        assert_relative_eq!(sigma, 3.0045, epsilon = 1e-4);
        assert_relative_eq!(tur_check(beta, w, 3.0 * w, sigma).margin, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fisher_examples() {
        let fi = fisher_information(2.0, 1.0, 1.0).unwrap();
        assert_eq!(fi.value, 2.0);
        assert_eq!(fi.bound, 1.0);
        assert!(fi.margin() >= 0.0);
        let big = 1e8;
        assert_relative_eq!(fisher_information(0.5, big, 1.0).unwrap().value * big, 0.25, epsilon = 1e-7);
        assert!(fisher_information(1.0, 0.0, 1.0).is_err());
        assert!(exact_gaussian_fisher_information(1.0, -1.0).is_err());
        assert_eq!(exact_gaussian_fisher_information(2.0, 1.0).unwrap(), 1.5);
    }

    #[test]
    fn information_inequality_examples() {
        let beta = 2.0 / 3.0;
        let w = 4.0067;
        let fi = fisher_information(beta, w, 3.0 * w).unwrap().value;
        assert_relative_eq!(fi, 0.1455, epsilon = 1e-4);
        let sigma = entropy_production_sample(beta, w, -0.5);
        let product = fi * sigma;
        assert_relative_eq!(product, 0.437, epsilon = 1e-3);
        assert_relative_eq!(information_inequality(fi, sigma, beta), product - 2.0 / 9.0, epsilon = 1e-15);

        // Delta F = 0: margin reduces to beta / W
        for &w in &[0.5, 2.0, 40.0] {
            let fi = fisher_information(beta, w, 3.0 * w).unwrap().value;
            let margin = information_inequality(fi, beta * w, beta);
            assert_relative_eq!(margin, beta / w, epsilon = 1e-12);
        }
    }

    #[test]
    fn inequality_point_at_defaults() {
        let p = inequality_point(&PhysicalParams::default(), 4.0067).unwrap();
        assert!(p.all_hold());
        assert_relative_eq!(p.tur_margin, 1.0 / 3.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn analytic_inequalities_hold(
            eta in 0.05f64..=1.0,
            nbar in 0.0f64..10.0,
            g in 0.0f64..3.0,
            gamma in 0.1f64..10.0,
            mean_w in 0.05f64..100.0,
        ) {
            let params = PhysicalParams { eta, nbar, g, gamma, ..Default::default() };
            let p = inequality_point(&params, mean_w).unwrap();
            prop_assert!(p.tur_margin >= 0.0);
            prop_assert!(p.cramer_rao_margin >= 0.0);
            prop_assert!(p.info_margin() >= -1e-12);
        }

        #[test]
        fn plug_in_kl_is_non_negative(
            a in prop::collection::vec(-3.0f64..3.0, 20..200),
            b in prop::collection::vec(-3.0f64..3.0, 20..200),
        ) {
            let edges: Vec<f64> = (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect();
            let ha = build_histogram(&a, &Binning::Edges(edges.clone())).unwrap();
            let hb = build_histogram(&b, &Binning::Edges(edges)).unwrap();
            if let Ok(kl) = histogram_kl(&ha, &hb) {
                prop_assert!(kl.kl >= 0.0);
                prop_assert!(kl.coverage > 0.0 && kl.coverage <= 1.0);
            }
        }
    }
}
