//! Fixed-edge histograms with probability-density normalisation.

use serde::{Deserialize, Serialize};

use super::stats::quantile_sorted;
use crate::error::{Error, Result};

/// Minimum bin count for automatic binning.
pub const MIN_AUTO_BINS: usize = 40;
const MAX_AUTO_BINS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Freedman-Diaconis width, at least [`MIN_AUTO_BINS`] bins over the sample range.
    Auto,
    /// Uniform bins of the given width starting at the sample minimum.
    Width(f64),
    /// Explicit, strictly increasing edges.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / (total * width)`; sums to the in-range fraction.
    pub density: Vec<f64>,
    /// Samples offered, including those outside the edges.
    pub total: u64,
    /// Set when auto-binning fell back to a single bin for identical samples.
    pub degenerate: bool,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// `sum density * width`.
    pub fn mass(&self) -> f64 {
        (0..self.n_bins()).map(|i| self.density[i] * self.width(i)).sum()
    }

    pub fn same_edges(&self, other: &Histogram) -> bool {
        self.edges == other.edges
    }
}

/// Streaming counter over fixed edges.
#[derive(Debug, Clone)]
pub struct HistogramAccumulator {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    degenerate: bool,
}

impl HistogramAccumulator {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        validate_edges(&edges)?;
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            counts: vec![0; bins],
            total: 0,
            degenerate: false,
        })
    }

    /// Bin holding `x`; bins are half-open except the last, which is closed.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let last = *self.edges.last().unwrap();
        if !(x >= self.edges[0] && x <= last) {
            return None;
        }
        let idx = self.edges.partition_point(|&e| e <= x);
        Some(idx.saturating_sub(1).min(self.counts.len() - 1))
    }

    pub fn add(&mut self, x: f64) {
        self.total += 1;
        if let Some(i) = self.bin_of(x) {
            self.counts[i] += 1;
        }
    }

    pub fn finish(self) -> Histogram {
        let total = self.total.max(1) as f64;
        let density = self
            .counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect();
        Histogram {
            edges: self.edges,
            counts: self.counts,
            density,
            total: self.total,
            degenerate: self.degenerate,
        }
    }
}

fn validate_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::domain("histogram needs at least two edges"));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("histogram edges must be finite and strictly increasing"));
    }
    Ok(())
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    edges
}

pub fn build_histogram(samples: &[f64], binning: &Binning) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples {
            required: 1,
            got: 0,
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("histogram samples must be finite"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));

    let mut degenerate = false;
    let edges = match binning {
        Binning::Edges(edges) => edges.clone(),
        Binning::Width(width) => {
            if !(width.is_finite() && *width > 0.0) {
                return Err(Error::domain(format!("bin width must be > 0, got {width}")));
            }
            let bins = (((hi - lo) / width).floor() as usize + 1).min(MAX_AUTO_BINS);
            (0..=bins).map(|i| lo + width * i as f64).collect()
        }
        Binning::Auto if hi == lo => {
            degenerate = true;
            vec![lo - 0.5, lo + 0.5]
        }
        Binning::Auto => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            let fd_width = 2.0 * iqr / (samples.len() as f64).cbrt();
            let bins = if fd_width > 0.0 {
                ((hi - lo) / fd_width).ceil() as usize
            } else {
                0
            };
            uniform_edges(lo, hi, bins.clamp(MIN_AUTO_BINS, MAX_AUTO_BINS))
        }
    };
    let mut acc = HistogramAccumulator::new(edges)?;
    acc.degenerate = degenerate;
    for &x in samples {
        acc.add(x);
    }
    Ok(acc.finish())
}

/// Counts `samples` on the bins of `template`, normalising by all samples offered.
pub fn rebin(samples: &[f64], template: &Histogram) -> Result<Histogram> {
    build_histogram_on(samples, template.edges.clone())
}

fn build_histogram_on(samples: &[f64], edges: Vec<f64>) -> Result<Histogram> {
    let mut acc = HistogramAccumulator::new(edges)?;
    for &x in samples {
        acc.add(x);
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn explicit_edges() {
        let h = build_histogram(
            &[0.0, 1.0, 1.0, 2.0],
            &Binning::Edges(vec![-0.5, 0.5, 1.5, 2.5]),
        )
        .unwrap();
        assert_eq!(h.counts, vec![1, 2, 1]);
        assert_relative_eq!(h.mass(), 1.0, epsilon = 1e-15);
        assert_eq!(h.density, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn closed_last_bin_and_outside_samples() {
        let h = build_histogram(&[0.0, 1.0, 2.0, 5.0], &Binning::Edges(vec![0.0, 1.0, 2.0])).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.total, 4);
        assert_relative_eq!(h.mass(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn identical_samples_fall_back_to_single_bin() {
        let h = build_histogram(&[3.0; 5], &Binning::Auto).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.edges, vec![2.5, 3.5]);
        assert_eq!(h.counts, vec![5]);
    }

    #[test]
    fn auto_binning_has_floor() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let h = build_histogram(&xs, &Binning::Auto).unwrap();
        assert_eq!(h.n_bins(), MIN_AUTO_BINS);
        assert_eq!(h.lo(), 0.0);
        assert_eq!(h.hi(), 49.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_histogram(&[], &Binning::Auto).is_err());
        assert!(build_histogram(&[1.0], &Binning::Width(0.0)).is_err());
        assert!(build_histogram(&[1.0], &Binning::Edges(vec![1.0, 1.0])).is_err());
        assert!(build_histogram(&[f64::NAN], &Binning::Auto).is_err());
    }

    #[test]
    fn rebin_normalises_by_all_samples() {
        let base = build_histogram(&[0.0, 1.0], &Binning::Edges(vec![0.0, 0.5, 1.0])).unwrap();
        let h = rebin(&[0.2, 0.7, 9.0, -3.0], &base).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.total, 4);
        assert!(h.same_edges(&base));
    }

    proptest! {
        #[test]
        fn auto_density_integrates_to_one(xs in prop::collection::vec(-1e3f64..1e3, 1..400)) {
            let h = build_histogram(&xs, &Binning::Auto).unwrap();
            prop_assert!(h.edges.windows(2).all(|w| w[1] > w[0]));
            prop_assert_eq!(h.counts.iter().sum::<u64>(), xs.len() as u64);
            prop_assert!((h.mass() - 1.0).abs() < 1e-9);
        }
    }
}
