//! Departure of a dissimilarity curve from linear growth, plus the
//! statistics used to compare stimulus sets.
//!
//! A line is fitted by least squares (with intercept) to the samples up to
//! the first maximum of R. Past that point `d = R_linear - R_observed`, and
//! the deviation area `D` is the trapezoid-rule integral of `max(d, 0)` over
//! the sampled levels from the maximum to the end of the sweep.

mod pca;
mod stats;

use serde::Serialize;
use thiserror::Error;

use crate::imaging::Image;
use crate::netcore::Model;
use crate::rsa::{self, DissimilarityCurve, RsaError};
use crate::stimuli::Sweep;

pub use pca::{pc1_crowding, pca_layer_curves, pca_matrix, Crowding, Pca, HUMAN_CROWDING_GAMMA};
pub use stats::{
    ln_gamma, mean_sem, regularized_incomplete_beta, set_statistics, ttest_ind, ttest_ind_with, MeanSem, SetComparison,
    SetStatistics, SetSummary, TTest, TTestKind,
};

/// Normalized deviation area above which a neuron counts as significant.
pub const DEFAULT_NEURON_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error)]
pub enum DeviationError {
    #[error("curve has no samples")]
    EmptyCurve,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("no input values")]
    EmptyInput,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error(transparent)]
    Rsa(#[from] RsaError),
}

pub type Result<T> = std::result::Result<T, DeviationError>;

/// Index and γ of the first sample attaining the maximum R.
pub fn argmax(curve: &DissimilarityCurve) -> Result<(usize, f64)> {
    let mut best: Option<usize> = None;
    for (i, &v) in curve.values().iter().enumerate() {
        if best.map_or(true, |b| v > curve.values()[b]) {
            best = Some(i);
        }
    }
    let i = best.ok_or(DeviationError::EmptyCurve)?;
    Ok((i, curve.gammas()[i]))
}

pub fn gamma_max(curve: &DissimilarityCurve) -> Result<f64> {
    Ok(argmax(curve)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares with intercept.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(DeviationError::InsufficientData { needed: 2, got: n });
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(DeviationError::DegenerateData("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Least-squares line through every sample with γ ≤ `up_to`.
pub fn fit_linear(curve: &DissimilarityCurve, up_to: f64) -> Result<LinearFit> {
    let n = curve.gammas().iter().take_while(|&&g| g <= up_to).count();
    ols(&curve.gammas()[..n], &curve.values()[..n])
}

/// `(γ, d)` at every sample from γ_maxR to the end of the curve.
pub fn deviation_magnitude(curve: &DissimilarityCurve) -> Result<Vec<(f64, f64)>> {
    let (imax, gmax) = argmax(curve)?;
    let fit = fit_linear(curve, gmax)?;
    Ok(curve
        .points()
        .skip(imax)
        .map(|(g, r)| (g, fit.predict(g) - r))
        .collect())
}

/// Trapezoid-rule integral of the samples `(x, y)`.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .fold(0.0, |acc, w| acc + (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
}

/// Area of the positive part of d.
pub fn positive_area(d: &[(f64, f64)]) -> f64 {
    let clamped: Vec<(f64, f64)> = d.iter().map(|&(g, v)| (g, v.max(0.0))).collect();
    trapezoid(&clamped)
}

pub fn deviation_area(curve: &DissimilarityCurve) -> Result<f64> {
    Ok(positive_area(&deviation_magnitude(curve)?))
}

/// Full deviation analysis of one curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub layer: String,
    pub neuron: Option<(usize, usize, usize)>,
    pub slope: f64,
    pub intercept: f64,
    pub gamma_max_r: f64,
    pub d_gamma: Vec<f64>,
    pub d: Vec<f64>,
    pub area: f64,
    pub final_r: f64,
    pub normalized_area: f64,
    /// Set when the curve ends at R = 0, so the area cannot be normalized.
    pub degenerate: bool,
}

impl DeviationReport {
    pub fn analyze(curve: &DissimilarityCurve) -> Result<Self> {
        let (imax, gmax) = argmax(curve)?;
        let final_r = curve.final_value().ok_or(DeviationError::EmptyCurve)?;
        let fit = if imax == 0 && curve.values()[0] == 0.0 {
            // All-zero curve: the line R = 0 fits it exactly.
            LinearFit {
                slope: 0.0,
                intercept: 0.0,
            }
        } else {
            fit_linear(curve, gmax)?
        };
        let d: Vec<(f64, f64)> = curve
            .points()
            .skip(imax)
            .map(|(g, r)| (g, fit.predict(g) - r))
            .collect();
        let area = positive_area(&d);
        let degenerate = final_r == 0.0;
        Ok(Self {
            layer: curve.layer().to_string(),
            neuron: curve.neuron(),
            slope: fit.slope,
            intercept: fit.intercept,
            gamma_max_r: gmax,
            d_gamma: d.iter().map(|p| p.0).collect(),
            d: d.iter().map(|p| p.1).collect(),
            area,
            final_r,
            normalized_area: if degenerate { 0.0 } else { area / final_r },
            degenerate,
        })
    }
}

/// Normalized deviation area of every layer for one sweep, in network order.
pub fn layer_propagation(model: &Model, sweep: &Sweep, reference: &Image) -> Result<Vec<DeviationReport>> {
    let curves = rsa::all_layer_curves(model, sweep, reference)?;
    curves.iter().map(DeviationReport::analyze).collect()
}

/// Tally of per-neuron significance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeuronFraction {
    pub total: usize,
    pub significant: usize,
    pub degenerate: usize,
    /// Neurons whose curve could not be fitted; counted as not significant.
    pub unfit: usize,
    pub threshold: f64,
    pub fraction: f64,
}

/// Streaming counterpart of [`significant_neuron_fraction`].
#[derive(Debug, Clone)]
pub struct SignificanceCounter {
    threshold: f64,
    total: usize,
    significant: usize,
    degenerate: usize,
    unfit: usize,
}

impl SignificanceCounter {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            total: 0,
            significant: 0,
            degenerate: 0,
            unfit: 0,
        }
    }

    pub fn push(&mut self, curve: &DissimilarityCurve) {
        self.total += 1;
        match DeviationReport::analyze(curve) {
            Ok(r) if r.degenerate => self.degenerate += 1,
            Ok(r) if r.normalized_area > self.threshold => self.significant += 1,
            Ok(_) => {}
            Err(_) => self.unfit += 1,
        }
    }

    pub fn finish(&self) -> Result<NeuronFraction> {
        if self.total == 0 {
            return Err(DeviationError::EmptyInput);
        }
        Ok(NeuronFraction {
            total: self.total,
            significant: self.significant,
            degenerate: self.degenerate,
            unfit: self.unfit,
            threshold: self.threshold,
            fraction: self.significant as f64 / self.total as f64,
        })
    }
}

/// Fraction of neurons whose normalized deviation area is strictly above `threshold`.
pub fn significant_neuron_fraction<'a>(
    curves: impl IntoIterator<Item = &'a DissimilarityCurve>,
    threshold: f64,
) -> Result<NeuronFraction> {
    let mut counter = SignificanceCounter::new(threshold);
    for c in curves {
        counter.push(c);
    }
    counter.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(gammas: &[f64], values: &[f64]) -> DissimilarityCurve {
        DissimilarityCurve::new(gammas.to_vec(), values.to_vec(), "t", None).unwrap()
    }

    #[test]
    fn argmax_tie_break() {
        let c = curve(&[0.4, 0.5, 0.6, 0.7], &[0.1, 0.9, 0.9, 0.2]);
        assert_eq!(gamma_max(&c).unwrap(), 0.5);
        let inc = curve(&[0.0, 0.5, 1.0], &[0.0, 1.0, 2.0]);
        assert_eq!(gamma_max(&inc).unwrap(), 1.0);
        let empty = curve(&[], &[]);
        assert!(matches!(gamma_max(&empty), Err(DeviationError::EmptyCurve)));
    }

    #[test]
    fn exact_and_constant_fits() {
        let c = curve(&[0.0, 0.5, 1.0], &[0.0, 1.0, 2.0]);
        let f = fit_linear(&c, 1.0).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && f.intercept.abs() < 1e-15);
        let k = curve(&[0.0, 0.5, 1.0], &[0.3, 0.3, 0.3]);
        let f = fit_linear(&k, 1.0).unwrap();
        assert_eq!(f.slope, 0.0);
        assert!((f.intercept - 0.3).abs() < 1e-15);
        assert!(matches!(
            fit_linear(&c, 0.0),
            Err(DeviationError::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn hand_worked_deviation() {
        let c = curve(&[0.0, 0.25, 0.5, 0.75, 1.0], &[0.0, 0.5, 1.0, 0.6, 0.2]);
        let d = deviation_magnitude(&c).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d[0].1.abs() < 1e-12);
        assert!((d[1].1 - 0.9).abs() < 1e-12);
        assert!((d[2].1 - 1.8).abs() < 1e-12);
        assert!((deviation_area(&c).unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn peak_at_end_has_no_area() {
        let c = curve(&[0.0, 0.5, 1.0], &[0.0, 0.2, 1.5]);
        assert_eq!(deviation_area(&c).unwrap(), 0.0);
    }

    #[test]
    fn negative_excursions_are_clamped() {
        assert_eq!(positive_area(&[(0.0, -1.0), (1.0, -1.0)]), 0.0);
        assert!((positive_area(&[(0.0, 0.0), (1.0, -1.0), (2.0, 2.0)]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_report() {
        let c = curve(&[0.0, 0.5, 1.0], &[0.0, 0.0, 0.0]);
        let r = DeviationReport::analyze(&c).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.normalized_area, 0.0);
        assert_eq!(r.area, 0.0);
    }

    #[test]
    fn neuron_fraction_counts() {
        let g = [0.0, 0.25, 0.5, 0.75, 1.0];
        let linear = curve(&g, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        // Peaks early and collapses to a tiny final value: large normalized area.
        let deviant = curve(&g, &[0.0, 1.0, 2.0, 0.1, 0.01]);
        let set = [linear.clone(), linear.clone(), linear, deviant];
        let f = significant_neuron_fraction(&set, DEFAULT_NEURON_THRESHOLD).unwrap();
        assert_eq!(f.significant, 1);
        assert_eq!(f.fraction, 0.25);
        assert!(matches!(
            significant_neuron_fraction(&[], 10.0),
            Err(DeviationError::EmptyInput)
        ));
    }

    #[test]
    fn threshold_is_strict() {
        let g = [0.0, 0.5, 1.0];
        // Line 2γ through the first two samples; d(1) = 2 - 0.5 = 1.5, D = 0.375.
        let c = curve(&g, &[0.0, 1.0, 0.5]);
        let r = DeviationReport::analyze(&c).unwrap();
        assert!((r.normalized_area - 0.75).abs() < 1e-15);
        let at = significant_neuron_fraction([&c], r.normalized_area).unwrap();
        assert_eq!(at.significant, 0);
    }
}
