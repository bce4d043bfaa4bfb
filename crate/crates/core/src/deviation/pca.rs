//! Principal components of per-layer dissimilarity curves.
//!
//! Observations are sweep levels and features are layers: entry `(i, j)` is
//! R of layer `j` at level `i`. Columns are mean-centered and decomposed
//! with an SVD. Each component is signed so that its largest-magnitude
//! loading is positive.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{DeviationError, Result};
use crate::rsa::DissimilarityCurve;

/// Whiteness at which human observers reported the strongest effect; a
/// fixed comparison value for the PC1 crowding median.
pub const HUMAN_CROWDING_GAMMA: f64 = 0.60;

/// A PC1 step shorter than this fraction of the mean step counts as crowded.
pub const CROWDING_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pca {
    pub layers: Vec<String>,
    pub gammas: Vec<f64>,
    /// Unit loading vectors over layers, strongest component first.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// One row per sweep level, one column per component.
    pub projections: Vec<Vec<f64>>,
}

impl Pca {
    pub fn pc1(&self) -> Vec<f64> {
        self.projections.iter().map(|row| row[0]).collect()
    }
}

/// PCA of a raw observation matrix (rows are observations).
pub fn pca_matrix(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if n < 2 || p < 2 {
        return Err(DeviationError::InsufficientData {
            needed: 2,
            got: n.min(p),
        });
    }
    let mut x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    for j in 0..p {
        let m = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-m);
    }
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 || !total.is_finite() {
        return Err(DeviationError::DegenerateData("centered matrix is zero".into()));
    }
    let mut components = Vec::with_capacity(order.len());
    let mut singular = Vec::with_capacity(order.len());
    for &k in &order {
        let mut c: Vec<f64> = v_t.row(k).iter().copied().collect();
        let lead = c
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if lead < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
        singular.push(svd.singular_values[k]);
    }
    let ratios = singular.iter().map(|s| s * s / total).collect();
    let projections = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..p).map(|j| x[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();
    Ok((components, singular, ratios, projections))
}

pub fn pca_layer_curves(curves: &[DissimilarityCurve]) -> Result<Pca> {
    let first = curves.first().ok_or(DeviationError::EmptyInput)?;
    if curves.iter().any(|c| c.gammas() != first.gammas()) {
        return Err(DeviationError::DegenerateData("curves are sampled on different levels".into()));
    }
    let rows: Vec<Vec<f64>> = (0..first.len())
        .map(|i| curves.iter().map(|c| c.values()[i]).collect())
        .collect();
    let (components, singular_values, explained_variance_ratio, projections) = pca_matrix(&rows)?;
    Ok(Pca {
        layers: curves.iter().map(|c| c.layer().to_string()).collect(),
        gammas: first.gammas().to_vec(),
        components,
        singular_values,
        explained_variance_ratio,
        projections,
    })
}

/// How tightly consecutive sweep levels bunch together along PC1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crowding {
    /// Whether PC1 is monotone (either direction) across the sweep.
    pub pc1_monotone: bool,
    pub mean_step: f64,
    /// Levels in the longest run of consecutive crowded steps.
    pub crowded_gammas: Vec<f64>,
    pub median_gamma: Option<f64>,
    pub human_gamma: f64,
}

/// Finds the longest run of consecutive levels whose PC1 steps are all
/// shorter than [`CROWDING_FRACTION`] of the mean step; the first such run
/// wins ties.
pub fn pc1_crowding(gammas: &[f64], pc1: &[f64]) -> Crowding {
    let steps: Vec<f64> = pc1.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mean_step = if steps.is_empty() {
        0.0
    } else {
        steps.iter().sum::<f64>() / steps.len() as f64
    };
    let increasing = pc1.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = pc1.windows(2).all(|w| w[1] <= w[0]);

    let cutoff = CROWDING_FRACTION * mean_step;
    let (mut best, mut run_start, mut run_len) = ((0, 0), 0, 0);
    for (i, &s) in steps.iter().enumerate() {
        if s < cutoff {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len > best.1 {
                best = (run_start, run_len);
            }
        } else {
            run_len = 0;
        }
    }
    let crowded_gammas: Vec<f64> = if best.1 == 0 {
        Vec::new()
    } else {
        gammas[best.0..=best.0 + best.1].to_vec()
    };
    let median_gamma = match crowded_gammas.len() {
        0 => None,
        n if n % 2 == 1 => Some(crowded_gammas[n / 2]),
        n => Some((crowded_gammas[n / 2 - 1] + crowded_gammas[n / 2]) / 2.0),
    };
    Crowding {
        pc1_monotone: increasing || decreasing,
        mean_step,
        crowded_gammas,
        median_gamma,
        human_gamma: HUMAN_CROWDING_GAMMA,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_matrix() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let (c, _, ratios, _) = pca_matrix(&rows).unwrap();
        assert!((ratios[0] - 1.0).abs() < 1e-12);
        let norm: f64 = c[0].iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(c[0][1] > 0.0);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let rows = vec![vec![1.0, 2.0]; 4];
        assert!(matches!(pca_matrix(&rows), Err(DeviationError::DegenerateData(_))));
    }

    #[test]
    fn crowding_run() {
        let gammas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let pc1 = [0.0, 1.0, 1.01, 1.02, 1.03, 2.0];
        let c = pc1_crowding(&gammas, &pc1);
        assert!(c.pc1_monotone);
        assert_eq!(c.crowded_gammas, vec![0.2, 0.4, 0.6, 0.8]);
        assert!((c.median_gamma.unwrap() - 0.5).abs() < 1e-15);
        let even = pc1_crowding(&[0.0, 0.5, 1.0], &[0.0, 1.0, 2.0]);
        assert_eq!(even.median_gamma, None);
        assert!(!pc1_crowding(&[0.0, 0.5, 1.0], &[0.0, 2.0, 1.0]).pc1_monotone);
    }
}
