//! Scalar linear-Gaussian hierarchy: y = k·m + noise, m ~ N(0, λ²),
//! noise ~ N(0, σ²). Fitting λ to y by maximizing the marginal likelihood
//! gives a value that depends on k, i.e. on the forward function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of λ grid points (before refinement).
pub const DEFAULT_LAMBDA_POINTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error("sigma > 0 required, got {0}")]
    InvalidSigma(f64),
    #[error("lambda >= 0 required, got {0}")]
    InvalidLambda(f64),
    #[error("k must be finite and nonzero, got {0}")]
    InvalidK(f64),
    #[error("k values must be distinct; {0} appears twice")]
    DuplicateK(f64),
    #[error("k_list must not be empty")]
    EmptyKList,
    #[error("observation must be finite, got {0}")]
    InvalidObservation(f64),
    #[error("lambda grid needs lambda_max > 0 and at least 3 points, got max {max}, {points} points")]
    InvalidLambdaGrid { max: f64, points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalModel {
    pub k: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl HierarchicalModel {
    pub fn new(k: f64, sigma: f64, lambda: f64) -> Result<Self, HierarchyError> {
        if !k.is_finite() {
            return Err(HierarchyError::InvalidK(k));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(HierarchyError::InvalidSigma(sigma));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(HierarchyError::InvalidLambda(lambda));
        }
        Ok(Self { k, sigma, lambda })
    }

    /// Variance of the marginal of y.
    pub fn marginal_variance(&self) -> f64 {
        self.k * self.k * self.lambda * self.lambda + self.sigma * self.sigma
    }
}

/// log N(y; 0, k²λ² + σ²).
pub fn marginal_loglik(y: f64, model: &HierarchicalModel) -> f64 {
    let v = model.marginal_variance();
    -0.5 * (2.0 * std::f64::consts::PI * v).ln() - y * y / (2.0 * v)
}

/// Stationary point of the marginal likelihood in λ, clipped at zero.
pub fn closed_form_lambda(y: f64, k: f64, sigma: f64) -> f64 {
    (y * y - sigma * sigma).max(0.0).sqrt() / k.abs()
}

/// λ search grid: `points` evenly spaced values on [0, max]. Without an
/// explicit max, 10 (|y| + σ) / |k| is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_LAMBDA_POINTS
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            max: None,
            points: DEFAULT_LAMBDA_POINTS,
        }
    }
}

impl LambdaGrid {
    pub fn resolve_max(&self, y: f64, k: f64, sigma: f64) -> f64 {
        self.max.unwrap_or(10.0 * (y.abs() + sigma) / k.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperparameterFit {
    pub lambda_hat: f64,
    pub achieved_marginal_loglik: f64,
    /// Set iff `lambda_hat` is zero.
    pub at_boundary: bool,
    /// Spacing of the coarse grid; agreement with the closed form is
    /// judged against this.
    pub grid_step: f64,
}

fn linspace_argmax(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> (usize, f64, f64) {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (0, lo, f(lo));
    for i in 1..points {
        let x = if i + 1 == points { hi } else { lo + i as f64 * step };
        let v = f(x);
        if v > best.2 {
            best = (i, x, v);
        }
    }
    best
}

/// Grid maximization of the marginal likelihood over λ, refined once on
/// the two cells around the coarse argmax.
pub fn empirical_bayes_fit(y: f64, k: f64, sigma: f64, grid: &LambdaGrid) -> Result<HyperparameterFit, HierarchyError> {
    if !y.is_finite() {
        return Err(HierarchyError::InvalidObservation(y));
    }
    if k == 0.0 {
        return Err(HierarchyError::InvalidK(k));
    }
    HierarchicalModel::new(k, sigma, 0.0)?;
    let max = grid.resolve_max(y, k, sigma);
    if !(max > 0.0 && max.is_finite()) || grid.points < 3 {
        return Err(HierarchyError::InvalidLambdaGrid {
            max,
            points: grid.points,
        });
    }
    let loglik = |lambda: f64| marginal_loglik(y, &HierarchicalModel { k, sigma, lambda });
    let step = max / (grid.points - 1) as f64;
    let (i, _, _) = linspace_argmax(0.0, max, grid.points, loglik);
    let lo = if i == 0 { 0.0 } else { (i - 1) as f64 * step };
    let hi = ((i + 1) as f64 * step).min(max);
    let (_, lambda_hat, value) = linspace_argmax(lo, hi, grid.points, loglik);
    Ok(HyperparameterFit {
        lambda_hat,
        achieved_marginal_loglik: value,
        at_boundary: lambda_hat == 0.0,
        grid_step: step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcausalityRow {
    pub k: f64,
    pub fit: HyperparameterFit,
}

/// Fits λ for the same y under each forward constant in `k_list`.
pub fn acausality_report(
    y: f64,
    sigma: f64,
    k_list: &[f64],
    grid: &LambdaGrid,
) -> Result<Vec<AcausalityRow>, HierarchyError> {
    if k_list.is_empty() {
        return Err(HierarchyError::EmptyKList);
    }
    for (i, &k) in k_list.iter().enumerate() {
        if k == 0.0 || !k.is_finite() {
            return Err(HierarchyError::InvalidK(k));
        }
        if k_list[..i].contains(&k) {
            return Err(HierarchyError::DuplicateK(k));
        }
    }
    k_list
        .par_iter()
        .map(|&k| {
            Ok(AcausalityRow {
                k,
                fit: empirical_bayes_fit(y, k, sigma, grid)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: f64, sigma: f64, lambda: f64) -> HierarchicalModel {
        HierarchicalModel::new(k, sigma, lambda).unwrap()
    }

    #[test]
    fn standard_normal_at_zero() {
        assert!((marginal_loglik(0.0, &model(1.0, 1.0, 0.0)) + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_ignores_k() {
        let a = marginal_loglik(1.3, &model(1.0, 0.7, 0.0));
        let b = marginal_loglik(1.3, &model(-25.0, 0.7, 0.0));
        assert_eq!(a, b);
    }

    #[test]
    fn variance_four_at_two() {
        let expected = ((-0.5f64).exp() / (8.0 * std::f64::consts::PI).sqrt()).ln();
        let got = marginal_loglik(2.0, &model(1.0, 1.0, 3f64.sqrt()));
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn model_validation() {
        assert_eq!(
            HierarchicalModel::new(1.0, 0.0, 1.0),
            Err(HierarchyError::InvalidSigma(0.0))
        );
        assert_eq!(
            HierarchicalModel::new(1.0, 1.0, -1.0),
            Err(HierarchyError::InvalidLambda(-1.0))
        );
    }

    #[test]
    fn fits_match_closed_form() {
        let g = LambdaGrid::default();
        for (y, k) in [(2.0, 1.0), (2.0, 2.0), (-3.0, 0.5), (1.5, -4.0)] {
            let fit = empirical_bayes_fit(y, k, 1.0, &g).unwrap();
            let exact = closed_form_lambda(y, k, 1.0);
            assert!((fit.lambda_hat - exact).abs() <= fit.grid_step, "y={y} k={k}");
            assert!(!fit.at_boundary);
        }
        let fit = empirical_bayes_fit(2.0, 1.0, 1.0, &g).unwrap();
        assert!((fit.lambda_hat - 3f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn small_observation_hits_boundary() {
        let fit = empirical_bayes_fit(0.5, 1.0, 1.0, &LambdaGrid::default()).unwrap();
        assert_eq!(fit.lambda_hat, 0.0);
        assert!(fit.at_boundary);
    }

    #[test]
    fn fit_beats_every_grid_point() {
        let g = LambdaGrid {
            max: Some(5.0),
            points: 501,
        };
        let fit = empirical_bayes_fit(2.0, 1.3, 1.0, &g).unwrap();
        for i in 0..501 {
            let m = model(1.3, 1.0, 5.0 * i as f64 / 500.0);
            assert!(fit.achieved_marginal_loglik >= marginal_loglik(2.0, &m));
        }
    }

    #[test]
    fn report_shows_k_dependence() {
        let rows = acausality_report(2.0, 1.0, &[1.0, 2.0], &LambdaGrid::default()).unwrap();
        assert!((rows[0].fit.lambda_hat - 3f64.sqrt()).abs() < 1e-3);
        assert!((rows[1].fit.lambda_hat - 3f64.sqrt() / 2.0).abs() < 1e-3);
        let scaled: Vec<f64> = rows.iter().map(|r| r.k.abs() * r.fit.lambda_hat).collect();
        assert!((scaled[0] - scaled[1]).abs() < 1e-9);
    }

    #[test]
    fn report_sign_symmetry_and_degenerate_case() {
        let g = LambdaGrid::default();
        let rows = acausality_report(2.0, 1.0, &[1.0, -1.0], &g).unwrap();
        assert_eq!(rows[0].fit.lambda_hat, rows[1].fit.lambda_hat);
        let rows = acausality_report(0.0, 0.3, &[1.0, 5.0, -2.0], &g).unwrap();
        assert!(rows.iter().all(|r| r.fit.lambda_hat == 0.0 && r.fit.at_boundary));
    }

    #[test]
    fn report_validates_k_list() {
        let g = LambdaGrid::default();
        assert_eq!(acausality_report(1.0, 1.0, &[], &g), Err(HierarchyError::EmptyKList));
        assert_eq!(
            acausality_report(1.0, 1.0, &[1.0, 0.0], &g),
            Err(HierarchyError::InvalidK(0.0))
        );
        assert_eq!(
            acausality_report(1.0, 1.0, &[2.0, 2.0], &g),
            Err(HierarchyError::DuplicateK(2.0))
        );
    }
}
