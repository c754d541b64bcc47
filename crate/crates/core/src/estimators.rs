//! MAP points, evidence, Bayes factors, and two constructions built on them:
//! MAP displacement under a parameter reparameterization, and a data
//! reparameterization that dials the evidence to a chosen multiple.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Axis, GridError, GriddedDensity};
use crate::inversion::{as_param, evaluate_on_grid, grid_evidence, BoxProblem, GridPosterior, InversionError};
use crate::reparam::{fd_step, transformed_likelihood, DataTransform, PowerD1, ReparamError, TransformedForward};

/// max/min below this counts as a flat posterior.
pub const FLAT_RATIO: f64 = 1.0 + 1e-12;

/// Relative tolerance at which the evidence bisection stops.
pub const TARGET_RTOL: f64 = 1e-3;

pub const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("posterior has {posterior} axes but {transforms} transforms were given")]
    DimensionMismatch { posterior: usize, transforms: usize },
    #[error("transform {transform} is not strictly monotone on axis {axis}")]
    NotMonotone { transform: &'static str, axis: usize },
    #[error("undefined Bayes factor: denominator evidence is {0}")]
    UndefinedBayesFactor(f64),
    #[error("target ratio must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("gamma bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("observed d1 box [{lo}, {hi}] straddles zero; the power family is singular there")]
    StraddlesZero { lo: f64, hi: f64 },
    #[error("target unreachable: ratio {target} outside [{low}, {high}] spanned by the gamma bracket")]
    TargetUnreachable { target: f64, low: f64, high: f64 },
    #[error("evidence ratio not monotone in gamma near gamma = {gamma}")]
    NonMonotoneFamily { gamma: f64 },
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Reparam(#[from] ReparamError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Scalar parameter reparameterization m' = forward(m), applied per axis.
pub trait ParameterTransform: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn forward(&self, m: f64) -> f64;

    fn inverse(&self, mt: f64) -> f64;

    /// |dm/dm'| at m'.
    fn inv_jac_det(&self, mt: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityParam;

impl ParameterTransform for IdentityParam {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn forward(&self, m: f64) -> f64 {
        m
    }
    fn inverse(&self, mt: f64) -> f64 {
        mt
    }
    fn inv_jac_det(&self, _mt: f64) -> f64 {
        1.0
    }
}

/// m' = scale · m + shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParam {
    pub scale: f64,
    pub shift: f64,
}

impl ParameterTransform for AffineParam {
    fn name(&self) -> &'static str {
        "affine"
    }
    fn forward(&self, m: f64) -> f64 {
        self.scale * m + self.shift
    }
    fn inverse(&self, mt: f64) -> f64 {
        (mt - self.shift) / self.scale
    }
    fn inv_jac_det(&self, _mt: f64) -> f64 {
        1.0 / self.scale.abs()
    }
}

/// m' = m^exponent on m ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParam {
    pub exponent: f64,
}

impl ParameterTransform for PowerParam {
    fn name(&self) -> &'static str {
        "power"
    }
    fn forward(&self, m: f64) -> f64 {
        m.powf(self.exponent)
    }
    fn inverse(&self, mt: f64) -> f64 {
        mt.powf(1.0 / self.exponent)
    }
    fn inv_jac_det(&self, mt: f64) -> f64 {
        mt.powf(1.0 / self.exponent - 1.0) / self.exponent.abs()
    }
}

/// Config form of a parameter transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamTransformSpec {
    Identity {},
    Affine { scale: f64, shift: f64 },
    Power { exponent: f64 },
}

impl ParamTransformSpec {
    pub fn build(&self) -> Box<dyn ParameterTransform> {
        match *self {
            Self::Identity {} => Box::new(IdentityParam),
            Self::Affine { scale, shift } => Box::new(AffineParam { scale, shift }),
            Self::Power { exponent } => Box::new(PowerParam { exponent }),
        }
    }

    /// Whether the transform has a constant Jacobian.
    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Identity {} | Self::Affine { .. })
    }
}

/// Relative error of `inv_jac_det` against a central difference of `inverse`.
pub fn parameter_fd_check(t: &dyn ParameterTransform, probes: &[f64]) -> f64 {
    probes
        .iter()
        .map(|&y| {
            let h = fd_step(y);
            let (yp, ym) = (y + h, y - h);
            let fd = ((t.inverse(yp) - t.inverse(ym)) / (yp - ym)).abs();
            let analytic = t.inv_jac_det(y);
            (fd - analytic).abs() / analytic
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapEstimate {
    pub index: Vec<usize>,
    pub point: Vec<f64>,
    pub value: f64,
    /// Another cell attains the same maximum; the lowest index was kept.
    pub tie: bool,
    /// max/min of the density is below [`FLAT_RATIO`].
    pub flat: bool,
}

fn argmax_flags(values: &[f64]) -> (usize, f64, bool, bool) {
    let (mut best, mut max, mut min) = (0, values[0], values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > max {
            best = i;
            max = v;
        }
        min = min.min(v);
    }
    let tie = values.iter().filter(|&&v| v == max).count() > 1;
    let flat = min > 0.0 && max / min < FLAT_RATIO;
    (best, max, tie, flat)
}

/// Grid argmax of a posterior; ties go to the lowest row-major index.
pub fn map_estimate(posterior: &GriddedDensity) -> MapEstimate {
    let (best, value, tie, flat) = argmax_flags(posterior.values());
    MapEstimate {
        index: posterior.unravel(best),
        point: posterior.point(best),
        value,
        tie,
        flat,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoninvarianceDemo {
    pub original: MapEstimate,
    /// Argmax of the pushed-forward density, in transformed coordinates.
    pub transformed_map: Vec<f64>,
    pub transformed_tie: bool,
    pub mapped_back: Vec<f64>,
    /// Euclidean distance between `original.point` and `mapped_back`.
    pub displacement: f64,
    /// Largest per-axis displacement in units of that axis' cell width.
    pub displacement_cells: f64,
    pub flat: bool,
    /// Transformed coordinates of each axis' cell centers.
    #[serde(skip)]
    pub transformed_axes: Vec<Vec<f64>>,
    /// Pushed-forward density at the transformed cell centers.
    #[serde(skip)]
    pub transformed_density: Vec<f64>,
}

/// Compares the MAP point with the MAP of the same posterior expressed in
/// coordinates m' = t(m), mapped back to m.
///
/// The transformed density is evaluated at the images of the cell centers,
/// p'(t(m)) = p(m) · |dm/dm'|, so no interpolation is involved.
pub fn map_noninvariance_demo(
    posterior: &GriddedDensity,
    transforms: &[&dyn ParameterTransform],
) -> Result<NoninvarianceDemo, EstimatorError> {
    let axes = posterior.axes();
    if axes.len() != transforms.len() {
        return Err(EstimatorError::DimensionMismatch {
            posterior: axes.len(),
            transforms: transforms.len(),
        });
    }
    let mut images = Vec::with_capacity(axes.len());
    let mut jacobians = Vec::with_capacity(axes.len());
    for (k, (axis, t)) in axes.iter().zip(transforms).enumerate() {
        let image: Vec<f64> = axis.centers().into_iter().map(|c| t.forward(c)).collect();
        let increasing = image.windows(2).all(|w| w[1] > w[0]);
        let decreasing = image.windows(2).all(|w| w[1] < w[0]);
        if image.iter().any(|v| !v.is_finite()) || !(increasing || decreasing) {
            return Err(EstimatorError::NotMonotone {
                transform: t.name(),
                axis: k,
            });
        }
        jacobians.push(image.iter().map(|&v| t.inv_jac_det(v)).collect::<Vec<f64>>());
        images.push(image);
    }
    let transformed: Vec<f64> = posterior
        .values()
        .iter()
        .enumerate()
        .map(|(flat, &p)| {
            posterior
                .unravel(flat)
                .iter()
                .zip(&jacobians)
                .fold(p, |acc, (&i, jac)| acc * jac[i])
        })
        .collect();

    let original = map_estimate(posterior);
    let (best, _, transformed_tie, _) = argmax_flags(&transformed);
    let idx = posterior.unravel(best);
    let transformed_map: Vec<f64> = idx.iter().zip(&images).map(|(&i, img)| img[i]).collect();
    let mapped_back: Vec<f64> = transformed_map
        .iter()
        .zip(transforms)
        .map(|(&v, t)| t.inverse(v))
        .collect();
    let displacement = original
        .point
        .iter()
        .zip(&mapped_back)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let displacement_cells = original
        .point
        .iter()
        .zip(&mapped_back)
        .zip(axes)
        .map(|((a, b), axis)| (a - b).abs() / axis.width())
        .fold(0.0, f64::max);
    Ok(NoninvarianceDemo {
        flat: original.flat,
        original,
        transformed_map,
        transformed_tie,
        mapped_back,
        displacement,
        displacement_cells,
        transformed_axes: images,
        transformed_density: transformed,
    })
}

/// Midpoint-rule integral of prior × likelihood.
pub fn evidence<F>(prior: &GriddedDensity, likelihood: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid_evidence(prior, &evaluate_on_grid(prior, likelihood))
}

pub fn bayes_factor(e1: f64, e2: f64) -> Result<f64, EstimatorError> {
    if !(e2 > 0.0 && e2.is_finite()) {
        return Err(EstimatorError::UndefinedBayesFactor(e2));
    }
    Ok(e1 / e2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub map_point: Vec<f64>,
    pub map_tie: bool,
    pub evidence: f64,
    pub grid_spec: Vec<Axis>,
}

impl PosteriorSummary {
    pub fn from_posterior(post: &GridPosterior) -> Self {
        let map = map_estimate(&post.posterior);
        Self {
            map_point: map.point,
            map_tie: map.tie,
            evidence: post.evidence,
            grid_spec: post.posterior.axes().to_vec(),
        }
    }
}

/// Evidence of `problem` recomputed in data coordinates y = t(d), with
/// y_obs = t(d_obs) and the Jacobian-carrying likelihood.
pub fn transformed_evidence(
    problem: &BoxProblem,
    prior: &GriddedDensity,
    t: &dyn DataTransform,
) -> Result<f64, EstimatorError> {
    let y_obs = t.map(problem.data.values())?;
    let tf = TransformedForward {
        base: problem.forward,
        transform: t,
    };
    let values: Result<Vec<f64>, ReparamError> = evaluate_on_grid(prior, |m| {
        transformed_likelihood(&as_param(m), &y_obs, &problem.noise, &tf)
    })
    .into_iter()
    .collect();
    Ok(grid_evidence(prior, &values?))
}

/// Search interval for the power exponent γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaBracket {
    pub lo: f64,
    pub hi: f64,
}

impl Default for GammaBracket {
    fn default() -> Self {
        Self { lo: 0.1, hi: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetedTransform {
    pub transform: PowerD1,
    pub target_ratio: f64,
    pub achieved_ratio: f64,
    pub base_evidence: f64,
    pub evidence: f64,
    pub iterations: usize,
}

/// The d₁ value the power family keeps fixed: the edge of the observed
/// d₁ box nearest zero, so every supported |d₁| lies at or beyond it.
pub fn power_family_anchor(problem: &BoxProblem) -> Result<f64, EstimatorError> {
    let d0 = problem.data.values()[0];
    let s = problem.noise.sigma();
    let (lo, hi) = (d0 - s, d0 + s);
    if lo > 0.0 {
        Ok(lo)
    } else if hi < 0.0 {
        Ok(-hi)
    } else {
        Err(EstimatorError::StraddlesZero { lo, hi })
    }
}

/// Finds γ such that re-expressing the data through [`PowerD1`] multiplies
/// the evidence by `target_ratio`.
///
/// The ratio is decreasing in γ on box problems; this is checked on a scan
/// of the bracket and again at every bisection step. Bisection runs on
/// ln γ until the ratio is within [`TARGET_RTOL`] of the target.
pub fn evidence_targeting_transform(
    problem: &BoxProblem,
    prior: &GriddedDensity,
    target_ratio: f64,
    bracket: GammaBracket,
) -> Result<TargetedTransform, EstimatorError> {
    if !(target_ratio > 0.0 && target_ratio.is_finite()) {
        return Err(EstimatorError::InvalidTarget(target_ratio));
    }
    if !(bracket.lo > 0.0 && bracket.lo < bracket.hi && bracket.hi.is_finite()) {
        return Err(EstimatorError::InvalidBracket {
            lo: bracket.lo,
            hi: bracket.hi,
        });
    }
    let anchor = power_family_anchor(problem)?;
    let base_evidence = evidence(prior, |m| problem.likelihood_form1(&as_param(m)));
    if base_evidence <= 0.0 {
        return Err(InversionError::ZeroEvidence.into());
    }
    let ratio_at = |gamma: f64| -> Result<(PowerD1, f64), EstimatorError> {
        let t = PowerD1::new(gamma, anchor)?;
        Ok((t, transformed_evidence(problem, prior, &t)? / base_evidence))
    };

    let (ln_lo, ln_hi) = (bracket.lo.ln(), bracket.hi.ln());
    const SCAN: usize = 9;
    let mut previous = f64::INFINITY;
    for i in 0..SCAN {
        let gamma = (ln_lo + (ln_hi - ln_lo) * i as f64 / (SCAN - 1) as f64).exp();
        let (_, r) = ratio_at(gamma)?;
        if r.is_nan() || r >= previous {
            return Err(EstimatorError::NonMonotoneFamily { gamma });
        }
        previous = r;
    }

    let (mut a, mut b) = (ln_lo, ln_hi);
    let (_, mut r_a) = ratio_at(bracket.lo)?;
    let (_, mut r_b) = ratio_at(bracket.hi)?;
    let close = |r: f64| (r / target_ratio - 1.0).abs() <= TARGET_RTOL;
    if !(r_b <= target_ratio && target_ratio <= r_a) && !close(r_a) && !close(r_b) {
        return Err(EstimatorError::TargetUnreachable {
            target: target_ratio,
            low: r_b,
            high: r_a,
        });
    }
    for (gamma_ln, r) in [(a, r_a), (b, r_b)] {
        if close(r) {
            let (transform, achieved) = ratio_at(gamma_ln.exp())?;
            return Ok(TargetedTransform {
                transform,
                target_ratio,
                achieved_ratio: achieved,
                base_evidence,
                evidence: achieved * base_evidence,
                iterations: 0,
            });
        }
    }
    for iteration in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        let (transform, r) = ratio_at(mid.exp())?;
        if !(r_b <= r && r <= r_a) {
            return Err(EstimatorError::NonMonotoneFamily { gamma: mid.exp() });
        }
        if close(r) {
            return Ok(TargetedTransform {
                transform,
                target_ratio,
                achieved_ratio: r,
                base_evidence,
                evidence: r * base_evidence,
                iterations: iteration,
            });
        }
        if r > target_ratio {
            a = mid;
            r_a = r;
        } else {
            b = mid;
            r_b = r;
        }
    }
    Err(EstimatorError::TargetUnreachable {
        target: target_ratio,
        low: r_b,
        high: r_a,
    })
}
