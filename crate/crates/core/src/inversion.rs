//! The 3×2 linear inverse problem with uniform box noise.
//!
//! Data d = G m + n with
//!
//! ```text
//!     | 0  a |
//! G = | b  0 |      n ~ U([-σ, σ]^3)
//!     | c  0 |
//! ```
//!
//! Two likelihoods are provided: the residual form p_n(d_obs − g(m)) and the
//! data-prior form p_x(g(m)) with p_x(x) = p_n(d_obs − x). They evaluate the
//! same box indicator and agree bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{pairwise_sum, Axis, GridError, GriddedDensity};

pub type DataVector = [f64; 3];
pub type ParamVector = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InversionError {
    #[error("invalid forward coefficients: {0}")]
    InvalidForward(String),
    #[error("sigma > 0 required, got {0}")]
    InvalidSigma(f64),
    #[error("observed data must be finite, got {0:?}")]
    NonFiniteData(DataVector),
    #[error("zero evidence: the likelihood vanishes on the whole grid")]
    ZeroEvidence,
    #[error("likelihood value at cell {index} is {value}")]
    InvalidLikelihood { index: usize, value: f64 },
    #[error("expected a 2-D parameter grid, got {0} axes")]
    NotTwoDimensional(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A density over data space.
pub trait DataDensity {
    fn density(&self, x: &DataVector) -> f64;
}

/// G = [[0, a], [b, 0], [c, 0]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearForward {
    a: f64,
    b: f64,
    c: f64,
}

impl LinearForward {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, InversionError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(InversionError::InvalidForward(format!(
                "a, b, c must be finite (got {a}, {b}, {c})"
            )));
        }
        if a == 0.0 {
            return Err(InversionError::InvalidForward("a must be nonzero".into()));
        }
        if b == 0.0 && c == 0.0 {
            return Err(InversionError::InvalidForward(
                "at least one of b, c must be nonzero".into(),
            ));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn apply(&self, m: &ParamVector) -> DataVector {
        [self.a * m[1], self.b * m[0], self.c * m[0]]
    }
}

pub fn forward_apply(f: &LinearForward, m: &ParamVector) -> DataVector {
    f.apply(m)
}

/// Uniform noise on the closed box [−σ, σ]³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxNoise {
    sigma: f64,
}

impl BoxNoise {
    pub fn new(sigma: f64) -> Result<Self, InversionError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(InversionError::InvalidSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// (2σ)⁻³, the density inside the box.
    pub fn peak(&self) -> f64 {
        (2.0 * self.sigma).powi(-3)
    }

    pub fn contains(&self, n: &DataVector) -> bool {
        n.iter().all(|v| v.abs() <= self.sigma)
    }
}

impl DataDensity for BoxNoise {
    fn density(&self, n: &DataVector) -> f64 {
        if self.contains(n) {
            self.peak()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedData(DataVector);

impl ObservedData {
    pub fn new(d: DataVector) -> Result<Self, InversionError> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(InversionError::NonFiniteData(d));
        }
        Ok(Self(d))
    }

    pub fn values(&self) -> &DataVector {
        &self.0
    }
}

fn residual(d_obs: &DataVector, x: &DataVector) -> DataVector {
    [d_obs[0] - x[0], d_obs[1] - x[1], d_obs[2] - x[2]]
}

/// Prior on noise-free data: the noise law shifted to sit on the observations,
/// p_x(x) = p_n(d_obs − x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedDataPrior {
    center: ObservedData,
    noise: BoxNoise,
}

impl ShiftedDataPrior {
    pub fn new(center: ObservedData, noise: BoxNoise) -> Self {
        Self { center, noise }
    }

    pub fn center(&self) -> &ObservedData {
        &self.center
    }

    pub fn noise(&self) -> &BoxNoise {
        &self.noise
    }
}

impl DataDensity for ShiftedDataPrior {
    fn density(&self, x: &DataVector) -> f64 {
        self.noise.density(&residual(self.center.values(), x))
    }
}

/// Residual form: p_n(d_obs − g(m)).
pub fn likelihood_form1(m: &ParamVector, d_obs: &ObservedData, noise: &BoxNoise, f: &LinearForward) -> f64 {
    noise.density(&residual(d_obs.values(), &f.apply(m)))
}

/// Data-prior form: p_x(g(m)), the joint prior conditioned on d = g(m).
pub fn likelihood_form2(m: &ParamVector, prior_d: &ShiftedDataPrior, f: &LinearForward) -> f64 {
    prior_d.density(&f.apply(m))
}

/// The parameter region P(σ) where the likelihood is nonzero.
#[derive(Debug, Clone, Copy)]
pub struct SupportRegion<'a> {
    pub forward: &'a LinearForward,
    pub noise: &'a BoxNoise,
    pub data: &'a ObservedData,
}

impl SupportRegion<'_> {
    pub fn contains(&self, m: &ParamVector) -> bool {
        let g = self.forward.apply(m);
        let d = self.data.values();
        (0..3).all(|i| (d[i] - g[i]).abs() <= self.noise.sigma)
    }
}

/// Forward model, noise law and observations bundled together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxProblem {
    pub forward: LinearForward,
    pub noise: BoxNoise,
    pub data: ObservedData,
}

impl BoxProblem {
    pub fn new(forward: LinearForward, noise: BoxNoise, data: ObservedData) -> Self {
        Self { forward, noise, data }
    }

    pub fn data_prior(&self) -> ShiftedDataPrior {
        ShiftedDataPrior::new(self.data, self.noise)
    }

    pub fn support(&self) -> SupportRegion<'_> {
        SupportRegion {
            forward: &self.forward,
            noise: &self.noise,
            data: &self.data,
        }
    }

    pub fn likelihood_form1(&self, m: &ParamVector) -> f64 {
        likelihood_form1(m, &self.data, &self.noise, &self.forward)
    }

    pub fn likelihood_form2(&self, m: &ParamVector) -> f64 {
        likelihood_form2(m, &self.data_prior(), &self.forward)
    }

    /// P(σ) as an axis-aligned rectangle `[(m1_lo, m1_hi), (m2_lo, m2_hi)]`,
    /// or `None` when the rows are inconsistent.
    pub fn support_rectangle(&self) -> Option<[(f64, f64); 2]> {
        let s = self.noise.sigma;
        let d = self.data.values();
        let row = |coef: f64, obs: f64| -> Option<(f64, f64)> {
            if coef == 0.0 {
                return (obs.abs() <= s).then_some((f64::NEG_INFINITY, f64::INFINITY));
            }
            let (p, q) = ((obs - s) / coef, (obs + s) / coef);
            Some((p.min(q), p.max(q)))
        };
        let m2 = row(self.forward.a, d[0])?;
        let (b_lo, b_hi) = row(self.forward.b, d[1])?;
        let (c_lo, c_hi) = row(self.forward.c, d[2])?;
        let m1 = (b_lo.max(c_lo), b_hi.min(c_hi));
        (m1.0 <= m1.1).then_some([m1, m2])
    }

    /// Evidence under a uniform prior on the box `bounds`, in closed form.
    pub fn uniform_prior_evidence(&self, bounds: [(f64, f64); 2]) -> f64 {
        let Some(rect) = self.support_rectangle() else {
            return 0.0;
        };
        let overlap = |(a, b): (f64, f64), (lo, hi): (f64, f64)| (b.min(hi) - a.max(lo)).max(0.0);
        let area = overlap(rect[0], bounds[0]) * overlap(rect[1], bounds[1]);
        let prior_area = (bounds[0].1 - bounds[0].0) * (bounds[1].1 - bounds[1].0);
        self.noise.peak() * area / prior_area
    }

    /// Grid-resolution bound on the evidence error for a uniform prior: each
    /// side of P(σ) ∩ prior box resolved to within two cells.
    pub fn evidence_tolerance(&self, axes: &[Axis; 2]) -> f64 {
        let bounds = [(axes[0].lo(), axes[0].hi()), (axes[1].lo(), axes[1].hi())];
        let Some(rect) = self.support_rectangle() else {
            return 0.0;
        };
        let side = |k: usize| (rect[k].1.min(bounds[k].1) - rect[k].0.max(bounds[k].0)).max(0.0);
        let (l1, l2) = (side(0), side(1));
        let (w1, w2) = (2.0 * axes[0].width(), 2.0 * axes[1].width());
        let prior_area = (bounds[0].1 - bounds[0].0) * (bounds[1].1 - bounds[1].0);
        self.noise.peak() * ((l1 + w1) * (l2 + w2) - l1 * l2) / prior_area
    }
}

/// Posterior on a grid together with the likelihood values that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub posterior: GriddedDensity,
    pub likelihood: Vec<f64>,
    pub evidence: f64,
}

/// Evaluates `f` at every cell center of `grid`, in storage order.
///
/// Rows of the leading axis run in parallel; the output order is fixed.
pub fn evaluate_on_grid<T, F>(grid: &GriddedDensity, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let row_len = grid.len() / grid.axes()[0].cells();
    (0..grid.axes()[0].cells())
        .into_par_iter()
        .flat_map_iter(|row| {
            let f = &f;
            (row * row_len..(row + 1) * row_len).map(move |i| f(&grid.point(i)))
        })
        .collect()
}

/// Midpoint-rule evidence Σ prior × likelihood × cell measure.
pub fn grid_evidence(prior: &GriddedDensity, likelihood: &[f64]) -> f64 {
    let products: Vec<f64> = prior.values().iter().zip(likelihood).map(|(p, l)| p * l).collect();
    pairwise_sum(&products) * prior.cell_measure()
}

/// Posterior ∝ prior × likelihood from precomputed likelihood values.
pub fn posterior_from_likelihood(
    prior: &GriddedDensity,
    likelihood: Vec<f64>,
) -> Result<GridPosterior, InversionError> {
    if likelihood.len() != prior.len() {
        return Err(GridError::LengthMismatch {
            expected: prior.len(),
            got: likelihood.len(),
        }
        .into());
    }
    if let Some((index, &value)) = likelihood
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(InversionError::InvalidLikelihood { index, value });
    }
    let evidence = grid_evidence(prior, &likelihood);
    if evidence <= 0.0 {
        return Err(InversionError::ZeroEvidence);
    }
    let values = prior
        .values()
        .iter()
        .zip(&likelihood)
        .map(|(p, l)| p * l / evidence)
        .collect();
    let posterior = GriddedDensity::new(prior.axes().to_vec(), values)?;
    Ok(GridPosterior {
        posterior,
        likelihood,
        evidence,
    })
}

/// Conditions a gridded prior on a likelihood.
pub fn posterior_on_grid<F>(prior: &GriddedDensity, likelihood: F) -> Result<GridPosterior, InversionError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values = evaluate_on_grid(prior, likelihood);
    posterior_from_likelihood(prior, values)
}

/// Reads a 2-D cell center as a parameter vector.
pub fn as_param(m: &[f64]) -> ParamVector {
    [m[0], m[1]]
}

/// Uniform prior on `[lo1, hi1] × [lo2, hi2]` with the given cell counts.
pub fn uniform_prior_2d(bounds: [(f64, f64); 2], cells: [usize; 2]) -> Result<GriddedDensity, InversionError> {
    let axes = vec![
        Axis::new(bounds[0].0, bounds[0].1, cells[0])?,
        Axis::new(bounds[1].0, bounds[1].1, cells[1])?,
    ];
    Ok(GriddedDensity::uniform(axes)?)
}

pub fn two_axes(grid: &GriddedDensity) -> Result<[Axis; 2], InversionError> {
    match grid.axes() {
        [a, b] => Ok([*a, *b]),
        other => Err(InversionError::NotTwoDimensional(other.len())),
    }
}
