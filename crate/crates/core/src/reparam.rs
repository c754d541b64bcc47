//! Diffeomorphic data-space transforms and density pushforward.
//!
//! A [`DataTransform`] carries its forward map, its inverse, and the
//! absolute determinant of the inverse Jacobian |det ∂d/∂y|. The
//! Jacobian is given in closed form and checked against central finite
//! differences by [`jacobian_fd_check`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inversion::{BoxNoise, DataDensity, DataVector, InversionError, LinearForward, ParamVector};

/// Keeps tan away from its poles: d₁ ∈ (−π/2 + δ, π/2 − δ).
pub const TAN_DOMAIN_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReparamError {
    #[error("domain violation in {transform}: {detail}")]
    DomainViolation { transform: &'static str, detail: String },
    #[error("invalid transform parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Inversion(#[from] InversionError),
}

fn violation(transform: &'static str, detail: String) -> ReparamError {
    ReparamError::DomainViolation { transform, detail }
}

/// A smooth invertible map of data space, y = map(d).
pub trait DataTransform: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn map(&self, d: &DataVector) -> Result<DataVector, ReparamError>;

    fn inverse(&self, y: &DataVector) -> Result<DataVector, ReparamError>;

    /// |det ∂d/∂y| at `y`.
    fn inv_jac_det(&self, y: &DataVector) -> Result<f64, ReparamError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityTransform;

impl DataTransform for IdentityTransform {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn map(&self, d: &DataVector) -> Result<DataVector, ReparamError> {
        Ok(*d)
    }

    fn inverse(&self, y: &DataVector) -> Result<DataVector, ReparamError> {
        Ok(*y)
    }

    fn inv_jac_det(&self, _y: &DataVector) -> Result<f64, ReparamError> {
        Ok(1.0)
    }
}

/// y = (tan d₁, d₂, d₃) with |det ∂d/∂y| = 1 / (y₁² + 1).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TanD1;

impl TanD1 {
    fn d1_limit() -> f64 {
        FRAC_PI_2 - TAN_DOMAIN_GUARD
    }
}

impl DataTransform for TanD1 {
    fn name(&self) -> &'static str {
        "tan_d1"
    }

    fn map(&self, d: &DataVector) -> Result<DataVector, ReparamError> {
        if d[0].is_nan() || d[0].abs() >= Self::d1_limit() {
            return Err(violation(
                "tan_d1",
                format!("d1 = {} outside (-pi/2 + 1e-6, pi/2 - 1e-6)", d[0]),
            ));
        }
        Ok([d[0].tan(), d[1], d[2]])
    }

    fn inverse(&self, y: &DataVector) -> Result<DataVector, ReparamError> {
        if y[0].is_nan() || y[0].abs() >= Self::d1_limit().tan() {
            return Err(violation(
                "tan_d1",
                format!("y1 = {} outside the image of the guarded d1 domain", y[0]),
            ));
        }
        Ok([y[0].atan(), y[1], y[2]])
    }

    fn inv_jac_det(&self, y: &DataVector) -> Result<f64, ReparamError> {
        Ok(1.0 / (y[0] * y[0] + 1.0))
    }
}

/// Odd power map on d₁ that fixes ±`anchor`:
/// y₁ = sign(d₁) · anchor · (|d₁| / anchor)^γ.
///
/// |det ∂d/∂y| = (1/γ) (|y₁| / anchor)^(1/γ − 1). The map is singular at
/// d₁ = 0 unless γ = 1, where it is exactly the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerD1 {
    gamma: f64,
    anchor: f64,
}

impl PowerD1 {
    pub fn new(gamma: f64, anchor: f64) -> Result<Self, ReparamError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ReparamError::InvalidParameter(format!(
                "gamma > 0 required, got {gamma}"
            )));
        }
        if !(anchor > 0.0 && anchor.is_finite()) {
            return Err(ReparamError::InvalidParameter(format!(
                "anchor > 0 required, got {anchor}"
            )));
        }
        Ok(Self { gamma, anchor })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    fn power(&self, v: f64, exponent: f64) -> f64 {
        v.signum() * self.anchor * (v.abs() / self.anchor).powf(exponent)
    }
}

impl DataTransform for PowerD1 {
    fn name(&self) -> &'static str {
        "power_d1"
    }

    fn map(&self, d: &DataVector) -> Result<DataVector, ReparamError> {
        if self.gamma == 1.0 {
            return Ok(*d);
        }
        if !d[0].is_finite() {
            return Err(violation("power_d1", format!("d1 = {}", d[0])));
        }
        Ok([self.power(d[0], self.gamma), d[1], d[2]])
    }

    fn inverse(&self, y: &DataVector) -> Result<DataVector, ReparamError> {
        if self.gamma == 1.0 {
            return Ok(*y);
        }
        if !y[0].is_finite() {
            return Err(violation("power_d1", format!("y1 = {}", y[0])));
        }
        Ok([self.power(y[0], 1.0 / self.gamma), y[1], y[2]])
    }

    fn inv_jac_det(&self, y: &DataVector) -> Result<f64, ReparamError> {
        if self.gamma == 1.0 {
            return Ok(1.0);
        }
        if y[0] == 0.0 {
            return Err(violation("power_d1", "Jacobian singular at y1 = 0".into()));
        }
        Ok((y[0].abs() / self.anchor).powf(1.0 / self.gamma - 1.0) / self.gamma)
    }
}

/// Config-level name and parameters of a registered transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    Identity {},
    TanD1 {},
    PowerD1 { gamma: f64, anchor: f64 },
}

impl TransformSpec {
    pub fn build(&self) -> Result<Box<dyn DataTransform>, ReparamError> {
        Ok(match *self {
            Self::Identity {} => Box::new(IdentityTransform),
            Self::TanD1 {} => Box::new(TanD1),
            Self::PowerD1 { gamma, anchor } => Box::new(PowerD1::new(gamma, anchor)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity {} => "identity",
            Self::TanD1 {} => "tan_d1",
            Self::PowerD1 { .. } => "power_d1",
        }
    }
}

/// y ↦ p(inverse(y)) · |det ∂d/∂y|.
#[derive(Debug, Clone, Copy)]
pub struct Pushforward<'a, P: ?Sized> {
    base: &'a P,
    transform: &'a dyn DataTransform,
}

impl<P: DataDensity + ?Sized> Pushforward<'_, P> {
    pub fn density(&self, y: &DataVector) -> Result<f64, ReparamError> {
        let p = self.base.density(&self.transform.inverse(y)?);
        if p == 0.0 {
            return Ok(0.0);
        }
        Ok(p * self.transform.inv_jac_det(y)?)
    }
}

pub fn pushforward_density<'a, P: DataDensity + ?Sized>(p: &'a P, t: &'a dyn DataTransform) -> Pushforward<'a, P> {
    Pushforward { base: p, transform: t }
}

/// The forward model seen in transformed data coordinates, g_y = map ∘ g.
#[derive(Debug, Clone, Copy)]
pub struct TransformedForward<'a> {
    pub base: LinearForward,
    pub transform: &'a dyn DataTransform,
}

impl TransformedForward<'_> {
    pub fn apply(&self, m: &ParamVector) -> Result<DataVector, ReparamError> {
        self.transform.map(&self.base.apply(m))
    }
}

/// Likelihood with y as data: p_n^y(y_obs − g_y(m)), where p_n^y is the
/// noise law carried into y coordinates by the transform's Jacobian.
///
/// Support is tested by mapping y_obs and g_y(m) back through the inverse
/// and checking the original noise box; the density inside picks up
/// |det ∂d/∂y| at g_y(m).
pub fn transformed_likelihood(
    m: &ParamVector,
    y_obs: &DataVector,
    noise: &BoxNoise,
    tf: &TransformedForward<'_>,
) -> Result<f64, ReparamError> {
    let y_pred = tf.apply(m)?;
    let center = tf.transform.inverse(y_obs)?;
    let d_pred = tf.transform.inverse(&y_pred)?;
    let n = [center[0] - d_pred[0], center[1] - d_pred[1], center[2] - d_pred[2]];
    let p = noise.density(&n);
    if p == 0.0 {
        return Ok(0.0);
    }
    let value = p * tf.transform.inv_jac_det(&y_pred)?;
    if !value.is_finite() {
        return Err(violation(
            tf.transform.name(),
            format!("likelihood {value} at m = {m:?}"),
        ));
    }
    Ok(value)
}

/// (2σ)⁻³ cos²(a m₂) on P(σ), 0 elsewhere: the tan-transformed likelihood
/// in closed form.
pub fn tan_likelihood_closed_form(m: &ParamVector, problem: &crate::inversion::BoxProblem) -> f64 {
    if problem.support().contains(m) {
        problem.noise.peak() * (problem.forward.a() * m[1]).cos().powi(2)
    } else {
        0.0
    }
}

fn det3(j: &[[f64; 3]; 3]) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// Central-difference step proportional to the probe, so probes near a
/// steep point are not straddled by the stencil.
pub fn fd_step(y: f64) -> f64 {
    if y == 0.0 {
        1e-5
    } else {
        1e-5 * y.abs()
    }
}

/// Largest relative error between `inv_jac_det` and the determinant of a
/// central finite-difference Jacobian of `inverse`, over `probes`.
///
/// Step per coordinate is h = 1e−5 (1 + |y|); the quotient uses the step
/// actually realized in floating point.
pub fn jacobian_fd_check(t: &dyn DataTransform, probes: &[DataVector]) -> Result<f64, ReparamError> {
    let mut worst = 0.0f64;
    for y in probes {
        let mut jac = [[0.0; 3]; 3];
        for col in 0..3 {
            let h = fd_step(y[col]);
            let (mut yp, mut ym) = (*y, *y);
            yp[col] += h;
            ym[col] -= h;
            let step = yp[col] - ym[col];
            let (dp, dm) = (t.inverse(&yp)?, t.inverse(&ym)?);
            for row in 0..3 {
                jac[row][col] = (dp[row] - dm[row]) / step;
            }
        }
        let fd = det3(&jac).abs();
        let analytic = t.inv_jac_det(y)?;
        let err = if analytic != 0.0 {
            (fd - analytic).abs() / analytic.abs()
        } else {
            fd.abs()
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

/// max ‖inverse(map(d)) − d‖∞ over `points`.
pub fn round_trip_error(t: &dyn DataTransform, points: &[DataVector]) -> Result<f64, ReparamError> {
    let mut worst = 0.0f64;
    for d in points {
        let back = t.inverse(&t.map(d)?)?;
        for k in 0..3 {
            worst = worst.max((back[k] - d[k]).abs());
        }
    }
    Ok(worst)
}
