//! Regular cell grids and the normalized density carried on them.
//!
//! Every density in the crate, whether a conditional on a circle or a
//! posterior over a parameter box, lives on a [`GriddedDensity`]: values at
//! cell centers of a tensor-product grid of regular [`Axis`] objects, with
//! midpoint-rule mass equal to one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `sum(values * cell_measure)` for a density to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("axis needs lo < hi and finite bounds, got [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("axis needs at least one cell")]
    NoCells,
    #[error("expected {expected} values for the grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("density value at cell {index} is {value}; values must be finite and non-negative")]
    InvalidValue { index: usize, value: f64 },
    #[error("density integrates to {mass}, not 1 (tolerance {NORMALIZATION_TOL})")]
    NotNormalized { mass: f64 },
    #[error("weights integrate to zero; nothing to normalize")]
    ZeroMass,
}

/// A regular partition of `[lo, hi]` into `cells` equal cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    lo: f64,
    hi: f64,
    cells: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self, GridError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GridError::InvalidBounds { lo, hi });
        }
        if cells == 0 {
            return Err(GridError::NoCells);
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// Left and right edge of cell `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        let left = self.lo + i as f64 * w;
        let right = if i + 1 == self.cells {
            self.hi
        } else {
            self.lo + (i + 1) as f64 * w
        };
        (left, right)
    }

    /// Cell containing `x`; the closed right end belongs to the last cell.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.width()).floor() as usize;
        Some(i.min(self.cells - 1))
    }
}

/// Non-negative density values at the cell centers of a tensor-product grid.
///
/// Values are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    axes: Vec<Axis>,
    values: Vec<f64>,
}

impl GriddedDensity {
    /// Wraps already-normalized values, checking the density invariants.
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self, GridError> {
        let density = Self::unchecked(axes, values)?;
        let mass = density.mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(GridError::NotNormalized { mass });
        }
        Ok(density)
    }

    /// Normalizes non-negative weights into a density.
    pub fn from_weights(axes: Vec<Axis>, weights: Vec<f64>) -> Result<Self, GridError> {
        let raw = Self::unchecked(axes, weights)?;
        let mass = raw.mass();
        if mass <= 0.0 {
            return Err(GridError::ZeroMass);
        }
        let values = raw.values.iter().map(|w| w / mass).collect();
        Ok(Self { axes: raw.axes, values })
    }

    /// Uniform density over the whole grid.
    pub fn uniform(axes: Vec<Axis>) -> Result<Self, GridError> {
        let n = axes.iter().map(Axis::cells).product();
        Self::from_weights(axes, vec![1.0; n])
    }

    fn unchecked(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self, GridError> {
        let expected: usize = axes.iter().map(Axis::cells).product();
        if axes.is_empty() || values.len() != expected {
            return Err(GridError::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(GridError::InvalidValue { index, value });
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure of one cell (product of axis widths).
    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(Axis::width).product()
    }

    /// Midpoint-rule integral of the stored values.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.cell_measure()
    }

    /// Per-axis cell indices of a flat (row-major) index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % axis.cells();
            flat /= axis.cells();
        }
        idx
    }

    /// Cell-center coordinates of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .zip(&self.axes)
            .map(|(i, axis)| axis.center(i))
            .collect()
    }

    /// All cell centers in storage order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Sum with a fixed binary reduction tree.
///
/// The tree depends only on the slice length, so the result is the same
/// whether the values were produced sequentially or in parallel.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}
