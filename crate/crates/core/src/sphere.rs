//! Conditionals of the uniform sphere distribution on a great circle.
//!
//! The great circle is the meridian pair φ = 0 / φ = π, i.e. the
//! intersection of the sphere with the plane y = 0. Two families of
//! shrinking bands around it give two different conditionals:
//!
//! - a [`BandGeometry::Wedge`] (longitude lune |φ| ≤ w) is fibred by
//!   meridians, each parametrized by latitude θ. Its conditional is
//!   cos(θ)/2 on the half meridian at every width w.
//! - a [`BandGeometry::Tube`] (|arcsin(y)| ≤ w) is fibred by circles in
//!   planes parallel to y = 0, each parametrized by its in-plane angle
//!   ψ = atan2(z, x). Its conditional is uniform in ψ at every width w.
//!
//! Members of a band are mapped to the circle along their own fibre, so
//! the finite-width conditional of either family already equals its limit;
//! what survives the limit is the disagreement between the two.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Axis, GridError, GriddedDensity};

/// Standard errors a Monte Carlo bin may deviate from its expectation.
pub const MC_SIGMA_BOUND: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("point (theta={theta}, phi={phi}) outside [-pi/2, pi/2] x [-pi, pi)")]
    InvalidPoint { theta: f64, phi: f64 },
    #[error("half_width must lie in (0, pi/2), got {0}")]
    InvalidHalfWidth(f64),
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("empty band: no sample fell inside the band")]
    EmptyBand,
    #[error("grid [{lo}, {hi}] does not cover the band domain [{domain_lo}, {domain_hi}]")]
    GridDomainMismatch {
        lo: f64,
        hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },
    #[error("grid of {cells} cells too coarse: midpoint mass {mass} misses 1 by more than 1e-9")]
    CoarseGrid { cells: usize, mass: f64 },
    #[error("half_width schedule must be non-empty and strictly decreasing: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A point on the unit sphere: latitude θ ∈ [−π/2, π/2], longitude φ ∈ [−π, π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    theta: f64,
    phi: f64,
}

impl SphericalPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self, SphereError> {
        if !((-FRAC_PI_2..=FRAC_PI_2).contains(&theta) && (-PI..PI).contains(&phi)) {
            return Err(SphereError::InvalidPoint { theta, phi });
        }
        Ok(Self { theta, phi })
    }

    /// Builds the point from a (not necessarily unit) nonzero 3-vector.
    pub fn from_vector([x, y, z]: [f64; 3]) -> Self {
        let r = (x * x + y * y + z * z).sqrt();
        let theta = (z / r).clamp(-1.0, 1.0).asin();
        Self {
            theta,
            phi: wrap_angle(y.atan2(x)),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [ct * cp, ct * sp, st]
    }
}

/// Maps an angle in (−π, π] to [−π, π).
fn wrap_angle(a: f64) -> f64 {
    if a >= PI {
        a - 2.0 * PI
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandGeometry {
    /// Longitude lune around the meridian: limit of meridian sub-σ-algebras.
    Wedge,
    /// Slab between planes parallel to the meridian plane.
    Tube,
}

impl BandGeometry {
    pub fn rival(self) -> Self {
        match self {
            Self::Wedge => Self::Tube,
            Self::Tube => Self::Wedge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleDomain {
    /// The φ = 0 half, coordinate in [−π/2, π/2].
    HalfMeridian,
    /// The whole great circle, coordinate in [−π, π).
    FullCircle,
}

impl CircleDomain {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Self::HalfMeridian => (-FRAC_PI_2, FRAC_PI_2),
            Self::FullCircle => (-PI, PI),
        }
    }

    pub fn length(self) -> f64 {
        let (lo, hi) = self.bounds();
        hi - lo
    }

    /// Equal-width bins over the domain.
    pub fn axis(self, bins: usize) -> Result<Axis, SphereError> {
        let (lo, hi) = self.bounds();
        Ok(Axis::new(lo, hi, bins)?)
    }
}

/// A band of half-width `half_width` (radians) around the great circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreatCircleBand {
    geometry: BandGeometry,
    half_width: f64,
    domain: CircleDomain,
}

impl GreatCircleBand {
    pub fn new(geometry: BandGeometry, half_width: f64, domain: CircleDomain) -> Result<Self, SphereError> {
        if !(half_width > 0.0 && half_width < FRAC_PI_2) {
            return Err(SphereError::InvalidHalfWidth(half_width));
        }
        Ok(Self {
            geometry,
            half_width,
            domain,
        })
    }

    pub fn geometry(&self) -> BandGeometry {
        self.geometry
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn domain(&self) -> CircleDomain {
        self.domain
    }

    /// The band of the other geometry with the same width and domain.
    pub fn rival(&self) -> Self {
        Self {
            geometry: self.geometry.rival(),
            ..*self
        }
    }

    pub fn contains(&self, p: &SphericalPoint) -> bool {
        self.circle_coordinate(p).is_some()
    }

    /// Position on the circle of a band member, following the band's fibres.
    /// `None` when the point lies outside the band.
    pub fn circle_coordinate(&self, p: &SphericalPoint) -> Option<f64> {
        match self.geometry {
            BandGeometry::Wedge => {
                let near = p.phi.abs() <= self.half_width;
                match self.domain {
                    CircleDomain::HalfMeridian => near.then_some(p.theta),
                    CircleDomain::FullCircle => {
                        if near {
                            Some(p.theta)
                        } else if PI - p.phi.abs() <= self.half_width {
                            Some(wrap_angle(p.theta.sin().atan2(-p.theta.cos())))
                        } else {
                            None
                        }
                    }
                }
            }
            BandGeometry::Tube => {
                let [x, y, z] = p.to_unit_vector();
                if y.clamp(-1.0, 1.0).asin().abs() > self.half_width {
                    return None;
                }
                match self.domain {
                    CircleDomain::HalfMeridian => (x >= 0.0).then(|| z.atan2(x)),
                    CircleDomain::FullCircle => Some(wrap_angle(z.atan2(x))),
                }
            }
        }
    }

    /// Exact conditional density of the uniform sphere law on this band,
    /// as a density in the circle coordinate. Zero outside the domain.
    pub fn conditional_density(&self, coord: f64) -> f64 {
        let (lo, hi) = self.domain.bounds();
        if !(lo..=hi).contains(&coord) {
            return 0.0;
        }
        match (self.geometry, self.domain) {
            (BandGeometry::Wedge, CircleDomain::HalfMeridian) => coord.cos() / 2.0,
            (BandGeometry::Wedge, CircleDomain::FullCircle) => coord.cos().abs() / 4.0,
            (BandGeometry::Tube, domain) => 1.0 / domain.length(),
        }
    }

    /// Exact probability that a band member lands in `[a, b]` of the circle coordinate.
    pub fn interval_probability(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.domain.bounds();
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return 0.0;
        }
        match (self.geometry, self.domain) {
            (BandGeometry::Wedge, CircleDomain::HalfMeridian) => (b.sin() - a.sin()) / 2.0,
            (BandGeometry::Wedge, CircleDomain::FullCircle) => abs_cos_integral(a, b) / 4.0,
            (BandGeometry::Tube, domain) => (b - a) / domain.length(),
        }
    }

    /// Bin-averaged conditional density on `axis`.
    pub fn bin_average_density(&self, axis: &Axis) -> Vec<f64> {
        (0..axis.cells())
            .map(|i| {
                let (a, b) = axis.cell_bounds(i);
                self.interval_probability(a, b) / (b - a)
            })
            .collect()
    }
}

/// ∫_a^b |cos t| dt, splitting at the sign changes ±π/2.
fn abs_cos_integral(a: f64, b: f64) -> f64 {
    let mut knots = vec![a];
    knots.extend([-FRAC_PI_2, FRAC_PI_2].into_iter().filter(|&k| a < k && k < b));
    knots.push(b);
    knots.windows(2).map(|w| (w[1].sin() - w[0].sin()).abs()).sum()
}

fn partition_rng(seed: u64, partition: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition as u64);
    rng
}

fn sample_partition(n: usize, seed: u64, partition: usize) -> Vec<SphericalPoint> {
    let mut rng = partition_rng(seed, partition);
    let z_dist = Uniform::new(-1.0, 1.0);
    let phi_dist = Uniform::new(-PI, PI);
    (0..n)
        .map(|_| {
            let z: f64 = z_dist.sample(&mut rng);
            let phi = phi_dist.sample(&mut rng);
            SphericalPoint { theta: z.asin(), phi }
        })
        .collect()
}

/// Draws `n` i.i.d. area-uniform points (z = sin θ uniform, φ uniform).
///
/// Uses ChaCha8 seeded with `seed` on stream 0; identical to
/// [`sample_uniform_sphere_partitioned`] with a single partition.
pub fn sample_uniform_sphere(n: usize, seed: u64) -> Vec<SphericalPoint> {
    sample_partition(n, seed, 0)
}

/// Splits the draw into `partitions` chunks sampled in parallel, chunk `i`
/// on ChaCha8 stream `i`. The first `n % partitions` chunks take one extra
/// point. Output depends only on `(n, seed, partitions)`.
pub fn sample_uniform_sphere_partitioned(n: usize, seed: u64, partitions: usize) -> Vec<SphericalPoint> {
    let partitions = partitions.max(1);
    let (base, extra) = (n / partitions, n % partitions);
    let chunks: Vec<Vec<SphericalPoint>> = (0..partitions)
        .into_par_iter()
        .map(|i| sample_partition(base + usize::from(i < extra), seed, i))
        .collect();
    chunks.concat()
}

/// The exact band conditional evaluated at the cell centers of `grid`.
///
/// `grid` must span the band's domain, and be fine enough that the midpoint
/// rule integrates the density to 1 within 1e−9.
pub fn analytic_band_conditional(band: &GreatCircleBand, grid: &Axis) -> Result<GriddedDensity, SphereError> {
    let (domain_lo, domain_hi) = band.domain.bounds();
    if (grid.lo() - domain_lo).abs() > 1e-12 || (grid.hi() - domain_hi).abs() > 1e-12 {
        return Err(SphereError::GridDomainMismatch {
            lo: grid.lo(),
            hi: grid.hi(),
            domain_lo,
            domain_hi,
        });
    }
    let values = grid
        .centers()
        .into_iter()
        .map(|c| band.conditional_density(c))
        .collect();
    GriddedDensity::new(vec![*grid], values).map_err(|e| match e {
        GridError::NotNormalized { mass } => SphereError::CoarseGrid {
            cells: grid.cells(),
            mass,
        },
        other => other.into(),
    })
}

/// Histogram estimate of a band conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConditional {
    pub density: GriddedDensity,
    pub counts: Vec<u64>,
    pub in_band: u64,
    /// Plug-in binomial standard error of each bin's density.
    pub stderr: Vec<f64>,
}

/// Histograms band members by circle coordinate into `bins` equal bins;
/// density = count / (in-band total × bin width).
pub fn empirical_band_conditional(
    points: &[SphericalPoint],
    band: &GreatCircleBand,
    bins: usize,
) -> Result<EmpiricalConditional, SphereError> {
    if bins < 2 {
        return Err(SphereError::TooFewBins(bins));
    }
    let axis = band.domain.axis(bins)?;
    let counts = points
        .par_chunks(1 << 16)
        .map(|chunk| {
            let mut local = vec![0u64; bins];
            for p in chunk {
                if let Some(i) = band.circle_coordinate(p).and_then(|c| axis.index_of(c)) {
                    local[i] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; bins],
            |mut acc, local| {
                acc.iter_mut().zip(local).for_each(|(a, b)| *a += b);
                acc
            },
        );
    let in_band: u64 = counts.iter().sum();
    if in_band == 0 {
        return Err(SphereError::EmptyBand);
    }
    let n = in_band as f64;
    let width = axis.width();
    let values = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let stderr = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / width
        })
        .collect();
    let density = GriddedDensity::from_weights(vec![axis], values)?;
    Ok(EmpiricalConditional {
        density,
        counts,
        in_band,
        stderr,
    })
}

/// Agreement of a histogram with the exact bin-averaged conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct McAgreement {
    /// Exact bin-averaged density.
    pub expected: Vec<f64>,
    /// Binomial standard error of each bin under the exact law.
    pub stderr: Vec<f64>,
    /// |empirical − expected| / stderr per bin.
    pub z_scores: Vec<f64>,
    /// Fraction of bins with z ≤ [`MC_SIGMA_BOUND`].
    pub fraction_within: f64,
}

pub fn mc_agreement(empirical: &EmpiricalConditional, band: &GreatCircleBand) -> McAgreement {
    let axis = empirical.density.axes()[0];
    let n = empirical.in_band as f64;
    let width = axis.width();
    let expected = band.bin_average_density(&axis);
    let stderr: Vec<f64> = expected
        .iter()
        .map(|&f| {
            let p = f * width;
            (p * (1.0 - p) / n).sqrt() / width
        })
        .collect();
    let z_scores: Vec<f64> = empirical
        .density
        .values()
        .iter()
        .zip(&expected)
        .zip(&stderr)
        .map(|((&e, &f), &se)| {
            let gap = (e - f).abs();
            if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let within = z_scores.iter().filter(|&&z| z <= MC_SIGMA_BOUND).count();
    McAgreement {
        fraction_within: within as f64 / z_scores.len() as f64,
        expected,
        stderr,
        z_scores,
    }
}

/// One level of a band-shrinking study.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub half_width: f64,
    pub in_band: u64,
    /// Exact finite-width conditional at the bin centers.
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    /// sup over bins of |empirical − bin-averaged limit density|.
    pub deviation: f64,
    /// [`MC_SIGMA_BOUND`] times the largest per-bin standard error.
    pub noise_floor: f64,
    /// sup over bins of |empirical − bin-averaged rival limit density|.
    pub rival_gap: f64,
}

/// Shrinks a band through `schedule`, histogramming one shared sample of
/// `samples` uniform points at each level against the limit conditional.
pub fn band_limit_study(
    geometry: BandGeometry,
    domain: CircleDomain,
    schedule: &[f64],
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<Vec<LimitRow>, SphereError> {
    validate_schedule(schedule)?;
    let points = sample_uniform_sphere(samples, seed);
    band_limit_study_on(&points, geometry, domain, schedule, bins)
}

/// [`band_limit_study`] on an existing sample.
pub fn band_limit_study_on(
    points: &[SphericalPoint],
    geometry: BandGeometry,
    domain: CircleDomain,
    schedule: &[f64],
    bins: usize,
) -> Result<Vec<LimitRow>, SphereError> {
    validate_schedule(schedule)?;
    let axis = domain.axis(bins.max(2))?;
    schedule
        .iter()
        .map(|&w| {
            let band = GreatCircleBand::new(geometry, w, domain)?;
            let empirical = empirical_band_conditional(points, &band, bins)?;
            let agreement = mc_agreement(&empirical, &band);
            let rival = band.rival().bin_average_density(&axis);
            let values = empirical.density.values();
            let sup_gap = |target: &[f64]| {
                values
                    .iter()
                    .zip(target)
                    .map(|(e, t)| (e - t).abs())
                    .fold(0.0, f64::max)
            };
            Ok(LimitRow {
                half_width: w,
                in_band: empirical.in_band,
                analytic: axis
                    .centers()
                    .into_iter()
                    .map(|c| band.conditional_density(c))
                    .collect(),
                empirical: values.to_vec(),
                deviation: sup_gap(&agreement.expected),
                noise_floor: MC_SIGMA_BOUND * agreement.stderr.iter().copied().fold(0.0, f64::max),
                rival_gap: sup_gap(&rival),
            })
        })
        .collect()
}

fn validate_schedule(schedule: &[f64]) -> Result<(), SphereError> {
    if schedule.is_empty() {
        return Err(SphereError::InvalidSchedule("empty".into()));
    }
    if let Some(&w) = schedule.iter().find(|w| !(**w > 0.0 && **w < FRAC_PI_2)) {
        return Err(SphereError::InvalidHalfWidth(w));
    }
    if schedule.windows(2).any(|p| p[1] >= p[0]) {
        return Err(SphereError::InvalidSchedule(format!("{schedule:?}")));
    }
    Ok(())
}

/// Sup-norm distance between the wedge and tube conditionals on `domain`,
/// evaluated at the cell centers of `grid`.
pub fn paradox_gap(domain: CircleDomain, grid: &Axis) -> f64 {
    let wedge = GreatCircleBand {
        geometry: BandGeometry::Wedge,
        half_width: 0.1,
        domain,
    };
    let tube = wedge.rival();
    grid.centers()
        .into_iter()
        .map(|c| (wedge.conditional_density(c) - tube.conditional_density(c)).abs())
        .fold(0.0, f64::max)
}
