//! TOML experiment configs.
//!
//! A config names one experiment and carries its parameters under
//! `[params]`. Parsing is strict in two phases: the top level first, then
//! `[params]` against the schema of the named experiment. Unknown keys fail
//! either phase before any computation starts.
//!
//! ```toml
//! experiment = "formulations"
//! output_dir = "out/formulations"   # optional
//! seed = 7                          # optional
//!
//! [params]
//! random_draws = 10000
//!
//! [params.problem]
//! sigma = 0.1
//! d_obs = [0.5, 0.3, 0.3]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{GammaBracket, ParamTransformSpec};
use crate::hierarchy::{LambdaGrid, DEFAULT_LAMBDA_POINTS};
use crate::inversion::{BoxNoise, BoxProblem, LinearForward, ObservedData};
use crate::reparam::TransformSpec;
use crate::sphere::{BandGeometry, CircleDomain};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid params for experiment {experiment}: {message}")]
    Params {
        experiment: ExperimentKind,
        message: String,
    },
    #[error("invalid config: {field} = {value} violates {constraint}")]
    Invalid {
        field: String,
        value: String,
        constraint: String,
    },
}

fn invalid(field: &str, value: impl std::fmt::Debug, constraint: &str) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        value: format!("{value:?}"),
        constraint: constraint.to_string(),
    }
}

fn require(ok: bool, field: &str, value: impl std::fmt::Debug, constraint: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, value, constraint))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sphere,
    Formulations,
    Reparam,
    MapDemo,
    EvidenceDemo,
    Hierarchy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Formulations => "formulations",
            Self::Reparam => "reparam",
            Self::MapDemo => "map_demo",
            Self::EvidenceDemo => "evidence_demo",
            Self::Hierarchy => "hierarchy",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    params: Option<toml::Table>,
}

/// Linear box problem shared by the grid experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemParams {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d_obs: [f64; 3],
    /// Uniform prior box `[[m1_lo, m1_hi], [m2_lo, m2_hi]]`.
    pub prior_bounds: [[f64; 2]; 2],
    pub cells: [usize; 2],
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d_obs: [0.5, 0.3, 0.3],
            prior_bounds: [[0.0, 1.0], [0.0, 1.0]],
            cells: [401, 401],
        }
    }
}

impl ProblemParams {
    fn validate(&self) -> Result<(), ConfigError> {
        require(
            self.sigma > 0.0 && self.sigma.is_finite(),
            "params.problem.sigma",
            self.sigma,
            "sigma > 0",
        )?;
        require(
            self.a != 0.0 && self.a.is_finite(),
            "params.problem.a",
            self.a,
            "a != 0",
        )?;
        require(self.b.is_finite(), "params.problem.b", self.b, "b finite")?;
        require(self.c.is_finite(), "params.problem.c", self.c, "c finite")?;
        require(
            self.b != 0.0 || self.c != 0.0,
            "params.problem.b, params.problem.c",
            (self.b, self.c),
            "b and c not both 0",
        )?;
        require(
            self.d_obs.iter().all(|v| v.is_finite()),
            "params.problem.d_obs",
            self.d_obs,
            "finite entries",
        )?;
        for (k, [lo, hi]) in self.prior_bounds.iter().enumerate() {
            require(
                lo.is_finite() && hi.is_finite() && lo < hi,
                &format!("params.problem.prior_bounds[{k}]"),
                [lo, hi],
                "lo < hi",
            )?;
        }
        require(
            self.cells.iter().all(|&n| n >= 2),
            "params.problem.cells",
            self.cells,
            "cells >= 2 per axis",
        )?;
        Ok(())
    }

    pub fn bounds(&self) -> [(f64, f64); 2] {
        [
            (self.prior_bounds[0][0], self.prior_bounds[0][1]),
            (self.prior_bounds[1][0], self.prior_bounds[1][1]),
        ]
    }

    pub fn problem(&self) -> Result<BoxProblem, crate::inversion::InversionError> {
        Ok(BoxProblem::new(
            LinearForward::new(self.a, self.b, self.c)?,
            BoxNoise::new(self.sigma)?,
            ObservedData::new(self.d_obs)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereParams {
    pub geometry: BandGeometry,
    pub domain: CircleDomain,
    /// Band used for the histogram check and the CSV.
    pub half_width: f64,
    pub samples: usize,
    pub bins: usize,
    /// Decreasing half-widths for the shrinking study.
    pub schedule: Vec<f64>,
    /// Parallel sampling streams; part of the sample's identity.
    pub partitions: usize,
    /// Fine grid on which the analytic conditional's normalization is checked.
    pub analytic_cells: usize,
    /// Minimum fraction of bins within the Monte Carlo error bound.
    pub min_fraction_within: f64,
}

impl Default for SphereParams {
    fn default() -> Self {
        Self {
            geometry: BandGeometry::Wedge,
            domain: CircleDomain::HalfMeridian,
            half_width: 0.05,
            samples: 1_000_000,
            bins: 36,
            schedule: vec![0.4, 0.2, 0.1, 0.05],
            partitions: 8,
            analytic_cells: 100_000,
            min_fraction_within: 0.95,
        }
    }
}

impl SphereParams {
    fn validate(&self) -> Result<(), ConfigError> {
        let hw = |w: f64| w > 0.0 && w < std::f64::consts::FRAC_PI_2;
        require(
            hw(self.half_width),
            "params.half_width",
            self.half_width,
            "0 < half_width < pi/2",
        )?;
        require(self.samples > 0, "params.samples", self.samples, "samples > 0")?;
        require(self.bins >= 2, "params.bins", self.bins, "bins >= 2")?;
        require(
            !self.schedule.is_empty(),
            "params.schedule",
            &self.schedule,
            "non-empty",
        )?;
        require(
            self.schedule.iter().all(|&w| hw(w)),
            "params.schedule",
            &self.schedule,
            "0 < half_width < pi/2",
        )?;
        require(
            self.schedule.windows(2).all(|p| p[1] < p[0]),
            "params.schedule",
            &self.schedule,
            "strictly decreasing",
        )?;
        require(
            self.partitions >= 1,
            "params.partitions",
            self.partitions,
            "partitions >= 1",
        )?;
        require(
            self.analytic_cells >= 2,
            "params.analytic_cells",
            self.analytic_cells,
            "analytic_cells >= 2",
        )?;
        require(
            (0.0..=1.0).contains(&self.min_fraction_within),
            "params.min_fraction_within",
            self.min_fraction_within,
            "0 <= min_fraction_within <= 1",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormulationsParams {
    pub problem: ProblemParams,
    /// Random (m, d_obs, σ, a, b, c) draws compared outside the grid.
    pub random_draws: usize,
}

impl Default for FormulationsParams {
    fn default() -> Self {
        Self {
            problem: ProblemParams::default(),
            random_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReparamParams {
    pub problem: ProblemParams,
    pub transform: TransformSpec,
    /// y₁ values at which the Jacobian is checked by finite differences.
    pub fd_probes: Vec<f64>,
    /// Random points of P(σ) for the closed-form comparison.
    pub closed_form_points: usize,
}

impl Default for ReparamParams {
    fn default() -> Self {
        Self {
            problem: ProblemParams {
                cells: [201, 201],
                ..ProblemParams::default()
            },
            transform: TransformSpec::TanD1 {},
            fd_probes: vec![0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0],
            closed_form_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapDemoParams {
    /// Beta(alpha, beta)-shaped posterior on [0, 1].
    pub alpha: f64,
    pub beta: f64,
    pub cells: usize,
    pub transforms: Vec<ParamTransformSpec>,
    /// Displacement, in cells, that non-affine transforms must exceed.
    pub min_nonlinear_displacement_cells: f64,
}

impl Default for MapDemoParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 5.0,
            cells: 2001,
            transforms: vec![
                ParamTransformSpec::Power { exponent: 3.0 },
                ParamTransformSpec::Affine { scale: 2.0, shift: 1.0 },
            ],
            min_nonlinear_displacement_cells: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvidenceDemoParams {
    pub problem: ProblemParams,
    pub targets: Vec<f64>,
    pub gamma_bracket: GammaBracket,
    /// Relative tolerance on achieved ratios.
    pub ratio_rtol: f64,
    /// Tolerance on the ratio when the target is exactly 1.
    pub identity_atol: f64,
}

impl Default for EvidenceDemoParams {
    fn default() -> Self {
        Self {
            problem: ProblemParams::default(),
            targets: vec![0.1, 1.0, 10.0],
            gamma_bracket: GammaBracket::default(),
            ratio_rtol: 0.05,
            identity_atol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HierarchyParams {
    pub y: f64,
    pub sigma: f64,
    pub k_list: Vec<f64>,
    /// Upper end of the λ grid; defaults to 10 (|y| + σ) / |k| per k.
    pub lambda_max: Option<f64>,
    pub lambda_points: usize,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self {
            y: 2.0,
            sigma: 1.0,
            k_list: vec![1.0, 2.0, 5.0],
            lambda_max: None,
            lambda_points: DEFAULT_LAMBDA_POINTS,
        }
    }
}

impl HierarchyParams {
    pub fn grid(&self) -> LambdaGrid {
        LambdaGrid {
            max: self.lambda_max,
            points: self.lambda_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    Sphere(SphereParams),
    Formulations(FormulationsParams),
    Reparam(ReparamParams),
    MapDemo(MapDemoParams),
    EvidenceDemo(EvidenceDemoParams),
    Hierarchy(HierarchyParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub params: ExperimentParams,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let table = raw.params.unwrap_or_default();
        let kind = raw.experiment;
        let params = parse_params(kind, table)?;
        let config = Self {
            experiment: kind,
            output_dir: raw.output_dir,
            seed: raw.seed,
            params,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Defaults for `kind`, as if `[params]` were empty.
    pub fn default_for(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            output_dir: None,
            seed: None,
            params: parse_params(kind, toml::Table::new()).expect("defaults parse"),
        }
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Checks every numeric field against the preconditions of the module
    /// that will consume it.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.params {
            ExperimentParams::Sphere(p) => p.validate(),
            ExperimentParams::Formulations(p) => p.problem.validate(),
            ExperimentParams::Reparam(p) => {
                p.problem.validate()?;
                if let TransformSpec::PowerD1 { gamma, anchor } = p.transform {
                    require(
                        gamma > 0.0 && gamma.is_finite(),
                        "params.transform.gamma",
                        gamma,
                        "gamma > 0",
                    )?;
                    require(
                        anchor > 0.0 && anchor.is_finite(),
                        "params.transform.anchor",
                        anchor,
                        "anchor > 0",
                    )?;
                }
                require(
                    p.fd_probes.iter().all(|v| v.is_finite()),
                    "params.fd_probes",
                    &p.fd_probes,
                    "finite entries",
                )
            }
            ExperimentParams::MapDemo(p) => {
                require(
                    p.alpha > 1.0 && p.alpha.is_finite(),
                    "params.alpha",
                    p.alpha,
                    "alpha > 1",
                )?;
                require(p.beta > 1.0 && p.beta.is_finite(), "params.beta", p.beta, "beta > 1")?;
                require(p.cells >= 3, "params.cells", p.cells, "cells >= 3")?;
                require(
                    !p.transforms.is_empty(),
                    "params.transforms",
                    &p.transforms,
                    "non-empty",
                )?;
                for (i, t) in p.transforms.iter().enumerate() {
                    match *t {
                        ParamTransformSpec::Identity {} => {}
                        ParamTransformSpec::Affine { scale, shift } => require(
                            scale != 0.0 && scale.is_finite() && shift.is_finite(),
                            &format!("params.transforms[{i}].scale"),
                            scale,
                            "scale != 0",
                        )?,
                        ParamTransformSpec::Power { exponent } => require(
                            exponent > 0.0 && exponent.is_finite(),
                            &format!("params.transforms[{i}].exponent"),
                            exponent,
                            "exponent > 0",
                        )?,
                    }
                }
                require(
                    p.min_nonlinear_displacement_cells >= 0.0,
                    "params.min_nonlinear_displacement_cells",
                    p.min_nonlinear_displacement_cells,
                    ">= 0",
                )
            }
            ExperimentParams::EvidenceDemo(p) => {
                p.problem.validate()?;
                require(!p.targets.is_empty(), "params.targets", &p.targets, "non-empty")?;
                require(
                    p.targets.iter().all(|&t| t > 0.0 && t.is_finite()),
                    "params.targets",
                    &p.targets,
                    "target > 0",
                )?;
                let b = p.gamma_bracket;
                require(
                    b.lo > 0.0 && b.lo < b.hi && b.hi.is_finite(),
                    "params.gamma_bracket",
                    b,
                    "0 < lo < hi",
                )?;
                require(p.ratio_rtol > 0.0, "params.ratio_rtol", p.ratio_rtol, "ratio_rtol > 0")?;
                require(
                    p.identity_atol > 0.0,
                    "params.identity_atol",
                    p.identity_atol,
                    "identity_atol > 0",
                )?;
                let d1 = p.problem.d_obs[0].abs();
                require(
                    d1 > p.problem.sigma,
                    "params.problem.d_obs[0]",
                    p.problem.d_obs[0],
                    "|d_obs[0]| > sigma",
                )
            }
            ExperimentParams::Hierarchy(p) => {
                require(p.y.is_finite(), "params.y", p.y, "y finite")?;
                require(
                    p.sigma > 0.0 && p.sigma.is_finite(),
                    "params.sigma",
                    p.sigma,
                    "sigma > 0",
                )?;
                require(!p.k_list.is_empty(), "params.k_list", &p.k_list, "non-empty")?;
                for (i, &k) in p.k_list.iter().enumerate() {
                    require(k != 0.0 && k.is_finite(), "params.k_list", &p.k_list, "k != 0")?;
                    require(
                        !p.k_list[..i].contains(&k),
                        "params.k_list",
                        &p.k_list,
                        "distinct entries",
                    )?;
                }
                if let Some(max) = p.lambda_max {
                    require(max > 0.0 && max.is_finite(), "params.lambda_max", max, "lambda_max > 0")?;
                }
                require(
                    p.lambda_points >= 3,
                    "params.lambda_points",
                    p.lambda_points,
                    "lambda_points >= 3",
                )
            }
        }
    }
}

fn parse_params(kind: ExperimentKind, table: toml::Table) -> Result<ExperimentParams, ConfigError> {
    let value = toml::Value::Table(table);
    let err = |e: toml::de::Error| ConfigError::Params {
        experiment: kind,
        message: e.to_string(),
    };
    Ok(match kind {
        ExperimentKind::Sphere => ExperimentParams::Sphere(value.try_into().map_err(err)?),
        ExperimentKind::Formulations => ExperimentParams::Formulations(value.try_into().map_err(err)?),
        ExperimentKind::Reparam => ExperimentParams::Reparam(value.try_into().map_err(err)?),
        ExperimentKind::MapDemo => ExperimentParams::MapDemo(value.try_into().map_err(err)?),
        ExperimentKind::EvidenceDemo => ExperimentParams::EvidenceDemo(value.try_into().map_err(err)?),
        ExperimentKind::Hierarchy => ExperimentParams::Hierarchy(value.try_into().map_err(err)?),
    })
}
