//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines show up in `cargo test`
//! output. Exits nonzero if any criterion fails. Expected values come from
//! closed forms computed here, not from the library.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use condlab::estimators::{
    evidence_targeting_transform, map_noninvariance_demo, AffineParam, GammaBracket, IdentityParam, PowerParam,
};
use condlab::experiment::{self, ExperimentConfig, ExperimentKind, RunOptions};
use condlab::grid::{Axis, GriddedDensity};
use condlab::hierarchy::{acausality_report, empirical_bayes_fit, LambdaGrid};
use condlab::inversion::{
    as_param, evaluate_on_grid, posterior_from_likelihood, uniform_prior_2d, BoxNoise, BoxProblem, LinearForward,
    ObservedData,
};
use condlab::reparam::{jacobian_fd_check, transformed_likelihood, DataTransform, TanD1, TransformedForward};
use condlab::sphere::{
    analytic_band_conditional, empirical_band_conditional, sample_uniform_sphere_partitioned, BandGeometry,
    CircleDomain, GreatCircleBand, SphericalPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

// Criterion 1
const WEDGE_POINTWISE_TOL: f64 = 1e-12;
const TUBE_LIMIT_TOL: f64 = 1e-4;
const TUBE_LIMIT_HALF_WIDTH: f64 = 1e-3;
const MC_SAMPLES: usize = 10_000_000;
const MC_HALF_WIDTH: f64 = 0.01;
const MC_BINS: usize = 36;
const MC_Z_BOUND: f64 = 5.0;
const MC_MIN_FRACTION: f64 = 0.95;
const ANALYTIC_CELLS: usize = 100_000;
const C1_RUNTIME: Duration = Duration::from_secs(60);
// Criterion 2
const RANDOM_DRAWS: usize = 10_000;
const GRID_CELLS: usize = 401;
const C2_RUNTIME: Duration = Duration::from_secs(10);
// Criterion 3
const CLOSED_FORM_POINTS: usize = 10_000;
const CLOSED_FORM_TOL: f64 = 1e-9;
const C3_RUNTIME: Duration = Duration::from_secs(5);
// Criterion 4
const FD_REL_TOL: f64 = 1e-6;
const EXACT_JACOBIAN_TOL: f64 = 1e-15;
// Criterion 5
const FIELD_REL_TOL: f64 = 1e-6;
// Criterion 6
const MAP_CELLS: usize = 2001;
const NONLINEAR_MIN_CELLS: f64 = 5.0;
const AFFINE_MAX_CELLS: f64 = 1.0;
// Criterion 7
const TARGET_RTOL: f64 = 0.05;
const IDENTITY_TARGET_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn box_problem(d_obs: [f64; 3]) -> BoxProblem {
    BoxProblem::new(
        LinearForward::new(1.0, 1.0, 1.0).unwrap(),
        BoxNoise::new(0.1).unwrap(),
        ObservedData::new(d_obs).unwrap(),
    )
}

/// Bin index of `x` among `bins` equal bins of [lo, hi]; the right end is
/// closed.
fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(lo..=hi).contains(&x) {
        return None;
    }
    Some((((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1))
}

/// Fraction of bins whose count is within `MC_Z_BOUND` binomial standard
/// errors of `total × prob`.
fn fraction_within(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let ok = counts
        .iter()
        .zip(probs)
        .filter(|(&c, &p)| {
            let se = (n * p * (1.0 - p)).sqrt();
            (c as f64 - n * p).abs() <= MC_Z_BOUND * se
        })
        .count();
    ok as f64 / counts.len() as f64
}

fn criterion_1(points: &[SphericalPoint]) -> Outcome {
    let hm = CircleDomain::HalfMeridian;
    let fine_hm = hm.axis(ANALYTIC_CELLS).unwrap();
    let mut wedge_err = 0.0f64;
    for w in [0.5, 0.1, MC_HALF_WIDTH, TUBE_LIMIT_HALF_WIDTH] {
        let band = GreatCircleBand::new(BandGeometry::Wedge, w, hm).unwrap();
        let d = analytic_band_conditional(&band, &fine_hm).map_err(|e| e.to_string())?;
        for (c, v) in fine_hm.centers().iter().zip(d.values()) {
            wedge_err = wedge_err.max((v - c.cos() / 2.0).abs());
        }
    }
    ensure(wedge_err <= WEDGE_POINTWISE_TOL, || {
        format!("wedge off cos/2 by {wedge_err:e}")
    })?;

    let fc = CircleDomain::FullCircle;
    let fine_fc = fc.axis(ANALYTIC_CELLS).unwrap();
    let tube = GreatCircleBand::new(BandGeometry::Tube, TUBE_LIMIT_HALF_WIDTH, fc).unwrap();
    let d = analytic_band_conditional(&tube, &fine_fc).map_err(|e| e.to_string())?;
    let uniform = 1.0 / (2.0 * PI);
    let tube_err = d.values().iter().map(|v| (v - uniform).abs()).fold(0.0, f64::max);
    ensure(tube_err <= TUBE_LIMIT_TOL, || {
        format!("tube off 1/(2 pi) by {tube_err:e}")
    })?;

    // Wedge on the half meridian: members have |phi| <= w, coordinate theta,
    // exact bin probability (sin b - sin a) / 2.
    let mut wedge_counts = vec![0u64; MC_BINS];
    // Tube on the full circle: |asin(y)| <= w, coordinate atan2(z, x),
    // uniform bin probability.
    let mut tube_counts = vec![0u64; MC_BINS];
    for p in points {
        let (t, f) = (p.theta(), p.phi());
        if f.abs() <= MC_HALF_WIDTH {
            if let Some(i) = bin_of(t, -FRAC_PI_2, FRAC_PI_2, MC_BINS) {
                wedge_counts[i] += 1;
            }
        }
        let (x, y, z) = (t.cos() * f.cos(), t.cos() * f.sin(), t.sin());
        if y.clamp(-1.0, 1.0).asin().abs() <= MC_HALF_WIDTH {
            let mut psi = z.atan2(x);
            if psi >= PI {
                psi -= 2.0 * PI;
            }
            if let Some(i) = bin_of(psi, -PI, PI, MC_BINS) {
                tube_counts[i] += 1;
            }
        }
    }
    let width = PI / MC_BINS as f64;
    let wedge_probs: Vec<f64> = (0..MC_BINS)
        .map(|i| {
            let a = -FRAC_PI_2 + i as f64 * width;
            ((a + width).sin() - a.sin()) / 2.0
        })
        .collect();
    let tube_probs = vec![1.0 / MC_BINS as f64; MC_BINS];
    let fw = fraction_within(&wedge_counts, &wedge_probs);
    let ft = fraction_within(&tube_counts, &tube_probs);

    let lib_wedge = GreatCircleBand::new(BandGeometry::Wedge, MC_HALF_WIDTH, hm).unwrap();
    let lib_tube = GreatCircleBand::new(BandGeometry::Tube, MC_HALF_WIDTH, fc).unwrap();
    let ew = empirical_band_conditional(points, &lib_wedge, MC_BINS).map_err(|e| e.to_string())?;
    let et = empirical_band_conditional(points, &lib_tube, MC_BINS).map_err(|e| e.to_string())?;
    ensure(ew.counts == wedge_counts, || {
        "library wedge histogram disagrees with direct count".into()
    })?;
    ensure(et.counts == tube_counts, || {
        "library tube histogram disagrees with direct count".into()
    })?;
    ensure(fw >= MC_MIN_FRACTION && ft >= MC_MIN_FRACTION, || {
        format!("bins within {MC_Z_BOUND} se: wedge {fw}, tube {ft}")
    })?;
    Ok(format!(
        "wedge max err {wedge_err:.1e}, tube max err {tube_err:.1e}, MC bins within 5 se: wedge {:.0}% ({} in band), tube {:.0}% ({} in band)",
        fw * 100.0,
        ew.in_band,
        ft * 100.0,
        et.in_band
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for _ in 0..RANDOM_DRAWS {
        let sigma = rng.gen_range(0.01..0.5);
        let coef = |r: &mut ChaCha8Rng| r.gen_range(0.1..2.0) * if r.gen::<bool>() { -1.0 } else { 1.0 };
        let (a, b, c) = (coef(&mut rng), coef(&mut rng), coef(&mut rng));
        let m = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let d = [
            a * m[1] + rng.gen_range(-1.5 * sigma..1.5 * sigma),
            b * m[0] + rng.gen_range(-1.5 * sigma..1.5 * sigma),
            c * m[0] + rng.gen_range(-1.5 * sigma..1.5 * sigma),
        ];
        let p = BoxProblem::new(
            LinearForward::new(a, b, c).unwrap(),
            BoxNoise::new(sigma).unwrap(),
            ObservedData::new(d).unwrap(),
        );
        let (l1, l2) = (p.likelihood_form1(&m), p.likelihood_form2(&m));
        nonzero += usize::from(l1 > 0.0);
        worst = worst.max((l1 - l2).abs());
    }
    ensure(worst == 0.0, || format!("max |L1 - L2| = {worst:e}"))?;
    ensure(nonzero > RANDOM_DRAWS / 10, || {
        format!("only {nonzero} draws hit the support")
    })?;

    let p = box_problem([0.5, 0.3, 0.3]);
    let prior = uniform_prior_2d([(0.0, 1.0), (0.0, 1.0)], [GRID_CELLS, GRID_CELLS]).unwrap();
    let l1 = evaluate_on_grid(&prior, |m| p.likelihood_form1(&as_param(m)));
    let l2 = evaluate_on_grid(&prior, |m| p.likelihood_form2(&as_param(m)));
    let p1 = posterior_from_likelihood(&prior, l1).unwrap();
    let p2 = posterior_from_likelihood(&prior, l2).unwrap();
    let identical = p1
        .posterior
        .values()
        .iter()
        .zip(p2.posterior.values())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(identical && p1.evidence.to_bits() == p2.evidence.to_bits(), || {
        "posterior grids differ".into()
    })?;
    Ok(format!(
        "max |L1 - L2| = 0 over {RANDOM_DRAWS} draws ({nonzero} in support); {GRID_CELLS}x{GRID_CELLS} posteriors bitwise identical"
    ))
}

fn tan_likelihood(p: &BoxProblem, m: &[f64; 2]) -> f64 {
    let tf = TransformedForward {
        base: p.forward,
        transform: &TanD1,
    };
    let y_obs = TanD1.map(p.data.values()).unwrap();
    transformed_likelihood(m, &y_obs, &p.noise, &tf).unwrap()
}

fn criterion_3() -> Outcome {
    let p = box_problem([0.5, 0.3, 0.3]);
    // P(sigma) = [0.2, 0.4] x [0.4, 0.6] for this problem.
    let peak = 1.0 / (0.2f64).powi(3);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut inside = 0.0f64;
    for _ in 0..CLOSED_FORM_POINTS {
        let m = [rng.gen_range(0.2..0.4), rng.gen_range(0.4..0.6)];
        if m[0] == 0.2 || m[1] == 0.4 {
            continue;
        }
        inside = inside.max((tan_likelihood(&p, &m) - peak * m[1].cos().powi(2)).abs());
    }
    let mut outside = 0.0f64;
    let mut tested = 0;
    while tested < CLOSED_FORM_POINTS {
        let m = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let near = |x: f64, lo: f64, hi: f64| x >= lo - 1e-9 && x <= hi + 1e-9;
        if near(m[0], 0.2, 0.4) && near(m[1], 0.4, 0.6) {
            continue;
        }
        outside = outside.max(tan_likelihood(&p, &m).abs());
        tested += 1;
    }
    ensure(inside <= CLOSED_FORM_TOL, || format!("inside P: max error {inside:e}"))?;
    ensure(outside == 0.0, || format!("outside P: max value {outside:e}"))?;

    let q = box_problem([FRAC_PI_4, 0.3, 0.3]);
    let v = tan_likelihood(&q, &[0.3, FRAC_PI_4]);
    ensure((v - 62.5).abs() <= CLOSED_FORM_TOL, || {
        format!("value at a m2 = pi/4 is {v}")
    })?;
    Ok(format!(
        "max error on P(sigma) {inside:.1e} over {CLOSED_FORM_POINTS} points, 0 outside, value at a m2 = pi/4: {v}"
    ))
}

fn criterion_4() -> Outcome {
    let mut worst_fd = 0.0f64;
    let mut worst_exact = 0.0f64;
    for (y1, exact) in [(0.0, 1.0), (0.5, 0.8), (1.0, 0.5), (2.0, 0.2)] {
        for s in [1.0, -1.0] {
            let y = [s * y1, 0.3, -0.2];
            worst_fd = worst_fd.max(jacobian_fd_check(&TanD1, &[y]).map_err(|e| e.to_string())?);
            let got = TanD1.inv_jac_det(&y).map_err(|e| e.to_string())?;
            worst_exact = worst_exact.max((got - exact).abs());
        }
    }
    ensure(worst_fd <= FD_REL_TOL, || {
        format!("finite-difference relative error {worst_fd:e}")
    })?;
    ensure(worst_exact <= EXACT_JACOBIAN_TOL, || {
        format!("exact values off by {worst_exact:e}")
    })?;
    Ok(format!(
        "max FD relative error {worst_fd:.1e}; values 1, 0.8, 0.5, 0.2 reproduced within {worst_exact:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    let p = box_problem([0.5, 0.3, 0.3]);
    let prior = uniform_prior_2d([(0.0, 1.0), (0.0, 1.0)], [GRID_CELLS, GRID_CELLS]).unwrap();
    let original =
        posterior_from_likelihood(&prior, evaluate_on_grid(&prior, |m| p.likelihood_form1(&as_param(m)))).unwrap();
    let transformed =
        posterior_from_likelihood(&prior, evaluate_on_grid(&prior, |m| tan_likelihood(&p, &as_param(m)))).unwrap();
    let mut scaled = Vec::new();
    for (i, (&a, &b)) in original
        .posterior
        .values()
        .iter()
        .zip(transformed.posterior.values())
        .enumerate()
    {
        ensure((a > 0.0) == (b > 0.0), || format!("supports differ at cell {i}"))?;
        if a > 0.0 {
            let m2 = prior.point(i)[1];
            scaled.push(b / a / m2.cos().powi(2));
        }
    }
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    ensure(spread <= FIELD_REL_TOL, || {
        format!("ratio / cos^2 varies by {spread:e}")
    })?;
    Ok(format!(
        "ratio / cos^2(a m2) constant to {spread:.1e} (relative) over {} cells of P(sigma); constant = {lo:.6}",
        scaled.len()
    ))
}

fn criterion_6() -> Outcome {
    let axis = Axis::new(0.0, 1.0, MAP_CELLS).unwrap();
    let w: Vec<f64> = axis.centers().iter().map(|m| m * (1.0 - m).powi(4)).collect();
    let post = GriddedDensity::from_weights(vec![axis], w).unwrap();
    let cubic = map_noninvariance_demo(&post, &[&PowerParam { exponent: 3.0 }]).map_err(|e| e.to_string())?;
    // In m' = m^3 the density is proportional to m'^(-1/3) (1 - m'^(1/3))^4,
    // decreasing on (0, 1]: its mode is at the left edge.
    ensure(cubic.mapped_back[0] <= axis.width(), || {
        format!(
            "transformed MAP maps back to {}, not the left edge",
            cubic.mapped_back[0]
        )
    })?;
    ensure(cubic.displacement_cells > NONLINEAR_MIN_CELLS, || {
        format!("cubic displacement {} cells", cubic.displacement_cells)
    })?;
    let mut affine_worst = 0.0f64;
    let affine = AffineParam { scale: 2.0, shift: 1.0 };
    for t in [&affine as &dyn condlab::estimators::ParameterTransform, &IdentityParam] {
        let d = map_noninvariance_demo(&post, &[t]).map_err(|e| e.to_string())?;
        affine_worst = affine_worst.max(d.displacement_cells);
    }
    ensure(affine_worst <= AFFINE_MAX_CELLS, || {
        format!("affine displacement {affine_worst} cells")
    })?;
    Ok(format!(
        "cubic displacement {:.1} cells, affine/identity {affine_worst:.1e} cells",
        cubic.displacement_cells
    ))
}

/// Evidence ratio of the power family with anchor 0.4 on the sigma = 0.1
/// problem: (1/0.2) ∫_{0.4}^{0.6} (1/γ) (x/0.4)^(1−γ) dx.
fn power_ratio_closed_form(gamma: f64) -> f64 {
    if (gamma - 2.0).abs() < 1e-12 {
        return 2.0 * 1.5f64.ln() / gamma;
    }
    2.0 * (1.5f64.powf(2.0 - gamma) - 1.0) / (gamma * (2.0 - gamma))
}

fn criterion_7() -> Outcome {
    let p = box_problem([0.5, 0.3, 0.3]);
    let prior = uniform_prior_2d([(0.0, 1.0), (0.0, 1.0)], [GRID_CELLS, GRID_CELLS]).unwrap();
    let mut parts = Vec::new();
    for target in [0.1, 1.0, 10.0] {
        let hit = evidence_targeting_transform(&p, &prior, target, GammaBracket { lo: 0.1, hi: 10.0 })
            .map_err(|e| format!("target {target}: {e}"))?;
        let r = hit.achieved_ratio;
        if target == 1.0 {
            ensure((r - 1.0).abs() <= IDENTITY_TARGET_TOL, || {
                format!("identity target gave {r}")
            })?;
        } else {
            ensure((r / target - 1.0).abs() <= TARGET_RTOL, || {
                format!("target {target} gave {r}")
            })?;
        }
        let oracle = power_ratio_closed_form(hit.transform.gamma());
        ensure((oracle / target - 1.0).abs() <= TARGET_RTOL, || {
            format!(
                "target {target}: closed-form ratio at gamma {} is {oracle}",
                hit.transform.gamma()
            )
        })?;
        parts.push(format!("{target} -> {r:.4} (gamma {:.4})", hit.transform.gamma()));
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Outcome {
    let grid = LambdaGrid::default();
    let f1 = empirical_bayes_fit(2.0, 1.0, 1.0, &grid).map_err(|e| e.to_string())?;
    let f2 = empirical_bayes_fit(2.0, 2.0, 1.0, &grid).map_err(|e| e.to_string())?;
    let sqrt3 = 3f64.sqrt();
    ensure((f1.lambda_hat - sqrt3).abs() <= f1.grid_step, || {
        format!("lambda_hat(1) = {}", f1.lambda_hat)
    })?;
    ensure((f2.lambda_hat - sqrt3 / 2.0).abs() <= f2.grid_step, || {
        format!("lambda_hat(2) = {}", f2.lambda_hat)
    })?;
    let ratio_gap = (f1.lambda_hat - 2.0 * f2.lambda_hat).abs();
    ensure(ratio_gap <= f1.grid_step, || {
        format!(
            "lambda_hat(1) - 2 lambda_hat(2) = {ratio_gap:e} exceeds one cell {}",
            f1.grid_step
        )
    })?;

    let rows = acausality_report(2.0, 1.0, &[1.0, 2.0, 5.0], &grid).map_err(|e| e.to_string())?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.k.abs() * r.fit.lambda_hat).collect();
    let spread =
        scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max) - scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let cell = rows.iter().map(|r| r.k.abs() * r.fit.grid_step).fold(0.0, f64::max);
    ensure(spread <= cell, || {
        format!("|k| lambda_hat spread {spread:e} > cell {cell:e}")
    })?;

    let b = empirical_bayes_fit(0.5, 1.0, 1.0, &grid).map_err(|e| e.to_string())?;
    ensure(b.lambda_hat == 0.0 && b.at_boundary, || {
        format!("boundary case gave {b:?}")
    })?;
    Ok(format!(
        "lambda_hat(1)/lambda_hat(2) = {:.6}, |k| lambda_hat spread {spread:.1e} (cell {cell:.1e}), y = 0.5 -> 0 with flag",
        f1.lambda_hat / f2.lambda_hat
    ))
}

fn run_all(dir: &Path) -> Result<(), String> {
    for kind in [
        ExperimentKind::Sphere,
        ExperimentKind::Formulations,
        ExperimentKind::Reparam,
        ExperimentKind::MapDemo,
        ExperimentKind::EvidenceDemo,
        ExperimentKind::Hierarchy,
    ] {
        let options = RunOptions {
            seed: Some(SEED),
            output_dir: Some(dir.join(kind.name())),
        };
        experiment::run(&ExperimentConfig::default_for(kind), &options).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all(a.path())?;
    run_all(b.path())?;
    let mut compared = 0;
    for entry in walk(a.path()) {
        let rel = entry.strip_prefix(a.path()).unwrap();
        let other = b.path().join(rel);
        if rel.ends_with(experiment::MANIFEST_FILE) {
            let strip = |p: &Path| {
                let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap();
                v["wall_clock_seconds"] = serde_json::Value::Null;
                v["config"]["output_dir"] = serde_json::Value::Null;
                v
            };
            ensure(strip(&entry) == strip(&other), || format!("{} differs", rel.display()))?;
        } else {
            let (x, y) = (
                std::fs::read(&entry).unwrap(),
                std::fs::read(&other).map_err(|e| e.to_string())?,
            );
            ensure(x == y, || format!("{} differs", rel.display()))?;
        }
        compared += 1;
    }
    ensure(compared > 6, || format!("only {compared} files produced"))?;
    Ok(format!(
        "{compared} files from two runs of all six experiments identical (manifests up to wall-clock and output path)"
    ))
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn report(n: usize, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut outcome = f();
    let elapsed = start.elapsed();
    if let (Ok(_), Some(limit)) = (&outcome, budget) {
        if elapsed > limit {
            outcome = Err(format!("took {elapsed:.2?}, budget {limit:?}"));
        }
    }
    match &outcome {
        Ok(detail) => println!("criterion {n} ({title}): PASS [{elapsed:.2?}] {detail}"),
        Err(why) => println!("criterion {n} ({title}): FAIL [{elapsed:.2?}] {why}"),
    }
    outcome.is_ok()
}

fn main() {
    // `cargo test -- --list` and similar harness probes.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let points = sample_uniform_sphere_partitioned(MC_SAMPLES, SEED, 8);
    let sampling = start.elapsed();
    let results = [
        report(
            1,
            "Borel-Kolmogorov gap",
            Some(C1_RUNTIME.saturating_sub(sampling)),
            || criterion_1(&points),
        ),
        report(2, "formulation equality", Some(C2_RUNTIME), criterion_2),
        report(3, "transformed likelihood closed form", Some(C3_RUNTIME), criterion_3),
        report(4, "Jacobian validation", None, criterion_4),
        report(5, "posterior non-invariance field identity", None, criterion_5),
        report(6, "MAP non-invariance", None, criterion_6),
        report(7, "evidence targeting", None, criterion_7),
        report(8, "acausality", None, criterion_8),
        report(9, "determinism", None, criterion_9),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed ({MC_SAMPLES} sphere samples drawn in {sampling:.2?})",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
