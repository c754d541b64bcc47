use condlab::estimators::{
    bayes_factor, map_estimate, map_noninvariance_demo, parameter_fd_check, AffineParam, PowerParam,
};
use condlab::grid::{Axis, GriddedDensity};
use condlab::inversion::{BoxNoise, BoxProblem, LinearForward, ObservedData};
use condlab::reparam::{jacobian_fd_check, round_trip_error, DataTransform, PowerD1, TanD1};
use condlab::sphere::{analytic_band_conditional, BandGeometry, CircleDomain, GreatCircleBand};
use proptest::prelude::*;

fn coef() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..-0.05f64, 0.05..3.0f64]
}

prop_compose! {
    fn problem_and_point()(
        a in coef(), b in coef(), c in coef(), sigma in 0.01..1.0f64,
        m in prop::array::uniform2(-2.0..2.0f64),
        d in prop::array::uniform3(-3.0..3.0f64),
    ) -> (BoxProblem, [f64; 2]) {
        let p = BoxProblem::new(
            LinearForward::new(a, b, c).unwrap(),
            BoxNoise::new(sigma).unwrap(),
            ObservedData::new(d).unwrap(),
        );
        (p, m)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn formulations_agree_bitwise((p, m) in problem_and_point()) {
        prop_assert_eq!(p.likelihood_form1(&m).to_bits(), p.likelihood_form2(&m).to_bits());
    }

    #[test]
    fn likelihood_positive_exactly_on_support((p, m) in problem_and_point()) {
        prop_assert_eq!(p.likelihood_form1(&m) > 0.0, p.support().contains(&m));
    }

    #[test]
    fn near_support_points_agree((p, m) in problem_and_point(), t in prop::array::uniform3(-1.2..1.2f64)) {
        // Observe data close to g(m) so both in- and out-of-support cases occur.
        let g = p.forward.apply(&m);
        let s = p.noise.sigma();
        let d = [g[0] + t[0] * s, g[1] + t[1] * s, g[2] + t[2] * s];
        let q = BoxProblem::new(p.forward, p.noise, ObservedData::new(d).unwrap());
        let inside = t.iter().all(|v| v.abs() <= 1.0);
        prop_assert_eq!(q.likelihood_form1(&m) > 0.0, inside);
        prop_assert_eq!(q.likelihood_form1(&m).to_bits(), q.likelihood_form2(&m).to_bits());
    }

    #[test]
    fn tan_round_trip_and_jacobian(d1 in -1.5..1.5f64, d2 in -5.0..5.0f64, d3 in -5.0..5.0f64) {
        let d = [d1, d2, d3];
        prop_assert!(round_trip_error(&TanD1, &[d]).unwrap() <= 1e-10);
        let y = TanD1.map(&d).unwrap();
        prop_assert!(jacobian_fd_check(&TanD1, &[y]).unwrap() <= 1e-6);
    }

    #[test]
    fn power_round_trip_and_jacobian(gamma in 0.2..5.0f64, d1 in 0.05..2.0f64, sign in prop::bool::ANY) {
        let t = PowerD1::new(gamma, 0.4).unwrap();
        let d = [if sign { -d1 } else { d1 }, 0.1, 0.2];
        prop_assert!(round_trip_error(&t, &[d]).unwrap() <= 1e-10);
        let y = t.map(&d).unwrap();
        prop_assert!(jacobian_fd_check(&t, &[y]).unwrap() <= 1e-6);
    }

    #[test]
    fn parameter_power_jacobian(exponent in 0.3..4.0f64, m in 0.1..2.0f64) {
        let t = PowerParam { exponent };
        prop_assert!(parameter_fd_check(&t, &[condlab::estimators::ParameterTransform::forward(&t, m)]) <= 1e-6);
    }

    #[test]
    fn bayes_factor_of_equal_evidence_is_one(e in 1e-300..1e300f64) {
        prop_assert_eq!(bayes_factor(e, e).unwrap(), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_maps_keep_the_map(alpha in 1.5..6.0f64, beta in 1.5..6.0f64, scale in prop_oneof![-4.0..-0.1f64, 0.1..4.0f64], shift in -3.0..3.0f64) {
        let axis = Axis::new(0.0, 1.0, 501).unwrap();
        let w = axis.centers().iter().map(|m| m.powf(alpha - 1.0) * (1.0 - m).powf(beta - 1.0)).collect();
        let post = GriddedDensity::from_weights(vec![axis], w).unwrap();
        let demo = map_noninvariance_demo(&post, &[&AffineParam { scale, shift }]).unwrap();
        prop_assert!(demo.displacement_cells <= 1.0);
        prop_assert_eq!(demo.original.index.clone(), map_estimate(&post).index);
    }
}

#[test]
fn tube_conditional_is_width_independent() {
    // The finite-width tube conditional is already the limit, so the gap at
    // eps = 0.1 and at eps = 0.01 are both zero.
    let axis = CircleDomain::FullCircle.axis(100_000).unwrap();
    let gap = |w: f64| {
        let band = GreatCircleBand::new(BandGeometry::Tube, w, CircleDomain::FullCircle).unwrap();
        analytic_band_conditional(&band, &axis)
            .unwrap()
            .values()
            .iter()
            .map(|v| (v - 1.0 / (2.0 * std::f64::consts::PI)).abs())
            .fold(0.0, f64::max)
    };
    assert!(gap(0.1) <= 1e-15 && gap(0.01) <= 1e-15);
}
