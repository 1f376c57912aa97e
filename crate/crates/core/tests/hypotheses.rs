use inwave_core::experiment::config::{CANONICAL_BANDS, CANONICAL_GEOMETRY};
use inwave_core::gas::GasParams;
use inwave_core::hypotheses::*;
use inwave_core::profile::{ProfilePoint, RadialProfile};
use proptest::prelude::*;

fn p3() -> GasParams {
    GasParams::new(3.0, 1.0, 1).unwrap()
}

fn bump() -> BumpSpec {
    BumpSpec {
        enabled: true,
        half_width: 4.5e-4,
        order: 4,
        target_beta_star: None,
        baseline_beta_factor: 1.05,
        blend_length: 4e-4,
        finest_dr: None,
        min_points_per_half_width: 8.0,
    }
}

fn canonical_set() -> HypothesisSet {
    compute_constants(&CANONICAL_BANDS, &CANONICAL_GEOMETRY, &p3(), None, None).unwrap()
}

#[test]
fn derived_constants_match_closed_forms() {
    let bands = Bands { h_lo: 0.5, h_hi: 1.0, u_lo_mag: 2.5, u_hi_mag: 4.0, alpha_lo: 20.0, alpha_hi: 30.0, beta_bar: 1e4 };
    let geo = Geometry { r0: 0.5, r1: 1.0, r2: 1.2, r_star: 1.1 };
    let hs = compute_constants(&bands, &geo, &p3(), None, None).unwrap();
    assert!((hs.alpha_star_lo - 20.0).abs() < 1e-12);
    assert!((hs.alpha_star_hi - 60.0).abs() < 1e-12);
    assert!((hs.t_tilde_terms[0] - 0.5 / 6.0).abs() < 1e-15);
    assert!((hs.t_tilde - 1.0 / 60.0).abs() < 1e-15);
    assert_eq!(hs.t, hs.t_tilde);
}

#[test]
fn canonical_constants() {
    let hs = canonical_set();
    assert!((hs.alpha_star_lo - 10.0).abs() < 1e-12);
    assert!((hs.alpha_star_hi - 70.0).abs() < 1e-12);
    assert!((hs.beta_floor - 4.0 * 1.0065 * 121.0 / 8.0).abs() < 1e-12);
    assert!((hs.t - 0.0025 / 6.0).abs() < 1e-15);
    assert!((hs.n_rate - 2400.0).abs() < 1e-9);
    assert!(hs.blowup_window() <= hs.t * (1.0 + NONSTRICT_RTOL));
    assert!(hs.t_m_lower_bound() > hs.t);
}

#[test]
fn t_is_the_smallest_supplied_bound() {
    let b = &CANONICAL_BANDS;
    let g = &CANONICAL_GEOMETRY;
    let hs = compute_constants(b, g, &p3(), Some(1e-4), Some(2e-4)).unwrap();
    assert_eq!(hs.t, 1e-4);
    assert_eq!(hs.n_terms[1], 1e4);
    let hs = compute_constants(b, g, &p3(), Some(1.0), Some(2e-4)).unwrap();
    assert_eq!(hs.t, 2e-4);
}

#[test]
fn ordering_violations_name_the_condition() {
    let p = p3();
    let cases: Vec<(Bands, Geometry, Condition)> = vec![
        (CANONICAL_BANDS, Geometry { r_star: 1.01, ..CANONICAL_GEOMETRY }, Condition::RadiiOrder),
        (Bands { h_hi: 1.3, ..CANONICAL_BANDS }, CANONICAL_GEOMETRY, Condition::SoundSpeedOrder),
        (Bands { u_hi_mag: 2.4, ..CANONICAL_BANDS }, CANONICAL_GEOMETRY, Condition::VelocityOrder),
        (Bands { alpha_lo: 9.0, ..CANONICAL_BANDS }, CANONICAL_GEOMETRY, Condition::AlphaFloor),
        (Bands { beta_bar: 60.0, ..CANONICAL_BANDS }, CANONICAL_GEOMETRY, Condition::BetaFloor),
    ];
    for (b, g, want) in cases {
        match compute_constants(&b, &g, &p, None, None) {
            Err(HypothesisError::ConstraintViolation { condition, .. }) => assert_eq!(condition, want),
            other => panic!("expected {want:?}, got {other:?}"),
        }
    }
    let p2 = GasParams::new(2.0, 1.0, 1).unwrap();
    assert!(matches!(
        compute_constants(&CANONICAL_BANDS, &CANONICAL_GEOMETRY, &p2, None, None),
        Err(HypothesisError::ConstraintViolation { condition: Condition::Gamma, .. })
    ));
}

#[test]
fn n_is_monotone() {
    let p = p3();
    let g = CANONICAL_GEOMETRY;
    let mut last = 0.0;
    for beta_bar in [61.0, 100.0, 1e3, 1e4] {
        let hs = compute_constants(&Bands { beta_bar, ..CANONICAL_BANDS }, &g, &p, None, None).unwrap();
        assert!(hs.n_rate >= last);
        last = hs.n_rate;
    }
    let mut last = 0.0;
    for r_star in [1.006, 1.005, 1.004, 1.003] {
        let hs = compute_constants(&CANONICAL_BANDS, &Geometry { r_star, ..g }, &p, None, None).unwrap();
        assert!(hs.n_rate >= last);
        last = hs.n_rate;
    }
}

#[test]
fn generator_output_passes_the_checker() {
    let hs = canonical_set();
    let prof = generate_initial_data(&hs, &bump(), &p3()).unwrap();
    let rep = check_initial_data(&prof, &hs, &p3(), DEFAULT_CHECK_SAMPLES).unwrap();
    assert!(rep.pass, "failing: {:?}", rep.failing());
    assert!(rep.records.iter().all(|r| r.margin >= 0.0));
    assert!((rep.beta0_star + 1.1 * hs.n_rate).abs() < 1e-6 * hs.n_rate);
}

#[test]
fn threshold_is_met_with_zero_margin_at_minus_n() {
    let hs = canonical_set();
    let spec = BumpSpec { target_beta_star: Some(-hs.n_rate), ..bump() };
    let prof = generate_initial_data(&hs, &spec, &p3()).unwrap();
    let rep = check_initial_data(&prof, &hs, &p3(), DEFAULT_CHECK_SAMPLES).unwrap();
    let rec = rep.record(Condition::BlowupThreshold).unwrap();
    assert!(rec.satisfied);
    assert!(rec.margin.abs() < 1e-9 * hs.n_rate, "margin {}", rec.margin);
}

#[test]
fn unscaled_form_agrees_at_gamma_three() {
    let hs = canonical_set();
    let prof = generate_initial_data(&hs, &bump(), &p3()).unwrap();
    let rep = check_initial_data(&prof, &hs, &p3(), 501).unwrap();
    assert!(rep.unscaled_form.max_abs_diff_alpha <= 1e-12 * hs.alpha_star_hi);
    assert!(rep.unscaled_form.max_abs_diff_beta <= 1e-12 * hs.n_rate);
}

/// Linear ramps whose α̃ sits mid-band; only the geometric source feeds β̃.
#[test]
fn ramps_without_bump_fail_the_beta_band() {
    let hs = canonical_set();
    let ramps = |r: f64| {
        let x = r - 1.0045;
        ProfilePoint { h: 0.6 + 3.0 * x, u: -3.2 + 6.0 * x, h_r: 3.0, u_r: 6.0 }
    };
    let rep = check_initial_data(&ramps, &hs, &p3(), 401).unwrap();
    let rec = rep.record(Condition::BetaBand).unwrap();
    assert!(!rec.satisfied);
    assert!(rec.margin < 0.0);
    assert!(!rep.pass);
    assert!(rep.failing().contains(&Condition::BetaBand));
}

#[test]
fn sonic_data_is_reported() {
    let hs = canonical_set();
    let sonic = |_r: f64| ProfilePoint { h: 0.9, u: -0.5, h_r: 0.0, u_r: 0.0 };
    let rep = check_initial_data(&sonic, &hs, &p3(), 11);
    match rep {
        Ok(r) => assert!(!r.pass),
        Err(e) => assert!(matches!(e, HypothesisError::Profile { .. }), "{e}"),
    }
}

#[test]
fn slope_budget_is_infeasible_on_a_wide_interval() {
    let geo = Geometry { r0: 0.9, r1: 1.0, r2: 1.5, r_star: 1.2 };
    let bands = Bands { alpha_lo: 12.0, alpha_hi: 14.0, beta_bar: 1e3, ..CANONICAL_BANDS };
    let hs = compute_constants(&bands, &geo, &p3(), None, None).unwrap();
    match generate_initial_data(&hs, &bump(), &p3()) {
        Err(HypothesisError::Infeasible { condition, .. }) => assert_eq!(condition, Condition::AlphaSlopeBudget),
        other => panic!("expected slope-budget infeasibility, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn narrow_bump_exceeds_the_grid() {
    let hs = canonical_set();
    let spec = BumpSpec { half_width: 2e-6, finest_dr: Some(1e-6), ..bump() };
    match generate_initial_data(&hs, &spec, &p3()) {
        Err(HypothesisError::Infeasible { condition, .. }) => assert_eq!(condition, Condition::Resolution),
        other => panic!("expected resolution infeasibility, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn bound_curve_values() {
    let bands = Bands { h_hi: 1.0, ..CANONICAL_BANDS };
    let hs = compute_constants(&bands, &CANONICAL_GEOMETRY, &p3(), None, None).unwrap();
    let curve = blowup_bound_curve(-100.0, &hs, &p3(), &[0.0, 0.005, 0.009, 0.01, 0.02]).unwrap();
    assert!((curve.t_b - 0.01).abs() < 1e-15);
    assert_eq!(curve.points[0].1, 100.0);
    assert!((curve.points[1].1 - 200.0).abs() < 1e-9);
    assert!((curve.points[2].1 - 1000.0).abs() < 1e-7);
    assert!(curve.points[3].1.is_infinite());
    assert!(curve.points[4].1.is_infinite());
    assert!(!curve.asymptote_within_window);
    assert!(blowup_bound_curve(0.0, &hs, &p3(), &[]).is_err());
}

#[test]
fn asymptote_at_minus_n_lies_in_the_window() {
    let hs = canonical_set();
    let curve = blowup_bound_curve(-hs.n_rate, &hs, &p3(), &[]).unwrap();
    assert!(curve.asymptote_within_window);
    assert!(curve.t_b <= hs.t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_round_trip(
        h_lo in 0.18f64..0.22,
        u_lo in 2.4f64..2.6,
        u_hi in 3.9f64..4.1,
        alpha_gap in 0.5f64..1.5,
        beta_excess in 1.001f64..1.3,
        star in 0.55f64..0.7,
        target in 1.0f64..1.2,
    ) {
        let p = p3();
        let g = CANONICAL_GEOMETRY;
        let geo = Geometry { r_star: g.r1 + star * g.width(), ..g };
        let alpha_lo = 2.0 * (u_hi + 1.0) / g.r0 + alpha_gap;
        let floor = 4.0 * g.r2 * alpha_lo * alpha_lo / (2.0 * u_hi);
        let bands = Bands {
            h_lo,
            h_hi: 1.0,
            u_lo_mag: u_lo,
            u_hi_mag: u_hi,
            alpha_lo,
            alpha_hi: alpha_lo + 3.0,
            beta_bar: floor * beta_excess,
        };
        let hs = compute_constants(&bands, &geo, &p, None, None).unwrap();
        let spec = BumpSpec { target_beta_star: Some(-target * hs.n_rate), ..bump() };
        match generate_initial_data(&hs, &spec, &p) {
            Ok(prof) => {
                let rep = check_initial_data(&prof, &hs, &p, 1001).unwrap();
                prop_assert!(rep.pass, "failing {:?}", rep.failing());
                let e = prof.eval(geo.r_star);
                prop_assert!(e.h > 0.0 && e.u < -e.h);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
