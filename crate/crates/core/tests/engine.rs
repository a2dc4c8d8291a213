use epilab::engine::*;

fn params(gamma: f64) -> DecayParams {
    DecayParams::new(1.0, 1.0, gamma, 1.0).with_range(1e-3, 1.0)
}

#[test]
fn rate_fit_recovers_polynomial_rate() {
    let p = params(0.0);
    let t = synth_saturating_trace(&p, 0.2, 200).unwrap();
    let fit = limit_rate_fit(&t, &p).unwrap();
    let RateFit::Fitted { exponent, expected, .. } = fit else { panic!() };
    assert!((expected - 1.0 / 24.0).abs() < 1e-15);
    assert!((exponent - expected).abs() < 0.1 * expected, "{exponent}");
}

#[test]
fn rate_fit_recovers_log_rate() {
    let p = params(0.5);
    let t = synth_saturating_trace(&p, 0.2, 200).unwrap();
    let fit = limit_rate_fit(&t, &p).unwrap();
    let RateFit::Fitted { exponent, expected, .. } = fit else { panic!() };
    assert_eq!(expected, -0.5);
    assert!((exponent + 0.5).abs() < 0.075, "{exponent}");
}

#[test]
fn threshold_splits_without_straddle() {
    let p = params(0.25);
    for g_end in [0.3, -0.3] {
        let t = synth_saturating_trace(&p, g_end, 100).unwrap();
        let g = compute_g(&t, &p).unwrap();
        let r2 = find_threshold(&g).unwrap();
        let (r1, r3) = (g.radii[0], g.radii[99]);
        if r2 > r1 {
            growth_decay_bounds(&g, r1, r2, 1.0).unwrap();
        }
        if r2 < r3 {
            growth_decay_bounds(&g, r2, r3, 1.0).unwrap();
        }
    }
}

#[test]
fn single_dini_constant_over_family() {
    let mut family = Vec::new();
    for gamma in [0.0, 0.25, 0.5] {
        for g_end in [0.5, 0.1, -0.1, -0.5] {
            let p = params(gamma);
            family.push((synth_saturating_trace(&p, g_end, 200).unwrap(), p));
        }
    }
    let c = fit_dini_constant(&family).unwrap();
    assert!(c.is_finite() && c > 0.0);
    for (t, p) in &family {
        let g = compute_g(t, p).unwrap();
        let b = dini_bound(g.g[0], g.g[g.len() - 1], p.gamma, c);
        assert!(check_dini(t, b).unwrap().ratio <= 1.0 + 1e-12);
    }
}

#[test]
fn csv_file_round_trip() {
    let p = params(0.0);
    let t = synth_saturating_trace(&p, 0.2, 20).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    t.write_csv_path(&path).unwrap();
    let back = EnergyTrace::read_csv_path(&path).unwrap();
    for (a, b) in back.e.iter().zip(&t.e) {
        assert!((a - b).abs() <= 1e-15 * b.abs());
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
    #[test]
    fn passing_assumptions_imply_ode(
        c_e in 0.2f64..1.0, eps in 0.3f64..0.9, gamma in 0.0f64..0.6, e_end in -0.8f64..-0.01
    ) {
        let p = DecayParams::new(c_e, eps, gamma, 1.0).with_range(1e-3, 1.0);
        let t = synth_hypothesis_trace(&p, e_end, 120).unwrap();
        let a = check_assumptions(&t, &p, 1e-6).unwrap();
        proptest::prop_assert!(a.pass);
        let g = compute_g(&t, &p).unwrap();
        proptest::prop_assert!(verify_ode(&g, 1e-6).unwrap().pass);
    }
}
