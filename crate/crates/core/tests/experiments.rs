use std::f64::consts::PI;

use epilab::arc::{ArcDomain, ModeExpansion};
use epilab::engine::{log_spaced, DecayParams};
use epilab::epi::{arc_family, outer_gain, ArcInnerParams};
use epilab::loja::{fit_lojasiewicz, normalized_flow, select_eta, EtaCase, Objective, PowerModel, Termination};
use epilab::minimizer::{hausdorff_cells, run_experiment, MinimizeConfig};
use epilab::obstacle::{constrained_loja_check, gradient_lower_bound, perturbed, spectral_gap, QuadraticProfile, SphereField};
use epilab::polar::{ConeDescription, PolarField, PolarGrid, SphericalFunction};
use epilab::weiss::{energy_gap, export_energy_trace, rescale, weiss_w};
use epilab::Error;

#[test]
fn outer_ratio_per_mode() {
    // (α² + λ)/(2α) − 1 against (1 + λ)/2 − 1 with α = k, λ = k² gives (k − 1)/(k + 1)
    for k in 2..7 {
        let z = ModeExpansion::single(ArcDomain::half_circle(0.0), k, 0.3).unwrap();
        let r = outer_gain(&z, None).unwrap().ratio().unwrap();
        let kf = k as f64;
        assert!((r - (kf - 1.0) / (kf + 1.0)).abs() < 1e-12, "k = {k}: {r}");
    }
    assert!(outer_gain(&ModeExpansion::zero(ArcDomain::half_circle(0.0)), None).unwrap().ratio().is_none());
}

#[test]
fn arc_family_is_symmetric_in_sign() {
    let fam = arc_family(&[-0.02, 0.02], 256, ArcInnerParams::default()).unwrap();
    assert_eq!(fam.len(), 4);
    let signs: Vec<f64> = fam.iter().map(|m| m.measurement.e_rz.signum()).collect();
    assert!(signs.contains(&1.0) && signs.contains(&-1.0));
    for m in &fam {
        assert!(m.measurement.e_h < m.measurement.e_rz, "{m:?}");
    }
}

#[test]
fn rotated_cone_energies() {
    let n = 256;
    let g = PolarGrid::square(n).unwrap();
    for theta_e in [0.0, 0.7, -2.0] {
        let cone = ConeDescription::half_plane(n, theta_e).unwrap();
        let u0 = cone.field(&g).unwrap();
        assert!((weiss_w(&u0).unwrap() - PI / 2.0).abs() < 1e-3);
        assert!(energy_gap(&u0, &cone).unwrap().abs() < 1e-12);
        let r = rescale(&u0, 0.3, 1.0).unwrap();
        assert!((weiss_w(&r).unwrap() - weiss_w(&u0).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn quadratic_perturbation_trace() {
    // u = u₀ + t r² φ: E(r) = W(u_r) − W(u₀) shrinks with r and D > 0
    let n = 128;
    let g = PolarGrid::square(n).unwrap();
    let cone = ConeDescription::half_plane(n, 0.0).unwrap();
    let u = PolarField::from_fn(g, 1.0, |r, th| (r * th.cos() + 0.1 * r * r * (2.0 * th).cos()).max(0.0)).unwrap();
    let t = export_energy_trace(&u, &cone, &log_spaced(0.05, 1.0, 10)).unwrap();
    assert!(t.e[0].abs() < t.e[9].abs());
    assert!(t.d.unwrap().iter().all(|&d| d > 0.0));
}

#[test]
fn negative_model_flow() {
    let obj = PowerModel::negative(1);
    let (p, traj) = select_eta(&obj, &[0.05], 0.5, 0.5).unwrap();
    assert_eq!(p.case, EtaCase::Negative);
    assert!(traj.values.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    let flow = normalized_flow(&PowerModel::new(2), &[0.1], 1.0, 1e-3).unwrap();
    assert_eq!(flow.termination, Termination::CriticalLevel);
    assert!(flow.values.last().unwrap().abs() < 1e-12);
    let fit = fit_lojasiewicz(&obj, &(1..10).map(|k| vec![0.01 * k as f64]).collect::<Vec<_>>()).unwrap();
    assert!((fit.beta - 0.5).abs() < 1e-10);
    assert_eq!(obj.beta(), Some(0.5));
}

#[test]
fn obstacle_family_and_dimension() {
    assert_eq!(spectral_gap(2).unwrap(), 3.0);
    assert!(matches!(spectral_gap(3), Err(Error::Unsupported(_))));
    for angle in [0.0, 0.4] {
        let phi = QuadraticProfile::rank_one(angle).sphere(256).unwrap();
        let fam: Vec<SphereField> = [1e-4, 1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&t| perturbed(&phi, &[(4, t, 0.3 * t), (2, 0.1 * t, 0.0)]))
            .collect();
        let (r, s) = constrained_loja_check(&fam, &phi, 0.5, 100.0).unwrap();
        assert!(r.pass, "{:?}", r.details);
        assert!(s.iter().all(|s| s.bound.corrected_residual() < 1e-8));
    }
    let phi = QuadraticProfile::isotropic().sphere(64).unwrap();
    assert!(gradient_lower_bound(&phi, &phi).unwrap().quotient.is_infinite());
}

#[test]
fn rotated_boundary_experiment() {
    let n = 48;
    let theta_e = 0.9;
    let cone = ConeDescription::half_plane(n, theta_e).unwrap();
    let b = SphericalFunction::from_fn(n, |th| (th - theta_e).cos().max(0.0)).unwrap();
    let cfg = MinimizeConfig { restarts: 1, ..MinimizeConfig::square(n) };
    let p = DecayParams::new(1.0, 0.05, 0.0, 1.0).with_range(cfg.r_min, 1.0);
    let out = run_experiment(&b, &cfg, &cone, &log_spaced(0.02, 1.0, 12), &p, f64::INFINITY).unwrap();
    assert!(hausdorff_cells(&out.curve, &cone, &out.minimizer.field.grid) <= 2.0);
    assert_eq!(out.curve.non_graphical, 0);
    assert!(out.report.pass, "{:?}", out.report.notes);
}
