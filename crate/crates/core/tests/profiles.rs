use std::f64::consts::FRAC_PI_2;

use sigma_eigen::profiles::*;
use sigma_eigen::{Error, Exec};

fn f1() -> Profile {
    shoot_profile(&ProfileSpec::new(1)).unwrap()
}

#[test]
fn shot_ground_state_matches_closed_form() {
    let p = shoot_profile(&ProfileSpec::new(0)).unwrap();
    assert!((p.b - 2.0).abs() < 1e-8 && (p.c - 1.0).abs() < 1e-8);
    for s in &p.samples {
        let (f, fp) = ground_state(s[0]);
        assert!((s[1] - f).abs() <= 1e-8, "rho={}", s[0]);
        assert!((s[2] - fp).abs() <= 1e-8, "rho={}", s[0]);
    }
}

#[test]
fn first_excitation_invariants() {
    let p = f1();
    assert!(p.defect <= 1e-8);
    assert!((p.b - 21.7574).abs() < 1e-3, "b = {}", p.b);
    assert_eq!(p.interior_extrema(), 1);
    assert_eq!(p.interior_crossings(), 1);
    let (f0, fp0) = evaluate(&p, 0.0).unwrap();
    assert_eq!(f0, 0.0);
    assert!((fp0 - p.b).abs() < 1e-12);
    let (f1, fp1) = evaluate(&p, 1.0).unwrap();
    assert!((f1 - FRAC_PI_2).abs() <= 1e-10);
    assert!((fp1 - p.c).abs() <= 1e-8);
}

/// `f''` by centered differences of the sampled `f'` against the equation.
/// Sixth-order stencil: near the n = 1 center f'' reaches ~130 and even the
/// five-point formula leaves ~2e-6 of pure truncation.
fn max_ode_residual(p: &Profile) -> f64 {
    let s = &p.samples;
    let h = p.grid.spacing();
    let mut worst = 0.0f64;
    for i in 3..s.len() - 3 {
        let rho = s[i][0];
        if (rho - 1.0).abs() < 0.5 * h {
            continue;
        }
        let d = |k: usize| s[i + k][2] - s[i - k][2];
        let fpp = (45.0 * d(1) - 9.0 * d(2) + d(3)) / (60.0 * h);
        let r = profile_rhs(rho, s[i][1], s[i][2]).unwrap();
        worst = worst.max((fpp - r).abs());
    }
    worst
}

#[test]
fn sampled_profiles_satisfy_the_equation() {
    let g = Profile::ground_state(DEFAULT_EXTENSION).unwrap();
    assert!(max_ode_residual(&g) <= 1e-6);
    let r = max_ode_residual(&f1());
    assert!(r <= 1e-6, "residual {r:e}");
}

#[test]
fn empty_bracket_is_no_convergence() {
    let mut spec = ProfileSpec::new(0);
    spec.slope_bracket = (3.0, 4.0);
    assert!(matches!(shoot_profile(&spec), Err(Error::NoConvergence(_))));
}

#[test]
fn invalid_spec_rejected() {
    let mut spec = ProfileSpec::new(0);
    spec.match_point = 1.2;
    assert!(matches!(shoot_profile(&spec), Err(Error::Validation(_))));
}

#[test]
fn negative_bracket_gives_reflected_profile() {
    let mut spec = ProfileSpec::new(1);
    spec.slope_bracket = (-2000.0, -0.5);
    let neg = shoot_profile(&spec).unwrap();
    let pos = f1();
    assert!((neg.b + pos.b).abs() < 1e-9);
    for (a, b) in neg.samples.iter().zip(&pos.samples) {
        assert!((a[1] + b[1]).abs() < 1e-9);
    }
}

#[test]
fn parallel_and_sequential_scans_agree() {
    let spec = ProfileSpec::new(1);
    let a = shoot_profile_with(&spec, Exec::Sequential).unwrap();
    let b = shoot_profile_with(&spec, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn extension_past_the_lightcone() {
    let g = Profile::ground_state(1.0).unwrap();
    assert_eq!(extend_beyond_lightcone(&g, 1.0).unwrap(), g);
    // force the table path by relabelling the index
    let mut table = g.clone();
    table.n = 7;
    let ext = extend_beyond_lightcone(&table, 1.01).unwrap();
    assert!(ext.rho_max() >= 1.01 - 1e-12);
    for s in ext.samples.iter().filter(|s| s[0] > 1.0) {
        let (f, fp) = ground_state(s[0]);
        assert!((s[1] - f).abs() <= 1e-8 && (s[2] - fp).abs() <= 1e-8, "rho={}", s[0]);
    }
    assert!(matches!(extend_beyond_lightcone(&g, 1.5), Err(Error::Accuracy { .. })));

    let p = f1();
    for rho in [1.001, 1.005, 1.01] {
        let (f, _) = evaluate(&p, rho).unwrap();
        let x = rho - 1.0;
        assert!(((f - FRAC_PI_2) - p.c * x).abs() < 2.0 * x * x * p.c.abs());
    }
}

#[test]
fn evaluate_examples_and_range() {
    let g = Profile::ground_state(DEFAULT_EXTENSION).unwrap();
    let (f, fp) = evaluate(&g, 0.3).unwrap();
    assert_eq!(f, 2.0 * 0.3f64.atan());
    assert_eq!(fp, 2.0 / 1.09);
    assert!(matches!(evaluate(&g, 1.5), Err(Error::OutOfRange { .. })));
    assert!(evaluate(&g, -0.1).is_err());
}

#[test]
fn interpolation_error_on_default_grid() {
    // compare table interpolation against the closed form between knots
    let mut g = Profile::ground_state(DEFAULT_EXTENSION).unwrap();
    g.n = 9;
    for k in 0..997 {
        let rho = 0.0005 + k as f64 * 0.001;
        let (f, fp) = evaluate(&g, rho).unwrap();
        let (fe, fpe) = ground_state(rho);
        assert!((f - fe).abs() <= 1e-8 && (fp - fpe).abs() <= 1e-8, "rho={rho}");
    }
}

#[test]
fn series_orders_under_refinement() {
    // center series vs closed form: error ratio under ε → ε/2 is ≥ 2³
    let err = |eps: f64| {
        let (f, _) = center_series(2.0, eps);
        (f - ground_state(eps).0).abs()
    };
    assert!(err(0.1) / err(0.05) >= 8.0);
    assert!(err(1e-3) <= 1e-12);
    assert_eq!(center_series(0.0, 1e-3), (0.0, 0.0));
    let errl = |x: f64| {
        let (f, _) = lightcone_series(1.0, 1.0 + x);
        (f - ground_state(1.0 + x).0).abs()
    };
    assert!(errl(0.1) / errl(0.05) >= 4.0);
    assert!(errl(-0.1) / errl(-0.05) >= 4.0);
    assert_eq!(lightcone_series(0.0, 1.0), (FRAC_PI_2, 0.0));
}

#[test]
fn profile_json_round_trip() {
    let p = Profile::ground_state(DEFAULT_EXTENSION).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["n", "b", "c", "defect", "grid", "samples"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(serde_json::from_str::<Profile>(&text).unwrap(), p);
}
