use sigma_eigen::mode_ode::*;
use sigma_eigen::ode::Tolerance;
use sigma_eigen::profiles::*;
use sigma_eigen::{Error, Exec};

fn ground() -> Profile {
    Profile::ground_state(DEFAULT_EXTENSION).unwrap()
}

fn f1() -> Profile {
    shoot_profile(&ProfileSpec::new(1)).unwrap()
}

#[test]
fn gauge_mode_of_the_ground_state() {
    let p = ground();
    let sh = ModeShooter::new(&p);
    let (est, sol) = sh.find_eigenvalue(1.1, None).unwrap();
    assert!((est.value - 1.0).abs() <= 1e-6, "{}", est.value);
    assert_eq!(est.method, Method::Shooting);
    assert!(!est.oscillation);
    // normalized gauge mode is 2ρ/(1+ρ²)
    for s in &sol.samples {
        let exact = 2.0 * s[0] / (1.0 + s[0] * s[0]);
        assert!((s[1] - exact).abs() <= 1e-6, "rho={}", s[0]);
    }
    assert!((sol.params.a - 2.0).abs() <= 1e-6);
}

#[test]
fn first_stable_mode_of_the_ground_state() {
    let p = ground();
    let (est, sol) = ModeShooter::new(&p).find_eigenvalue(-0.5, None).unwrap();
    assert!((est.value + 0.54246).abs() <= 5e-5, "{}", est.value);
    assert!(sol.defect.iter().all(|d| d.abs() <= DEFECT_TOLERANCE));
}

#[test]
fn unstable_mode_of_first_excitation() {
    let p = f1();
    let (est, _) = ModeShooter::new(&p).find_eigenvalue(6.0, None).unwrap();
    assert!((est.value - 6.333625).abs() <= 1e-5, "{}", est.value);
    assert_eq!(est.profile_n, 1);
}

#[test]
fn eigenfunctions_are_regular_at_the_lightcone() {
    let p = f1();
    let sh = ModeShooter::new(&p);
    for guess in [6.3, 1.0, -0.5] {
        let (_, sol) = sh.find_eigenvalue(guess, None).unwrap();
        let lambda = sol.params.lambda;
        assert!(sol.boundary_identity_residual(p.c).unwrap().abs() <= 1e-12);
        // integrated data joins the analytic branch to truncation order
        let s = sol.samples.iter().rev().find(|s| s[0] <= 0.999).unwrap();
        let (v, vp) = mode_lightcone_series(lambda, p.c, s[0]).unwrap();
        assert!((s[1] - v).abs() <= 1e-6 && (s[2] - vp).abs() <= 1e-3, "lambda={lambda}: {s:?} vs {v} {vp}");
        let (v, _) = sol.evaluate(&p, 1.0).unwrap();
        assert_eq!(v, 1.0);
    }
}

#[test]
fn eigenfunction_evaluation_is_continuous() {
    let p = f1();
    let (_, sol) = ModeShooter::new(&p).find_eigenvalue(6.3, None).unwrap();
    let first = sol.samples[0][0];
    let last = sol.samples.last().unwrap()[0];
    for rho in [first, last] {
        let (a, ap) = sol.evaluate(&p, rho - 1e-12).unwrap();
        let (b, bp) = sol.evaluate(&p, rho + 1e-12).unwrap();
        assert!(
            (a - b).abs() <= 1e-6 * a.abs().max(1.0) && (ap - bp).abs() <= 1e-4 * ap.abs().max(1.0),
            "rho={rho}: {a} {b} {ap} {bp}"
        );
    }
    assert!(sol.evaluate(&p, 1.02).is_err());
}

#[test]
fn matching_defect_examples() {
    let p = ground();
    let sh = ModeShooter::new(&p);
    let d = sh.matching_defect(ModeParams { lambda: 1.0, a: 2.0 }).unwrap();
    assert!(d[0].abs().max(d[1].abs()) <= 1e-8, "{d:?}");
    let d = sh.matching_defect(ModeParams { lambda: 0.5, a: 1.0 }).unwrap();
    assert!(d[0].abs().max(d[1].abs()) > 1e-2);
    // affine in a
    let at = |a| sh.matching_defect(ModeParams { lambda: 2.5, a }).unwrap();
    let (d0, d1, d3) = (at(0.0), at(1.0), at(3.0));
    for k in 0..2 {
        assert!((d3[k] - d0[k] - 3.0 * (d1[k] - d0[k])).abs() <= 1e-9 * d3[k].abs().max(1.0));
    }
}

#[test]
fn scans_find_every_sign_change() {
    let g = ground();
    let roots = ModeShooter::new(&g).scan_eigenvalues((-1.5, 7.0), 400).unwrap();
    assert_eq!(roots.len(), 2, "{roots:?}");
    assert!((roots[0] + 0.54247).abs() < 1e-4 && (roots[1] - 1.0).abs() < 1e-6);
    assert!(ModeShooter::new(&g).scan_eigenvalues((2.0, 5.0), 100).unwrap().is_empty());

    let p = f1();
    let seq = ModeShooter::new(&p).with_exec(Exec::Sequential);
    let par = ModeShooter::new(&p).with_exec(Exec::Parallel);
    let a = seq.scan_eigenvalues((-1.5, 7.0), 400).unwrap();
    assert_eq!(a, par.scan_eigenvalues((-1.5, 7.0), 400).unwrap());
    assert_eq!(a.len(), 3, "{a:?}");
    assert!((a[2] - 6.3336).abs() < 1e-3);
}

#[test]
fn guard_bands_reject_lambda_zero_and_minus_one() {
    let g = ground();
    let sh = ModeShooter::new(&g);
    assert!(matches!(sh.find_eigenvalue(0.0, None), Err(Error::Validation(_))));
    assert!(matches!(sh.find_eigenvalue(5e-4, None), Err(Error::Validation(_))));
    assert!(sh.matching_function(-1.0).is_err());
    assert!(sh.scan_eigenvalues((1.0, -1.0), 10).is_err());
}

#[test]
fn resonant_minus_two() {
    let g = ground();
    let check = ModeShooter::new(&g).check_minus_two().unwrap();
    assert!(check.log_obstruction.abs() <= 1e-12);
    assert!(check.is_eigenvalue(1e-4), "{check:?}");
    // the plain shooter cannot see it
    assert!(check.shooter_mismatch.abs() > 0.5);

    let p = f1();
    let check = ModeShooter::new(&p).check_minus_two().unwrap();
    assert!(!check.is_eigenvalue(1e-4));
    // measured log coefficient agrees with the recurrence obstruction
    let predicted = -check.log_obstruction / 6.0;
    assert!((check.log_coefficient - predicted).abs() <= 1e-3 * predicted.abs(), "{check:?}");
}

#[test]
fn tolerance_halving_stays_inside_the_error_bar() {
    let p = f1();
    for guess in [6.3, -0.5] {
        let (est, _) = ModeShooter::new(&p).find_eigenvalue(guess, None).unwrap();
        let (tight, _) = ModeShooter::new(&p)
            .with_tolerance(Tolerance::new(0.5 * DEFAULT_TOLERANCE, 0.5 * DEFAULT_TOLERANCE))
            .find_eigenvalue(guess, None)
            .unwrap();
        assert!((est.value - tight.value).abs() <= est.uncertainty, "{est:?} vs {tight:?}");
    }
}
