use proptest::prelude::*;

use sigma_eigen::evolve::*;
use sigma_eigen::spectra::*;
use sigma_eigen::Error;

fn grid() -> Grid {
    Grid::new(64).unwrap()
}

fn scheme(tau_end: f64) -> Scheme {
    Scheme::ground_state(
        grid(),
        SchemeConfig {
            tau_end,
            stride: 4,
            ..SchemeConfig::default()
        },
    )
    .unwrap()
}

fn arb_state() -> impl Strategy<Value = State> {
    let len = grid().len();
    prop::collection::vec(-10.0f64..10.0, 3 * len).prop_map(move |v| {
        let mut s = State::zeros(grid());
        s.u1.copy_from_slice(&v[..len]);
        s.u2.copy_from_slice(&v[len..2 * len]);
        s.u3.copy_from_slice(&v[2 * len..]);
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn inner_product_is_symmetric_and_definite(x in arb_state(), y in arb_state(), a in -5.0f64..5.0) {
        let q = QuadratureRule::trapezoid(grid());
        let xy = inner_product(&x, &y, &q).unwrap();
        prop_assert!((xy - inner_product(&y, &x, &q).unwrap()).abs() <= 1e-12 * (1.0 + xy.abs()));
        prop_assert!(inner_product(&x, &x, &q).unwrap() >= 0.0);
        let mut ax = x.clone();
        ax.scale(a);
        let lhs = inner_product(&ax, &y, &q).unwrap();
        prop_assert!((lhs - a * xy).abs() <= 1e-10 * (1.0 + (a * xy).abs()));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(t in arb_state(), x in arb_state(), y in arb_state()) {
        let q = QuadratureRule::trapezoid(grid());
        // orthogonal chain built by the same routine
        let b0 = x;
        let b1 = project_out(&y, std::slice::from_ref(&b0), &q).unwrap();
        let basis = [b0, b1];
        let once = project_out(&t, &basis, &q).unwrap();
        let twice = project_out(&once, &basis, &q).unwrap();
        let scale = norm(&t, &q).unwrap();
        for b in &basis {
            let c = inner_product(&once, b, &q).unwrap() / norm(b, &q).unwrap();
            prop_assert!(c.abs() <= 1e-10 * scale);
        }
        let mut d = twice;
        d.axpy(-1.0, &once);
        prop_assert!(norm(&d, &q).unwrap() <= 1e-10 * scale);
    }
}

#[test]
fn exterior_point_carries_no_weight() {
    let q = QuadratureRule::trapezoid(grid());
    let mut s = State::zeros(grid());
    s.u3[grid().n + 1] = 1.0;
    assert_eq!(norm(&s, &q).unwrap(), 0.0);
    let ones = State::from_fn(grid(), |_| [1.0, 0.0, 0.0]);
    assert!((inner_product(&ones, &ones, &q).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn projection_errors() {
    let q = QuadratureRule::trapezoid(grid());
    let t = InitialData::Phi.state(grid());
    assert!(matches!(
        project_out(&t, &[State::zeros(grid())], &q),
        Err(Error::Degenerate(_))
    ));
    let other = InitialData::Phi.state(Grid::new(32).unwrap());
    assert!(matches!(inner_product(&t, &other, &q), Err(Error::GridMismatch(..))));
}

#[test]
fn renormalization_does_not_change_the_series() {
    let s = scheme(2.0);
    let data = || InitialData::LIBRARY.iter().map(|d| d.state(grid())).collect::<Vec<_>>();
    let on = co_evolve_filtered(&s, data(), FilterOptions::default()).unwrap();
    let off = co_evolve_filtered(
        &s,
        data(),
        FilterOptions {
            renormalize: false,
            ..FilterOptions::default()
        },
    )
    .unwrap();
    assert_eq!(on.tau, off.tau);
    for (a, b) in on.log_norm.iter().zip(&off.log_norm) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
        }
    }
    assert!(off.rescaled.iter().all(|&r| r == 0.0));
}

#[test]
fn scaling_the_data_shifts_the_log_norm() {
    let s = scheme(2.0);
    let base = co_evolve_filtered(&s, vec![InitialData::Psi.state(grid())], FilterOptions::default()).unwrap();
    let mut scaled_data = InitialData::Psi.state(grid());
    scaled_data.scale(-37.0);
    let scaled = co_evolve_filtered(&s, vec![scaled_data], FilterOptions::default()).unwrap();
    let shift = 37f64.ln();
    for (a, b) in base.log_norm[0].iter().zip(&scaled.log_norm[0]) {
        assert!((b - a - shift).abs() <= 1e-10);
    }
}

#[test]
fn leading_rate_is_independent_of_the_data() {
    // long enough for the subleading λ ≈ −0.54 admixture to die out
    let s = scheme(16.0);
    let slopes: Vec<f64> = InitialData::LIBRARY
        .iter()
        .map(|d| {
            let bank = co_evolve_filtered(&s, vec![d.state(grid())], FilterOptions::default()).unwrap();
            fit_level(&bank, 0, WindowPolicy::default()).unwrap().fit.slope
        })
        .collect();
    for w in &slopes {
        assert!((w - 1.0).abs() <= 0.01, "{slopes:?}");
        assert!((w - slopes[0]).abs() <= 1e-4, "{slopes:?}");
    }
}

#[test]
fn ground_state_levels() {
    let s = Scheme::ground_state(
        Grid::new(128).unwrap(),
        SchemeConfig {
            tau_end: 8.0,
            stride: 4,
            ..SchemeConfig::default()
        },
    )
    .unwrap();
    let seq = extract_spectrum(
        &s,
        0,
        2,
        WindowPolicy::default(),
        FilterOptions {
            exec: ExecPolicy::Sequential,
            ..FilterOptions::default()
        },
    )
    .unwrap();
    let par = extract_spectrum(&s, 0, 2, WindowPolicy::default(), FilterOptions::default()).unwrap();
    assert_eq!(seq, par);
    let est = seq.estimates();
    assert!((est[0].value - 1.0).abs() <= 0.01, "{est:?}");
    assert!((est[1].value + 0.5425).abs() <= 0.01, "{est:?}");
    assert!(est.iter().all(|e| !e.oscillation && e.uncertainty > 0.0));

    let mut csv = Vec::new();
    seq.bank.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("tau,log_norm_level_0,log_norm_level_1\n"));
    assert_eq!(text.lines().count(), seq.bank.tau.len() + 1);
}

#[test]
fn oscillation_surrogate() {
    let t: Vec<f64> = (0..400).map(|k| k as f64 * 0.02).collect();
    let clean: Vec<f64> = t.iter().map(|t| 0.5 * t + 0.2).collect();
    let wavy: Vec<f64> = t.iter().map(|t| 0.5 * t + 0.05 * (3.0 * t).sin()).collect();
    let a = fit_growth_rate(&t, &clean, (0.0, 7.98)).unwrap();
    assert!(!a.oscillation && (a.slope - 0.5).abs() < 1e-12 && a.rms_residual < 1e-12);
    assert!(fit_growth_rate(&t, &wavy, (0.0, 7.98)).unwrap().oscillation);
    assert!(oscillation_flag(&t, &wavy) && !oscillation_flag(&t, &clean));
}

#[test]
fn invalid_requests() {
    let s = scheme(2.0);
    let t = [0.0, 1.0, 2.0];
    assert!(matches!(fit_growth_rate(&t, &t, (0.0, 1.0)), Err(Error::WindowTooShort(_))));
    assert!(fit_growth_rate(&t, &t[..2], (0.0, 2.0)).is_err());
    assert!(co_evolve_filtered(&s, vec![], FilterOptions::default()).is_err());
    let phi = InitialData::Phi.state(grid());
    assert!(matches!(
        co_evolve_filtered(&s, vec![phi.clone(), phi], FilterOptions::default()),
        Err(Error::Degenerate(_))
    ));
    assert!(extract_spectrum(&s, 0, 5, WindowPolicy::default(), FilterOptions::default()).is_err());
    let fixed = WindowPolicy::Fixed { start: 1.0, end: 3.0 };
    assert!(extract_spectrum(&s, 0, 1, fixed, FilterOptions::default()).is_err());
}
