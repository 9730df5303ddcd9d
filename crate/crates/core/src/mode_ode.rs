//! Eigenmodes `w = e^{λτ} v(ρ)` of the linearization around a profile, found by
//! shooting to a fitting point.
//!
//! The mode equation
//!
//! ```text
//! v'' + 2((λ+1)ρ² − 1) / (ρ(ρ+1)(ρ−1)) v' + (λ(λ+1)ρ² + 2cos 2f) / (ρ²(ρ+1)(ρ−1)) v = 0
//! ```
//!
//! has Frobenius indices {1, −2} at ρ = 0 and {0, 1−λ} at ρ = 1. Regularity
//! selects `v ≈ aρ` at the center and the analytic branch normalized by
//! `v(1) = 1`, `v'(1) = −(λ² + λ − 2)/(2λ)` at the lightcone. The index-0
//! recurrence at the lightcone degenerates at λ ∈ {0, −1, −2}: λ = 0 and −1
//! are excluded by guard bands; λ = −2 is handled by [`ModeShooter::check_minus_two`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};
use crate::parallel::Exec;
use crate::profiles::{evaluate, Profile, DEFAULT_MATCH_POINT, DEFAULT_STEP_OFF, DEFAULT_TOLERANCE};

/// Half-width of the excluded bands around λ = 0 and the resonance λ = −1.
pub const LAMBDA_GUARD: f64 = 1e-3;
/// Newton acceptance threshold on the ∞-norm of the matching defect.
pub const DEFECT_TOLERANCE: f64 = 1e-10;

/// Which route produced an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shooting,
    Evolution,
}

/// Real part μ of an eigenvalue with its error bar and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueEstimate {
    pub value: f64,
    /// Evidence of a nonzero imaginary part.
    pub oscillation: bool,
    pub uncertainty: f64,
    pub method: Method,
    pub profile_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub lambda: f64,
    /// Center slope `v'(0)`.
    pub a: f64,
}

/// Eigenfunction sampled on `[ε, 1−ε]`, normalized by `v(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenmodeSolution {
    pub params: ModeParams,
    /// Rows `[ρ, v, v']`, increasing ρ.
    pub samples: Vec<[f64; 3]>,
    pub defect: [f64; 2],
}

impl EigenmodeSolution {
    /// `(v, v')` anywhere on `[0, 1 + 0.01]`: series inside the step-off
    /// regions, cubic Hermite between samples.
    pub fn evaluate(&self, profile: &Profile, rho: f64) -> Result<(f64, f64)> {
        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => (f[0], l[0]),
            _ => return Err(Error::Validation("empty eigenfunction table".into())),
        };
        if !(0.0..=1.01).contains(&rho) {
            return Err(Error::OutOfRange { rho, min: 0.0, max: 1.01 });
        }
        let ModeParams { lambda, a } = self.params;
        if rho <= first {
            return Ok(mode_center_series(a, lambda, profile.b, rho));
        }
        if rho >= last {
            return mode_lightcone_series(lambda, profile.c, rho);
        }
        let k = self.samples.partition_point(|s| s[0] <= rho).clamp(1, self.samples.len() - 1) - 1;
        let (s0, s1) = (&self.samples[k], &self.samples[k + 1]);
        let h = s1[0] - s0[0];
        let t = (rho - s0[0]) / h;
        let acc = |s: &[f64; 3]| mode_accel(s[0], s[1], s[2], lambda, (2.0 * evaluate(profile, s[0]).map_or(f64::NAN, |f| f.0)).cos());
        let v = hermite(t, h, s0[1], s0[2], s1[1], s1[2]);
        let vp = hermite(t, h, s0[2], acc(s0), s1[2], acc(s1));
        Ok((v, vp))
    }


    /// `2λ v'(1) + (λ² + λ − 2) v(1)` from the lightcone expansion.
    pub fn boundary_identity_residual(&self, c: f64) -> Result<f64> {
        let lambda = self.params.lambda;
        let (v, vp) = mode_lightcone_series(lambda, c, 1.0)?;
        Ok(2.0 * lambda * vp + (lambda * lambda + lambda - 2.0) * v)
    }
}

fn hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

/// `v'(1)` required by regularity at the lightcone.
pub fn boundary_slope(lambda: f64) -> f64 {
    -(lambda * lambda + lambda - 2.0) / (2.0 * lambda)
}

/// Right-hand side of the mode equation with `cos 2f` supplied directly.
fn mode_accel(rho: f64, v: f64, vp: f64, lambda: f64, cos2f: f64) -> f64 {
    let d = rho * (rho + 1.0) * (rho - 1.0);
    -2.0 * ((lambda + 1.0) * rho * rho - 1.0) / d * vp - (lambda * (lambda + 1.0) * rho * rho + 2.0 * cos2f) / (rho * d) * v
}

/// `v''` from the mode equation around `profile`.
pub fn mode_rhs(rho: f64, v: f64, vp: f64, lambda: f64, profile: &Profile) -> Result<f64> {
    if rho == 0.0 || rho == 1.0 {
        return Err(Error::Domain { what: "mode equation", rho });
    }
    let (f, _) = evaluate(profile, rho)?;
    Ok(mode_accel(rho, v, vp, lambda, (2.0 * f).cos()))
}

/// Regular center branch `v = aρ + v₃ρ³`, with `v₃ = a((λ+1)(λ+2) − 4b²)/10`
/// from `cos 2f = 1 − 2b²ρ² + O(ρ⁴)`.
pub fn mode_center_series(a: f64, lambda: f64, b: f64, rho: f64) -> (f64, f64) {
    let v3 = a * ((lambda + 1.0) * (lambda + 2.0) - 4.0 * b * b) / 10.0;
    (a * rho + v3 * rho.powi(3), a + 3.0 * v3 * rho * rho)
}

/// First two coefficients `(v₁, v₂)` of the analytic lightcone branch
/// `v = 1 + v₁x + v₂x² + …`, `x = ρ − 1`, around a profile with `f'(1) = c`.
pub fn lightcone_coefficients(lambda: f64, c: f64) -> Result<(f64, f64)> {
    if lambda.abs() < LAMBDA_GUARD {
        return Err(Error::Validation(format!("lambda = {lambda} inside the |lambda| < {LAMBDA_GUARD} guard band")));
    }
    if (lambda + 1.0).abs() < LAMBDA_GUARD {
        return Err(Error::Validation(format!("lambda = {lambda} at the resonance lambda = -1")));
    }
    let _ = c; // cos 2f enters only from the x² term onwards
    let q1 = 6.0 * lambda + 4.0;
    let r0 = lambda * lambda + lambda - 2.0;
    let r1 = 2.0 * lambda * (lambda + 1.0);
    let v1 = boundary_slope(lambda);
    let v2 = -((q1 + r0) * v1 + r1) / (4.0 * (lambda + 1.0));
    Ok((v1, v2))
}

/// Analytic lightcone branch truncated after x².
pub fn mode_lightcone_series(lambda: f64, c: f64, rho: f64) -> Result<(f64, f64)> {
    let (v1, v2) = lightcone_coefficients(lambda, c)?;
    let x = rho - 1.0;
    Ok((1.0 + v1 * x + v2 * x * x, v1 + 2.0 * v2 * x))
}

/// Result of the resonant λ = −2 analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinusTwoCheck {
    /// Normalized matching function of the plain shooter at λ = −2 (0 would mean success).
    pub shooter_mismatch: f64,
    /// Recurrence obstruction `4c² − 4` at the resonant order; zero iff every
    /// local solution at the lightcone is analytic. The log coefficient of the
    /// index-0 branch is `K = −obstruction / 6`.
    pub log_obstruction: f64,
    /// Center amplitude and free cubic coefficient of the two-sided solution.
    pub a: f64,
    pub cubic: f64,
    /// Defect of the two-sided solution with the cubic coefficient free. With
    /// two free constants this is always at round-off; it certifies only that
    /// the linear solve was well conditioned.
    pub defect: [f64; 2],
    /// Coefficient K of `x³ log|x|` measured by a least-squares fit of the
    /// center-side solution on `x ∈ [−0.1, −0.002]`.
    pub log_coefficient: f64,
}

impl MinusTwoCheck {
    /// λ = −2 is an eigenvalue when the resonant branch is analytic, so the
    /// free cubic coefficient absorbs the mismatch. `tol` bounds both the
    /// obstruction and the measured log coefficient.
    pub fn is_eigenvalue(&self, tol: f64) -> bool {
        self.log_obstruction.abs() <= tol && self.log_coefficient.abs() <= tol
    }
}

/// Two-sided shooter for the eigenmode problem around a fixed profile.
#[derive(Debug, Clone)]
pub struct ModeShooter<'a> {
    profile: &'a Profile,
    pub match_point: f64,
    pub step_off: f64,
    solver: Dopri5,
    exec: Exec,
}

impl<'a> ModeShooter<'a> {
    pub fn new(profile: &'a Profile) -> Self {
        Self {
            profile,
            match_point: DEFAULT_MATCH_POINT,
            step_off: DEFAULT_STEP_OFF,
            solver: Dopri5::new(Tolerance::new(DEFAULT_TOLERANCE, DEFAULT_TOLERANCE)),
            exec: Exec::default(),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.solver = Dopri5::new(tol);
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn profile(&self) -> &Profile {
        self.profile
    }

    fn rhs(&self, lambda: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        move |rho, y| {
            let f = evaluate(self.profile, rho).map(|(f, _)| f).unwrap_or(f64::NAN);
            [y[1], mode_accel(rho, y[0], y[1], lambda, (2.0 * f).cos())]
        }
    }

    /// Center branch with `a = 1`, carried to the matching point.
    pub fn center_basis(&self, lambda: f64) -> Result<[f64; 2]> {
        let eps = self.step_off;
        let (v, vp) = mode_center_series(1.0, lambda, self.profile.b, eps);
        self.solver.solve(self.rhs(lambda), eps, [v, vp], self.match_point)
    }

    /// Lightcone branch (`v(1) = 1`), carried to the matching point.
    pub fn lightcone_state(&self, lambda: f64) -> Result<[f64; 2]> {
        let start = 1.0 - self.step_off;
        let (v, vp) = mode_lightcone_series(lambda, self.profile.c, start)?;
        self.solver.solve(self.rhs(lambda), start, [v, vp], self.match_point)
    }

    /// `(a·C − R)` at the matching point: center branch scaled by its free
    /// amplitude minus the normalized lightcone branch.
    pub fn matching_defect(&self, params: ModeParams) -> Result<[f64; 2]> {
        let c = self.center_basis(params.lambda)?;
        let r = self.lightcone_state(params.lambda)?;
        Ok([params.a * c[0] - r[0], params.a * c[1] - r[1]])
    }

    /// Least-squares optimal center amplitude for fixed λ.
    pub fn optimal_amplitude(&self, lambda: f64) -> Result<f64> {
        let c = self.center_basis(lambda)?;
        let r = self.lightcone_state(lambda)?;
        Ok((c[0] * r[0] + c[1] * r[1]) / (c[0] * c[0] + c[1] * c[1]))
    }

    /// Signed sine of the angle between the two branches at the matching point.
    /// Its modulus is the minimum over `a` of |defect| / |R|; roots are eigenvalues.
    pub fn matching_function(&self, lambda: f64) -> Result<f64> {
        let c = self.center_basis(lambda)?;
        let r = self.lightcone_state(lambda)?;
        let cross = c[0] * r[1] - c[1] * r[0];
        Ok(cross / (c[0].hypot(c[1]) * r[0].hypot(r[1])))
    }

    /// Simultaneous Newton iteration on (λ, a).
    pub fn find_eigenvalue(&self, lambda_guess: f64, a_guess: Option<f64>) -> Result<(EigenvalueEstimate, EigenmodeSolution)> {
        let (lambda, a, defect, last_step) = self.newton(lambda_guess, a_guess)?;
        let refined = self
            .clone()
            .with_tolerance(self.solver.tol.scaled(0.1))
            .newton(lambda, Some(a))
            .map(|r| r.0)
            .unwrap_or(lambda);
        // the integrator tolerance floors what the defect can resolve
        let uncertainty = last_step.abs() + 2.0 * (refined - lambda).abs() + self.solver.tol.rel * lambda.abs().max(1.0);
        let params = ModeParams { lambda, a };
        let samples = self.sample(params)?;
        Ok((
            EigenvalueEstimate {
                value: lambda,
                oscillation: false,
                uncertainty,
                method: Method::Shooting,
                profile_n: self.profile.n,
            },
            EigenmodeSolution { params, samples, defect },
        ))
    }

    fn newton(&self, lambda_guess: f64, a_guess: Option<f64>) -> Result<(f64, f64, [f64; 2], f64)> {
        if lambda_guess.abs() < LAMBDA_GUARD {
            return Err(Error::Validation("lambda guess inside the lambda = 0 guard band".into()));
        }
        let mut lambda = lambda_guess;
        let mut a = match a_guess {
            Some(a) => a,
            None => self.optimal_amplitude(lambda)?,
        };
        let norm = |d: [f64; 2]| d[0].abs().max(d[1].abs());
        let mut d = self.matching_defect(ModeParams { lambda, a })?;
        let mut last_step = f64::INFINITY;
        for _ in 0..50 {
            let stalled = last_step.abs() <= 1e-13 * lambda.abs().max(1.0) && norm(d) <= 1e3 * DEFECT_TOLERANCE;
            if norm(d) <= DEFECT_TOLERANCE || stalled {
                if lambda.abs() < LAMBDA_GUARD {
                    return Err(Error::NoConvergence(format!("converged to the excluded value lambda = {lambda}")));
                }
                return Ok((lambda, a, d, if last_step.is_finite() { last_step } else { 0.0 }));
            }
            let h = 1e-6f64.max(1e-6 * lambda.abs());
            let cb = self.center_basis(lambda)?;
            let dp = self.matching_defect(ModeParams { lambda: lambda + h, a })?;
            let dm = self.matching_defect(ModeParams { lambda: lambda - h, a })?;
            let jl = [(dp[0] - dm[0]) / (2.0 * h), (dp[1] - dm[1]) / (2.0 * h)];
            let det = jl[0] * cb[1] - jl[1] * cb[0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::NoConvergence("singular Jacobian in eigenvalue Newton".into()));
            }
            let dl = (cb[1] * d[0] - cb[0] * d[1]) / det;
            let da = (-jl[1] * d[0] + jl[0] * d[1]) / det;
            let mut t = 1.0;
            loop {
                let (nl, na) = (lambda - t * dl, a - t * da);
                let trial = if nl.abs() < LAMBDA_GUARD || (nl + 1.0).abs() < LAMBDA_GUARD {
                    None
                } else {
                    self.matching_defect(ModeParams { lambda: nl, a: na }).ok()
                };
                if let Some(nd) = trial {
                    if norm(nd) < norm(d) || norm(nd) <= DEFECT_TOLERANCE {
                        last_step = t * dl;
                        lambda = nl;
                        a = na;
                        d = nd;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-4 {
                    return Err(Error::NoConvergence(format!(
                        "eigenvalue Newton stalled at lambda = {lambda}, defect = {:e}",
                        norm(d)
                    )));
                }
            }
        }
        Err(Error::NoConvergence(format!(
            "eigenvalue Newton did not converge from guess {lambda_guess} (last lambda = {lambda}, defect = {:e})",
            norm(d)
        )))
    }

    fn sample(&self, params: ModeParams) -> Result<Vec<[f64; 3]>> {
        let eps = self.step_off;
        let rm = self.match_point;
        let lambda = params.lambda;
        let grid: Vec<f64> = std::iter::once(eps)
            .chain((1..256).map(|k| k as f64 / 256.0))
            .chain(std::iter::once(1.0 - eps))
            .collect();
        let inner: Vec<f64> = grid.iter().copied().filter(|&r| r <= rm).collect();
        let outer: Vec<f64> = grid.iter().rev().copied().filter(|&r| r > rm).collect();
        let (v, vp) = mode_center_series(params.a, lambda, self.profile.b, eps);
        let (_, left) = self.solver.solve_dense(self.rhs(lambda), eps, [v, vp], rm, &inner)?;
        let start = 1.0 - eps;
        let (v, vp) = mode_lightcone_series(lambda, self.profile.c, start)?;
        let (_, right) = self.solver.solve_dense(self.rhs(lambda), start, [v, vp], rm, &outer)?;
        let mut out: Vec<[f64; 3]> = inner.iter().zip(left).map(|(r, y)| [*r, y[0], y[1]]).collect();
        let mut tail: Vec<[f64; 3]> = outer.iter().zip(right).map(|(r, y)| [*r, y[0], y[1]]).collect();
        tail.reverse();
        out.extend(tail);
        Ok(out)
    }

    /// Candidate eigenvalues in `[lo, hi]` from sign changes of the matching
    /// function on `steps + 1` grid points, refined by bisection. Sign changes
    /// across poles (where |W| stays O(1)) are discarded. Ascending order.
    pub fn scan_eigenvalues(&self, range: (f64, f64), steps: usize) -> Result<Vec<f64>> {
        let (lo, hi) = range;
        if !(hi > lo) || steps == 0 {
            return Err(Error::Validation(format!("bad lambda range [{lo}, {hi}] / steps {steps}")));
        }
        let grid: Vec<f64> = (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .filter(|l| l.abs() >= LAMBDA_GUARD && (l + 1.0).abs() >= LAMBDA_GUARD)
            .collect();
        let values: Vec<Option<f64>> = self.exec.map(&grid, |&l| self.matching_function(l).ok());
        let mut brackets = Vec::new();
        let mut exact = Vec::new();
        for k in 0..grid.len() {
            let Some(w) = values[k] else { continue };
            if w.abs() < 1e-13 {
                exact.push(grid[k]);
                continue;
            }
            if k + 1 < grid.len() {
                if let Some(w1) = values[k + 1] {
                    if w1.abs() >= 1e-13 && w.signum() != w1.signum() {
                        brackets.push((grid[k], w, grid[k + 1]));
                    }
                }
            }
        }
        let refined: Vec<Option<f64>> = self.exec.map(&brackets, |&(a, wa, b)| self.bisect(a, wa, b));
        let mut out: Vec<f64> = exact.into_iter().chain(refined.into_iter().flatten()).collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
        Ok(out)
    }

    fn bisect(&self, mut a: f64, mut wa: f64, mut b: f64) -> Option<f64> {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let wm = self.matching_function(m).ok()?;
            if wm == 0.0 {
                return Some(m);
            }
            if wm.signum() == wa.signum() {
                a = m;
                wa = wm;
            } else {
                b = m;
            }
            if b - a < 1e-12 {
                break;
            }
        }
        let m = 0.5 * (a + b);
        let wm = self.matching_function(m).ok()?;
        (wm.abs() < 1e-6).then_some(m)
    }

    /// Analyse λ = −2, where the lightcone indices {0, 3} are resonant.
    ///
    /// At λ = −2 the lightcone branch is `1 + x² + βx³ + …` (`v₁ = 0`, `v₂ = 1`
    /// for every profile) and the cubic coefficient β is free exactly when
    /// the log obstruction `4c² − 4` vanishes. The check integrates the
    /// center branch and both lightcone basis solutions, solves for `(a, β)`
    /// and reports the resulting defect alongside the plain shooter's mismatch.
    pub fn check_minus_two(&self) -> Result<MinusTwoCheck> {
        let lambda = -2.0;
        let shooter_mismatch = self.matching_function(lambda)?;
        let c = self.profile.c;
        let log_obstruction = 4.0 * c * c - 4.0;

        let eps = self.step_off;
        let start = 1.0 - eps;
        let x = -eps;
        let cb = self.center_basis(lambda)?;
        let r0 = self.solver.solve(self.rhs(lambda), start, [1.0 + x * x, 2.0 * x], self.match_point)?;
        let r3 = self
            .solver
            .solve(self.rhs(lambda), start, [x * x * x, 3.0 * x * x], self.match_point)?;
        // a·cb − β·r3 = r0
        let det = cb[0] * (-r3[1]) - (-r3[0]) * cb[1];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoConvergence("degenerate resonant basis at lambda = -2".into()));
        }
        let a = (r0[0] * (-r3[1]) - (-r3[0]) * r0[1]) / det;
        let cubic = (cb[0] * r0[1] - cb[1] * r0[0]) / det;
        let defect = [
            a * cb[0] - r0[0] - cubic * r3[0],
            a * cb[1] - r0[1] - cubic * r3[1],
        ];
        let log_coefficient = self.fit_log_coefficient(lambda)?;
        Ok(MinusTwoCheck {
            shooter_mismatch,
            log_obstruction,
            a,
            cubic,
            defect,
            log_coefficient,
        })
    }

    /// Integrate the center branch towards the lightcone and fit
    /// `Σ c_k x^k (k ≤ 5) + (K x³ + K' x⁴) log|x|`, normalized so that `c_0 = 1`.
    fn fit_log_coefficient(&self, lambda: f64) -> Result<f64> {
        const SPAN: f64 = 0.1;
        const INNER: f64 = 0.002;
        const POINTS: usize = 400;
        const POLY: usize = 8;
        let xs: Vec<f64> = (0..POINTS)
            .map(|k| -SPAN + (SPAN - INNER) * k as f64 / (POINTS - 1) as f64)
            .collect();
        let rhos: Vec<f64> = xs.iter().map(|x| 1.0 + x).collect();
        let eps = self.step_off;
        let (v, vp) = mode_center_series(1.0, lambda, self.profile.b, eps);
        let solver = Dopri5::new(self.solver.tol.scaled(1e-2));
        let (_, vals) = solver.solve_dense(self.rhs(lambda), eps, [v, vp], *rhos.last().unwrap_or(&1.0), &rhos)?;
        // columns in s = x/SPAN keep the design matrix well scaled
        let design = nalgebra::DMatrix::from_fn(POINTS, POLY + 3, |i, j| {
            let s = xs[i] / SPAN;
            if j < POLY {
                s.powi(j as i32)
            } else {
                s.powi((j - POLY + 3) as i32) * s.abs().ln()
            }
        });
        let rhs = nalgebra::DVector::from_iterator(POINTS, vals.iter().map(|y| y[0]));
        let coeffs = design
            .svd(true, true)
            .solve(&rhs, 1e-15)
            .map_err(|e| Error::NoConvergence(format!("log-coefficient fit failed: {e}")))?;
        if coeffs[0] == 0.0 || !coeffs[0].is_finite() {
            return Err(Error::NoConvergence("center branch vanishes at the lightcone".into()));
        }
        let coeffs_log3 = coeffs[POLY];
        // K x³ log|x| = K SPAN³ s³ (log|s| + log SPAN)
        Ok(coeffs_log3 / coeffs[0] / SPAN.powi(3))
    }
}
