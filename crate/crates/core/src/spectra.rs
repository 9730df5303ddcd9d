//! Growth rates from evolution data.
//!
//! The norm `‖u‖² = Σ_j ∫₀¹ u_j² dρ` of a generic solution grows like
//! `C e^{μ₀τ}` with μ₀ the largest real part in the spectrum. Sub-dominant
//! rates are exposed by co-evolving several data sets and, after every step,
//! replacing level j by its projection orthogonal to levels 0..j−1. Level j
//! then grows at μ_j. Levels are renormalized after each projection and the
//! log growth accumulated, so large rates cannot overflow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{Grid, InitialData, Scheme, State, Workspace};
use crate::mode_ode::{EigenvalueEstimate, Method};
use crate::parallel::Exec;

/// At most this many filter levels (dominant plus three).
pub const MAX_LEVELS: usize = 4;
/// Shortest admissible fit window in τ.
pub const MIN_WINDOW: f64 = 2.0;
pub const MIN_FIT_SAMPLES: usize = 20;
/// Relative norm below which a projected level counts as collapsed.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Quadrature weights over the grid for `∫₀¹ · dρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Composite trapezoid on `[0, 1]`; the exterior point gets weight zero.
    pub fn trapezoid(grid: Grid) -> Self {
        let h = grid.spacing();
        let mut weights = vec![h; grid.len()];
        weights[0] = 0.5 * h;
        weights[grid.n] = 0.5 * h;
        weights[grid.n + 1] = 0.0;
        Self { weights }
    }

    fn check(&self, s: &State) -> Result<()> {
        if s.len() != self.weights.len() {
            return Err(Error::GridMismatch(s.len(), self.weights.len()));
        }
        Ok(())
    }

    pub(crate) fn dot_unchecked(&self, x: &State, y: &State) -> f64 {
        let mut total = 0.0;
        for (a, b) in x.components().into_iter().zip(y.components()) {
            total += self.weights.iter().zip(a.iter().zip(b)).map(|(w, (a, b))| w * a * b).sum::<f64>();
        }
        total
    }

    pub(crate) fn norm_unchecked(&self, x: &State) -> f64 {
        self.dot_unchecked(x, x).sqrt()
    }
}

pub fn inner_product(x: &State, y: &State, q: &QuadratureRule) -> Result<f64> {
    q.check(x)?;
    q.check(y)?;
    Ok(q.dot_unchecked(x, y))
}

pub fn norm(x: &State, q: &QuadratureRule) -> Result<f64> {
    Ok(inner_product(x, x, q)?.sqrt())
}

/// Modified Gram–Schmidt: subtract from `target` its component along each
/// basis member in turn.
pub fn project_out(target: &State, basis: &[State], q: &QuadratureRule) -> Result<State> {
    let mut out = target.clone();
    project_out_in_place(&mut out, basis, q)?;
    Ok(out)
}

pub fn project_out_in_place(target: &mut State, basis: &[State], q: &QuadratureRule) -> Result<()> {
    q.check(target)?;
    for (k, b) in basis.iter().enumerate() {
        q.check(b)?;
        let bb = q.dot_unchecked(b, b);
        if !(bb > 0.0) || !bb.is_finite() {
            return Err(Error::Degenerate(format!("basis member {k} has zero norm")));
        }
        let coeff = q.dot_unchecked(target, b) / bb;
        target.axpy(-coeff, b);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterOptions {
    /// Rescale every level to unit norm after each projection.
    pub renormalize: bool,
    pub exec: ExecPolicy,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            renormalize: true,
            exec: ExecPolicy::Parallel,
        }
    }
}

/// Serializable mirror of [`Exec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecPolicy> for Exec {
    fn from(p: ExecPolicy) -> Self {
        match p {
            ExecPolicy::Sequential => Exec::Sequential,
            ExecPolicy::Parallel => Exec::Parallel,
        }
    }
}

impl From<Exec> for ExecPolicy {
    fn from(e: Exec) -> Self {
        match e {
            Exec::Sequential => ExecPolicy::Sequential,
            Exec::Parallel => ExecPolicy::Parallel,
        }
    }
}

/// Co-evolved, filtered levels with their log-norm histories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    /// Final (normalized, if renormalizing) level states.
    pub levels: Vec<State>,
    /// Sample times, strictly increasing.
    pub tau: Vec<f64>,
    /// `log_norm[j][k]` = Λ_j at `tau[k]`.
    pub log_norm: Vec<Vec<f64>>,
    /// Accumulated log of all rescale factors applied to each level.
    pub rescaled: Vec<f64>,
}

impl FilterBank {
    pub fn series(&self, level: usize) -> (&[f64], &[f64]) {
        (&self.tau, &self.log_norm[level])
    }

    /// CSV rows `τ,Λ_0,…,Λ_m`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let header: Vec<String> = (0..self.log_norm.len()).map(|j| format!("log_norm_level_{j}")).collect();
        writeln!(out, "tau,{}", header.join(","))?;
        for (k, t) in self.tau.iter().enumerate() {
            let row: Vec<String> = self.log_norm.iter().map(|l| format!("{:.12e}", l[k])).collect();
            writeln!(out, "{t},{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Level {
    state: State,
    ws: Workspace,
    status: Result<()>,
}

/// Evolve all levels in lockstep, filtering after every step.
pub fn co_evolve_filtered(scheme: &Scheme, data: Vec<State>, opts: FilterOptions) -> Result<FilterBank> {
    if data.is_empty() || data.len() > MAX_LEVELS {
        return Err(Error::Validation(format!("need 1..={MAX_LEVELS} filter levels, got {}", data.len())));
    }
    let grid = scheme.grid();
    let q = scheme.quadrature();
    let exec: Exec = opts.exec.into();
    let m = data.len();
    let mut levels = Vec::with_capacity(m);
    for mut s in data {
        scheme.prepare(&mut s)?;
        levels.push(Level {
            state: s,
            ws: Workspace::new(grid),
            status: Ok(()),
        });
    }
    let mut log_scale = vec![0.0; m];
    let mut log_norm: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut tau = Vec::new();

    let filter = |levels: &mut [Level], log_scale: &mut [f64]| -> Result<Vec<f64>> {
        let mut logs = Vec::with_capacity(m);
        for j in 0..m {
            let (done, rest) = levels.split_at_mut(j);
            let target = &mut rest[0].state;
            let before = q.norm_unchecked(target);
            for b in done.iter() {
                let b = &b.state;
                let bb = q.dot_unchecked(b, b);
                let coeff = q.dot_unchecked(target, b) / bb;
                target.axpy(-coeff, b);
            }
            let after = q.norm_unchecked(target);
            if !(after > DEGENERACY_THRESHOLD * before) || !after.is_finite() {
                return Err(Error::Degenerate(format!(
                    "level {j} collapsed under projection at tau = {} (norm {after:e} of {before:e})",
                    target.tau
                )));
            }
            if opts.renormalize {
                target.scale(1.0 / after);
                log_scale[j] += after.ln();
                logs.push(log_scale[j]);
            } else {
                logs.push(after.ln());
            }
        }
        Ok(logs)
    };

    let record = |tau: &mut Vec<f64>, log_norm: &mut [Vec<f64>], t: f64, logs: &[f64]| {
        tau.push(t);
        for (series, v) in log_norm.iter_mut().zip(logs) {
            series.push(*v);
        }
    };

    let logs = filter(&mut levels, &mut log_scale)?;
    record(&mut tau, &mut log_norm, levels[0].state.tau, &logs);
    let (steps, dt) = scheme.step_plan();
    let stride = scheme.config().stride;
    for k in 1..=steps {
        exec.for_each_mut(&mut levels, |lvl| {
            lvl.status = scheme.step_with(&mut lvl.state, dt, &mut lvl.ws);
        });
        for lvl in &mut levels {
            std::mem::replace(&mut lvl.status, Ok(()))?;
        }
        let logs = filter(&mut levels, &mut log_scale)?;
        if k % stride == 0 || k == steps {
            record(&mut tau, &mut log_norm, levels[0].state.tau, &logs);
        }
    }
    Ok(FilterBank {
        levels: levels.into_iter().map(|l| l.state).collect(),
        tau,
        log_norm,
        rescaled: log_scale,
    })
}

/// Least-squares line through a log-norm series over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    /// Standard error of the slope from the residual.
    pub slope_stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub oscillation: bool,
}

/// Ordinary least squares of `values` against `tau` restricted to `window`.
pub fn fit_growth_rate(tau: &[f64], values: &[f64], window: (f64, f64)) -> Result<GrowthFit> {
    if tau.len() != values.len() {
        return Err(Error::Validation(format!("series length mismatch: {} vs {}", tau.len(), values.len())));
    }
    let (a, b) = window;
    if !(b - a >= MIN_WINDOW - 1e-12) {
        return Err(Error::WindowTooShort(format!("[{a}, {b}] shorter than {MIN_WINDOW}")));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = tau
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= a - 1e-12 && **t <= b + 1e-12)
        .map(|(t, y)| (*t, *y))
        .unzip();
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort(format!(
            "[{a}, {b}] holds {} samples, need {MIN_FIT_SAMPLES}",
            t.len()
        )));
    }
    let (slope, intercept) = linear_fit(&t, &y);
    let resid: Vec<f64> = t.iter().zip(&y).map(|(t, y)| y - (intercept + slope * t)).collect();
    let n = t.len() as f64;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let rms_residual = (rss / n).sqrt();
    let tm = t.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|t| (t - tm) * (t - tm)).sum();
    let slope_stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(GrowthFit {
        slope,
        intercept,
        rms_residual,
        slope_stderr,
        window,
        samples: t.len(),
        oscillation: oscillation_flag(&t, &y),
    })
}

fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = t.iter().map(|t| (t - tm) * (t - tm)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * tm)
}

/// Residual of a least-squares quadratic (in centered, scaled τ).
fn quadratic_residual(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let span = t.iter().map(|t| (t - tm).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = t.iter().map(|t| (t - tm) / span).collect();
    // normal equations for 1, x, x²
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (xi, yi) in x.iter().zip(y) {
        let p = [1.0, *xi, xi * xi];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
            r[i] += p[i] * yi;
        }
    }
    let c = solve3(m, r);
    x.iter().zip(y).map(|(x, y)| y - (c[0] + c[1] * x + c[2] * x * x)).collect()
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let p = (k..3).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs())).unwrap_or(k);
        m.swap(k, p);
        r.swap(k, p);
        for i in k + 1..3 {
            let f = m[i][k] / m[k][k];
            for j in k..3 {
                m[i][j] -= f * m[k][j];
            }
            r[i] -= f * r[k];
        }
    }
    let mut c = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| m[k][j] * c[j]).sum();
        c[k] = (r[k] - s) / m[k][k];
    }
    c
}

/// Absolute floor on the detrended RMS below which structure is ignored.
pub const OSCILLATION_FLOOR: f64 = 1e-3;

/// Periodic structure in the series beyond a quadratic trend: at least four
/// sign changes of the detrended residual, with an RMS above both the floor and
/// three times the point-to-point noise level.
pub fn oscillation_flag(t: &[f64], y: &[f64]) -> bool {
    if t.len() < 5 {
        return false;
    }
    let q = quadratic_residual(t, y);
    let n = q.len() as f64;
    let rms = (q.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let diffs: Vec<f64> = q.windows(2).map(|w| w[1] - w[0]).collect();
    let noise = (diffs.iter().map(|d| d * d).sum::<f64>() / (2.0 * diffs.len() as f64)).sqrt();
    let sign_changes = q.windows(2).filter(|w| w[0].signum() != w[1].signum() && w[0] != 0.0).count();
    sign_changes >= 4 && rms > (3.0 * noise).max(OSCILLATION_FLOOR)
}

/// Fit policy for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowPolicy {
    /// Fixed window.
    Fixed { start: f64, end: f64 },
    /// Start anywhere in `[τ_end/2, τ_end − min_length]` on a grid of `step`,
    /// picking the start whose fit has the smallest slope standard error.
    Auto { step: f64, min_length: f64 },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Auto { step: 0.5, min_length: 4.0 }
    }
}

impl WindowPolicy {
    pub fn validate(&self, tau_end: f64) -> Result<()> {
        match *self {
            WindowPolicy::Fixed { start, end } => {
                if !(start >= 0.0 && end <= tau_end + 1e-9 && end - start >= MIN_WINDOW) {
                    return Err(Error::Validation(format!("fit window [{start}, {end}] invalid for tau_end = {tau_end}")));
                }
            }
            WindowPolicy::Auto { step, min_length } => {
                if !(step > 0.0 && min_length >= MIN_WINDOW && min_length <= tau_end / 2.0 + 1e-9) {
                    return Err(Error::Validation(format!(
                        "auto window (step {step}, min length {min_length}) invalid for tau_end = {tau_end}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One fitted level of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: usize,
    pub fit: GrowthFit,
    /// Largest slope change when the window start moves by ±1 in τ.
    pub window_shift: f64,
    pub uncertainty: f64,
}

/// Fit a level with the given policy and attach a window-shift uncertainty.
pub fn fit_level(bank: &FilterBank, level: usize, policy: WindowPolicy) -> Result<LevelFit> {
    let (tau, values) = bank.series(level);
    let tau_end = *tau.last().ok_or_else(|| Error::WindowTooShort("empty series".into()))?;
    let fit = match policy {
        WindowPolicy::Fixed { start, end } => fit_growth_rate(tau, values, (start, end))?,
        WindowPolicy::Auto { step, min_length } => {
            let mut best: Option<GrowthFit> = None;
            let mut a = 0.5 * tau_end;
            while a <= tau_end - min_length + 1e-9 {
                let f = fit_growth_rate(tau, values, (a, tau_end))?;
                if best.as_ref().is_none_or(|b| f.slope_stderr < b.slope_stderr) {
                    best = Some(f);
                }
                a += step;
            }
            best.ok_or_else(|| Error::WindowTooShort(format!("no admissible window up to tau = {tau_end}")))?
        }
    };
    let (a, b) = fit.window;
    let mut window_shift = 0.0f64;
    for shift in [-1.0, 1.0] {
        let start = a + shift;
        if start >= 0.0 && b - start >= MIN_WINDOW {
            if let Ok(g) = fit_growth_rate(tau, values, (start, b)) {
                window_shift = window_shift.max((g.slope - fit.slope).abs());
            }
        }
    }
    let uncertainty = fit.slope_stderr + window_shift + 1e-12;
    Ok(LevelFit {
        level,
        fit,
        window_shift,
        uncertainty,
    })
}

/// Evolution-side spectrum of one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub profile_n: usize,
    pub levels: Vec<LevelFit>,
    pub bank: FilterBank,
}

impl Spectrum {
    pub fn estimates(&self) -> Vec<EigenvalueEstimate> {
        self.levels
            .iter()
            .map(|l| EigenvalueEstimate {
                value: l.fit.slope,
                oscillation: l.fit.oscillation,
                uncertainty: l.uncertainty,
                method: Method::Evolution,
                profile_n: self.profile_n,
            })
            .collect()
    }
}

/// Run the filter bank on the default data library and fit every level.
pub fn extract_spectrum(
    scheme: &Scheme,
    profile_n: usize,
    levels: usize,
    policy: WindowPolicy,
    opts: FilterOptions,
) -> Result<Spectrum> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::Validation(format!("levels = {levels} outside 1..={MAX_LEVELS}")));
    }
    policy.validate(scheme.config().tau_end)?;
    let grid = scheme.grid();
    let data = InitialData::LIBRARY[..levels].iter().map(|d| d.state(grid)).collect();
    let bank = co_evolve_filtered(scheme, data, opts)?;
    let fits = (0..levels).map(|j| fit_level(&bank, j, policy)).collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        profile_n,
        levels: fits,
        bank,
    })
}
