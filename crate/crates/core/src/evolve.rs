//! Linearized evolution around a profile in adapted coordinates.
//!
//! The perturbation `w(τ, ρ)` is carried as the first-order system
//! `u = (w, w_τ, w_ρ)`,
//!
//! ```text
//! ∂τ u = A ∂ρ u + B u,   A = [[0, 0, 0], [0, −2ρ, 1−ρ²], [0, 1, 0]],
//! ```
//!
//! with `B` collecting the undifferentiated terms. The nonzero eigenvalues of
//! `A` are `λ± = ±1 − ρ`; each characteristic part is differentiated with a
//! 3-point one-sided stencil on its upwind side, and time is advanced by Heun's
//! method. The grid runs over `ρ ∈ [0, 1 + Δρ]`; past the lightcone both speeds
//! are non-positive, so the outer edge needs no boundary condition. The center
//! is handled by parity ghosts: `w` and `w_τ` odd, `w_ρ` even.
//!
//! `u3 = ∂ρu1` is a constraint and `∂τ(u3 − ∂ρu1) = 0` exactly, so any
//! discretization error in it survives as a λ = 0 family that sits above the
//! stable modes. [`ConstraintTreatment::Reintegrate`] removes that family by
//! rebuilding `u1` from `u3` after each stage.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_ode::EigenmodeSolution;
use crate::profiles::{evaluate, Profile};
use crate::spectra::QuadratureRule;

pub const DEFAULT_GRID: usize = 2048;
pub const MIN_GRID: usize = 32;
/// Heun is stable up to κ = 1/4 here (the left stencil at speed ≈ 2 puts an
/// eigenvalue near −8/Δρ on the real axis); 0.2 leaves a margin.
pub const DEFAULT_CFL: f64 = 0.2;
pub const DEFAULT_TAU_END: f64 = 12.0;
/// Per-step growth bound `exp(INSTABILITY_RATE · Δτ)` of the instability detector.
pub const INSTABILITY_RATE: f64 = 20.0;

/// Uniform grid `ρ_i = i/N`, `i = 0 ..= N+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::Validation(format!("grid N = {n} below minimum {MIN_GRID}")));
        }
        Ok(Self { n })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of stored points (N + 2).
    pub fn len(&self) -> usize {
        self.n + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.rho(i)).collect()
    }
}

/// `(u1, u2, u3) = (w, w_τ, w_ρ)` at time τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub tau: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
}

impl State {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            tau: 0.0,
            u1: z.clone(),
            u2: z.clone(),
            u3: z,
        }
    }

    /// Sample `ρ ↦ [u1, u2, u3]` on the grid.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [f64; 3]) -> Self {
        let mut s = Self::zeros(grid);
        for i in 0..grid.len() {
            let [a, b, c] = f(grid.rho(i));
            s.u1[i] = a;
            s.u2[i] = b;
            s.u3[i] = c;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn components(&self) -> [&[f64]; 3] {
        [&self.u1, &self.u2, &self.u3]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in [&mut self.u1, &mut self.u2, &mut self.u3] {
            c.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    /// `self += alpha · other` (τ untouched).
    pub fn axpy(&mut self, alpha: f64, other: &State) {
        for (c, o) in [&mut self.u1, &mut self.u2, &mut self.u3].into_iter().zip(other.components()) {
            c.iter_mut().zip(o).for_each(|(v, w)| *v += alpha * w);
        }
    }

    /// `max_i |u3 − D_c u1|` over the interior points with the centered difference.
    pub fn constraint_violation(&self) -> f64 {
        let n = self.len();
        let h = 1.0 / (n - 2) as f64;
        (1..n - 1)
            .map(|i| (self.u3[i] - (self.u1[i + 1] - self.u1[i - 1]) / (2.0 * h)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV rows `τ,ρ,u1,u2,u3`.
    pub fn write_csv(&self, out: &mut impl Write, with_header: bool) -> Result<()> {
        if with_header {
            writeln!(out, "tau,rho,u1,u2,u3")?;
        }
        let n = self.len() - 2;
        for i in 0..self.len() {
            let rho = i as f64 / n as f64;
            writeln!(out, "{},{},{:e},{:e},{:e}", self.tau, rho, self.u1[i], self.u2[i], self.u3[i])?;
        }
        Ok(())
    }
}

/// How the `u3 = ∂ρu1` constraint is treated during evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintTreatment {
    /// Rebuild `u1` as the trapezoid integral of `u3` after every stage.
    #[default]
    Reintegrate,
    /// Evolve `u1` with `∂τu1 = u2` only.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Δτ = κ Δρ.
    pub cfl: f64,
    pub tau_end: f64,
    /// Observer is called every `stride` steps (and at the end).
    pub stride: usize,
    #[serde(default)]
    pub constraint: ConstraintTreatment,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            tau_end: DEFAULT_TAU_END,
            stride: 1,
            constraint: ConstraintTreatment::Reintegrate,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::Validation(format!("CFL factor {} outside (0, 0.5]", self.cfl)));
        }
        if !(self.tau_end >= 0.0 && self.tau_end.is_finite()) {
            return Err(Error::Validation(format!("tau_end = {} must be finite and >= 0", self.tau_end)));
        }
        if self.stride == 0 {
            return Err(Error::Validation("observer stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(λ₋, λ₊) = (−1−ρ, 1−ρ)`.
pub fn characteristic_speeds(rho: f64) -> (f64, f64) {
    (-1.0 - rho, 1.0 - rho)
}

/// Spectral projectors `(A₋, A₊)` of the `(u2, u3)` block, embedded in 3×3.
pub fn characteristic_projectors(rho: f64) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let q = 1.0 - rho * rho;
    let plus = [
        [0.0, 0.0, 0.0],
        [0.0, 0.5 * (1.0 - rho), 0.5 * q],
        [0.0, 0.5, 0.5 * (1.0 + rho)],
    ];
    let minus = [
        [0.0, 0.0, 0.0],
        [0.0, 0.5 * (1.0 + rho), -0.5 * q],
        [0.0, -0.5, 0.5 * (1.0 - rho)],
    ];
    (minus, plus)
}

/// Zero `u1` and `u2` at the center.
pub fn apply_center_bc(s: &mut State) {
    s.u1[0] = 0.0;
    s.u2[0] = 0.0;
}

/// Ghost values `[u(−Δρ), u(−2Δρ)]` for each component by parity reflection.
pub fn ghost_values(s: &State) -> [[f64; 2]; 3] {
    [
        [-s.u1[1], -s.u1[2]],
        [-s.u2[1], -s.u2[2]],
        [s.u3[1], s.u3[2]],
    ]
}

/// Cumulative trapezoid `u1_i = Σ h(u3_{k−1} + u3_k)/2`, `u1_0 = 0`.
pub fn reintegrate(s: &mut State) {
    let h = 1.0 / (s.len() - 2) as f64;
    let mut acc = 0.0;
    s.u1[0] = 0.0;
    for i in 1..s.len() {
        acc += 0.5 * h * (s.u3[i - 1] + s.u3[i]);
        s.u1[i] = acc;
    }
}

/// Per-point stencil weights. `d2 = Σ wᵢ·Dᵢu2 + …` over the four one-sided
/// derivatives `[L u2, L u3, R u2, R u3]` (left, right).
#[derive(Debug, Clone, Copy)]
struct Coef {
    d2: [f64; 4],
    d3: [f64; 4],
    /// `2(1−ρ²)/ρ`
    b_u3: f64,
    /// `2cos(2f)/ρ²`
    b_u1: f64,
}

/// Discretized operator for one background profile on one grid.
#[derive(Debug, Clone)]
pub struct Scheme {
    grid: Grid,
    cfg: SchemeConfig,
    coef: Vec<Coef>,
    quadrature: QuadratureRule,
}

/// Scratch buffers for allocation-free stepping.
#[derive(Debug, Clone)]
pub struct Workspace {
    k1: State,
    k2: State,
    mid: State,
}

impl Workspace {
    pub fn new(grid: Grid) -> Self {
        Self {
            k1: State::zeros(grid),
            k2: State::zeros(grid),
            mid: State::zeros(grid),
        }
    }
}

impl Scheme {
    /// Linearize around `profile`; the profile table must reach `1 + 1/N`.
    pub fn new(grid: Grid, profile: &Profile, cfg: SchemeConfig) -> Result<Self> {
        let mut cos2f = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (f, _) = evaluate(profile, grid.rho(i))?;
            cos2f.push((2.0 * f).cos());
        }
        Self::with_potential(grid, cfg, |i| cos2f[i])
    }

    /// Build from `cos 2f` at each grid index.
    pub fn with_potential(grid: Grid, cfg: SchemeConfig, cos2f: impl Fn(usize) -> f64) -> Result<Self> {
        cfg.validate()?;
        let n = grid.n;
        let coef = (0..grid.len())
            .map(|i| {
                let rho = grid.rho(i);
                let (lm, lp) = characteristic_speeds(rho);
                let q = 1.0 - rho * rho;
                // λ₊A₊ and λ₋A₋ rows 2 and 3 acting on (∂u2, ∂u3)
                let plus2 = [0.5 * lp * (1.0 - rho), 0.5 * lp * q];
                let plus3 = [0.5 * lp, 0.5 * lp * (1.0 + rho)];
                let minus2 = [0.5 * lm * (1.0 + rho), -0.5 * lm * q];
                let minus3 = [-0.5 * lm, 0.5 * lm * (1.0 - rho)];
                let (d2, d3) = if i < n && lp > 0.0 {
                    (
                        [minus2[0], minus2[1], plus2[0], plus2[1]],
                        [minus3[0], minus3[1], plus3[0], plus3[1]],
                    )
                } else {
                    (
                        [minus2[0] + plus2[0], minus2[1] + plus2[1], 0.0, 0.0],
                        [minus3[0] + plus3[0], minus3[1] + plus3[1], 0.0, 0.0],
                    )
                };
                let (b_u3, b_u1) = if i == 0 {
                    (0.0, 0.0)
                } else {
                    (2.0 * q / rho, 2.0 * cos2f(i) / (rho * rho))
                };
                Coef { d2, d3, b_u3, b_u1 }
            })
            .collect();
        Ok(Self {
            grid,
            cfg,
            coef,
            quadrature: QuadratureRule::trapezoid(grid),
        })
    }

    /// Ground-state operator using the closed form directly.
    pub fn ground_state(grid: Grid, cfg: SchemeConfig) -> Result<Self> {
        Self::with_potential(grid, cfg, |i| {
            let f = 2.0 * grid.rho(i).atan();
            (2.0 * f).cos()
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    /// Nominal step κΔρ.
    pub fn dtau(&self) -> f64 {
        self.cfg.cfl * self.grid.spacing()
    }

    /// Step count and actual Δτ (≤ κΔρ) that land exactly on `tau_end`.
    pub fn step_plan(&self) -> (usize, f64) {
        let dt = self.dtau();
        if self.cfg.tau_end == 0.0 {
            return (0, dt);
        }
        let steps = ((self.cfg.tau_end / dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.cfg.tau_end / steps as f64)
    }

    /// Right-hand side `∂τu` written into `out`.
    pub fn spatial_operator_into(&self, s: &State, out: &mut State) {
        let len = self.grid.len();
        let h2 = 2.0 * self.grid.spacing();
        let (u1, u2, u3) = (&s.u1, &s.u2, &s.u3);
        let g = ghost_values(s);
        // u(i−1), u(i−2) including ghosts
        let back = |u: &[f64], gh: &[f64; 2], i: usize, k: usize| -> f64 {
            if i >= k {
                u[i - k]
            } else {
                gh[k - i - 1]
            }
        };
        for i in 0..len {
            let c = &self.coef[i];
            let (l2, l3) = if i >= 2 {
                (
                    (3.0 * u2[i] - 4.0 * u2[i - 1] + u2[i - 2]) / h2,
                    (3.0 * u3[i] - 4.0 * u3[i - 1] + u3[i - 2]) / h2,
                )
            } else {
                (
                    (3.0 * u2[i] - 4.0 * back(u2, &g[1], i, 1) + back(u2, &g[1], i, 2)) / h2,
                    (3.0 * u3[i] - 4.0 * back(u3, &g[2], i, 1) + back(u3, &g[2], i, 2)) / h2,
                )
            };
            let (r2, r3) = if i + 2 < len {
                (
                    (-3.0 * u2[i] + 4.0 * u2[i + 1] - u2[i + 2]) / h2,
                    (-3.0 * u3[i] + 4.0 * u3[i + 1] - u3[i + 2]) / h2,
                )
            } else {
                (0.0, 0.0)
            };
            let d = [l2, l3, r2, r3];
            let char2 = c.d2[0] * d[0] + c.d2[1] * d[1] + c.d2[2] * d[2] + c.d2[3] * d[3];
            let char3 = c.d3[0] * d[0] + c.d3[1] * d[1] + c.d3[2] * d[2] + c.d3[3] * d[3];
            out.u1[i] = u2[i];
            out.u2[i] = char2 - u2[i] + c.b_u3 * u3[i] - c.b_u1 * u1[i];
            out.u3[i] = char3;
        }
        out.u1[0] = 0.0;
        out.u2[0] = 0.0;
        out.tau = s.tau;
    }

    pub fn spatial_operator(&self, s: &State) -> State {
        let mut out = State::zeros(self.grid);
        self.spatial_operator_into(s, &mut out);
        out
    }

    fn impose(&self, s: &mut State) {
        apply_center_bc(s);
        if self.cfg.constraint == ConstraintTreatment::Reintegrate {
            reintegrate(s);
        }
    }

    /// Project initial data onto the discrete constraint surface the stepper preserves.
    pub fn prepare(&self, s: &mut State) -> Result<()> {
        self.check_grid(s)?;
        self.impose(s);
        Ok(())
    }

    fn check_grid(&self, s: &State) -> Result<()> {
        if s.len() != self.grid.len() || s.u2.len() != s.len() || s.u3.len() != s.len() {
            return Err(Error::GridMismatch(s.len(), self.grid.len()));
        }
        Ok(())
    }

    /// One Heun step of size `dt` in place.
    pub fn step_with(&self, s: &mut State, dt: f64, ws: &mut Workspace) -> Result<()> {
        let before = self.quadrature.norm_unchecked(s);
        self.spatial_operator_into(s, &mut ws.k1);
        let mid = &mut ws.mid;
        for (m, (u, k)) in [&mut mid.u1, &mut mid.u2, &mut mid.u3]
            .into_iter()
            .zip([&s.u1, &s.u2, &s.u3].into_iter().zip(ws.k1.components()))
        {
            m.iter_mut().zip(u.iter().zip(k)).for_each(|(m, (u, k))| *m = u + dt * k);
        }
        mid.tau = s.tau + dt;
        self.impose(mid);
        self.spatial_operator_into(mid, &mut ws.k2);
        for (u, (k1, k2)) in [&mut s.u1, &mut s.u2, &mut s.u3]
            .into_iter()
            .zip(ws.k1.components().into_iter().zip(ws.k2.components()))
        {
            u.iter_mut()
                .zip(k1.iter().zip(k2))
                .for_each(|(u, (a, b))| *u += 0.5 * dt * (a + b));
        }
        s.tau += dt;
        self.impose(s);
        let after = self.quadrature.norm_unchecked(s);
        let bound = (INSTABILITY_RATE * dt).exp();
        if !after.is_finite() || (before > 0.0 && after > bound * before) {
            return Err(Error::Instability {
                tau: s.tau,
                factor: after / before,
                bound,
            });
        }
        Ok(())
    }

    /// One nominal step (κΔρ), returning the new state.
    pub fn step(&self, s: &State) -> Result<State> {
        self.check_grid(s)?;
        let mut out = s.clone();
        let mut ws = Workspace::new(self.grid);
        self.step_with(&mut out, self.dtau(), &mut ws)?;
        Ok(out)
    }

    /// Evolve to `tau_end`. `observer` sees the initial state, every
    /// `stride`-th step and the final state.
    pub fn evolve(&self, initial: &State, mut observer: impl FnMut(&State)) -> Result<State> {
        self.check_grid(initial)?;
        let mut s = initial.clone();
        self.impose(&mut s);
        observer(&s);
        let (steps, dt) = self.step_plan();
        let mut ws = Workspace::new(self.grid);
        for k in 1..=steps {
            self.step_with(&mut s, dt, &mut ws)?;
            if k % self.cfg.stride == 0 || k == steps {
                observer(&s);
            }
        }
        Ok(s)
    }
}

/// Differences between successive grids and the observed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub grids: Vec<usize>,
    pub tau: f64,
    /// `‖u_N − u_2N‖` on the coarse points, for consecutive pairs.
    pub differences: Vec<f64>,
    /// `log₂` of consecutive difference ratios.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn order(&self) -> f64 {
        *self.orders.last().unwrap_or(&f64::NAN)
    }
}

/// Self-convergence on grids `N, 2N, 4N, …` (each a doubling of the previous)
/// from the same smooth data, compared at τ = `cfg.tau_end`.
pub fn self_convergence(
    grids: &[usize],
    cfg: SchemeConfig,
    data: impl Fn(Grid) -> State,
    build: impl Fn(Grid, SchemeConfig) -> Result<Scheme>,
) -> Result<ConvergenceReport> {
    if grids.len() < 3 || grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Validation(format!("convergence grids {grids:?} must be >= 3 successive doublings")));
    }
    let finals = grids
        .iter()
        .map(|&n| {
            let g = Grid::new(n)?;
            build(g, cfg)?.evolve(&data(g), |_| {})
        })
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = finals
        .windows(2)
        .zip(grids)
        .map(|(w, &n)| {
            let q = QuadratureRule::trapezoid(Grid { n });
            let coarse = &w[0];
            let fine = &w[1];
            let mut diff = coarse.clone();
            for (d, f) in [&mut diff.u1, &mut diff.u2, &mut diff.u3].into_iter().zip(fine.components()) {
                // the exterior coarse point has no fine partner (and zero weight)
                d.iter_mut().take(n + 1).enumerate().for_each(|(i, v)| *v -= f[2 * i]);
                d[n + 1] = 0.0;
            }
            q.norm_unchecked(&diff)
        })
        .collect();
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceReport {
        grids: grids.to_vec(),
        tau: cfg.tau_end,
        differences,
        orders,
    })
}

/// Built-in smooth initial data. Each `w` is odd in ρ with `w_ρρ(0) = 0`,
/// and carries `w_τ = 0`, `w_ρ` exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// `ρ³(1 − ρ²/2)`
    Phi,
    /// `ρ(1 − ρ²)²`
    Psi,
    /// `ρ³ exp(−ρ²)`
    Gaussian,
    /// `ρ² sin 3ρ`
    Sine,
}

impl InitialData {
    /// Default order used for filter levels 0, 1, 2, 3.
    pub const LIBRARY: [InitialData; 4] = [InitialData::Phi, InitialData::Psi, InitialData::Gaussian, InitialData::Sine];

    /// `(w, w_ρ)` at ρ.
    pub fn eval(self, rho: f64) -> (f64, f64) {
        let r2 = rho * rho;
        match self {
            InitialData::Phi => (rho * r2 * (1.0 - 0.5 * r2), 3.0 * r2 - 2.5 * r2 * r2),
            InitialData::Psi => {
                let q = 1.0 - r2;
                (rho * q * q, q * q - 4.0 * r2 * q)
            }
            InitialData::Gaussian => {
                let e = (-r2).exp();
                (rho * r2 * e, (3.0 * r2 - 2.0 * r2 * r2) * e)
            }
            InitialData::Sine => {
                let (s, c) = (3.0 * rho).sin_cos();
                (r2 * s, 2.0 * rho * s + 3.0 * r2 * c)
            }
        }
    }

    pub fn state(self, grid: Grid) -> State {
        State::from_fn(grid, |rho| {
            let (w, wr) = self.eval(rho);
            [w, 0.0, wr]
        })
    }
}

/// Gauge-mode data `(v, v, v')`, `v = 2ρ/(1+ρ²)`, on the ground state (λ = 1).
pub fn gauge_mode_state(grid: Grid) -> State {
    State::from_fn(grid, |rho| {
        let d = 1.0 + rho * rho;
        let v = 2.0 * rho / d;
        [v, v, 2.0 * (1.0 - rho * rho) / (d * d)]
    })
}

/// Eigenmode data `(v, λv, v')` from a shooting solution.
pub fn eigenmode_state(grid: Grid, sol: &EigenmodeSolution, profile: &Profile) -> Result<State> {
    let mut s = State::zeros(grid);
    let lambda = sol.params.lambda;
    for i in 0..grid.len() {
        let (v, vp) = sol.evaluate(profile, grid.rho(i))?;
        s.u1[i] = v;
        s.u2[i] = lambda * v;
        s.u3[i] = vp;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(64).unwrap()
    }

    #[test]
    fn speeds() {
        assert_eq!(characteristic_speeds(0.0), (-1.0, 1.0));
        assert_eq!(characteristic_speeds(1.0), (-2.0, 0.0));
        let (m, p) = characteristic_speeds(1.3);
        assert!(m <= 0.0 && p <= 0.0);
    }

    #[test]
    fn projectors_reconstruct_a() {
        for rho in [0.0, 0.25, 0.9, 1.0, 1.03] {
            let (lm, lp) = characteristic_speeds(rho);
            let (am, ap) = characteristic_projectors(rho);
            let a = [[0.0, 0.0, 0.0], [0.0, -2.0 * rho, 1.0 - rho * rho], [0.0, 1.0, 0.0]];
            for r in 0..3 {
                for c in 0..3 {
                    assert!((lm * am[r][c] + lp * ap[r][c] - a[r][c]).abs() < 1e-15);
                    let pp: f64 = (0..3).map(|k| ap[r][k] * ap[k][c]).sum();
                    let mm: f64 = (0..3).map(|k| am[r][k] * am[k][c]).sum();
                    let pm: f64 = (0..3).map(|k| am[r][k] * ap[k][c]).sum();
                    assert!((pp - ap[r][c]).abs() < 1e-15);
                    assert!((mm - am[r][c]).abs() < 1e-15);
                    assert!(pm.abs() < 1e-15);
                    let id = if r == c && r > 0 { 1.0 } else { 0.0 };
                    assert!((am[r][c] + ap[r][c] - id).abs() < 1e-15);
                }
            }
        }
        // ρ = 0: A₊ maps onto (0,1,1), A₋ onto (0,−1,1)
        let (am, ap) = characteristic_projectors(0.0);
        assert_eq!([ap[1][1], ap[1][2], ap[2][1], ap[2][2]], [0.5, 0.5, 0.5, 0.5]);
        assert_eq!([am[1][1], am[1][2], am[2][1], am[2][2]], [0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn ghosts_follow_parity() {
        let s = InitialData::Phi.state(grid());
        let g = ghost_values(&s);
        assert_eq!(g[0][0], -s.u1[1]);
        assert_eq!(g[2][0], s.u3[1]);
        let mut t = s.clone();
        apply_center_bc(&mut t);
        assert_eq!(t, s);
    }

    #[test]
    fn zero_in_zero_out() {
        let sch = Scheme::ground_state(grid(), SchemeConfig::default()).unwrap();
        let z = State::zeros(grid());
        assert_eq!(sch.spatial_operator(&z), z);
        assert_eq!(sch.step(&z).unwrap().u2, z.u2);
    }

    #[test]
    fn bad_config_rejected() {
        assert!(Grid::new(16).is_err());
        let cfg = SchemeConfig { cfl: 0.6, ..Default::default() };
        assert!(Scheme::ground_state(grid(), cfg).is_err());
        let sch = Scheme::ground_state(grid(), SchemeConfig::default()).unwrap();
        assert!(sch.step(&State::zeros(Grid::new(40).unwrap())).is_err());
    }

    #[test]
    fn reintegration_is_exact_for_linear_u3() {
        let mut s = State::from_fn(grid(), |r| [0.0, 0.0, 1.0 + r]);
        reintegrate(&mut s);
        for (i, v) in s.u1.iter().enumerate() {
            let r = grid().rho(i);
            assert!((v - (r + 0.5 * r * r)).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_data_derivatives() {
        for d in InitialData::LIBRARY {
            for rho in [0.1, 0.6, 1.01] {
                let e = 1e-6;
                let fd = (d.eval(rho + e).0 - d.eval(rho - e).0) / (2.0 * e);
                assert!((fd - d.eval(rho).1).abs() < 1e-8, "{d:?}");
            }
            assert_eq!(d.eval(0.0).0, 0.0);
        }
    }
}
