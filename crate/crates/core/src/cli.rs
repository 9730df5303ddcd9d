//! Command-line front end: configuration, runs, persistence and the
//! regression check against the reference tables.
//!
//! Configuration is a JSON [`RunConfig`] (all fields optional) overridden by
//! flags. Every JSON output embeds the effective configuration and a version
//! tag. Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 regression failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{gauge_mode_state, self_convergence, ConstraintTreatment, ConvergenceReport, Grid, InitialData, Scheme, SchemeConfig, State};
use crate::mode_ode::{EigenmodeSolution, EigenvalueEstimate, MinusTwoCheck, ModeShooter};
use crate::ode::Tolerance;
use crate::parallel::Exec;
use crate::profiles::{
    ground_state, shoot_profile_with, Profile, ProfileSpec, DEFAULT_EXTENSION, DEFAULT_MATCH_POINT, DEFAULT_STEP_OFF, DEFAULT_TOLERANCE,
};
use crate::spectra::{extract_spectrum, norm, ExecPolicy, FilterOptions, Spectrum, WindowPolicy, MAX_LEVELS};

pub const VERSION_TAG: &str = concat!("sigma-eigen ", env!("CARGO_PKG_VERSION"));
pub const EXIT_REGRESSION: i32 = 4;
/// Largest excitation index accepted on the command line.
pub const MAX_PROFILE_INDEX: usize = 4;

/// Shooting parameters shared by profile and eigenmode shooters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    pub match_point: f64,
    pub step_off: f64,
    pub tolerance: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            match_point: DEFAULT_MATCH_POINT,
            step_off: DEFAULT_STEP_OFF,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Effective configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Profile (excitation) index.
    pub n: usize,
    /// Evolution grid cells N.
    pub grid: usize,
    pub cfl: f64,
    pub tau_end: f64,
    /// Log-norm sampling stride in steps.
    pub stride: usize,
    pub levels: usize,
    pub window: WindowPolicy,
    pub constraint: ConstraintTreatment,
    pub renormalize: bool,
    pub lambda_range: (f64, f64),
    pub scan_steps: usize,
    pub shooting: ShootingConfig,
    pub convergence_grids: Vec<usize>,
    pub convergence_tau: f64,
    pub exec: ExecPolicy,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            n: 0,
            grid: crate::evolve::DEFAULT_GRID,
            cfl: crate::evolve::DEFAULT_CFL,
            tau_end: crate::evolve::DEFAULT_TAU_END,
            stride: 10,
            levels: MAX_LEVELS,
            window: WindowPolicy::default(),
            constraint: ConstraintTreatment::default(),
            renormalize: true,
            lambda_range: (-1.5, 7.0),
            scan_steps: 400,
            shooting: ShootingConfig::default(),
            convergence_grids: vec![256, 512, 1024],
            convergence_tau: 1.0,
            exec: ExecPolicy::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_PROFILE_INDEX {
            return Err(Error::Validation(format!("profile index {} above {MAX_PROFILE_INDEX}", self.n)));
        }
        Grid::new(self.grid)?;
        self.scheme_config().validate()?;
        if self.tau_end <= 0.0 {
            return Err(Error::Validation("tau_end must be positive".into()));
        }
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(Error::Validation(format!("levels = {} outside 1..={MAX_LEVELS}", self.levels)));
        }
        self.window.validate(self.tau_end)?;
        let (lo, hi) = self.lambda_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || self.scan_steps == 0 {
            return Err(Error::Validation(format!("lambda range [{lo}, {hi}] with {} steps", self.scan_steps)));
        }
        self.profile_spec().validate()?;
        let g = &self.convergence_grids;
        if g.len() < 3 || g.windows(2).any(|w| w[1] != 2 * w[0]) || g[0] < crate::evolve::MIN_GRID {
            return Err(Error::Validation(format!("convergence grids {g:?} must be >= 3 successive doublings")));
        }
        if !(self.convergence_tau > 0.0) {
            return Err(Error::Validation("convergence_tau must be positive".into()));
        }
        Ok(())
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            cfl: self.cfl,
            tau_end: self.tau_end,
            stride: self.stride,
            constraint: self.constraint,
        }
    }

    pub fn profile_spec(&self) -> ProfileSpec {
        let mut spec = ProfileSpec::new(self.n);
        spec.match_point = self.shooting.match_point;
        spec.step_off = self.shooting.step_off;
        spec.tolerance = self.shooting.tolerance;
        spec.rho_max = DEFAULT_EXTENSION.max(1.0 + 1.0 / self.grid.max(1) as f64);
        spec
    }

    pub fn filter_options(&self) -> FilterOptions {
        FilterOptions {
            renormalize: self.renormalize,
            exec: self.exec,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sigma-eigen", version, about = "Self-similar sigma-model profiles and their perturbation spectra")]
pub struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a profile and write it as JSON.
    Profile {
        #[command(flatten)]
        common: Overrides,
        /// Shoot n = 0 and compare against 2 arctan ρ.
        #[arg(long)]
        check_closed_form: bool,
    },
    /// Eigenvalues by shooting over a λ range.
    Modes {
        #[command(flatten)]
        common: Overrides,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Eigenvalues from filtered linear evolution.
    Spectrum {
        #[command(flatten)]
        common: Overrides,
        /// Also dump the final level states as CSV (one file per level).
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Run both methods on both profiles and compare with the reference tables.
    ReproduceTables {
        #[command(flatten)]
        common: Overrides,
        /// Check a single cell, e.g. `groundstate/shooting/gauge`.
        #[arg(long)]
        cell: Option<String>,
    },
    /// Self-convergence order and gauge-mode propagation.
    Converge {
        #[command(flatten)]
        common: Overrides,
        /// Grid sizes, each double the previous.
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub tau_end: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// `lo,hi`
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    pub lambda_range: Option<(f64, f64)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Disable the data-parallel paths.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.cfl {
            cfg.cfl = v;
        }
        if let Some(v) = self.tau_end {
            cfg.tau_end = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.lambda_range {
            cfg.lambda_range = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if self.sequential {
            cfg.exec = ExecPolicy::Sequential;
        }
    }
}

/// Load a config file (if any) and apply overrides.
pub fn effective_config(path: Option<&Path>, command: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.command = command.to_string();
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: &'a T,
}

fn write_json<T: Serialize>(cfg: &RunConfig, result: &T) -> Result<()> {
    if let Some(path) = &cfg.out {
        let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(
            &mut w,
            &Envelope {
                version: VERSION_TAG,
                config: cfg,
                result,
            },
        )?;
        writeln!(w)?;
    }
    Ok(())
}

/// Closed form for n = 0, shooting otherwise.
pub fn build_profile(cfg: &RunConfig) -> Result<Profile> {
    let spec = cfg.profile_spec();
    if cfg.n == 0 {
        Profile::ground_state(spec.rho_max)
    } else {
        shoot_profile_with(&spec, cfg.exec.into())
    }
}

fn mode_shooter<'a>(profile: &'a Profile, cfg: &RunConfig) -> ModeShooter<'a> {
    let mut s = ModeShooter::new(profile)
        .with_tolerance(Tolerance::new(cfg.shooting.tolerance, cfg.shooting.tolerance))
        .with_exec(cfg.exec.into());
    s.match_point = cfg.shooting.match_point;
    s.step_off = cfg.shooting.step_off;
    s
}

/// One accepted shooting eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub n: usize,
    pub lambda: f64,
    pub a: f64,
    pub defect: [f64; 2],
    pub uncertainty: f64,
    pub oscillation: bool,
    pub method: crate::mode_ode::Method,
}

impl Eigenpair {
    fn new(e: &EigenvalueEstimate, sol: &EigenmodeSolution) -> Self {
        Self {
            n: e.profile_n,
            lambda: e.value,
            a: sol.params.a,
            defect: sol.defect,
            uncertainty: e.uncertainty,
            oscillation: e.oscillation,
            method: e.method,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingReport {
    pub profile_n: usize,
    pub b: f64,
    pub c: f64,
    pub lambda_range: (f64, f64),
    pub eigenpairs: Vec<Eigenpair>,
    /// Scan candidates Newton could not polish.
    pub failures: Vec<String>,
    /// Resonant λ = −2 analysis (when −2 lies in the range).
    pub minus_two: Option<MinusTwoCheck>,
}

/// Scan the λ range and polish every candidate.
pub fn shooting_spectrum(profile: &Profile, cfg: &RunConfig) -> Result<ShootingReport> {
    let shooter = mode_shooter(profile, cfg);
    let candidates = shooter.scan_eigenvalues(cfg.lambda_range, cfg.scan_steps)?;
    let polished = Exec::from(cfg.exec).map(&candidates, |&l| shooter.find_eigenvalue(l, None));
    let mut eigenpairs = Vec::new();
    let mut failures = Vec::new();
    for (l, r) in candidates.iter().zip(polished) {
        match r {
            Ok((e, sol)) => eigenpairs.push(Eigenpair::new(&e, &sol)),
            Err(e) => failures.push(format!("candidate {l}: {e}")),
        }
    }
    let (lo, hi) = cfg.lambda_range;
    let minus_two = if lo <= -2.0 && hi >= -2.0 { Some(shooter.check_minus_two()?) } else { None };
    Ok(ShootingReport {
        profile_n: profile.n,
        b: profile.b,
        c: profile.c,
        lambda_range: cfg.lambda_range,
        eigenpairs,
        failures,
        minus_two,
    })
}

/// Filtered-evolution spectrum of `profile`.
pub fn evolution_spectrum(profile: &Profile, cfg: &RunConfig) -> Result<Spectrum> {
    let grid = Grid::new(cfg.grid)?;
    let scheme = Scheme::new(grid, profile, cfg.scheme_config())?;
    extract_spectrum(&scheme, profile.n, cfg.levels, cfg.window, cfg.filter_options())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub mu: f64,
    pub uncertainty: f64,
    pub oscillation: bool,
    pub window: (f64, f64),
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub profile_n: usize,
    pub method: crate::mode_ode::Method,
    pub levels: Vec<LevelReport>,
}

impl From<&Spectrum> for SpectrumReport {
    fn from(s: &Spectrum) -> Self {
        Self {
            profile_n: s.profile_n,
            method: crate::mode_ode::Method::Evolution,
            levels: s
                .levels
                .iter()
                .map(|l| LevelReport {
                    level: l.level,
                    mu: l.fit.slope,
                    uncertainty: l.uncertainty,
                    oscillation: l.fit.oscillation,
                    window: l.fit.window,
                    rms_residual: l.fit.rms_residual,
                })
                .collect(),
        }
    }
}

/// Which reference table a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    Groundstate,
    Excitation,
}

impl TableId {
    pub fn profile_index(self) -> usize {
        match self {
            TableId::Groundstate => 0,
            TableId::Excitation => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            TableId::Groundstate => "groundstate",
            TableId::Excitation => "excitation",
        }
    }
}

/// A populated reference cell with its acceptance tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub table: TableId,
    pub method: crate::mode_ode::Method,
    pub mode: &'static str,
    /// Evolution filter level (ignored for shooting).
    pub level: usize,
    pub reference: f64,
    pub tolerance: f64,
}

impl Cell {
    pub fn id(&self) -> String {
        let m = match self.method {
            crate::mode_ode::Method::Shooting => "shooting",
            crate::mode_ode::Method::Evolution => "evolution",
        };
        format!("{}/{m}/{}", self.table.name(), self.mode)
    }
}

/// The thirteen populated cells of the two reference tables.
pub fn reference_cells() -> Vec<Cell> {
    use crate::mode_ode::Method::{Evolution, Shooting};
    use TableId::{Excitation, Groundstate};
    let c = |table, method, mode, level, reference, tolerance| Cell {
        table,
        method,
        mode,
        level,
        reference,
        tolerance,
    };
    vec![
        c(Groundstate, Shooting, "gauge", 0, 1.0, 1e-6),
        c(Groundstate, Shooting, "first-stable", 0, -0.54246, 5e-5),
        c(Groundstate, Evolution, "gauge", 0, 1.0, 0.01),
        c(Groundstate, Evolution, "first-stable", 1, -0.5424, 0.005),
        c(Groundstate, Evolution, "second-stable", 2, -2.00, 0.05),
        c(Groundstate, Evolution, "third-stable", 3, -3.3, 0.2),
        c(Excitation, Shooting, "unstable", 0, 6.333625, 1e-4),
        c(Excitation, Shooting, "gauge", 0, 1.0, 1e-6),
        c(Excitation, Shooting, "first-stable", 0, -0.5186, 1e-4),
        c(Excitation, Evolution, "unstable", 0, 6.3336, 0.007),
        c(Excitation, Evolution, "gauge", 1, 1.0, 0.01),
        c(Excitation, Evolution, "first-stable", 2, -0.518, 0.01),
        c(Excitation, Evolution, "second-stable", 3, -1.7, 0.1),
    ]
}

/// Empty reference cells, reported as skipped.
pub const SKIPPED_CELLS: [&str; 3] = [
    "groundstate/shooting/second-stable",
    "groundstate/shooting/third-stable",
    "excitation/shooting/second-stable",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub id: String,
    pub reference: f64,
    pub computed: Option<f64>,
    pub uncertainty: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub cells: Vec<CellResult>,
    pub skipped: Vec<String>,
    pub all_pass: bool,
}

impl TableReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<38} {:>10} {:>14} {:>10} {:>9}  {}\n", "cell", "reference", "computed", "error", "tol", "status"));
        for c in &self.cells {
            let (val, err) = match c.computed {
                Some(v) => (format!("{v:.8}"), format!("{:.2e}", (v - c.reference).abs())),
                None => ("-".into(), "-".into()),
            };
            s.push_str(&format!(
                "{:<38} {:>10} {:>14} {:>10} {:>9.1e}  {}{}\n",
                c.id,
                c.reference,
                val,
                err,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" },
                c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            ));
        }
        for id in &self.skipped {
            s.push_str(&format!("{id:<38} {:>10}  skipped: no reference value\n", "-"));
        }
        s
    }
}

/// Compare both methods on both profiles against the reference cells.
/// `only` restricts the run to a single cell id.
pub fn reproduce_tables(cfg: &RunConfig, only: Option<&str>) -> Result<TableReport> {
    let cells: Vec<Cell> = reference_cells()
        .into_iter()
        .filter(|c| only.is_none_or(|id| c.id() == id))
        .collect();
    if let Some(id) = only {
        if cells.is_empty() {
            return Err(Error::Validation(format!("unknown cell {id:?}")));
        }
    }
    let mut results = Vec::new();
    for table in [TableId::Groundstate, TableId::Excitation] {
        let mine: Vec<&Cell> = cells.iter().filter(|c| c.table == table).collect();
        if mine.is_empty() {
            continue;
        }
        let mut tcfg = cfg.clone();
        tcfg.n = table.profile_index();
        let profile = build_profile(&tcfg)?;
        let need_shoot = mine.iter().any(|c| c.method == crate::mode_ode::Method::Shooting);
        let need_evolve = mine.iter().any(|c| c.method == crate::mode_ode::Method::Evolution);
        let shooting = if need_shoot { Some(shooting_spectrum(&profile, &tcfg)?) } else { None };
        let evolution = if need_evolve {
            tcfg.levels = MAX_LEVELS;
            Some(evolution_spectrum(&profile, &tcfg))
        } else {
            None
        };
        for cell in mine {
            let (computed, uncertainty, note) = match cell.method {
                crate::mode_ode::Method::Shooting => {
                    let report = shooting.as_ref().expect("shooting run");
                    match report
                        .eigenpairs
                        .iter()
                        .min_by(|a, b| (a.lambda - cell.reference).abs().total_cmp(&(b.lambda - cell.reference).abs()))
                    {
                        Some(p) => (Some(p.lambda), Some(p.uncertainty), None),
                        None => (None, None, Some("no eigenvalue found in range".to_string())),
                    }
                }
                crate::mode_ode::Method::Evolution => match evolution.as_ref().expect("evolution run") {
                    Ok(sp) => {
                        let l = &sp.levels[cell.level];
                        let note = l.fit.oscillation.then(|| "oscillation flagged".to_string());
                        (Some(l.fit.slope), Some(l.uncertainty), note)
                    }
                    Err(e) => (None, None, Some(e.to_string())),
                },
            };
            let pass = computed.is_some_and(|v| (v - cell.reference).abs() <= cell.tolerance);
            results.push(CellResult {
                id: cell.id(),
                reference: cell.reference,
                computed,
                uncertainty,
                tolerance: cell.tolerance,
                pass,
                note,
            });
        }
    }
    let skipped = if only.is_none() { SKIPPED_CELLS.iter().map(|s| s.to_string()).collect() } else { Vec::new() };
    let all_pass = results.iter().all(|c| c.pass);
    Ok(TableReport {
        cells: results,
        skipped,
        all_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCheck {
    pub grid: usize,
    pub slope: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub convergence: ConvergenceReport,
    pub order_pass: bool,
    pub gauge: Vec<GaugeCheck>,
    pub zero_data_exact: bool,
    pub all_pass: bool,
}

/// Observed order tolerance around 2.
pub const ORDER_TOLERANCE: f64 = 0.2;

/// Self-convergence on the ground state plus gauge-mode and zero-data checks per grid.
pub fn convergence(cfg: &RunConfig) -> Result<ConvergenceSummary> {
    let sc = SchemeConfig {
        tau_end: cfg.convergence_tau,
        ..cfg.scheme_config()
    };
    let report = self_convergence(&cfg.convergence_grids, sc, |g| InitialData::Phi.state(g), Scheme::ground_state)?;
    let order_pass = report.orders.iter().all(|o| (o - 2.0).abs() <= ORDER_TOLERANCE);
    let mut gauge = Vec::new();
    let mut zero_data_exact = true;
    for &n in &cfg.convergence_grids {
        let g = Grid::new(n)?;
        let scheme = Scheme::ground_state(g, sc)?;
        let q = scheme.quadrature().clone();
        let x0 = gauge_mode_state(g);
        let n0 = norm(&x0, &q)?;
        let x1 = scheme.evolve(&x0, |_| {})?;
        let slope = (norm(&x1, &q)? / n0).ln() / sc.tau_end;
        let h = g.spacing();
        let tolerance = 0.01f64.max(5.0 * h * h);
        gauge.push(GaugeCheck {
            grid: n,
            slope,
            tolerance,
            pass: (slope - 1.0).abs() <= tolerance,
        });
        let z = scheme.evolve(&State::zeros(g), |_| {})?;
        zero_data_exact &= z.components().iter().all(|c| c.iter().all(|v| *v == 0.0));
    }
    let all_pass = order_pass && zero_data_exact && gauge.iter().all(|g| g.pass);
    Ok(ConvergenceSummary {
        convergence: report,
        order_pass,
        gauge,
        zero_data_exact,
        all_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClosedFormCheck {
    max_deviation: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ProfileOutput<'a> {
    #[serde(flatten)]
    profile: &'a Profile,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_check: Option<ClosedFormCheck>,
}

/// Largest deviation of a sample table from `2 arctan ρ` in f and f'.
pub fn closed_form_deviation(p: &Profile) -> f64 {
    p.samples
        .iter()
        .map(|s| {
            let (f, fp) = ground_state(s[0]);
            (s[1] - f).abs().max((s[2] - fp).abs())
        })
        .fold(0.0, f64::max)
}

fn cmd_profile(cfg: &RunConfig, check: bool) -> Result<i32> {
    let (profile, closed_form_check) = if check {
        if cfg.n != 0 {
            return Err(Error::Validation("--check-closed-form needs --n 0".into()));
        }
        let shot = shoot_profile_with(&cfg.profile_spec(), cfg.exec.into())?;
        let dev = closed_form_deviation(&shot);
        let tolerance = 1e-8;
        (
            shot,
            Some(ClosedFormCheck {
                max_deviation: dev,
                tolerance,
                pass: dev <= tolerance,
            }),
        )
    } else {
        (build_profile(cfg)?, None)
    };
    println!("profile n={}  b={:.10}  c={:.10}  defect={:.3e}", profile.n, profile.b, profile.c, profile.defect);
    let mut code = 0;
    if let Some(c) = &closed_form_check {
        println!(
            "closed-form check: max deviation {:.3e} (tol {:.0e}) {}",
            c.max_deviation,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
        if !c.pass {
            code = EXIT_REGRESSION;
        }
    }
    write_json(
        cfg,
        &ProfileOutput {
            profile: &profile,
            closed_form_check,
        },
    )?;
    Ok(code)
}

fn cmd_modes(cfg: &RunConfig) -> Result<i32> {
    let profile = build_profile(cfg)?;
    let report = shooting_spectrum(&profile, cfg)?;
    println!(
        "profile n={} (b={:.8}, c={:.8}); lambda in [{}, {}]: {} eigenvalue(s)",
        profile.n,
        profile.b,
        profile.c,
        cfg.lambda_range.0,
        cfg.lambda_range.1,
        report.eigenpairs.len()
    );
    for p in &report.eigenpairs {
        println!("  lambda = {:>14.9}  ± {:.1e}   a = {:.6e}", p.lambda, p.uncertainty, p.a);
    }
    for f in &report.failures {
        eprintln!("  not polished: {f}");
    }
    if let Some(m) = &report.minus_two {
        println!(
            "  lambda = -2: shooter mismatch {:.3e}, log obstruction {:.3e}, fitted log coefficient {:.3e}",
            m.shooter_mismatch, m.log_obstruction, m.log_coefficient
        );
    }
    write_json(cfg, &report)?;
    Ok(0)
}

fn cmd_spectrum(cfg: &RunConfig, snapshots: Option<&Path>) -> Result<i32> {
    let profile = build_profile(cfg)?;
    let spectrum = evolution_spectrum(&profile, cfg)?;
    let report = SpectrumReport::from(&spectrum);
    println!("profile n={}, N={}, tau_end={}, levels={}", profile.n, cfg.grid, cfg.tau_end, cfg.levels);
    for l in &report.levels {
        println!(
            "  level {}: mu = {:>10.6} ± {:.1e}  window [{:.2}, {:.2}]  oscillation {}",
            l.level, l.mu, l.uncertainty, l.window.0, l.window.1, l.oscillation
        );
    }
    write_json(cfg, &report)?;
    if let Some(path) = &cfg.out {
        let csv = path.with_extension("csv");
        let mut w = BufWriter::new(fs::File::create(&csv)?);
        spectrum.bank.write_csv(&mut w)?;
    }
    if let Some(path) = snapshots {
        for (j, s) in spectrum.bank.levels.iter().enumerate() {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
            let file = path.with_file_name(format!("{stem}.level{j}.csv"));
            let mut w = BufWriter::new(fs::File::create(file)?);
            s.write_csv(&mut w, true)?;
        }
    }
    Ok(0)
}

fn cmd_reproduce(cfg: &RunConfig, cell: Option<&str>) -> Result<i32> {
    let report = reproduce_tables(cfg, cell)?;
    print!("{}", report.render());
    let passed = report.cells.iter().filter(|c| c.pass).count();
    println!("{passed}/{} populated cells pass", report.cells.len());
    write_json(cfg, &report)?;
    Ok(if report.all_pass { 0 } else { EXIT_REGRESSION })
}

fn cmd_converge(cfg: &RunConfig) -> Result<i32> {
    let s = convergence(cfg)?;
    let c = &s.convergence;
    println!("grids {:?} at tau = {}", c.grids, c.tau);
    println!("  differences {:?}", c.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>());
    println!("  observed order(s) {:?}  {}", c.orders, if s.order_pass { "PASS" } else { "FAIL" });
    for g in &s.gauge {
        println!("  N={:>5}: gauge slope {:.6} (tol {:.0e}) {}", g.grid, g.slope, g.tolerance, if g.pass { "PASS" } else { "FAIL" });
    }
    println!("  zero data stays zero: {}", s.zero_data_exact);
    write_json(cfg, &s)?;
    Ok(if s.all_pass { 0 } else { EXIT_REGRESSION })
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Profile { common, check_closed_form } => {
            let cfg = effective_config(cfg_path, "profile", common)?;
            cmd_profile(&cfg, *check_closed_form)
        }
        Command::Modes { common, steps } => {
            let mut cfg = effective_config(cfg_path, "modes", common)?;
            if let Some(s) = steps {
                cfg.scan_steps = *s;
                cfg.validate()?;
            }
            cmd_modes(&cfg)
        }
        Command::Spectrum { common, snapshots } => {
            let cfg = effective_config(cfg_path, "spectrum", common)?;
            cmd_spectrum(&cfg, snapshots.as_deref())
        }
        Command::ReproduceTables { common, cell } => {
            let cfg = effective_config(cfg_path, "reproduce-tables", common)?;
            cmd_reproduce(&cfg, cell.as_deref())
        }
        Command::Converge { common, grids } => {
            let mut cfg = effective_config(cfg_path, "converge", common)?;
            if let Some(g) = grids {
                cfg.convergence_grids = g.clone();
                cfg.validate()?;
            }
            cmd_converge(&cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
        // partial documents fill in defaults
        let p: RunConfig = serde_json::from_str(r#"{"grid": 512}"#).unwrap();
        assert_eq!(p.grid, 512);
        assert!(serde_json::from_str::<RunConfig>(r#"{"gird": 512}"#).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        for mutate in [
            |c: &mut RunConfig| c.cfl = 0.7,
            |c: &mut RunConfig| c.grid = 8,
            |c: &mut RunConfig| c.levels = 5,
            |c: &mut RunConfig| c.lambda_range = (2.0, 1.0),
            |c: &mut RunConfig| c.convergence_grids = vec![64, 100, 200],
        ] {
            let mut c = RunConfig::default();
            mutate(&mut c);
            assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn cells_are_unique() {
        let cells = reference_cells();
        assert_eq!(cells.len(), 13);
        let mut ids: Vec<String> = cells.iter().map(Cell::id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 13);
    }

    #[test]
    fn range_parser() {
        assert_eq!(parse_range("-1,2").unwrap(), (-1.0, 2.0));
        assert!(parse_range("1").is_err());
    }
}
