//! JSON-configured batch runs behind the `qfc` binary.
//!
//! A run loads one [`ScenarioConfig`], executes the named experiment, and
//! writes `report.json` plus plot-ready CSV tables into the output
//! directory. Every experiment produces a list of [`Check`]s; the exit code
//! is 0 when all pass, 1 when a numerical invariant fails and 2 when the
//! config is invalid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calderon;
use crate::conformal::{self, ConformalFactor};
use crate::error::Error;
use crate::evolution::{self, Scenario, Side};
use crate::grid::{build_grid, Grid, MetricProfile};
use crate::hadamard;
use crate::opcalc::WeightedOperator;
use crate::propagators::{self, KernelFamily, KernelKind};
use crate::states::{self, CovariancePair, StateReport, StaticReduction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ValidateVacuum,
    ThermalSweep,
    Riccati,
    Calderon,
    Scatter,
    Conformal,
    Propagators,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::ValidateVacuum,
        Experiment::ThermalSweep,
        Experiment::Riccati,
        Experiment::Calderon,
        Experiment::Scatter,
        Experiment::Conformal,
        Experiment::Propagators,
    ];

    /// Name used in the config's `experiment` field.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ValidateVacuum => "validate-vacuum",
            Experiment::ThermalSweep => "thermal-sweep",
            Experiment::Riccati => "riccati",
            Experiment::Calderon => "calderon",
            Experiment::Scatter => "scatter",
            Experiment::Conformal => "conformal",
            Experiment::Propagators => "propagators",
        }
    }

    /// Subcommand of the `qfc` binary.
    pub fn command(self) -> &'static str {
        match self {
            Experiment::ValidateVacuum => "validate-state",
            other => other.name(),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::ValidateVacuum => "build the vacuum (or static ground state) and validate positivity, CCR and purity",
            Experiment::ThermalSweep => "thermal states over a ladder of inverse temperatures with KMS and mixedness checks",
            Experiment::Riccati => "Riccati iteration, factorization residual, microlocal splitting and mode-decay proxy",
            Experiment::Calderon => "free, Dirichlet and periodic Calderon projectors with the induced states",
            Experiment::Scatter => "T-ladder of pulled-back asymptotic vacua and the wave-operator cross-check",
            Experiment::Conformal => "conformal rescaling of the vacuum covariances and the charge-form diagram",
            Experiment::Propagators => "static propagator kernels, Feynman algebra, Wick continuation and delta weight",
        }
    }

    /// CSV files written by the experiment and their columns.
    pub fn csv_columns(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::ValidateVacuum => &[("spectrum.csv", "mode,eps")],
            Experiment::ThermalSweep => &[("thermal_sweep.csv", "beta,purity_defect,kms_defect,ccr_defect")],
            Experiment::Riccati => &[
                ("residual_history.csv", "iteration,residual"),
                ("mode_decay.csv", "wavenumber,difference"),
            ],
            Experiment::Calderon => &[
                ("dirichlet_ladder.csv", "horizon,distance"),
                ("periodic.csv", "beta,distance_plus,distance_minus"),
            ],
            Experiment::Scatter => &[("ladder.csv", "horizon,defect,wave_defect")],
            Experiment::Conformal => &[("factor.csv", "x,c,weight,transformed_weight")],
            Experiment::Propagators => &[(
                "kernels.csv",
                "t,retarded,advanced,causal,feynman_re,feynman_im,euclidean",
            )],
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name || e.command() == name)
    }
}

/// One line per experiment: command, config name and description.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in Experiment::ALL {
        let _ = writeln!(out, "{:<14} (experiment \"{}\")  {}", e.command(), e.name(), e.description());
    }
    out
}

/// Help text describing the CSV tables of an experiment.
pub fn csv_help(e: Experiment) -> String {
    let mut out = String::from("Writes report.json and:\n");
    for (file, cols) in e.csv_columns() {
        let _ = writeln!(out, "  {file}: {cols}");
    }
    out
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    #[serde(default = "two_pi")]
    pub circumference: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default)]
    pub steps_per_unit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ccr: f64,
    pub validity: f64,
    pub purity: f64,
    pub mixedness: f64,
    pub kms: f64,
    pub riccati_static: f64,
    pub splitting: f64,
    pub factorization_factor: f64,
    pub mode_decay_exponent: Option<f64>,
    pub free_calderon: f64,
    pub restriction: f64,
    pub dirichlet_rate: f64,
    pub scatter_cauchy: f64,
    pub scatter_rate: f64,
    pub scatter_purity: f64,
    pub wave_crosscheck: f64,
    pub feynman: f64,
    pub wick: f64,
    pub delta_weight: f64,
    pub conformal_purity: f64,
    pub diagram: f64,
    pub rescaled_ground: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ccr: 1e-10,
            validity: 1e-9,
            purity: 1e-9,
            mixedness: 1e-2,
            kms: 1e-10,
            riccati_static: 1e-12,
            splitting: 1e-10,
            factorization_factor: 10.0,
            mode_decay_exponent: None,
            free_calderon: 1e-10,
            restriction: 1e-9,
            dirichlet_rate: 0.1,
            scatter_cauchy: 1e-3,
            scatter_rate: 0.3,
            scatter_purity: 1e-6,
            wave_crosscheck: 1e-8,
            feynman: 1e-12,
            wick: 1e-12,
            delta_weight: 1e-3,
            conformal_purity: 1e-10,
            diagram: 1e-12,
            rescaled_ground: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Constant,
    Cosine,
}

/// Experiment-specific knobs; each experiment reads only its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    /// Time at which Cauchy data are taken.
    pub base_time: f64,
    pub betas: Option<Vec<f64>>,
    pub horizons: Option<Vec<f64>>,
    pub side: Option<String>,
    pub riccati_window: Option<[f64; 2]>,
    pub dt: Option<f64>,
    pub k_max: usize,
    pub riccati_tol: f64,
    pub band: Option<[usize; 2]>,
    pub factor: FactorKind,
    pub factor_value: f64,
    pub t_samples: Option<Vec<f64>>,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            base_time: 0.0,
            betas: None,
            horizons: None,
            side: None,
            riccati_window: None,
            dt: None,
            k_max: 10,
            riccati_tol: 1e-14,
            band: None,
            factor: FactorKind::Constant,
            factor_value: 2.0,
            t_samples: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub profile: ProfileConfig,
    /// Mass `m > 0`; the potential floor is `m²`.
    pub mass: f64,
    pub time: TimeConfig,
    pub experiment: Experiment,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub parameters: Parameters,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Config(m),
            Error::InvalidParameter(_)
            | Error::GridTooSmall(_)
            | Error::OutOfWindow { .. }
            | Error::Resolution { .. }
            | Error::CoarseTimeGrid(_)
            | Error::NoAsymptotics
            | Error::ShortRange { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

impl ScenarioConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if !(self.grid.circumference > 0.0 && self.grid.circumference.is_finite()) {
            return bad(format!("circumference must be positive, got {}", self.grid.circumference));
        }
        if !(self.time.t_min < self.time.t_max) {
            return bad(format!("need t_min < t_max, got [{}, {}]", self.time.t_min, self.time.t_max));
        }
        let p = &self.parameters;
        if !(p.base_time >= self.time.t_min && p.base_time <= self.time.t_max) {
            return bad(format!("base_time {} outside the time window", p.base_time));
        }
        if let Some(betas) = &p.betas {
            if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                return bad("betas must be a non-empty list of positive numbers".into());
            }
        }
        if let Some(h) = &p.horizons {
            if h.len() < 2 || h.iter().any(|v| !(*v > 0.0)) || h.windows(2).any(|w| w[1] <= w[0]) {
                return bad("horizons must be an increasing list of at least two positive values".into());
            }
        }
        if let Some(side) = &p.side {
            parse_side(side)?;
        }
        if let Some(dt) = p.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some([a, b]) = p.riccati_window {
            if !(a < b) {
                return bad(format!("riccati_window must be increasing, got [{a}, {b}]"));
            }
        }
        if let Some([lo, hi]) = p.band {
            if lo >= hi {
                return bad(format!("band must satisfy lo < hi, got [{lo}, {hi}]"));
            }
        }
        if p.k_max == 0 {
            return bad("k_max must be at least 1".into());
        }
        Ok(())
    }
}

fn parse_side(s: &str) -> CliResult<Side> {
    match s {
        "out" => Ok(Side::Out),
        "in" => Ok(Side::In),
        other => Err(CliError::Config(format!("side must be \"out\" or \"in\", got \"{other}\""))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            tolerance,
            passed: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Int(i64),
    Float(f64),
}

struct Table {
    file: &'static str,
    header: &'static str,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(self.header);
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(v) => format!("{v:.16e}"),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

struct Outcome {
    results: Value,
    checks: Vec<Check>,
    tables: Vec<Table>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    pub report_path: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Thread pool for parameter sweeps, capped by `QFC_THREADS` when set.
pub fn sweep_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var("QFC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(CliError::Config(format!("QFC_THREADS must be a positive integer, got \"{v}\""))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))
}

struct Setup {
    grid: Grid,
    profile: MetricProfile,
    scenario: Option<Scenario>,
}

impl Setup {
    fn scenario(&self) -> CliResult<&Scenario> {
        self.scenario.as_ref().ok_or_else(|| {
            CliError::Config(format!(
                "experiment needs time evolution, which requires unit lapse (profile '{}')",
                self.profile.name()
            ))
        })
    }
}

fn setup(config: &ScenarioConfig) -> CliResult<Setup> {
    let grid = build_grid(config.grid.n_points, config.grid.circumference).map_err(|e| CliError::Config(e.to_string()))?;
    let m2 = config.mass * config.mass;
    let profile = MetricProfile::from_preset(&config.profile.name, &config.profile.params, m2)?;
    let scenario = if profile.has_unit_lapse() {
        Some(
            Scenario::new(
                profile.clone(),
                grid.clone(),
                config.time.t_min,
                config.time.t_max,
                config.time.steps_per_unit,
            )
            .map_err(|e| CliError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    Ok(Setup { grid, profile, scenario })
}

/// Static profiles with a non-trivial lapse go through the static reduction.
fn reduction(s: &Setup) -> CliResult<Option<StaticReduction>> {
    if s.profile.is_time_independent() && !s.profile.has_unit_lapse() {
        Ok(Some(states::static_reduction(&s.profile, &s.grid)?))
    } else {
        Ok(None)
    }
}

fn energy(s: &Setup, t: f64) -> CliResult<(WeightedOperator, Option<StaticReduction>)> {
    match reduction(s)? {
        Some(r) => Ok((r.eps_tilde.clone(), Some(r))),
        None => Ok((s.scenario()?.eps(t)?, None)),
    }
}

fn state_checks(prefix: &str, report: &StateReport, cov: &CovariancePair, tol: &Tolerances) -> Vec<Check> {
    let d = &report.defects;
    let worst = [d.hermiticity, d.psd_plus, d.psd_minus, d.ccr]
        .into_iter()
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    vec![
        Check::at_most(format!("{prefix}validity_defect"), worst / cov.norm().max(1.0), tol.validity),
        Check::at_most(format!("{prefix}ccr_defect"), d.ccr, tol.ccr),
    ]
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn run_validate(s: &Setup, c: &ScenarioConfig) -> CliResult<Outcome> {
    let t = c.parameters.base_time;
    let (eps, red) = energy(s, t)?;
    let cov = match &red {
        Some(r) => r.ground.clone(),
        None => states::vacuum_covariances(&eps)?,
    };
    let report = states::validate_state(&cov);
    let purity = states::purity_defect(&cov)?;
    let mut checks = state_checks("", &report, &cov, &c.tolerances);
    checks.push(Check::at_most("purity_defect", purity, c.tolerances.purity));
    let spec = eps.spectral()?;
    let rows = spec
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, v)| vec![Cell::Int(i as i64), Cell::Float(*v)])
        .collect();
    Ok(Outcome {
        results: json!({
            "state": to_value(&report),
            "eps_min": spec.eigenvalues()[0],
            "eps_max": spec.eigenvalues()[spec.eigenvalues().len() - 1],
            "static_reduction": red.is_some(),
        }),
        checks,
        tables: vec![Table { file: "spectrum.csv", header: "mode,eps", rows }],
    })
}

fn run_thermal(s: &Setup, c: &ScenarioConfig, pool: &rayon::ThreadPool) -> CliResult<Outcome> {
    let betas = c.parameters.betas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let (eps, red) = energy(s, c.parameters.base_time)?;
    let rows: Vec<CliResult<(f64, StateReport, f64, f64)>> = pool.install(|| {
        betas
            .par_iter()
            .map(|&beta| {
                let tilde = states::thermal_covariances(&eps, beta)?;
                let kms = states::kms_defect(&tilde, &eps, beta)?;
                let cov = match &red {
                    Some(r) => r.pull_back(&tilde, &format!("kms(β={beta})"))?,
                    None => tilde,
                };
                let purity = states::purity_defect(&cov)?;
                Ok((beta, states::validate_state(&cov), purity, kms))
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let tol = &c.tolerances;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut table = Vec::new();
    for (beta, report, purity, kms) in rows {
        let p = format!("beta={beta}.");
        checks.push(Check::at_most(format!("{p}ccr_defect"), report.defects.ccr, tol.ccr));
        checks.push(Check::at_most(format!("{p}kms_defect"), kms, tol.kms));
        checks.push(Check::at_least(format!("{p}purity_defect"), purity, tol.mixedness));
        table.push(vec![Cell::Float(beta), Cell::Float(purity), Cell::Float(kms), Cell::Float(report.defects.ccr)]);
        reports.push(json!({"beta": beta, "state": to_value(&report), "kms_defect": kms}));
    }
    Ok(Outcome {
        results: json!({ "thermal": reports }),
        checks,
        tables: vec![Table {
            file: "thermal_sweep.csv",
            header: "beta,purity_defect,kms_defect,ccr_defect",
            rows: table,
        }],
    })
}

fn run_riccati(s: &Setup, c: &ScenarioConfig) -> CliResult<Outcome> {
    let p = &c.parameters;
    let tol = &c.tolerances;
    let base = p.base_time;
    let dt = p.dt.unwrap_or(0.04);
    let [t0, t1] = p.riccati_window.unwrap_or([base - 0.4, base + 0.4]);
    let t_grid = hadamard::uniform_t_grid(t0, t1, dt);
    let sol = hadamard::riccati_iterate(s.scenario()?, &t_grid, p.k_max, p.riccati_tol)?;
    let fact = hadamard::factorization_residual(&sol, s.scenario()?)?;
    let i = sol.index_of(base)?;
    let split = hadamard::microlocal_splitting(&sol, base)?;
    let cov = hadamard::hadamard_covariances(&split)?;
    let report = states::validate_state(&cov);
    let purity = states::purity_defect(&cov)?;
    let n = s.grid.n_points();
    let [lo, hi] = p.band.unwrap_or([n / 8, 3 * n / 8]);
    let decay = hadamard::mode_decay(&split.projections.c_plus, &sol.reference_eps[i], (lo, hi)).ok();

    let mut checks = state_checks("", &report, &cov, tol);
    checks.push(Check::at_most("purity_defect", purity, tol.purity));
    checks.push(Check::at_least("positivity_constant", sol.positivity_constant, f64::MIN_POSITIVE));
    checks.push(Check::at_most("splitting_inverse_defect", split.inverse_defect(), tol.splitting));
    let grid_dt = sol.dt;
    checks.push(Check::at_most(
        "factorization_residual",
        fact.max(),
        tol.factorization_factor * sol.residual() + grid_dt * grid_dt,
    ));
    let static_distance = if s.profile.is_time_independent() && s.profile.has_unit_lapse() {
        let vac = states::vacuum_covariances(&s.scenario()?.eps(base)?)?;
        let d = cov.distance(&vac)?;
        checks.push(Check::at_most("riccati_residual", sol.residual(), tol.riccati_static));
        checks.push(Check::at_most("static_splitting_distance", d, tol.splitting));
        Some(d)
    } else {
        None
    };
    if let Some(min_exp) = tol.mode_decay_exponent {
        let e = decay.as_ref().map(|d| d.exponent).unwrap_or(f64::NAN);
        checks.push(Check::at_least("mode_decay_exponent", e, min_exp));
    }
    let history = sol
        .residual_history
        .iter()
        .enumerate()
        .map(|(k, r)| vec![Cell::Int(k as i64), Cell::Float(*r)])
        .collect();
    let decay_rows = decay
        .as_ref()
        .map(|d| {
            d.wavenumbers
                .iter()
                .zip(&d.values)
                .map(|(k, v)| vec![Cell::Int(*k as i64), Cell::Float(*v)])
                .collect()
        })
        .unwrap_or_default();
    Ok(Outcome {
        results: json!({
            "residual": sol.residual(),
            "residual_history": sol.residual_history,
            "best_iteration": sol.best_iteration,
            "positivity_constant": sol.positivity_constant,
            "dt": grid_dt,
            "factorization": to_value(&fact),
            "splitting_inverse_defect": split.inverse_defect(),
            "splitting_congruence_defect": split.congruence_defect(),
            "state": to_value(&report),
            "static_splitting_distance": static_distance,
            "mode_decay": decay.as_ref().map(to_value),
        }),
        checks,
        tables: vec![
            Table { file: "residual_history.csv", header: "iteration,residual", rows: history },
            Table { file: "mode_decay.csv", header: "wavenumber,difference", rows: decay_rows },
        ],
    })
}

fn run_calderon(s: &Setup, c: &ScenarioConfig, pool: &rayon::ThreadPool) -> CliResult<Outcome> {
    let tol = &c.tolerances;
    let (eps, _) = energy(s, c.parameters.base_time)?;
    let betas = c.parameters.betas.clone().unwrap_or_else(|| vec![3f64.ln(), 0.5, 1.0, 2.0]);
    let horizons = c
        .parameters
        .horizons
        .clone()
        .unwrap_or_else(|| (0..7).map(|k| 1.0 + 0.5 * k as f64).collect());

    let free = calderon::calderon_free(&eps)?.induced_covariances()?;
    let vac = states::vacuum_covariances(&eps)?;
    let free_distance = free.distance(&vac)?;
    let ladder = calderon::dirichlet_ladder(&eps, &horizons)?;
    let t_last = horizons[horizons.len() - 1];
    let dir = calderon::calderon_dirichlet(&eps, t_last)?.induced_covariances()?;
    let dir_report = states::validate_state(&dir);
    let dir_purity = states::purity_defect(&dir)?;
    let periodic: Vec<CliResult<calderon::IdentificationReport>> = pool.install(|| {
        betas
            .par_iter()
            .map(|&beta| calderon::periodic_identification(&eps, beta, f64::INFINITY).map_err(CliError::from))
            .collect()
    });
    let periodic = periodic.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut checks = vec![Check::at_most("free_vs_vacuum_distance", free_distance, tol.free_calderon)];
    checks.extend(state_checks("dirichlet.", &dir_report, &dir, tol));
    checks.push(Check::at_most("dirichlet.purity_defect", dir_purity, tol.purity));
    let target = 2.0 * ladder.eps_min;
    checks.push(Check::at_most(
        "dirichlet_rate_relative_error",
        (ladder.fitted_rate - target).abs() / target,
        tol.dirichlet_rate,
    ));
    for r in &periodic {
        checks.push(Check::at_most(
            format!("beta={}.restriction_distance", r.beta),
            r.distance_plus.max(r.distance_minus),
            tol.restriction,
        ));
    }
    let ladder_rows = ladder
        .horizons
        .iter()
        .zip(&ladder.distances)
        .map(|(t, d)| vec![Cell::Float(*t), Cell::Float(*d)])
        .collect();
    let periodic_rows = periodic
        .iter()
        .map(|r| vec![Cell::Float(r.beta), Cell::Float(r.distance_plus), Cell::Float(r.distance_minus)])
        .collect();
    Ok(Outcome {
        results: json!({
            "free_vs_vacuum_distance": free_distance,
            "dirichlet_ladder": to_value(&ladder),
            "dirichlet_state": to_value(&dir_report),
            "periodic": periodic.iter().map(|r| json!({
                "beta": r.beta,
                "distance_plus": r.distance_plus,
                "distance_minus": r.distance_minus,
                "restriction_distance": r.distance_plus.max(r.distance_minus),
            })).collect::<Vec<_>>(),
        }),
        checks,
        tables: vec![
            Table { file: "dirichlet_ladder.csv", header: "horizon,distance", rows: ladder_rows },
            Table { file: "periodic.csv", header: "beta,distance_plus,distance_minus", rows: periodic_rows },
        ],
    })
}

fn run_scatter(s: &Setup, c: &ScenarioConfig) -> CliResult<Outcome> {
    let tol = &c.tolerances;
    let side = parse_side(c.parameters.side.as_deref().unwrap_or("out"))?;
    let horizons = c
        .parameters
        .horizons
        .clone()
        .unwrap_or_else(|| (2..=16).map(|k| 2.0 * k as f64).collect());
    let ladder = evolution::scatter_ladder(s.scenario()?, &horizons, side, tol.scatter_cauchy)?;
    let target = 1.0 - ladder.decay_exponent;
    let mut checks = vec![
        Check::at_most(
            "ladder_rate_relative_error",
            (ladder.fitted_rate - target).abs() / target.abs(),
            tol.scatter_rate,
        ),
        Check::at_most("final_state.purity_defect", ladder.final_purity, tol.scatter_purity),
    ];
    if let Some(pair) = &ladder.final_pair {
        checks.extend(state_checks("final_state.", &ladder.final_report, pair, tol).into_iter().take(1));
    }
    if let Some(w) = ladder.wave_crosscheck {
        checks.push(Check::at_most("wave_crosscheck", w, tol.wave_crosscheck));
    }
    let rows = ladder
        .rows
        .iter()
        .map(|r| vec![Cell::Float(r.horizon), Cell::Float(r.defect), Cell::Float(r.wave_defect.unwrap_or(f64::NAN))])
        .collect();
    Ok(Outcome {
        results: json!({ "ladder": to_value(&ladder), "target_rate": target }),
        checks,
        tables: vec![Table { file: "ladder.csv", header: "horizon,defect,wave_defect", rows }],
    })
}

fn run_conformal(s: &Setup, c: &ScenarioConfig) -> CliResult<Outcome> {
    let tol = &c.tolerances;
    let p = &c.parameters;
    let factor = match p.factor {
        FactorKind::Constant => ConformalFactor::constant(p.factor_value),
        FactorKind::Cosine => ConformalFactor::cosine(p.factor_value),
    };
    let base = p.base_time;
    let cv = factor.at_nodes(&s.grid, base).map_err(|e| CliError::Config(e.to_string()))?;
    let vac = states::vacuum_covariances(&s.scenario()?.eps(base)?)?;
    let t = conformal::transform_cauchy_covariances(&vac, &cv)?;
    let report = states::validate_state(&t);
    let purity_before = states::purity_defect(&vac)?;
    let purity_after = states::purity_defect(&t)?;
    let diagram = conformal::diagram_defect(vac.weight(), &cv)?;
    let mut checks = state_checks("", &report, &t, tol);
    checks.push(Check::at_most("purity_change", (purity_after - purity_before).abs(), tol.conformal_purity));
    checks.push(Check::at_most("diagram_defect", diagram, tol.diagram));
    let ground_distance = if s.profile.is_time_independent() && s.profile.has_unit_lapse() {
        let ground = states::static_reduction(&factor.rescale_static(&s.profile, &s.grid)?, &s.grid)?.ground;
        let d = t.distance(&ground)? / ground.norm();
        checks.push(Check::at_most("rescaled_ground_state_distance", d, tol.rescaled_ground));
        Some(d)
    } else {
        None
    };
    let rows = s
        .grid
        .coordinates()
        .iter()
        .zip(&cv)
        .zip(vac.weight().values().iter().zip(t.weight().values()))
        .map(|((x, c), (w, wt))| vec![Cell::Float(*x), Cell::Float(*c), Cell::Float(*w), Cell::Float(*wt)])
        .collect();
    Ok(Outcome {
        results: json!({
            "factor": factor.label(),
            "state": to_value(&report),
            "purity_before": purity_before,
            "purity_after": purity_after,
            "diagram_defect": diagram,
            "rescaled_ground_state_distance": ground_distance,
        }),
        checks,
        tables: vec![Table { file: "factor.csv", header: "x,c,weight,transformed_weight", rows }],
    })
}

fn run_propagators(s: &Setup, c: &ScenarioConfig) -> CliResult<Outcome> {
    let tol = &c.tolerances;
    let (eps, _) = energy(s, c.parameters.base_time)?;
    let samples = c
        .parameters
        .t_samples
        .clone()
        .unwrap_or_else(|| (0..20).map(|k| -1.9 + 0.2 * k as f64).collect());
    let identity = propagators::verify_feynman_identity(&eps, &samples)?;
    let wick = calderon::wick_continuation_defect(&eps, &samples)?;
    let fam = KernelFamily::new(&eps, KernelKind::Feynman)?;
    let period_dt = 2.0 * PI / (8.0 * fam.eps_max());
    let dt = c.parameters.dt.unwrap_or_else(|| 1e-3f64.min(period_dt));
    let pde = propagators::discrete_pde_residual(&fam, &propagators::symmetric_grid(1.0, dt))?;
    let checks = vec![
        Check::at_most("feynman_identity_defect", identity, tol.feynman),
        Check::at_most("wick_continuation_defect", wick, tol.wick),
        Check::at_most("feynman_delta_weight_error", (pde.delta_weight - 1.0).abs(), tol.delta_weight),
    ];
    let kinds = [
        KernelKind::Retarded,
        KernelKind::Advanced,
        KernelKind::Causal,
        KernelKind::Feynman,
        KernelKind::Euclidean,
    ];
    let rows = (0..=40)
        .map(|k| {
            let t = -2.0 + 0.1 * k as f64;
            let v: Vec<_> = kinds.iter().map(|kind| fam.with_kind(*kind).mode_values(t)[0]).collect();
            vec![
                Cell::Float(t),
                Cell::Float(v[0].re),
                Cell::Float(v[1].re),
                Cell::Float(v[2].re),
                Cell::Float(v[3].re),
                Cell::Float(v[3].im),
                Cell::Float(v[4].re),
            ]
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "eps_min": fam.eps_min(),
            "eps_max": fam.eps_max(),
            "feynman_identity_defect": identity,
            "wick_continuation_defect": wick,
            "feynman_pde": to_value(&pde),
            "pde_dt": dt,
        }),
        checks,
        tables: vec![Table {
            file: "kernels.csv",
            header: "t,retarded,advanced,causal,feynman_re,feynman_im,euclidean",
            rows,
        }],
    })
}

/// Runs the configured experiment and writes `report.json` and CSVs into `out`.
pub fn run_scenario(config: &ScenarioConfig, out: &Path) -> CliResult<RunSummary> {
    config.validate()?;
    let pool = sweep_pool()?;
    let s = setup(config)?;
    let outcome = match config.experiment {
        Experiment::ValidateVacuum => run_validate(&s, config),
        Experiment::ThermalSweep => run_thermal(&s, config, &pool),
        Experiment::Riccati => run_riccati(&s, config),
        Experiment::Calderon => run_calderon(&s, config, &pool),
        Experiment::Scatter => run_scatter(&s, config),
        Experiment::Conformal => run_conformal(&s, config),
        Experiment::Propagators => run_propagators(&s, config),
    }?;

    fs::create_dir_all(out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    let write = |name: &str, body: &str| -> CliResult<PathBuf> {
        let path = out.join(name);
        fs::write(&path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    };
    let passed = outcome.checks.iter().all(|c| c.passed);
    let report = json!({
        "experiment": config.experiment.name(),
        "passed": passed,
        "checks": to_value(&outcome.checks),
        "results": outcome.results,
        "config": to_value(config),
    });
    let mut body = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    body.push('\n');
    let report_path = write("report.json", &body)?;
    let mut files = vec![report_path.clone()];
    for t in &outcome.tables {
        files.push(write(t.file, &t.render())?);
    }
    Ok(RunSummary {
        experiment: config.experiment,
        checks: outcome.checks,
        report_path,
        files,
    })
}

/// Full command flow used by the binary; returns the process exit code.
pub fn run_command(command: Experiment, config_path: &Path, out: Option<&Path>) -> i32 {
    let result = load_config(config_path).and_then(|config| {
        if config.experiment != command {
            return Err(CliError::Config(format!(
                "config declares experiment \"{}\" but the command runs \"{}\"",
                config.experiment.name(),
                command.name()
            )));
        }
        let dir = out
            .map(Path::to_path_buf)
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;
        run_scenario(&config, &dir)
    });
    match result {
        Ok(summary) => {
            for f in summary.failures() {
                let rel = match f.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                };
                eprintln!("invariant failed: {} = {:e} (need {rel} {:e})", f.name, f.value, f.tolerance);
            }
            println!("{}", summary.report_path.display());
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(experiment: &str) -> String {
        format!(
            r#"{{"grid": {{"n_points": 8}}, "profile": {{"name": "flat"}}, "mass": 1.0,
                "time": {{"t_min": -1.0, "t_max": 1.0}}, "experiment": "{experiment}"}}"#
        )
    }

    #[test]
    fn list_mentions_every_command() {
        let text = list_experiments();
        for e in Experiment::ALL {
            assert!(text.contains(e.command()));
        }
        assert!(text.contains("riccati") && text.contains("scatter"));
        assert_eq!(text, list_experiments());
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::from_name(e.name()), Some(e));
            assert_eq!(Experiment::from_name(e.command()), Some(e));
            let v = serde_json::to_value(e).unwrap();
            assert_eq!(v, Value::String(e.name().into()));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(parse_config(&flat("validate-vacuum").replace("1.0,", "-1.0,")), Err(CliError::Config(_))));
        assert!(matches!(parse_config(&flat("nope")), Err(CliError::Config(_))));
        assert!(matches!(parse_config(&flat("riccati").replace("\"flat\"", "\"flat\", \"x\": 1")), Err(CliError::Config(_))));
        let cfg = parse_config(&flat("validate-vacuum").replace("flat", "wormhole")).unwrap();
        assert!(matches!(setup(&cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn csv_uses_fixed_format() {
        let t = Table {
            file: "x.csv",
            header: "a,b",
            rows: vec![vec![Cell::Int(3), Cell::Float(0.1)]],
        };
        assert_eq!(t.render(), "a,b\n3,1.0000000000000001e-1\n");
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::NoAsymptotics).exit_code(), 2);
        assert_eq!(CliError::from(Error::NotPositive { min_eigenvalue: -1.0 }).exit_code(), 1);
    }
}
