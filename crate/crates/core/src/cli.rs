//! Scenario configs, the batch runner and convergence studies behind the
//! `maslov` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::ambient::AmbientManifold;
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianImmersion;
use crate::surface::{BoundedSurface, DEFAULT_ORDER, DEFAULT_RESOLUTION, MAX_RESOLUTION};
use crate::verify::{
    boundary_dependence_check, identity_residual, monotonicity_check, MonotonicityReport, Status, Tolerances,
    VerificationReport,
};

pub const MIN_RESOLUTION: usize = 8;
/// Residuals below this are treated as rounding noise by the order fit.
pub const SATURATION_FLOOR: f64 = 1e-13;

pub const FULL_CATALOG: &str = include_str!("../configs/full.toml");
pub const MINIMAL_CATALOG: &str = include_str!("../configs/minimal.toml");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Extra checks a scenario may request besides the identity itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `μ = 2λω` on every surface, for minimal `L` in a positive manifold.
    Monotonicity,
    /// The first surface against each of the others.
    BoundaryDependence,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    manifold: Spanned<String>,
    lagrangian: Spanned<String>,
    surface: Option<Spanned<String>>,
    surfaces: Option<Spanned<Vec<String>>>,
    resolution: Option<Spanned<i64>>,
    quadrature_order: Option<Spanned<i64>>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    checks: Vec<Check>,
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    scenario: Vec<RawScenario>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub manifold: String,
    pub lagrangian: String,
    pub surfaces: Vec<String>,
    pub resolution: usize,
    pub quadrature_order: usize,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    /// Where to write this scenario's JSON report, if anywhere.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<Vec<ScenarioConfig>, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
    let raws = if table.is_empty() {
        Vec::new()
    } else if table.contains_key("scenario") {
        toml::from_str::<Document>(text)
            .map_err(|e| ConfigError(e.to_string()))?
            .scenario
    } else {
        vec![toml::from_str::<RawScenario>(text).map_err(|e| ConfigError(e.to_string()))?]
    };
    raws.into_iter()
        .enumerate()
        .map(|(k, raw)| validate(text, k, raw))
        .collect()
}

fn validate(text: &str, index: usize, raw: RawScenario) -> Result<ScenarioConfig, ConfigError> {
    let name = raw.name.clone().unwrap_or_else(|| format!("scenario-{}", index + 1));
    let at = |span: Range<usize>, msg: String| ConfigError(format!("line {}: {name}: {msg}", line_of(text, span)));

    let manifold: AmbientManifold = raw
        .manifold
        .get_ref()
        .parse()
        .map_err(|e: Error| at(raw.manifold.span(), e.to_string()))?;
    let lagrangian = LagrangianImmersion::parse(raw.lagrangian.get_ref(), &manifold)
        .map_err(|e| at(raw.lagrangian.span(), e.to_string()))?;
    let (surfaces, surface_span) = match (&raw.surface, &raw.surfaces) {
        (Some(one), None) => (vec![one.get_ref().clone()], one.span()),
        (None, Some(many)) if !many.get_ref().is_empty() => (many.get_ref().clone(), many.span()),
        (None, Some(many)) => return Err(at(many.span(), "`surfaces` is empty".into())),
        (Some(one), Some(_)) => return Err(at(one.span(), "give either `surface` or `surfaces`, not both".into())),
        (None, None) => return Err(at(raw.lagrangian.span(), "missing `surface` or `surfaces`".into())),
    };
    for spec in &surfaces {
        BoundedSurface::parse(spec, &manifold, &lagrangian).map_err(|e| at(surface_span.clone(), e.to_string()))?;
    }

    let resolution = match &raw.resolution {
        Some(r) => check_resolution(*r.get_ref()).map_err(|e| at(r.span(), e))?,
        None => DEFAULT_RESOLUTION,
    };
    let quadrature_order = match &raw.quadrature_order {
        Some(q) if (2..=32).contains(q.get_ref()) => *q.get_ref() as usize,
        Some(q) => return Err(at(q.span(), format!("quadrature_order {} not in 2..=32", q.get_ref()))),
        None => DEFAULT_ORDER,
    };
    raw.tolerances
        .validate()
        .map_err(|e| ConfigError(format!("{name}: {e}")))?;
    if raw.checks.contains(&Check::BoundaryDependence) && surfaces.len() < 2 {
        return Err(at(
            surface_span,
            "boundary_dependence needs at least two surfaces".into(),
        ));
    }
    Ok(ScenarioConfig {
        name,
        manifold: manifold.to_string(),
        lagrangian: raw.lagrangian.into_inner(),
        surfaces,
        resolution,
        quadrature_order,
        tolerances: raw.tolerances,
        checks: raw.checks,
        out: raw.out,
    })
}

fn check_resolution(r: i64) -> Result<usize, String> {
    let ok = r >= MIN_RESOLUTION as i64 && r <= MAX_RESOLUTION as i64 && (r as u64).is_power_of_two();
    if ok {
        Ok(r as usize)
    } else {
        Err(format!(
            "resolution {r} must be a power of two in [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
        ))
    }
}

/// Result of one scenario: a report per surface plus requested checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: String,
    pub status: Status,
    pub reports: Vec<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotonicity: Option<MonotonicityReport>,
    /// `|δ(F₁) − δ(Fₖ)|` for `k ≥ 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_dependence: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScenarioOutcome {
    fn errored(name: &str, e: Error) -> Self {
        Self {
            scenario: name.to_string(),
            status: Status::Error,
            reports: Vec::new(),
            monotonicity: None,
            boundary_dependence: None,
            error: Some(e.to_string()),
        }
    }

    /// One line per scenario, followed by one indented line per failure.
    pub fn status_lines(&self) -> String {
        let mut out = String::new();
        match (&self.error, self.status) {
            (Some(e), _) => {
                let _ = writeln!(out, "ERROR {}: {e}", self.scenario);
            }
            (None, status) => {
                let worst = self.reports.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
                let _ = writeln!(
                    out,
                    "{status} {} ({} surface{}, max |residual| = {worst:.3e})",
                    self.scenario,
                    self.reports.len(),
                    if self.reports.len() == 1 { "" } else { "s" }
                );
                for r in &self.reports {
                    for f in &r.failures {
                        let _ = writeln!(out, "  {}: {f}", r.surface);
                    }
                }
                if let Some(m) = &self.monotonicity {
                    if !m.passed {
                        let _ = writeln!(
                            out,
                            "  monotonicity: applicable = {}, deltas = {:?}",
                            m.applicable, m.deltas
                        );
                    }
                }
            }
        }
        out
    }
}

fn build(config: &ScenarioConfig) -> Result<(AmbientManifold, LagrangianImmersion, Vec<BoundedSurface>)> {
    let ambient: AmbientManifold = config.manifold.parse()?;
    let lagrangian = LagrangianImmersion::parse(&config.lagrangian, &ambient)?;
    let surfaces = config
        .surfaces
        .iter()
        .map(|s| BoundedSurface::parse(s, &ambient, &lagrangian)?.with_grid(config.resolution, config.quadrature_order))
        .collect::<Result<Vec<_>>>()?;
    Ok((ambient, lagrangian, surfaces))
}

pub fn run_scenario(config: &ScenarioConfig) -> ScenarioOutcome {
    run_scenario_inner(config).unwrap_or_else(|e| ScenarioOutcome::errored(&config.name, e))
}

fn run_scenario_inner(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let (ambient, lagrangian, surfaces) = build(config)?;
    let tol = &config.tolerances;
    let reports = surfaces
        .iter()
        .map(|f| identity_residual(&config.name, &ambient, &lagrangian, f, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut passed = reports.iter().all(|r| r.status == Status::Pass);

    let monotonicity = if config.checks.contains(&Check::Monotonicity) {
        let m = monotonicity_check(&ambient, &lagrangian, &surfaces, tol)?;
        passed &= m.passed;
        Some(m)
    } else {
        None
    };
    let boundary_dependence = if config.checks.contains(&Check::BoundaryDependence) {
        let first = &surfaces[0];
        let links = first.boundary_links();
        let [link] = links.as_slice() else {
            return Err(Error::Linkage(format!(
                "{} must have a single boundary loop",
                first.label
            )));
        };
        let gaps = surfaces[1..]
            .iter()
            .map(|other| boundary_dependence_check(&ambient, &lagrangian, &link.path, first, other))
            .collect::<Result<Vec<_>>>()?;
        passed &= gaps.iter().all(|g| *g <= tol.identity);
        Some(gaps)
    } else {
        None
    };
    Ok(ScenarioOutcome {
        scenario: config.name.clone(),
        status: if passed { Status::Pass } else { Status::Fail },
        reports,
        monotonicity,
        boundary_dependence,
        error: None,
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Resource(e.to_string()))
}

/// Runs every scenario; outcomes are in config order whatever the thread count.
pub fn run_suite(configs: &[ScenarioConfig], threads: Option<usize>) -> Result<(Vec<ScenarioOutcome>, i32)> {
    let outcomes: Vec<ScenarioOutcome> = pool(threads)?.install(|| configs.par_iter().map(run_scenario).collect());
    let code = if outcomes.iter().all(|o| o.status == Status::Pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    Ok((outcomes, code))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub mu: i64,
    pub residual: f64,
    /// `log₂(|rₖ₋₁| / |rₖ|)`; absent on the first row and when saturated.
    pub observed_order: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub surface: String,
    pub order: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Smallest observed order over unsaturated refinements.
    pub fn min_observed_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.observed_order).reduce(f64::min)
    }

    pub fn mu_stable(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].mu == w[1].mu)
    }

    pub fn saturated(&self) -> bool {
        self.rows.iter().skip(1).any(|r| r.saturated)
    }
}

/// Identity residual on the first surface of `config` at `levels`
/// successive doublings of its resolution.
pub fn convergence_study(config: &ScenarioConfig, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::Precondition(format!(
            "convergence needs at least 3 levels, got {levels}"
        )));
    }
    let top = config.resolution.checked_shl((levels - 1) as u32).unwrap_or(usize::MAX);
    if top > MAX_RESOLUTION || top >> (levels - 1) != config.resolution {
        return Err(Error::Resource(format!(
            "{levels} levels from resolution {} exceed the maximum {MAX_RESOLUTION}",
            config.resolution
        )));
    }
    let (ambient, lagrangian, surfaces) = build(config)?;
    let mut surface = surfaces[0].clone();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        if level > 0 {
            surface = surface.refine()?;
        }
        let r = identity_residual(&config.name, &ambient, &lagrangian, &surface, &config.tolerances)?;
        let saturated = r.residual.abs() < SATURATION_FLOOR;
        let observed_order = match rows.last() {
            Some(prev) if !saturated && !prev.saturated => Some((prev.residual.abs() / r.residual.abs()).log2()),
            _ => None,
        };
        rows.push(ConvergenceRow {
            resolution: surface.resolution,
            mu: r.mu,
            residual: r.residual,
            observed_order,
            saturated,
        });
    }
    Ok(ConvergenceTable {
        scenario: config.name.clone(),
        surface: surface.label.clone(),
        order: config.quadrature_order,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Catalog {
    Full,
    Minimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

/// Verify `μ(F) − 2λω(F) = σ_L(∂F)/π` over scenario suites.
#[derive(Debug, Parser)]
#[command(name = "maslov", version)]
pub struct Args {
    /// TOML scenario file.
    #[arg(long, conflicts_with = "catalog")]
    pub config: Option<PathBuf>,
    /// Built-in scenario catalog.
    #[arg(long, value_enum)]
    pub catalog: Option<Catalog>,
    /// Directory for reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override every scenario's grid resolution.
    #[arg(long)]
    pub resolution: Option<i64>,
    /// Run a convergence study with this many refinement levels instead.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn load_configs(args: &Args) -> Result<Vec<ScenarioConfig>, ConfigError> {
    let text = match (&args.config, args.catalog) {
        (Some(path), _) => fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?,
        (None, Some(Catalog::Full)) => FULL_CATALOG.to_string(),
        (None, Some(Catalog::Minimal)) => MINIMAL_CATALOG.to_string(),
        (None, None) => return Err(ConfigError("one of --config or --catalog is required".into())),
    };
    let mut configs = parse_config(&text)?;
    if let Some(r) = args.resolution {
        let r = check_resolution(r).map_err(ConfigError)?;
        for c in &mut configs {
            c.resolution = r;
        }
    }
    Ok(configs)
}

pub fn reports_json(outcomes: &[ScenarioOutcome]) -> String {
    serde_json::to_string_pretty(outcomes).expect("reports serialize") + "\n"
}

/// Summary table, one row per surface report.
pub fn reports_csv(outcomes: &[ScenarioOutcome]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "surface",
        "lambda",
        "mu",
        "omega",
        "sigma_over_pi",
        "residual",
        "status",
    ])
    .expect("in-memory csv");
    for o in outcomes {
        if o.reports.is_empty() {
            w.write_record([o.scenario.as_str(), "", "", "", "", "", "", "ERROR"])
                .expect("in-memory csv");
        }
        for r in &o.reports {
            w.write_record([
                r.scenario.clone(),
                r.surface.clone(),
                r.lambda.to_string(),
                r.mu.to_string(),
                r.omega_f.to_string(),
                r.sigma_over_pi.to_string(),
                r.residual.to_string(),
                r.status.to_string(),
            ])
            .expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

pub fn convergence_csv(tables: &[ConvergenceTable]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "surface",
        "order",
        "resolution",
        "mu",
        "residual",
        "observed_order",
        "saturated",
    ])
    .expect("in-memory csv");
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.scenario.clone(),
                t.surface.clone(),
                t.order.to_string(),
                r.resolution.to_string(),
                r.mu.to_string(),
                r.residual.to_string(),
                r.observed_order.map(|o| o.to_string()).unwrap_or_default(),
                r.saturated.to_string(),
            ])
            .expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)
}

/// Runs the binary's logic, writing status lines to `stdout` and warnings
/// and errors to `stderr`. Returns the process exit code.
pub fn run(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let configs = match load_configs(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if configs.is_empty() {
        let _ = writeln!(stderr, "warning: no scenarios to run");
        return EXIT_PASS;
    }
    let result = match args.levels {
        Some(levels) => run_convergence(args, &configs, levels, stdout),
        None => run_reports(args, &configs, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAIL
        }
    }
}

fn run_reports(
    args: &Args,
    configs: &[ScenarioConfig],
    stdout: &mut dyn Write,
) -> std::result::Result<i32, Box<dyn std::error::Error>> {
    let (outcomes, code) = run_suite(configs, args.threads)?;
    for o in &outcomes {
        write!(stdout, "{}", o.status_lines())?;
    }
    let counts = outcomes.iter().fold(BTreeMap::new(), |mut m, o| {
        *m.entry(o.status.to_string()).or_insert(0) += 1;
        m
    });
    let counts: Vec<String> = counts.iter().map(|(status, k)| format!("{k} {status}")).collect();
    let noun = if outcomes.len() == 1 { "scenario" } else { "scenarios" };
    writeln!(stdout, "{} {noun}: {}", outcomes.len(), counts.join(", "))?;
    for (config, outcome) in configs.iter().zip(&outcomes) {
        if let Some(path) = &config.out {
            write_file(path, &reports_json(std::slice::from_ref(outcome)))?;
        }
    }
    if let Some(dir) = &args.out {
        if matches!(args.format, Format::Json | Format::Both) {
            write_file(&dir.join("reports.json"), &reports_json(&outcomes))?;
        }
        if matches!(args.format, Format::Csv | Format::Both) {
            write_file(&dir.join("summary.csv"), &reports_csv(&outcomes))?;
        }
    }
    Ok(code)
}

fn run_convergence(
    args: &Args,
    configs: &[ScenarioConfig],
    levels: usize,
    stdout: &mut dyn Write,
) -> std::result::Result<i32, Box<dyn std::error::Error>> {
    let tables = pool(args.threads)?.install(|| {
        configs
            .par_iter()
            .map(|c| convergence_study(c, levels))
            .collect::<Result<Vec<_>>>()
    })?;
    for t in &tables {
        writeln!(stdout, "{} / {} (order {})", t.scenario, t.surface, t.order)?;
        writeln!(
            stdout,
            "  {:>10} {:>4} {:>12} {:>8}",
            "resolution", "mu", "residual", "order"
        )?;
        for r in &t.rows {
            let order = match (r.observed_order, r.saturated) {
                (_, true) => "saturated".to_string(),
                (Some(o), false) => format!("{o:.3}"),
                (None, false) => "-".to_string(),
            };
            writeln!(
                stdout,
                "  {:>10} {:>4} {:>12.3e} {:>8}",
                r.resolution, r.mu, r.residual, order
            )?;
        }
    }
    if let Some(dir) = &args.out {
        if matches!(args.format, Format::Json | Format::Both) {
            write_file(
                &dir.join("convergence.json"),
                &(serde_json::to_string_pretty(&tables)? + "\n"),
            )?;
        }
        if matches!(args.format, Format::Csv | Format::Both) {
            write_file(&dir.join("convergence.csv"), &convergence_csv(&tables))?;
        }
    }
    let stable = tables.iter().all(ConvergenceTable::mu_stable);
    Ok(if stable { EXIT_PASS } else { EXIT_FAIL })
}
