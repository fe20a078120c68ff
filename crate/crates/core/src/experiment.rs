//! Experiment plumbing: validated run configurations, CSV histories, sweeps
//! and a registry of named problems.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;

use crate::discretization::{DirichletMode, DEFAULT_PENALTY_EPS};
use crate::dn::{run_dn, ConvergenceEstimate, DnOptions, DnReport, Method, ParityMode, RunStatus};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::problem::{example_catalog, ProblemSpec};

pub const CSV_HEADER: &str = "iter,l2_abs,l2_rel,h1_broken_rel,ratio";

type Factory = Arc<dyn Fn(Grid) -> Result<ProblemSpec> + Send + Sync>;

/// Named problem constructors. Custom problems are registered as closures of
/// the grid.
#[derive(Clone)]
pub struct ProblemRegistry {
    entries: BTreeMap<String, (usize, Factory)>,
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl ProblemRegistry {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Registers `name` for grids of dimension `dim`, replacing any earlier entry.
    pub fn register(
        &mut self,
        name: impl Into<String>,
        dim: usize,
        factory: impl Fn(Grid) -> Result<ProblemSpec> + Send + Sync + 'static,
    ) {
        self.entries.insert(name.into(), (dim, Arc::new(factory)));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn dim(&self, name: &str) -> Option<usize> {
        self.entries.get(name).map(|e| e.0)
    }

    pub fn build(&self, name: &str, grid: Grid) -> Result<ProblemSpec> {
        let (_, f) = self.entries.get(name).ok_or_else(|| Error::Config {
            field: "problem".into(),
            reason: format!("no problem named {name:?} is registered"),
        })?;
        Ok(f(grid)?.with_name(name))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemChoice {
    Example(u8),
    Custom(String),
}

impl ProblemChoice {
    pub fn label(&self) -> String {
        match self {
            ProblemChoice::Example(id) => format!("example{id}"),
            ProblemChoice::Custom(name) => name.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirichletKind {
    Strong,
    Penalty,
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemChoice,
    pub dim: usize,
    pub n: usize,
    pub theta: f64,
    pub method: Method,
    pub parity: ParityMode,
    pub max_iter: usize,
    pub tol: f64,
    pub dirichlet: DirichletMode,
    pub out: Option<PathBuf>,
}

/// Unvalidated settings from flags or a config file; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RawConfig {
    pub example: Option<u8>,
    pub problem: Option<String>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub method: Option<String>,
    pub parity: Option<String>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub dirichlet: Option<DirichletKind>,
    pub penalty_eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub thetas: Option<Vec<f64>>,
    pub ns: Option<Vec<usize>>,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// `self` wins wherever both are set.
    pub fn or(self, other: RawConfig) -> RawConfig {
        RawConfig {
            example: self.example.or(other.example),
            problem: self.problem.or(other.problem),
            dim: self.dim.or(other.dim),
            n: self.n.or(other.n),
            theta: self.theta.or(other.theta),
            method: self.method.or(other.method),
            parity: self.parity.or(other.parity),
            max_iter: self.max_iter.or(other.max_iter),
            tol: self.tol.or(other.tol),
            dirichlet: self.dirichlet.or(other.dirichlet),
            penalty_eps: self.penalty_eps.or(other.penalty_eps),
            out: self.out.or(other.out),
            thetas: self.thetas.or(other.thetas),
            ns: self.ns.or(other.ns),
        }
    }

    /// Checks every field before anything is solved.
    pub fn validate(&self, registry: &ProblemRegistry) -> Result<RunConfig> {
        let (problem, natural_dim) = match (&self.example, &self.problem) {
            (Some(_), Some(_)) => return Err(config_err("problem", "give either an example or a problem name, not both")),
            (Some(id), None) => match id {
                1 | 2 => (ProblemChoice::Example(*id), 2),
                3 | 4 => (ProblemChoice::Example(*id), 3),
                _ => return Err(config_err("example", format!("{id} is not one of 1, 2, 3, 4"))),
            },
            (None, Some(name)) => match registry.dim(name) {
                Some(d) => (ProblemChoice::Custom(name.clone()), d),
                None => return Err(config_err("problem", format!("no problem named {name:?} is registered"))),
            },
            (None, None) => return Err(config_err("example", "missing")),
        };
        let dim = self.dim.unwrap_or(natural_dim);
        if dim != natural_dim {
            return Err(config_err(
                "dim",
                format!("{} is {natural_dim}-dimensional, got {dim}", problem.label()),
            ));
        }
        let n = self.n.ok_or_else(|| config_err("n", "missing"))?;
        if n < 4 || n % 2 != 0 {
            return Err(config_err("n", format!("{n} must be an even number of cells, at least 4")));
        }
        let theta = self.theta.ok_or_else(|| config_err("theta", "missing"))?;
        check_theta(theta)?;
        let method = match self.method.as_deref().unwrap_or("new") {
            "new" => Method::New,
            "standard" => Method::Standard,
            other => return Err(config_err("method", format!("{other:?} is not standard or new"))),
        };
        let parity = match self.parity.as_deref() {
            Some("even") => ParityMode::Even,
            Some("odd") => ParityMode::Odd,
            Some("full") | None => ParityMode::Full,
            Some(other) => return Err(config_err("parity", format!("{other:?} is not even, odd or full"))),
        };
        let max_iter = self.max_iter.unwrap_or(20);
        if max_iter == 0 {
            return Err(config_err("max-iter", "must be at least 1"));
        }
        let tol = self.tol.unwrap_or(1e-12);
        if !tol.is_finite() || tol < 0.0 {
            return Err(config_err("tol", format!("{tol} must be a non-negative number")));
        }
        let eps = self.penalty_eps.unwrap_or(DEFAULT_PENALTY_EPS);
        if !eps.is_finite() || eps <= 0.0 {
            return Err(config_err("penalty-eps", format!("{eps} must be positive")));
        }
        let dirichlet = match self.dirichlet.unwrap_or(DirichletKind::Strong) {
            DirichletKind::Strong => DirichletMode::Strong,
            DirichletKind::Penalty => DirichletMode::Penalty(eps),
        };
        Ok(RunConfig {
            problem,
            dim,
            n,
            theta,
            method,
            parity,
            max_iter,
            tol,
            dirichlet,
            out: self.out.clone(),
        })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta <= 0.0 || theta > 1.0 {
        return Err(config_err("theta", format!("{theta} is outside (0, 1]")));
    }
    Ok(())
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }

    pub fn spec(&self, registry: &ProblemRegistry) -> Result<ProblemSpec> {
        let grid = self.grid()?;
        match &self.problem {
            ProblemChoice::Example(id) => example_catalog(*id, grid),
            ProblemChoice::Custom(name) => registry.build(name, grid),
        }
    }

    /// `<problem>_<method>_<parity>_theta<θ>_n<N>.csv`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_theta{}_n{}.csv",
            self.problem.label(),
            self.method,
            self.parity,
            self.theta,
            self.n
        )
    }

    fn options(&self) -> DnOptions {
        DnOptions {
            theta: self.theta,
            max_iter: self.max_iter,
            tol: self.tol,
            dirichlet: self.dirichlet,
            ..DnOptions::default()
        }
    }
}

/// CSV text of an iteration history. Floats use the shortest decimal that
/// round-trips.
pub fn history_csv(report: &DnReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.records {
        let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.iter, r.l2_abs, r.l2_rel, r.h1_rel, ratio);
    }
    s
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Gnuplot script drawing the relative `L2` histories of the given CSV files.
pub fn gnuplot_script(csvs: &[PathBuf]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset logscale y\nset key autotitle columnhead\nset xlabel 'iteration'\nset ylabel 'relative L2 error'\n",
    );
    let plots: Vec<String> = csvs
        .iter()
        .map(|p| {
            let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("run");
            format!("'{}' using 1:3 with linespoints title '{}'", p.display(), name.trim_end_matches(".csv"))
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: RunConfig,
    pub report: DnReport,
    pub csv: Option<PathBuf>,
    pub summary: String,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> bool {
        self.report.status == RunStatus::NonContractive
    }
}

fn summary_line(config: &RunConfig, report: &DnReport) -> String {
    let grid_h = 2.0 / config.n as f64;
    let theory = (1.0 - 2.0 * config.theta).abs();
    let last = report.records.last().map_or(f64::NAN, |r| r.l2_rel);
    let head = if report.status == RunStatus::NonContractive {
        "FAILURE"
    } else {
        "summary"
    };
    format!(
        "{head}: {} method={} parity={} theta={} N={} h={} iterations={} status={} final_l2_rel={} rho={} theory={}",
        config.problem.label(),
        config.method,
        config.parity,
        config.theta,
        config.n,
        grid_h,
        report.records.len(),
        report.status,
        last,
        report.estimate,
        theory
    )
}

/// Runs one configuration, writes its CSV when an output path is set and
/// returns the summary. A non-contractive run still writes the full CSV.
pub fn run_experiment(config: &RunConfig, registry: &ProblemRegistry) -> Result<ExperimentOutcome> {
    let spec = config.spec(registry)?;
    let u0 = spec.initial_guess_or_compatible()?;
    let report = run_dn(&spec, config.method, config.parity, &u0, &config.options())?;
    let csv = match &config.out {
        Some(path) => {
            write_atomic(path, &history_csv(&report))?;
            Some(path.clone())
        }
        None => None,
    };
    let summary = summary_line(config, &report);
    Ok(ExperimentOutcome {
        config: config.clone(),
        report,
        csv,
        summary,
    })
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub theta: f64,
    pub n: usize,
    pub file: PathBuf,
    pub result: std::result::Result<(ConvergenceEstimate, RunStatus), String>,
}

impl SweepRow {
    pub fn deviation(&self) -> Option<f64> {
        match &self.result {
            Ok((ConvergenceEstimate::Factor(r), _)) => Some((r - (1.0 - 2.0 * self.theta).abs()).abs()),
            _ => None,
        }
    }
}

/// One run per `(θ, N)` pair, each written to `dir` under
/// [`RunConfig::file_name`]. Failures are kept per row.
pub fn sweep(
    template: &RunConfig,
    thetas: &[f64],
    ns: &[usize],
    dir: &Path,
    registry: &ProblemRegistry,
) -> Result<Vec<SweepRow>> {
    if thetas.is_empty() {
        return Err(config_err("thetas", "empty list"));
    }
    if ns.is_empty() {
        return Err(config_err("ns", "empty list"));
    }
    for &t in thetas {
        check_theta(t)?;
    }
    for &n in ns {
        if n < 4 || n % 2 != 0 {
            return Err(config_err("ns", format!("{n} must be an even number of cells, at least 4")));
        }
    }
    fs::create_dir_all(dir)?;
    let combos: Vec<(f64, usize)> = thetas.iter().flat_map(|&t| ns.iter().map(move |&n| (t, n))).collect();
    let rows = combos
        .par_iter()
        .map(|&(theta, n)| {
            let mut cfg = template.clone();
            cfg.theta = theta;
            cfg.n = n;
            let file = dir.join(cfg.file_name());
            cfg.out = Some(file.clone());
            let result = run_experiment(&cfg, registry)
                .map(|o| (o.report.estimate, o.report.status))
                .map_err(|e| e.to_string());
            SweepRow { theta, n, file, result }
        })
        .collect();
    Ok(rows)
}

/// Aggregate table of a sweep.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("theta,n,rho,theory,deviation,status\n");
    for r in rows {
        let theory = (1.0 - 2.0 * r.theta).abs();
        match &r.result {
            Ok((est, status)) => {
                let dev = r.deviation().map(|d| d.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{},{}", r.theta, r.n, est, theory, dev, status);
            }
            Err(e) => {
                let _ = writeln!(s, "{},{},,{},,error: {}", r.theta, r.n, theory, e.replace(',', ";"));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Side;

    fn raw(example: u8, n: usize, theta: f64) -> RawConfig {
        RawConfig {
            example: Some(example),
            n: Some(n),
            theta: Some(theta),
            ..RawConfig::default()
        }
    }

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        let reg = ProblemRegistry::new();
        assert!(raw(1, 20, 0.45).validate(&reg).is_ok());
        assert_eq!(field_of(raw(5, 20, 0.45).validate(&reg).unwrap_err()), "example");
        assert_eq!(field_of(raw(1, 21, 0.45).validate(&reg).unwrap_err()), "n");
        assert_eq!(field_of(raw(1, 20, 1.5).validate(&reg).unwrap_err()), "theta");
        let mut r = raw(3, 20, 0.45);
        r.dim = Some(2);
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "dim");
        let mut r = raw(1, 20, 0.45);
        r.method = Some("fast".into());
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "method");
        let mut r = raw(1, 20, 0.45);
        r.parity = Some("both".into());
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "parity");
        let mut r = raw(1, 20, 0.45);
        r.penalty_eps = Some(0.0);
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "penalty-eps");
        let mut r = raw(1, 20, 0.45);
        r.max_iter = Some(0);
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "max-iter");
        let mut r = raw(1, 20, 0.45);
        r.problem = Some("mine".into());
        assert_eq!(field_of(r.validate(&reg).unwrap_err()), "problem");
    }

    #[test]
    fn flags_win_over_file() {
        let file = RawConfig::from_toml("example = 2\nn = 40\ntheta = 0.3\nmethod = \"standard\"\ndirichlet = \"penalty\"\npenalty-eps = 1e-10\n").unwrap();
        let flags = RawConfig {
            theta: Some(0.45),
            ..RawConfig::default()
        };
        let cfg = flags.or(file).validate(&ProblemRegistry::new()).unwrap();
        assert_eq!(cfg.theta, 0.45);
        assert_eq!(cfg.n, 40);
        assert_eq!(cfg.method, Method::Standard);
        assert_eq!(cfg.dirichlet, DirichletMode::Penalty(1e-10));
        assert!(RawConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn file_naming() {
        let mut cfg = raw(1, 100, 0.45).validate(&ProblemRegistry::new()).unwrap();
        cfg.parity = ParityMode::Even;
        assert_eq!(cfg.file_name(), "example1_new_even_theta0.45_n100.csv");
    }

    #[test]
    fn csv_format_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = raw(1, 16, 0.45);
        r.parity = Some("even".into());
        r.tol = Some(0.0);
        r.max_iter = Some(5);
        r.out = Some(dir.path().join("a.csv"));
        let cfg = r.validate(&ProblemRegistry::new()).unwrap();
        let out = run_experiment(&cfg, &ProblemRegistry::new()).unwrap();
        let text = fs::read_to_string(out.csv.unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with(','));
        let cols: Vec<&str> = lines[3].split(',').collect();
        let ratio: f64 = cols[4].parse().unwrap();
        assert!((ratio - 0.1).abs() < 1e-6);
        assert_eq!(cols[4], ratio.to_string());
        assert!(out.summary.contains("theory=0.09999999999999998") || out.summary.contains("theory=0.1"));
        let again = run_experiment(&cfg, &ProblemRegistry::new()).unwrap();
        assert_eq!(fs::read_to_string(again.csv.unwrap()).unwrap(), text);
    }

    #[test]
    fn registry_custom_problem() {
        let mut reg = ProblemRegistry::new();
        reg.register("ramp", 2, |g| {
            ProblemSpec::builder(g)
                .source(|p| p[0])
                .dirichlet(Side::Left, |_| 0.0)
                .dirichlet(Side::Right, |_| 0.0)
                .dirichlet(Side::Bottom, |_| 0.0)
                .dirichlet(Side::Top, |_| 0.0)
                .build()
        });
        let r = RawConfig {
            problem: Some("ramp".into()),
            n: Some(12),
            theta: Some(0.5),
            ..RawConfig::default()
        };
        let cfg = r.validate(&reg).unwrap();
        let out = run_experiment(&cfg, &reg).unwrap();
        assert!(out.report.records[1].l2_rel <= 1e-10);
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["ramp"]);
    }

    #[test]
    fn sweep_files_and_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = raw(1, 16, 0.45);
        r.parity = Some("even".into());
        r.tol = Some(0.0);
        r.max_iter = Some(12);
        let cfg = r.validate(&ProblemRegistry::new()).unwrap();
        let rows = sweep(&cfg, &[0.45, 0.49], &[16, 24], dir.path(), &ProblemRegistry::new()).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.file.exists());
            assert!(row.deviation().unwrap() <= 1e-4);
        }
        assert!(dir.path().join("example1_new_even_theta0.49_n24.csv").exists());
        assert_eq!(sweep_table(&rows).lines().count(), 5);
        assert!(sweep(&cfg, &[], &[16], dir.path(), &ProblemRegistry::new()).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
        assert!(gnuplot_script(&[p]).contains("using 1:3"));
    }
}
