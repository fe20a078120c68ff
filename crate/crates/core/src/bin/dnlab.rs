use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dn_crosspoint::discretization::oracle_solve;
use dn_crosspoint::experiment::{
    gnuplot_script, run_experiment, sweep, sweep_table, write_atomic, DirichletKind, ProblemRegistry, RawConfig,
};
use dn_crosspoint::problem::{build_compatible_initial_guess, check_initial_guess};
use dn_crosspoint::Error;

/// Dirichlet-Neumann cross-point lab.
#[derive(Parser)]
#[command(name = "dnlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one DN iteration and write its error history as CSV.
    Run {
        #[command(flatten)]
        opts: Opts,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run every (theta, N) combination into a directory.
    Sweep {
        #[command(flatten)]
        opts: Opts,
        /// Comma-separated relaxation parameters.
        #[arg(long, value_delimiter = ',')]
        thetas: Vec<f64>,
        /// Comma-separated cell counts.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Solve on the whole domain and write `x,y[,z],u`.
    Oracle {
        #[command(flatten)]
        opts: Opts,
    },
    /// Check an initial guess against the cross-point conditions.
    CheckGuess {
        #[command(flatten)]
        opts: Opts,
        /// Check the constructed compatible guess instead of the problem's own.
        #[arg(long)]
        compatible: bool,
    },
}

#[derive(Args, Clone)]
struct Opts {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<u8>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    parity: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_parser = ["strong", "penalty"])]
    dirichlet: Option<String>,
    #[arg(long)]
    penalty_eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn raw(&self) -> Result<RawConfig, Error> {
        let flags = RawConfig {
            example: self.example,
            dim: self.dim,
            n: self.n,
            theta: self.theta,
            method: self.method.clone(),
            parity: self.parity.clone(),
            max_iter: self.max_iter,
            tol: self.tol,
            dirichlet: self.dirichlet.as_deref().map(|d| match d {
                "penalty" => DirichletKind::Penalty,
                _ => DirichletKind::Strong,
            }),
            penalty_eps: self.penalty_eps,
            out: self.out.clone(),
            ..RawConfig::default()
        };
        match &self.config {
            Some(path) => Ok(flags.or(RawConfig::load(path)?)),
            None => Ok(flags),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Singular(_) | Error::NotSymmetricMatrix { .. } | Error::Backend(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    let registry = ProblemRegistry::new();
    match command {
        Command::Run { opts, gnuplot } => {
            let cfg = opts.raw()?.validate(&registry)?;
            let outcome = run_experiment(&cfg, &registry)?;
            for w in &outcome.report.warnings {
                eprintln!("warning: {w}");
            }
            if let (true, Some(csv)) = (gnuplot, &outcome.csv) {
                write_atomic(&csv.with_extension("gp"), &gnuplot_script(std::slice::from_ref(csv)))?;
            }
            if outcome.csv.is_none() {
                print!("{}", dn_crosspoint::experiment::history_csv(&outcome.report));
            }
            println!("{}", outcome.summary);
            Ok(if outcome.failed() { 4 } else { 0 })
        }
        Command::Sweep {
            opts,
            thetas,
            ns,
            gnuplot,
        } => {
            let raw = opts.raw()?;
            let thetas = if thetas.is_empty() { raw.thetas.clone().unwrap_or_default() } else { thetas };
            let ns = if ns.is_empty() { raw.ns.clone().unwrap_or_default() } else { ns };
            if thetas.is_empty() || ns.is_empty() {
                let field = if thetas.is_empty() { "thetas" } else { "ns" };
                return Err(Error::Config {
                    field: field.into(),
                    reason: "empty list".into(),
                });
            }
            let dir = raw.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let template = RawConfig {
                theta: raw.theta.or(thetas.first().copied()),
                n: raw.n.or(ns.first().copied()),
                out: None,
                ..raw
            }
            .validate(&registry)?;
            let rows = sweep(&template, &thetas, &ns, &dir, &registry)?;
            let table = sweep_table(&rows);
            write_atomic(&dir.join("sweep_summary.csv"), &table)?;
            if gnuplot {
                let files: Vec<PathBuf> = rows.iter().filter(|r| r.result.is_ok()).map(|r| r.file.clone()).collect();
                write_atomic(&dir.join("sweep.gp"), &gnuplot_script(&files))?;
            }
            print!("{table}");
            let failed = rows.iter().any(|r| r.result.is_err());
            Ok(if failed { 3 } else { 0 })
        }
        Command::Oracle { opts } => {
            let raw = opts.raw()?;
            let raw = RawConfig {
                theta: raw.theta.or(Some(0.5)),
                ..raw
            };
            let cfg = raw.validate(&registry)?;
            let spec = cfg.spec(&registry)?;
            let u = oracle_solve(&spec, cfg.dirichlet)?;
            let grid = spec.grid();
            let mut text = String::from(if grid.dim() == 3 { "x,y,z,u\n" } else { "x,y,u\n" });
            for n in grid.nodes() {
                let p = grid.point(n);
                if grid.dim() == 3 {
                    text.push_str(&format!("{},{},{},{}\n", p[0], p[1], p[2], u.at(n)));
                } else {
                    text.push_str(&format!("{},{},{}\n", p[0], p[1], u.at(n)));
                }
            }
            match &cfg.out {
                Some(path) => write_atomic(path, &text)?,
                None => print!("{text}"),
            }
            eprintln!(
                "oracle: {} N={} h={} max|u|={}",
                cfg.problem.label(),
                cfg.n,
                grid.spacing(),
                u.max_abs()
            );
            Ok(0)
        }
        Command::CheckGuess { opts, compatible } => {
            let raw = opts.raw()?;
            let raw = RawConfig {
                theta: raw.theta.or(Some(0.5)),
                ..raw
            };
            let cfg = raw.validate(&registry)?;
            let spec = cfg.spec(&registry)?;
            let guess = if compatible {
                build_compatible_initial_guess(&spec)?
            } else {
                spec.initial_guess_or_compatible()?
            };
            let report = check_initial_guess(&spec, &guess)?;
            println!("id,side,k,condition,violation");
            for c in &report.checks {
                println!("{},{},{},{},{}", c.id.value(), c.side.label(), c.k, c.condition, c.violation);
            }
            println!("max violation {}", report.max_violation);
            Ok(0)
        }
    }
}
