use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decoupling::problems::ProblemDescription;
use decoupling::{Error, Result};
use decoupling_bench::checks::{run_suite, SUITES};
use decoupling_bench::config::{CompareConfig, RunConfig};
use decoupling_bench::run::{aligned_csv, compare, execute, summary_csv, trace_to_string, write_summary_table};

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "decoupling-bench", version, about = "Run, compare and check the decoupling solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Configuration file (flat `key = value`)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; overrides output.path. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sampling seed; overrides solver.seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    /// Step-residual tolerance; overrides solver.tol
    #[arg(long)]
    tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.step.seed = s;
        }
        if let Some(n) = self.max_iters {
            cfg.step.max_iters = n;
        }
        if let Some(t) = self.tol {
            cfg.step.tol = t;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trace
    Solve(Overrides),
    /// Run several configurations on one problem and write traces aligned by epochs
    Compare(Overrides),
    /// Run invariant suites
    Check {
        /// Suite to run (repeatable); all suites when omitted
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Write a problem description file
    Gen {
        builder: String,
        /// Builder parameter `name=value` (repeatable)
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn io_error(e: io::Error) -> Error {
    Error::Oracle(format!("i/o: {e}"))
}

fn solve(o: &Overrides) -> Result<bool> {
    let mut cfg = RunConfig::load(&o.config)?;
    o.apply(&mut cfg);
    let trace = execute(&cfg)?;
    let out = o.out.as_deref().or(cfg.output.as_deref());
    write_output(out, &trace_to_string(&trace)).map_err(io_error)?;
    Ok(true)
}

fn compare_cmd(o: &Overrides) -> Result<bool> {
    let mut cfg = CompareConfig::load(&o.config)?;
    for (_, run) in &mut cfg.runs {
        o.apply(run);
    }
    let cmp = compare(&cfg)?;
    let out = o.out.as_deref().or(cfg.output.as_deref());
    write_output(out, &aligned_csv(&cmp, cfg.grid)).map_err(io_error)?;
    if let Some(p) = &cfg.summary {
        fs::write(p, summary_csv(&cmp)).map_err(io_error)?;
    }
    write_summary_table(&cmp, cfg.tol, io::stderr().lock()).map_err(io_error)?;
    Ok(true)
}

fn check(suites: &[String]) -> Result<bool> {
    let names: Vec<&str> = if suites.is_empty() { SUITES.to_vec() } else { suites.iter().map(String::as_str).collect() };
    for name in &names {
        if !SUITES.contains(name) {
            return Err(Error::Config(format!("unknown suite '{name}' (expected {})", SUITES.join(", "))));
        }
    }
    let mut failed = 0;
    let mut total = 0;
    for name in names {
        for report in run_suite(name)? {
            println!("{report}");
            total += 1;
            failed += usize::from(!report.pass);
        }
    }
    println!("{total} properties, {failed} failed");
    Ok(failed == 0)
}

fn gen(builder: &str, params: &[String], seed: u64, out: Option<&Path>) -> Result<bool> {
    let mut desc = ProblemDescription::new(builder, seed);
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--param expects NAME=VALUE, got '{p}'")))?;
        desc = desc.with_param(k.trim(), v.trim());
    }
    let problem = desc.build()?;
    write_output(out, &desc.to_text(&problem)?).map_err(io_error)?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => solve(o),
        Command::Compare(o) => compare_cmd(o),
        Command::Check { suite } => check(suite),
        Command::Gen { builder, params, seed, out } => gen(builder, params, *seed, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } => ExitCode::from(USAGE),
                _ => ExitCode::from(FAILURE),
            }
        }
    }
}
