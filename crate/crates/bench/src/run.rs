//! Executing configured runs and comparisons.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::thread;

use decoupling::trace::{format_float, write_csv, CSV_HEADER};
use decoupling::{reference_solution, Error, Problem, Reference, Result, Solver, TraceRecord};

use crate::config::{CompareConfig, RunConfig};

/// Run one configuration against an already-built problem.
pub fn run_on(problem: &Problem, reference: Option<&Reference>, cfg: &RunConfig) -> Result<Vec<TraceRecord>> {
    let mut solver = Solver::new(problem, cfg.step.clone(), cfg.estimator)?;
    solver.run(reference)
}

fn reference_for(problem: &Problem, wanted: bool) -> Result<Option<Reference>> {
    if wanted {
        reference_solution(problem).map(Some)
    } else {
        Ok(None)
    }
}

/// Build the problem (and reference, if requested) and run.
pub fn execute(cfg: &RunConfig) -> Result<Vec<TraceRecord>> {
    let problem = cfg.problem.load()?;
    let reference = reference_for(&problem, cfg.reference)?;
    run_on(&problem, reference.as_ref(), cfg)
}

pub fn trace_to_string(trace: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii csv")
}

/// Iterations, epochs and prox evaluations at which `dist_sq ≤ tol · dist_sq⁰` first held.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub name: String,
    pub reached: Option<TraceRecord>,
    pub final_rel: Option<f64>,
}

pub fn summarize(name: &str, trace: &[TraceRecord], tol: f64) -> Summary {
    let d0 = trace.first().and_then(|r| r.dist_sq);
    let rel = |r: &TraceRecord| match (r.dist_sq, d0) {
        (Some(d), Some(d0)) if d0 > 0.0 => Some(d / d0),
        (Some(d), Some(_)) => Some(d),
        _ => None,
    };
    let reached = trace.iter().find(|r| rel(r).is_some_and(|v| v <= tol)).cloned();
    Summary { name: name.to_string(), reached, final_rel: trace.last().and_then(rel) }
}

/// Outcome of a comparison.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub names: Vec<String>,
    pub traces: Vec<Vec<TraceRecord>>,
    pub summaries: Vec<Summary>,
    pub fingerprint: String,
}

/// Run every configuration of a comparison; runs execute concurrently.
pub fn compare(cfg: &CompareConfig) -> Result<Comparison> {
    let problems: Vec<Problem> = cfg.runs.iter().map(|(_, r)| r.problem.load()).collect::<Result<_>>()?;
    let fingerprint = problems[0].fingerprint();
    for ((name, _), p) in cfg.runs.iter().zip(&problems) {
        let fp = p.fingerprint();
        if fp != fingerprint {
            return Err(Error::Config(format!(
                "run.{name}: problem hash {fp} differs from run.{}: {fingerprint}",
                cfg.runs[0].0
            )));
        }
    }
    let problem = &problems[0];
    let reference = reference_for(problem, cfg.runs.iter().any(|(_, r)| r.reference))?;
    let traces: Vec<Result<Vec<TraceRecord>>> = thread::scope(|s| {
        let handles: Vec<_> = cfg
            .runs
            .iter()
            .map(|(_, run)| {
                let reference = reference.as_ref().filter(|_| run.reference);
                s.spawn(move || run_on(problem, reference, run))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = cfg.runs.iter().map(|(n, _)| n.clone()).collect();
    let summaries = names.iter().zip(&traces).map(|(n, t)| summarize(n, t, cfg.tol)).collect();
    Ok(Comparison { names, traces, summaries, fingerprint })
}

const PER_RUN: [&str; 4] = ["t", "prox_evals", "dist_sq", "objective_gap"];

/// Traces aligned on the epoch grid `0, Δ, 2Δ, …`; each cell holds the last record at or before
/// the grid point, empty past the end of a run. A single run is written in the plain trace format.
pub fn aligned_csv(cmp: &Comparison, grid: f64) -> String {
    if cmp.traces.len() == 1 {
        return trace_to_string(&cmp.traces[0]);
    }
    let mut out = String::from("epochs");
    for name in &cmp.names {
        for col in PER_RUN {
            let _ = write!(out, ",{name}.{col}");
        }
    }
    out.push('\n');
    let max_epochs = cmp.traces.iter().filter_map(|t| t.last()).map(|r| r.epochs).fold(0.0, f64::max);
    let points = (max_epochs / grid + 1e-9).floor() as u64;
    let mut cursor = vec![0usize; cmp.traces.len()];
    for k in 0..=points {
        let e = k as f64 * grid;
        out.push_str(&format_float(e));
        for (trace, c) in cmp.traces.iter().zip(cursor.iter_mut()) {
            if trace.last().is_some_and(|l| l.epochs < e) {
                out.push_str(",,,,");
                continue;
            }
            while *c + 1 < trace.len() && trace[*c + 1].epochs <= e {
                *c += 1;
            }
            let r = &trace[*c];
            let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
            let _ = write!(out, ",{},{},{},{}", r.t, r.prox_evals, opt(r.dist_sq), opt(r.objective_gap));
        }
        out.push('\n');
    }
    out
}

/// `name,iterations,epochs,prox_evals,final_rel_dist_sq`; empty cells when the tolerance was not reached.
pub fn summary_csv(cmp: &Comparison) -> String {
    let mut out = String::from("method,iterations,epochs,prox_evals,final_rel_dist_sq\n");
    for s in &cmp.summaries {
        let (t, e, p) = match &s.reached {
            Some(r) => (r.t.to_string(), format_float(r.epochs), r.prox_evals.to_string()),
            None => Default::default(),
        };
        let f = s.final_rel.map(format_float).unwrap_or_default();
        let _ = writeln!(out, "{},{t},{e},{p},{f}", s.name);
    }
    out
}

/// Human-readable summary table.
pub fn write_summary_table<W: Write>(cmp: &Comparison, tol: f64, mut out: W) -> io::Result<()> {
    writeln!(out, "problem {}  tolerance {tol:e} (relative dist_sq)", cmp.fingerprint)?;
    writeln!(out, "{:<20} {:>12} {:>12} {:>14} {:>12}", "method", "iterations", "epochs", "prox_evals", "final")?;
    for s in &cmp.summaries {
        let f = s.final_rel.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        match &s.reached {
            Some(r) => writeln!(
                out,
                "{:<20} {:>12} {:>12.3} {:>14} {:>12}",
                s.name, r.t, r.epochs, r.prox_evals, f
            )?,
            None => writeln!(out, "{:<20} {:>12} {:>12} {:>14} {:>12}", s.name, "-", "-", "-", f)?,
        }
    }
    Ok(())
}

/// Header of the plain trace CSV.
pub fn trace_header() -> String {
    CSV_HEADER.join(",")
}
