//! Acceptance criteria for the solver, each returning a verdict with a one-line detail.

use std::path::{Path, PathBuf};
use std::time::Instant;

use decoupling::{EstimatorKind, Result, TraceRecord};
use decoupling_bench::checks::{estimators, key_lemma, prox, rates, reductions, PropertyReport};
use decoupling_bench::config::{CompareConfig, RunConfig};
use decoupling_bench::run::{compare, execute};

/// Bundled bench configurations.
pub fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../bench/configs")
}

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn from_reports(reports: &[PropertyReport]) -> Outcome {
    let failed: Vec<&PropertyReport> = reports.iter().filter(|r| !r.pass).collect();
    let worst = reports.iter().map(|r| r.worst_slack).fold(f64::INFINITY, f64::min);
    let mut detail = format!("{} properties, worst slack {worst:.3e}", reports.len());
    for r in &failed {
        detail.push_str(&format!("; FAILED {r}"));
    }
    Outcome { pass: failed.is_empty(), detail }
}

fn within(mut o: Outcome, secs: f64, limit: f64) -> Outcome {
    if secs >= limit {
        o.pass = false;
        o.detail.push_str(&format!("; runtime {secs:.1}s exceeds {limit}s"));
    }
    o
}

pub fn c1() -> Result<Outcome> {
    let start = Instant::now();
    let reports = ["sdca", "dykstra", "kaczmarz"]
        .into_iter()
        .map(|name| reductions::equivalence(name, 20, 1000))
        .collect::<Result<Vec<_>>>()?;
    Ok(within(from_reports(&reports), start.elapsed().as_secs_f64(), 10.0))
}

pub fn c2() -> Result<Outcome> {
    Ok(from_reports(&[key_lemma::fixed_points(10, 500)?]))
}

pub fn c3() -> Result<Outcome> {
    let start = Instant::now();
    let r = key_lemma::key_lemma(10, 200, 600)?;
    Ok(within(from_reports(&[r]), start.elapsed().as_secs_f64(), 30.0))
}

pub fn c4() -> Result<Outcome> {
    let reports = decoupling_bench::checks::instances::PROX_FAMILIES
        .iter()
        .enumerate()
        .map(|(k, family)| prox::firm_nonexpansiveness(family, 10_000, 100 + k as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(from_reports(&reports))
}

pub fn c5() -> Result<Outcome> {
    let mut reports = Vec::new();
    for (k, kind) in [EstimatorKind::Sgd, EstimatorKind::Svrg, EstimatorKind::Saga].into_iter().enumerate() {
        reports.push(estimators::unbiasedness(kind, estimators::INSTANCES, 201 + k as u64)?);
    }
    for (k, kind) in [EstimatorKind::Svrg, EstimatorKind::Saga].into_iter().enumerate() {
        reports.push(estimators::one_step(kind, false, estimators::INSTANCES, 301 + k as u64)?);
    }
    Ok(from_reports(&reports))
}

pub fn c6() -> Result<Outcome> {
    let start = Instant::now();
    let r = rates::linear_constraints(3)?;
    Ok(within(from_reports(&[r]), start.elapsed().as_secs_f64(), 30.0))
}

pub fn c7() -> Result<Outcome> {
    let start = Instant::now();
    let (a, slope_a) = rates::decreasing_schedule(20)?;
    let (b, slope_b) = rates::averaged_bregman_gap()?;
    let mut o = from_reports(&[a, b]);
    o.detail.push_str(&format!("; slopes {slope_a:.3} (≤ -1.6) and {slope_b:.3} (≤ -0.8)"));
    Ok(within(o, start.elapsed().as_secs_f64(), 180.0))
}

pub fn c8() -> Result<Outcome> {
    let (r, ratios) = rates::sgd_plateau(20)?;
    let mut o = from_reports(&[r]);
    o.detail.push_str(&format!("; plateau ratios {ratios:.3?}"));
    Ok(o)
}

pub fn c9() -> Result<Outcome> {
    Ok(from_reports(&[rates::smooth_terms(3)?]))
}

pub fn c10() -> Result<Outcome> {
    Ok(from_reports(&[prox::composition_vs_brute_force(100, 7)?, prox::piecewise_middle_branch(100, 8)?]))
}

fn relative(trace: &[TraceRecord]) -> Vec<(u64, f64)> {
    let d0 = trace[0].dist_sq.expect("reference distance");
    trace.iter().map(|r| (r.t, r.dist_sq.expect("reference distance") / d0)).collect()
}

pub fn c11() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = RunConfig::load(&configs().join("kaczmarz_pd100.conf"))?;
    let rel = relative(&execute(&cfg)?);
    let hit = rel.iter().position(|&(_, v)| v <= 1e-12);
    let upto = hit.unwrap_or(rel.len() - 1);
    let increases = rel[..=upto].windows(2).filter(|w| w[1].1 > w[0].1).count();
    let kaczmarz_ok = hit.is_some() && increases == 0;

    let cmp = compare(&CompareConfig::load(&configs().join("double_saga_vs_full_projection.conf"))?)?;
    let evals: Vec<Option<u64>> = cmp.summaries.iter().map(|s| s.reached.as_ref().map(|r| r.prox_evals)).collect();
    let advantage = match (evals[0], evals[1]) {
        (Some(d), Some(f)) if d > 0 => f as f64 / d as f64,
        _ => 0.0,
    };
    let mut o = Outcome {
        pass: kaczmarz_ok && advantage >= 5.0,
        detail: format!(
            "kaczmarz reached 1e-12 at t={} with {increases} increasing 100-iteration windows; \
             {} vs {} prox evaluations to tolerance ({advantage:.1}x)",
            hit.map(|k| rel[k].0.to_string()).unwrap_or_else(|| "-".into()),
            cmp.names[0],
            cmp.names[1],
        ),
    };
    o = within(o, start.elapsed().as_secs_f64(), 120.0);
    Ok(o)
}

pub fn bench_example() -> Result<Outcome> {
    let mut cfg = RunConfig::load(&configs().join("kaczmarz_pd100.conf"))?;
    cfg.step.max_iters = 200_000;
    cfg.step.trace_stride = 200_000;
    let trace = execute(&cfg)?;
    let last = trace.last().expect("nonempty trace");
    let rel = relative(&trace).last().expect("nonempty").1;
    Ok(Outcome {
        pass: rel <= 1e-16 && last.prox_evals <= 200_000,
        detail: format!("relative dist_sq {rel:.3e} after {} prox evaluations (target 1e-16)", last.prox_evals),
    })
}

pub type Criterion = (&'static str, fn() -> Result<Outcome>);

pub const CRITERIA: [Criterion; 12] = [
    ("criterion 1 reduction equivalence", c1),
    ("criterion 2 fixed-point identities", c2),
    ("criterion 3 key-lemma slack", c3),
    ("criterion 4 firm nonexpansiveness", c4),
    ("criterion 5 estimator unbiasedness and one-step inequality", c5),
    ("criterion 6 linear rate under linear constraints", c6),
    ("criterion 7 decreasing vs constant stepsize slopes", c7),
    ("criterion 8 sgd neighborhood scaling", c8),
    ("criterion 9 smooth-term linear rate", c9),
    ("criterion 10 prox of compositions", c10),
    ("criterion 11 kaczmarz monotone convergence and double-saga advantage", c11),
    ("bench example kaczmarz 1e-16 within 2e5 prox evaluations", bench_example),
];
