//! Run configuration files.
//!
//! Flat `key = value` lines, `#` comments, dotted section names:
//!
//! ```text
//! problem.builder = pd_system        # or problem.file = path/to/description
//! problem.seed = 1
//! problem.param.d = 100
//! solver.estimator = full            # full | sgd | svrg | saga | zero
//! solver.schedule = constant         # constant | decreasing_a | sgd_decreasing
//! solver.eta = 1.3e-4                # constant only; omitted = theory default
//! solver.a = 400                     # decreasing schedules only; omitted = default
//! solver.sampling = uniform          # uniform | by_matrix_norm | by_smoothness
//! solver.probabilities = 0.5,0.5     # explicit sampling, replaces solver.sampling
//! solver.mode = decoupled            # decoupled | linear_constraints | full_projection
//! solver.minibatch = 1
//! solver.seed = 1
//! solver.max_iters = 1000
//! solver.tol = 0
//! solver.allow_large_step = false
//! solver.dual_refresh = 10000
//! trace.stride = 1
//! trace.reference = true
//! trace.wall_time = false
//! output.path = trace.csv
//! ```
//!
//! Comparison files add `compare.tol`, `compare.grid`, `output.summary` and
//! `run.NAME.<key>` overrides of any `problem.*`, `solver.*` or `trace.*` key.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use decoupling::problems::ProblemDescription;
use decoupling::{Error, EstimatorKind, Problem, Result, Sampling, Schedule, StepConfig};

/// Ordered `key → (value, line)` pairs of one file.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected key = value, got '{body}'") })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse { line, message: format!("malformed key '{key}'") });
            }
            if kv.get(key).is_some() {
                return Err(Error::Parse { line, message: format!("duplicate key '{key}'") });
            }
            kv.entries.push((key.to_string(), value.trim().to_string(), line));
        }
        Ok(kv)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|(k, _, _)| k == key) {
            Some(e) => e.1 = value.to_string(),
            None => self.entries.push((key.to_string(), value.to_string(), 0)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.entries.iter().map(|(k, v, l)| (k.as_str(), v.as_str(), *l))
    }
}

fn unknown(key: &str, line: usize) -> Error {
    if line > 0 {
        Error::Config(format!("unknown key '{key}' at line {line}"))
    } else {
        Error::Config(format!("unknown key '{key}'"))
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| Error::Config(format!("{key}: invalid value '{raw}': {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builder(ProblemDescription),
    File(PathBuf),
}

impl ProblemSource {
    /// Build the problem; description files are verified against their recorded fingerprint.
    pub fn load(&self) -> Result<Problem> {
        match self {
            ProblemSource::Builder(d) => d.build(),
            ProblemSource::File(p) => ProblemDescription::load(p).map(|(_, problem)| problem),
        }
    }
}

/// Everything needed to reproduce one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub estimator: EstimatorKind,
    pub step: StepConfig,
    pub reference: bool,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSource::Builder(ProblemDescription::new("pd_system", 0)),
            estimator: EstimatorKind::Full,
            step: StepConfig::default(),
            reference: true,
            output: None,
        }
    }
}

#[derive(Default)]
struct RawSchedule {
    kind: Option<String>,
    eta: Option<f64>,
    a: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(KeyValues::parse(text)?.iter())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Interpret relative problem paths against the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        match &mut self.problem {
            ProblemSource::File(p) if p.is_relative() => *p = base.join(&*p),
            ProblemSource::Builder(d) => {
                if let Some(p) = d.params.get_mut("path") {
                    if !p.is_empty() && Path::new(p.as_str()).is_relative() {
                        *p = base.join(p.as_str()).to_string_lossy().into_owned();
                    }
                }
            }
            _ => {}
        }
    }

    fn from_pairs<'a>(pairs: impl Iterator<Item = (&'a str, &'a str, usize)>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut builder: Option<String> = None;
        let mut file: Option<PathBuf> = None;
        let mut seed = 0u64;
        let mut params = BTreeMap::new();
        let mut sched = RawSchedule::default();
        for (key, raw, line) in pairs {
            let step = &mut cfg.step;
            match key {
                "problem.builder" => builder = Some(raw.to_string()),
                "problem.file" => file = Some(PathBuf::from(raw)),
                "problem.seed" => seed = value(key, raw)?,
                "solver.estimator" => cfg.estimator = raw.parse()?,
                "solver.schedule" => sched.kind = Some(raw.to_string()),
                "solver.eta" => sched.eta = Some(value(key, raw)?),
                "solver.a" => sched.a = Some(value(key, raw)?),
                "solver.sampling" => {
                    if !matches!(step.sampling, Sampling::Explicit(_)) {
                        step.sampling = raw.parse()?;
                    } else {
                        return Err(Error::Config("solver.sampling conflicts with solver.probabilities".into()));
                    }
                }
                "solver.probabilities" => {
                    if step.sampling != Sampling::Uniform {
                        return Err(Error::Config("solver.probabilities conflicts with solver.sampling".into()));
                    }
                    let probs = raw.split(',').map(|p| value::<f64>(key, p.trim())).collect::<Result<Vec<_>>>()?;
                    step.sampling = Sampling::Explicit(probs);
                }
                "solver.mode" => step.mode = raw.parse()?,
                "solver.minibatch" => step.minibatch = value(key, raw)?,
                "solver.seed" => step.seed = value(key, raw)?,
                "solver.max_iters" => step.max_iters = value(key, raw)?,
                "solver.tol" => step.tol = value(key, raw)?,
                "solver.allow_large_step" => step.allow_large_step = value(key, raw)?,
                "solver.dual_refresh" => step.dual_refresh = value(key, raw)?,
                "trace.stride" => step.trace_stride = value(key, raw)?,
                "trace.reference" => cfg.reference = value(key, raw)?,
                "trace.wall_time" => step.record_wall_time = value(key, raw)?,
                "output.path" => cfg.output = Some(PathBuf::from(raw)),
                _ => match key.strip_prefix("problem.param.") {
                    Some(name) if !name.is_empty() => {
                        params.insert(name.to_string(), raw.to_string());
                    }
                    _ => return Err(unknown(key, line)),
                },
            }
        }
        cfg.problem = match (builder, file) {
            (Some(_), Some(_)) => return Err(Error::Config("problem.builder and problem.file are exclusive".into())),
            (None, Some(f)) => {
                if !params.is_empty() || seed != 0 {
                    return Err(Error::Config("problem.file takes no problem.seed or problem.param.* keys".into()));
                }
                ProblemSource::File(f)
            }
            (Some(b), None) => {
                let desc = ProblemDescription { builder: b, seed, params, ..Default::default() };
                desc.validate().map_err(|e| match e {
                    Error::Config(m) if m.starts_with("param.") => Error::Config(format!("problem.{m}")),
                    other => other,
                })?;
                ProblemSource::Builder(desc)
            }
            (None, None) => return Err(Error::Config("missing problem.builder or problem.file".into())),
        };
        cfg.step.schedule = schedule(sched)?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.problem {
            ProblemSource::Builder(d) => {
                let _ = writeln!(out, "problem.builder = {}", d.builder);
                let _ = writeln!(out, "problem.seed = {}", d.seed);
                for (k, v) in &d.params {
                    let _ = writeln!(out, "problem.param.{k} = {v}");
                }
            }
            ProblemSource::File(p) => {
                let _ = writeln!(out, "problem.file = {}", p.display());
            }
        }
        let s = &self.step;
        let _ = writeln!(out, "solver.estimator = {}", self.estimator);
        let _ = writeln!(out, "solver.schedule = {}", s.schedule.name());
        match s.schedule {
            Schedule::Constant { eta: Some(eta) } => {
                let _ = writeln!(out, "solver.eta = {eta:?}");
            }
            Schedule::DecreasingA { a: Some(a) } | Schedule::SgdDecreasing { a: Some(a) } => {
                let _ = writeln!(out, "solver.a = {a:?}");
            }
            _ => {}
        }
        match &s.sampling {
            Sampling::Explicit(p) => {
                let p: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(out, "solver.probabilities = {}", p.join(","));
            }
            other => {
                let _ = writeln!(out, "solver.sampling = {other}");
            }
        }
        let _ = writeln!(out, "solver.mode = {}", s.mode.name());
        let _ = writeln!(out, "solver.minibatch = {}", s.minibatch);
        let _ = writeln!(out, "solver.seed = {}", s.seed);
        let _ = writeln!(out, "solver.max_iters = {}", s.max_iters);
        let _ = writeln!(out, "solver.tol = {:?}", s.tol);
        let _ = writeln!(out, "solver.allow_large_step = {}", s.allow_large_step);
        let _ = writeln!(out, "solver.dual_refresh = {}", s.dual_refresh);
        let _ = writeln!(out, "trace.stride = {}", s.trace_stride);
        let _ = writeln!(out, "trace.reference = {}", self.reference);
        let _ = writeln!(out, "trace.wall_time = {}", s.record_wall_time);
        if let Some(p) = &self.output {
            let _ = writeln!(out, "output.path = {}", p.display());
        }
        out
    }
}

fn schedule(raw: RawSchedule) -> Result<Schedule> {
    let kind = raw.kind.as_deref().unwrap_or("constant");
    match kind {
        "constant" => {
            if raw.a.is_some() {
                return Err(Error::Config("solver.a: only valid with a decreasing schedule".into()));
            }
            Ok(Schedule::Constant { eta: raw.eta })
        }
        "decreasing_a" | "sgd_decreasing" => {
            if raw.eta.is_some() {
                return Err(Error::Config("solver.eta: only valid with schedule = constant".into()));
            }
            Ok(if kind == "decreasing_a" {
                Schedule::DecreasingA { a: raw.a }
            } else {
                Schedule::SgdDecreasing { a: raw.a }
            })
        }
        other => Err(Error::Config(format!(
            "solver.schedule: expected constant | decreasing_a | sgd_decreasing, got '{other}'"
        ))),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// A comparison of several runs on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub runs: Vec<(String, RunConfig)>,
    /// Relative `dist_sq` tolerance for the summary.
    pub tol: f64,
    /// Epoch spacing of the aligned grid.
    pub grid: f64,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// `(key, value, line)` of one run-specific override.
type Entry<'a> = (String, &'a str, usize);

impl CompareConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let mut shared: Vec<(&str, &str, usize)> = Vec::new();
        let mut runs: Vec<(String, Vec<Entry<'_>>)> = Vec::new();
        let mut tol = 1e-10;
        let mut grid = 1.0;
        let mut output = None;
        let mut summary = None;
        for (key, raw, line) in kv.iter() {
            match key {
                "compare.tol" => tol = value(key, raw)?,
                "compare.grid" => grid = value(key, raw)?,
                "output.path" => output = Some(PathBuf::from(raw)),
                "output.summary" => summary = Some(PathBuf::from(raw)),
                _ if key.starts_with("problem.") || key.starts_with("solver.") || key.starts_with("trace.") => {
                    shared.push((key, raw, line))
                }
                _ => {
                    let rest = key.strip_prefix("run.").ok_or_else(|| unknown(key, line))?;
                    let (name, sub) = rest.split_once('.').ok_or_else(|| unknown(key, line))?;
                    let scoped = sub.starts_with("problem.") || sub.starts_with("solver.") || sub.starts_with("trace.");
                    if name.is_empty() || !scoped {
                        return Err(unknown(key, line));
                    }
                    match runs.iter_mut().find(|(n, _)| n == name) {
                        Some((_, v)) => v.push((sub.to_string(), raw, line)),
                        None => runs.push((name.to_string(), vec![(sub.to_string(), raw, line)])),
                    }
                }
            }
        }
        if !(tol > 0.0) || !(grid > 0.0) {
            return Err(Error::Config("compare.tol and compare.grid must be positive".into()));
        }
        if runs.is_empty() {
            return Err(Error::Config("no run.NAME.* sections".into()));
        }
        let mut out = Vec::with_capacity(runs.len());
        for (name, overrides) in runs {
            let mut merged: Vec<(&str, &str, usize)> =
                shared.iter().filter(|(k, _, _)| !overrides.iter().any(|(o, _, _)| o == k)).copied().collect();
            merged.extend(overrides.iter().map(|(k, v, l)| (k.as_str(), *v, *l)));
            let cfg = RunConfig::from_pairs(merged.into_iter()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("run.{name}: {m}")),
                other => other,
            })?;
            out.push((name, cfg));
        }
        Ok(CompareConfig { runs: out, tol, grid, output, summary })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (_, run) in &mut cfg.runs {
            run.resolve_paths(base);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use decoupling::ProjectionMode;

    const KACZMARZ: &str = "problem.builder = pd_system\nproblem.seed = 1\nproblem.param.d = 20\n\
        solver.estimator = full\nsolver.eta = 1.3e-4\ntrace.stride = 100\n";

    #[test]
    fn parse_and_round_trip() {
        let cfg = RunConfig::parse(KACZMARZ).unwrap();
        assert_eq!(cfg.step.schedule, Schedule::Constant { eta: Some(1.3e-4) });
        assert_eq!(cfg.step.trace_stride, 100);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = RunConfig::parse("problem.builder = pd_system\nsolver.etta = 1\n").unwrap_err();
        assert_eq!(err, Error::Config("unknown key 'solver.etta' at line 2".into()));
    }

    #[test]
    fn unknown_param_names_the_field() {
        let err = RunConfig::parse("problem.builder = pd_system\nproblem.param.size = 3\n").unwrap_err();
        assert!(err.to_string().contains("problem.param.size"), "{err}");
    }

    #[test]
    fn schedule_key_conflicts() {
        assert!(RunConfig::parse("problem.builder = svm\nsolver.schedule = decreasing_a\nsolver.eta = 1\n").is_err());
        assert!(RunConfig::parse("problem.builder = svm\nsolver.a = 3\n").is_err());
    }

    #[test]
    fn compare_merges_shared_keys() {
        let text = format!("{KACZMARZ}compare.tol = 1e-8\nrun.a.solver.seed = 2\nrun.b.solver.mode = full_projection\n");
        let cfg = CompareConfig::parse(&text).unwrap();
        assert_eq!(cfg.runs.len(), 2);
        assert_eq!(cfg.runs[0].0, "a");
        assert_eq!(cfg.runs[0].1.step.seed, 2);
        assert_eq!(cfg.runs[1].1.step.mode, ProjectionMode::FullProjection);
        assert_eq!(cfg.runs[1].1.step.trace_stride, 100);
        assert!(CompareConfig::parse(&format!("{KACZMARZ}run.a.output.path = x\n")).is_err());
        assert!(CompareConfig::parse(&format!("{KACZMARZ}compare.grd = 1\nrun.a.solver.seed = 1\n")).is_err());
    }
}
