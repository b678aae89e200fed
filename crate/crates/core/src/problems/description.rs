//! Problem description files.
//!
//! ```text
//! # comment
//! builder = constrained_regression
//! seed = 7
//! param.rows = 600
//! param.constraints = 50
//! dim = 123
//! m = 50
//! fingerprint = 3f1c…
//! ```
//!
//! `builder`, `seed` and the `param.*` keys define the instance. `dim`, `m` and `fingerprint`
//! are written by [`ProblemDescription::to_text`] and checked on load when present.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{Problem, SmoothComponent};

use super::builders::{
    build_consensus_constraints, build_constrained_regression, build_dantzig, build_fused_lasso, build_group_lasso,
    build_kaczmarz_problem, build_svm, path_incidence, FusedForm, Labels,
};
use super::data::{load_libsvm, Dataset};
use super::generators::{
    a9a_standin, gaussian_dataset, gaussian_matrix, gaussian_vector, gen_random_pd_system, gisette_standin,
    rng_from_seed, A9A_DIM,
};

/// A parameter accepted by a builder, with its default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, default, help }
}

const DATASET: ParamSpec = p("dataset", "a9a", "a9a | gisette | gaussian");
const PATH: ParamSpec = p("path", "", "LIBSVM file replacing the synthetic stand-in");

/// Builder names with their parameters.
pub const BUILDERS: &[(&str, &[ParamSpec])] = &[
    ("pd_system", &[p("d", "100", "system size")]),
    (
        "constrained_regression",
        &[
            DATASET,
            PATH,
            p("rows", "600", "rows used (constraints + loss)"),
            p("dim", "50", "feature dimension for gisette/gaussian"),
            p("constraints", "50", "leading rows turned into hard constraints"),
            p("ridge", "1e-3", "ridge weight folded into each loss term"),
            p("consistent", "true", "replace labels by A x₀"),
            p("noise", "0.1", "label noise for gaussian data"),
        ],
    ),
    (
        "svm",
        &[
            DATASET,
            PATH,
            p("rows", "100", "number of hinge terms"),
            p("dim", "50", "feature dimension for gisette/gaussian"),
            p("lambda", "0.1", "weight of (λ/2)‖x‖²"),
        ],
    ),
    (
        "fused_lasso",
        &[
            p("rows", "50", "least-squares rows"),
            p("dim", "20", "dimension"),
            p("lambda1", "0.01", "ℓ₁ weight"),
            p("lambda2", "0.1", "difference penalty weight"),
            p("form", "penalty", "penalty | constraint"),
            p("epsilon", "0.1", "slab half-width for the constraint form"),
        ],
    ),
    (
        "group_lasso",
        &[
            p("rows", "50", "least-squares rows"),
            p("dim", "20", "dimension"),
            p("group_size", "5", "size of consecutive groups"),
            p("weight", "0.1", "group norm weight"),
        ],
    ),
    (
        "dantzig",
        &[p("rows", "30", "rows of A"), p("dim", "10", "columns of A"), p("lambda", "0.5", "slab half-width")],
    ),
    (
        "consensus",
        &[
            p("nodes", "5", "number of nodes"),
            p("block_dim", "3", "variables per node"),
            p("ring", "true", "close the path into a ring"),
        ],
    ),
];

pub fn builder_params(name: &str) -> Option<&'static [ParamSpec]> {
    BUILDERS.iter().find(|(n, _)| *n == name).map(|(_, ps)| *ps)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProblemDescription {
    pub builder: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    /// Recorded on write; verified on load.
    pub expected_dim: Option<usize>,
    pub expected_m: Option<usize>,
    pub fingerprint: Option<String>,
}

/// Typed access to a builder's parameters with defaults filled in.
struct Params<'a> {
    values: BTreeMap<&'static str, &'a str>,
}

impl<'a> Params<'a> {
    fn raw(&self, name: &str) -> &'a str {
        self.values[name]
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(name);
        raw.parse().map_err(|e| Error::Config(format!("param.{name}: invalid value '{raw}': {e}")))
    }

    fn positive(&self, name: &str) -> Result<usize> {
        let v: usize = self.parse(name)?;
        if v == 0 {
            return Err(Error::Config(format!("param.{name}: must be positive")));
        }
        Ok(v)
    }
}

impl ProblemDescription {
    pub fn new(builder: &str, seed: u64) -> Self {
        ProblemDescription { builder: builder.to_string(), seed, ..Default::default() }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut desc = ProblemDescription::default();
        let mut have_builder = false;
        for (k, line) in text.lines().enumerate() {
            let lineno = k + 1;
            let err = |message: String| Error::Parse { line: lineno, message };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "builder" => {
                    desc.builder = value.to_string();
                    have_builder = true;
                }
                "seed" => desc.seed = value.parse().map_err(|_| err(format!("seed: invalid value '{value}'")))?,
                "dim" => desc.expected_dim = Some(value.parse().map_err(|_| err(format!("dim: invalid value '{value}'")))?),
                "m" => desc.expected_m = Some(value.parse().map_err(|_| err(format!("m: invalid value '{value}'")))?),
                "fingerprint" => desc.fingerprint = Some(value.to_string()),
                _ => match key.strip_prefix("param.") {
                    Some(name) if !name.is_empty() => {
                        if desc.params.insert(name.to_string(), value.to_string()).is_some() {
                            return Err(err(format!("duplicate key '{key}'")));
                        }
                    }
                    _ => return Err(err(format!("unknown key '{key}'"))),
                },
            }
        }
        if !have_builder {
            return Err(Error::Parse { line: 0, message: "missing 'builder' key".into() });
        }
        Ok(desc)
    }

    /// Check the builder name and every parameter name; unknown ones are configuration errors.
    pub fn validate(&self) -> Result<&'static [ParamSpec]> {
        let specs = builder_params(&self.builder).ok_or_else(|| {
            let names: Vec<&str> = BUILDERS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("unknown builder '{}' (known: {})", self.builder, names.join(", ")))
        })?;
        for key in self.params.keys() {
            if !specs.iter().any(|s| s.name == key) {
                return Err(Error::Config(format!("param.{key}: unknown parameter for builder '{}'", self.builder)));
            }
        }
        Ok(specs)
    }

    fn resolved(&self) -> Result<Params<'_>> {
        let specs = self.validate()?;
        let values = specs
            .iter()
            .map(|s| (s.name, self.params.get(s.name).map(String::as_str).unwrap_or(s.default)))
            .collect();
        Ok(Params { values })
    }

    pub fn build(&self) -> Result<Problem> {
        let ps = self.resolved()?;
        let seed = self.seed;
        match self.builder.as_str() {
            "pd_system" => {
                let s = gen_random_pd_system(ps.positive("d")?, seed)?;
                build_kaczmarz_problem(&s.w, &s.b)
            }
            "constrained_regression" => {
                let data = dataset(&ps, seed)?;
                let labels = if ps.parse::<bool>("consistent")? {
                    Labels::Consistent { seed: seed.wrapping_add(1) }
                } else {
                    Labels::Original
                };
                let ridge: f64 = ps.parse("ridge")?;
                build_constrained_regression(&data, ps.parse("constraints")?, ridge, labels)
                    .map_err(|e| Error::Config(format!("param.constraints: {e}")))
            }
            "svm" => build_svm(&dataset(&ps, seed)?, ps.parse("lambda")?),
            "fused_lasso" => {
                let data = gaussian_dataset(ps.positive("rows")?, ps.positive("dim")?, 0.1, seed)?;
                let form = match ps.raw("form") {
                    "penalty" => FusedForm::Penalty,
                    "constraint" => FusedForm::Constraint { epsilon: ps.parse("epsilon")? },
                    other => return Err(Error::Config(format!("param.form: expected penalty | constraint, got '{other}'"))),
                };
                build_fused_lasso(&data, ps.parse("lambda1")?, ps.parse("lambda2")?, form)
            }
            "group_lasso" => {
                let dim = ps.positive("dim")?;
                let size = ps.positive("group_size")?;
                let data = gaussian_dataset(ps.positive("rows")?, dim, 0.1, seed)?;
                let groups: Vec<Vec<usize>> =
                    (0..dim).step_by(size).map(|s| (s..(s + size).min(dim)).collect()).collect();
                build_group_lasso(&data, &groups, ps.parse("weight")?)
            }
            "dantzig" => {
                let (rows, dim) = (ps.positive("rows")?, ps.positive("dim")?);
                let mut rng = rng_from_seed(seed);
                let a = gaussian_matrix(&mut rng, rows, dim, 1.0 / (rows as f64).sqrt());
                let b = gaussian_vector(&mut rng, rows, 1.0);
                build_dantzig(&a, &b, ps.parse("lambda")?)
            }
            "consensus" => {
                let nodes = ps.positive("nodes")?;
                let k = ps.positive("block_dim")?;
                if nodes < 2 {
                    return Err(Error::Config("param.nodes: need at least 2".into()));
                }
                let mut rng = rng_from_seed(seed);
                let fns: Vec<SmoothComponent> = (0..nodes)
                    .map(|_| {
                        let g = gaussian_matrix(&mut rng, k, k, 1.0 / (k as f64).sqrt());
                        let hessian = &g * g.transpose() + Matrix::identity(k, k) * 0.1;
                        let center = gaussian_vector(&mut rng, k, 1.0);
                        SmoothComponent::Quadratic { hessian: (&hessian + hessian.transpose()) * 0.5, center }
                    })
                    .collect();
                build_consensus_constraints(&fns, k, &path_incidence(nodes, ps.parse("ring")?))
            }
            _ => unreachable!("validated builder"),
        }
    }

    /// Build and compare against any recorded dimension, `m` and fingerprint.
    pub fn build_verified(&self) -> Result<Problem> {
        let problem = self.build()?;
        if let Some(d) = self.expected_dim {
            if d != problem.dim() {
                return Err(Error::Config(format!("dim: file says {d}, builder produced {}", problem.dim())));
            }
        }
        if let Some(m) = self.expected_m {
            if m != problem.m() {
                return Err(Error::Config(format!("m: file says {m}, builder produced {}", problem.m())));
            }
        }
        if let Some(fp) = &self.fingerprint {
            let got = problem.fingerprint();
            if *fp != got {
                return Err(Error::Config(format!("fingerprint: file says {fp}, builder produced {got}")));
            }
        }
        Ok(problem)
    }

    /// Serialized form with every parameter spelled out plus `dim`, `m` and `fingerprint` of `problem`.
    pub fn to_text(&self, problem: &Problem) -> Result<String> {
        let specs = self.validate()?;
        let mut out = String::new();
        out.push_str(&format!("builder = {}\nseed = {}\n", self.builder, self.seed));
        for s in specs {
            let v = self.params.get(s.name).map(String::as_str).unwrap_or(s.default);
            out.push_str(&format!("param.{} = {}\n", s.name, v));
        }
        out.push_str(&format!("dim = {}\nm = {}\nfingerprint = {}\n", problem.dim(), problem.m(), problem.fingerprint()));
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<(ProblemDescription, Problem)> {
        let text = fs::read_to_string(path).map_err(|e| Error::arg(format!("cannot read {}: {e}", path.display())))?;
        let desc = Self::parse(&text)?;
        let problem = desc.build_verified()?;
        Ok((desc, problem))
    }
}

fn dataset(ps: &Params<'_>, seed: u64) -> Result<Dataset> {
    let rows = ps.positive("rows")?;
    let path = ps.raw("path");
    let kind = ps.raw("dataset");
    if !path.is_empty() {
        let dim = if kind == "a9a" { Some(A9A_DIM) } else { None };
        let data = load_libsvm(Path::new(path), dim).map_err(|e| Error::Config(format!("param.path: {e}")))?;
        if data.len() < rows {
            return Err(Error::Config(format!("param.rows: file has only {} rows", data.len())));
        }
        return Ok(data.head(rows));
    }
    match kind {
        "a9a" => a9a_standin(rows, seed),
        "gisette" => gisette_standin(rows, ps.positive("dim")?, seed),
        "gaussian" => gaussian_dataset(rows, ps.positive("dim")?, ps.parse("noise")?, seed),
        other => Err(Error::Config(format!("param.dataset: expected a9a | gisette | gaussian, got '{other}'"))),
    }
}

pub fn describe_pd_system(d: usize, seed: u64) -> ProblemDescription {
    ProblemDescription::new("pd_system", seed).with_param("d", d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_fingerprint() {
        for (name, _) in BUILDERS {
            let desc = ProblemDescription::new(name, 3);
            let problem = desc.build().unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = desc.to_text(&problem).unwrap();
            let back = ProblemDescription::parse(&text).unwrap();
            let again = back.build_verified().unwrap();
            assert_eq!(again.fingerprint(), problem.fingerprint(), "{name}");
        }
    }

    #[test]
    fn unknown_parameter_is_named() {
        let desc = ProblemDescription::new("pd_system", 1).with_param("size", 5);
        match desc.build() {
            Err(Error::Config(msg)) => assert!(msg.contains("param.size"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let desc = ProblemDescription::new("pd_system", 1).with_param("d", "ten");
        match desc.build() {
            Err(Error::Config(msg)) => assert!(msg.contains("param.d"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ProblemDescription::new("nope", 1).build().is_err());
    }

    #[test]
    fn tampered_fingerprint_rejected() {
        let desc = describe_pd_system(4, 1);
        let p = desc.build().unwrap();
        let text = desc.to_text(&p).unwrap().replace("seed = 1", "seed = 2");
        assert!(ProblemDescription::parse(&text).unwrap().build_verified().is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(ProblemDescription::parse("seed = 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(ProblemDescription::parse("builder = x\nfoo = 1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
