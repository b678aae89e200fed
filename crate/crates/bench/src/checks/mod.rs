//! Invariant suites: one report line per property.

use std::fmt;

use decoupling::{Error, Result};

pub mod estimators;
pub mod instances;
pub mod key_lemma;
pub mod prox;
pub mod rates;
pub mod reductions;

/// `name instances=N worst_slack=S pass=B`; a property passes when its worst slack is at least its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub instances: usize,
    pub worst_slack: f64,
    pub pass: bool,
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} instances={} worst_slack={:.6e} pass={}", self.name, self.instances, self.worst_slack, self.pass)
    }
}

/// Running minimum of slacks for one property.
#[derive(Debug, Clone)]
pub struct Tracker {
    name: String,
    threshold: f64,
    instances: usize,
    worst: f64,
}

impl Tracker {
    pub fn new(name: impl Into<String>, threshold: f64) -> Self {
        Tracker { name: name.into(), threshold, instances: 0, worst: f64::INFINITY }
    }

    pub fn observe(&mut self, slack: f64) {
        self.instances += 1;
        // NaN counts as a failure
        self.worst = if slack.is_nan() { f64::NEG_INFINITY } else { self.worst.min(slack) };
    }

    pub fn finish(self) -> PropertyReport {
        PropertyReport {
            pass: self.instances > 0 && self.worst >= self.threshold,
            name: self.name,
            instances: self.instances,
            worst_slack: self.worst,
        }
    }
}

pub const SUITES: [&str; 5] = ["prox", "estimators", "key_lemma", "reductions", "rates"];

pub fn run_suite(name: &str) -> Result<Vec<PropertyReport>> {
    match name {
        "prox" => prox::suite(),
        "estimators" => estimators::suite(),
        "key_lemma" => key_lemma::suite(),
        "reductions" => reductions::suite(),
        "rates" => rates::suite(),
        other => Err(Error::Config(format!("unknown suite '{other}' (expected {})", SUITES.join(", ")))),
    }
}
