//! Seeded randomized suites checking the structural claims, with JSON reports.

pub mod sampling;
pub mod suites;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::models::{Model, ModelError};
use crate::solve::SolveError;

/// Failures kept verbatim in a report; the rest are only counted.
pub const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Suite {
    Consistency,
    Octahedron,
    Closedness,
    Quad,
    Flip,
    Flower,
    Gamma,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Consistency,
        Suite::Octahedron,
        Suite::Closedness,
        Suite::Quad,
        Suite::Flip,
        Suite::Flower,
        Suite::Gamma,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Suite::Consistency => "consistency",
            Suite::Octahedron => "octahedron",
            Suite::Closedness => "closedness",
            Suite::Quad => "quad",
            Suite::Flip => "flip",
            Suite::Flower => "flower",
            Suite::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.key() == s)
            .ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

/// What the Lagrangian suites evaluate: the catalog form or a perturbed copy whose
/// `Lambda` gains `eps (y - x)^3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Subject {
    Catalog,
    Perturbed { eps: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub model: Model,
    /// Fixed parameters; sampled per trial when absent.
    pub alpha: Option<[f64; 3]>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; does not affect results.
    pub jobs: usize,
    pub subject: Subject,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    /// Flips per box in the flip suite.
    pub flips: usize,
    /// Edge length of the box in the flip suite.
    pub box_size: usize,
    pub gammas: Vec<f64>,
}

impl SuiteConfig {
    pub fn new(model: Model, trials: usize, seed: u64) -> Self {
        SuiteConfig {
            model,
            alpha: None,
            trials,
            seed,
            jobs: 1,
            subject: Subject::Catalog,
            tolerances: BTreeMap::new(),
            flips: 10,
            box_size: 3,
            gammas: vec![1e-2, 1e-3, 1e-4],
        }
    }

    fn params(&self, suite: Suite) -> BTreeMap<String, Value> {
        let mut p = BTreeMap::new();
        p.insert(
            "alpha".into(),
            match self.alpha {
                Some(a) => serde_json::json!(a),
                None => Value::from("sampled"),
            },
        );
        p.insert("gamma".into(), Value::from(self.model.gamma));
        p.insert("delta".into(), Value::from(self.model.delta));
        p.insert(
            "subject".into(),
            serde_json::to_value(self.subject).expect("plain enum"),
        );
        match suite {
            Suite::Flip => {
                p.insert("flips".into(), Value::from(self.flips));
                p.insert("box".into(), Value::from(self.box_size));
            }
            Suite::Gamma => {
                p.insert("gammas".into(), serde_json::json!(self.gammas));
            }
            _ => {}
        }
        p
    }
}

/// One measured quantity of a trial, checked as `value < tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
}

/// Outcome of a trial: its checks, the resamples it needed and data to reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub checks: Vec<Check>,
    pub resamples: usize,
    pub payload: Value,
}

impl TrialOutcome {
    pub fn sampling_failure(resamples: usize, reason: String) -> Self {
        TrialOutcome {
            checks: vec![Check {
                name: "sampling",
                value: f64::INFINITY,
            }],
            resamples,
            payload: serde_json::json!({ "reason": reason }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub trial: usize,
    pub check: String,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub resamples: usize,
    pub checks: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub model: String,
    pub params: BTreeMap<String, Value>,
    pub trials: usize,
    pub seed: u64,
    pub max_residuals: BTreeMap<String, Option<f64>>,
    pub tolerances: BTreeMap<String, f64>,
    pub failures: Vec<Failure>,
    pub failure_count: usize,
    pub resamples: usize,
    pub runtime_ms: u64,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    /// JSON with the wall time zeroed, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.runtime_ms = 0;
        serde_json::to_string(&r).expect("report serializes")
    }

    pub fn max(&self, check: &str) -> Option<f64> {
        self.max_residuals.get(check).copied().flatten()
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Run `trial` for every index on `jobs` threads and aggregate in trial order.
pub(crate) fn run_trials<F>(
    suite: Suite,
    cfg: &SuiteConfig,
    tolerances: BTreeMap<String, f64>,
    trial: F,
) -> Result<SuiteReport, VerifyError>
where
    F: Fn(usize) -> TrialOutcome + Sync,
{
    if cfg.trials == 0 {
        return Err(VerifyError::Config("trials must be at least 1".into()));
    }
    let mut tolerances = tolerances;
    for (k, v) in &cfg.tolerances {
        match tolerances.get_mut(k) {
            Some(t) => *t = *v,
            None => {
                return Err(VerifyError::Config(format!(
                    "suite `{suite}` has no check `{k}`"
                )))
            }
        }
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| VerifyError::Pool(e.to_string()))?;
    let outcomes: Vec<TrialOutcome> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(&trial).collect());

    let mut max_residuals: BTreeMap<String, Option<f64>> =
        tolerances.keys().map(|k| (k.clone(), None)).collect();
    let mut failures = Vec::new();
    let mut failure_count = 0;
    let mut resamples = 0;
    let mut rows = Vec::with_capacity(outcomes.len());
    for (t, out) in outcomes.into_iter().enumerate() {
        resamples += out.resamples;
        let mut row = TrialRow {
            trial: t,
            resamples: out.resamples,
            checks: BTreeMap::new(),
        };
        for c in &out.checks {
            let tol = tolerances.get(c.name).copied().unwrap_or(0.0);
            let slot = max_residuals.entry(c.name.to_string()).or_insert(None);
            let v = if c.value.is_nan() {
                f64::INFINITY
            } else {
                c.value
            };
            *slot = Some(slot.map_or(v, |m| m.max(v)));
            row.checks.insert(c.name.to_string(), finite(c.value));
            if !(c.value < tol) {
                failure_count += 1;
                if failures.len() < MAX_LISTED_FAILURES {
                    failures.push(Failure {
                        trial: t,
                        check: c.name.to_string(),
                        value: finite(c.value),
                        tolerance: tol,
                        data: out.payload.clone(),
                    });
                }
            }
        }
        rows.push(row);
    }
    for v in max_residuals.values_mut() {
        *v = v.and_then(finite);
    }
    Ok(SuiteReport {
        suite: suite.key().to_string(),
        model: cfg.model.id.to_string(),
        params: cfg.params(suite),
        trials: cfg.trials,
        seed: cfg.seed,
        max_residuals,
        tolerances,
        failures,
        failure_count,
        resamples,
        runtime_ms: start.elapsed().as_millis() as u64,
        rows,
    })
}

/// Run one suite.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    match suite {
        Suite::Consistency => suites::consistency(cfg),
        Suite::Octahedron => suites::octahedron_equivalence(cfg),
        Suite::Closedness => suites::closedness(cfg),
        Suite::Quad => suites::quad_layer(cfg),
        Suite::Flip => suites::flip_invariance(cfg),
        Suite::Flower => suites::flower(cfg),
        Suite::Gamma => suites::gamma_limit(cfg),
    }
}
