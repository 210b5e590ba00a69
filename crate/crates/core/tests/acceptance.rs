//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use plurilag::models::Model;
use plurilag::verify::{run_suite, Subject, Suite, SuiteConfig, SuiteReport};

const SEED: u64 = 42;

fn config(key: &str, trials: usize) -> SuiteConfig {
    SuiteConfig::new(
        Model::from_key(key, &[]).expect("registry key"),
        trials,
        SEED,
    )
}

fn run(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport, String> {
    run_suite(suite, cfg).map_err(|e| format!("{suite} {}: {e}", cfg.model.id))
}

/// Run each configuration and require it to pass.
fn all_pass(suite: Suite, cfgs: &[SuiteConfig], notes: &mut Vec<String>) -> Result<bool, String> {
    let mut ok = true;
    for cfg in cfgs {
        let r = run(suite, cfg)?;
        let worst: Vec<String> = r
            .max_residuals
            .iter()
            .map(|(k, v)| format!("{k}={}", v.map_or("inf".into(), |v| format!("{v:.1e}"))))
            .collect();
        notes.push(format!("{}[{}]", r.model, worst.join(" ")));
        ok &= r.passed();
    }
    Ok(ok)
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    body: fn(&mut Vec<String>) -> Result<bool, String>,
}

fn consistency(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["q1d0", "exp", "exp-gamma"].map(|k| config(k, 1000));
    all_pass(Suite::Consistency, &cfgs, notes)
}

fn octahedron(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["q1d0", "exp", "exp-gamma"].map(|k| config(k, 1000));
    all_pass(Suite::Octahedron, &cfgs, notes)
}

fn closedness(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["q1d0", "exp"].map(|k| config(k, 500));
    let mut ok = all_pass(Suite::Closedness, &cfgs, notes)?;
    for key in ["q1d0", "exp"] {
        let mut c = config(key, 500);
        c.subject = Subject::Perturbed { eps: 1e-3 };
        let r = run(Suite::Closedness, &c)?;
        notes.push(format!("perturbed {key} failures={}", r.failure_count));
        ok &= !r.passed();
    }
    Ok(ok)
}

fn quad(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["q1d0", "q1d1", "q3d0", "h1", "h2", "h3"].map(|k| config(k, 1000));
    all_pass(Suite::Quad, &cfgs, notes)
}

fn flip(notes: &mut Vec<String>) -> Result<bool, String> {
    let mut q1 = config("q1d0", 20);
    q1.box_size = 3;
    q1.flips = 10;
    let mut perturbed = q1.clone();
    perturbed.subject = Subject::Perturbed { eps: 1e-3 };
    let mut zero = q1.clone();
    zero.model = Model::from_key("zero", &[]).expect("registry key");
    all_pass(Suite::Flip, &[q1, perturbed, zero], notes)
}

fn flower(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["q1d0", "exp", "exp-gamma", "zero"].map(|k| config(k, 1000));
    let ok = all_pass(Suite::Flower, &cfgs, notes)?;
    Ok(ok && notes.iter().any(|n| n.contains("toda=")))
}

fn gamma(notes: &mut Vec<String>) -> Result<bool, String> {
    let cfgs = ["exp", "exp-gamma"].map(|k| config(k, 1000));
    all_pass(Suite::Gamma, &cfgs, notes)
}

fn determinism(notes: &mut Vec<String>) -> Result<bool, String> {
    let cases = [
        (Suite::Consistency, "exp-gamma"),
        (Suite::Octahedron, "q1d0"),
        (Suite::Closedness, "exp"),
        (Suite::Quad, "h3"),
        (Suite::Flip, "q1d0"),
        (Suite::Flower, "exp"),
        (Suite::Gamma, "exp"),
    ];
    let mut ok = true;
    for (suite, key) in cases {
        let mut c = config(key, if suite == Suite::Flip { 5 } else { 60 });
        let a = run(suite, &c)?.canonical_json();
        let b = run(suite, &c)?.canonical_json();
        c.jobs = 4;
        let d = run(suite, &c)?.canonical_json();
        let same = a == b && a == d;
        if !same {
            notes.push(format!("{suite} {key} differs"));
        }
        ok &= same;
    }
    notes.push("7 suites x (repeat, 4 jobs)".into());
    Ok(ok)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "consistency of corner equations",
            budget: Duration::from_secs(10),
            body: consistency,
        },
        Criterion {
            name: "octahedron equivalence",
            budget: Duration::from_secs(10),
            body: octahedron,
        },
        Criterion {
            name: "closedness and negative control",
            budget: Duration::from_secs(30),
            body: closedness,
        },
        Criterion {
            name: "quad layer",
            budget: Duration::from_secs(10),
            body: quad,
        },
        Criterion {
            name: "flip invariance",
            budget: Duration::from_secs(5),
            body: flip,
        },
        Criterion {
            name: "flower decomposition and Toda form",
            budget: Duration::from_secs(5),
            body: flower,
        },
        Criterion {
            name: "deformation limit",
            budget: Duration::from_secs(5),
            body: gamma,
        },
        Criterion {
            name: "determinism",
            budget: Duration::from_secs(60),
            body: determinism,
        },
    ];
    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut notes = Vec::new();
        let outcome = (c.body)(&mut notes);
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(p) => (p && took <= c.budget, notes.join("; ")),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {}. {} ({:.2} s, budget {} s): {}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            c.name,
            took.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
