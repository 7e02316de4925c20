//! Acceptance checks, one PASS/FAIL line per criterion. Exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lprl_core::construction::{check_properties, ConstructionCache, ConstructionConfig};
use lprl_core::suite::{
    block_bound_suite, claim_suite, continuity_suite, dichotomy_suite, grid_suite, hierarchy_suite,
    pairing_suite, SuiteResult,
};
use lprl_core::Result;

const SEED: u64 = 20_240_601;

/// Configurations for the block-depth-12 reduction sweeps.
const REDUCTION_CONFIGS: [(f64, f64); 2] = [(0.0, 2.0), (1.0, 3.0)];

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn from_suites(results: Vec<SuiteResult>, limit: Option<Duration>, elapsed: Duration) -> Outcome {
    let instances: u64 = results.iter().map(|r| r.instances).sum();
    let violations: Vec<String> = results
        .iter()
        .flat_map(|r| {
            r.violations
                .iter()
                .map(move |v| format!("{}: {v}", r.suite))
        })
        .collect();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let mut detail = format!(
        "{instances} checks, {} violations, {elapsed:.2?}",
        violations.len()
    );
    if let Some(l) = limit {
        detail.push_str(&format!(" (limit {l:?})"));
    }
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    Outcome {
        pass: violations.is_empty() && in_time && instances > 0,
        detail,
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Vec<SuiteResult>>) -> Outcome {
    let start = Instant::now();
    match f() {
        Ok(results) => from_suites(results, limit, start.elapsed()),
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn cache(a: f64, q: f64) -> Result<ConstructionCache> {
    Ok(ConstructionCache::new(ConstructionConfig::new(a, q)?))
}

fn per_config(
    f: impl Fn(&mut ConstructionCache) -> Result<SuiteResult>,
) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    for (a, q) in REDUCTION_CONFIGS {
        let mut c = cache(a, q)?;
        let mut r = f(&mut c)?;
        r.suite = format!("{} (a={a}, q={q})", r.suite);
        out.push(r);
    }
    Ok(out)
}

fn criterion_4() -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    for (a, q) in [(0.0, 2.0), (0.0, 0.5), (1.0, 3.0)] {
        let mut c = cache(a, q)?;
        c.populate(10)?;
        let rep = check_properties(&c, 10);
        let mut r = SuiteResult {
            suite: format!("construction (a={a}, q={q})"),
            ..SuiteResult::default()
        };
        if c.len() != 2047 {
            r.violations
                .push(format!("{} nodes instead of 2047", c.len()));
        }
        for p in &rep.properties {
            r.instances += p.instances;
            r.violations.extend(
                p.violations
                    .iter()
                    .map(|v| format!("property {}: {v}", p.id)),
            );
        }
        if rep.property(6).map(|p| p.instances) != Some(1023) {
            r.violations
                .push("property 6 was not checked on all 1023 one-extensions".into());
        }
        out.push(r);
    }
    Ok(out)
}

fn criterion_9() -> Outcome {
    let run = || -> std::io::Result<(Vec<u8>, bool)> {
        let dir = tempfile::tempdir()?;
        let status = Command::new(env!("CARGO_BIN_EXE_lprl"))
            .args([
                "build",
                "--a",
                "0",
                "--q",
                "2",
                "--max-len",
                "10",
                "--seed",
                "7",
                "--out",
            ])
            .arg(dir.path())
            .output()?;
        Ok((
            std::fs::read(dir.path().join("cache.txt"))?,
            status.status.success(),
        ))
    };
    match (run(), run()) {
        (Ok((x, okx)), Ok((y, oky))) => Outcome {
            pass: okx && oky && x == y && !x.is_empty(),
            detail: format!("{} and {} bytes, identical: {}", x.len(), y.len(), x == y),
        },
        (Err(e), _) | (_, Err(e)) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        (
            "pairing fidelity",
            Box::new(move || timed(Some(secs(1)), || Ok(vec![pairing_suite(1_000_000)]))),
        ),
        (
            "grid laws",
            Box::new(move || timed(Some(secs(10)), || Ok(vec![grid_suite(16)?]))),
        ),
        (
            "claim soundness",
            Box::new(move || {
                timed(Some(secs(30)), || {
                    Ok(vec![claim_suite(SEED, 100, 1_000_000)?])
                })
            }),
        ),
        (
            "construction properties",
            Box::new(|| timed(None, criterion_4)),
        ),
        (
            "block bound and unit ball",
            Box::new(|| timed(None, || per_config(|c| block_bound_suite(c, 12)))),
        ),
        (
            "dichotomy",
            Box::new(|| timed(None, || per_config(|c| dichotomy_suite(c, 3.0, 2, 12)))),
        ),
        (
            "continuity modulus",
            Box::new(|| timed(None, || per_config(|c| continuity_suite(c, SEED, 20, 12)))),
        ),
        (
            "double sequences and embeddings",
            Box::new(|| timed(None, || per_config(|c| hierarchy_suite(c, SEED, 1000, 8)))),
        ),
        ("determinism", Box::new(criterion_9)),
    ];

    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!(
            "criterion {} [{name}]: {} - {}",
            n + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
