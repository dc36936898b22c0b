//! One PASS/FAIL line per acceptance criterion, run at the default suite sizes.

use std::time::Instant;

use randpur::suites::{run_suite, ExperimentRecord, Suite, SuiteConfig};

const SEED: u64 = 1;

struct Outcome {
    lines: Vec<String>,
    failed: usize,
}

impl Outcome {
    fn report(&mut self, id: usize, title: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let line = format!("{tag} criterion {id:>2}: {title} ({detail})");
        println!("{line}");
        self.lines.push(line);
        if !pass {
            self.failed += 1;
        }
    }
}

fn run(suite: Suite, cfg: &SuiteConfig) -> (Vec<ExperimentRecord>, f64) {
    let start = Instant::now();
    let records = run_suite(suite, cfg).unwrap_or_else(|e| panic!("{suite} failed to run: {e}"));
    (records, start.elapsed().as_secs_f64())
}

/// All selected checks pass; the detail lists failures or counts checks.
fn judge<'a>(records: impl IntoIterator<Item = &'a ExperimentRecord>, quantities: &[&str]) -> (bool, String) {
    let mut count = 0;
    let mut failures = vec![];
    for r in records {
        for c in r.checks.iter().filter(|c| quantities.is_empty() || quantities.contains(&c.quantity.as_str())) {
            count += 1;
            if !c.pass {
                failures.push(format!("{}:{} = {:.3e} vs {:.3e}±{:.1e}", r.case, c.quantity, c.value, c.target, c.tolerance));
            }
        }
    }
    if count == 0 {
        return (false, "no checks selected".into());
    }
    if failures.is_empty() {
        (true, format!("{count} checks"))
    } else {
        (false, failures.join("; "))
    }
}

fn cases<'a>(records: &'a [ExperimentRecord], prefix: &'a str) -> impl Iterator<Item = &'a ExperimentRecord> + 'a {
    records.iter().filter(move |r| r.case.starts_with(prefix))
}

fn strip(records: Vec<ExperimentRecord>) -> Vec<String> {
    records.into_iter().map(|r| r.without_timing().to_json_line()).collect()
}

#[test]
fn acceptance_criteria() {
    let cfg = SuiteConfig::with_seed(SEED);
    let mut out = Outcome { lines: vec![], failed: 0 };

    let (algebra, secs) = run(Suite::Algebra, &cfg);
    let (ok, detail) = judge(&algebra, &[]);
    out.report(1, "Wedderburn fixtures", ok && secs < 60.0, format!("{detail}, {secs:.1}s"));

    let (purify, _) = run(Suite::Purify, &cfg);
    let (ok, detail) = judge(&purify, &["symmetric_action_td", "haar_twirl_td"]);
    out.report(2, "symmetric action and Haar twirl", ok, detail);
    let (ok, detail) = judge(&purify, &["pinch_form_td", "sqrt_form_td", "sqrt_omega_identity"]);
    out.report(3, "explicit closed forms", ok, detail);

    let (fermion, _) = run(Suite::Fermion, &cfg);
    let (ok, detail) = judge(cases(&fermion, "gaussian-purification"), &[]);
    out.report(4, "fermionic purification Gaussianity", ok, detail);
    let channel_secs: f64 = cases(&fermion, "channel").map(|r| r.wall_time_s).sum();
    let (ok, detail) = judge(cases(&fermion, "channel"), &[]);
    out.report(5, "fermion channel", ok && channel_secs < 600.0, format!("{detail}, {channel_secs:.1}s"));

    let (tomo, _) = run(Suite::Tomo, &cfg);
    let (ok, detail) = judge(cases(&tomo, "dimension"), &[]);
    out.report(6, "dimension formula", ok, detail);
    let (ok, detail) = judge(cases(&tomo, "overlap"), &[]);
    out.report(7, "overlap identity and Markov bound", ok, detail);

    let (lower, _) = run(Suite::LowerBound, &cfg);
    let (ok, detail) = judge(&lower, &[]);
    let minimal = lower.iter().find_map(|r| r.details.get("minimal_n").cloned()).unwrap_or_default();
    out.report(8, "mixed tomography sweep", ok, format!("{detail}, minimal n {minimal}"));

    let (test, _) = run(Suite::Test, &cfg);
    let (ok, detail) = judge(&test, &[]);
    out.report(9, "Gaussianity testing", ok, detail);

    let (ok, detail) = judge(cases(&tomo, "moment"), &[]);
    out.report(10, "moment fidelity chain", ok, detail);

    let (boson, _) = run(Suite::Boson, &cfg);
    let (ok, detail) = judge(&boson, &[]);
    out.report(11, "truncated boson channel", ok, detail);

    // Reruns of the heavy suites use reduced sizes, run on a different thread count.
    let reduced = SuiteConfig { trials: Some(4), samples: Some(500), ..SuiteConfig::with_seed(SEED) };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let mut mismatched = vec![];
    for suite in Suite::ALL {
        let (first, cfg) = match suite {
            Suite::Algebra => (algebra.clone(), &cfg),
            Suite::Tomo => (tomo.clone(), &cfg),
            Suite::LowerBound => (lower.clone(), &cfg),
            Suite::Test => (test.clone(), &cfg),
            _ => (run(suite, &reduced).0, &reduced),
        };
        let again = pool.install(|| run(suite, cfg).0);
        if strip(first) != strip(again) {
            mismatched.push(suite.name());
        }
    }
    let detail = if mismatched.is_empty() { "7 suites".to_string() } else { format!("differs: {}", mismatched.join(", ")) };
    out.report(12, "bitwise reproducibility", mismatched.is_empty(), detail);

    assert_eq!(out.failed, 0, "failed criteria:\n{}", out.lines.join("\n"));
}
