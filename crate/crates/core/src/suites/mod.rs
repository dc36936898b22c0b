//! Verification suites. Each suite runs a fixed family of checks and returns
//! one [`ExperimentRecord`] per case.

mod cases;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::Fixture;
use crate::boson::{FockSectorSpace, SECTOR_BUDGET};
use crate::error::{Error, Result};
use crate::fermion::FERMION_BUDGET;
use crate::linalg::RngStream;
use crate::tomography::SamplerMethod;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever record fields change meaning.
pub const RECORD_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Algebra,
    Purify,
    Fermion,
    Tomo,
    Test,
    LowerBound,
    Boson,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Algebra, Suite::Purify, Suite::Fermion, Suite::Tomo, Suite::Test, Suite::LowerBound, Suite::Boson];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Purify => "purify",
            Suite::Fermion => "fermion",
            Suite::Tomo => "tomo",
            Suite::Test => "test",
            Suite::LowerBound => "lower-bound",
            Suite::Boson => "boson",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite '{s}'")))
    }
}

/// How a check compares its value with its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − target| ≤ tolerance`
    Close,
    /// `value ≤ target + tolerance`
    AtMost,
    /// `value ≥ target − tolerance`
    AtLeast,
}

/// Where a target value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// An identity that holds exactly; the tolerance absorbs rounding.
    Identity,
    /// A closed-form value.
    ClosedForm,
    /// An independent computation (brute force or Monte Carlo).
    Oracle,
    /// A sanity range with no theoretical weight.
    Envelope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub source: Source,
    pub pass: bool,
}

impl Check {
    pub fn new(quantity: &str, value: f64, target: f64, tolerance: f64, relation: Relation, source: Source) -> Self {
        let pass = match relation {
            Relation::Close => (value - target).abs() <= tolerance,
            Relation::AtMost => value <= target + tolerance,
            Relation::AtLeast => value >= target - tolerance,
        };
        Self { quantity: quantity.to_string(), value, stderr: None, target, tolerance, relation, source, pass }
    }

    /// `|value − target| ≤ k·stderr`.
    pub fn within_stderr(quantity: &str, value: f64, stderr: f64, target: f64, k: f64, source: Source) -> Self {
        let mut c = Check::new(quantity, value, target, k * stderr + 1e-12, Relation::Close, source);
        c.stderr = Some(stderr);
        c
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub suite: Suite,
    pub case: String,
    pub parameters: BTreeMap<String, Value>,
    pub estimates: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub details: Value,
    pub pass: bool,
    pub seed: u64,
    pub wall_time_s: f64,
    pub version: String,
    pub record_format: u32,
}

impl ExperimentRecord {
    fn new(suite: Suite, case: impl Into<String>, seed: u64) -> Self {
        Self {
            suite,
            case: case.into(),
            parameters: BTreeMap::new(),
            estimates: BTreeMap::new(),
            checks: vec![],
            details: Value::Null,
            pass: true,
            seed,
            wall_time_s: 0.0,
            version: VERSION.to_string(),
            record_format: RECORD_FORMAT,
        }
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        self
    }

    fn estimate(&mut self, key: &str, value: f64) {
        self.estimates.insert(key.to_string(), value);
    }

    fn check(&mut self, c: Check) {
        self.estimates.insert(c.quantity.clone(), c.value);
        if let Some(se) = c.stderr {
            self.estimates.insert(format!("{}_stderr", c.quantity), se);
        }
        self.pass &= c.pass;
        self.checks.push(c);
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    /// The record with its wall-time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_s: 0.0, ..self.clone() }
    }
}

/// One CSV row per check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub suite: String,
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub source: Source,
    pub pass: bool,
}

/// Summary rows sorted by suite, case and quantity.
pub fn summary_rows(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = records
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(move |c| SummaryRow {
                suite: r.suite.name().to_string(),
                case: r.case.clone(),
                quantity: c.quantity.clone(),
                value: c.value,
                stderr: c.stderr,
                target: c.target,
                tolerance: c.tolerance,
                relation: c.relation,
                source: c.source,
                pass: c.pass,
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.suite, &a.case, &a.quantity).cmp(&(&b.suite, &b.case, &b.quantity)));
    rows
}

/// Suite parameters. Unset fields take per-suite defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: Option<usize>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub m: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub fixtures: Option<Vec<String>>,
    pub betas: Option<Vec<f64>>,
    pub cutoff: Option<usize>,
    pub max_n: Option<usize>,
    pub sampler: Option<SamplerMethod>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn parse_fixture(name: &str) -> Result<Vec<Fixture>> {
    if name == "all" {
        return Ok(Fixture::standard());
    }
    Fixture::standard()
        .into_iter()
        .find(|f| f.name() == name)
        .map(|f| vec![f])
        .ok_or_else(|| invalid(format!("unknown fixture '{name}'")))
}

impl SuiteConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }

    pub(crate) fn fixture_list(&self) -> Result<Vec<Fixture>> {
        let mut out = vec![];
        for name in self.fixtures.clone().unwrap_or_else(|| vec!["all".into()]) {
            for f in parse_fixture(&name)? {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn ms(&self, default: &[usize]) -> Vec<usize> {
        self.m.clone().unwrap_or_else(|| default.to_vec())
    }

    pub(crate) fn ns(&self, default: &[usize]) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    pub(crate) fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub(crate) fn boson_betas(&self, m: usize) -> Vec<f64> {
        self.betas.clone().unwrap_or_else(|| (0..m).map(|j| 2.5 + 0.5 * j as f64).collect())
    }

    /// Checks every parameter the suite will use; nothing runs before this passes.
    pub fn validate(&self, suite: Suite) -> Result<()> {
        if self.trials == Some(0) {
            return Err(invalid("trials must be positive"));
        }
        if let Some(s) = self.samples {
            if s < 40 {
                return Err(invalid("samples must be at least 40"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("tol must be a positive number"));
            }
        }
        for list in [&self.m, &self.n, &self.k].into_iter().flatten() {
            if list.is_empty() {
                return Err(invalid("parameter lists must be non-empty"));
            }
        }
        if self.m.iter().flatten().any(|&m| m == 0) {
            return Err(invalid("m must be positive"));
        }
        self.fixture_list()?;
        match suite {
            Suite::Algebra | Suite::Purify => {}
            Suite::Fermion => {
                if let Some(&m) = self.ms(&[1, 2, 3, 4]).iter().find(|&&m| m > 6) {
                    return Err(Error::BudgetExceeded(format!("m = {m} exceeds 6 for dense purification checks")));
                }
                for m in self.ms(&[2]) {
                    for n in self.ns(&[1, 2]) {
                        if n == 0 {
                            return Err(invalid("n must be positive"));
                        }
                        if m * n > FERMION_BUDGET {
                            return Err(Error::BudgetExceeded(format!("m·n = {} exceeds {FERMION_BUDGET}", m * n)));
                        }
                    }
                }
            }
            Suite::Tomo => {
                if let Some(&m) = self.ms(&[]).iter().find(|&&m| m > 8) {
                    return Err(Error::BudgetExceeded(format!("m = {m} exceeds 8 for state-vector tomography")));
                }
                if self.k.iter().flatten().any(|&k| k == 0) {
                    return Err(invalid("k must be positive"));
                }
            }
            Suite::Test => {
                let eps = self.eps.unwrap_or(0.3);
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
                }
                if let Some(&m) = self.ms(&[2]).iter().find(|&&m| m > 6) {
                    return Err(Error::BudgetExceeded(format!("m = {m} exceeds 6 for the testing suite")));
                }
            }
            Suite::LowerBound => {
                let eps = self.eps.unwrap_or(0.2);
                if !(eps > 0.0 && eps < 0.25) {
                    return Err(invalid(format!("eps must lie in (0, 1/4), got {eps}")));
                }
                if self.max_n == Some(0) {
                    return Err(invalid("max_n must be positive"));
                }
            }
            Suite::Boson => {
                let m = self.ms(&[2])[0];
                let n = self.ns(&[2])[0];
                let k = self.cutoff.unwrap_or(3);
                if n == 0 {
                    return Err(invalid("n must be positive"));
                }
                let betas = self.boson_betas(m);
                if betas.len() != m || betas.iter().any(|&b| !b.is_finite() || b <= 0.0) {
                    return Err(invalid(format!("need {m} positive betas, got {betas:?}")));
                }
                let dim = FockSectorSpace::expected_dim(n * m, k);
                if dim > SECTOR_BUDGET {
                    return Err(Error::BudgetExceeded(format!("sector k={k} has dimension {dim} (limit {SECTOR_BUDGET})")));
                }
            }
        }
        Ok(())
    }
}

/// Seed for case `case` of a suite run with master seed `seed`.
pub(crate) fn case_seed(seed: u64, suite: Suite, case: u64) -> u64 {
    RngStream::new(seed, suite as u64).child(case).child(0).master_seed
}

/// Validates `cfg` and runs `suite`.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate(suite)?;
    match suite {
        Suite::Algebra => cases::algebra(cfg),
        Suite::Purify => cases::purify(cfg),
        Suite::Fermion => cases::fermion(cfg),
        Suite::Tomo => cases::tomo(cfg),
        Suite::Test => cases::testing(cfg),
        Suite::LowerBound => cases::lower_bound(cfg),
        Suite::Boson => cases::boson(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn check_relations() {
        assert!(Check::new("a", 1.0, 1.05, 0.1, Relation::Close, Source::Oracle).pass);
        assert!(!Check::new("a", 1.2, 1.0, 0.1, Relation::AtMost, Source::Oracle).pass);
        assert!(Check::new("a", 0.95, 1.0, 0.1, Relation::AtLeast, Source::Oracle).pass);
        assert!(!Check::within_stderr("a", 1.0, 0.01, 1.1, 3.0, Source::Oracle).pass);
    }

    #[test]
    fn config_validation() {
        let cfg = SuiteConfig { m: Some(vec![3]), n: Some(vec![2]), ..Default::default() };
        assert!(matches!(cfg.validate(Suite::Fermion), Err(Error::BudgetExceeded(_))));
        let cfg = SuiteConfig { eps: Some(0.3), ..Default::default() };
        assert!(matches!(cfg.validate(Suite::LowerBound), Err(Error::InvalidArgument(_))));
        let cfg = SuiteConfig { fixtures: Some(vec!["bogus".into()]), ..Default::default() };
        assert!(cfg.validate(Suite::Algebra).is_err());
        let cfg = SuiteConfig { cutoff: Some(5), ..Default::default() };
        assert!(matches!(cfg.validate(Suite::Boson), Err(Error::BudgetExceeded(_))));
        let parsed: std::result::Result<SuiteConfig, _> = serde_json::from_str(r#"{"seed": 3, "bogus": 1}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn lower_bound_suite_reports_closed_form() {
        let cfg = SuiteConfig { m: Some(vec![10]), eps: Some(0.05), ..Default::default() };
        let recs = run_suite(Suite::LowerBound, &cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].estimates["n_lower"], 425.0);
    }
}
