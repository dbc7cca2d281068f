//! Config-driven verification suite.
//!
//! A TOML config lists checks grouped by the statement they exercise. Each
//! check builds a fixture measure, samples parameters λ from a projection
//! family, and compares Monte Carlo statistics against the corresponding
//! bound with an explicit `3σ` slack. "For almost every λ" is read as "for at
//! least `pass_fraction` of the sampled λ".
//!
//! Reports are deterministic functions of `(config, seed, version)`: λ tasks
//! are collected in index order and every reduction uses a fixed tree, so the
//! rendered JSON does not depend on the thread count.

mod anchors;
mod checks;
mod fixture;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fractal::DEFAULT_POINT_CAP;
use crate::projections::FamilyRegistry;

pub use anchors::{compare_anchors, extract_anchors, AnchorFile};
pub use checks::{
    verify_corollary1, verify_lemma1, verify_theorem1, verify_theorem2, verify_theorem3, verify_theorem4,
    verify_transversality,
};
pub use fixture::Fixture;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// What a check is expected to do. Negative controls expect `fail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
    Refused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Preconditions of the statement are not met; nothing was tested.
    Refused,
    /// Neither the statement nor its negation held for enough parameters.
    Inconclusive,
}

fn default_pass_fraction() -> f64 {
    0.9
}

fn default_cap() -> usize {
    DEFAULT_POINT_CAP
}

fn default_regularity_c() -> f64 {
    2.0
}

/// Fields shared by the λ-sampling checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckBase {
    pub id: String,
    pub fixture: Fixture,
    pub family: String,
    pub n_lambda: usize,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityCheck {
    pub id: String,
    /// Measure the sampled pairs are drawn from.
    pub fixture: Fixture,
    pub family: String,
    pub n_lambda: usize,
    pub n_pairs: usize,
    pub deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_override: Option<f64>,
    /// Constant of the bound `C δ^κ`; defaults to the family's declared C.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_c: Option<f64>,
    /// Exponent of the bound; defaults to the family's κ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_kappa: Option<f64>,
    #[serde(default)]
    pub expect: Expect,
}

/// Frostman regularization followed by the exhaustive certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanCheck {
    pub id: String,
    pub fixture: Fixture,
    /// Exponent; defaults to the fixture's known dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub m: f64,
    pub delta: f64,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Check {
    #[serde(flatten)]
    pub base: CheckBase,
    /// Box-counting window, decreasing.
    pub scales: Vec<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Check {
    #[serde(flatten)]
    pub base: CheckBase,
    /// Neighbourhood radius; the decay test also uses `epsilon / 3`.
    pub epsilon: f64,
    /// Minimum length of the ε-neighbourhood.
    pub min_length: f64,
    /// Minimum of `L(ε/3) / L(ε)`. A measure-zero self-similar set of
    /// dimension s decays like `3^{s−1}`.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Check {
    #[serde(flatten)]
    pub base: CheckBase,
    pub t_values: Vec<f64>,
    /// Truncation radius shared by both sides of the bound.
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Check {
    #[serde(flatten)]
    pub base: CheckBase,
    /// Radii standing in for `r → 0`, decreasing.
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Check {
    #[serde(flatten)]
    pub base: CheckBase,
    pub histogram_bin: f64,
    /// Lower density constant c of the reference measure; 2 for Lebesgue
    /// measure on ℝ with closed balls.
    #[serde(default = "default_regularity_c")]
    pub regularity_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
    #[serde(default = "default_cap")]
    pub max_points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transversality: Vec<TransversalityCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lemma1: Vec<FrostmanCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theorem1: Vec<Theorem1Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theorem2: Vec<Theorem2Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theorem3: Vec<Theorem3Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theorem4: Vec<Theorem4Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corollary1: Vec<Corollary1Check>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn check_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        ids.extend(self.transversality.iter().map(|c| c.id.as_str()));
        ids.extend(self.lemma1.iter().map(|c| c.id.as_str()));
        ids.extend(self.theorem1.iter().map(|c| c.base.id.as_str()));
        ids.extend(self.theorem2.iter().map(|c| c.base.id.as_str()));
        ids.extend(self.theorem3.iter().map(|c| c.base.id.as_str()));
        ids.extend(self.theorem4.iter().map(|c| c.base.id.as_str()));
        ids.extend(self.corollary1.iter().map(|c| c.base.id.as_str()));
        ids
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.pass_fraction > 0.0 && self.pass_fraction <= 1.0) {
            return Err(Error::Config("pass_fraction must lie in (0, 1]".into()));
        }
        let mut seen = BTreeSet::new();
        for id in self.check_ids() {
            if !seen.insert(id) {
                return Err(Error::Config(format!("duplicate check id {id:?}")));
            }
        }
        let bases = self
            .theorem1
            .iter()
            .map(|c| &c.base)
            .chain(self.theorem2.iter().map(|c| &c.base))
            .chain(self.theorem3.iter().map(|c| &c.base))
            .chain(self.theorem4.iter().map(|c| &c.base))
            .chain(self.corollary1.iter().map(|c| &c.base));
        for base in bases {
            if base.n_lambda == 0 {
                return Err(Error::Config(format!("{}: n_lambda must be positive", base.id)));
            }
        }
        Ok(())
    }
}

/// Everything a check needs besides its own config.
pub struct Context<'a> {
    pub seed: u64,
    pub pass_fraction: f64,
    pub cap: usize,
    pub registry: &'a FamilyRegistry,
}

/// A two-column plot series, written next to the report by the CLI.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub theorem: String,
    pub expect: Expect,
    pub status: Status,
    /// Whether the status is the expected one.
    pub outcome_ok: bool,
    pub inputs_digest: String,
    pub estimates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Signed distance to failure; negative values are violations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl CheckRecord {
    pub(crate) fn new(id: &str, theorem: &str, expect: Expect, digest: String) -> Self {
        CheckRecord {
            id: id.to_string(),
            theorem: theorem.to_string(),
            expect,
            status: Status::Refused,
            outcome_ok: false,
            inputs_digest: digest,
            estimates: BTreeMap::new(),
            bound: None,
            slack: None,
            margin: None,
            notes: Vec::new(),
            wall_time_ms: None,
            series: Vec::new(),
        }
    }

    /// Records a finite estimate; non-finite values become notes so the
    /// report stays valid JSON.
    pub(crate) fn estimate(&mut self, key: impl Into<String>, value: f64) {
        let key = key.into();
        if value.is_finite() {
            self.estimates.insert(key, value);
        } else {
            self.notes.push(format!("{key} is {value}"));
        }
    }

    pub(crate) fn finish(&mut self, status: Status) {
        self.status = status;
        self.outcome_ok = match self.expect {
            Expect::Pass => status == Status::Pass,
            Expect::Fail => status == Status::Fail,
            Expect::Refused => status == Status::Refused,
        };
        if !self.outcome_ok {
            self.notes.push(format!("expected {:?}, got {:?}", self.expect, status));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub ok: usize,
    pub controls: usize,
    pub unexpected: Vec<String>,
    pub all_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub pass_fraction: f64,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report parse error: {e}")))
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall time per check. Off by default so reports stay
    /// byte-identical between runs.
    pub timings: bool,
}

pub(crate) fn digest<T: Serialize>(seed: u64, value: &T) -> String {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(serde_json::to_vec(value).expect("config serializes"));
    hex::encode(hasher.finalize())
}

/// Runs every configured check in file order, grouped by kind.
pub fn run_suite(config: &ExperimentConfig, registry: &FamilyRegistry, options: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let ctx = Context {
        seed: config.seed,
        pass_fraction: config.pass_fraction,
        cap: config.max_points,
        registry,
    };
    let mut checks = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Result<CheckRecord>| -> Result<()> {
        let start = Instant::now();
        let mut record = f()?;
        if options.timings {
            record.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        checks.push(record);
        Ok(())
    };
    for c in &config.transversality {
        timed(&mut || verify_transversality(c, &ctx))?;
    }
    for c in &config.lemma1 {
        timed(&mut || verify_lemma1(c, &ctx))?;
    }
    for c in &config.theorem1 {
        timed(&mut || verify_theorem1(c, &ctx))?;
    }
    for c in &config.theorem2 {
        timed(&mut || verify_theorem2(c, &ctx))?;
    }
    for c in &config.theorem3 {
        timed(&mut || verify_theorem3(c, &ctx))?;
    }
    for c in &config.theorem4 {
        timed(&mut || verify_theorem4(c, &ctx))?;
    }
    for c in &config.corollary1 {
        timed(&mut || verify_corollary1(c, &ctx))?;
    }

    let unexpected: Vec<String> = checks.iter().filter(|c| !c.outcome_ok).map(|c| c.id.clone()).collect();
    let summary = Summary {
        total: checks.len(),
        ok: checks.len() - unexpected.len(),
        controls: checks.iter().filter(|c| c.expect != Expect::Pass).count(),
        all_ok: unexpected.is_empty(),
        unexpected,
    };
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        pass_fraction: config.pass_fraction,
        config: config.clone(),
        checks,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
schema_version = 1
seed = 5

[[theorem1]]
id = "t1"
fixture = { kind = "cantor", depth = 8 }
family = "planar"
n_lambda = 8
scales = [0.1111111111111111, 0.012345679012345678, 0.0013717421124828531]
tol = 0.1

[[theorem1]]
id = "t1"
fixture = { kind = "atom", dim = 2 }
family = "planar"
n_lambda = 4
scales = [0.1, 0.01, 0.001]
tol = 0.1
"#;

    #[test]
    fn duplicate_ids_rejected() {
        let err = ExperimentConfig::from_toml(SMALL).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = SMALL.replacen("id = \"t1\"", "id = \"t0\"", 1);
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.pass_fraction, 0.9);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn schema_version_checked() {
        let text = SMALL.replace("schema_version = 1", "schema_version = 7");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn report_round_trips_and_is_deterministic() {
        let text = SMALL.replacen("id = \"t1\"", "id = \"t0\"", 1);
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let reg = FamilyRegistry::default();
        let a = run_suite(&cfg, &reg, RunOptions::default()).unwrap();
        let b = run_suite(&cfg, &reg, RunOptions::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back = ExperimentReport::from_json(&a.to_json()).unwrap();
        assert_eq!(back.to_json(), a.to_json());
        assert_eq!(a.checks.len(), 2);
        assert!(a.summary.all_ok, "{:?}", a.summary);
    }
}
