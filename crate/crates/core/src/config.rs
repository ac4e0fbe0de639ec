//! TOML run configuration.
//!
//! ```toml
//! schema = 1
//!
//! [run]
//! t_grid = [0.0, 1.0, 10.0, 1e3, 1e6]
//! seed = 7
//!
//! [feasibility]
//! dims = [1, 3]
//! l = 3
//! constraints = [["1", "1"]]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::coho1::{BlockSpec, DiagonalMetricFamily};
use crate::error::{CheegerError, Result};
use crate::feasibility::{parse_rational, FeasibilityInstance, Rational};
use crate::group::Summand;
use crate::warped::ProfileKind;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<u32>,
    pub group: Option<GroupSection>,
    pub warped: Option<WarpedSection>,
    pub feasibility: Option<FeasibilitySection>,
    pub coho1: Option<Coho1Section>,
    #[serde(default)]
    pub run: RunSection,
}

/// A block representation of so(m): `blocks[i]` lists the summands of H_i.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub m: usize,
    pub blocks: Vec<Vec<Summand>>,
    pub axis_block: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedSection {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Overrides the solver-derived λ's in `verify-curvature`.
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    #[serde(default = "default_profiles")]
    pub profiles: Vec<ProfileKind>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_scan_t")]
    pub scan_t: usize,
    #[serde(default = "default_scan_theta")]
    pub scan_theta: usize,
    #[serde(default = "default_quotient_points")]
    pub quotient_points: usize,
}

impl Default for WarpedSection {
    fn default() -> Self {
        WarpedSection {
            n: default_n(),
            lambda1: None,
            lambda2: None,
            profiles: default_profiles(),
            points: default_points(),
            scan_t: default_scan_t(),
            scan_theta: default_scan_theta(),
            quotient_points: default_quotient_points(),
        }
    }
}

fn default_n() -> usize {
    5
}
fn default_profiles() -> Vec<ProfileKind> {
    vec![ProfileKind::Exp, ProfileKind::Sinh]
}
fn default_points() -> usize {
    20
}
fn default_scan_t() -> usize {
    10
}
fn default_scan_theta() -> usize {
    6
}
fn default_quotient_points() -> usize {
    4
}

/// A rational entry: an integer, a float read through its decimal
/// expansion, or a string such as `"3/4"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RationalValue {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            RationalValue::Int(i) => Ok(Rational::from_integer((*i).into())),
            RationalValue::Float(x) if x.is_finite() => parse_rational(&x.to_string()),
            RationalValue::Float(x) => Err(CheegerError::Input(format!("{x} is not a finite number"))),
            RationalValue::Text(s) => parse_rational(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    pub dims: Vec<u64>,
    pub l: u64,
    pub constraints: Vec<Vec<RationalValue>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coho1Section {
    #[serde(rename = "R")]
    pub r: f64,
    pub c_min: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    pub blocks: Vec<BlockSpec>,
}

fn default_grid() -> usize {
    201
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_grid: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn config_error(section: &str, field: &str, message: impl Into<String>) -> CheegerError {
    CheegerError::Config {
        section: section.into(),
        field: field.into(),
        message: message.into(),
    }
}

/// Section and field of a parse error, read off the source around its span.
fn locate(text: &str, span: Option<std::ops::Range<usize>>, message: &str) -> (String, String) {
    let Some(span) = span else {
        return ("top level".into(), "?".into());
    };
    let before = &text[..span.start.min(text.len())];
    let section = before
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').split('.').next().unwrap_or("").trim().to_string())
        .unwrap_or_else(|| "top level".into());
    let field = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| text[span].split('=').next().unwrap_or("?").trim().to_string());
    (section, field)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (section, field) = locate(text, e.span(), e.message());
            config_error(&section, &field, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match self.schema {
            Some(SCHEMA) => {}
            Some(v) => return Err(config_error("top level", "schema", format!("unsupported schema {v}, expected {SCHEMA}"))),
            None => return Err(config_error("top level", "schema", format!("missing; set schema = {SCHEMA}"))),
        }
        if let Some(grid) = &self.run.t_grid {
            validate_t_grid(grid).map_err(|m| config_error("run", "t_grid", m))?;
        }
        if let Some(tol) = self.run.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(config_error("run", "tol", format!("must be positive, got {tol}")));
            }
        }
        if let Some(w) = &self.warped {
            if w.n < 5 {
                return Err(config_error("warped", "n", format!("must be at least 5, got {}", w.n)));
            }
            if w.scan_t * w.scan_theta < 50 {
                return Err(config_error("warped", "scan_t", "scan_t * scan_theta must be at least 50"));
            }
            if w.points == 0 || w.quotient_points == 0 {
                return Err(config_error("warped", "points", "must be positive"));
            }
        }
        if let Some(g) = &self.group {
            if g.m < 2 || g.blocks.is_empty() {
                return Err(config_error("group", "blocks", "need m >= 2 and at least one block"));
            }
        }
        Ok(())
    }

    pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| config_error(name, "*", "section is required by this subcommand"))
    }
}

pub fn validate_t_grid(grid: &[f64]) -> std::result::Result<(), String> {
    if grid.is_empty() {
        return Err("must not be empty".into());
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err("entries must be finite and nonnegative".into());
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("must be strictly increasing".into());
    }
    Ok(())
}

impl FeasibilitySection {
    pub fn instance(&self) -> Result<FeasibilityInstance> {
        let constraints = self
            .constraints
            .iter()
            .map(|row| row.iter().map(RationalValue::to_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| config_error("feasibility", "constraints", e.to_string()))?;
        FeasibilityInstance::new(self.dims.clone(), self.l, constraints)
            .map_err(|e| config_error("feasibility", "constraints", e.to_string()))
    }
}

impl Coho1Section {
    pub fn family(&self) -> Result<DiagonalMetricFamily> {
        DiagonalMetricFamily::new(self.r, self.blocks.clone()).map_err(|e| config_error("coho1", "blocks", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{int, rat};

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::parse(
            r#"
schema = 1

[group]
m = 3
blocks = [["trivial"], ["trivial"], ["standard"]]
axis_block = 0

[warped]
n = 6

[feasibility]
dims = [1, 3]
l = 3
constraints = [[1, "1"], [0.5, "3/2"]]

[coho1]
R = 3.141592653589793
c_min = 2.0
[[coho1.blocks]]
n = 1
boundary = "both"
profile = { kind = "sin", rate = 1.0 }

[run]
t_grid = [0.0, 1.0, 10.0]
seed = 3
tol = 1e-8
"#,
        )
        .unwrap();
        let inst = cfg.feasibility.unwrap().instance().unwrap();
        assert_eq!(inst.constraints()[1], vec![rat(1, 2), rat(3, 2)]);
        assert_eq!(inst.constraints()[0], vec![int(1), int(1)]);
        assert_eq!(cfg.group.unwrap().blocks[2], vec![Summand::Standard]);
        assert!(cfg.coho1.unwrap().family().is_ok());
        assert_eq!(cfg.warped.unwrap().points, 20);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::parse("schema = 1\n[run]\nseeed = 3\n").unwrap_err();
        match err {
            CheegerError::Config { section, field, .. } => {
                assert_eq!(section, "run");
                assert_eq!(field, "seeed");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn schema_is_required() {
        assert!(matches!(RunConfig::parse(""), Err(CheegerError::Config { field, .. }) if field == "schema"));
        assert!(RunConfig::parse("schema = 2").is_err());
    }

    #[test]
    fn t_grid_must_increase() {
        assert!(RunConfig::parse("schema = 1\n[run]\nt_grid = [0.0, 2.0, 1.0]").is_err());
        assert!(RunConfig::parse("schema = 1\n[run]\nt_grid = [-1.0]").is_err());
        assert!(RunConfig::parse("schema = 1\n[run]\nt_grid = [0.0, 1.0]").is_ok());
    }

    #[test]
    fn float_rationals_are_read_in_decimal() {
        assert_eq!(RationalValue::Float(0.1).to_rational().unwrap(), rat(1, 10));
    }
}
