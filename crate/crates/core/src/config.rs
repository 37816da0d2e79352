//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "lattice": { "kind": "tree", "q": 31, "depth": 3 },
//!   "treeify": true,
//!   "faults": { "xi": 0.4, "model": "adversarial" },
//!   "plan": { "horizon": 3, "replicates": 10000 }
//! }
//! ```
//!
//! Parsing fills every default and validates the combination; [`ExperimentConfig::canonical_json`]
//! echoes the result, and parsing the echo reproduces it exactly.

use serde::{Deserialize, Serialize};

use crate::engine::{BoundaryPolicy, Observed, RuleSpec};
use crate::error::{Error, Result};
use crate::faults::{FaultModel, FaultSpec};
use crate::lattice::{self, Lattice, Tiling};
use crate::transition::{analyze_boolean, BooleanTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    Tree { q: u32, depth: u32 },
    Hyperbolic { p: u32, q: u32, shells: u32 },
    Euclidean { tiling: String, width: u32, height: u32 },
    Toom { width: u32, height: u32 },
    /// A lattice file in the text format.
    File { path: String },
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        match self {
            LatticeSpec::Tree { q, depth } => lattice::build_tree(*q, *depth),
            LatticeSpec::Hyperbolic { p, q, shells } => lattice::build_hyperbolic(*p, *q, *shells),
            LatticeSpec::Euclidean { tiling, width, height } => {
                let t = Tiling::from_name(tiling)
                    .ok_or_else(|| Error::config("lattice.tiling", format!("unknown tiling {tiling:?}")))?;
                lattice::build_euclidean_torus(t, *width, *height)
            }
            LatticeSpec::Toom { width, height } => lattice::build_toom(*width, *height),
            LatticeSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("lattice.path", format!("{path}: {e}")))?;
                Lattice::from_text(&text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    Majority,
    Threshold(u32),
    Table { arity: u32, hex: String },
}

impl RuleConfig {
    pub fn to_spec(&self) -> Result<RuleSpec> {
        Ok(match self {
            RuleConfig::Majority => RuleSpec::Majority,
            RuleConfig::Threshold(k) => RuleSpec::Threshold(*k),
            RuleConfig::Table { arity, hex } => RuleSpec::Table(
                BooleanTable::from_hex(*arity, hex).map_err(|e| Error::config("rule.table", e.to_string()))?,
            ),
        })
    }

    fn is_monotone(&self) -> Result<bool> {
        Ok(match self.to_spec()? {
            RuleSpec::Table(t) => analyze_boolean(&t).monotone,
            _ => true,
        })
    }
}

fn default_rule() -> RuleConfig {
    RuleConfig::Majority
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Adversarial,
    PureProbabilistic,
}

impl From<ModelName> for FaultModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Adversarial => FaultModel::Adversarial,
            ModelName::PureProbabilistic => FaultModel::PureProbabilistic,
        }
    }
}

fn default_model() -> ModelName {
    ModelName::Adversarial
}

/// Either `xi` (transient faults at `1/2 - xi`) or `alpha`/`beta`.
/// `epsilon` is derived; if given it must agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_model")]
    pub model: ModelName,
    #[serde(default)]
    pub remembered_bit: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservedConfig {
    Named(ObservedName),
    Cells(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedName {
    Root,
    NonBoundary,
}

impl ObservedConfig {
    pub fn to_observed(&self) -> Observed {
        match self {
            ObservedConfig::Named(ObservedName::Root) => Observed::Root,
            ObservedConfig::Named(ObservedName::NonBoundary) => Observed::NonBoundary,
            ObservedConfig::Cells(c) => Observed::Cells(c.clone()),
        }
    }
}

fn default_observed() -> ObservedConfig {
    ObservedConfig::Named(ObservedName::Root)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    ClampToError,
    ClampToA,
}

impl From<PolicyName> for BoundaryPolicy {
    fn from(p: PolicyName) -> Self {
        match p {
            PolicyName::ClampToError => BoundaryPolicy::ClampToError,
            PolicyName::ClampToA => BoundaryPolicy::ClampToA,
        }
    }
}

fn default_policy() -> PolicyName {
    PolicyName::ClampToError
}

fn default_replicates() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub horizon: u32,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_observed")]
    pub observed: ObservedConfig,
    #[serde(default = "default_policy")]
    pub boundary_policy: PolicyName,
    /// Simulate only the radius-`horizon` ball around the root.
    #[serde(default)]
    pub light_cone: bool,
}

fn default_dir() -> String {
    "out".into()
}

fn default_prefix() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: default_prefix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    #[serde(default = "default_rule")]
    pub rule: RuleConfig,
    #[serde(default)]
    pub treeify: bool,
    pub faults: FaultsConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Rounds to 15 significant digits so derived rates echo as written.
pub(crate) fn tidy(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn check_rate(path: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::config(path, format!("must lie in [0, 1], got {x}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "(root)".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&mut self) -> Result<()> {
        let f = &mut self.faults;
        if f.remembered_bit > 1 {
            return Err(Error::config("faults.remembered_bit", "must be 0 or 1"));
        }
        let eps = match f.xi {
            Some(xi) => {
                if f.alpha.is_some() || f.beta.is_some() {
                    return Err(Error::config("faults", "give either xi or alpha/beta, not both"));
                }
                if !(xi > 0.0 && xi <= 0.5) {
                    return Err(Error::config("faults.xi", format!("must lie in (0, 1/2], got {xi}")));
                }
                0.5 - xi
            }
            None => {
                let alpha = f.alpha.unwrap_or(0.0);
                let beta = f.beta.unwrap_or(0.0);
                check_rate("faults.alpha", alpha)?;
                check_rate("faults.beta", beta)?;
                f.alpha = Some(alpha);
                f.beta = Some(beta);
                1.0 - (1.0 - alpha) * (1.0 - beta)
            }
        };
        if let Some(given) = f.epsilon {
            if (given - eps).abs() > 1e-12 {
                return Err(Error::config(
                    "faults.epsilon",
                    format!("{given} disagrees with the derived combined rate {eps}"),
                ));
            }
        }
        f.epsilon = Some(tidy(eps));
        if eps >= 0.5 {
            return Err(Error::config(
                "faults",
                format!("combined fault rate {eps} is not below 1/2, so no bit can be remembered"),
            ));
        }
        if f.model == ModelName::PureProbabilistic && f.beta.unwrap_or(0.0) > 0.0 {
            return Err(Error::config(
                "faults.beta",
                "a manufacturing fault hands the cell to the adversary, so beta must be 0 under pure_probabilistic",
            ));
        }
        if f.model == ModelName::Adversarial && !self.rule.is_monotone()? {
            return Err(Error::config(
                "rule",
                "the greedy adversary is only optimal for monotone rules; this table is not monotone",
            ));
        }
        if self.treeify && self.rule != RuleConfig::Majority {
            return Err(Error::config("treeify", "tree reduction assumes majority rules"));
        }
        if self.plan.replicates == 0 {
            return Err(Error::config("plan.replicates", "must be at least 1"));
        }
        Ok(())
    }

    pub fn fault_spec(&self) -> Result<FaultSpec> {
        let f = &self.faults;
        let a = f.remembered_bit == 1;
        match f.xi {
            Some(xi) => FaultSpec::from_xi(xi, f.model.into(), a),
            None => FaultSpec::new(f.alpha.unwrap_or(0.0), f.beta.unwrap_or(0.0), f.model.into(), a),
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "lattice": {"kind": "tree", "q": 3, "depth": 2},
        "faults": {"alpha": 0.1},
        "plan": {"horizon": 2}
    }"#;

    #[test]
    fn defaults_are_filled() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.rule, RuleConfig::Majority);
        assert_eq!(c.seed, 0);
        assert_eq!(c.plan.replicates, 1000);
        assert_eq!(c.plan.observed, ObservedConfig::Named(ObservedName::Root));
        assert_eq!(c.plan.boundary_policy, PolicyName::ClampToError);
        assert_eq!(c.faults.beta, Some(0.0));
        assert_eq!(c.faults.epsilon, Some(0.1));
        assert_eq!(c.output, OutputConfig::default());
    }

    #[test]
    fn echo_is_idempotent() {
        for text in [
            MINIMAL,
            r#"{"lattice": {"kind": "hyperbolic", "p": 3, "q": 7, "shells": 3},
                "faults": {"xi": 0.4}, "treeify": true,
                "plan": {"horizon": 3, "observed": [0, 1, 2], "boundary_policy": "clamp_to_a"}, "seed": 7}"#,
            r#"{"lattice": {"kind": "toom", "width": 8, "height": 8}, "rule": {"table": {"arity": 3, "hex": "e8"}},
                "faults": {"alpha": 0.02, "model": "pure_probabilistic", "remembered_bit": 1},
                "plan": {"horizon": 5, "observed": "non_boundary"}}"#,
        ] {
            let c = ExperimentConfig::parse(text).unwrap();
            let echo = c.canonical_json();
            let again = ExperimentConfig::parse(&echo).unwrap();
            assert_eq!(again, c);
            assert_eq!(again.canonical_json(), echo);
        }
    }

    #[test]
    fn xi_echoes_epsilon() {
        let c = ExperimentConfig::parse(
            r#"{"lattice": {"kind": "tree", "q": 3, "depth": 1}, "faults": {"xi": 0.4}, "plan": {"horizon": 1}}"#,
        )
        .unwrap();
        assert_eq!(c.faults.epsilon, Some(0.1));
        let v: serde_json::Value = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(v["faults"]["epsilon"], 0.1);
    }

    fn err_path(text: &str) -> String {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn rejections_name_fields() {
        let base = |faults: &str| {
            format!(r#"{{"lattice": {{"kind": "tree", "q": 3, "depth": 1}}, "faults": {faults}, "plan": {{"horizon": 1}}}}"#)
        };
        assert_eq!(
            err_path(&base(r#"{"alpha": 0.05, "beta": 0.05, "model": "pure_probabilistic"}"#)),
            "faults.beta"
        );
        assert_eq!(err_path(&base(r#"{"xi": 0.4, "alpha": 0.1}"#)), "faults");
        assert_eq!(err_path(&base(r#"{"alpha": 0.6}"#)), "faults");
        assert_eq!(err_path(&base(r#"{"alpha": 0.1, "epsilon": 0.2}"#)), "faults.epsilon");
        assert_eq!(err_path(&base(r#"{"alpha": "x"}"#)), "faults.alpha");
        assert_eq!(err_path(&base(r#"{"alpha": 0.1, "colour": 1}"#)), "faults.colour");
        assert_eq!(
            err_path(
                r#"{"lattice": {"kind": "tree", "q": 3, "depth": 1}, "rule": {"table": {"arity": 3, "hex": "96"}},
                    "faults": {"alpha": 0.1}, "plan": {"horizon": 1}}"#
            ),
            "rule"
        );
        assert_eq!(err_path(r#"{"lattice": {"kind": "tree", "q": 3}, "faults": {}, "plan": {"horizon": 1}}"#), "lattice");
    }

    #[test]
    fn builds_each_kind() {
        for spec in [
            LatticeSpec::Tree { q: 3, depth: 2 },
            LatticeSpec::Hyperbolic { p: 4, q: 5, shells: 2 },
            LatticeSpec::Euclidean {
                tiling: "square44".into(),
                width: 4,
                height: 4,
            },
            LatticeSpec::Toom { width: 4, height: 4 },
        ] {
            assert!(spec.build().unwrap().vertex_count() > 0);
        }
        assert!(LatticeSpec::Euclidean {
            tiling: "penrose".into(),
            width: 4,
            height: 4
        }
        .build()
        .is_err());
    }
}
