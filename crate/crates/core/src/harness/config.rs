use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ants::Checkpoints;
use crate::triangle::{TriangleError, TriangleSp};

pub const DEFAULT_TOLERANCE: f64 = 0.02;
pub const DEFAULT_SUPPORT_FLOOR: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("config field `{field}`: {source}")]
    Triangle { field: &'static str, source: TriangleError },
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
}

/// Either three SP expressions or three line lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TriangleSpec {
    Exprs { g1: String, g2: String, g3: String },
    Lengths { lengths: [usize; 3] },
}

impl TriangleSpec {
    pub fn build(&self) -> Result<TriangleSp, ConfigError> {
        match self {
            TriangleSpec::Exprs { g1, g2, g3 } => {
                TriangleSp::parse(g1, g2, g3).map_err(|source| ConfigError::Triangle { field: "g1/g2/g3", source })
            }
            TriangleSpec::Lengths { lengths: [a, b, c] } => {
                TriangleSp::line(*a, *b, *c).map_err(|source| ConfigError::Triangle { field: "lengths", source })
            }
        }
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_floor() -> f64 {
    DEFAULT_SUPPORT_FLOOR
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("antnet-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub triangle: TriangleSpec,
    pub alpha: f64,
    pub n_steps: u64,
    pub seeds: Vec<u64>,
    /// Explicit checkpoint steps; powers of two plus the final step when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_floor")]
    pub support_floor: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Include full weight vectors in every snapshot.
    #[serde(default)]
    pub dump_weights: bool,
}

impl ExperimentConfig {
    pub fn new(triangle: TriangleSpec, alpha: f64, n_steps: u64, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            triangle,
            alpha,
            n_steps,
            seeds,
            checkpoints: None,
            tolerance: DEFAULT_TOLERANCE,
            support_floor: DEFAULT_SUPPORT_FLOOR,
            output_dir: default_output_dir(),
            dump_weights: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: String| Err(ConfigError::Invalid { field, message });
        if !(0.0..=1.0).contains(&self.alpha) {
            return invalid("alpha", format!("{} is not in [0, 1]", self.alpha));
        }
        if self.n_steps == 0 {
            return invalid("n_steps", "must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return invalid("seeds", "at least one seed is required".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return invalid("seeds", "seeds must be distinct".into());
        }
        if !(self.tolerance > 0.0) {
            return invalid("tolerance", format!("{} must be positive", self.tolerance));
        }
        if !(self.support_floor >= 0.0) {
            return invalid("support_floor", format!("{} must be >= 0", self.support_floor));
        }
        self.triangle.build()?;
        Ok(())
    }

    pub fn schedule(&self) -> Checkpoints {
        match &self.checkpoints {
            Some(list) => Checkpoints::At(list.clone()),
            None => Checkpoints::Geometric,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_triangle_forms() {
        let cfg =
            ExperimentConfig::from_json(r#"{"lengths": [2, 4, 3], "alpha": 0.3, "n_steps": 100, "seeds": [1, 2]}"#)
                .unwrap();
        assert_eq!(cfg.triangle, TriangleSpec::Lengths { lengths: [2, 4, 3] });
        assert_eq!(cfg.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(cfg.schedule(), Checkpoints::Geometric);

        let cfg = ExperimentConfig::from_json(
            r#"{"g1": "e", "g2": "par(e,e)", "g3": "series(e,e)", "alpha": 0.5,
                "n_steps": 10, "seeds": [7], "checkpoints": [5, 10], "output_dir": "x"}"#,
        )
        .unwrap();
        assert!(matches!(cfg.triangle, TriangleSpec::Exprs { .. }));
        assert_eq!(cfg.schedule(), Checkpoints::At(vec![5, 10]));
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let err = |text: &str| ExperimentConfig::from_json(text).unwrap_err();
        assert!(matches!(
            err(r#"{"lengths": [1, 1, 1], "alpha": 0.3, "n_steps": 10, "seeds": []}"#),
            ConfigError::Invalid { field: "seeds", .. }
        ));
        assert!(matches!(
            err(r#"{"lengths": [1, 1, 1], "alpha": 0.3, "n_steps": 10, "seeds": [3, 3]}"#),
            ConfigError::Invalid { field: "seeds", .. }
        ));
        assert!(matches!(
            err(r#"{"lengths": [1, 1, 1], "alpha": 1.3, "n_steps": 10, "seeds": [1]}"#),
            ConfigError::Invalid { field: "alpha", .. }
        ));
        assert!(matches!(
            err(r#"{"lengths": [1, 0, 1], "alpha": 0.3, "n_steps": 10, "seeds": [1]}"#),
            ConfigError::Triangle { field: "lengths", .. }
        ));
        assert!(matches!(
            err(r#"{"g1": "e", "g2": "par(e", "g3": "e", "alpha": 0.3, "n_steps": 10, "seeds": [1]}"#),
            ConfigError::Triangle { .. }
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        match ExperimentConfig::from_json("{\n  \"alpha\": 0.3,\n  \"n_steps\": ,\n}") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
