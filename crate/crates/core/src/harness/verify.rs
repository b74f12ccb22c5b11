use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::experiment::{final_path, FinalState};
use super::{ExperimentConfig, HarnessError};
use crate::theory::{classify_case, TheoryLimits, TheoryParams};
use crate::triangle::{Component, TriangleSp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub n: u64,
    pub nhat: [f64; 3],
    /// `W_e(n) / n` for every edge.
    pub edge_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: usize,
    pub component: Component,
    pub median_ratio: f64,
    /// Deterministic limit of `W_e(n)/n` when theory pins it down (edges of
    /// line components and of vanishing components).
    pub predicted: Option<f64>,
    pub error: Option<f64>,
    pub in_support: bool,
    pub above_floor: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub lengths: [usize; 3],
    pub tolerance: f64,
    pub support_floor: f64,
    pub theory: TheoryLimits,
    pub seeds: Vec<SeedReport>,
    pub median_nhat: [f64; 3],
    pub nhat_errors: [f64; 3],
    pub nhat_pass: bool,
    pub edges: Vec<EdgeCheck>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn max_nhat_error(&self) -> f64 {
        self.nhat_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_edge_error(&self) -> f64 {
        self.edges.iter().filter_map(|e| e.error).fold(0.0, f64::max)
    }
}

/// Median of a non-empty slice (mean of the two middle values for even
/// length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Compares replica end states with the predicted limits.
pub fn verify_replicas(
    config: &ExperimentConfig,
    triangle: &TriangleSp,
    finals: &[FinalState],
) -> Result<VerificationReport, HarnessError> {
    let lengths = triangle.lengths();
    let params = TheoryParams::from_lengths(config.alpha, lengths)?;
    let theory = classify_case(&params);

    let seeds: Vec<SeedReport> = finals
        .iter()
        .map(|f| {
            let n = f.n.max(1) as f64;
            SeedReport {
                seed: f.seed,
                n: f.n,
                nhat: f.counts.map(|c| c as f64 / n),
                edge_ratios: f.weights.iter().map(|&w| w as f64 / n).collect(),
            }
        })
        .collect();

    let median_nhat: [f64; 3] = [0, 1, 2].map(|i| median(&seeds.iter().map(|s| s.nhat[i]).collect::<Vec<_>>()));
    let nhat_errors: [f64; 3] = [0, 1, 2].map(|i| (median_nhat[i] - theory.limits[i]).abs());
    let nhat_pass = nhat_errors.iter().all(|&e| e <= config.tolerance);

    let support: [BTreeSet<usize>; 3] = Component::ALL.map(|c| triangle.component_shortest_path_edges(c));
    let mut edges = Vec::with_capacity(triangle.graph().num_edges());
    for e in 0..triangle.graph().num_edges() {
        let component = triangle.owner(e);
        let i = component.index();
        let median_ratio = median(&seeds.iter().map(|s| s.edge_ratios[e]).collect::<Vec<_>>());
        let active = theory.active[i];
        let predicted = if !active {
            Some(0.0)
        } else if triangle.component(component).is_line() {
            Some(theory.limits[i])
        } else {
            None
        };
        let in_support = active && support[i].contains(&e);
        let above_floor = median_ratio > config.support_floor;
        let error = predicted.map(|p| (median_ratio - p).abs());
        let pass = above_floor == in_support && error.is_none_or(|x| x <= config.tolerance);
        edges.push(EdgeCheck { edge: e, component, median_ratio, predicted, error, in_support, above_floor, pass });
    }

    let pass = nhat_pass && edges.iter().all(|e| e.pass);
    Ok(VerificationReport {
        alpha: config.alpha,
        lengths,
        tolerance: config.tolerance,
        support_floor: config.support_floor,
        theory,
        seeds,
        median_nhat,
        nhat_errors,
        nhat_pass,
        edges,
        pass,
    })
}

/// Reads `final_seed_<s>.json` for every configured seed and verifies.
pub fn verify_theorem(config: &ExperimentConfig) -> Result<VerificationReport, HarnessError> {
    config.validate()?;
    let triangle = config.triangle.build()?;
    let mut finals = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let path = final_path(&config.output_dir, seed);
        if !path.exists() {
            return Err(HarnessError::MissingArtifact(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        let state: FinalState =
            serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.clone(), source })?;
        finals.push(state);
    }
    verify_replicas(config, &triangle, &finals)
}
