use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::snapshots_path;
use super::{ExperimentConfig, HarnessError};
use crate::ants::Snapshot;
use crate::theory::{self, classify_case, FlowOptions, Point2, TheoryParams};

/// `h(n) = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub seed: u64,
    pub n: u64,
    /// Flow time `h(n) - h(n0)`.
    pub t: f64,
    pub emp_w1: f64,
    pub emp_w3: f64,
    pub flow_w1: f64,
    pub flow_w3: f64,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayReport {
    pub rows: Vec<OverlayRow>,
    /// Per seed: converged flow limit from the seed's first usable
    /// checkpoint, if the flow converged.
    pub flow_limits: Vec<(u64, Option<Point2>)>,
    pub theory_limit: Point2,
    /// Per seed: empirical point at the last checkpoint.
    pub final_points: Vec<(u64, Point2)>,
}

fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source }))
        .collect()
}

/// Pairs each seed's empirical `(N1/n, N3/n)` checkpoints with the flow
/// started from the seed's first checkpoint at which all counters are
/// positive, in the time scale `h(n) - h(n0)`.
pub fn report_flow_overlay(config: &ExperimentConfig) -> Result<OverlayReport, HarnessError> {
    config.validate()?;
    let triangle = config.triangle.build()?;
    let params = TheoryParams::from_lengths(config.alpha, triangle.lengths())?;
    let theory_limit = classify_case(&params).limit_point();

    let mut rows = Vec::new();
    let mut flow_limits = Vec::new();
    let mut final_points = Vec::new();
    for &seed in &config.seeds {
        let snaps = read_snapshots(&snapshots_path(&config.output_dir, seed))?;
        let point = |s: &Snapshot| Point2::new(s.nhat[0], s.nhat[2]);
        if let Some(last) = snaps.last() {
            final_points.push((seed, point(last)));
        }
        let Some(k0) =
            snaps.iter().position(|s| !s.counts.contains(&0) && theory::field_denominator(point(s), &params) > 0.0)
        else {
            flow_limits.push((seed, None));
            continue;
        };
        let used = &snaps[k0..];
        let h0 = harmonic(used[0].n);
        let times: Vec<f64> = used.iter().map(|s| harmonic(s.n) - h0).collect();
        let start = point(&used[0]);
        let flow = theory::flow_at_times(start, &params, &times, FlowOptions::default().dt)?;
        for ((s, &t), f) in used.iter().zip(&times).zip(&flow) {
            let e = point(s);
            rows.push(OverlayRow {
                seed,
                n: s.n,
                t,
                emp_w1: e.w1,
                emp_w3: e.w3,
                flow_w1: f.w1,
                flow_w3: f.w3,
                dist: e.dist(*f),
            });
        }
        let limit = theory::integrate_flow(start, &params, &FlowOptions::default())?.limit();
        flow_limits.push((seed, limit));
    }
    Ok(OverlayReport { rows, flow_limits, theory_limit, final_points })
}

pub fn write_overlay_csv(path: &Path, report: &OverlayReport) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in &report.rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
