use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError};
use crate::ants::{AntsState, RunOutput};
use crate::triangle::TriangleSp;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const THREADS_ENV: &str = "ANTNET_THREADS";

/// Final state of one replica, written next to its snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub seed: u64,
    pub n: u64,
    #[serde(rename = "N")]
    pub counts: [u64; 3],
    pub weights: Vec<u64>,
    /// Component index (0, 1, 2) of every edge.
    pub owner: Vec<usize>,
    pub floor_min: [f64; 2],
    pub category_counts: [u64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub seed: u64,
    pub output: RunOutput,
    pub final_state: FinalState,
}

pub fn snapshots_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.jsonl"))
}

pub fn final_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("final_seed_{seed}.json"))
}

/// Worker count from `ANTNET_THREADS`, defaulting to the available cores.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn simulate_replica(
    config: &ExperimentConfig,
    triangle: &TriangleSp,
    seed: u64,
) -> Result<ReplicaResult, HarnessError> {
    let mut state = AntsState::init(triangle.clone(), config.alpha, seed)?;
    let output = state.run(config.n_steps, &config.schedule(), config.dump_weights)?;
    let final_state = FinalState {
        seed,
        n: state.n(),
        counts: state.counts(),
        weights: state.weights().to_vec(),
        owner: (0..triangle.graph().num_edges()).map(|e| triangle.owner(e).index()).collect(),
        floor_min: output.floor_min,
        category_counts: output.category_counts,
    };
    Ok(ReplicaResult { seed, output, final_state })
}

fn write_replica(dir: &Path, rep: &ReplicaResult) -> Result<(), HarnessError> {
    let path = snapshots_path(dir, rep.seed);
    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    let mut out = BufWriter::new(file);
    for snap in &rep.output.snapshots {
        let line = serde_json::to_string(snap).expect("snapshot serializes");
        writeln!(out, "{line}").map_err(|e| HarnessError::io(&path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(&path, e))?;

    let path = final_path(dir, rep.seed);
    let text = serde_json::to_string_pretty(&rep.final_state).expect("final state serializes");
    fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))
}

fn write_summary(dir: &Path, reps: &[ReplicaResult]) -> Result<(), HarnessError> {
    let path = dir.join(SUMMARY_FILE);
    let csv_err = |source| HarnessError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record([
        "seed", "n", "N1", "N2", "N3", "Nhat1", "Nhat2", "Nhat3", "C1", "C2", "C3", "delta", "floor1", "floor2",
    ])
    .map_err(csv_err)?;
    for rep in reps {
        let Some(s) = rep.output.snapshots.last() else { continue };
        let mut row = vec![rep.seed.to_string(), s.n.to_string()];
        row.extend(s.counts.iter().map(u64::to_string));
        row.extend(s.nhat.iter().map(f64::to_string));
        row.extend(s.conductance.iter().map(f64::to_string));
        row.push(s.delta.map_or_else(String::new, |d| d.to_string()));
        row.extend(rep.output.floor_min.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))
}

/// Runs every seed, writes `seed_<s>.jsonl`, `final_seed_<s>.json` and
/// `summary.csv` into the output directory, and returns the replicas in
/// seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicaResult>, HarnessError> {
    config.validate()?;
    let triangle = config.triangle.build()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let reps: Vec<ReplicaResult> = pool.install(|| {
        config.seeds.par_iter().map(|&seed| simulate_replica(config, &triangle, seed)).collect::<Result<_, _>>()
    })?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for rep in &reps {
        write_replica(dir, rep)?;
    }
    write_summary(dir, &reps)?;
    Ok(reps)
}
