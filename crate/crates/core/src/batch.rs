//! Seeded trial batches, parameter sweeps and planner comparisons.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sim::{PlannerKind, Scenario};
use crate::trial::{run_trial, summarize, write_rows, BatchSummary, TrialRecord};

/// Runs trials with seeds `base_seed .. base_seed + n` on `workers` threads.
/// Records come back sorted by seed whatever the worker count.
pub fn run_batch(scenario: &Scenario, base_seed: u64, n: usize, workers: usize, stride: usize) -> Result<Vec<TrialRecord>> {
    let seeds: Vec<u64> = (0..n as u64).map(|i| base_seed + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let mut out: Vec<TrialRecord> =
        pool.install(|| seeds.par_iter().map(|&s| run_trial(scenario, s, stride)).collect::<Result<_>>())?;
    out.sort_by_key(|r| r.seed);
    Ok(out)
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let e = &cfg.experiment;
    run_batch(&cfg.scenario, e.base_seed, e.n_trials, e.workers, e.trajectory_stride)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `robot,time,x,y` rows for every sample of every robot.
pub fn write_trajectory(path: &Path, rec: &TrialRecord) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["robot", "time", "x", "y"])?;
    for (id, samples) in rec.trajectories.iter().enumerate() {
        for s in samples {
            w.write_record([id.to_string(), s[0].to_string(), s[1].to_string(), s[2].to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `results.csv`, `summary.json` and `trajectories/<seed>.csv`.
pub fn write_batch(dir: &Path, records: &[TrialRecord], trajectories: bool) -> Result<BatchSummary> {
    create_dir(dir)?;
    let summary = summarize(records)?;
    let csv_path = dir.join("results.csv");
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_rows(records, f)?;
    write_json(&dir.join("summary.json"), &summary)?;
    if trajectories {
        let tdir = dir.join("trajectories");
        create_dir(&tdir)?;
        for r in records {
            write_trajectory(&tdir.join(format!("{}.csv", r.seed)), r)?;
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub key: String,
    pub value: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_path_efficiency: Option<f64>,
    pub median_path_efficiency: Option<f64>,
    pub mean_search_time: Option<f64>,
    pub median_search_time: Option<f64>,
}

impl SweepRow {
    pub fn new(key: &str, value: &str, s: &BatchSummary) -> Self {
        Self {
            key: key.to_string(),
            value: value.to_string(),
            trials: s.trials,
            successes: s.successes,
            success_rate: s.success_rate,
            mean_path_efficiency: s.mean_path_efficiency,
            median_path_efficiency: s.median_path_efficiency,
            mean_search_time: s.mean_search_time,
            median_search_time: s.median_search_time,
        }
    }
}

/// One batch per value of `key`, all on the same seeds.
pub fn sweep(cfg: &ExperimentConfig, key: &str, values: &[String]) -> Result<Vec<(SweepRow, Vec<TrialRecord>)>> {
    values
        .iter()
        .map(|v| {
            let c = cfg.with_override(key, v)?;
            let recs = run_config(&c)?;
            let row = SweepRow::new(key, v, &summarize(&recs)?);
            Ok((row, recs))
        })
        .collect()
}

/// All three planners on the same seeds.
pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<(PlannerKind, Vec<TrialRecord>)>> {
    PlannerKind::ALL
        .iter()
        .map(|&k| Ok((k, run_config(&cfg.with_planner(k))?)))
        .collect()
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join("sweep.csv");
    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join("sweep.json"), &rows)
}

pub fn write_compare(dir: &Path, runs: &[(PlannerKind, Vec<TrialRecord>)]) -> Result<Vec<BatchSummary>> {
    let mut out = Vec::new();
    for (k, recs) in runs {
        out.push(write_batch(&dir.join(k.name()), recs, false)?);
    }
    let keyed: std::collections::BTreeMap<&str, &BatchSummary> =
        runs.iter().map(|(k, _)| k.name()).zip(out.iter()).collect();
    write_json(&dir.join("compare.json"), &keyed)?;
    Ok(out)
}
