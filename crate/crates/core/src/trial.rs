//! Single trials, their records, and batch statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::langevin::RobotState;
use crate::sim::{PlannerKind, Scenario, Simulation};
use crate::stats;
use crate::team::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub planner: PlannerKind,
    pub outcome: Outcome,
    pub elapsed: f64,
    /// Per robot, in id order.
    pub path_lens: Vec<f64>,
    /// Shortest collision-free distance from the reference robot's start to
    /// the success disc around the source.
    pub d_min: f64,
    /// Robot whose start `d_min` refers to: the winner, or robot 0.
    pub d_min_robot: usize,
    pub swap_events: usize,
    pub swaps_accepted: usize,
    /// Decimated `(time, x, y)` samples per robot; always ends with the
    /// final position.
    pub trajectories: Vec<Vec<[f64; 3]>>,
}

impl TrialRecord {
    pub fn success_robot(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Success(id) => Some(id),
            _ => None,
        }
    }
}

/// Shortest path from `start` to within `d_eps` of the source.
pub fn d_min(scenario: &Scenario, start: Vec2) -> Result<f64> {
    let d = scenario.world.shortest_path_len(start, scenario.world.source_pos())?;
    Ok((d - scenario.team.d_eps).max(0.0))
}

fn decimate(r: &RobotState, stride: usize) -> Vec<[f64; 3]> {
    let n = r.trajectory.len();
    r.trajectory
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == n)
        .map(|(_, &(t, p))| [t, p.x, p.y])
        .collect()
}

pub fn record_of(sim: &Simulation<'_>, seed: u64, stride: usize) -> Result<TrialRecord> {
    let sc = sim.scenario;
    let reference = match sim.outcome {
        Outcome::Success(id) => id,
        _ => 0,
    };
    Ok(TrialRecord {
        seed,
        planner: sc.kind,
        outcome: sim.outcome,
        elapsed: sim.elapsed,
        path_lens: sim.robots.iter().map(|r| r.path_len).collect(),
        d_min: d_min(sc, sim.robots[reference].start())?,
        d_min_robot: reference,
        swap_events: sim.swaps.len(),
        swaps_accepted: sim.swaps.iter().filter(|e| e.accepted).count(),
        trajectories: sim.robots.iter().map(|r| decimate(r, stride.max(1))).collect(),
    })
}

/// Runs one trial to completion.
pub fn run_trial(scenario: &Scenario, seed: u64, stride: usize) -> Result<TrialRecord> {
    let mut sim = Simulation::new(scenario, seed)?;
    sim.run()?;
    record_of(&sim, seed, stride)
}

/// `d_min / d` for the robot that reached the source.
pub fn path_efficiency(rec: &TrialRecord) -> Result<f64> {
    let id = rec
        .success_robot()
        .ok_or_else(|| Error::Usage(format!("trial {} did not succeed; path efficiency is undefined", rec.seed)))?;
    let d = rec.path_lens[id];
    Ok(if d > 0.0 { rec.d_min / d } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub planner: PlannerKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_path_efficiency: Option<f64>,
    pub median_path_efficiency: Option<f64>,
    pub mean_search_time: Option<f64>,
    pub median_search_time: Option<f64>,
}

pub fn summarize(records: &[TrialRecord]) -> Result<BatchSummary> {
    let first = records.first().ok_or_else(|| Error::Usage("cannot summarize an empty batch".into()))?;
    let wins: Vec<&TrialRecord> = records.iter().filter(|r| r.success_robot().is_some()).collect();
    let pe: Vec<f64> = wins.iter().map(|r| path_efficiency(r)).collect::<Result<_>>()?;
    let times: Vec<f64> = wins.iter().map(|r| r.elapsed).collect();
    Ok(BatchSummary {
        planner: first.planner,
        trials: records.len(),
        successes: wins.len(),
        success_rate: wins.len() as f64 / records.len() as f64,
        mean_path_efficiency: stats::mean(&pe),
        median_path_efficiency: stats::median(&pe),
        mean_search_time: stats::mean(&times),
        median_search_time: stats::median(&times),
    })
}

/// Flat CSV row of a record. Trajectories go to their own files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub planner: PlannerKind,
    pub outcome: String,
    pub success_robot: Option<usize>,
    pub elapsed: f64,
    pub d_min: f64,
    pub d_min_robot: usize,
    pub path_efficiency: Option<f64>,
    pub swap_events: usize,
    pub swaps_accepted: usize,
    /// Semicolon-separated per-robot path lengths.
    pub path_lens: String,
}

impl TrialRow {
    pub fn from_record(r: &TrialRecord) -> Self {
        Self {
            seed: r.seed,
            planner: r.planner,
            outcome: match r.outcome {
                Outcome::Success(_) => "success",
                Outcome::Timeout => "timeout",
                Outcome::Running => "running",
            }
            .into(),
            success_robot: r.success_robot(),
            elapsed: r.elapsed,
            d_min: r.d_min,
            d_min_robot: r.d_min_robot,
            path_efficiency: path_efficiency(r).ok(),
            swap_events: r.swap_events,
            swaps_accepted: r.swaps_accepted,
            path_lens: r.path_lens.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        }
    }

    pub fn path_lens(&self) -> Result<Vec<f64>> {
        if self.path_lens.is_empty() {
            return Ok(Vec::new());
        }
        self.path_lens
            .split(';')
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parameter(format!("bad path length '{s}': {e}"))))
            .collect()
    }

    pub fn outcome(&self) -> Result<Outcome> {
        match (self.outcome.as_str(), self.success_robot) {
            ("success", Some(id)) => Ok(Outcome::Success(id)),
            ("timeout", None) => Ok(Outcome::Timeout),
            ("running", None) => Ok(Outcome::Running),
            (o, s) => Err(Error::Parameter(format!("inconsistent outcome {o} / {s:?}"))),
        }
    }
}

pub fn write_rows<W: std::io::Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(TrialRow::from_record(r))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, outcome: Outcome, d_min: f64, lens: Vec<f64>) -> TrialRecord {
        TrialRecord {
            seed,
            planner: PlannerKind::SniffySquad,
            outcome,
            elapsed: 12.5,
            path_lens: lens,
            d_min,
            d_min_robot: 0,
            swap_events: 3,
            swaps_accepted: 1,
            trajectories: vec![],
        }
    }

    #[test]
    fn efficiency_examples() {
        let r = rec(1, Outcome::Success(1), 5.0, vec![3.0, 10.0]);
        assert_eq!(path_efficiency(&r).unwrap(), 0.5);
        let r = rec(1, Outcome::Timeout, 5.0, vec![3.0]);
        assert!(matches!(path_efficiency(&r), Err(Error::Usage(_))));
    }

    #[test]
    fn summary_examples() {
        let mut rs: Vec<TrialRecord> = (0..3).map(|i| rec(i, Outcome::Success(0), 4.0, vec![5.0])).collect();
        rs.push(rec(3, Outcome::Timeout, 4.0, vec![9.0]));
        let s = summarize(&rs).unwrap();
        assert_eq!(s.success_rate, 0.75);
        assert_eq!(s.median_path_efficiency, Some(0.8));

        let s = summarize(&[rec(0, Outcome::Timeout, 1.0, vec![1.0])]).unwrap();
        assert_eq!(s.success_rate, 0.0);
        assert_eq!(s.mean_path_efficiency, None);
        assert!(matches!(summarize(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn csv_round_trip() {
        let rs = vec![
            rec(7, Outcome::Success(1), 1.0 / 3.0, vec![0.1 + 0.2, 1e-17, 12345.678901234567]),
            rec(8, Outcome::Timeout, 2.0f64.sqrt(), vec![std::f64::consts::PI]),
        ];
        let mut buf = Vec::new();
        write_rows(&rs, &mut buf).unwrap();
        let rows = read_rows(buf.as_slice()).unwrap();
        for (row, r) in rows.iter().zip(&rs) {
            assert_eq!(*row, TrialRow::from_record(r));
            assert_eq!(row.path_lens().unwrap(), r.path_lens);
            assert_eq!(row.outcome().unwrap(), r.outcome);
            assert_eq!(row.d_min.to_bits(), r.d_min.to_bits());
        }
    }
}
