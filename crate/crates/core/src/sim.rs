//! One search trial: plume, shared belief, robots and the per-tick loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{infotaxis_step, surge_cast_step, InfotaxisParams, SurgeCastParams, SurgeCastState};
use crate::error::{Error, Result};
use crate::estimator::{init_belief, local_update, potential_of, propagate_global, BeliefMap, EstimatorParams, PotentialField};
use crate::geom::Vec2;
use crate::langevin::{langevin_step, PlannerParams, RobotState};
use crate::plume::{PlumeParams, PlumeState};
use crate::sensors::{sense, Measurement, SensorNoise};
use crate::team::{adapt_roles, check_termination, reached_source, Outcome, SwapEvent, TeamConfig};
use crate::world::GridWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerKind {
    #[serde(rename = "sniffysquad")]
    SniffySquad,
    #[serde(rename = "surge_cast")]
    SurgeCast,
    #[serde(rename = "infotaxis")]
    Infotaxis,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::SniffySquad, PlannerKind::Infotaxis, PlannerKind::SurgeCast];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::SniffySquad => "sniffysquad",
            PlannerKind::SurgeCast => "surge_cast",
            PlannerKind::Infotaxis => "infotaxis",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown planner '{s}'")))
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a trial needs apart from its seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: GridWorld,
    pub plume: PlumeParams,
    pub sensors: SensorNoise,
    pub estimator: EstimatorParams,
    pub planner: PlannerParams,
    pub team: TeamConfig,
    pub kind: PlannerKind,
    pub surge_cast: SurgeCastParams,
    pub infotaxis: InfotaxisParams,
}

impl Scenario {
    /// Default parameters on the given world.
    pub fn new(world: GridWorld) -> Self {
        Self {
            world,
            plume: PlumeParams::default(),
            sensors: SensorNoise::default(),
            estimator: EstimatorParams::default(),
            planner: PlannerParams::default(),
            team: TeamConfig::default(),
            kind: PlannerKind::SniffySquad,
            surge_cast: SurgeCastParams::default(),
            infotaxis: InfotaxisParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plume.validate()?;
        self.sensors.validate()?;
        self.estimator.validate()?;
        self.planner.validate()?;
        self.team.validate()?;
        self.surge_cast.validate()?;
        self.infotaxis.validate()
    }

    /// Start positions: the configured spawn points, or evenly spaced along
    /// the edge the mean wind blows toward.
    pub fn spawn_points(&self) -> Result<Vec<Vec2>> {
        let w = &self.world;
        if let Some(pts) = &self.team.spawn {
            return pts
                .iter()
                .map(|&p| {
                    let p = Vec2::from(p);
                    if w.is_free(p) {
                        Ok(p)
                    } else {
                        Err(Error::Parameter(format!("spawn point {p} is not in free space")))
                    }
                })
                .collect();
        }
        let wind = Vec2::from(self.plume.mean_wind);
        let m = self.team.robots;
        let (cols, rows) = (w.cols(), w.rows());
        // Edge cells listed in order along the edge, then walked inward.
        let horizontal = wind.x.abs() >= wind.y.abs();
        let (len, depth) = if horizontal { (rows, cols) } else { (cols, rows) };
        let cell_at = |along: usize, inward: usize| {
            let d = match (horizontal, if horizontal { wind.x } else { wind.y } >= 0.0) {
                (true, true) | (false, true) => depth - 1 - inward,
                _ => inward,
            };
            if horizontal {
                crate::world::CellIndex::new(d, along)
            } else {
                crate::world::CellIndex::new(along, d)
            }
        };
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let along = (((k as f64 + 0.5) / m as f64) * len as f64) as usize;
            let found = (0..depth).find_map(|inward| {
                (0..len).find_map(|off| {
                    [along as isize - off as isize, (along + off) as isize]
                        .into_iter()
                        .filter(|&a| a >= 0 && (a as usize) < len)
                        .map(|a| cell_at(a as usize, inward))
                        .find(|&c| !w.is_blocked(c))
                })
            });
            let c = found.ok_or_else(|| Error::Geometry("world has no free cell to spawn in".into()))?;
            out.push(w.cell_center(c));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Sense,
    BeliefUpdate,
    Potential,
    RoleAdaptation,
    Move(usize),
    PlumeAdvance,
    Termination,
}

// Independent streams of one ChaCha key.
const STREAM_SENSE: u64 = 1;
const STREAM_MOTION: u64 = 2;
const STREAM_SWAP: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

#[derive(Clone)]
pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub plume: PlumeState,
    pub belief: BeliefMap,
    pub field: PotentialField,
    pub robots: Vec<RobotState>,
    pub surge: Vec<SurgeCastState>,
    pub swaps: Vec<SwapEvent>,
    pub elapsed: f64,
    pub outcome: Outcome,
    pub last_readings: Vec<Measurement>,
    /// Phase trace, recorded only when enabled.
    pub phase_log: Option<Vec<Phase>>,
    sense_rng: ChaCha8Rng,
    motion_rng: ChaCha8Rng,
    swap_rng: ChaCha8Rng,
}

impl<'a> Simulation<'a> {
    /// Builds the trial, warms up the plume and checks for an immediate
    /// outcome.
    pub fn new(scenario: &'a Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let world = &scenario.world;
        let mut plume = PlumeState::new(scenario.plume.clone(), seed)?;
        let dt = scenario.planner.dt;
        let warm_steps = (scenario.plume.t_warm / dt).round() as usize;
        for _ in 0..warm_steps {
            plume.step(world, dt)?;
        }
        let mut est = scenario.estimator.clone();
        est.detection_threshold = scenario.plume.detection_threshold;
        let belief = init_belief(world, &est);
        let field = potential_of(&belief);
        let robots: Vec<RobotState> = scenario
            .spawn_points()?
            .into_iter()
            .zip(&scenario.team.temperatures)
            .enumerate()
            .map(|(id, (p, &t))| RobotState::new(id, p, t))
            .collect();
        let surge = robots
            .iter()
            .map(|_| SurgeCastState::new(&scenario.surge_cast, scenario.plume.detection_threshold))
            .collect();
        let outcome = check_termination(&robots, world, 0.0, &scenario.team);
        Ok(Self {
            scenario,
            plume,
            belief,
            field,
            robots,
            surge,
            swaps: Vec::new(),
            elapsed: 0.0,
            outcome,
            last_readings: Vec::new(),
            phase_log: None,
            sense_rng: stream(seed, STREAM_SENSE),
            motion_rng: stream(seed, STREAM_MOTION),
            swap_rng: stream(seed, STREAM_SWAP),
        })
    }

    pub fn with_phase_log(mut self) -> Self {
        self.phase_log = Some(Vec::new());
        self
    }

    fn log(&mut self, p: Phase) {
        if let Some(l) = &mut self.phase_log {
            l.push(p);
        }
    }

    fn estimator(&self) -> EstimatorParams {
        let mut est = self.scenario.estimator.clone();
        est.detection_threshold = self.scenario.plume.detection_threshold;
        est
    }

    /// Advances one planning step. Does nothing once the trial is over.
    pub fn run_tick(&mut self) -> Result<Outcome> {
        if self.outcome != Outcome::Running {
            return Ok(self.outcome);
        }
        let sc = self.scenario;
        let world = &sc.world;
        let dt = sc.planner.dt;
        let est = self.estimator();

        self.log(Phase::Sense);
        let mut readings = Vec::with_capacity(self.robots.len());
        for r in &self.robots {
            readings.push(sense(&self.plume, world, r.pos, self.elapsed, &sc.sensors, &mut self.sense_rng)?);
        }

        self.log(Phase::BeliefUpdate);
        for m in &readings {
            let region = local_update(&mut self.belief, m, world, &est)?;
            propagate_global(&mut self.belief, &region, world, &est);
        }

        self.log(Phase::Potential);
        self.field = potential_of(&self.belief);

        self.log(Phase::RoleAdaptation);
        if sc.kind == PlannerKind::SniffySquad {
            let ev = adapt_roles(
                &mut self.robots,
                &self.field,
                world,
                sc.team.swap_intensity,
                self.elapsed,
                &mut self.swap_rng,
            )?;
            self.swaps.extend(ev);
        }

        for i in 0..self.robots.len() {
            self.log(Phase::Move(i));
            let robot = &mut self.robots[i];
            match sc.kind {
                PlannerKind::SniffySquad => langevin_step(robot, &self.field, &sc.planner, world, &mut self.motion_rng)?,
                PlannerKind::SurgeCast => surge_cast_step(robot, &readings[i], &mut self.surge[i], &sc.planner, world)?,
                PlannerKind::Infotaxis => {
                    infotaxis_step(robot, &self.belief, world, &est, &sc.planner, &sc.infotaxis)?;
                }
            }
            if let Some(id) = reached_source(std::slice::from_ref(&self.robots[i]), world, sc.team.d_eps) {
                self.elapsed += dt;
                self.outcome = Outcome::Success(id);
                self.last_readings = readings;
                return Ok(self.outcome);
            }
        }
        self.last_readings = readings;

        self.log(Phase::PlumeAdvance);
        self.plume.step(world, dt)?;
        self.elapsed += dt;

        self.log(Phase::Termination);
        self.outcome = check_termination(&self.robots, world, self.elapsed, &sc.team);
        Ok(self.outcome)
    }

    pub fn run(&mut self) -> Result<Outcome> {
        while self.outcome == Outcome::Running {
            self.run_tick()?;
        }
        Ok(self.outcome)
    }
}
