//! Comparison planners: reactive surge-cast and map-based infotaxis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{local_rule, rule_weight, BeliefMap, EstimatorParams, LocalRule};
use crate::geom::Vec2;
use crate::langevin::{PlannerParams, RobotState};
use crate::sensors::Measurement;
use crate::world::GridWorld;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurgeCastParams {
    /// Detection threshold, ppm. Defaults to the plume detection threshold
    /// when omitted from the config.
    pub conc_threshold: Option<f64>,
    /// First cast leg, m.
    pub cast_leg_len: f64,
    pub cast_growth: f64,
}

impl Default for SurgeCastParams {
    fn default() -> Self {
        Self { conc_threshold: None, cast_leg_len: 2.0, cast_growth: 1.5 }
    }
}

impl SurgeCastParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cast_leg_len > 0.0 && self.cast_growth >= 1.0) || self.conc_threshold.is_some_and(|c| !(c >= 0.0)) {
            return Err(Error::Parameter(format!("bad surge-cast parameters: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurgeMode {
    Surge,
    Cast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeCastState {
    pub mode: SurgeMode,
    pub cast_sign: f64,
    pub cast_leg_len: f64,
    pub conc_threshold: f64,
    /// Distance covered on the current cast leg.
    pub leg_progress: f64,
    pub last_wind_dir: Option<Vec2>,
    initial_leg: f64,
    growth: f64,
}

impl SurgeCastState {
    pub fn new(params: &SurgeCastParams, detection_threshold: f64) -> Self {
        Self {
            mode: SurgeMode::Cast,
            cast_sign: 1.0,
            cast_leg_len: params.cast_leg_len,
            conc_threshold: params.conc_threshold.unwrap_or(detection_threshold),
            leg_progress: 0.0,
            last_wind_dir: None,
            initial_leg: params.cast_leg_len,
            growth: params.cast_growth,
        }
    }
}

/// Surge upwind on a detection, otherwise sweep crosswind in legs that grow
/// after each reversal. A detection resets the sweep.
pub fn surge_cast_step(
    robot: &mut RobotState,
    m: &Measurement,
    state: &mut SurgeCastState,
    params: &PlannerParams,
    world: &GridWorld,
) -> Result<()> {
    if let Some(d) = m.wind.normalized() {
        state.last_wind_dir = Some(d);
    }
    let step = params.max_step();
    let dir = if m.conc >= state.conc_threshold {
        state.mode = SurgeMode::Surge;
        state.leg_progress = 0.0;
        state.cast_leg_len = state.initial_leg;
        state.last_wind_dir.map_or(Vec2::new(1.0, 0.0), |w| -w)
    } else {
        state.mode = SurgeMode::Cast;
        if state.leg_progress >= state.cast_leg_len - 1e-9 {
            state.cast_sign = -state.cast_sign;
            state.cast_leg_len *= state.growth;
            state.leg_progress = 0.0;
        }
        state.leg_progress += step;
        state.last_wind_dir.map_or(Vec2::new(1.0, 0.0), |w| w.perp() * state.cast_sign)
    };
    let target = world.truncate_segment(robot.pos, robot.pos + dir * step, params.wall_margin * world.cell_size());
    robot.advance(target, params.dt);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfotaxisParams {
    /// Candidate move length, m. Defaults to `v_max * dt`.
    pub candidate_step: Option<f64>,
    /// Length scale of the detection kernel, m.
    pub kernel_len: f64,
}

impl Default for InfotaxisParams {
    fn default() -> Self {
        Self { candidate_step: None, kernel_len: 2.0 }
    }
}

impl InfotaxisParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_len > 0.0) || self.candidate_step.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::Parameter(format!("bad infotaxis parameters: {self:?}")));
        }
        Ok(())
    }
}

/// Offsets of the nine candidates: stay, then E, NE, N, NW, W, SW, S, SE.
pub fn compass(step: f64) -> [Vec2; 9] {
    let mut out = [Vec2::ZERO; 9];
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        let a = (k - 1) as f64 * std::f64::consts::FRAC_PI_4;
        *o = Vec2::new(a.cos(), a.sin()) * step;
    }
    out
}

/// Entropy of the belief after applying `rule` at `at`, without the floor.
/// `plogp` is the precomputed sum of `p ln p` over the whole map.
fn posterior_entropy(
    belief: &BeliefMap,
    plogp: f64,
    region: &[usize],
    rule: LocalRule,
    at: Vec2,
    world: &GridWorld,
    params: &EstimatorParams,
) -> f64 {
    let (mut z, mut inner_old, mut inner_new) = (1.0, 0.0, 0.0);
    for &id in region {
        let p = belief.p[id];
        let w = rule_weight(rule, world.free_centers()[id] - at, params);
        z += p * (w - 1.0);
        if p > 0.0 {
            inner_old += p * p.ln();
            inner_new += p * w * (p.ln() + w.ln());
        }
    }
    z.ln() - (plogp - inner_old + inner_new) / z
}

/// Probability that a reading at `c` is a detection under the current map.
pub fn detection_prob(belief: &BeliefMap, c: Vec2, world: &GridWorld, kernel_len: f64) -> f64 {
    let inv = 1.0 / kernel_len;
    world
        .free_centers()
        .iter()
        .zip(&belief.p)
        .map(|(x, &p)| {
            let (dx, dy) = (x.x - c.x, x.y - c.y);
            p * (-(dx * dx + dy * dy).sqrt() * inv).exp()
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Expected posterior entropy of a reading taken at `c`. `None` when `c` is
/// not in free space.
pub fn expected_entropy(
    belief: &BeliefMap,
    c: Vec2,
    world: &GridWorld,
    params: &EstimatorParams,
    info: &InfotaxisParams,
) -> Option<f64> {
    let plogp = belief.p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    expected_entropy_with(belief, plogp, c, world, params, info)
}

fn expected_entropy_with(
    belief: &BeliefMap,
    plogp: f64,
    c: Vec2,
    world: &GridWorld,
    params: &EstimatorParams,
    info: &InfotaxisParams,
) -> Option<f64> {
    let cell = world.cell_of(c).ok().filter(|&cell| !world.is_blocked(cell))?;
    let region = world.neighborhood_ids(cell, params.neighborhood_radius);
    // Hypothetical readings carry no wind, so the choice never depends on it.
    let hyp = |conc| Measurement { conc, wind: Vec2::ZERO, pos: c, time: 0.0 };
    let hit_rule = local_rule(belief, &hyp(params.detection_threshold.max(f64::MIN_POSITIVE)), params, world.cell_size());
    let miss_rule = local_rule(belief, &hyp(0.0), params, world.cell_size());
    let pd = detection_prob(belief, c, world, info.kernel_len);
    let h_hit = posterior_entropy(belief, plogp, &region, hit_rule, c, world, params);
    let h_miss = posterior_entropy(belief, plogp, &region, miss_rule, c, world, params);
    Some(pd * h_hit + (1.0 - pd) * h_miss)
}

/// Moves the robot to the candidate with the lowest expected entropy.
/// Returns the chosen compass index.
pub fn infotaxis_step(
    robot: &mut RobotState,
    belief: &BeliefMap,
    world: &GridWorld,
    est: &EstimatorParams,
    params: &PlannerParams,
    info: &InfotaxisParams,
) -> Result<usize> {
    let step = info.candidate_step.unwrap_or(params.max_step());
    let plogp = belief.p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
    let mut best: Option<(usize, f64)> = None;
    for (k, off) in compass(step).iter().enumerate() {
        let c = robot.pos + *off;
        if k > 0 && !(world.is_free(c) && world.line_of_sight(robot.pos, c)) {
            continue;
        }
        let Some(h) = expected_entropy_with(belief, plogp, c, world, est, info) else { continue };
        if best.is_none_or(|(_, bh)| h < bh - 1e-12) {
            best = Some((k, h));
        }
    }
    let k = best.map_or(0, |(k, _)| k);
    let to = robot.pos + compass(step)[k];
    robot.advance(to, params.dt);
    Ok(k)
}
