//! Role adaptation by replica exchange, and the team's stopping rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PotentialField;
use crate::langevin::RobotState;
use crate::world::GridWorld;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeamConfig {
    pub robots: usize,
    /// Initial temperature ladder, one per robot.
    pub temperatures: Vec<f64>,
    /// Swap intensity `a`.
    pub swap_intensity: f64,
    /// Success radius, m.
    pub d_eps: f64,
    /// Simulated seconds before a trial times out.
    pub t_limit: f64,
    /// Explicit spawn points. When absent robots line up along the downwind edge.
    pub spawn: Option<Vec<[f64; 2]>>,
}

impl Default for TeamConfig {
    fn default() -> Self {
        Self {
            robots: 3,
            temperatures: vec![0.01, 0.1, 1.0],
            swap_intensity: 1.0,
            d_eps: 0.5,
            t_limit: 600.0,
            spawn: None,
        }
    }
}

impl TeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.robots == 0 {
            return Err(Error::Parameter("team needs at least one robot".into()));
        }
        if self.temperatures.len() != self.robots {
            return Err(Error::Parameter(format!(
                "{} temperatures given for {} robots",
                self.temperatures.len(),
                self.robots
            )));
        }
        if self.temperatures.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Parameter("temperatures must be positive".into()));
        }
        if !(self.swap_intensity >= 0.0) || !(self.d_eps > 0.0) || !(self.t_limit >= 0.0) {
            return Err(Error::Parameter("need a >= 0, d_eps > 0, t_limit >= 0".into()));
        }
        if let Some(s) = &self.spawn {
            if s.len() != self.robots {
                return Err(Error::Parameter(format!("{} spawn points for {} robots", s.len(), self.robots)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapEvent {
    pub time: f64,
    pub i: usize,
    pub j: usize,
    pub rate: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "robot")]
pub enum Outcome {
    Running,
    Success(usize),
    Timeout,
}

/// Probability that robots `i` and `j` trade temperatures.
pub fn swap_rate(a: f64, tau_i: f64, tau_j: f64, phi_i: f64, phi_j: f64) -> Result<f64> {
    if !(tau_i > 0.0 && tau_j > 0.0) {
        return Err(Error::Parameter(format!("temperatures must be positive, got {tau_i} and {tau_j}")));
    }
    let dbeta = 1.0 / tau_i - 1.0 / tau_j;
    let dphi = phi_i - phi_j;
    let mut expo = dbeta * dphi;
    if expo.is_nan() {
        // 0 * inf: equal temperatures never gate a swap.
        expo = 0.0;
    }
    let s = a * expo.min(0.0).exp();
    Ok(if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) })
}

/// One adaptation round over explicit temperature and potential vectors.
/// Pairs are visited in lexicographic order and swaps take effect at once.
pub fn exchange<R: Rng + ?Sized>(
    temps: &mut [f64],
    phis: &[f64],
    a: f64,
    time: f64,
    rng: &mut R,
) -> Result<Vec<SwapEvent>> {
    let m = temps.len();
    let mut events = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let rate = swap_rate(a, temps[i], temps[j], phis[i], phis[j])?;
            let u: f64 = rng.random();
            let accepted = rate > 0.0 && u <= rate;
            if accepted {
                temps.swap(i, j);
            }
            events.push(SwapEvent { time, i, j, rate, accepted });
        }
    }
    Ok(events)
}

pub fn adapt_roles<R: Rng + ?Sized>(
    robots: &mut [RobotState],
    field: &PotentialField,
    world: &GridWorld,
    a: f64,
    time: f64,
    rng: &mut R,
) -> Result<Vec<SwapEvent>> {
    let phis: Vec<f64> = robots.iter().map(|r| field.value_at(world, r.pos)).collect();
    let mut temps: Vec<f64> = robots.iter().map(|r| r.tau).collect();
    let mut events = exchange(&mut temps, &phis, a, time, rng)?;
    for (r, t) in robots.iter_mut().zip(temps) {
        r.tau = t;
    }
    for e in &mut events {
        e.i = robots[e.i].id;
        e.j = robots[e.j].id;
    }
    Ok(events)
}

/// Lowest-indexed robot within `d_eps` of the source wins.
pub fn reached_source(robots: &[RobotState], world: &GridWorld, d_eps: f64) -> Option<usize> {
    let src = world.source_pos();
    robots.iter().find(|r| r.pos.dist(src) <= d_eps).map(|r| r.id)
}

pub fn check_termination(robots: &[RobotState], world: &GridWorld, elapsed: f64, cfg: &TeamConfig) -> Outcome {
    if let Some(id) = reached_source(robots, world, cfg.d_eps) {
        Outcome::Success(id)
    } else if elapsed >= cfg.t_limit {
        Outcome::Timeout
    } else {
        Outcome::Running
    }
}
