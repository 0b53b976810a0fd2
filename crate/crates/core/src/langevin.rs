//! Langevin active sensing for a single robot.
//!
//! Each planning step is one Euler-Maruyama step of the overdamped Langevin
//! diffusion on the potential field:
//!
//! ```text
//! x' = x - eta * grad(phi)(x) + sqrt(2 * eta * tau) * xi,   xi ~ N(0, I)
//! ```
//!
//! with the drift clamped to the robot's top speed, the whole displacement
//! capped at `noise_cap * v_max * dt`, and the move cut short in front of
//! walls.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PotentialField;
use crate::geom::Vec2;
use crate::world::GridWorld;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: usize,
    pub pos: Vec2,
    /// Temperature (role). Lower is more exploitative.
    pub tau: f64,
    pub trajectory: Vec<(f64, Vec2)>,
    pub path_len: f64,
}

impl RobotState {
    pub fn new(id: usize, pos: Vec2, tau: f64) -> Self {
        Self {
            id,
            pos,
            tau,
            trajectory: vec![(0.0, pos)],
            path_len: 0.0,
        }
    }

    pub fn start(&self) -> Vec2 {
        self.trajectory.first().map_or(self.pos, |&(_, p)| p)
    }

    pub fn clock(&self) -> f64 {
        self.trajectory.last().map_or(0.0, |&(t, _)| t)
    }

    /// Records a move that took `dt` seconds.
    pub fn advance(&mut self, to: Vec2, dt: f64) {
        self.path_len += self.pos.dist(to);
        self.pos = to;
        let t = self.clock() + dt;
        self.trajectory.push((t, to));
    }
}

/// Sum of segment lengths along a polyline.
pub fn polyline_len(points: impl IntoIterator<Item = Vec2>) -> f64 {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else { return 0.0 };
    let mut acc = 0.0;
    for p in it {
        acc += prev.dist(p);
        prev = p;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Step size, m^2 per unit potential.
    pub eta: f64,
    /// Finite-difference spacing for the gradient, m.
    pub h: f64,
    /// Top speed, m/s.
    pub v_max: f64,
    /// Seconds per planning step.
    pub dt: f64,
    /// Total displacement per step is capped at `noise_cap * v_max * dt`.
    pub noise_cap: f64,
    /// Stand-off from walls when a move is truncated, in cell sizes.
    pub wall_margin: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            eta: 0.02,
            h: 0.2,
            v_max: 0.5,
            dt: 0.5,
            noise_cap: 2.0,
            wall_margin: 0.01,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.h > 0.0 && self.v_max > 0.0 && self.dt > 0.0 && self.noise_cap > 0.0)
            || self.wall_margin < 0.0
        {
            return Err(Error::Parameter(format!("planner parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn max_step(&self) -> f64 {
        self.v_max * self.dt
    }
}

/// One unconstrained Euler-Maruyama update.
pub fn euler_maruyama(x: Vec2, grad: Vec2, eta: f64, tau: f64, xi: Vec2) -> Vec2 {
    x - grad * eta + xi * (2.0 * eta * tau).sqrt()
}

/// Drift `-eta * grad`, rescaled so that it covers at most `v_max * dt`.
pub fn clamped_drift(grad: Vec2, params: &PlannerParams) -> Vec2 {
    let drift = grad * -params.eta;
    let n = drift.norm();
    let lim = params.max_step();
    if n > lim {
        drift * (lim / n)
    } else {
        drift
    }
}

pub fn standard_normal2<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    Vec2::new(x, y)
}

/// Moves `robot` one planning step down the potential, with thermal noise at
/// its temperature.
pub fn langevin_step<R: Rng + ?Sized>(
    robot: &mut RobotState,
    field: &PotentialField,
    params: &PlannerParams,
    world: &GridWorld,
    rng: &mut R,
) -> Result<()> {
    let grad = field.grad(world, robot.pos, params.h);
    if !grad.is_finite() {
        return Err(Error::Internal(format!("non-finite potential gradient at {}", robot.pos)));
    }
    let drift = clamped_drift(grad, params);
    let noise = standard_normal2(rng) * (2.0 * params.eta * robot.tau.max(0.0)).sqrt();
    let mut step = drift + noise;
    let cap = params.noise_cap * params.max_step();
    let len = step.norm();
    if len > cap {
        step = step * (cap / len);
    }
    let target = world.truncate_segment(robot.pos, robot.pos + step, params.wall_margin * world.cell_size());
    robot.advance(target, params.dt);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world() -> GridWorld {
        GridWorld::open(20.0, 10.0, 0.2, Vec2::new(0.1, 0.1)).unwrap()
    }

    #[test]
    fn cold_robot_on_flat_field_stays() {
        let w = world();
        let field = PotentialField::from_fn(&w, |_| 2.0);
        let mut r = RobotState::new(0, Vec2::new(5.0, 5.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        langevin_step(&mut r, &field, &PlannerParams::default(), &w, &mut rng).unwrap();
        assert_eq!(r.pos, Vec2::new(5.0, 5.0));
        assert_eq!(r.trajectory.len(), 2);
        assert_eq!(r.path_len, 0.0);
    }

    #[test]
    fn cold_robot_follows_linear_drift() {
        let w = world();
        let a = 2.0;
        let field = PotentialField::from_fn(&w, |p| a * p.x);
        let params = PlannerParams::default();
        let mut r = RobotState::new(0, Vec2::new(10.03, 5.01), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        langevin_step(&mut r, &field, &params, &w, &mut rng).unwrap();
        let expect = Vec2::new(10.03 - params.eta * a, 5.01);
        assert!(r.pos.dist(expect) < 1e-9, "{} vs {expect}", r.pos);
    }

    #[test]
    fn steep_ramp_moves_exactly_top_speed() {
        let w = world();
        let field = PotentialField::from_fn(&w, |p| 1e3 * p.x);
        let params = PlannerParams::default();
        let start = Vec2::new(10.0, 5.0);
        let mut r = RobotState::new(0, start, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        langevin_step(&mut r, &field, &params, &w, &mut rng).unwrap();
        assert!((r.pos.dist(start) - params.v_max * params.dt).abs() < 1e-12);
        assert!(r.pos.x < start.x);
    }

    #[test]
    fn displacement_never_exceeds_cap_and_stays_free() {
        let w = GridWorld::parse("6 4 1\n......\n..##..\n..##..\nS.....\n").unwrap();
        let field = PotentialField::from_fn(&w, |p| (p.x - 3.0).powi(2));
        let params = PlannerParams { eta: 0.5, ..PlannerParams::default() };
        let mut r = RobotState::new(0, Vec2::new(0.5, 2.5), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let before = r.pos;
            langevin_step(&mut r, &field, &params, &w, &mut rng).unwrap();
            assert!(before.dist(r.pos) <= params.noise_cap * params.max_step() + 1e-12);
            assert!(w.is_free(r.pos), "{}", r.pos);
        }
        let recomputed = polyline_len(r.trajectory.iter().map(|&(_, p)| p));
        assert!((recomputed - r.path_len).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let w = world();
        let field = PotentialField::from_fn(&w, |p| (p.x - 4.0).powi(2) + p.y);
        let run = |seed| {
            let mut r = RobotState::new(0, Vec2::new(10.0, 5.0), 0.3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                langevin_step(&mut r, &field, &PlannerParams::default(), &w, &mut rng).unwrap();
            }
            r
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4).pos, run(5).pos);
    }
}
