//! Filament-based gas dispersion.
//!
//! The source releases Gaussian puffs ("filaments") at a Poisson rate. Each
//! filament is carried by a spatially uniform wind made of a constant mean
//! plus an Ornstein-Uhlenbeck meander, jittered by per-filament turbulence,
//! and spreads diffusively (`sigma^2` grows linearly in time). The integrated
//! mass of a filament is constant, so its peak concentration falls as
//! `(sigma0 / sigma)^2`. Filaments bounce specularly off blocked cells and are
//! dropped once they drift a margin beyond the world edge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::world::{Crossing, GridWorld};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Filament {
    pub pos: Vec2,
    /// Current spatial standard deviation, meters.
    pub sigma: f64,
    /// Seconds since release.
    pub age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindState {
    pub mean_wind: Vec2,
    pub meander: Vec2,
    /// Per-filament jitter scale, m/s^(1/2).
    pub turb_sigma: f64,
}

/// Dispersion parameters. Defaults follow the reference gas-dispersion table
/// (`mu`, `sigma0`, `gamma`) and a weak 10 filaments/s source; the wind and
/// turbulence constants are tuned, not measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlumeParams {
    /// Concentration at the center of a fresh filament, ppm.
    pub mu: f64,
    /// Initial filament standard deviation, m.
    pub sigma0: f64,
    /// Growth rate of `sigma^2`, m^2/s.
    pub gamma: f64,
    /// Filaments per second.
    pub release_rate: f64,
    pub mean_wind: [f64; 2],
    /// OU mean-reversion rate of the meander, 1/s. Slow reversion keeps the
    /// plume swinging over tens of meters, so intermittency keeps rising
    /// with distance instead of leveling off a few meters out.
    pub ou_theta: f64,
    /// OU noise scale of the meander, m/s^(3/2).
    pub ou_zeta: f64,
    pub turb_sigma: f64,
    /// Filaments farther than this beyond the world edge are culled, m.
    pub cull_margin: f64,
    /// Readings below this are treated as "no gas", ppm.
    pub detection_threshold: f64,
    /// Simulated seconds the plume develops before robots depart.
    pub t_warm: f64,
    /// Ambient conditions of the reference dispersion setup. Recorded with
    /// results; they do not enter the 2-D puff model.
    pub ambient: AmbientConditions,
}

impl Default for PlumeParams {
    fn default() -> Self {
        Self {
            mu: 10.0,
            sigma0: 0.10,
            gamma: 0.001,
            release_rate: 10.0,
            mean_wind: [0.5, 0.0],
            ou_theta: 0.05,
            ou_zeta: 0.11,
            turb_sigma: 0.1,
            cull_margin: 2.0,
            detection_threshold: 0.1,
            t_warm: 60.0,
            ambient: AmbientConditions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbientConditions {
    pub pressure_atm: f64,
    pub temperature_k: f64,
    pub kinematic_viscosity: f64,
    pub air_density: f64,
    pub turbulent_kinetic_energy: f64,
    pub dissipation_rate: f64,
}

impl Default for AmbientConditions {
    fn default() -> Self {
        Self {
            pressure_atm: 1.0,
            temperature_k: 298.0,
            kinematic_viscosity: 1.529e-5,
            air_density: 1.196,
            turbulent_kinetic_energy: 3.75e-3,
            dissipation_rate: 1.25e-2,
        }
    }
}

impl PlumeParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.mu >= 0.0, "mu must be >= 0"),
            (self.sigma0 > 0.0, "sigma0 must be > 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.release_rate >= 0.0, "release_rate must be >= 0"),
            (self.ou_theta >= 0.0, "ou_theta must be >= 0"),
            (self.ou_zeta >= 0.0, "ou_zeta must be >= 0"),
            (self.turb_sigma >= 0.0, "turb_sigma must be >= 0"),
            (self.cull_margin >= 0.0, "cull_margin must be >= 0"),
            (self.detection_threshold >= 0.0, "detection_threshold must be >= 0"),
            (self.t_warm >= 0.0, "t_warm must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Parameter(format!("plume: {msg}")));
            }
        }
        Ok(())
    }
}

/// Live plume: filaments, wind and the random stream that drives them.
#[derive(Debug, Clone)]
pub struct PlumeState {
    pub filaments: Vec<Filament>,
    pub wind: WindState,
    pub params: PlumeParams,
    pub sim_time: f64,
    pub rng_seed: u64,
    rng: ChaCha8Rng,
}

impl PlumeState {
    pub fn new(params: PlumeParams, rng_seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            filaments: Vec::new(),
            wind: WindState {
                mean_wind: Vec2::from(params.mean_wind),
                meander: Vec2::ZERO,
                turb_sigma: params.turb_sigma,
            },
            params,
            sim_time: 0.0,
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        })
    }

    /// Advances the plume by `dt` seconds.
    pub fn step(&mut self, world: &GridWorld, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("plume step dt must be positive, got {dt}")));
        }
        let p = &self.params;

        let expected = p.release_rate * dt;
        let released = if expected > 0.0 {
            let poisson = Poisson::new(expected)
                .map_err(|e| Error::Parameter(format!("release rate: {e}")))?;
            poisson.sample(&mut self.rng) as usize
        } else {
            0
        };
        let source = world.source_pos();
        self.filaments.extend((0..released).map(|_| Filament {
            pos: source,
            sigma: p.sigma0,
            age: 0.0,
        }));

        let carry = (self.wind.mean_wind + self.wind.meander) * dt;
        let jitter = self.wind.turb_sigma * dt.sqrt();
        for f in &mut self.filaments {
            let kick = if jitter > 0.0 {
                let nx: f64 = StandardNormal.sample(&mut self.rng);
                let ny: f64 = StandardNormal.sample(&mut self.rng);
                Vec2::new(nx, ny) * jitter
            } else {
                Vec2::ZERO
            };
            f.pos = bounce(world, f.pos, f.pos + carry + kick);
            f.sigma = (f.sigma * f.sigma + p.gamma * dt).sqrt();
            f.age += dt;
        }

        let m = p.cull_margin;
        let (w, h) = (world.width_m(), world.height_m());
        self.filaments
            .retain(|f| f.pos.x >= -m && f.pos.y >= -m && f.pos.x <= w + m && f.pos.y <= h + m);

        // Exact OU transition; matches the Euler step for small dt and stays
        // stable for large ones.
        let theta = p.ou_theta;
        let decay = (-theta * dt).exp();
        let spread = if theta > 0.0 {
            p.ou_zeta * ((1.0 - decay * decay) / (2.0 * theta)).sqrt()
        } else {
            p.ou_zeta * dt.sqrt()
        };
        if spread > 0.0 {
            let nx: f64 = StandardNormal.sample(&mut self.rng);
            let ny: f64 = StandardNormal.sample(&mut self.rng);
            self.wind.meander = self.wind.meander * decay + Vec2::new(nx, ny) * spread;
        } else {
            self.wind.meander = self.wind.meander * decay;
        }

        self.sim_time += dt;
        Ok(())
    }

    /// Ground-truth concentration in ppm.
    pub fn concentration_at(&self, pos: Vec2) -> f64 {
        let (mu, s0) = (self.params.mu, self.params.sigma0);
        self.filaments
            .iter()
            .map(|f| {
                let s2 = f.sigma * f.sigma;
                mu * (s0 * s0 / s2) * (-(pos - f.pos).norm_sq() / (2.0 * s2)).exp()
            })
            .sum()
    }

    /// Ground-truth wind; zero inside blocked cells.
    pub fn wind_at(&self, world: &GridWorld, pos: Vec2) -> Vec2 {
        match world.cell_of(pos) {
            Ok(c) if world.is_blocked(c) => Vec2::ZERO,
            _ => self.wind.mean_wind + self.wind.meander,
        }
    }
}

/// Moves `from -> to`, reflecting specularly off blocked cells. Leaving the
/// world is not an obstruction.
fn bounce(world: &GridWorld, from: Vec2, to: Vec2) -> Vec2 {
    let (mut a, mut b) = (from, to);
    for _ in 0..4 {
        let Some((t, kind)) = world.first_obstruction(a, b, false) else {
            return b;
        };
        let hit = a + (b - a) * t;
        match kind {
            Crossing::Vertical => b.x = 2.0 * hit.x - b.x,
            Crossing::Horizontal => b.y = 2.0 * hit.y - b.y,
            // Started inside a blocked cell; leave it where it is.
            Crossing::Start => return a,
        }
        // Restart just before the face so the reflected leg begins in free space.
        let back = (t - 1e-9).max(0.0);
        a = a + (hit - a) * if t > 0.0 { back / t } else { 0.0 };
    }
    world.truncate_segment(a, b, 1e-6 * world.cell_size())
}
