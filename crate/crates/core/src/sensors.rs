//! Noisy gas and wind readings taken from the ground-truth plume.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::plume::PlumeState;
use crate::world::GridWorld;

/// One reading: concentration (ppm) and wind vector (m/s) at a place and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub conc: f64,
    pub wind: Vec2,
    pub pos: Vec2,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    /// Relative (multiplicative) concentration noise std.
    pub conc_rel_std: f64,
    /// Wind direction noise std, degrees.
    pub wind_dir_std_deg: f64,
    /// Relative wind speed noise std.
    pub wind_speed_rel_std: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            conc_rel_std: 0.05,
            wind_dir_std_deg: 5.0,
            wind_speed_rel_std: 0.05,
        }
    }
}

impl SensorNoise {
    pub fn noiseless() -> Self {
        Self {
            conc_rel_std: 0.0,
            wind_dir_std_deg: 0.0,
            wind_speed_rel_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conc_rel_std < 0.0 || self.wind_dir_std_deg < 0.0 || self.wind_speed_rel_std < 0.0 {
            return Err(Error::Parameter("sensor noise stds must be >= 0".into()));
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).map(|n| n.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    }
}

pub fn sense<R: Rng + ?Sized>(
    plume: &PlumeState,
    world: &GridWorld,
    pos: Vec2,
    time: f64,
    noise: &SensorNoise,
    rng: &mut R,
) -> Result<Measurement> {
    if !world.is_free(pos) {
        return Err(Error::Geometry(format!("cannot sense at blocked position {pos}")));
    }
    let truth = plume.concentration_at(pos);
    let conc = (truth * (1.0 + gaussian(noise.conc_rel_std, rng))).max(0.0);

    let angle = gaussian(noise.wind_dir_std_deg.to_radians(), rng);
    let scale = 1.0 + gaussian(noise.wind_speed_rel_std, rng);
    let wind = plume.wind_at(world, pos).rotated(angle) * scale;

    Ok(Measurement { conc, wind, pos, time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plume::{Filament, PlumeParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (GridWorld, PlumeState) {
        let world = GridWorld::open(10.0, 10.0, 0.2, Vec2::new(1.1, 5.1)).unwrap();
        let mut plume = PlumeState::new(PlumeParams { mean_wind: [1.0, 0.3], ..PlumeParams::default() }, 3).unwrap();
        plume.filaments.push(Filament { pos: Vec2::new(4.0, 5.0), sigma: 0.4, age: 10.0 });
        (world, plume)
    }

    #[test]
    fn noiseless_is_lookup() {
        let (world, plume) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = Vec2::new(4.2, 5.1);
        let m = sense(&plume, &world, pos, 2.0, &SensorNoise::noiseless(), &mut rng).unwrap();
        assert_eq!(m.conc, plume.concentration_at(pos));
        assert_eq!(m.wind, plume.wind_at(&world, pos));
        assert_eq!((m.pos, m.time), (pos, 2.0));
    }

    #[test]
    fn zero_truth_stays_zero() {
        let (world, mut plume) = setup();
        plume.filaments.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = SensorNoise { conc_rel_std: 0.5, ..SensorNoise::default() };
        for _ in 0..100 {
            let m = sense(&plume, &world, Vec2::new(3.0, 3.0), 0.0, &noise, &mut rng).unwrap();
            assert_eq!(m.conc, 0.0);
        }
    }

    #[test]
    fn blocked_position_is_error() {
        let world = GridWorld::parse("2 1 1\nS#\n").unwrap();
        let plume = PlumeState::new(PlumeParams::default(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = sense(&plume, &world, Vec2::new(1.5, 0.5), 0.0, &SensorNoise::default(), &mut rng);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn multiplicative_noise_is_unbiased() {
        let (world, plume) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pos = Vec2::new(4.1, 5.0);
        let truth = plume.concentration_at(pos);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sense(&plume, &world, pos, 0.0, &SensorNoise::default(), &mut rng).unwrap().conc)
            .sum::<f64>()
            / n as f64;
        assert!((mean - truth).abs() / truth < 0.01, "{mean} vs {truth}");
    }

    #[test]
    fn deterministic_per_seed() {
        let (world, plume) = setup();
        let pos = Vec2::new(4.1, 5.0);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sense(&plume, &world, pos, 0.0, &SensorNoise::default(), &mut rng).unwrap()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
