//! Filament plume statistics.

use proptest::prelude::*;
use sniffy_core::plume::{Filament, PlumeParams, PlumeState};
use sniffy_core::{GridWorld, Vec2};

fn long_hall() -> GridWorld {
    GridWorld::open(250.0, 10.0, 1.0, Vec2::new(10.5, 5.5)).unwrap()
}

#[test]
fn release_counts_are_poisson_and_ride_the_wind() {
    let world = long_hall();
    let params = PlumeParams {
        mean_wind: [1.0, 0.0],
        turb_sigma: 0.0,
        ou_zeta: 0.0,
        release_rate: 10.0,
        ..PlumeParams::default()
    };
    let reps = 200;
    let mut counts = Vec::with_capacity(reps);
    for seed in 0..reps as u64 {
        let mut plume = PlumeState::new(params.clone(), seed).unwrap();
        plume.step(&world, 100.0).unwrap();
        for f in &plume.filaments {
            assert_eq!(f.pos.y, 5.5);
            assert!((f.pos.x - 110.5).abs() < 1e-9);
        }
        counts.push(plume.filaments.len() as f64);
    }
    let n = reps as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 1000.0).abs() < 3.0 * (1000.0 / n).sqrt(), "mean count {mean}");
    // Poisson dispersion: the sample variance of 200 draws is within about
    // 20% of the mean.
    assert!((var / 1000.0 - 1.0).abs() < 0.3, "variance {var}");
}

#[test]
fn wind_time_average_is_the_mean_wind() {
    let world = long_hall();
    let params = PlumeParams { release_rate: 0.0, ..PlumeParams::default() };
    let (theta, zeta, dt) = (params.ou_theta, params.ou_zeta, 0.5);
    let mut plume = PlumeState::new(params.clone(), 3).unwrap();
    let n = 10_000;
    let mut acc = Vec2::ZERO;
    for _ in 0..n {
        plume.step(&world, dt).unwrap();
        acc = acc + plume.wind_at(&world, Vec2::new(50.0, 5.0));
    }
    let avg = acc * (1.0 / n as f64);
    // Stationary variance and lag-one correlation of the sampled OU process
    // give the standard error of its time average.
    let var = zeta * zeta / (2.0 * theta);
    let rho = (-theta * dt).exp();
    let se = (var * (1.0 + rho) / (1.0 - rho) / n as f64).sqrt();
    let mean = Vec2::from(params.mean_wind);
    assert!((avg.x - mean.x).abs() < 3.0 * se, "{avg} vs {mean}, se {se}");
    assert!((avg.y - mean.y).abs() < 3.0 * se, "{avg} vs {mean}, se {se}");
}

#[test]
fn filaments_stay_out_of_walls() {
    let text = "12 8 0.5\n\
                ........................\n\
                ........................\n\
                ......######............\n\
                ......#..........#......\n\
                ......#..S.......#......\n\
                ......#..........#......\n\
                ......######.....#......\n\
                .................#......\n\
                ........................\n\
                ........................\n\
                ..........#########.....\n\
                ........................\n\
                ........................\n\
                ........................\n\
                ........................\n\
                ........................\n";
    let world = GridWorld::parse(text).unwrap();
    let params = PlumeParams { turb_sigma: 0.4, ou_zeta: 0.6, ..PlumeParams::default() };
    let mut plume = PlumeState::new(params, 9).unwrap();
    for _ in 0..400 {
        plume.step(&world, 0.5).unwrap();
        for f in &plume.filaments {
            if world.in_bounds(f.pos) {
                assert!(world.is_free(f.pos), "filament at {} inside a wall", f.pos);
            }
        }
    }
}

proptest! {
    #[test]
    fn concentration_is_nonnegative_and_linear_in_mu(
        fils in prop::collection::vec((0.0f64..20.0, 0.0f64..10.0, 0.05f64..2.0), 0..30),
        qx in -5.0f64..25.0, qy in -5.0f64..15.0, mu in 0.0f64..50.0,
    ) {
        let mk = |mu: f64| {
            let mut p = PlumeState::new(PlumeParams { mu, ..PlumeParams::default() }, 0).unwrap();
            p.filaments = fils.iter().map(|&(x, y, s)| Filament { pos: Vec2::new(x, y), sigma: s, age: 0.0 }).collect();
            p
        };
        let q = Vec2::new(qx, qy);
        let c1 = mk(1.0).concentration_at(q);
        let c = mk(mu).concentration_at(q);
        prop_assert!(c >= 0.0);
        prop_assert!((c - mu * c1).abs() <= 1e-9 * (1.0 + c));
    }
}
