//! Fixtures shared by the benchmarks.

use sniffy_core::estimator::{init_belief, BeliefMap, EstimatorParams};
use sniffy_core::{GridWorld, Vec2};

/// The 40 m x 24 m open hall at 0.2 m cells.
pub fn hall() -> GridWorld {
    GridWorld::open(40.0, 24.0, 0.2, Vec2::new(5.1, 12.1)).expect("valid world")
}

/// A belief with a bump near the source so the map is not uniform.
pub fn bumpy_belief(world: &GridWorld) -> BeliefMap {
    let mut b = init_belief(world, &EstimatorParams::default());
    let src = world.source_pos();
    for (p, c) in b.p.iter_mut().zip(world.free_cells()) {
        let d = world.cell_center(*c).dist(src);
        *p *= 1.0 + 5.0 * (-d / 4.0).exp();
    }
    let s: f64 = b.p.iter().sum();
    b.p.iter_mut().for_each(|v| *v /= s);
    b
}
