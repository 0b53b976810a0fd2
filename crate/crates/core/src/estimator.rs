//! Shared source-probability map and the potential derived from it.
//!
//! A measurement first reweights the cells around the robot (local step): a
//! detection favors the upwind cone, a miss points toward the last place gas
//! was seen, and a miss with no history makes the neighborhood less likely.
//! The update then diffuses outward (global step) by relaxing every other
//! free cell toward the mean of its free 4-neighbors, so information flows
//! around walls but never through them.
//!
//! Every update renormalizes and keeps each cell at or above a probability
//! floor, so the potential `-ln p` stays finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::sensors::Measurement;
use crate::world::GridWorld;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    /// Likelihood weight for cells the reading points toward (> 1).
    pub w_hit: f64,
    /// Likelihood weight for cells the reading points away from (< 1).
    pub w_miss: f64,
    pub cone_half_angle_deg: f64,
    /// Radius of the local update neighborhood, m.
    pub neighborhood_radius: f64,
    /// Relaxation factor of the propagation sweeps.
    pub lambda: f64,
    pub n_prop: usize,
    /// Strength of the cone a miss draws toward the last detection, as an
    /// exponent on `w_hit` / `w_miss`. 1 uses the detection weights as they
    /// are; smaller values make a miss weaker evidence than a hit.
    pub recall_gain: f64,
    /// After the first detection, a miss also multiplies the cells within
    /// this radius of the reading by `w_miss`, m. 0 disables it.
    pub miss_radius: f64,
    /// Floor probability is `floor_scale / n_free`.
    pub floor_scale: f64,
    /// Readings at or above this count as detections, ppm. Set from the plume
    /// section of the experiment config.
    #[serde(skip)]
    pub detection_threshold: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            w_hit: 1.5,
            w_miss: 0.7,
            cone_half_angle_deg: 40.0,
            neighborhood_radius: 1.5,
            lambda: 0.3,
            n_prop: 2,
            recall_gain: 1.0,
            miss_radius: 0.0,
            floor_scale: 1e-8,
            detection_threshold: 0.1,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w_hit > 1.0
            && self.w_miss > 0.0
            && self.w_miss < 1.0
            && (0.0..=180.0).contains(&self.cone_half_angle_deg)
            && self.neighborhood_radius >= 0.0
            && (0.0..=1.0).contains(&self.lambda)
            && (0.0..=1.0).contains(&self.recall_gain)
            && (0.0..=self.neighborhood_radius).contains(&self.miss_radius)
            && self.floor_scale > 0.0
            && self.floor_scale < 1.0
            && self.detection_threshold >= 0.0;
        if !ok {
            return Err(Error::Parameter(format!("estimator parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Probability that each free cell hosts the source, indexed by free id.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    pub p: Vec<f64>,
    /// Position and time of the latest above-threshold reading.
    pub last_hit: Option<(Vec2, f64)>,
    pub floor: f64,
}

/// `phi = -ln p` per free cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub phi: Vec<f64>,
}

/// How a local update weights its neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalRule {
    /// Cells in the cone around `axis` get `toward`, the opposite cone
    /// `away`. Cells within `near_radius` are further multiplied by `near`.
    Cone { axis: Vec2, toward: f64, away: f64, near_radius: f64, near: f64 },
    /// Every neighborhood cell gets the same weight.
    Uniform(f64),
}

pub fn init_belief(world: &GridWorld, params: &EstimatorParams) -> BeliefMap {
    let n = world.n_free();
    BeliefMap {
        p: vec![1.0 / n as f64; n],
        last_hit: None,
        floor: params.floor_scale / n as f64,
    }
}

impl BeliefMap {
    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Free id of the most probable cell (lowest id on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.p.iter().enumerate() {
            if v > self.p[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.p)
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Picks the weighting rule a measurement implies.
pub fn local_rule(belief: &BeliefMap, m: &Measurement, params: &EstimatorParams, cell_size: f64) -> LocalRule {
    if m.conc >= params.detection_threshold {
        match (-m.wind).normalized() {
            Some(axis) => LocalRule::Cone { axis, toward: params.w_hit, away: params.w_miss, near_radius: 0.0, near: 1.0 },
            // No wind: the gas is here but the reading gives no direction.
            None => LocalRule::Uniform(params.w_hit),
        }
    } else {
        match belief.last_hit {
            Some((hit, _)) => match (hit - m.pos).normalized() {
                Some(axis) if hit.dist(m.pos) >= 0.5 * cell_size => LocalRule::Cone {
                    axis,
                    toward: params.w_hit.powf(params.recall_gain),
                    away: params.w_miss.powf(params.recall_gain),
                    near_radius: params.miss_radius,
                    near: params.w_miss,
                },
                _ if params.miss_radius > 0.0 => LocalRule::Cone {
                    axis: Vec2::new(1.0, 0.0),
                    toward: 1.0,
                    away: 1.0,
                    near_radius: params.miss_radius,
                    near: params.w_miss,
                },
                _ => LocalRule::Uniform(1.0),
            },
            None => LocalRule::Uniform(params.w_miss),
        }
    }
}

/// Weight the rule assigns to a cell whose center is offset `v` from the
/// measurement position.
pub fn rule_weight(rule: LocalRule, v: Vec2, params: &EstimatorParams) -> f64 {
    match rule {
        LocalRule::Uniform(w) => w,
        LocalRule::Cone { axis, toward, away, near_radius, near } => {
            let len = v.norm();
            let near = if near_radius > 0.0 && len <= near_radius { near } else { 1.0 };
            if len < 1e-12 {
                return near;
            }
            let cos_a = params.cone_half_angle_deg.to_radians().cos();
            let c = v.dot(axis) / len;
            near * if c >= cos_a {
                toward
            } else if -c >= cos_a {
                away
            } else {
                1.0
            }
        }
    }
}

/// Local step: reweights the neighborhood of `m.pos`, renormalizes and
/// applies the floor. Returns the free ids of the updated neighborhood.
pub fn local_update(
    belief: &mut BeliefMap,
    m: &Measurement,
    world: &GridWorld,
    params: &EstimatorParams,
) -> Result<Vec<usize>> {
    let center = world.cell_of(m.pos)?;
    if world.is_blocked(center) {
        return Err(Error::Geometry(format!("measurement at blocked position {}", m.pos)));
    }
    let rule = local_rule(belief, m, params, world.cell_size());
    let region = world.neighborhood_ids(center, params.neighborhood_radius);
    for &id in &region {
        let v = world.cell_center(world.free_cells()[id]) - m.pos;
        belief.p[id] *= rule_weight(rule, v, params);
    }
    if m.conc >= params.detection_threshold {
        belief.last_hit = Some((m.pos, m.time));
    }
    renormalize(&mut belief.p, belief.floor);
    Ok(region)
}

/// Global step: `n_prop` Jacobi sweeps relaxing cells outside `region`
/// toward their free 4-neighbor mean, then renormalization and floor.
pub fn propagate_global(belief: &mut BeliefMap, region: &[usize], world: &GridWorld, params: &EstimatorParams) {
    relax(&mut belief.p, region, world, params.lambda, params.n_prop);
    renormalize(&mut belief.p, belief.floor);
}

/// The unnormalized relaxation sweeps of [`propagate_global`].
pub fn relax(p: &mut Vec<f64>, region: &[usize], world: &GridWorld, lambda: f64, sweeps: usize) {
    if lambda == 0.0 || sweeps == 0 {
        return;
    }
    let mut frozen = vec![false; p.len()];
    for &id in region {
        frozen[id] = true;
    }
    let mut next = p.clone();
    for _ in 0..sweeps {
        for id in 0..p.len() {
            if frozen[id] {
                continue;
            }
            let nb = world.neighbors4(id);
            if nb.is_empty() {
                continue;
            }
            let mean = nb.iter().map(|&j| p[j as usize]).sum::<f64>() / nb.len() as f64;
            next[id] = (1.0 - lambda) * p[id] + lambda * mean;
        }
        std::mem::swap(p, &mut next);
        next.copy_from_slice(p);
    }
}

/// Scales `p` to unit sum, then lifts cells below `floor` up to it, taking
/// the mass proportionally from the rest. Ratios among unclamped cells are
/// preserved.
pub fn renormalize(p: &mut [f64], floor: f64) {
    let s: f64 = p.iter().sum();
    if s > 0.0 && s.is_finite() {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
        return;
    }
    let mut clamped = vec![false; p.len()];
    loop {
        let mut newly = 0;
        for (v, c) in p.iter_mut().zip(clamped.iter_mut()) {
            if !*c && *v < floor {
                *c = true;
                *v = floor;
                newly += 1;
            }
        }
        if newly == 0 {
            break;
        }
        let n_clamped = clamped.iter().filter(|&&c| c).count();
        let free_mass: f64 = p.iter().zip(&clamped).filter(|(_, &c)| !c).map(|(v, _)| v).sum();
        let target = 1.0 - n_clamped as f64 * floor;
        if free_mass <= 0.0 {
            break;
        }
        let k = target / free_mass;
        for (v, &c) in p.iter_mut().zip(&clamped) {
            if !c {
                *v *= k;
            }
        }
    }
}

pub fn potential_of(belief: &BeliefMap) -> PotentialField {
    PotentialField {
        phi: belief.p.iter().map(|&v| -v.ln()).collect(),
    }
}

impl PotentialField {
    /// Plants an arbitrary field by evaluating `f` at each free cell center.
    pub fn from_fn(world: &GridWorld, f: impl Fn(Vec2) -> f64) -> Self {
        Self {
            phi: world.free_cells().iter().map(|&c| f(world.cell_center(c))).collect(),
        }
    }

    /// Bilinear interpolation of the cell-centered values. Blocked cells drop
    /// out of the stencil; positions beyond the outermost centers are clamped.
    pub fn value_at(&self, world: &GridWorld, pos: Vec2) -> f64 {
        let cs = world.cell_size();
        let (u, v) = (pos.x / cs - 0.5, pos.y / cs - 0.5);
        let (i0, fx, i1) = stencil_axis(u, world.cols());
        let (j0, fy, j1) = stencil_axis(v, world.rows());
        let corners = [
            (i0, j0, (1.0 - fx) * (1.0 - fy)),
            (i1, j0, fx * (1.0 - fy)),
            (i0, j1, (1.0 - fx) * fy),
            (i1, j1, fx * fy),
        ];
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (i, j, w) in corners {
            if w == 0.0 {
                continue;
            }
            if let Some(id) = world.free_id(crate::world::CellIndex::new(i, j)) {
                acc += w * self.phi[id];
                wsum += w;
            }
        }
        if wsum > 1e-12 {
            return acc / wsum;
        }
        world
            .cell_of(pos)
            .ok()
            .and_then(|c| world.free_id(c))
            .map_or(f64::NAN, |id| self.phi[id])
    }

    /// Central-difference gradient of the interpolated field with spacing
    /// `h`. An axis whose offset point is blocked or out of bounds falls back
    /// to a one-sided difference; with both sides blocked it is zero.
    pub fn grad(&self, world: &GridWorld, pos: Vec2, h: f64) -> Vec2 {
        let here = self.value_at(world, pos);
        let axis = |e: Vec2| {
            let (fwd, back) = (pos + e * h, pos - e * h);
            match (world.is_free(fwd), world.is_free(back)) {
                (true, true) => (self.value_at(world, fwd) - self.value_at(world, back)) / (2.0 * h),
                (true, false) => (self.value_at(world, fwd) - here) / h,
                (false, true) => (here - self.value_at(world, back)) / h,
                (false, false) => 0.0,
            }
        };
        Vec2::new(axis(Vec2::new(1.0, 0.0)), axis(Vec2::new(0.0, 1.0)))
    }
}

pub fn grad_phi(field: &PotentialField, pos: Vec2, h: f64, world: &GridWorld) -> Vec2 {
    field.grad(world, pos, h)
}

fn stencil_axis(u: f64, n: usize) -> (usize, f64, usize) {
    if n == 1 {
        return (0, 0.0, 0);
    }
    let i0 = (u.floor().max(0.0) as usize).min(n - 2);
    let f = (u - i0 as f64).clamp(0.0, 1.0);
    (i0, f, i0 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::CellIndex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn meas(pos: Vec2, conc: f64, wind: Vec2) -> Measurement {
        Measurement { conc, wind, pos, time: 0.0 }
    }

    #[test]
    fn uniform_prior() {
        let params = EstimatorParams::default();
        let w = GridWorld::open(10.0, 10.0, 1.0, Vec2::new(0.5, 0.5)).unwrap();
        let b = init_belief(&w, &params);
        assert!(b.p.iter().all(|&v| v == 0.01));
        assert!(b.last_hit.is_none());
        let one = GridWorld::open(1.0, 1.0, 1.0, Vec2::new(0.5, 0.5)).unwrap();
        assert_eq!(init_belief(&one, &params).p, vec![1.0]);
        let odd = GridWorld::open(7.0, 3.0, 1.0, Vec2::new(0.5, 0.5)).unwrap();
        assert!((init_belief(&odd, &params).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detection_favors_upwind_side() {
        let params = EstimatorParams::default();
        let w = GridWorld::open(10.0, 10.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
        let mut b = init_belief(&w, &params);
        let before = b.p.clone();
        let pos = Vec2::new(5.05, 5.03);
        local_update(&mut b, &meas(pos, 1.0, Vec2::new(1.0, 0.0)), &w, &params).unwrap();
        let mut raised = 0;
        for (id, c) in w.free_cells().iter().enumerate() {
            if b.p[id] > before[id] * 1.0001 {
                raised += 1;
                let cc = w.cell_center(*c);
                assert!(cc.x <= pos.x, "raised cell {cc} downwind of {pos}");
                assert!(cc.dist(pos) <= params.neighborhood_radius + 0.2);
            }
        }
        assert!(raised > 10);
        assert_eq!(b.last_hit, Some((pos, 0.0)));
    }

    #[test]
    fn miss_without_history_lowers_own_cell() {
        let params = EstimatorParams::default();
        let w = GridWorld::open(10.0, 10.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
        let mut b = init_belief(&w, &params);
        let pos = Vec2::new(5.05, 5.05);
        local_update(&mut b, &meas(pos, 0.0, Vec2::new(1.0, 0.0)), &w, &params).unwrap();
        let own = w.free_id(w.cell_of(pos).unwrap()).unwrap();
        let far = w.free_id(CellIndex::new(0, 0)).unwrap();
        assert!(b.p[own] < b.p[far]);
        assert!(b.last_hit.is_none());
    }

    #[test]
    fn miss_with_history_points_at_last_hit() {
        let params = EstimatorParams::default();
        let w = GridWorld::open(10.0, 10.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
        let mut b = init_belief(&w, &params);
        b.last_hit = Some((Vec2::new(5.0, 9.0), 0.0));
        let pos = Vec2::new(5.0, 5.0);
        let before = b.p.clone();
        local_update(&mut b, &meas(pos, 0.0, Vec2::new(1.0, 0.0)), &w, &params).unwrap();
        for (id, c) in w.free_cells().iter().enumerate() {
            if b.p[id] > before[id] * 1.0001 {
                assert!(w.cell_center(*c).y > pos.y);
            }
        }
    }

    #[test]
    fn blocked_measurement_is_error() {
        let params = EstimatorParams::default();
        let w = GridWorld::parse("2 1 1\nS#\n").unwrap();
        let mut b = init_belief(&w, &params);
        let r = local_update(&mut b, &meas(Vec2::new(1.5, 0.5), 1.0, Vec2::new(1.0, 0.0)), &w, &params);
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    /// Scalar re-implementation of the cone rule over the full cell list.
    fn cone_oracle(p: &mut [f64], w: &GridWorld, pos: Vec2, upwind: Vec2, prm: &EstimatorParams) {
        let ax = upwind / upwind.norm();
        let half = prm.cone_half_angle_deg.to_radians();
        for (id, c) in w.free_cells().iter().enumerate() {
            let v = w.cell_center(*c) - pos;
            let cp = w.cell_center(w.cell_of(pos).unwrap());
            if w.cell_center(*c).dist(cp) > prm.neighborhood_radius + 1e-9 || v.norm() < 1e-12 {
                continue;
            }
            let ang = (v.dot(ax) / v.norm()).clamp(-1.0, 1.0).acos();
            if ang <= half + 1e-12 {
                p[id] *= prm.w_hit;
            } else if std::f64::consts::PI - ang <= half + 1e-12 {
                p[id] *= prm.w_miss;
            }
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
    }

    #[test]
    fn repeated_detections_match_oracle() {
        let params = EstimatorParams::default();
        let w = GridWorld::open(8.0, 8.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
        let mut b = init_belief(&w, &params);
        let mut oracle = b.p.clone();
        let pos = Vec2::new(4.03, 3.91);
        let wind = Vec2::new(0.8, 0.6);
        for _ in 0..2 {
            local_update(&mut b, &meas(pos, 2.0, wind), &w, &params).unwrap();
            cone_oracle(&mut oracle, &w, pos, -wind, &params);
        }
        for (a, o) in b.p.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-15, "{a} vs {o}");
        }
    }

    #[test]
    fn propagation_fixed_point_and_identity() {
        let mut params = EstimatorParams::default();
        let w = GridWorld::parse("4 3 1\n.#..\n.#..\nS...\n").unwrap();
        let mut b = init_belief(&w, &params);
        let uni = b.p.clone();
        propagate_global(&mut b, &[], &w, &params);
        for (a, u) in b.p.iter().zip(&uni) {
            assert!((a - u).abs() < 1e-15);
        }
        params.lambda = 0.0;
        b.p = vec![0.1, 0.2, 0.05, 0.15, 0.1, 0.1, 0.1, 0.05, 0.05, 0.1];
        let before = b.p.clone();
        propagate_global(&mut b, &[], &w, &params);
        for (a, u) in b.p.iter().zip(&before) {
            assert!((a - u).abs() < 1e-15);
        }
    }

    #[test]
    fn single_sweep_matches_dense_stencil() {
        let w = GridWorld::open(5.0, 5.0, 1.0, Vec2::new(0.5, 0.5)).unwrap();
        let n = 25;
        let base = 1.0 / 30.0;
        let excess = 5.0 / 30.0;
        let center = w.free_id(CellIndex::new(2, 2)).unwrap();
        let mut p = vec![base; n];
        p[center] += excess;

        // Dense 5x5 stencil oracle with explicit boundary handling.
        let mut grid = [[base; 5]; 5];
        grid[2][2] += excess;
        let mut out = grid;
        for r in 0..5i32 {
            for c in 0..5i32 {
                if (r, c) == (2, 2) {
                    continue;
                }
                let mut s = 0.0;
                let mut k = 0.0;
                for (dr, dc) in [(0, 1), (0, -1), (1, 0), (-1, 0)] {
                    let (rr, cc) = (r + dr, c + dc);
                    if (0..5).contains(&rr) && (0..5).contains(&cc) {
                        s += grid[rr as usize][cc as usize];
                        k += 1.0;
                    }
                }
                out[r as usize][c as usize] = 0.5 * grid[r as usize][c as usize] + 0.5 * s / k;
            }
        }
        relax(&mut p, &[center], &w, 0.5, 1);
        for (id, cell) in w.free_cells().iter().enumerate() {
            assert!((p[id] - out[cell.row][cell.col]).abs() < 1e-15);
        }
        // Each 4-neighbor gains lambda/4 of the excess.
        let east = w.free_id(CellIndex::new(3, 2)).unwrap();
        assert!((p[east] - base - 0.5 / 4.0 * excess).abs() < 1e-15);
    }

    #[test]
    fn relaxation_does_not_cross_walls() {
        // Two rooms joined far away through a long corridor; three sweeps
        // cannot reach across.
        let mut text = String::from("21 8 1\n");
        text.push_str(".....................\n");
        for _ in 0..6 {
            text.push_str("..........#..........\n");
        }
        text.push_str("S.........#..........\n");
        let w = GridWorld::parse(&text).unwrap();
        let params = EstimatorParams::default();
        let mut b = init_belief(&w, &params);
        let hot = w.free_id(CellIndex::new(9, 0)).unwrap();
        b.p[hot] *= 50.0;
        renormalize(&mut b.p, b.floor);
        let before = b.p.clone();
        relax(&mut b.p, &[hot], &w, 0.3, 3);
        for (id, c) in w.free_cells().iter().enumerate() {
            if c.col > 10 {
                assert_eq!(b.p[id], before[id], "cell {c:?} changed across the wall");
            }
        }
    }

    #[test]
    fn potential_examples() {
        let b = BeliefMap { p: vec![0.01; 100], last_hit: None, floor: 1e-10 };
        let f = potential_of(&b);
        assert!((f.phi[0] - 4.6052).abs() < 1e-4);
        assert!((f.phi[7] - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn linear_field_gradient_is_exact() {
        let w = GridWorld::open(6.0, 6.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
        let a = 1.7;
        let f = PotentialField::from_fn(&w, |p| a * p.x);
        let g = f.grad(&w, Vec2::new(3.03, 2.51), 0.2);
        assert!((g.x - a).abs() < 1e-6 && g.y.abs() < 1e-6, "{g}");
        let flat = PotentialField::from_fn(&w, |_| 3.0);
        assert_eq!(flat.grad(&w, Vec2::new(2.0, 2.0), 0.1), Vec2::ZERO);
    }

    #[test]
    fn one_sided_and_blocked_gradients() {
        // Column 1 is a wall: the point in column 0 has its +x probe blocked.
        let w = GridWorld::parse("3 3 1\n.#.\n.#.\nS..\n").unwrap();
        let f = PotentialField::from_fn(&w, |p| 2.0 * p.y);
        let g = f.grad(&w, Vec2::new(0.5, 1.5), 0.6);
        assert!(g.x.abs() < 1e-12);
        assert!((g.y - 2.0).abs() < 1e-9, "{g}");
        // A 1-wide dead end: both x probes blocked -> zero x component.
        let w2 = GridWorld::parse("3 2 1\n#.#\n.S.\n").unwrap();
        let f2 = PotentialField::from_fn(&w2, |p| p.x + p.y);
        let g2 = f2.grad(&w2, Vec2::new(1.5, 1.5), 0.6);
        assert_eq!(g2.x, 0.0);
    }

    #[test]
    fn renormalize_keeps_floor_and_ratios() {
        let mut p = vec![1e-20, 0.3, 0.6, 1e-15];
        renormalize(&mut p, 1e-3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&v| v >= 1e-3));
        assert!((p[2] / p[1] - 2.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn updates_keep_normalization_floor_and_order(seed in 0u64..10_000) {
            let params = EstimatorParams::default();
            let w = GridWorld::open(6.0, 6.0, 0.2, Vec2::new(0.1, 0.1)).unwrap();
            let mut b = init_belief(&w, &params);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let pos = Vec2::new(rng.random_range(0.0..6.0), rng.random_range(0.0..6.0));
                let conc = if rng.random_bool(0.3) { 1.0 } else { 0.0 };
                let wind = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let region = local_update(&mut b, &meas(pos, conc, wind), &w, &params).unwrap();
                propagate_global(&mut b, &region, &w, &params);
                prop_assert!((b.sum() - 1.0).abs() < 1e-9);
                prop_assert!(b.p.iter().all(|&v| v >= b.floor));
            }
            let f = potential_of(&b);
            for i in 0..b.p.len().min(50) {
                for j in 0..b.p.len().min(50) {
                    prop_assert_eq!(b.p[i] > b.p[j], f.phi[i] < f.phi[j]);
                }
            }
            prop_assert!(f.phi.iter().all(|v| v.is_finite() && *v <= -b.floor.ln() + 1e-9));
        }
    }
}
