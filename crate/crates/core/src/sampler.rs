//! One-dimensional Langevin chains and replica exchange on analytic
//! potentials. Used to check the sampler against its Gibbs law.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::team::exchange;

/// One Euler-Maruyama step in 1-D.
pub fn langevin_1d<R: Rng + ?Sized>(x: f64, grad: f64, eta: f64, tau: f64, rng: &mut R) -> f64 {
    let xi: f64 = StandardNormal.sample(rng);
    x - eta * grad + (2.0 * eta * tau).sqrt() * xi
}

/// `B (x^2 - 1)^2 + c (x^3 - 3x)`. With `c > 0` the well near `+1` is the
/// deeper one, by `4c`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleWell {
    pub b: f64,
    pub c: f64,
}

impl DoubleWell {
    pub fn symmetric() -> Self {
        Self { b: 1.0, c: 0.0 }
    }

    /// Well depth difference `depth_gap`, and barrier `barrier` measured
    /// from the shallow well.
    pub fn asymmetric(barrier: f64, depth_gap: f64) -> Self {
        let c = depth_gap / 4.0;
        let (mut lo, mut hi) = (1e-6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (Self { b: mid, c }).barrier_from_shallow() < barrier {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self { b: 0.5 * (lo + hi), c }
    }

    pub fn phi(&self, x: f64) -> f64 {
        let q = x * x - 1.0;
        self.b * q * q + self.c * (x * x * x - 3.0 * x)
    }

    pub fn grad(&self, x: f64) -> f64 {
        4.0 * self.b * x * (x * x - 1.0) + 3.0 * self.c * (x * x - 1.0)
    }

    /// Stationary points: the roots of `(x^2 - 1)(4 B x + 3 c)` are `x = -1`,
    /// `x = 1` and the saddle `-3c / 4B`, which lies between the wells
    /// whenever `3c < 4B`.
    pub fn saddle(&self) -> f64 {
        -3.0 * self.c / (4.0 * self.b)
    }

    pub fn shallow_min(&self) -> f64 {
        if self.c >= 0.0 { -1.0 } else { 1.0 }
    }

    pub fn deep_min(&self) -> f64 {
        -self.shallow_min()
    }

    pub fn barrier_from_shallow(&self) -> f64 {
        self.phi(self.saddle()) - self.phi(self.shallow_min())
    }
}

/// Trapezoid integral of `f` over `[a, b]` with `n` panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

/// Gibbs probability mass of `[lo, hi]` under `exp(-phi / tau)` normalized
/// over `[a, b]`.
pub fn gibbs_mass(phi: impl Fn(f64) -> f64 + Copy, tau: f64, (a, b): (f64, f64), lo: f64, hi: f64) -> f64 {
    let dens = |x: f64| (-phi(x) / tau).exp();
    let z = trapezoid(dens, a, b, 200_000);
    let n = (((hi - lo) / (b - a)) * 200_000.0).ceil().max(16.0) as usize;
    trapezoid(dens, lo, hi, n) / z
}

/// Replica-exchange ensemble of 1-D chains. Each step runs one role
/// adaptation round and then moves every chain.
#[derive(Debug, Clone)]
pub struct Replicas {
    pub x: Vec<f64>,
    pub tau: Vec<f64>,
    pub eta: f64,
    pub a: f64,
    pub swaps: usize,
}

impl Replicas {
    pub fn new(x0: f64, tau: Vec<f64>, eta: f64, a: f64) -> Self {
        Self { x: vec![x0; tau.len()], tau, eta, a, swaps: 0 }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, well: &DoubleWell, rng: &mut R) -> Result<()> {
        if self.x.len() > 1 {
            let phis: Vec<f64> = self.x.iter().map(|&x| well.phi(x)).collect();
            let ev = exchange(&mut self.tau, &phis, self.a, 0.0, rng)?;
            self.swaps += ev.iter().filter(|e| e.accepted).count();
        }
        for (x, &t) in self.x.iter_mut().zip(&self.tau) {
            *x = langevin_1d(*x, well.grad(*x), self.eta, t, rng);
        }
        Ok(())
    }

    /// Position of the replica currently holding the lowest temperature.
    pub fn coldest(&self) -> f64 {
        let mut k = 0;
        for i in 1..self.tau.len() {
            if self.tau[i] < self.tau[k] {
                k = i;
            }
        }
        self.x[k]
    }
}

/// Steps until the coldest replica first reaches `x >= target` (for a deep
/// well on the right), or `None` within `cap` steps.
pub fn first_hit<R: Rng + ?Sized>(
    reps: &mut Replicas,
    well: &DoubleWell,
    target: f64,
    cap: usize,
    rng: &mut R,
) -> Result<Option<usize>> {
    for k in 0..cap {
        reps.step(well, rng)?;
        if reps.coldest() >= target {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_well_geometry() {
        let w = DoubleWell::asymmetric(4.0, 1.0);
        assert!((w.barrier_from_shallow() - 4.0).abs() < 1e-9);
        assert!((w.phi(-1.0) - w.phi(1.0) - 1.0).abs() < 1e-12);
        assert!(w.grad(-1.0).abs() < 1e-12 && w.grad(1.0).abs() < 1e-12 && w.grad(w.saddle()).abs() < 1e-9);
        let h = 1e-6;
        for x in [-1.7, -0.3, 0.2, 1.4] {
            let fd = (w.phi(x + h) - w.phi(x - h)) / (2.0 * h);
            assert!((fd - w.grad(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn trapezoid_gaussian() {
        let z = trapezoid(|x| (-x * x / 2.0).exp(), -10.0, 10.0, 10_000);
        assert!((z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }
}
