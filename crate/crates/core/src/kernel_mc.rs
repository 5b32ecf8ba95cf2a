//! Feynman–Kac Monte Carlo for the killed heat kernel of `Δ + W`.
//!
//! Paths follow `X_{k+1} = X_k + √(2 dt) ξ`, the diffusion generated by
//! `Σ ∂²`. A path dies when a step leaves `Ω` or, between two inside
//! points, with the bridge crossing probability of the local half-plane.

use alloc::vec::Vec;
use num_traits::Float;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::geometry::{GraphDomain, Point};
use crate::potential::PotentialField;
use crate::sampling::{stream_rng, unit_f64};

/// Paths drawn from one random stream.
pub const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub seed: u64,
    pub source: Point,
    pub t: f64,
    pub dt: f64,
    pub endpoints: Vec<Point>,
    pub alive: Vec<bool>,
    /// `exp(-Σ W dt)` for live paths, zero for dead ones.
    pub weights: Vec<f64>,
}

impl PathBatch {
    pub fn n_paths(&self) -> usize {
        self.endpoints.len()
    }

    pub fn survival(&self) -> f64 {
        self.alive.iter().filter(|&&a| a).count() as f64 / self.n_paths() as f64
    }

    /// Standard error of the survival fraction.
    pub fn survival_stderr(&self) -> f64 {
        let p = self.survival();
        (p * (1.0 - p) / self.n_paths() as f64).sqrt()
    }

    /// Joins chunk batches in order.
    pub fn concat(parts: Vec<PathBatch>) -> Result<PathBatch> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| invalid("no batches to join"))?;
        for p in it {
            if p.seed != out.seed || p.t != out.t || p.dt != out.dt {
                return Err(invalid("batches come from different runs"));
            }
            out.endpoints.extend(p.endpoints);
            out.alive.extend(p.alive);
            out.weights.extend(p.weights);
        }
        Ok(out)
    }
}

/// Number of chunks for `n` paths.
pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

fn validate(domain: &GraphDomain, x: Point, t: f64, dt: f64, n: usize) -> Result<()> {
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(x.lateral(), x.height()));
    }
    if !(t > 0.0) || !(dt > 0.0) {
        return Err(invalid("time and step must be positive"));
    }
    if dt > t / 10.0 * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit: t / 10.0 });
    }
    if n == 0 {
        return Err(invalid("at least one path is needed"));
    }
    Ok(())
}

/// Paths `[chunk·CHUNK, min((chunk+1)·CHUNK, n))`, drawn from stream `chunk`.
#[allow(clippy::too_many_arguments)]
pub fn sample_chunk(
    domain: &GraphDomain,
    w: &dyn PotentialField,
    x: Point,
    t: f64,
    dt: f64,
    n: usize,
    seed: u64,
    chunk: usize,
) -> Result<PathBatch> {
    validate(domain, x, t, dt, n)?;
    let start = chunk * CHUNK;
    let len = n.saturating_sub(start).min(CHUNK);
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let sigma = (2.0 * h).sqrt();
    let slope = (1.0 + domain.lipschitz * domain.lipschitz).sqrt();
    let free = w.vanishes();
    let mut rng = stream_rng(seed, chunk as u64);
    let mut batch = PathBatch {
        seed,
        source: x,
        t,
        dt: h,
        endpoints: Vec::with_capacity(len),
        alive: Vec::with_capacity(len),
        weights: Vec::with_capacity(len),
    };
    for _ in 0..len {
        let (mut s, mut y) = (x.lateral(), x.height());
        let mut gap = domain.height_above(x) / slope;
        let mut exponent = 0.0;
        let mut alive = true;
        for _ in 0..steps {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let (s1, y1) = (s + sigma * a, y + sigma * b);
            let next_gap = (y1 - domain.boundary(s1)) / slope;
            if next_gap <= 0.0 {
                alive = false;
            } else {
                let cross = (-gap * next_gap / h).exp();
                if unit_f64(rng.next_u64()) < cross {
                    alive = false;
                }
            }
            if !alive {
                s = s1;
                y = y1;
                break;
            }
            if !free {
                exponent += w.value(Point::new(0.5 * (s + s1), 0.5 * (y + y1))) * h;
            }
            s = s1;
            y = y1;
            gap = next_gap;
        }
        batch.endpoints.push(Point::new(s, y));
        batch.alive.push(alive);
        batch.weights.push(if alive { (-exponent).exp() } else { 0.0 });
    }
    Ok(batch)
}

/// All `n` paths, chunk by chunk.
pub fn sample_paths(
    domain: &GraphDomain,
    w: &dyn PotentialField,
    x: Point,
    t: f64,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<PathBatch> {
    validate(domain, x, t, dt, n)?;
    let parts = (0..chunk_count(n))
        .map(|c| sample_chunk(domain, w, x, t, dt, n, seed, c))
        .collect::<Result<Vec<_>>>()?;
    PathBatch::concat(parts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    /// No path survived, so the relative error is unbounded.
    pub no_survivors: bool,
}

/// Kernel density estimate `Σ w_i K_b(X_i - y) / n` with the product
/// Epanechnikov kernel of half-width `b`.
pub fn mc_kernel_estimate(
    domain: &GraphDomain,
    batch: &PathBatch,
    y: Point,
    bandwidth: f64,
) -> Result<McEstimate> {
    if !(bandwidth >= 2.0 * batch.dt.sqrt()) {
        return Err(invalid("bandwidth must be at least 2·sqrt(dt)"));
    }
    if !batch.alive.iter().any(|&a| a) {
        return Ok(McEstimate {
            value: 0.0,
            stderr: f64::INFINITY,
            no_survivors: true,
        });
    }
    if !domain.contains(y) {
        return Ok(McEstimate {
            value: 0.0,
            stderr: 0.0,
            no_survivors: false,
        });
    }
    let k1 = |z: f64| {
        let u = z / bandwidth;
        if u.abs() < 1.0 {
            0.75 * (1.0 - u * u) / bandwidth
        } else {
            0.0
        }
    };
    let n = batch.n_paths() as f64;
    let (mut sum, mut sq) = (0.0, 0.0);
    for (e, &wt) in batch.endpoints.iter().zip(&batch.weights) {
        if wt == 0.0 {
            continue;
        }
        let k = k1(e.lateral() - y.lateral()) * k1(e.height() - y.height());
        let v = wt * k;
        sum += v;
        sq += v * v;
    }
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(McEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        no_survivors: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryShape;
    use crate::potential::{ExactPotential, Potential};

    fn half_plane() -> GraphDomain {
        GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 4.0, 8.0, true).unwrap()
    }

    #[test]
    fn determinism_and_unit_weights() {
        let d = half_plane();
        let zero = Potential::zero();
        let w = ExactPotential {
            potential: &zero,
            domain: &d,
        };
        let x = Point::new(0.0, 1.0);
        let a = sample_paths(&d, &w, x, 0.5, 0.01, 5000, 3).unwrap();
        let b = sample_paths(&d, &w, x, 0.5, 0.01, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a
            .weights
            .iter()
            .zip(&a.alive)
            .all(|(&wt, &al)| if al { wt == 1.0 } else { wt == 0.0 }));
        let c = sample_paths(&d, &w, x, 0.5, 0.01, 5000, 4).unwrap();
        assert_ne!(a.endpoints, c.endpoints);
    }

    #[test]
    fn chunks_concatenate_to_the_full_batch() {
        let d = half_plane();
        let zero = Potential::zero();
        let w = ExactPotential {
            potential: &zero,
            domain: &d,
        };
        let x = Point::new(0.0, 1.0);
        let n = CHUNK + 100;
        let full = sample_paths(&d, &w, x, 0.2, 0.02, n, 1).unwrap();
        let parts = (0..2)
            .map(|c| sample_chunk(&d, &w, x, 0.2, 0.02, n, 1, c).unwrap())
            .collect();
        assert_eq!(PathBatch::concat(parts).unwrap(), full);
    }

    #[test]
    fn preconditions() {
        let d = half_plane();
        let zero = Potential::zero();
        let w = ExactPotential {
            potential: &zero,
            domain: &d,
        };
        assert!(matches!(
            sample_paths(&d, &w, Point::new(0.0, 1.0), 0.5, 0.1, 10, 0),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(matches!(
            sample_paths(&d, &w, Point::new(0.0, -1.0), 0.5, 0.01, 10, 0),
            Err(Error::OutsideDomain(..))
        ));
        let b = sample_paths(&d, &w, Point::new(0.0, 1.0), 0.5, 0.01, 100, 0).unwrap();
        assert!(mc_kernel_estimate(&d, &b, Point::new(0.0, 1.0), 0.1).is_err());
        let below = mc_kernel_estimate(&d, &b, Point::new(0.0, -2.0), 0.3).unwrap();
        assert_eq!(below.value, 0.0);
    }
}
