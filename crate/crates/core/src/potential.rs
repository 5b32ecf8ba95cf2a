//! Potentials `W` with decay envelope `0 <= W(x) <= c <x>^{-(2+ε)}`.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::geometry::{GraphDomain, Point};
use crate::sampling::QuasiRandom;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub height: f64,
    pub center: Point,
    pub radius: f64,
}

impl Bump {
    /// Smooth profile in `[0, 1]`, equal to 1 at the centre and 0 outside the disc.
    pub fn shape(&self, x: Point) -> f64 {
        let rho2 = x.distance_sq(&self.center) / (self.radius * self.radius);
        if rho2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - rho2)).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// `W(x) = c <x>^{-(2+ε)}` with the envelope's own constants.
    PureDecay,
    /// `height` times a smooth compactly supported bump.
    Bump(Bump),
    /// Pure decay multiplied by a bump shape (the bump height is ignored).
    Product(Bump),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    /// Envelope constant `c > 0`.
    pub envelope_c: f64,
    /// Envelope exponent `ε ∈ (0, 1]`.
    pub envelope_eps: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind, envelope_c: f64, envelope_eps: f64) -> Result<Self> {
        if !(envelope_c > 0.0) || !envelope_c.is_finite() {
            return Err(invalid("the envelope constant c must be positive"));
        }
        if !(envelope_eps > 0.0 && envelope_eps <= 1.0) {
            return Err(invalid("the envelope exponent must lie in (0, 1]"));
        }
        if let PotentialKind::Bump(b) | PotentialKind::Product(b) = kind {
            if !(b.radius > 0.0) {
                return Err(invalid("bump radius must be positive"));
            }
        }
        Ok(Self {
            kind,
            envelope_c,
            envelope_eps,
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Zero,
            envelope_c: 1.0,
            envelope_eps: 1.0,
        }
    }

    pub fn pure_decay(c: f64, eps: f64) -> Result<Self> {
        Self::new(PotentialKind::PureDecay, c, eps)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
            || matches!(self.kind, PotentialKind::Bump(b) if b.height == 0.0)
    }

    /// `c (1 + δ)^{-(2+ε)}` for a given distance `δ`.
    pub fn envelope_at(&self, delta: f64) -> f64 {
        self.envelope_c * (1.0 + delta).powf(-(2.0 + self.envelope_eps))
    }

    /// `W(x)`, extended by zero outside `Ω`.
    pub fn evaluate(&self, domain: &GraphDomain, x: Point) -> f64 {
        if !domain.contains(x) {
            return 0.0;
        }
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Bump(b) => b.height * b.shape(x),
            PotentialKind::PureDecay => self.envelope_at(distance(domain, x)),
            PotentialKind::Product(b) => {
                let s = b.shape(x);
                if s == 0.0 {
                    0.0
                } else {
                    s * self.envelope_at(distance(domain, x))
                }
            }
        }
    }

    /// Checks both envelope inequalities on `n_samples` quasi-random points of
    /// the truncated domain (denser towards the boundary).
    pub fn verify_envelope(&self, domain: &GraphDomain, n_samples: usize, seed: u64) -> EnvelopeReport {
        let n = n_samples.max(1);
        let mut seq = QuasiRandom::new(2, seed);
        let r = domain.half_width;
        let mut report = EnvelopeReport {
            holds: true,
            worst_margin: f64::INFINITY,
            worst_point: Point::new(0.0, domain.top),
            samples: n,
        };
        for _ in 0..n {
            let u = seq.next_point();
            let s = -r + 2.0 * r * u[0];
            let base = domain.boundary(s);
            let height = base + (domain.top - base) * u[1] * u[1];
            let x = Point::new(s, height);
            if !domain.contains(x) {
                continue;
            }
            let delta = distance(domain, x);
            let w = self.evaluate(domain, x);
            let env = self.envelope_at(delta);
            let margin = (env - w).min(w);
            let slack = 1e-12 * env.max(1e-300);
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_point = x;
            }
            if w < -slack || w > env + slack || !w.is_finite() {
                report.holds = false;
            }
        }
        report
    }
}

fn distance(domain: &GraphDomain, x: Point) -> f64 {
    domain
        .boundary_distance(x, GraphDomain::default_tolerance(x))
        .unwrap_or(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub holds: bool,
    /// Smallest of `envelope - W` and `W` over the samples.
    pub worst_margin: f64,
    pub worst_point: Point,
    pub samples: usize,
}

/// Anything that can evaluate `W` pointwise.
pub trait PotentialField {
    fn value(&self, x: Point) -> f64;

    fn vanishes(&self) -> bool {
        false
    }
}

/// Exact evaluation through [`Potential::evaluate`].
#[derive(Clone, Copy, Debug)]
pub struct ExactPotential<'a> {
    pub potential: &'a Potential,
    pub domain: &'a GraphDomain,
}

impl PotentialField for ExactPotential<'_> {
    fn value(&self, x: Point) -> f64 {
        self.potential.evaluate(self.domain, x)
    }

    fn vanishes(&self) -> bool {
        self.potential.is_zero()
    }
}

/// `W` sampled on a lattice over the truncation box and interpolated
/// bilinearly. Below the boundary the lattice holds the value just above it,
/// so cells cut by the boundary interpolate without a spurious dip.
#[derive(Clone, Debug)]
pub struct PotentialTable {
    domain: GraphDomain,
    spacing: f64,
    x0: f64,
    y0: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    zero: bool,
}

impl PotentialTable {
    pub fn new(potential: &Potential, domain: &GraphDomain, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(invalid("table spacing must be positive"));
        }
        let x0 = -domain.half_width;
        let y0 = domain.boundary_min();
        let nx = (2.0 * domain.half_width / spacing).ceil() as usize + 2;
        let ny = ((domain.top - y0) / spacing).ceil() as usize + 2;
        let zero = potential.is_zero();
        let mut values = alloc::vec![0.0; nx * ny];
        if !zero {
            for j in 0..ny {
                for i in 0..nx {
                    let s = x0 + i as f64 * spacing;
                    let mut y = y0 + j as f64 * spacing;
                    let floor = domain.boundary(s);
                    if y <= floor {
                        y = floor + 1e-9 * (1.0 + floor.abs());
                    }
                    values[j * nx + i] = potential.evaluate(domain, Point::new(s, y));
                }
            }
        }
        Ok(Self {
            domain: domain.clone(),
            spacing,
            x0,
            y0,
            nx,
            ny,
            values,
            zero,
        })
    }
}

impl PotentialField for PotentialTable {
    fn value(&self, x: Point) -> f64 {
        if self.zero || !self.domain.contains(x) {
            return 0.0;
        }
        let mut s = x.lateral();
        let width = 2.0 * self.domain.half_width;
        if self.domain.periodic {
            s = self.x0 + (s - self.x0) - width * ((s - self.x0) / width).floor();
        }
        let fx = ((s - self.x0) / self.spacing).clamp(0.0, (self.nx - 1) as f64 - 1e-9);
        let fy = ((x.height() - self.y0) / self.spacing).clamp(0.0, (self.ny - 1) as f64 - 1e-9);
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (a, b) = (fx - i as f64, fy - j as f64);
        let v = |ii: usize, jj: usize| self.values[jj * self.nx + ii];
        (1.0 - a) * (1.0 - b) * v(i, j)
            + a * (1.0 - b) * v(i + 1, j)
            + (1.0 - a) * b * v(i, j + 1)
            + a * b * v(i + 1, j + 1)
    }

    fn vanishes(&self) -> bool {
        self.zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryShape;
    use core::f64::consts::PI;

    fn flat() -> GraphDomain {
        GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 4.0, 8.0, true).unwrap()
    }

    fn sine() -> GraphDomain {
        let s = BoundaryShape::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
        };
        GraphDomain::new(s, PI, 8.0, true).unwrap()
    }

    #[test]
    fn pure_decay_values() {
        let w = Potential::pure_decay(1.0, 1.0).unwrap();
        assert!((w.evaluate(&flat(), Point::new(0.0, 1e-12)) - 1.0).abs() < 1e-9);
        assert!((w.evaluate(&flat(), Point::new(0.3, 1.0)) - 0.125).abs() < 1e-12);
        assert_eq!(w.evaluate(&flat(), Point::new(0.0, -1.0)), 0.0);
        assert_eq!(Potential::zero().evaluate(&flat(), Point::new(0.0, 2.0)), 0.0);
    }

    #[test]
    fn envelope_examples() {
        let dom = sine();
        let w = Potential::pure_decay(1.0, 0.5).unwrap();
        assert!(w.verify_envelope(&dom, 500, 1).holds);
        let bump = Bump {
            height: 2.0,
            center: Point::new(0.0, 0.6),
            radius: 0.5,
        };
        let tall = Potential::new(PotentialKind::Bump(bump), 1.0, 0.5).unwrap();
        let rep = tall.verify_envelope(&dom, 1000, 1);
        assert!(!rep.holds);
        assert!(rep.worst_margin < 0.0);
        let zero = Potential::new(PotentialKind::Zero, 0.1, 1.0).unwrap();
        assert!(zero.verify_envelope(&dom, 200, 3).holds);
        let prod = Potential::new(PotentialKind::Product(bump), 1.0, 0.5).unwrap();
        assert!(prod.verify_envelope(&dom, 500, 5).holds);
    }

    #[test]
    fn parameters_are_validated() {
        assert!(Potential::pure_decay(0.0, 0.5).is_err());
        assert!(Potential::pure_decay(1.0, 0.0).is_err());
        assert!(Potential::pure_decay(1.0, 1.5).is_err());
    }

    #[test]
    fn pure_decay_decreases_up_vertical_rays() {
        let dom = sine();
        let w = Potential::pure_decay(1.0, 0.5).unwrap();
        for &s in &[-2.0, -0.5, 0.0, 1.3, 2.8] {
            let mut prev = f64::INFINITY;
            let mut y = 2.0 * dom.bound + 1e-3;
            while y < 8.0 {
                let v = w.evaluate(&dom, Point::new(s, y));
                assert!(v <= prev);
                prev = v;
                y += 0.05;
            }
        }
    }

    #[test]
    fn table_tracks_exact_values() {
        let dom = sine();
        let w = Potential::pure_decay(1.0, 0.5).unwrap();
        let table = PotentialTable::new(&w, &dom, 0.02).unwrap();
        let mut q = QuasiRandom::new(2, 9);
        for _ in 0..300 {
            let u = q.next_point();
            let x = Point::new(-PI + 2.0 * PI * u[0], -0.3 + 8.0 * u[1]);
            let exact = w.evaluate(&dom, x);
            assert!((table.value(x) - exact).abs() < 2e-3, "{x:?}");
        }
        // wrap-around
        let x = Point::new(0.5, 1.0);
        assert!((table.value(x) - table.value(Point::new(0.5 + 2.0 * PI, 1.0))).abs() < 1e-9);
    }
}
