//! Domains above the graph of a Lipschitz function and the distance
//! primitives used by every other module.
//!
//! Only the planar case is implemented: a point is `(x', x_N)` with a scalar
//! lateral coordinate `x'`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Spatial dimension of every domain handled here.
pub const DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub coords: [f64; DIM],
}

impl Point {
    pub const fn new(lateral: f64, height: f64) -> Self {
        Self {
            coords: [lateral, height],
        }
    }

    /// The lateral coordinate `x'`.
    #[inline]
    pub fn lateral(&self) -> f64 {
        self.coords[0]
    }

    /// The vertical coordinate `x_N`.
    #[inline]
    pub fn height(&self) -> f64 {
        self.coords[1]
    }

    /// `x + r := (x', x_N + r)`.
    #[inline]
    pub fn shifted(&self, r: f64) -> Self {
        Self::new(self.coords[0], self.coords[1] + r)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        dx * dx + dy * dy
    }
}

/// Vertical shift `x + r`. Upward shifts keep points of a graph domain inside it.
pub fn vertical_shift(x: Point, r: f64) -> Point {
    debug_assert!(r >= 0.0, "vertical shifts are upward");
    x.shifted(r)
}

/// Closed-form boundary functions `f : R -> R`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryShape {
    /// `f(s) = level`.
    Flat { level: f64 },
    /// `f(s) = amplitude * sin(wavenumber * s)`.
    Sine { amplitude: f64, wavenumber: f64 },
    /// `f(s) = min(slope * |s|, cap)`.
    ClippedV { slope: f64, cap: f64 },
    /// Linear interpolation through `knots` (sorted by abscissa). Outside the
    /// knot range the table is either repeated periodically or held constant.
    Table { knots: Vec<(f64, f64)>, periodic: bool },
    /// `f(s) = -|s|`; unbounded, the wedge of opening `3pi/2`.
    Cone,
}

impl BoundaryShape {
    pub fn table(knots: Vec<(f64, f64)>, periodic: bool) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("a boundary table needs at least two knots"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("boundary table abscissae must be strictly increasing"));
        }
        if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(invalid("boundary table entries must be finite"));
        }
        if periodic && (knots[0].1 - knots[knots.len() - 1].1).abs() > 1e-12 {
            return Err(invalid("a periodic table must start and end at the same value"));
        }
        Ok(BoundaryShape::Table { knots, periodic })
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            BoundaryShape::Flat { level } => *level,
            BoundaryShape::Sine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * s).sin(),
            BoundaryShape::ClippedV { slope, cap } => (slope * s.abs()).min(*cap),
            BoundaryShape::Table { knots, periodic } => table_value(knots, *periodic, s),
            BoundaryShape::Cone => -s.abs(),
        }
    }

    /// Best Lipschitz constant of the shape.
    pub fn lipschitz(&self) -> f64 {
        match self {
            BoundaryShape::Flat { .. } => 0.0,
            BoundaryShape::Sine {
                amplitude,
                wavenumber,
            } => (amplitude * wavenumber).abs(),
            BoundaryShape::ClippedV { slope, .. } => slope.abs(),
            BoundaryShape::Table { knots, .. } => knots
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
            BoundaryShape::Cone => 1.0,
        }
    }

    /// `sup |f|`; infinite for the cone.
    pub fn sup_norm(&self) -> f64 {
        match self {
            BoundaryShape::Flat { level } => level.abs(),
            BoundaryShape::Sine { amplitude, .. } => amplitude.abs(),
            BoundaryShape::ClippedV { slope, cap } => {
                if *slope == 0.0 {
                    0.0
                } else {
                    cap.abs()
                }
            }
            BoundaryShape::Table { knots, .. } => knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max),
            BoundaryShape::Cone => f64::INFINITY,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            BoundaryShape::Sine { wavenumber, .. } if *wavenumber != 0.0 => {
                Some(2.0 * PI / wavenumber.abs())
            }
            BoundaryShape::Table {
                knots,
                periodic: true,
            } => Some(knots[knots.len() - 1].0 - knots[0].0),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundaryShape::Flat { .. })
            || matches!(self, BoundaryShape::Sine { amplitude, wavenumber } if *amplitude == 0.0 || *wavenumber == 0.0)
    }

    /// Abscissae in `(a, b)` where a piecewise-linear shape changes slope,
    /// or `None` when the shape is not piecewise linear.
    fn kinks_in(&self, a: f64, b: f64) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        match self {
            BoundaryShape::Flat { .. } => {}
            BoundaryShape::Sine { .. } => {
                if !self.is_constant() {
                    return None;
                }
            }
            BoundaryShape::ClippedV { slope, cap } => {
                let mut cands = alloc::vec![0.0];
                if *slope != 0.0 {
                    let c = cap / slope.abs();
                    cands.push(-c);
                    cands.push(c);
                }
                out.extend(cands.into_iter().filter(|&s| s > a && s < b));
            }
            BoundaryShape::Cone => {
                if a < 0.0 && 0.0 < b {
                    out.push(0.0);
                }
            }
            BoundaryShape::Table { knots, periodic } => {
                let first = knots[0].0;
                let last = knots[knots.len() - 1].0;
                if *periodic {
                    let p = last - first;
                    let k0 = ((a - last) / p).floor() as i64;
                    let k1 = ((b - first) / p).ceil() as i64;
                    for k in k0..=k1 {
                        let shift = k as f64 * p;
                        for kn in knots.iter() {
                            let s = kn.0 + shift;
                            if s > a && s < b {
                                out.push(s);
                            }
                        }
                    }
                } else {
                    out.extend(knots.iter().map(|k| k.0).filter(|&s| s > a && s < b));
                }
            }
        }
        out.sort_by(|p, q| p.partial_cmp(q).unwrap());
        out.dedup_by(|p, q| (*p - *q).abs() < 1e-15);
        Some(out)
    }

    /// First and second derivative of a smooth shape.
    fn smooth_derivatives(&self, s: f64) -> (f64, f64) {
        match self {
            BoundaryShape::Sine {
                amplitude,
                wavenumber,
            } => {
                let arg = wavenumber * s;
                (
                    amplitude * wavenumber * arg.cos(),
                    -amplitude * wavenumber * wavenumber * arg.sin(),
                )
            }
            _ => (0.0, 0.0),
        }
    }

    fn curvature_bound(&self) -> f64 {
        match self {
            BoundaryShape::Sine {
                amplitude,
                wavenumber,
            } => (amplitude * wavenumber * wavenumber).abs(),
            _ => 0.0,
        }
    }
}

fn table_value(knots: &[(f64, f64)], periodic: bool, s: f64) -> f64 {
    let first = knots[0].0;
    let last = knots[knots.len() - 1].0;
    let s = if periodic {
        let p = last - first;
        first + (s - first) - p * ((s - first) / p).floor()
    } else {
        s
    };
    if s <= first {
        return knots[0].1;
    }
    if s >= last {
        return knots[knots.len() - 1].1;
    }
    let idx = knots.partition_point(|k| k.0 <= s);
    let (x0, y0) = knots[idx - 1];
    let (x1, y1) = knots[idx];
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

/// Two-sided enclosure of the distance to the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceBracket {
    pub lower: f64,
    pub upper: f64,
}

impl DistanceBracket {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `Ω = {x : x_N > f(x')}` together with its truncation box
/// `[-R, R] × (min f - margin, H_top]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDomain {
    pub shape: BoundaryShape,
    /// Lipschitz constant `L` (an upper bound for the shape's best constant).
    pub lipschitz: f64,
    /// Bound `M` with `|f| <= M`.
    pub bound: f64,
    /// Lateral half width `R` of the truncation box.
    pub half_width: f64,
    /// Distance kept below `min f` by the truncation box.
    pub margin: f64,
    /// Height `H_top` of the truncation lid.
    pub top: f64,
    pub periodic: bool,
}

impl GraphDomain {
    /// Builds a domain whose constants are the exact ones of `shape`.
    pub fn new(shape: BoundaryShape, half_width: f64, top: f64, periodic: bool) -> Result<Self> {
        let l = shape.lipschitz();
        let m = shape.sup_norm();
        Self::with_constants(shape, l, m, half_width, top, periodic)
    }

    /// Builds a domain with caller-supplied `(L, M)`; they must dominate the
    /// shape's own constants.
    pub fn with_constants(
        shape: BoundaryShape,
        lipschitz: f64,
        bound: f64,
        half_width: f64,
        top: f64,
        periodic: bool,
    ) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid("the lateral half width must be positive"));
        }
        if !(lipschitz >= 0.0) {
            return Err(invalid("the Lipschitz constant must be non-negative"));
        }
        let exact_l = shape.lipschitz();
        let exact_m = shape.sup_norm();
        if lipschitz + 1e-12 < exact_l {
            return Err(invalid("the supplied Lipschitz constant is smaller than the shape's"));
        }
        if bound + 1e-12 < exact_m {
            return Err(invalid("the supplied bound M is smaller than sup |f|"));
        }
        if bound.is_finite() && top < 4.0 * bound {
            return Err(invalid("the lid height must satisfy H_top >= 4M"));
        }
        if periodic && !shape.is_constant() {
            let p = shape
                .period()
                .ok_or_else(|| invalid("periodic truncation needs a periodic boundary shape"))?;
            let periods = 2.0 * half_width / p;
            if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
                return Err(invalid("the periodic box must hold a whole number of periods"));
            }
        }
        Ok(Self {
            shape,
            lipschitz,
            bound,
            half_width,
            margin: 0.5,
            top,
            periodic,
        })
    }

    pub fn is_bounded(&self) -> bool {
        self.bound.is_finite()
    }

    #[inline]
    pub fn boundary(&self, lateral: f64) -> f64 {
        self.shape.value(lateral)
    }

    /// `x ∈ Ω`, i.e. `x_N > f(x')`.
    #[inline]
    pub fn contains(&self, x: Point) -> bool {
        x.height() > self.boundary(x.lateral())
    }

    /// Vertical gap `x_N - f(x')`.
    #[inline]
    pub fn height_above(&self, x: Point) -> f64 {
        x.height() - self.boundary(x.lateral())
    }

    pub fn default_tolerance(x: Point) -> f64 {
        1e-8 * (1.0 + x.height().abs())
    }

    /// `δ(x)` to within `tol`.
    pub fn boundary_distance(&self, x: Point, tol: f64) -> Result<f64> {
        Ok(self.distance_bracket(x, tol)?.estimate())
    }

    /// `<x> = 1 + δ(x)` with the default tolerance.
    pub fn bracket(&self, x: Point) -> Result<f64> {
        Ok(1.0 + self.boundary_distance(x, Self::default_tolerance(x))?)
    }

    /// Encloses `δ(x)` in an interval of width at most `tol`.
    ///
    /// The nearest boundary point has lateral offset at most `x_N - f(x')`,
    /// so the search runs over that window. Piecewise-linear shapes are handled
    /// segment by segment; smooth shapes by branch and bound with a
    /// second-order lower bound.
    pub fn distance_bracket(&self, x: Point, tol: f64) -> Result<DistanceBracket> {
        if !(tol > 0.0) {
            return Err(invalid("the distance tolerance must be positive"));
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain(x.lateral(), x.height()));
        }
        let gap = self.height_above(x);
        let a = x.lateral() - gap;
        let b = x.lateral() + gap;
        if self.shape.is_constant() {
            return Ok(DistanceBracket {
                lower: gap,
                upper: gap,
            });
        }
        if let Some(kinks) = self.shape.kinks_in(a, b) {
            let mut best = gap;
            let mut left = a;
            for s in kinks.into_iter().chain(core::iter::once(b)) {
                let p = Point::new(left, self.boundary(left));
                let q = Point::new(s, self.boundary(s));
                best = best.min(segment_distance(x, p, q));
                left = s;
            }
            return Ok(DistanceBracket {
                lower: best,
                upper: best,
            });
        }
        Ok(self.smooth_bracket(x, a, b, gap, tol))
    }

    fn smooth_bracket(&self, x: Point, a: f64, b: f64, gap: f64, tol: f64) -> DistanceBracket {
        let (p1, p2) = (x.lateral(), x.height());
        let lip = (1.0 + self.lipschitz * self.lipschitz).sqrt();
        let curv = self.shape.curvature_bound();
        // δ >= gap / (2 + L) bounds the distance from below on the whole window.
        let phi_floor = gap / (2.0 + self.lipschitz);
        let second = (1.0 + self.lipschitz * self.lipschitz) / phi_floor + curv;

        let eval = |s: f64| -> (f64, f64) {
            let fs = self.boundary(s);
            let (d1, _) = self.shape.smooth_derivatives(s);
            let dx = s - p1;
            let dy = fs - p2;
            let phi = (dx * dx + dy * dy).sqrt();
            let slope = if phi > 0.0 { (dx + dy * d1) / phi } else { 0.0 };
            (phi, slope)
        };
        let lower_bound = |phi: f64, slope: f64, half: f64| -> f64 {
            let first = phi - lip * half;
            let quad = phi - slope.abs() * half - 0.5 * second * half * half;
            first.max(quad).max(phi_floor)
        };

        // (midpoint, half width, phi, slope)
        let pieces = 32;
        let h0 = (b - a) / pieces as f64 * 0.5;
        let mut cells: Vec<(f64, f64, f64, f64)> = (0..pieces)
            .map(|k| {
                let m = a + (2 * k + 1) as f64 * h0;
                let (phi, slope) = eval(m);
                (m, h0, phi, slope)
            })
            .collect();
        let mut upper = gap.min(eval(a).0).min(eval(b).0);
        for c in &cells {
            upper = upper.min(c.2);
        }
        let mut next = Vec::with_capacity(cells.len());
        for _ in 0..200 {
            // pruned cells may still reach down to `upper - tol / 4`
            let mut lower = upper - 0.25 * tol;
            next.clear();
            for &(m, h, phi, slope) in &cells {
                let lb = lower_bound(phi, slope, h);
                if lb < upper - 0.25 * tol {
                    lower = lower.min(lb);
                    next.push((m, h, phi, slope));
                }
            }
            if upper - lower <= tol || next.is_empty() {
                return DistanceBracket {
                    lower: lower.min(upper),
                    upper,
                };
            }
            cells.clear();
            for &(m, h, _, _) in &next {
                let q = 0.5 * h;
                for c in [m - q, m + q] {
                    let (phi, slope) = eval(c);
                    upper = upper.min(phi);
                    cells.push((c, q, phi, slope));
                }
            }
        }
        let lower = cells
            .iter()
            .map(|&(_, h, phi, slope)| lower_bound(phi, slope, h))
            .fold(upper, f64::min);
        DistanceBracket { lower, upper }
    }

    /// Checks `|f(s) - f(u)| <= L |s - u|` and `|f| <= M` on `n` evenly spaced
    /// samples of the truncation box (all pairs of neighbours plus a stride).
    pub fn constants_hold_on_samples(&self, n: usize) -> bool {
        let n = n.max(2);
        let r = self.half_width;
        let xs: Vec<f64> = (0..n)
            .map(|k| -r + 2.0 * r * k as f64 / (n - 1) as f64)
            .collect();
        let fs: Vec<f64> = xs.iter().map(|&s| self.boundary(s)).collect();
        let slack = 1e-12;
        let bound_ok = fs.iter().all(|v| v.abs() <= self.bound + slack);
        let stride = (n / 7).max(1);
        let lip_ok = (0..n).all(|i| {
            [1, stride].iter().all(|&d| {
                let j = i + d;
                j >= n || (fs[j] - fs[i]).abs() <= self.lipschitz * (xs[j] - xs[i]) + slack
            })
        });
        bound_ok && lip_ok
    }

    /// Lowest value of `f` on the lateral box.
    pub fn boundary_min(&self) -> f64 {
        self.boundary_extreme(f64::min)
    }

    pub fn boundary_max(&self) -> f64 {
        self.boundary_extreme(f64::max)
    }

    fn boundary_extreme(&self, pick: fn(f64, f64) -> f64) -> f64 {
        if self.is_bounded() && !self.shape.is_constant() {
            if let BoundaryShape::Sine { amplitude, .. } = self.shape {
                let v = pick(amplitude, -amplitude);
                return v;
            }
        }
        let n = 4096;
        let r = self.half_width;
        (0..=n)
            .map(|k| self.boundary(-r + 2.0 * r * k as f64 / n as f64))
            .fold(self.boundary(0.0), pick)
    }
}

/// Euclidean distance from `x` to the segment `[p, q]`.
pub fn segment_distance(x: Point, p: Point, q: Point) -> f64 {
    let (dx, dy) = (q.coords[0] - p.coords[0], q.coords[1] - p.coords[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return x.distance(&p);
    }
    let s = (((x.coords[0] - p.coords[0]) * dx + (x.coords[1] - p.coords[1]) * dy) / len2)
        .clamp(0.0, 1.0);
    x.distance(&Point::new(p.coords[0] + s * dx, p.coords[1] + s * dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> GraphDomain {
        GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 4.0, 8.0, true).unwrap()
    }

    fn clipped_v() -> GraphDomain {
        GraphDomain::new(BoundaryShape::ClippedV { slope: 1.0, cap: 1.0 }, 4.0, 8.0, false).unwrap()
    }

    fn sine() -> GraphDomain {
        GraphDomain::new(
            BoundaryShape::Sine {
                amplitude: 0.3,
                wavenumber: 1.0,
            },
            PI,
            8.0,
            true,
        )
        .unwrap()
    }

    #[test]
    fn contains_examples() {
        assert!(flat().contains(Point::new(0.0, 1.0)));
        assert!(!flat().contains(Point::new(0.0, -1.0)));
        assert!(clipped_v().contains(Point::new(0.0, 0.5)));
    }

    #[test]
    fn half_plane_distance_is_height() {
        let d = flat().boundary_distance(Point::new(0.0, 5.0), 1e-10).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn clipped_v_distance_matches_segment_geometry() {
        let x = Point::new(0.0, 0.5);
        let d = clipped_v().boundary_distance(x, 1e-10).unwrap();
        assert!((d - 0.35355339059327373).abs() < 1e-12, "{d}");
        let b = clipped_v().bracket(x).unwrap();
        assert!((b - 1.35355339059327373).abs() < 1e-10);
    }

    #[test]
    fn sine_distance_satisfies_height_comparison() {
        let dom = sine();
        let x = Point::new(0.0, 3.0);
        let br = dom.distance_bracket(x, 1e-10).unwrap();
        assert!(br.width() <= 1e-10);
        let d = br.estimate();
        let gap = 3.0 - dom.boundary(0.0);
        assert!(d <= gap && gap <= 2.3 * d);
    }

    #[test]
    fn sine_bracket_agrees_with_dense_scan() {
        let dom = sine();
        for &(a, b) in &[(0.3, 0.12), (1.2, 0.9), (-2.0, 0.1), (2.9, 2.0), (0.0, 0.01)] {
            let x = Point::new(a, b);
            let d = dom.boundary_distance(x, 1e-9).unwrap();
            let gap = dom.height_above(x);
            let n = 200_000;
            let scan = (0..=n)
                .map(|k| {
                    let s = a - gap + 2.0 * gap * k as f64 / n as f64;
                    x.distance(&Point::new(s, dom.boundary(s)))
                })
                .fold(f64::INFINITY, f64::min);
            // the scan is only accurate to its own resolution
            assert!(d <= scan + 1e-12 && scan - d < 1e-7, "{x:?}: {d} vs {scan}");
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        assert_eq!(
            flat().boundary_distance(Point::new(0.0, -1.0), 1e-8),
            Err(Error::OutsideDomain(0.0, -1.0))
        );
    }

    #[test]
    fn vertical_shift_examples() {
        assert_eq!(vertical_shift(Point::new(0.0, 1.0), 2.0), Point::new(0.0, 3.0));
        assert_eq!(vertical_shift(Point::new(1.0, 1.0), 0.0), Point::new(1.0, 1.0));
        assert!(flat().contains(vertical_shift(Point::new(0.0, 1.0), 3.0)));
    }

    #[test]
    fn table_interpolates_and_wraps() {
        let t = BoundaryShape::table(alloc::vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.0)], true).unwrap();
        assert!((t.value(0.5) - 0.25).abs() < 1e-15);
        assert!((t.value(2.5) - 0.25).abs() < 1e-15);
        assert!((t.value(-1.5) - 0.25).abs() < 1e-15);
        assert_eq!(t.lipschitz(), 0.5);
        assert_eq!(t.period(), Some(2.0));
    }

    #[test]
    fn constants_and_lid_are_validated() {
        let s = BoundaryShape::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
        };
        assert!(GraphDomain::with_constants(s.clone(), 0.2, 0.3, PI, 8.0, true).is_err());
        assert!(GraphDomain::new(s.clone(), PI, 1.0, true).is_err());
        assert!(GraphDomain::new(s.clone(), 2.0, 8.0, true).is_err());
        assert!(sine().constants_hold_on_samples(2000));
        assert!(clipped_v().constants_hold_on_samples(2000));
    }
}
