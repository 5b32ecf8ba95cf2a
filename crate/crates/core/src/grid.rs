//! Rectangular discretization of a truncated region with unequal boundary arms.
//!
//! Unknowns live on the nodes inside the region. A node next to the boundary
//! keeps, per direction, the fraction `θ ∈ (0, 1]` of the grid spacing at
//! which the boundary is crossed. The discrete operator is
//!
//! `(S u)_i = Σ_{neighbours j} (u_i - u_j) + Σ_{crossings b} (u_i - g_b) / θ_b`
//!
//! scaled by `1/Δx²`: a symmetric unequal-arm stencil, exact on functions that
//! are linear along each grid line.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::{GraphDomain, Point};
use crate::linalg::CsrMatrix;

/// Arms shorter than this fraction of `Δx` make the node a boundary point.
const MIN_ARM: f64 = 1e-6;

/// A region with a computable boundary crossing along grid segments.
pub trait Region {
    fn inside(&self, p: Point) -> bool;

    /// Fraction along `p -> q` of the first boundary crossing, given that
    /// `p` is inside and `q` is not.
    fn crossing(&self, p: Point, q: Point) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.inside(lerp(p, q, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn lerp(p: Point, q: Point, s: f64) -> Point {
    Point::new(
        p.lateral() + s * (q.lateral() - p.lateral()),
        p.height() + s * (q.height() - p.height()),
    )
}

impl Region for GraphDomain {
    fn inside(&self, p: Point) -> bool {
        self.contains(p)
    }

    fn crossing(&self, p: Point, q: Point) -> f64 {
        if p.lateral() == q.lateral() {
            let f = self.boundary(p.lateral());
            return (p.height() - f) / (p.height() - q.height());
        }
        let y = p.height();
        let (mut lo, mut hi) = (0.0, 1.0);
        let s = |t: f64| p.lateral() + t * (q.lateral() - p.lateral());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if y > self.boundary(s(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lateral {
    /// Wrap-around; the box must hold whole periods of the boundary.
    Periodic,
    /// Zero-flux walls half a cell outside the outermost nodes.
    Reflecting,
    /// Dirichlet walls on the box edges (the region should lie inside).
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridLayout {
    pub x_min: f64,
    pub x_max: f64,
    /// Rows start at or below this height.
    pub y_min: f64,
    /// Height of the Dirichlet lid, always a node row position.
    pub lid: f64,
    pub dx: f64,
    pub lateral: Lateral,
}

impl GridLayout {
    /// The truncation box of a graph domain.
    pub fn for_domain(domain: &GraphDomain, dx: f64) -> Self {
        Self {
            x_min: -domain.half_width,
            x_max: domain.half_width,
            y_min: domain.boundary_min() - dx,
            lid: domain.top,
            dx,
            lateral: if domain.periodic {
                Lateral::Periodic
            } else {
                Lateral::Reflecting
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// The region's own boundary.
    Region,
    Lid,
    /// Box edge of a closed layout.
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub node: usize,
    /// Arm length as a fraction of `Δx`.
    pub theta: f64,
    pub point: Point,
    pub kind: BoundaryKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    Node(usize),
    Crossing(usize),
    /// Reflecting wall: no flux.
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeClass {
    Interior,
    Lateral,
    TopLid,
    NearBoundary,
}

enum Step {
    Cell(usize, usize),
    Lid,
    Below,
    /// Past a lateral edge that does not wrap.
    Edge,
}

/// Direction order of [`Grid::arms`].
pub const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Clone, Debug)]
pub struct Grid {
    pub layout: GridLayout,
    pub nx: usize,
    /// Node rows below the lid.
    pub ny: usize,
    index: Vec<usize>,
    cells: Vec<(usize, usize)>,
    arms: Vec<[Arm; 4]>,
    crossings: Vec<Crossing>,
    classes: Vec<NodeClass>,
}

impl Grid {
    pub fn new(region: &dyn Region, layout: GridLayout) -> Result<Self> {
        let dx = layout.dx;
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(invalid("grid spacing must be positive"));
        }
        let width = layout.x_max - layout.x_min;
        if !(width > 0.0) || !(layout.lid > layout.y_min) {
            return Err(invalid("empty grid box"));
        }
        let cols = (width / dx).round();
        if (cols * dx - width).abs() > 1e-9 * width || cols < 2.0 {
            return Err(invalid("the box width must be a whole number of grid spacings"));
        }
        let cols = cols as usize;
        let nx = match layout.lateral {
            Lateral::Periodic | Lateral::Reflecting => cols,
            Lateral::Closed => cols - 1,
        };
        let ny = ((layout.lid - layout.y_min) / dx - 1e-9).ceil().max(1.0) as usize;
        if nx.saturating_mul(ny) > 50_000_000 {
            return Err(invalid("grid too large"));
        }
        let mut grid = Self {
            layout,
            nx,
            ny,
            index: vec![usize::MAX; nx * ny],
            cells: Vec::new(),
            arms: Vec::new(),
            crossings: Vec::new(),
            classes: Vec::new(),
        };
        // A candidate is dropped when one of its arms is too short; it then
        // acts as a boundary point for its neighbours.
        let mut candidate = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = grid.position(i, j);
                if !region.inside(p) {
                    continue;
                }
                let mut short = false;
                for d in 0..4 {
                    match grid.neighbour(i, j, d) {
                        Step::Cell(..) => {
                            let q = grid.offset(p, d, 1.0);
                            short |= !region.inside(q) && region.crossing(p, q) < MIN_ARM;
                        }
                        Step::Below => {
                            let q = grid.offset(p, d, 1.0);
                            if region.inside(q) {
                                return Err(invalid("the region extends below the lowest grid row"));
                            }
                            short |= region.crossing(p, q) < MIN_ARM;
                        }
                        Step::Lid | Step::Edge => {}
                    }
                }
                candidate[j * nx + i] = !short;
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                if candidate[j * nx + i] {
                    grid.index[j * nx + i] = grid.cells.len();
                    grid.cells.push((i, j));
                }
            }
        }
        for k in 0..grid.cells.len() {
            let (i, j) = grid.cells[k];
            let p = grid.position(i, j);
            let mut arms = [Arm::Wall; 4];
            let mut class = NodeClass::Interior;
            for (d, arm) in arms.iter_mut().enumerate() {
                let q = grid.offset(p, d, 1.0);
                let region_crossing = |grid: &mut Self, class: &mut NodeClass| {
                    *class = NodeClass::NearBoundary;
                    let theta = if region.inside(q) {
                        1.0
                    } else {
                        region.crossing(p, q).clamp(MIN_ARM, 1.0)
                    };
                    let at = grid.offset(p, d, theta);
                    grid.push_crossing(k, theta, at, BoundaryKind::Region)
                };
                *arm = match grid.neighbour(i, j, d) {
                    Step::Edge if layout.lateral == Lateral::Reflecting => {
                        class = class.max(NodeClass::Lateral);
                        Arm::Wall
                    }
                    Step::Edge => {
                        class = class.max(NodeClass::Lateral);
                        grid.push_crossing(k, 1.0, q, BoundaryKind::Wall)
                    }
                    Step::Lid if region.inside(q) => {
                        class = class.max(NodeClass::TopLid);
                        grid.push_crossing(k, 1.0, q, BoundaryKind::Lid)
                    }
                    Step::Lid | Step::Below => region_crossing(&mut grid, &mut class),
                    Step::Cell(ii, jj) => match grid.index[jj * nx + ii] {
                        usize::MAX => region_crossing(&mut grid, &mut class),
                        m => Arm::Node(m),
                    },
                };
            }
            grid.arms.push(arms);
            grid.classes.push(class);
        }
        if grid.cells.is_empty() {
            return Err(Error::Degenerate("no grid node lies inside the region".into()));
        }
        Ok(grid)
    }

    /// Grid over the truncation box of a graph domain.
    pub fn for_domain(domain: &GraphDomain, dx: f64) -> Result<Self> {
        Self::new(domain, GridLayout::for_domain(domain, dx))
    }

    fn push_crossing(&mut self, node: usize, theta: f64, point: Point, kind: BoundaryKind) -> Arm {
        self.crossings.push(Crossing {
            node,
            theta,
            point,
            kind,
        });
        Arm::Crossing(self.crossings.len() - 1)
    }

    fn column_x(&self, i: f64) -> f64 {
        let l = &self.layout;
        match l.lateral {
            Lateral::Periodic => l.x_min + i * l.dx,
            Lateral::Reflecting => l.x_min + (i + 0.5) * l.dx,
            Lateral::Closed => l.x_min + (i + 1.0) * l.dx,
        }
    }

    fn row_y(&self, j: f64) -> f64 {
        self.layout.lid - (self.ny as f64 - j) * self.layout.dx
    }

    fn position(&self, i: usize, j: usize) -> Point {
        Point::new(self.column_x(i as f64), self.row_y(j as f64))
    }

    /// The cell one step from `(i, j)` in direction `d`.
    fn neighbour(&self, i: usize, j: usize, d: usize) -> Step {
        let (di, dj) = DIRECTIONS[d];
        let jj = j as i64 + dj;
        if jj < 0 {
            return Step::Below;
        }
        if jj as usize == self.ny {
            return Step::Lid;
        }
        let ii = i as i64 + di;
        if ii < 0 || ii >= self.nx as i64 {
            if self.layout.lateral != Lateral::Periodic {
                return Step::Edge;
            }
            return Step::Cell(ii.rem_euclid(self.nx as i64) as usize, jj as usize);
        }
        Step::Cell(ii as usize, jj as usize)
    }

    /// `p` moved by `s Δx` in direction `d`.
    fn offset(&self, p: Point, d: usize, s: f64) -> Point {
        let h = s * self.layout.dx;
        Point::new(
            p.lateral() + DIRECTIONS[d].0 as f64 * h,
            p.height() + DIRECTIONS[d].1 as f64 * h,
        )
    }

    pub fn dx(&self) -> f64 {
        self.layout.dx
    }

    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    pub fn point(&self, k: usize) -> Point {
        let (i, j) = self.cells[k];
        self.position(i, j)
    }

    pub fn cell(&self, k: usize) -> (usize, usize) {
        self.cells[k]
    }

    pub fn node_at(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j >= self.ny {
            return None;
        }
        match self.index[j * self.nx + i] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    /// The unknown `(di, dj)` cells away from node `k`, wrapping laterally when periodic.
    pub fn relative_node(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.cells[k];
        let jj = j as i64 + dj;
        let mut ii = i as i64 + di;
        if self.layout.lateral == Lateral::Periodic {
            ii = ii.rem_euclid(self.nx as i64);
        }
        if ii < 0 || jj < 0 {
            return None;
        }
        self.node_at(ii as usize, jj as usize)
    }

    pub fn arms(&self, k: usize) -> &[Arm; 4] {
        &self.arms[k]
    }

    pub fn class(&self, k: usize) -> NodeClass {
        self.classes[k]
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// Fractional cell coordinates of `p`.
    fn fractional(&self, p: Point) -> (f64, f64) {
        let l = &self.layout;
        let mut fi = (p.lateral() - self.column_x(0.0)) / l.dx;
        if l.lateral == Lateral::Periodic {
            let n = self.nx as f64;
            fi -= n * (fi / n).floor();
        }
        let fj = (p.height() - self.row_y(0.0)) / l.dx;
        (fi, fj)
    }

    /// The node closest to `p`, if that cell carries an unknown.
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        let (fi, fj) = self.fractional(p);
        let (i, j) = (fi.round(), fj.round());
        if j < 0.0 || i < 0.0 {
            return None;
        }
        let i = if self.layout.lateral == Lateral::Periodic {
            i as usize % self.nx
        } else {
            i as usize
        };
        self.node_at(i, j as usize)
    }

    /// Nearest node, or an error naming the point.
    pub fn snap(&self, p: Point) -> Result<usize> {
        self.nearest_node(p)
            .ok_or(Error::OutsideDomain(p.lateral(), p.height()))
    }

    /// Evaluates `f` at every node.
    pub fn node_values(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        (0..self.node_count()).map(|k| f(self.point(k))).collect()
    }

    /// The unscaled symmetric stiffness matrix `S`.
    pub fn stiffness(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(5 * self.node_count());
        for (k, arms) in self.arms.iter().enumerate() {
            let mut diag = 0.0;
            for arm in arms {
                match *arm {
                    Arm::Node(m) => {
                        diag += 1.0;
                        t.push((k, m, -1.0));
                    }
                    Arm::Crossing(c) => diag += 1.0 / self.crossings[c].theta,
                    Arm::Wall => {}
                }
            }
            t.push((k, k, diag));
        }
        CsrMatrix::from_triplets(self.node_count(), &t).expect("indices are in range")
    }

    /// Right-hand side `Σ g_b / (θ_b Δx²)` for boundary values `g` given per crossing.
    pub fn boundary_load(&self, g: &[f64]) -> Vec<f64> {
        let dx2 = self.dx() * self.dx();
        let mut b = vec![0.0; self.node_count()];
        for (c, cr) in self.crossings.iter().enumerate() {
            b[cr.node] += g[c] / (cr.theta * dx2);
        }
        b
    }

    /// Bilinear interpolation of node values. Corners without an unknown count
    /// as zero except on the lid row, where `lid` supplies the value.
    pub fn interpolate(&self, values: &[f64], lid: impl Fn(f64) -> f64, p: Point) -> f64 {
        let (fi, fj) = self.fractional(p);
        let max_i = match self.layout.lateral {
            Lateral::Periodic => self.nx as f64,
            _ => (self.nx - 1) as f64,
        };
        let fi = fi.clamp(0.0, max_i);
        let fj = fj.clamp(0.0, self.ny as f64);
        let i0 = (fi.floor() as usize).min(self.nx.saturating_sub(1).max(0));
        let j0 = (fj.floor() as usize).min(self.ny);
        let (a, b) = (fi - i0 as f64, fj - j0 as f64);
        let corner = |i: usize, j: usize| -> f64 {
            let i = if self.layout.lateral == Lateral::Periodic {
                i % self.nx
            } else {
                i.min(self.nx - 1)
            };
            if j >= self.ny {
                lid(self.column_x(i as f64))
            } else {
                self.node_at(i, j).map_or(0.0, |k| values[k])
            }
        };
        let mut v = (1.0 - a) * (1.0 - b) * corner(i0, j0);
        if a > 0.0 {
            v += a * (1.0 - b) * corner(i0 + 1, j0);
        }
        if b > 0.0 {
            v += (1.0 - a) * b * corner(i0, j0 + 1);
            if a > 0.0 {
                v += a * b * corner(i0 + 1, j0 + 1);
            }
        }
        v
    }

    /// `Σ_k values_k Δx²`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx() * self.dx()
    }
}

/// What a [`ScalarField`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Harmonic,
    Schrodinger,
    HeatKernel,
    WeightedKernel,
    Other,
}

/// Node values plus boundary values on every crossing of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub kind: FieldKind,
    pub values: Vec<f64>,
    pub boundary: Vec<f64>,
    /// Vertical slope of the linear extension above the lid.
    pub above_lid_slope: f64,
}

impl ScalarField {
    /// The constant field, equal to `c` on nodes and on the boundary.
    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            kind: FieldKind::Other,
            values: vec![c; grid.node_count()],
            boundary: vec![c; grid.crossings().len()],
            above_lid_slope: 0.0,
        }
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.values.len() == grid.node_count() && self.boundary.len() == grid.crossings().len()
    }

    /// Value on the lid above lateral position `s`, interpolated between lid crossings.
    pub fn lid_value(&self, grid: &Grid, s: f64) -> f64 {
        let (fi, _) = grid.fractional(Point::new(s, grid.layout.lid));
        let top = grid.ny - 1;
        let at = |i: usize| -> Option<f64> {
            let i = if grid.layout.lateral == Lateral::Periodic {
                i % grid.nx
            } else {
                i.min(grid.nx - 1)
            };
            let k = grid.node_at(i, top)?;
            match grid.arms(k)[3] {
                Arm::Crossing(c) if grid.crossings()[c].kind == BoundaryKind::Lid => Some(self.boundary[c]),
                _ => None,
            }
        };
        let fi = fi.max(0.0);
        let i0 = fi.floor() as usize;
        let a = fi - i0 as f64;
        match (at(i0), at(i0 + 1)) {
            (Some(u), Some(v)) => (1.0 - a) * u + a * v,
            (Some(u), None) => u,
            (None, Some(v)) => v,
            (None, None) => 0.0,
        }
    }

    /// Value at any point of the box, extended linearly above the lid.
    pub fn sample(&self, grid: &Grid, p: Point) -> f64 {
        let lid = grid.layout.lid;
        if p.height() >= lid {
            return self.lid_value(grid, p.lateral()) + (p.height() - lid) * self.above_lid_slope;
        }
        grid.interpolate(&self.values, |s| self.lid_value(grid, s), p)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kind: self.kind,
            values: self.values.iter().map(|v| v * c).collect(),
            boundary: self.boundary.iter().map(|v| v * c).collect(),
            above_lid_slope: self.above_lid_slope * c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryShape;

    fn half_plane(dx: f64) -> (GraphDomain, Grid) {
        let d = GraphDomain::new(BoundaryShape::Flat { level: 0.0 }, 1.0, 2.0, true).unwrap();
        let g = Grid::for_domain(&d, dx).unwrap();
        (d, g)
    }

    #[test]
    fn half_plane_layout() {
        let (_, g) = half_plane(0.25);
        assert_eq!(g.nx, 8);
        // rows at heights 0.25 .. 1.75 are unknowns
        assert_eq!(g.node_count(), 8 * 7);
        let k = g.nearest_node(Point::new(0.0, 0.25)).unwrap();
        assert_eq!(g.class(k), NodeClass::NearBoundary);
        let Arm::Crossing(c) = g.arms(k)[2] else { panic!() };
        assert!((g.crossings()[c].theta - 1.0).abs() < 1e-12);
        let top = g.nearest_node(Point::new(0.0, 1.75)).unwrap();
        assert_eq!(g.class(top), NodeClass::TopLid);
        assert!(g.stiffness().is_symmetric(0.0));
    }

    #[test]
    fn arm_lengths_lie_in_unit_interval() {
        let s = BoundaryShape::Sine {
            amplitude: 0.3,
            wavenumber: 1.0,
        };
        let d = GraphDomain::new(s, core::f64::consts::PI, 2.0, true).unwrap();
        let g = Grid::for_domain(&d, core::f64::consts::PI / 32.0).unwrap();
        for c in g.crossings() {
            assert!(c.theta > 0.0 && c.theta <= 1.0);
            if c.kind == BoundaryKind::Region {
                assert!(d.height_above(c.point).abs() < 1e-9);
            }
        }
        // interior nodes see only nodes
        for k in 0..g.node_count() {
            if g.class(k) == NodeClass::Interior {
                assert!(g.arms(k).iter().all(|a| matches!(a, Arm::Node(_))));
            }
        }
    }

    #[test]
    fn interpolation_reproduces_linear_field() {
        let (_, g) = half_plane(0.25);
        let mut f = ScalarField::constant(&g, 0.0);
        f.values = g.node_values(|p| 3.0 * p.height());
        for (c, cr) in g.crossings().iter().enumerate() {
            f.boundary[c] = 3.0 * cr.point.height();
        }
        f.above_lid_slope = 3.0;
        for &(s, y) in &[(0.1, 0.3), (-0.9, 1.1), (0.95, 1.9), (0.2, 2.5), (0.33, 0.1)] {
            let v = f.sample(&g, Point::new(s, y));
            assert!((v - 3.0 * y).abs() < 1e-12, "{s} {y} {v}");
        }
    }

    #[test]
    fn stiffness_annihilates_linear_profile() {
        let (_, g) = half_plane(0.25);
        let s = g.stiffness();
        let u = g.node_values(|p| p.height());
        let gb: Vec<f64> = g.crossings().iter().map(|c| c.point.height()).collect();
        let mut su = vec![0.0; u.len()];
        s.mul_vec(&u, &mut su);
        let load = g.boundary_load(&gb);
        let dx2 = g.dx() * g.dx();
        for k in 0..u.len() {
            assert!((su[k] / dx2 - load[k]).abs() < 1e-10);
        }
    }
}
