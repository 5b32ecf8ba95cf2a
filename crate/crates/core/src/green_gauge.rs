//! Green functions by time integration of the heat kernel, the comparison
//! integrals built from profiles, the 3G ratio and the conditional gauge.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::{GraphDomain, Point};
use crate::grid::{BoundaryKind, Grid, ScalarField};
use crate::kernel_fd::{discrete_delta, Evolution, Scheme, TimeStepping};
use crate::linalg::{linear_fit, CgSettings, SpdSolver};
use crate::potential::Potential;
use crate::profile_solver::NodePotential;
use crate::report::BoundReport;

/// `(1/2π) ln(|x - ȳ| / |x - y|)`, the Green function of `{x_N > M}`.
pub fn half_plane_green_exact(x: Point, y: Point, m: f64) -> f64 {
    let ds = x.lateral() - y.lateral();
    let direct = ds * ds + (x.height() - y.height()).powi(2);
    let image = ds * ds + (x.height() + y.height() - 2.0 * m).powi(2);
    (image / direct).ln() / (4.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenSettings {
    /// `T_max = (t_max_factor · H_top)²`.
    pub t_max_factor: f64,
    /// Decades of snapshots before `T_max` used to fit the tail.
    pub tail_fit_decades: f64,
    pub tail_points: usize,
    /// Estimates whose fitted tail exceeds this share are rejected.
    pub max_tail_share: f64,
    /// Step cap as a fraction of `T_max`. The trapezoid sums telescope, so
    /// the integral depends on the steps only through the final state.
    pub dt_max_fraction: f64,
    pub growth: f64,
}

impl Default for GreenSettings {
    fn default() -> Self {
        Self {
            t_max_factor: 0.25,
            tail_fit_decades: 1.0,
            tail_points: 8,
            max_tail_share: 0.2,
            dt_max_fraction: 0.01,
            growth: 1.2,
        }
    }
}

impl GreenSettings {
    pub fn t_max(&self, grid: &Grid) -> f64 {
        let s = self.t_max_factor * grid.layout.lid;
        s * s
    }

    fn stepping(&self, grid: &Grid) -> TimeStepping {
        let mut st = TimeStepping::for_grid(grid);
        st.dt_max = self.dt_max_fraction * self.t_max(grid);
        st.growth = self.growth;
        st
    }
}

/// `G(x, ·)` on every node, from one heat-kernel run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenField {
    pub source: Point,
    pub source_node: usize,
    pub t_max: f64,
    /// `∫₀^{T_max} p dt`, plus the fitted tail where its share is acceptable.
    pub values: Vec<f64>,
    /// `∫₀^{T_max} p dt`.
    pub integral: Vec<f64>,
    /// Fitted `∫_{T_max}^∞ p dt`; infinite when the fit does not decay.
    pub tail: Vec<f64>,
    /// Fitted exponent `β` of `p ~ C t^{-1-β}`.
    pub beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    FdTimeIntegral,
    ExactHalfPlane,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenEstimate {
    pub x: Point,
    pub y: Point,
    pub value: f64,
    pub method: GreenMethod,
    pub t_max: f64,
    pub beta: f64,
    pub tail_share: f64,
}

impl GreenField {
    pub fn tail_share(&self, k: usize) -> f64 {
        let total = self.integral[k] + self.tail[k];
        if self.tail[k].is_finite() && total > 0.0 {
            self.tail[k] / total
        } else {
            1.0
        }
    }

    /// `G(x, y)` at the node nearest to `y`, rejected when the tail dominates.
    pub fn estimate(&self, grid: &Grid, y: Point, settings: &GreenSettings) -> Result<GreenEstimate> {
        let k = grid.snap(y)?;
        if k == self.source_node {
            return Err(invalid("x and y share a node"));
        }
        let share = self.tail_share(k);
        if !(share <= settings.max_tail_share) {
            return Err(Error::TailShare {
                share,
                limit: settings.max_tail_share,
            });
        }
        Ok(GreenEstimate {
            x: self.source,
            y: grid.point(k),
            value: self.values[k],
            method: GreenMethod::FdTimeIntegral,
            t_max: self.t_max,
            beta: self.beta[k],
            tail_share: share,
        })
    }

    pub fn at_node(&self, k: usize) -> f64 {
        self.values[k]
    }
}

/// `G^W(x, ·) = ∫₀^∞ p^W(t, x, ·) dt`: trapezoid sums over the Crank–Nicolson
/// steps up to `T_max`, then a power-law tail fitted node by node.
pub fn green_fd_field(grid: &Grid, w: &NodePotential, x: Point, settings: &GreenSettings) -> Result<GreenField> {
    let node = grid.snap(x)?;
    let t_max = settings.t_max(grid);
    let n_fit = settings.tail_points.max(2);
    let t_lo = t_max * 10f64.powf(-settings.tail_fit_decades);
    let times: Vec<f64> = (0..n_fit)
        .map(|i| t_lo * (t_max / t_lo).powf(i as f64 / (n_fit - 1) as f64))
        .collect();
    let stepping = settings.stepping(grid);
    if stepping.dt_max > t_lo {
        return Err(Error::StepTooLarge {
            dt: stepping.dt_max,
            limit: t_lo,
        });
    }
    let mut evo = Evolution::standard(grid, w, stepping)?;
    let mut integral = vec![0.0; grid.node_count()];
    let snaps = evo.run(discrete_delta(grid, node), &times, &mut |step, before, after| {
        let dt = step.t1 - step.t0;
        match step.scheme {
            Scheme::BackwardEuler => {
                for (s, a) in integral.iter_mut().zip(after) {
                    *s += dt * a;
                }
            }
            Scheme::CrankNicolson => {
                for ((s, b), a) in integral.iter_mut().zip(before).zip(after) {
                    *s += 0.5 * dt * (a + b);
                }
            }
        }
    })?;
    let log_t: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let mut tail = vec![0.0; grid.node_count()];
    let mut beta = vec![f64::NAN; grid.node_count()];
    let mut ys = vec![0.0; n_fit];
    for k in 0..grid.node_count() {
        let last = snaps[n_fit - 1][k];
        if !(last > 0.0) {
            continue;
        }
        if (0..n_fit).any(|i| !(snaps[i][k] > 0.0)) {
            tail[k] = f64::INFINITY;
            continue;
        }
        for i in 0..n_fit {
            ys[i] = snaps[i][k].ln();
        }
        let (_, slope) = linear_fit(&log_t, &ys)?;
        let b = -1.0 - slope;
        beta[k] = b;
        tail[k] = if b > 0.0 { last * t_max / b } else { f64::INFINITY };
    }
    // Far from the source the last decade is not yet a power law; there the
    // value stays the truncated integral.
    let values = integral
        .iter()
        .zip(&tail)
        .map(|(&i, &t)| {
            if t.is_finite() && t <= settings.max_tail_share * (i + t) {
                i + t
            } else {
                i
            }
        })
        .collect();
    Ok(GreenField {
        source: grid.point(node),
        source_node: node,
        t_max,
        values,
        integral,
        tail,
        beta,
    })
}

/// `G^W(x, y)` by time integration.
pub fn green_fd(
    grid: &Grid,
    w: &NodePotential,
    x: Point,
    y: Point,
    settings: &GreenSettings,
) -> Result<GreenEstimate> {
    if x == y || grid.snap(x)? == grid.snap(y)? {
        return Err(invalid("x and y must be distinct nodes"));
    }
    green_fd_field(grid, w, x, settings)?.estimate(grid, y, settings)
}

/// `(S/Δx² + W)^{-1} δ_x / Δx²`, the discrete Green function of the truncated
/// box solved directly. A cross-check for the time integral.
pub fn green_direct(grid: &Grid, w: &NodePotential, x: Point) -> Result<Vec<f64>> {
    let node = grid.snap(x)?;
    let dx2 = grid.dx() * grid.dx();
    let a = grid.stiffness().scaled_plus_diagonal(1.0 / dx2, &w.values);
    let solver = SpdSolver::new(a, CgSettings::default())?;
    let mut g = vec![0.0; grid.node_count()];
    solver.solve(&discrete_delta(grid, node), &mut g)?;
    Ok(g)
}

/// Green fields by source node, filled once and then only read.
#[derive(Clone, Debug, Default)]
pub struct GreenTable {
    fields: BTreeMap<usize, GreenField>,
}

impl GreenTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, field: GreenField) {
        self.fields.insert(field.source_node, field);
    }

    pub fn field(&self, node: usize) -> Option<&GreenField> {
        self.fields.get(&node)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `G(x, y)` from the run started at `x`.
    pub fn pair(&self, x: usize, y: usize) -> Result<f64> {
        let f = self
            .fields
            .get(&x)
            .ok_or_else(|| Error::MissingPrerequisite(format!("Green field for node {x}")))?;
        Ok(f.values[y])
    }

    /// `G(x, y)`, checked against the tail-share limit.
    pub fn checked_pair(&self, x: usize, y: usize, settings: &GreenSettings) -> Result<f64> {
        let f = self
            .fields
            .get(&x)
            .ok_or_else(|| Error::MissingPrerequisite(format!("Green field for node {x}")))?;
        let share = f.tail_share(y);
        if !(share <= settings.max_tail_share) {
            return Err(Error::TailShare {
                share,
                limit: settings.max_tail_share,
            });
        }
        Ok(f.values[y])
    }
}

/// `∫_{[-a,a]²} ln|z| dz / a² - 4 ln a`.
const SQUARE_LOG: f64 = 2.0 * core::f64::consts::LN_2 - 6.0 + PI;

/// Fit of `G(x, z) ≈ c0 + c1 ln|z - x|` from the rings of nodes around the
/// source, integrated over the source cell.
pub fn singular_cell_integral(grid: &Grid, g: &GreenField) -> Result<f64> {
    let k = g.source_node;
    let dx = grid.dx();
    let rings: [(&[(i64, i64)], f64); 3] = [
        (&[(1, 0), (-1, 0), (0, 1), (0, -1)], dx),
        (&[(1, 1), (1, -1), (-1, 1), (-1, -1)], core::f64::consts::SQRT_2 * dx),
        (&[(2, 0), (-2, 0), (0, 2), (0, -2)], 2.0 * dx),
    ];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (offsets, r) in rings {
        let vals: Option<Vec<f64>> = offsets
            .iter()
            .map(|&(di, dj)| grid.relative_node(k, di, dj).map(|m| g.values[m]))
            .collect();
        if let Some(v) = vals {
            xs.push(r.ln());
            ys.push(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    if xs.len() < 2 {
        return Err(Error::SingularCell("too few complete node rings around the source".into()));
    }
    let (c0, c1) = linear_fit(&xs, &ys)?;
    if !(c1 < 0.0) {
        return Err(Error::SingularCell(format!("no logarithmic decay near the source (c1 = {c1:e})")));
    }
    let a = 0.5 * dx;
    Ok(c0 * 4.0 * a * a + c1 * a * a * (SQUARE_LOG + 4.0 * a.ln()))
}

/// `∫ h(y) G(x, y) W(y) / h(x) dy`, with the source cell replaced by the
/// logarithmic model.
pub fn profile_weighted_mass(grid: &Grid, h: &ScalarField, g: &GreenField, w: &NodePotential) -> Result<f64> {
    if !h.matches(grid) || w.values.len() != grid.node_count() {
        return Err(invalid("fields do not belong to the grid"));
    }
    let x = g.source_node;
    let dx2 = grid.dx() * grid.dx();
    let mut sum = 0.0;
    for k in 0..grid.node_count() {
        if k != x {
            sum += h.values[k] * g.values[k] * w.values[k];
        }
    }
    let cell = if w.values[x] != 0.0 {
        w.values[x] * singular_cell_integral(grid, g)?
    } else {
        0.0
    };
    Ok(sum * dx2 / h.values[x] + cell)
}

/// `∫ G(x,z) G(z,y) W(z) / G(x,y) dz`, with both source cells replaced by
/// the logarithmic model.
pub fn gauge_integral(grid: &Grid, gx: &GreenField, gy: &GreenField, w: &NodePotential) -> Result<f64> {
    let (x, y) = (gx.source_node, gy.source_node);
    if x == y {
        return Err(invalid("x and y must be distinct nodes"));
    }
    let gxy = gx.values[y];
    if !(gxy > 0.0) {
        return Err(Error::Degenerate("G(x, y) is not positive".into()));
    }
    let dx2 = grid.dx() * grid.dx();
    let mut sum = 0.0;
    for k in 0..grid.node_count() {
        if k != x && k != y {
            sum += gx.values[k] * gy.values[k] * w.values[k];
        }
    }
    let mut total = sum * dx2 / gxy;
    if w.values[x] != 0.0 {
        total += w.values[x] * gy.values[x] / gxy * singular_cell_integral(grid, gx)?;
    }
    if w.values[y] != 0.0 {
        total += w.values[y] * gx.values[y] / gxy * singular_cell_integral(grid, gy)?;
    }
    Ok(total)
}

/// `G^W(x, y) / G(x, y)`.
pub fn gauge_from_green(g0: f64, gw: f64) -> Result<f64> {
    if !(g0 > 0.0) {
        return Err(Error::Degenerate("G(x, y) is not positive".into()));
    }
    Ok(gw / g0)
}

/// Checks `e^{-a} - tol ≤ gauge ≤ 1 + tol` on every sample, with `a` the
/// largest gauge integral.
pub fn gauge_bounds(gauges: &[f64], integrals: &[f64], tol: f64) -> BoundReport {
    let a = integrals.iter().copied().fold(0.0, f64::max);
    let lo = gauges.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gauges.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = (-a).exp();
    let mut rep = BoundReport::new("gauge")
        .with_constant("a", a)
        .with_constant("exp(-a)", floor);
    rep.min_ratio = lo;
    rep.max_ratio = hi;
    rep.sample = format!("{} pairs", gauges.len());
    rep.pass = !gauges.is_empty() && a.is_finite() && lo >= floor - tol && hi <= 1.0 + tol;
    rep
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeG {
    /// `G(x,z) G(z,y) / G(x,y)`.
    pub ratio: f64,
    /// `h(z)/h(x) G(x,z) + h(z)/h(y) G(z,y)`.
    pub bound: f64,
}

impl ThreeG {
    /// The smallest constant that bounds this triple.
    pub fn needed(&self) -> f64 {
        self.ratio / self.bound
    }
}

/// Both sides of the 3G inequality from Green values and profile values.
pub fn three_g_ratio(gxz: f64, gzy: f64, gxy: f64, hx: f64, hy: f64, hz: f64) -> Result<ThreeG> {
    if !(gxy > 0.0 && hx > 0.0 && hy > 0.0) {
        return Err(Error::Degenerate("non-positive Green or profile value".into()));
    }
    Ok(ThreeG {
        ratio: gxz * gzy / gxy,
        bound: hz / hx * gxz + hz / hy * gzy,
    })
}

/// Fitted constant `C = max ratio / bound` over the triples. A triple whose
/// bound side vanishes while its ratio does not cannot be bounded.
pub fn three_g_bound_check(triples: &[ThreeG]) -> BoundReport {
    let mut c = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut unboundable = 0usize;
    for t in triples {
        let need = t.needed();
        if !need.is_finite() || !(t.bound > 0.0) {
            unboundable += 1;
            continue;
        }
        c = c.max(need);
        lo = lo.min(need);
    }
    let mut rep = BoundReport::new("three_g")
        .with_constant("C", c)
        .with_constant("unboundable", unboundable as f64);
    rep.min_ratio = lo;
    rep.max_ratio = c;
    rep.sample = format!("{} triples", triples.len());
    rep.pass = triples.len() > 0 && unboundable == 0 && c.is_finite();
    rep
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonIntegral {
    /// `∫_{|x-y|²}^∞ h(x) h(y) / (t h(y+√t)²) dt`.
    pub value: f64,
    /// The same with `x` and `y` exchanged.
    pub swapped: f64,
}

fn comparison_one(h: &dyn Fn(Point) -> f64, x: Point, y: Point) -> Result<f64> {
    let (hx, hy) = (h(x), h(y));
    let s0 = x.distance_sq(&y).ln();
    // In s = ln t the integrand is h(x) h(y) / h(y + e^{s/2})².
    let f = |s: f64| {
        let hv = h(y.shifted((0.5 * s).exp()));
        hx * hy / (hv * hv)
    };
    let span = 46.0;
    let n = 4600;
    let ds = span / n as f64;
    let mut sum = f(s0) + f(s0 + span);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(s0 + i as f64 * ds);
    }
    let end = f(s0 + span);
    let mid = f(s0 + 0.5 * span);
    if !end.is_finite() || !(end < 1e-6 * mid.max(f(s0))) {
        return Err(Error::Divergent(format!(
            "comparison integrand does not decay (end value {end:e})"
        )));
    }
    // Beyond the range the integrand decays like e^{-s}.
    Ok(sum * ds / 3.0 + end)
}

/// The comparison integral of a grid profile, extended linearly above the lid.
pub fn green_comparison_integral(grid: &Grid, h: &ScalarField, x: Point, y: Point) -> Result<ComparisonIntegral> {
    comparison_integral_with(&|p| h.sample(grid, p), x, y)
}

/// The comparison integral for any profile evaluator.
pub fn comparison_integral_with(h: &dyn Fn(Point) -> f64, x: Point, y: Point) -> Result<ComparisonIntegral> {
    if x == y {
        return Err(invalid("the comparison integral needs x ≠ y"));
    }
    Ok(ComparisonIntegral {
        value: comparison_one(h, x, y)?,
        swapped: comparison_one(h, y, x)?,
    })
}

/// The large-time part `D(T) = ∫_T^∞ ∫_{B(x,√t)∩Ω} h(y)² W(y) / (h(y+√t)² t) dy dt`
/// of the decomposition of the profile-weighted mass.
///
/// For `√T` far above the lid and far beyond the lateral period, the inner
/// integral is evaluated on horizontal chords of the ball with the lateral
/// means of `h² W` and of `h` on the lid.
pub struct DecompositionTail {
    x: Point,
    lid: f64,
    lid_mean: f64,
    slope: f64,
    /// `(height, lateral mean of h² W)` on node rows below the lid.
    rows: Vec<(f64, f64)>,
    /// `(ln height, ln mean of h² W)` above the lid.
    upper: Vec<(f64, f64)>,
    upper_step: f64,
}

impl DecompositionTail {
    pub fn new(
        domain: &GraphDomain,
        grid: &Grid,
        h: &ScalarField,
        w: &NodePotential,
        potential: &Potential,
        x: Point,
        t_end: f64,
    ) -> Result<Self> {
        if !h.matches(grid) || w.values.len() != grid.node_count() {
            return Err(invalid("fields do not belong to the grid"));
        }
        let lid = grid.layout.lid;
        let mut sums = vec![0.0; grid.ny];
        for k in 0..grid.node_count() {
            let v = h.values[k];
            sums[grid.cell(k).1] += v * v * w.values[k];
        }
        let mut rows: Vec<(f64, f64)> = (0..grid.ny)
            .map(|j| (lid - (grid.ny - j) as f64 * grid.dx(), sums[j] / grid.nx as f64))
            .collect();
        let lid_vals: Vec<f64> = grid
            .crossings()
            .iter()
            .zip(&h.boundary)
            .filter(|(c, _)| c.kind == BoundaryKind::Lid)
            .map(|(_, &v)| v)
            .collect();
        if lid_vals.is_empty() || !(h.above_lid_slope > 0.0) {
            return Err(Error::Divergent("profile has no increasing extension above the lid".into()));
        }
        let lid_mean = lid_vals.iter().sum::<f64>() / lid_vals.len() as f64;
        let slope = h.above_lid_slope;
        let lateral: Vec<f64> = (0..32)
            .map(|i| -domain.half_width + (i as f64 + 0.5) * 2.0 * domain.half_width / 32.0)
            .collect();
        let mean_w = |y: f64| {
            lateral
                .iter()
                .map(|&s| potential.evaluate(domain, Point::new(s, y)))
                .sum::<f64>()
                / lateral.len() as f64
        };
        let hbar = |y: f64| lid_mean + (y - lid) * slope;
        rows.push((lid, lid_mean * lid_mean * mean_w(lid)));
        let upper_step = 0.02;
        let y_max = x.height() + t_end.sqrt() + 1.0;
        let n_up = ((y_max / lid).ln() / upper_step).ceil() as usize + 1;
        let mut upper = Vec::with_capacity(n_up);
        for i in 0..n_up {
            let y = lid * (i as f64 * upper_step).exp();
            let m = hbar(y) * hbar(y) * mean_w(y);
            upper.push((y.ln(), m.max(1e-300).ln()));
        }
        Ok(Self {
            x,
            lid,
            lid_mean,
            slope,
            rows,
            upper,
            upper_step,
        })
    }

    fn hbar(&self, y: f64) -> f64 {
        self.lid_mean + (y - self.lid) * self.slope
    }

    /// Lateral mean of `h² W` at height `y`.
    fn mean_density(&self, y: f64) -> f64 {
        if y <= self.lid {
            let y0 = self.rows[0].0;
            if y <= y0 {
                return 0.0;
            }
            let step = self.rows[1].0 - y0;
            let f = (y - y0) / step;
            let j = (f.floor() as usize).min(self.rows.len() - 2);
            let a = f - j as f64;
            (1.0 - a) * self.rows[j].1 + a * self.rows[j + 1].1
        } else {
            let f = (y / self.lid).ln() / self.upper_step;
            let j = (f.floor() as usize).min(self.upper.len() - 2);
            let a = f - j as f64;
            ((1.0 - a) * self.upper[j].1 + a * self.upper[j + 1].1).exp()
        }
    }

    /// `∫_{B(x,√t)∩Ω} h² W / (h(y+√t)² t) dy`.
    pub fn inner(&self, t: f64) -> f64 {
        let r = t.sqrt();
        let xn = self.x.height();
        let integrand = |y: f64| {
            let c2 = t - (y - xn) * (y - xn);
            if c2 <= 0.0 {
                return 0.0;
            }
            let hb = self.hbar(y + r);
            2.0 * c2.sqrt() * self.mean_density(y) / (hb * hb)
        };
        let mut total = 0.0;
        // Node rows below the lid.
        let lo = self.rows[0].0.max(xn - r);
        let step = self.rows[1].0 - self.rows[0].0;
        let mut y = lo;
        while y < self.lid.min(xn + r) {
            let y1 = (y + step).min(self.lid).min(xn + r);
            total += 0.5 * (y1 - y) * (integrand(y) + integrand(y1));
            y = y1;
        }
        // Above the lid: log-spaced up to the midpoint of the chord range,
        // then the angle substitution y = x_N + √t sin φ.
        let split = xn + 0.5 * r;
        if split > self.lid {
            let n = 400;
            let q = (split / self.lid).ln() / n as f64;
            let mut prev = (self.lid, integrand(self.lid));
            for i in 1..=n {
                let y1 = self.lid * (i as f64 * q).exp();
                let f1 = integrand(y1);
                total += 0.5 * (y1 - prev.0) * (prev.1 + f1);
                prev = (y1, f1);
            }
        }
        let phi0 = ((split.max(self.lid) - xn) / r).clamp(-1.0, 1.0).asin();
        let n = 200;
        let dphi = (0.5 * PI - phi0) / n as f64;
        for i in 0..n {
            let phi = phi0 + (i as f64 + 0.5) * dphi;
            let y = xn + r * phi.sin();
            let hb = self.hbar(y + r);
            total += 2.0 * r * phi.cos() * r * phi.cos() * self.mean_density(y) / (hb * hb) * dphi;
        }
        total / t
    }

    /// `D(T)` for each `T` in `ts`, integrating up to `t_end` and closing the
    /// remainder with the local power law of the inner integral.
    pub fn tails(&self, ts: &[f64], t_end: f64) -> Result<Vec<f64>> {
        let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
        if !(t_min > 0.0) || !(t_end > t_min) {
            return Err(invalid("tail times must be positive and below t_end"));
        }
        let n = ((t_end / t_min).ln() / 0.05).ceil() as usize;
        let ds = (t_end / t_min).ln() / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| t_min * (i as f64 * ds).exp()).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| self.inner(t) * t).collect();
        let (ja, jb) = (vals[n - 1], vals[n]);
        let decay = (ja / jb).ln() / ds;
        if !(decay > 0.0) {
            return Err(Error::Divergent("decomposition integrand does not decay".into()));
        }
        // Cumulative trapezoid from the top in s = ln t.
        let mut cum = vec![0.0; n + 1];
        cum[n] = jb / decay;
        for i in (0..n).rev() {
            cum[i] = cum[i + 1] + 0.5 * ds * (vals[i] + vals[i + 1]);
        }
        let at = |t: f64| {
            let f = (t / t_min).ln() / ds;
            let i = (f.floor() as usize).min(n - 1);
            let a = f - i as f64;
            // Interpolate the log of the cumulative integral.
            ((1.0 - a) * cum[i].ln() + a * cum[i + 1].ln()).exp()
        };
        Ok(ts.iter().map(|&t| at(t)).collect())
    }
}

/// Log-log slope of `D(T)` against `T`.
pub fn tail_exponent(ts: &[f64], tails: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = tails.iter().map(|d| d.ln()).collect();
    Ok(linear_fit(&xs, &ys)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane_green_oracle() {
        let g = half_plane_green_exact(Point::new(0.0, 1.0), Point::new(0.0, 2.0), 0.0);
        assert!((g - 0.1748495762830299).abs() < 1e-15);
    }

    #[test]
    fn square_log_constant() {
        // polar midpoint rule over one octant of [-1, 1]²
        let n = 200_000;
        let h = PI / 4.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let r = 1.0 / ((i as f64 + 0.5) * h).cos();
            s += r * r / 2.0 * r.ln() - r * r / 4.0;
        }
        assert!((8.0 * s * h - SQUARE_LOG).abs() < 1e-9);
    }

    #[test]
    fn three_g_examples() {
        let t = three_g_ratio(0.2, 0.3, 0.1, 1.0, 2.0, 1.5).unwrap();
        assert!((t.ratio - 0.6).abs() < 1e-15);
        let swapped = three_g_ratio(0.3, 0.2, 0.1, 2.0, 1.0, 1.5).unwrap();
        assert_eq!(t.ratio, swapped.ratio);
        assert!((t.bound - swapped.bound).abs() < 1e-15);
        let rep = three_g_bound_check(&[t, swapped]);
        assert!(rep.pass);
        let bad = ThreeG { ratio: 1.0, bound: 0.0 };
        assert!(!three_g_bound_check(&[t, bad]).pass);
    }

    #[test]
    fn gauge_report_examples() {
        assert!(gauge_bounds(&[1.0, 0.995], &[0.0, 0.0], 0.02).pass);
        assert!(gauge_bounds(&[0.7, 0.9], &[0.4, 0.3], 0.02).pass);
        assert!(!gauge_bounds(&[0.5], &[0.4], 0.02).pass);
        assert!(!gauge_bounds(&[1.05], &[0.1], 0.02).pass);
    }

    #[test]
    fn comparison_integral_is_degree_zero_in_h() {
        let h = |p: Point| p.height();
        let h2 = |p: Point| 2.0 * p.height();
        let (x, y) = (Point::new(0.0, 1.0), Point::new(0.5, 2.0));
        let a = comparison_integral_with(&h, x, y).unwrap();
        let b = comparison_integral_with(&h2, x, y).unwrap();
        assert!((a.value - b.value).abs() < 1e-12 * a.value);
        assert!(comparison_integral_with(&h, x, x).is_err());
        let flat = |_: Point| 1.0;
        assert!(matches!(
            comparison_integral_with(&flat, x, y),
            Err(Error::Divergent(_))
        ));
    }
}
