//! One experiment: the shared grids and profiles, and the checks that
//! read them.

use std::sync::OnceLock;
use std::time::Instant;

use lipkernel_core::geometry::{BoundaryShape, GraphDomain, Point};
use lipkernel_core::green_gauge::{
    green_comparison_integral, green_fd_field, half_plane_green_exact, profile_weighted_mass, DecompositionTail,
    GreenField, GreenSettings, GreenTable,
};
use lipkernel_core::grid::{Grid, ScalarField};
use lipkernel_core::kernel_fd::{fd_heat_kernel_snapshots, half_space_kernel_exact, KernelEstimate, TimeStepping};
use lipkernel_core::kernel_mc::{chunk_count, mc_kernel_estimate, sample_chunk, PathBatch};
use lipkernel_core::potential::{ExactPotential, Potential, PotentialTable};
use lipkernel_core::profile_solver::{solve_harmonic_profile, solve_schrodinger_profile, NodePotential};
use lipkernel_core::verify::{self, BoundReport, GreenLevel, KernelPlan, Level, PlanSpec};
use lipkernel_core::{Error, Result};

use crate::config::{Check, ExperimentConfig, ThetaScheme};
use crate::parallel::par_map;

/// A detail table written next to the reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest decimal form that round-trips.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Debug)]
pub struct CheckOutput {
    pub check: Check,
    pub reports: Vec<BoundReport>,
    pub tables: Vec<Table>,
    pub seconds: f64,
}

impl CheckOutput {
    pub fn pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

/// Grid, profiles and node potential at one resolution.
pub struct LevelData {
    pub grid: Grid,
    pub h: ScalarField,
    pub w: NodePotential,
    pub hw: ScalarField,
}

type Lazy<T> = OnceLock<Result<T>>;

pub struct Study {
    pub config: ExperimentConfig,
    /// `None` for the cone wedge, which has no truncated graph domain.
    pub domain: Option<GraphDomain>,
    pub potential: Potential,
    pub jobs: usize,
    coarse: Lazy<LevelData>,
    fine: Lazy<LevelData>,
    table: Lazy<PotentialTable>,
}

fn cached<T>(cell: &Lazy<T>, build: impl FnOnce() -> Result<T>) -> Result<&T> {
    cell.get_or_init(build).as_ref().map_err(Clone::clone)
}

fn prerequisite(what: &str) -> Error {
    Error::MissingPrerequisite(what.into())
}

impl Study {
    /// Builds the domain and potential; the config must already be valid.
    pub fn new(config: ExperimentConfig, jobs: usize) -> Result<Self> {
        let domain = if config.is_cone() {
            None
        } else {
            Some(config.domain.build(config.grid.top).map_err(Error::InvalidParameter)?)
        };
        let potential = config.potential.build().map_err(Error::InvalidParameter)?;
        Ok(Self {
            config,
            domain,
            potential,
            jobs: jobs.max(1),
            coarse: OnceLock::new(),
            fine: OnceLock::new(),
            table: OnceLock::new(),
        })
    }

    pub fn domain(&self) -> Result<&GraphDomain> {
        self.domain.as_ref().ok_or_else(|| prerequisite("a graph domain"))
    }

    fn build_level(&self, dx: f64) -> Result<LevelData> {
        self.level_for(self.domain()?, dx)
    }

    fn level_for(&self, domain: &GraphDomain, dx: f64) -> Result<LevelData> {
        let grid = Grid::for_domain(domain, dx)?;
        let h = solve_harmonic_profile(domain, &grid)?;
        let w = NodePotential::new(
            &grid,
            &ExactPotential {
                potential: &self.potential,
                domain,
            },
        );
        let hw = if w.is_zero() {
            h.clone()
        } else {
            solve_schrodinger_profile(domain, &grid, &w)?
        };
        Ok(LevelData { grid, h, w, hw })
    }

    pub fn coarse(&self) -> Result<&LevelData> {
        cached(&self.coarse, || self.build_level(self.config.grid.dx))
    }

    pub fn fine(&self) -> Result<&LevelData> {
        cached(&self.fine, || self.build_level(0.5 * self.config.grid.dx))
    }

    /// `W` on a lattice for path sampling.
    pub fn potential_table(&self) -> Result<&PotentialTable> {
        cached(&self.table, || {
            PotentialTable::new(&self.potential, self.domain()?, 0.5 * self.config.grid.dx)
        })
    }

    /// Time stepping of the kernel checks on `grid`.
    pub fn stepping(&self, grid: &Grid) -> TimeStepping {
        let fd = &self.config.fd;
        let mut st = TimeStepping::for_grid(grid);
        if let Some(dt) = fd.dt {
            st.dt_max = dt;
        }
        st.growth = fd.growth;
        st.euler_half_steps = match fd.scheme {
            ThetaScheme::RannacherCn => st.euler_half_steps,
            ThetaScheme::CrankNicolson => 0,
            ThetaScheme::BackwardEuler => usize::MAX,
        };
        st
    }

    pub fn green_settings(&self) -> GreenSettings {
        let g = &self.config.green;
        GreenSettings {
            t_max_factor: g.t_max_factor,
            tail_fit_decades: g.tail_fit_decades,
            tail_points: g.tail_points,
            max_tail_share: g.max_tail_share,
            dt_max_fraction: g.dt_fraction,
            growth: g.growth,
        }
    }

    fn flat_level(&self) -> Option<f64> {
        match self.domain.as_ref()?.shape {
            BoundaryShape::Flat { level } => Some(level),
            _ => None,
        }
    }

    /// Runs one check and times it.
    pub fn run(&self, check: Check) -> Result<CheckOutput> {
        let start = Instant::now();
        let (reports, tables) = match check {
            Check::Geometry => self.geometry()?,
            Check::Profiles => self.profiles()?,
            Check::Kernels => self.kernels()?,
            Check::Green => self.green()?,
            Check::Tail => self.tail()?,
            Check::MainTheorem => self.main_theorem()?,
        };
        Ok(CheckOutput {
            check,
            reports,
            tables,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn geometry(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        let domain = self.domain()?;
        let n = self.config.verify.geometry_samples;
        let seed = self.config.seed;
        let mut reports: Vec<BoundReport> = verify::geometry_lemma_reports(domain, n, seed, 1e-6)?.into();
        let env = self.potential.verify_envelope(domain, n, seed);
        let mut rep = BoundReport::new("potential_envelope")
            .with_constant("c", self.potential.envelope_c)
            .with_constant("eps", self.potential.envelope_eps)
            .with_constant("worst_margin", env.worst_margin);
        rep.sample = format!(
            "{} points, seed {seed}, worst at ({}, {})",
            env.samples,
            env.worst_point.lateral(),
            env.worst_point.height()
        );
        rep.pass = env.holds;
        reports.push(rep);
        Ok((reports, Vec::new()))
    }

    fn profiles(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        if self.config.is_cone() {
            return Ok((vec![verify::wedge_report(self.config.grid.dx, 0.02)?], Vec::new()));
        }
        let domain = self.domain()?;
        let (c, f) = (self.coarse()?, self.fine()?);
        let mut reports = vec![
            verify::profile_shape_report(&f.grid, &f.h),
            verify::profile_halfspace_report(domain, (&c.grid, &c.h), (&f.grid, &f.h)),
        ];
        if !c.w.is_zero() {
            reports.push(verify::profile_sandwich_report(
                domain,
                (&c.grid, &c.h, &c.hw),
                (&f.grid, &f.h, &f.hw),
            )?);
        }
        let tall = self.config.domain.build(2.0 * self.config.grid.top).map_err(Error::InvalidParameter)?;
        let tall = self.level_for(&tall, self.config.grid.dx)?;
        reports.push(verify::lid_sensitivity_report(
            domain,
            &c.grid,
            &[&c.h, &c.hw],
            &tall.grid,
            &[&tall.h, &tall.hw],
            0.02,
        ));
        let samples = verify::volume_samples(domain, &c.grid, self.config.verify.volume_samples, self.config.seed);
        reports.push(verify::volume_report(domain, (&c.grid, &c.h), (&f.grid, &f.h), &samples)?);
        let mut field = Table::new("profile", &["x", "y", "h", "h_w", "w"]);
        for k in 0..c.grid.node_count() {
            let p = c.grid.point(k);
            field.push(vec![
                num(p.lateral()),
                num(p.height()),
                num(c.h.values[k]),
                num(c.hw.values[k]),
                num(c.w.values[k]),
            ]);
        }
        Ok((reports, vec![field]))
    }

    /// Paths from `x` up to `t`, sampled chunk by chunk across the jobs.
    pub fn sample_paths(&self, x: Point, t: f64) -> Result<PathBatch> {
        let domain = self.domain()?;
        let mc = &self.config.mc;
        let table = self.potential_table()?;
        let chunks: Vec<usize> = (0..chunk_count(mc.n_paths)).collect();
        let parts = par_map(self.jobs, &chunks, |&c| {
            sample_chunk(domain, table, x, t, mc.dt_factor * t, mc.n_paths, self.config.mc_seed(), c)
        });
        PathBatch::concat(parts.into_iter().collect::<Result<Vec<_>>>()?)
    }

    fn kernels(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        let domain = self.domain()?;
        let c = self.coarse()?;
        let fd = &self.config.fd;
        let st = self.stepping(&c.grid);
        let zero = NodePotential::zero(&c.grid);
        let p0 = fd_heat_kernel_snapshots(&c.grid, &zero, fd.source, &fd.times, st)?;
        let with_w = !c.w.is_zero();
        let pw = if with_w {
            fd_heat_kernel_snapshots(&c.grid, &c.w, fd.source, &fd.times, st)?
        } else {
            p0.clone()
        };
        let mut reports = Vec::new();
        let exact_level = self.flat_level().filter(|_| !with_w);
        if let Some(level) = self.flat_level() {
            reports.push(verify::half_space_report(&c.grid, &p0, level, 0.05));
        }
        if with_w {
            reports.push(verify::kernel_monotone_in_w(&pw, &p0));
        }
        reports.push(verify::doob_report(&c.grid, &c.hw, &c.w, fd.source, &fd.times, st)?);
        let t_last = fd.times[fd.times.len() - 1];
        let y = Point::new(fd.source.lateral() + 0.5, fd.source.height() + 0.5);
        if domain.contains(y) && fd.times.len() > 1 {
            reports.push(verify::chapman_kolmogorov_report(&c.grid, &c.w, fd.source, y, fd.times[0], t_last, st)?);
        }

        let mc = &self.config.mc;
        let mut probes_table = Table::new(
            "mc_probes",
            &["t", "x", "y", "reference", "mc", "stderr", "reference_kind"],
        );
        let mut batches = Vec::new();
        for k in &pw {
            let batch = self.sample_paths(k.source, k.t)?;
            let probes = verify::mc_probes(domain, &c.grid, k, mc.probes, 2.0 * mc.bandwidth);
            let reference = |q: Point| reference_value(k, &c.grid, exact_level, q);
            let id = format!("mc_crosscheck_t={}", k.t);
            reports.push(verify::mc_crosscheck_report(&id, domain, &batch, &probes, &reference, mc.bandwidth)?);
            for &q in &probes {
                let e = mc_kernel_estimate(domain, &batch, q, mc.bandwidth)?;
                probes_table.push(vec![
                    num(k.t),
                    num(q.lateral()),
                    num(q.height()),
                    num(reference(q)),
                    num(e.value),
                    num(e.stderr),
                    if exact_level.is_some() { "exact" } else { "fd" }.into(),
                ]);
            }
            batches.push(batch);
        }
        let exact: Option<Vec<f64>> = exact_level.map(|level| {
            fd.times
                .iter()
                .map(|&t| verify::half_line_survival(pw[0].source.height() - level, t))
                .collect()
        });
        reports.push(verify::survival_report(&batches, exact.as_deref()));

        let mut kernel = Table::new("kernel", &["t", "x", "y", "p"]);
        for k in &pw {
            let max = k.max();
            for n in 0..c.grid.node_count() {
                if k.values[n] >= 1e-6 * max {
                    let p = c.grid.point(n);
                    kernel.push(vec![num(k.t), num(p.lateral()), num(p.height()), num(k.values[n])]);
                }
            }
        }
        Ok((reports, vec![probes_table, kernel]))
    }

    /// Green fields from each source under `w`, built across the jobs.
    fn green_table(&self, grid: &Grid, w: &NodePotential, sources: &[Point]) -> Result<GreenTable> {
        let settings = self.green_settings();
        let fields = par_map(self.jobs, sources, |&p| green_fd_field(grid, w, p, &settings));
        let mut table = GreenTable::new();
        for f in fields {
            table.insert(f?);
        }
        Ok(table)
    }

    fn green(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        let domain = self.domain()?;
        let settings = self.green_settings();
        let g = &self.config.green;
        let mut reports = Vec::new();
        let mut tables = Vec::new();
        let c = self.coarse()?;
        let zero = NodePotential::zero(&c.grid);

        if let Some(level) = self.flat_level() {
            let both = self.green_table(&c.grid, &zero, &[g.source, g.target])?;
            let field = |p: Point| -> Result<&GreenField> {
                both.field(c.grid.snap(p)?).ok_or_else(|| prerequisite("Green field"))
            };
            let est = field(g.source)?.estimate(&c.grid, g.target, &settings)?;
            let back = field(g.target)?.estimate(&c.grid, g.source, &settings)?;
            let exact = half_plane_green_exact(est.x, est.y, level);
            reports.push(verify::green_oracle_report(&est, back.value, exact, 0.05));
        }

        if !c.w.is_zero() {
            let f = self.fine()?;
            let pool = verify::green_pool(
                domain,
                &c.grid,
                g.pool,
                g.pool_spacing,
                g.pool_heights.0,
                g.pool_heights.1,
                self.config.seed,
            )?;
            let c0 = self.green_table(&c.grid, &zero, &pool)?;
            let cw = self.green_table(&c.grid, &c.w, &pool)?;
            let f0 = self.green_table(&f.grid, &NodePotential::zero(&f.grid), &pool)?;
            let fw = self.green_table(&f.grid, &f.w, &pool)?;
            let lc = GreenLevel {
                grid: &c.grid,
                h: &c.h,
                without: &c0,
                with_w: &cw,
            };
            let lf = GreenLevel {
                grid: &f.grid,
                h: &f.h,
                without: &f0,
                with_w: &fw,
            };
            let pairs = verify::pool_pairs(pool.len(), self.config.gauge_pairs);
            let triples = verify::pool_triples(pool.len(), g.triples);
            reports.push(verify::green_sandwich_report(&lc, &lf, &pool, &pairs, &settings)?);
            reports.push(verify::three_g_report(&lc, &lf, &pool, &triples, &settings)?);

            let doubled = if g.box_doubling {
                let mut spec = self.config.domain.clone();
                spec.half_width *= 2.0;
                let d2 = spec.build(self.config.grid.top).map_err(Error::InvalidParameter)?;
                let g2 = Grid::for_domain(&d2, c.grid.dx())?;
                let w2 = NodePotential::new(
                    &g2,
                    &ExactPotential {
                        potential: &self.potential,
                        domain: &d2,
                    },
                );
                let t2 = self.green_table(&g2, &NodePotential::zero(&g2), &pool)?;
                Some((g2, t2, w2))
            } else {
                None
            };
            reports.push(verify::gauge_report(
                &lc,
                &c.w,
                doubled.as_ref().map(|(a, b, c)| (a, b, c)),
                &pool,
                &pairs,
                &settings,
            )?);

            let mut masses = Vec::with_capacity(pool.len());
            for p in &pool {
                let field = c0.field(c.grid.snap(*p)?).ok_or_else(|| prerequisite("Green field"))?;
                masses.push(profile_weighted_mass(&c.grid, &c.h, field, &c.w)?);
            }
            let sup = masses.iter().copied().fold(0.0, f64::max);
            let mut mass = BoundReport::new("profile_weighted_mass").with_constant("sup", sup);
            mass.sample = format!("{} pool sources, dx = {}", pool.len(), c.grid.dx());
            mass.min_ratio = masses.iter().copied().fold(f64::INFINITY, f64::min);
            mass.max_ratio = sup;
            mass.pass = sup.is_finite() && masses.iter().all(|m| *m >= 0.0);
            reports.push(mass);

            let mut pair_table = Table::new(
                "green_pairs",
                &[
                    "x1", "x2", "y1", "y2", "g0", "g_w", "gauge", "tail_share", "comparison", "comparison_swapped",
                ],
            );
            for &(i, j) in &pairs {
                let (a, b) = (c.grid.snap(pool[i])?, c.grid.snap(pool[j])?);
                let g0 = c0.pair(a, b)?;
                let gw = cw.pair(a, b)?;
                let share = c0.field(a).map_or(f64::NAN, |fx| fx.tail_share(b));
                let cmp = green_comparison_integral(&c.grid, &c.h, pool[i], pool[j]);
                let (v, s) = cmp.map_or((f64::NAN, f64::NAN), |ci| (ci.value, ci.swapped));
                pair_table.push(vec![
                    num(pool[i].lateral()),
                    num(pool[i].height()),
                    num(pool[j].lateral()),
                    num(pool[j].height()),
                    num(g0),
                    num(gw),
                    num(gw / g0),
                    num(share),
                    num(v),
                    num(s),
                ]);
            }
            tables.push(pair_table);
        }
        if reports.is_empty() {
            return Err(prerequisite("the green check needs a flat domain or a nonzero potential"));
        }
        Ok((reports, tables))
    }

    fn tail(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        let domain = self.domain()?;
        let c = self.coarse()?;
        let t = &self.config.tail;
        let tail = DecompositionTail::new(domain, &c.grid, &c.h, &c.w, &self.potential, t.source, t.t_end)?;
        let (lo, hi) = t.window;
        let ts: Vec<f64> = (0..t.points)
            .map(|i| lo * (hi / lo).powf(i as f64 / (t.points - 1) as f64))
            .collect();
        let ds = tail.tails(&ts, t.t_end)?;
        let rep = verify::tail_exponent_report(self.potential.envelope_eps, &ts, &ds, t.tolerance)?;
        let mut table = Table::new("tail", &["T", "D"]);
        for (a, b) in ts.iter().zip(&ds) {
            table.push(vec![num(*a), num(*b)]);
        }
        Ok((vec![rep], vec![table]))
    }

    pub fn kernel_plan(&self) -> Result<KernelPlan> {
        let v = &self.config.verify;
        let spec = PlanSpec {
            sources: v.sources,
            times: v.times,
            targets: v.targets,
            seed: self.config.seed,
            ..PlanSpec::default()
        };
        verify::kernel_plan(self.domain()?, &self.coarse()?.grid, &spec)
    }

    fn main_theorem(&self) -> Result<(Vec<BoundReport>, Vec<Table>)> {
        let domain = self.domain()?;
        let (c, f) = (self.coarse()?, self.fine()?);
        let plan = self.kernel_plan()?;
        let st = self.stepping(&c.grid);
        let mut reports = Vec::new();
        let mut table = Table::new("main_theorem_fit", &["id", "level", "c1", "c2", "c3", "c4", "spread"]);
        let mut run = |id: &str, wc: &NodePotential, wf: &NodePotential| -> Result<()> {
            let lc = Level {
                grid: &c.grid,
                h: &c.h,
                w: wc,
                stepping: st,
            };
            let lf = Level {
                grid: &f.grid,
                h: &f.h,
                w: wf,
                stepping: st.halved(),
            };
            let out = verify::main_theorem_check(domain, &lc, &lf, &plan, id)?;
            for (level, fit) in [("coarse", out.coarse), ("fine", out.fine)] {
                if let Some(s) = fit {
                    table.push(vec![
                        id.into(),
                        level.into(),
                        num(s.c1),
                        num(s.c2),
                        num(s.c3),
                        num(s.c4),
                        num(s.spread),
                    ]);
                }
            }
            reports.push(out.report);
            reports.push(out.remark);
            reports.extend(out.ball);
            Ok(())
        };
        let (zc, zf) = (NodePotential::zero(&c.grid), NodePotential::zero(&f.grid));
        run("main_theorem_w0", &zc, &zf)?;
        if !c.w.is_zero() {
            run("main_theorem", &c.w, &f.w)?;
        }
        Ok((reports, vec![table]))
    }
}

fn reference_value(k: &KernelEstimate, grid: &Grid, exact_level: Option<f64>, y: Point) -> f64 {
    match exact_level {
        Some(level) => half_space_kernel_exact(k.t, k.source, y, level),
        None => k.at(grid, y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn stepping_follows_the_scheme() {
        let text = "run.seed = 1\nrun.checks = geometry\ndomain.kind = flat\ndomain.box = 2\ngrid.dx = 0.25\n\
                    grid.H_top = 4\nfd.theta_scheme = crank_nicolson\nfd.dt = 0.01\n";
        let s = Study::new(parse(text).unwrap(), 1).unwrap();
        let st = s.stepping(&s.coarse().unwrap().grid);
        assert_eq!(st.euler_half_steps, 0);
        assert_eq!(st.dt_max, 0.01);
    }
}
