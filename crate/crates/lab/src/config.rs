//! Experiment files: UTF-8 text, one `section.key = value` per line.
//!
//! Blank lines and lines whose first non-blank character is `#` are
//! ignored. A `#` anywhere else is part of the value. The full grammar and
//! the key table live in `docs/config.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use lipkernel_core::geometry::{BoundaryShape, GraphDomain, Point};
use lipkernel_core::potential::{Bump, Potential, PotentialKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry; 0 when the problem is global.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// The checks a run can request, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Geometry,
    Profiles,
    Kernels,
    Green,
    Tail,
    MainTheorem,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Geometry,
        Check::Profiles,
        Check::Kernels,
        Check::Green,
        Check::Tail,
        Check::MainTheorem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Geometry => "geometry",
            Check::Profiles => "profiles",
            Check::Kernels => "kernels",
            Check::Green => "green",
            Check::Tail => "tail",
            Check::MainTheorem => "main_theorem",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Flat,
    Sine,
    ClippedV,
    Table,
    ConeWedge,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Flat => "flat",
            DomainKind::Sine => "sine",
            DomainKind::ClippedV => "clipped_v",
            DomainKind::Table => "table",
            DomainKind::ConeWedge => "cone_wedge",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            DomainKind::Flat,
            DomainKind::Sine,
            DomainKind::ClippedV,
            DomainKind::Table,
            DomainKind::ConeWedge,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub params: Vec<f64>,
    /// Overrides for the shape's own `(L, M)`.
    pub lipschitz: Option<f64>,
    pub bound: Option<f64>,
    /// Lateral half width `R` of the box `[-R, R]`.
    pub half_width: f64,
    pub periodic: bool,
}

impl DomainSpec {
    pub fn shape(&self) -> Result<BoundaryShape, String> {
        let p = &self.params;
        let want = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(format!("domain.params for {} takes {n} numbers, got {}", self.kind.name(), p.len()))
            }
        };
        Ok(match self.kind {
            DomainKind::Flat => {
                if p.len() > 1 {
                    want(1)?;
                }
                BoundaryShape::Flat {
                    level: p.first().copied().unwrap_or(0.0),
                }
            }
            DomainKind::Sine => {
                want(2)?;
                BoundaryShape::Sine {
                    amplitude: p[0],
                    wavenumber: p[1],
                }
            }
            DomainKind::ClippedV => {
                want(2)?;
                BoundaryShape::ClippedV { slope: p[0], cap: p[1] }
            }
            DomainKind::Table => {
                if p.len() % 2 != 0 {
                    return Err("domain.params for table takes x, f(x) pairs".into());
                }
                let knots = p.chunks(2).map(|c| (c[0], c[1])).collect();
                BoundaryShape::table(knots, self.periodic).map_err(|e| e.to_string())?
            }
            DomainKind::ConeWedge => BoundaryShape::Cone,
        })
    }

    /// The truncated domain with lid at `top`.
    pub fn build(&self, top: f64) -> Result<GraphDomain, String> {
        let shape = self.shape()?;
        let l = self.lipschitz.unwrap_or_else(|| shape.lipschitz());
        let m = self.bound.unwrap_or_else(|| shape.sup_norm());
        GraphDomain::with_constants(shape, l, m, self.half_width, top, self.periodic).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialChoice {
    Zero,
    PureDecay,
    Bump,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialChoice,
    pub c: f64,
    pub eps: f64,
    pub bump: Bump,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential, String> {
        let kind = match self.kind {
            PotentialChoice::Zero => return Ok(Potential::zero()),
            PotentialChoice::PureDecay => PotentialKind::PureDecay,
            PotentialChoice::Bump => PotentialKind::Bump(self.bump),
            PotentialChoice::Product => PotentialKind::Product(self.bump),
        };
        Potential::new(kind, self.c, self.eps).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Coarse spacing; refinement reports add a level at `dx / 2`.
    pub dx: f64,
    pub top: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaScheme {
    /// Backward-Euler half steps, then Crank–Nicolson.
    RannacherCn,
    CrankNicolson,
    BackwardEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSpec {
    /// Step cap; `None` uses the grid spacing.
    pub dt: Option<f64>,
    pub growth: f64,
    pub scheme: ThetaScheme,
    pub times: Vec<f64>,
    pub source: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSpec {
    pub n_paths: usize,
    /// `dt = dt_factor · t`.
    pub dt_factor: f64,
    /// `None` uses the run seed.
    pub seed: Option<u64>,
    pub bandwidth: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenSpec {
    pub t_max_factor: f64,
    pub tail_fit_decades: f64,
    pub tail_points: usize,
    pub max_tail_share: f64,
    pub dt_fraction: f64,
    pub growth: f64,
    /// Sources of the Green pool.
    pub pool: usize,
    pub pool_spacing: f64,
    pub pool_heights: (f64, f64),
    pub triples: usize,
    pub box_doubling: bool,
    /// Pair for the single-value estimate.
    pub source: Point,
    pub target: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub sources: usize,
    pub times: usize,
    pub targets: usize,
    pub geometry_samples: usize,
    pub volume_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailSpec {
    pub window: (f64, f64),
    pub points: usize,
    pub t_end: f64,
    pub source: Point,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub out: Option<PathBuf>,
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub fd: FdSpec,
    pub mc: McSpec,
    pub green: GreenSpec,
    pub gauge_pairs: usize,
    pub verify: VerifySpec,
    pub tail: TailSpec,
}

impl ExperimentConfig {
    pub fn mc_seed(&self) -> u64 {
        self.mc.seed.unwrap_or(self.seed)
    }

    pub fn is_cone(&self) -> bool {
        self.domain.kind == DomainKind::ConeWedge
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "run.name",
    "run.seed",
    "run.checks",
    "run.out",
    "domain.kind",
    "domain.params",
    "domain.L",
    "domain.M",
    "domain.box",
    "domain.periodic",
    "potential.kind",
    "potential.c",
    "potential.eps",
    "potential.bump.height",
    "potential.bump.center",
    "potential.bump.radius",
    "grid.dx",
    "grid.H_top",
    "grid.anchor",
    "fd.dt",
    "fd.growth",
    "fd.theta_scheme",
    "fd.times",
    "fd.source",
    "mc.n_paths",
    "mc.dt_factor",
    "mc.seed",
    "mc.bandwidth",
    "mc.probes",
    "green.T_max_factor",
    "green.tail_fit_decades",
    "green.tail_points",
    "green.max_tail_share",
    "green.dt_fraction",
    "green.growth",
    "green.pool",
    "green.pool_spacing",
    "green.pool_heights",
    "green.triples",
    "green.box_doubling",
    "green.source",
    "green.target",
    "gauge.sample_pairs",
    "verify.sources",
    "verify.times",
    "verify.targets",
    "verify.geometry_samples",
    "verify.volume_samples",
    "tail.window",
    "tail.points",
    "tail.t_end",
    "tail.source",
    "tail.tolerance",
];

/// Parses a number: a decimal literal or `pi`, optionally joined by `*` and
/// `/` (`4*pi`, `pi/16`, `-2.5e-3`).
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = s;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        let v = match tok {
            "pi" => std::f64::consts::PI,
            "-pi" => -std::f64::consts::PI,
            _ if tok.chars().any(|c| c.is_ascii_digit()) => tok.parse::<f64>().ok()?,
            _ => return None,
        };
        value = if op == '*' { value * v } else { value / v };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    value.is_finite().then_some(value)
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key)
            .map(|(line, v)| parse_number(&v).ok_or_else(|| ConfigError::at(line, format!("{key}: `{v}` is not a number"))))
            .transpose()
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let line = self.line(key);
        let v = self.number(key)?.unwrap_or(default);
        if !(v > 0.0) {
            return Err(ConfigError::at(line, format!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(default);
        };
        match parse_number(&v) {
            Some(x) if x >= 1.0 && x.fract() == 0.0 && x < 1e15 => Ok(x as usize),
            _ => Err(ConfigError::at(line, format!("{key}: `{v}` is not a positive integer"))),
        }
    }

    fn seed(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.raw(key)
            .map(|(line, v)| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| ConfigError::at(line, format!("{key}: `{v}` is not an unsigned 64-bit seed")))
            })
            .transpose()
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(default);
        };
        match v.trim() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(ConfigError::at(line, format!("{key}: `{v}` is not a boolean"))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<(usize, Vec<f64>)>, ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(|s| parse_number(s).ok_or_else(|| ConfigError::at(line, format!("{key}: `{}` is not a number", s.trim()))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some((line, items)))
    }

    fn pair(&mut self, key: &str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some((_, v)) if v.len() == 2 => Ok((v[0], v[1])),
            Some((line, v)) => Err(ConfigError::at(line, format!("{key} takes two numbers, got {}", v.len()))),
        }
    }

    fn point(&mut self, key: &str, default: Point) -> Result<Point, ConfigError> {
        let (a, b) = self.pair(key, (default.lateral(), default.height()))?;
        Ok(Point::new(a, b))
    }

    fn word(&mut self, key: &str) -> Option<(usize, String)> {
        self.raw(key).map(|(l, v)| (l, v.trim().to_string()))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "expected `section.key = value`"))?;
        let key = key.trim();
        if !key.contains('.') {
            return Err(ConfigError::at(line, format!("key `{key}` has no section")));
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::at(line, format!("unknown key `{key}`")));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("key `{key}` has no value")));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::at(line, format!("key `{key}` repeats line {first}")));
        }
    }
    Ok(Entries { map })
}

/// Parses and validates an experiment file.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut e = tokenize(text)?;
    let name = e.word("run.name").map(|x| x.1).unwrap_or_else(|| "experiment".into());
    let seed = e
        .seed("run.seed")?
        .ok_or_else(|| ConfigError::at(0, "run.seed is required"))?;
    let (checks_line, checks_raw) = e
        .word("run.checks")
        .ok_or_else(|| ConfigError::at(0, "run.checks is required"))?;
    let mut checks = Vec::new();
    for item in checks_raw.split(',').map(str::trim) {
        if item == "all" {
            checks.extend(Check::ALL);
            continue;
        }
        checks.push(Check::parse(item).ok_or_else(|| ConfigError::at(checks_line, format!("unknown check `{item}`")))?);
    }
    checks.sort();
    checks.dedup();
    let out = e.word("run.out").map(|x| PathBuf::from(x.1));

    let (kind_line, kind_raw) = e
        .word("domain.kind")
        .ok_or_else(|| ConfigError::at(0, "domain.kind is required"))?;
    let kind = DomainKind::parse(&kind_raw)
        .ok_or_else(|| ConfigError::at(kind_line, format!("unknown domain kind `{kind_raw}`")))?;
    let params = e.list("domain.params")?.map(|x| x.1).unwrap_or_else(|| match kind {
        DomainKind::Sine => vec![0.3, 1.0],
        DomainKind::ClippedV => vec![1.0, 1.0],
        _ => Vec::new(),
    });
    let lipschitz = e.number("domain.L")?;
    let bound = e.number("domain.M")?;
    let box_line = e.line("domain.box");
    let half_width = e.number("domain.box")?;
    let default_periodic = matches!(kind, DomainKind::Flat | DomainKind::Sine);
    let periodic = e.flag("domain.periodic", default_periodic)?;

    let grid_line = e.line("grid.dx");
    let dx = e.number("grid.dx")?.ok_or_else(|| ConfigError::at(0, "grid.dx is required"))?;
    if !(dx > 0.0) {
        return Err(ConfigError::at(grid_line, format!("grid.dx must be positive, got {dx}")));
    }
    if let Some((line, a)) = e.word("grid.anchor") {
        if a != "default" {
            return Err(ConfigError::at(line, "grid.anchor supports only `default`, the point (0, 1 + 2M)"));
        }
    }
    let top_line = e.line("grid.H_top");
    let top = e.number("grid.H_top")?;

    let domain = DomainSpec {
        kind,
        params,
        lipschitz,
        bound,
        half_width: half_width.unwrap_or(0.0),
        periodic,
    };
    let grid = if kind == DomainKind::ConeWedge {
        if checks.iter().any(|c| *c != Check::Profiles) {
            return Err(ConfigError::at(
                checks_line,
                "cone_wedge is outside the main-theorem hypotheses and runs the profiles check only",
            ));
        }
        GridSpec {
            dx,
            top: top.unwrap_or(4.0),
        }
    } else {
        let top = top.ok_or_else(|| ConfigError::at(0, "grid.H_top is required"))?;
        if half_width.is_none() {
            return Err(ConfigError::at(0, "domain.box is required"));
        }
        domain
            .build(top)
            .map_err(|m| ConfigError::at(box_line.max(kind_line).max(top_line), m))?;
        if dx > 0.25 * top || dx > 0.5 * domain.half_width {
            return Err(ConfigError::at(grid_line, "grid.dx is too coarse for the box"));
        }
        GridSpec { dx, top }
    };

    let (pline, pkind) = e.word("potential.kind").unwrap_or((0, "zero".into()));
    let pkind = match pkind.as_str() {
        "zero" => PotentialChoice::Zero,
        "pure_decay" => PotentialChoice::PureDecay,
        "bump" => PotentialChoice::Bump,
        "product" => PotentialChoice::Product,
        other => return Err(ConfigError::at(pline, format!("unknown potential kind `{other}`"))),
    };
    let c = e.number("potential.c")?.unwrap_or(1.0);
    let eps = e.number("potential.eps")?.unwrap_or(0.5);
    let bump = Bump {
        height: e.number("potential.bump.height")?.unwrap_or(1.0),
        center: e.point("potential.bump.center", Point::new(0.0, 1.0))?,
        radius: e.number("potential.bump.radius")?.unwrap_or(1.0),
    };
    let potential = PotentialSpec { kind: pkind, c, eps, bump };
    potential.build().map_err(|m| ConfigError::at(pline, m))?;
    if checks.contains(&Check::Tail) && (pkind == PotentialChoice::Zero || (pkind == PotentialChoice::Bump && potential.bump.height == 0.0)) {
        return Err(ConfigError::at(checks_line, "the tail check needs a nonzero potential"));
    }

    let dt = match e.word("fd.dt") {
        None => None,
        Some((_, v)) if v == "auto" => None,
        Some((line, v)) => match parse_number(&v) {
            Some(x) if x > 0.0 => Some(x),
            _ => return Err(ConfigError::at(line, format!("fd.dt: `{v}` is neither `auto` nor a positive number"))),
        },
    };
    let growth = e.number("fd.growth")?.unwrap_or(1.05);
    if !(growth >= 1.0) {
        return Err(ConfigError::at(0, "fd.growth must be at least 1"));
    }
    let scheme = match e.word("fd.theta_scheme") {
        None => ThetaScheme::RannacherCn,
        Some((line, v)) => match v.as_str() {
            "rannacher_cn" => ThetaScheme::RannacherCn,
            "crank_nicolson" => ThetaScheme::CrankNicolson,
            "backward_euler" => ThetaScheme::BackwardEuler,
            _ => return Err(ConfigError::at(line, format!("unknown theta scheme `{v}`"))),
        },
    };
    let times_line = e.line("fd.times");
    let times = e.list("fd.times")?.map(|x| x.1).unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::at(times_line, "fd.times must be positive and increasing"));
    }
    let fd = FdSpec {
        dt,
        growth,
        scheme,
        times,
        source: e.point("fd.source", Point::new(0.0, 1.0))?,
    };

    let bw_line = e.line("mc.bandwidth");
    let mc = McSpec {
        n_paths: e.count("mc.n_paths", 200_000)?,
        dt_factor: e.positive("mc.dt_factor", 1e-3)?,
        seed: e.seed("mc.seed")?,
        bandwidth: e.positive("mc.bandwidth", 0.1)?,
        probes: e.count("mc.probes", 5)?,
    };
    if mc.dt_factor > 0.1 {
        return Err(ConfigError::at(0, "mc.dt_factor must not exceed 0.1"));
    }
    if mc.bandwidth < 2.0 * (mc.dt_factor * fd.times[fd.times.len() - 1]).sqrt() {
        return Err(ConfigError::at(bw_line, "mc.bandwidth must be at least 2 sqrt(dt)"));
    }

    let green = GreenSpec {
        t_max_factor: e.positive("green.T_max_factor", 0.25)?,
        tail_fit_decades: e.positive("green.tail_fit_decades", 1.0)?,
        tail_points: e.count("green.tail_points", 8)?,
        max_tail_share: e.positive("green.max_tail_share", 0.2)?,
        dt_fraction: e.positive("green.dt_fraction", 0.01)?,
        growth: e.number("green.growth")?.unwrap_or(1.2),
        pool: e.count("green.pool", 10)?,
        pool_spacing: e.positive("green.pool_spacing", 1.5)?,
        pool_heights: e.pair("green.pool_heights", (0.5, 2.5))?,
        triples: e.count("green.triples", 10_000)?,
        box_doubling: e.flag("green.box_doubling", true)?,
        source: e.point("green.source", Point::new(0.0, 1.0))?,
        target: e.point("green.target", Point::new(0.0, 2.0))?,
    };
    if green.tail_points < 3 {
        return Err(ConfigError::at(0, "green.tail_points must be at least 3"));
    }
    if !(green.growth >= 1.0) {
        return Err(ConfigError::at(0, "green.growth must be at least 1"));
    }
    if green.pool < 3 {
        return Err(ConfigError::at(0, "green.pool must hold at least 3 sources"));
    }
    let gauge_pairs = e.count("gauge.sample_pairs", 20)?;

    let verify = VerifySpec {
        sources: e.count("verify.sources", 12)?,
        times: e.count("verify.times", 8)?,
        targets: e.count("verify.targets", 8)?,
        geometry_samples: e.count("verify.geometry_samples", 10_000)?,
        volume_samples: e.count("verify.volume_samples", 50)?,
    };

    let window_line = e.line("tail.window");
    let tail = TailSpec {
        window: e.pair("tail.window", (1e6, 1e8))?,
        points: e.count("tail.points", 9)?,
        t_end: e.positive("tail.t_end", 1e18)?,
        source: e.point("tail.source", Point::new(0.0, 1.0))?,
        tolerance: e.positive("tail.tolerance", 0.1)?,
    };
    if !(tail.window.0 > 0.0 && tail.window.1 > tail.window.0 && tail.t_end > tail.window.1) || tail.points < 2 {
        return Err(ConfigError::at(window_line, "tail.window must satisfy 0 < lo < hi < tail.t_end, with 2+ points"));
    }

    debug_assert!(e.map.is_empty(), "unconsumed keys: {:?}", e.map.keys());
    Ok(ExperimentConfig {
        name,
        seed,
        checks,
        out,
        domain,
        potential,
        grid,
        fd,
        mc,
        green,
        gauge_pairs,
        verify,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINE: &str = "\
# sine fixture
run.seed = 7
run.checks = geometry, profiles
domain.kind = sine
domain.params = 0.3, 1
domain.box = 2*pi
grid.dx = 4*pi/64
grid.H_top = 8
potential.kind = pure_decay
potential.eps = 0.5
";

    #[test]
    fn numbers() {
        assert_eq!(parse_number("2.5"), Some(2.5));
        assert_eq!(parse_number("pi/16"), Some(std::f64::consts::PI / 16.0));
        assert_eq!(parse_number(" 4*pi "), Some(4.0 * std::f64::consts::PI));
        assert_eq!(parse_number("-1e-3"), Some(-1e-3));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn parses_a_sine_experiment() {
        let c = parse(SINE).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.checks, vec![Check::Geometry, Check::Profiles]);
        assert_eq!(c.domain.kind, DomainKind::Sine);
        assert!(c.domain.periodic);
        assert!((c.grid.dx - std::f64::consts::PI / 16.0).abs() < 1e-15);
        assert_eq!(c.potential.kind, PotentialChoice::PureDecay);
        assert_eq!(c.mc.n_paths, 200_000);
        assert_eq!(c.mc_seed(), 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SINE.replace("grid.dx = 4*pi/64", "grid.dx = -1");
        let e = parse(&bad).unwrap_err();
        assert_eq!(e.line, 7);
        let unknown = format!("{SINE}grid.spacing = 3\n");
        assert!(parse(&unknown).unwrap_err().message.contains("unknown key"));
        let twice = format!("{SINE}run.seed = 8\n");
        assert!(parse(&twice).unwrap_err().message.contains("repeats line 2"));
        let no_seed = SINE.replace("run.seed = 7\n", "");
        assert!(parse(&no_seed).unwrap_err().message.contains("run.seed"));
        let mid = SINE.replace("grid.H_top = 8", "grid.H_top = 8 # lid");
        assert_eq!(parse(&mid).unwrap_err().line, 8);
    }

    #[test]
    fn cone_runs_profiles_only() {
        let cone = "run.seed = 1\nrun.checks = profiles\ndomain.kind = cone_wedge\ngrid.dx = 0.05\n";
        assert!(parse(cone).unwrap().is_cone());
        let bad = cone.replace("profiles", "profiles, kernels");
        assert!(parse(&bad).unwrap_err().message.contains("outside the main-theorem"));
    }

    #[test]
    fn domain_validation_is_a_config_error() {
        // a sine box that is not a whole number of periods
        let bad = SINE.replace("domain.box = 2*pi", "domain.box = 5");
        assert!(parse(&bad).is_err());
        let low_lid = SINE.replace("grid.H_top = 8", "grid.H_top = 1");
        assert!(parse(&low_lid).is_err());
    }
}
