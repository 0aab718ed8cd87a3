//! Ambrosio-Tortorelli phase-field minimization on masked structured grids.
//!
//! The discrete functional on Q1 elements is
//!
//! ```text
//! AT(u, phi) = sum_e c_e(phi) u_e^T K_e u_e + eps phi^T K phi + sum_i m_i (1 - phi_i)^2 / (4 eps)
//! ```
//!
//! with `c_e = k_floor + mean of phi^2 over the corners of cell e` and lumped
//! masses `m_i`. Both blocks are convex quadratics: the u-step is a weighted
//! Laplace problem with Dirichlet trace on the boundary nodes, the phi-step
//! an M-matrix system with natural boundary conditions. Alternating exact
//! block minimization gives a non-increasing energy.

pub mod grid;
pub mod linalg;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use grid::{Grid, GridDomain, NodeKind, ScalarField};
use linalg::{ordered_sum, pcg, q1_stiffness, Stencil};

use crate::analytic::CracktipFunction;
use crate::energy::{EnergyBreakdown, Provenance};
use crate::error::{Error, Result};
use crate::geometry::to_polar;

/// Dirichlet data on the boundary nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryData {
    /// Trace of `u_delta` (the cracktip in 2D), slope taken from the config.
    UDelta,
    Constant(f64),
    /// `left` where `x < 0`, `right` elsewhere.
    Jump { left: f64, right: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ATConfig {
    pub domain: GridDomain,
    /// Nodes per axis.
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub k_floor: f64,
    pub alt_tol: f64,
    pub max_sweeps: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub seed: u64,
    /// Amplitude of the seeded perturbation of the initial `phi = 1`.
    pub init_noise: f64,
    pub boundary: BoundaryData,
}

impl Default for ATConfig {
    fn default() -> Self {
        Self {
            domain: GridDomain::Cylinder,
            n: 48,
            eps: 0.1,
            delta: 0.0,
            k_floor: 1e-6,
            alt_tol: 1e-5,
            max_sweeps: 300,
            cg_tol: 1e-8,
            cg_max_iter: 50_000,
            seed: 0,
            init_noise: 0.0,
            boundary: BoundaryData::UDelta,
        }
    }
}

impl ATConfig {
    /// Grid with spacing at most `h` and an even node count.
    pub fn with_spacing(mut self, h: f64) -> Self {
        self.n = Grid::nodes_for_spacing(h);
        self
    }

    pub fn h(&self) -> f64 {
        2.0 / (self.n as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 4 {
            return bad(format!("need at least 4 nodes per axis, got {}", self.n));
        }
        if !(self.eps > 0.0) || self.eps < 2.0 * self.h() * (1.0 - 1e-12) {
            return bad(format!("eps = {} must be at least 2h = {}", self.eps, 2.0 * self.h()));
        }
        if !(self.k_floor > 0.0) {
            return bad(format!("k_floor must be positive, got {}", self.k_floor));
        }
        if !(self.alt_tol > 0.0 && self.cg_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_sweeps == 0 || self.cg_max_iter == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !self.delta.is_finite() || !(self.init_noise >= 0.0) {
            return bad("delta must be finite and init_noise non-negative".into());
        }
        if self.boundary == BoundaryData::UDelta {
            if self.domain == GridDomain::Interval {
                return bad("udelta boundary data needs a 2D or 3D domain".into());
            }
            if self.n % 2 == 1 {
                return bad(format!("udelta boundary data needs an even node count, got {}", self.n));
            }
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut h = None;
        let mut nx = None;
        let mut others = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: {key} expects a number, got {v:?}", lineno + 1)))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("line {}: {key} expects an integer, got {v:?}", lineno + 1)))
            };
            match key {
                "domain" => {
                    c.domain = match value {
                        "interval" => GridDomain::Interval,
                        "disk" => GridDomain::Disk,
                        "cylinder" => GridDomain::Cylinder,
                        _ => return Err(Error::Config(format!("unknown domain {value:?}"))),
                    }
                }
                "eps" => c.eps = num(value)?,
                "h" => h = Some(num(value)?),
                "nx" => nx = Some(int(value)?),
                "ny" | "nz" => others.push(int(value)?),
                "delta" => c.delta = num(value)?,
                "k_floor" => c.k_floor = num(value)?,
                "alt_tol" => c.alt_tol = num(value)?,
                "max_sweeps" => c.max_sweeps = int(value)?,
                "cg_tol" => c.cg_tol = num(value)?,
                "cg_max_iter" => c.cg_max_iter = int(value)?,
                "seed" => {
                    c.seed = value
                        .parse()
                        .map_err(|_| Error::Config(format!("seed expects an unsigned integer, got {value:?}")))?
                }
                "init_noise" => c.init_noise = num(value)?,
                "boundary" => c.boundary = parse_boundary(value)?,
                _ => return Err(Error::Config(format!("unknown key {key:?}"))),
            }
        }
        match (h, nx) {
            (Some(_), Some(_)) => return Err(Error::Config("give either h or nx, not both".into())),
            (Some(h), None) => {
                if !(h > 0.0) {
                    return Err(Error::Config(format!("h must be positive, got {h}")));
                }
                c = c.with_spacing(h);
            }
            (None, Some(n)) => c.n = n,
            (None, None) => {}
        }
        if others.iter().any(|&m| m != c.n) {
            return Err(Error::Config("ny and nz must equal nx (cubic grids only)".into()));
        }
        c.validate()?;
        Ok(c)
    }

    /// Inverse of [`ATConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let boundary = match self.boundary {
            BoundaryData::UDelta => "udelta".to_string(),
            BoundaryData::Constant(v) => format!("constant:{v:?}"),
            BoundaryData::Jump { left, right } => format!("jump:{left:?}:{right:?}"),
        };
        let _ = writeln!(s, "domain = {}", self.domain.name());
        let _ = writeln!(s, "nx = {}", self.n);
        let _ = writeln!(s, "eps = {:?}", self.eps);
        let _ = writeln!(s, "delta = {:?}", self.delta);
        let _ = writeln!(s, "k_floor = {:?}", self.k_floor);
        let _ = writeln!(s, "alt_tol = {:?}", self.alt_tol);
        let _ = writeln!(s, "max_sweeps = {}", self.max_sweeps);
        let _ = writeln!(s, "cg_tol = {:?}", self.cg_tol);
        let _ = writeln!(s, "cg_max_iter = {}", self.cg_max_iter);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "init_noise = {:?}", self.init_noise);
        let _ = writeln!(s, "boundary = {boundary}");
        s
    }

    pub fn boundary_value(&self, p: &crate::geometry::Vec3) -> Result<f64> {
        Ok(match self.boundary {
            BoundaryData::Constant(v) => v,
            BoundaryData::Jump { left, right } => {
                if p.x < 0.0 {
                    left
                } else {
                    right
                }
            }
            BoundaryData::UDelta => {
                let q = to_polar(p, None).map_err(|e| Error::Config(e.to_string()))?;
                CracktipFunction::udelta(self.delta).eval(&q)
            }
        })
    }
}

fn parse_boundary(v: &str) -> Result<BoundaryData> {
    let parts: Vec<&str> = v.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number {s:?} in boundary = {v}")))
    };
    match parts.as_slice() {
        ["udelta"] => Ok(BoundaryData::UDelta),
        ["constant", c] => Ok(BoundaryData::Constant(num(c)?)),
        ["jump", a, b] => Ok(BoundaryData::Jump {
            left: num(a)?,
            right: num(b)?,
        }),
        _ => Err(Error::Config(format!("unknown boundary data {v:?}"))),
    }
}

/// Solver state; node vectors live on the padded grid.
#[derive(Clone, Debug)]
pub struct ATState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// AT energy after initialization and after every sweep.
    pub energy_trace: Vec<f64>,
    /// AT energy after every half step, initialization included.
    pub half_step_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub cg_iterations: usize,
    /// Largest distance of a phi-step solution to `[0, 1]` before clamping.
    pub max_phi_violation: f64,
}

impl ATState {
    pub fn u_field(&self) -> ScalarField {
        self.grid.snapshot(&self.u, 0.0)
    }

    pub fn phi_field(&self) -> ScalarField {
        self.grid.snapshot(&self.phi, 1.0)
    }
}

/// Precomputed element data for one grid.
struct Discretization {
    kref: Vec<Vec<f64>>,
    cells: Vec<usize>,
    corners: Vec<usize>,
    mass: Vec<f64>,
    u_free: Vec<bool>,
    phi_free: Vec<bool>,
}

impl Discretization {
    fn new(grid: &Grid) -> Self {
        let d = grid.dimension();
        let corners = grid.cell_corner_offsets();
        let cells = grid.active_cells();
        let mut mass = vec![0.0; grid.len()];
        let share = grid.h.powi(d as i32) / corners.len() as f64;
        for &c in &cells {
            for &o in &corners {
                mass[c + o] += share;
            }
        }
        Self {
            kref: q1_stiffness(d, grid.h),
            cells,
            corners,
            u_free: grid.kind.iter().map(|&k| k == NodeKind::Interior).collect(),
            // Boundary nodes outside every active cell have an empty phi row.
            phi_free: mass.iter().map(|&m| m > 0.0).collect(),
            mass,
        }
    }

    fn cell_energy(&self, c: usize, u: &[f64]) -> f64 {
        let mut e = 0.0;
        for (a, &oa) in self.corners.iter().enumerate() {
            for (b, &ob) in self.corners.iter().enumerate() {
                e += u[c + oa] * self.kref[a][b] * u[c + ob];
            }
        }
        e
    }

    fn cell_coef(&self, c: usize, phi: &[f64], k_floor: f64) -> f64 {
        k_floor + self.corners.iter().map(|&o| phi[c + o] * phi[c + o]).sum::<f64>() / self.corners.len() as f64
    }

    fn energy(&self, u: &[f64], phi: &[f64], cfg: &ATConfig) -> EnergyBreakdown {
        let bulk = ordered_sum(self.cells.len(), |k| {
            let c = self.cells[k];
            self.cell_coef(c, phi, cfg.k_floor) * self.cell_energy(c, u)
        });
        let gradient = ordered_sum(self.cells.len(), |k| self.cell_energy(self.cells[k], phi));
        let well = ordered_sum(phi.len(), |i| self.mass[i] * (1.0 - phi[i]).powi(2));
        EnergyBreakdown::new(
            bulk,
            cfg.eps * gradient + well / (4.0 * cfg.eps),
            Provenance::Discrete,
        )
    }
}

/// Solves from `phi = 1` (optionally perturbed under `seed`) and one u-step.
pub fn solve(config: &ATConfig) -> Result<ATState> {
    config.validate()?;
    let grid = Grid::new(config.domain, config.n)?;
    let mut u = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        if grid.kind[i] == NodeKind::Boundary {
            u[i] = config.boundary_value(&grid.point(i))?;
        }
    }
    let mut phi: Vec<f64> = grid.kind.iter().map(|&k| f64::from(u8::from(k != NodeKind::Exterior))).collect();
    if config.init_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for (p, &k) in phi.iter_mut().zip(&grid.kind) {
            if k != NodeKind::Exterior {
                *p -= config.init_noise * rng.gen::<f64>();
            }
        }
    }
    run(grid, config, u, phi)
}

/// Solves from a given pair on the config grid, starting with a u-step;
/// boundary entries of `u` must already carry the Dirichlet data.
pub fn solve_from(config: &ATConfig, u: Vec<f64>, phi: Vec<f64>) -> Result<ATState> {
    config.validate()?;
    let grid = Grid::new(config.domain, config.n)?;
    if u.len() != grid.len() || phi.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "warm start has {} / {} values for a grid of {}",
            u.len(),
            phi.len(),
            grid.len()
        )));
    }
    run(grid, config, u, phi)
}

fn run(grid: Grid, cfg: &ATConfig, mut u: Vec<f64>, mut phi: Vec<f64>) -> Result<ATState> {
    let disc = Discretization::new(&grid);
    let n = grid.len();
    let mut cg_iterations = 0;
    let mut half = Vec::new();
    let mut cell_coef = vec![0.0; n];
    let mut u_step = |u: &mut Vec<f64>, phi: &[f64], cg: &mut usize| -> Result<()> {
        for &c in &disc.cells {
            cell_coef[c] = disc.cell_coef(c, phi, cfg.k_floor);
        }
        let a = Stencil::assemble(&grid, &cell_coef, &disc.kref, None);
        let zero = vec![0.0; n];
        *cg += pcg(&a, &zero, u, &disc.u_free, cfg.cg_tol, cfg.cg_max_iter)?.iterations;
        Ok(())
    };
    half.push(disc.energy(&u, &phi, cfg).total);
    u_step(&mut u, &phi, &mut cg_iterations)?;
    let mut trace = vec![disc.energy(&u, &phi, cfg).total];
    half.push(trace[0]);
    let unit = {
        let mut v = vec![0.0; n];
        for &c in &disc.cells {
            v[c] = cfg.eps;
        }
        v
    };
    let rhs: Vec<f64> = disc.mass.iter().map(|m| m / (4.0 * cfg.eps)).collect();
    let mut max_violation: f64 = 0.0;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        // phi-step
        let mut a_diag = vec![0.0; n];
        let share = 1.0 / disc.corners.len() as f64;
        for &c in &disc.cells {
            let g = disc.cell_energy(c, &u) * share;
            for &o in &disc.corners {
                a_diag[c + o] += g;
            }
        }
        for (d, r) in a_diag.iter_mut().zip(&rhs) {
            *d += r;
        }
        let a = Stencil::assemble(&grid, &unit, &disc.kref, Some(&a_diag));
        cg_iterations += pcg(&a, &rhs, &mut phi, &disc.phi_free, cfg.cg_tol, cfg.cg_max_iter)?.iterations;
        for (p, &free) in phi.iter_mut().zip(&disc.phi_free) {
            if free {
                max_violation = max_violation.max(-*p).max(*p - 1.0);
                *p = p.clamp(0.0, 1.0);
            }
        }
        half.push(disc.energy(&u, &phi, cfg).total);
        u_step(&mut u, &phi, &mut cg_iterations)?;
        sweeps += 1;
        let e = disc.energy(&u, &phi, cfg).total;
        half.push(e);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(e);
        if prev - e <= cfg.alt_tol * prev.abs() {
            converged = true;
            break;
        }
    }
    Ok(ATState {
        grid,
        u,
        phi,
        energy_trace: trace,
        half_step_trace: half,
        sweeps,
        converged,
        cg_iterations,
        max_phi_violation: max_violation.max(0.0),
    })
}

/// Bulk and surface surrogates of the AT energy of `state`.
pub fn at_energy(state: &ATState, config: &ATConfig) -> EnergyBreakdown {
    Discretization::new(&state.grid).energy(&state.u, &state.phi, config)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdeltaRow {
    pub delta: f64,
    /// Solved AT minimum with `u_delta` data.
    pub at_min: f64,
    /// AT energy of `u*_0 + delta z` paired with the `delta = 0` phase field.
    pub j_surrogate: f64,
    pub s_hat: f64,
    /// `s_hat / delta^2`; exploratory, discretization error dominates at small delta.
    pub ratio: f64,
}

/// Empirical `s(delta)` table on the cylinder.
///
/// Each minimization starts from the surrogate pair, so `s_hat >= 0` by the
/// monotone descent of the alternating scheme.
pub fn sdelta_trend(deltas: &[f64], template: &ATConfig) -> Result<Vec<SdeltaRow>> {
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidParameter("slopes must be finite and non-negative".into()));
    }
    let base_cfg = ATConfig {
        domain: GridDomain::Cylinder,
        delta: 0.0,
        boundary: BoundaryData::UDelta,
        ..template.clone()
    };
    let base = solve(&base_cfg)?;
    let disc = Discretization::new(&base.grid);
    deltas
        .iter()
        .map(|&delta| {
            let cfg = ATConfig { delta, ..base_cfg.clone() };
            let u: Vec<f64> = (0..base.grid.len())
                .map(|i| if base.grid.is_inside(i) { base.u[i] + delta * base.grid.point(i).z } else { 0.0 })
                .collect();
            let j_surrogate = disc.energy(&u, &base.phi, &cfg).total;
            let solved = solve_from(&cfg, u, base.phi.clone())?;
            let at_min = *solved.energy_trace.last().expect("non-empty trace");
            let s_hat = j_surrogate - at_min;
            Ok(SdeltaRow {
                delta,
                at_min,
                j_surrogate,
                s_hat,
                ratio: if delta > 0.0 { s_hat / (delta * delta) } else { f64::NAN },
            })
        })
        .collect()
}
