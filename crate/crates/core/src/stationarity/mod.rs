//! Weak Euler-Lagrange residuals for the analytic couples.
//!
//! For a couple `(u, K)` and a compactly supported field `eta` the residual is
//!
//! ```text
//! int |grad u|^2 div eta - 2 <grad u, grad u . grad eta> dx + int_K div^K eta dH^{N-1}
//! ```
//!
//! The bulk part is integrated on the tip-excised domain `{r > eps}` with
//! polar cells whose angular edges sit on `theta = +-pi`, so no cell straddles
//! the crack. Radial cells are graded quadratically towards the tip through
//! `r = t^2`, which makes every integrand in use smooth in `t`. The `eps -> 0`
//! limit is taken by Richardson extrapolation over `eps0, eps0/2, eps0/4`.

mod field;

use std::f64::consts::PI;

use rayon::prelude::*;

pub use field::{BumpTerm, Profile, TestVectorField};

use crate::analytic::CracktipFunction;
use crate::error::{Error, Result};
use crate::geometry::{CrackGeometry, Domain, Vec3};
use crate::quadrature::{richardson, GaussRule};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    /// Gauss-Legendre nodes per panel and direction.
    pub order: usize,
    pub radial_panels: usize,
    pub angular_panels: usize,
    pub axial_panels: usize,
    /// Largest accepted quadrature error estimate (absolute).
    pub tolerance: f64,
    /// Coarsest excision radius of the extrapolation ladder.
    pub eps0: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            order: 10,
            radial_panels: 12,
            angular_panels: 24,
            axial_panels: 12,
            tolerance: 1e-5,
            eps0: 0.02,
        }
    }
}

/// Value with the difference to the half-resolution rule as error bar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// The analytic couples the checker understands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticCouple {
    /// `(c phi0, K0)` in the plane.
    Cracktip(CracktipFunction),
    /// `(u_delta, P0)` in space.
    CrackFront(CracktipFunction),
    /// Two constants on either side of the full line `y = 0`.
    StepLine { lower: f64, upper: f64 },
}

impl AnalyticCouple {
    pub fn new(u: CracktipFunction, crack: &CrackGeometry) -> Result<Self> {
        match crack {
            CrackGeometry::HalfLine if u.delta == 0.0 => Ok(Self::Cracktip(u)),
            CrackGeometry::HalfLine => Err(Error::InvalidParameter(
                "the planar cracktip carries no axial slope".into(),
            )),
            CrackGeometry::HalfPlane => Ok(Self::CrackFront(u)),
            other => Err(Error::InvalidParameter(format!(
                "no analytic couple pairs a cracktip function with {other:?}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Cracktip(_) | Self::StepLine { .. } => 2,
            Self::CrackFront(_) => 3,
        }
    }

    pub fn crack(&self) -> CrackGeometry {
        match self {
            Self::Cracktip(_) => CrackGeometry::HalfLine,
            Self::CrackFront(_) => CrackGeometry::HalfPlane,
            Self::StepLine { .. } => CrackGeometry::Line,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Self::CrackFront(u) => u.delta,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Cracktip(_) => "cracktip2d",
            Self::CrackFront(u) if u.delta == 0.0 => "crackfront3d",
            Self::CrackFront(_) => "udelta",
            Self::StepLine { .. } => "stepline",
        }
    }

    /// `J(u, K, B(0, reach))`, the energy a residual is measured against.
    pub fn energy_scale(&self, reach: f64) -> Result<f64> {
        match self {
            Self::Cracktip(u) => Ok(u.closed_form_energy(&Domain::disk(reach)?)?.total),
            Self::CrackFront(u) => Ok(u.closed_form_energy(&Domain::ball(reach)?)?.total),
            Self::StepLine { .. } => Ok(2.0 * reach),
        }
    }

    /// Powers of `eps` in the expansion of the excised bulk integral.
    fn excision_exponents(&self) -> [f64; 2] {
        match self {
            // Terms linear in delta behave like r^{-1/2} near the front.
            Self::CrackFront(u) if u.delta != 0.0 => [1.0, 1.5],
            _ => [1.0, 2.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualLevel {
    pub eps: f64,
    pub bulk: f64,
    pub total: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ELResidualReport {
    pub couple: &'static str,
    pub delta: f64,
    /// Extrapolated `eps -> 0` bulk term.
    pub bulk_term: f64,
    pub surface_term: f64,
    pub total: f64,
    /// Zero: the reported terms are the extrapolated limit.
    pub excision_radius: f64,
    pub quadrature_error_estimate: f64,
    pub levels: Vec<ResidualLevel>,
    pub eta_norm: f64,
    pub energy_scale: f64,
    /// `|total| / (eta_norm * energy_scale)`.
    pub normalized: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceDivergence {
    /// Direct quadrature of `div^K eta` over `K`.
    pub quadrature: f64,
    /// Endpoint (`K0`) or front line (`P0`) formula.
    pub closed_form: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossTerms {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub error_estimate: f64,
}

/// Integration box in `(t = sqrt r, theta, z)`.
#[derive(Clone, Copy, Debug)]
struct PolarBox {
    t: (f64, f64),
    theta: (f64, f64),
    z: Option<(f64, f64)>,
}

impl PolarBox {
    fn for_field(eta: &TestVectorField, eps: f64) -> Option<Self> {
        let (r_lo, r_hi) = eta.radial_range();
        let r_lo = r_lo.max(eps);
        if r_lo >= r_hi {
            return None;
        }
        Some(Self {
            t: (r_lo.sqrt(), r_hi.sqrt()),
            theta: eta.angular_range(),
            z: (eta.dim == 3).then(|| eta.z_range()),
        })
    }
}

/// `int f(r, theta, z) r dr dtheta [dz]` over the box with `r = t^2`.
fn integrate_box(
    bx: &PolarBox,
    s: &QuadratureSettings,
    refine: usize,
    f: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
) -> f64 {
    let rule = GaussRule::new(s.order);
    let thetas = rule.composite_points(bx.theta.0, bx.theta.1, s.angular_panels * refine);
    let zs = match bx.z {
        Some((lo, hi)) => rule.composite_points(lo, hi, s.axial_panels * refine),
        None => vec![(0.0, 1.0)],
    };
    let panels = s.radial_panels * refine;
    let h = (bx.t.1 - bx.t.0) / panels as f64;
    let partial: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let lo = bx.t.0 + p as f64 * h;
            let mut acc = 0.0;
            for (t, wt) in rule.mapped(lo, lo + h) {
                let r = t * t;
                let jac = 2.0 * t * r * wt;
                let mut ring = 0.0;
                for &(theta, wth) in &thetas {
                    let mut line = 0.0;
                    for &(z, wz) in &zs {
                        line += wz * f(r, theta, z);
                    }
                    ring += wth * line;
                }
                acc += jac * ring;
            }
            acc
        })
        .collect();
    partial.iter().sum()
}

fn integrate_with_estimate(
    bx: &PolarBox,
    s: &QuadratureSettings,
    f: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
) -> QuadValue {
    let coarse = integrate_box(bx, s, 1, f);
    let fine = integrate_box(bx, s, 2, f);
    QuadValue {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    }
}

fn check_tolerance(q: QuadValue, s: &QuadratureSettings) -> Result<QuadValue> {
    if q.error_estimate > s.tolerance {
        return Err(Error::QuadratureTolerance {
            estimate: q.error_estimate,
            tolerance: s.tolerance,
            suggested_panels: 4 * s.radial_panels,
        });
    }
    Ok(q)
}

fn gradient(u: &CracktipFunction, dim: usize, r: f64, theta: f64) -> Vec3 {
    let mut g = u.grad_unchecked(r, theta);
    if dim == 2 {
        g.z = 0.0;
    }
    g
}

/// `|grad u|^2 div eta - 2 <grad u, grad u . grad eta>` at a cartesian point.
fn bulk_density(u: &CracktipFunction, eta: &TestVectorField, r: f64, theta: f64, z: f64) -> f64 {
    let x = Vec3::new(r * theta.cos(), r * theta.sin(), z);
    let jac = eta.jacobian(&x);
    let g = gradient(u, eta.dim, r, theta);
    g.norm_squared() * jac.trace() - 2.0 * g.dot(&(jac * g))
}

fn bulk_raw(u: &CracktipFunction, eta: &TestVectorField, eps: f64, s: &QuadratureSettings) -> QuadValue {
    match PolarBox::for_field(eta, eps) {
        Some(bx) => integrate_with_estimate(&bx, s, &|r, th, z| bulk_density(u, eta, r, th, z)),
        None => QuadValue {
            value: 0.0,
            error_estimate: 0.0,
        },
    }
}

/// Bulk term on the excised domain `{r > eps}` (a disk in 2D, a tube around
/// the front in 3D).
pub fn bulk_integral(
    u: &CracktipFunction,
    eta: &TestVectorField,
    eps: f64,
    s: &QuadratureSettings,
) -> Result<QuadValue> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("excision radius must be positive, got {eps}")));
    }
    if eta.dim == 2 && u.delta != 0.0 {
        return Err(Error::InvalidParameter("planar bulk integral with nonzero delta".into()));
    }
    check_tolerance(bulk_raw(u, eta, eps, s), s)
}

/// Contribution of the discarded core `{r < eps}` to the bulk term.
pub fn core_integral(
    u: &CracktipFunction,
    eta: &TestVectorField,
    eps: f64,
    s: &QuadratureSettings,
) -> Result<QuadValue> {
    let whole = bulk_raw(u, eta, 0.0, s);
    let outer = bulk_integral(u, eta, eps, s)?;
    Ok(QuadValue {
        value: whole.value - outer.value,
        error_estimate: whole.error_estimate + outer.error_estimate,
    })
}

/// `int_K div^K eta` by direct quadrature, with the integrated-by-parts form
/// as a second route.
pub fn surface_divergence_integral(crack: &CrackGeometry, eta: &TestVectorField, s: &QuadratureSettings) -> Result<SurfaceDivergence> {
    eta.check_compact_support()?;
    if crack.dimension() != eta.dim {
        return Err(Error::DimensionMismatch(format!(
            "{}D crack with a {}D test field",
            crack.dimension(),
            eta.dim
        )));
    }
    let rule = GaussRule::new(s.order);
    let panels = 4 * s.radial_panels;
    let (x_lo, x_hi) = eta.terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        (lo.min(t.center.x - t.radius), hi.max(t.center.x + t.radius))
    });
    let d1 = |x: f64, z: f64| eta.jacobian(&Vec3::new(x, 0.0, z))[(0, 0)];
    let line = |a: f64, b: f64, refine: usize, z: f64| -> f64 {
        if a >= b {
            0.0
        } else {
            rule.composite(a, b, panels * refine, |x| d1(x, z))
        }
    };
    match crack {
        CrackGeometry::HalfLine | CrackGeometry::Line => {
            let hi = if matches!(crack, CrackGeometry::HalfLine) { x_hi.min(0.0) } else { x_hi };
            let coarse = line(x_lo, hi, 1, 0.0);
            let fine = line(x_lo, hi, 2, 0.0);
            let closed_form = if matches!(crack, CrackGeometry::HalfLine) {
                eta.value(&Vec3::zeros()).x
            } else {
                0.0
            };
            Ok(SurfaceDivergence {
                quadrature: fine,
                closed_form,
                error_estimate: (fine - coarse).abs(),
            })
        }
        CrackGeometry::HalfPlane => {
            let (z_lo, z_hi) = eta.z_range();
            let hi = x_hi.min(0.0);
            let plane = |refine: usize| -> f64 {
                if x_lo >= hi {
                    return 0.0;
                }
                let xs = rule.composite_points(x_lo, hi, panels * refine);
                let zs = rule.composite_points(z_lo, z_hi, panels * refine);
                let mut acc = 0.0;
                for &(z, wz) in &zs {
                    for &(x, wx) in &xs {
                        let j = eta.jacobian(&Vec3::new(x, 0.0, z));
                        acc += wz * wx * (j[(0, 0)] + j[(2, 2)]);
                    }
                }
                acc
            };
            let coarse = plane(1);
            let fine = plane(2);
            let closed_form = rule.composite(z_lo, z_hi, 2 * panels, |z| eta.value(&Vec3::new(0.0, 0.0, z)).x);
            Ok(SurfaceDivergence {
                quadrature: fine,
                closed_form,
                error_estimate: (fine - coarse).abs(),
            })
        }
        CrackGeometry::Triangulated(_) => Err(Error::InvalidParameter(
            "surface divergence is implemented for the flat sets K0, P0 and the full line".into(),
        )),
    }
}

/// Richardson-extrapolated Euler-Lagrange residual of an analytic couple.
pub fn el_residual(couple: &AnalyticCouple, eta: &TestVectorField, s: &QuadratureSettings) -> Result<ELResidualReport> {
    if couple.dim() != eta.dim {
        return Err(Error::DimensionMismatch(format!(
            "{}D couple with a {}D test field",
            couple.dim(),
            eta.dim
        )));
    }
    let surface = surface_divergence_integral(&couple.crack(), eta, s)?;
    let eps_levels = [s.eps0, s.eps0 / 2.0, s.eps0 / 4.0];
    let mut levels = Vec::with_capacity(3);
    for &eps in &eps_levels {
        let bulk = match couple {
            AnalyticCouple::Cracktip(u) | AnalyticCouple::CrackFront(u) => bulk_integral(u, eta, eps, s)?,
            // The gradient vanishes off the line.
            AnalyticCouple::StepLine { .. } => QuadValue {
                value: 0.0,
                error_estimate: 0.0,
            },
        };
        levels.push(ResidualLevel {
            eps,
            bulk: bulk.value,
            total: bulk.value + surface.quadrature,
            error_estimate: bulk.error_estimate + surface.error_estimate,
        });
    }
    let samples: Vec<(f64, f64)> = levels.iter().map(|l| (l.eps, l.bulk)).collect();
    let exps = couple.excision_exponents();
    let bulk_term = richardson(&samples, &exps);
    let two_point = richardson(&samples[1..], &exps[..1]);
    let quad_err = levels.iter().map(|l| l.error_estimate).fold(0.0, f64::max);
    let total = bulk_term + surface.quadrature;
    let eta_norm = eta.c1_norm();
    let energy_scale = couple.energy_scale(eta.reach())?;
    Ok(ELResidualReport {
        couple: couple.label(),
        delta: couple.delta(),
        bulk_term,
        surface_term: surface.quadrature,
        total,
        excision_radius: 0.0,
        quadrature_error_estimate: quad_err + (bulk_term - two_point).abs(),
        levels,
        eta_norm,
        energy_scale,
        normalized: total.abs() / (eta_norm * energy_scale),
    })
}

/// Boundary terms on `dB_eps` left after integrating the bulk term by parts:
///
/// ```text
/// A = -int |grad phi|^2 <eta, e_r> eps dtheta
/// B =  2 int d_r phi <eta, grad phi> eps dtheta
/// ```
///
/// Their sum equals the bulk integral on `{r > eps}` for every `eps`.
pub fn boundary_terms(u: &CracktipFunction, eps: f64, eta: &TestVectorField, s: &QuadratureSettings) -> (f64, f64) {
    let rule = GaussRule::new(s.order);
    let pts = rule.composite_points(-PI, PI, 2 * s.angular_panels);
    let (mut a, mut b) = (0.0, 0.0);
    for (theta, w) in pts {
        let er = Vec3::new(theta.cos(), theta.sin(), 0.0);
        let x = eps * er;
        let e = eta.value(&x);
        let g = gradient(u, 2, eps, theta);
        a -= w * g.norm_squared() * e.dot(&er) * eps;
        b += w * 2.0 * g.dot(&er) * e.dot(&g) * eps;
    }
    (a, b)
}

/// [`boundary_terms`] for the cracktip `phi0`.
pub fn boundary_term_decomposition(eps: f64, eta: &TestVectorField, s: &QuadratureSettings) -> (f64, f64) {
    boundary_terms(&CracktipFunction::cracktip(), eps, eta, s)
}

/// `int_{-pi}^{pi} sin^2(theta/2) dtheta` by Gauss quadrature.
pub fn sin_half_squared_integral() -> f64 {
    GaussRule::new(16).composite(-PI, PI, 4, |t| (0.5 * t).sin().powi(2))
}

/// The three integrals whose vanishing makes `u_delta` stationary:
///
/// ```text
/// T1 = delta   int <e3, grad u0 . grad eta>   = delta int sum_i d_i u0 d_z eta^i
/// T2 = delta   int <grad u0, e3 . grad eta>   = delta int <grad u0, grad eta^3>
/// T3 = delta^2 int d_z eta^3
/// ```
pub fn udelta_cross_terms(delta: f64, eta: &TestVectorField, s: &QuadratureSettings) -> Result<CrossTerms> {
    if eta.dim != 3 {
        return Err(Error::DimensionMismatch("cross terms need a 3D test field".into()));
    }
    let u0 = CracktipFunction::crack_front();
    let Some(bx) = PolarBox::for_field(eta, 0.0) else {
        return Ok(CrossTerms {
            t1: 0.0,
            t2: 0.0,
            t3: 0.0,
            error_estimate: 0.0,
        });
    };
    let point = |r: f64, th: f64, z: f64| {
        let x = Vec3::new(r * th.cos(), r * th.sin(), z);
        (eta.jacobian(&x), u0.grad_unchecked(r, th))
    };
    let t1 = integrate_with_estimate(&bx, s, &|r, th, z| {
        let (j, g) = point(r, th, z);
        delta * (g.x * j[(0, 2)] + g.y * j[(1, 2)])
    });
    let t2 = integrate_with_estimate(&bx, s, &|r, th, z| {
        let (j, g) = point(r, th, z);
        delta * (g.x * j[(2, 0)] + g.y * j[(2, 1)])
    });
    let t3 = integrate_with_estimate(&bx, s, &|r, th, z| {
        let (j, _) = point(r, th, z);
        delta * delta * j[(2, 2)]
    });
    Ok(CrossTerms {
        t1: t1.value,
        t2: t2.value,
        t3: t3.value,
        error_estimate: t1.error_estimate + t2.error_estimate + t3.error_estimate,
    })
}
