//! Energy ledgers of explicit competitors against `(u_delta, P0)`.
//!
//! Every ledger compares the energy of the original pair and of the competitor
//! inside the modified region. The margin is `competitor - original`, so a
//! negative margin means the competitor wins and `u_delta` is not minimizing.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::analytic::{cracktip_constant, CracktipFunction};
use crate::atsolver::ScalarField;
use crate::energy::{EnergyBreakdown, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{Domain, PolarPoint, TriMesh, Vec3};
use crate::quadrature::GaussRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// `K' = (P0 \ B(0,R)) ∪ ∂B(0,R)`, `v = 0` inside the ball.
    CutBall,
    /// The cut ball with a hole of radius `eps` drilled through the sphere.
    DrilledSphere,
    /// `K0` outside a shrunk cylinder plus its boundary, `v = 0` inside.
    CylinderShell,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::CutBall => "cut_ball",
            Construction::DrilledSphere => "drilled_sphere",
            Construction::CylinderShell => "cylinder_shell",
        })
    }
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cut_ball" => Ok(Construction::CutBall),
            "drilled_sphere" => Ok(Construction::DrilledSphere),
            "cylinder_shell" => Ok(Construction::CylinderShell),
            _ => Err(Error::InvalidParameter(format!("unknown construction {s:?}"))),
        }
    }
}

/// Competitor energy and margin in a limit of the construction parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitEntry {
    pub competitor: EnergyBreakdown,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompetitorLedger {
    pub construction: Construction,
    pub parameters: Vec<(&'static str, f64)>,
    pub original: EnergyBreakdown,
    pub competitor: EnergyBreakdown,
    /// `competitor.total - original.total`.
    pub margin: f64,
    /// Whether the complement of the competitor crack is connected.
    pub complement_connected: bool,
    /// Upper bound on the competitor's Dirichlet energy, where one is derived.
    pub dirichlet_bound: Option<f64>,
    pub limit: Option<LimitEntry>,
}

impl CompetitorLedger {
    fn new(
        construction: Construction,
        parameters: Vec<(&'static str, f64)>,
        original: EnergyBreakdown,
        competitor: EnergyBreakdown,
    ) -> Self {
        Self {
            construction,
            parameters,
            original,
            competitor,
            margin: competitor.total - original.total,
            complement_connected: construction == Construction::DrilledSphere,
            dirichlet_bound: None,
            limit: None,
        }
    }

    pub fn competitor_wins(&self) -> bool {
        self.margin < 0.0
    }
}

fn check_slope(delta: f64) -> Result<()> {
    if !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("slope must be finite, got {delta}")));
    }
    Ok(())
}

fn ball_original(delta: f64, radius: f64) -> Result<EnergyBreakdown> {
    CracktipFunction::udelta(delta).closed_form_energy(&Domain::ball(radius)?)
}

/// Sphere competitor on `B(0, R)`.
pub fn cut_ball_ledger(delta: f64, radius: f64) -> Result<CompetitorLedger> {
    check_slope(delta)?;
    let original = ball_original(delta, radius)?;
    let competitor = EnergyBreakdown::new(0.0, 4.0 * PI * radius * radius, Provenance::ClosedForm);
    Ok(CompetitorLedger::new(
        Construction::CutBall,
        vec![("delta", delta), ("R", radius)],
        original,
        competitor,
    ))
}

/// Radius where the cut-ball margin changes sign, `9 / (4 delta^2)`.
pub fn cut_ball_sign_change(delta: f64) -> f64 {
    9.0 / (4.0 * delta * delta)
}

/// Cut ball with the cap `B(y, eps) ∩ ∂B(0,R)` removed at `y = (R, 0, 0)`.
///
/// Inside the ball the competitor is `u_delta * psi` with `psi = 1` on
/// `B(y, eps)`, `psi = 0` off `B(y, 2 eps)` and linear in `|x - y|` between.
pub fn drilled_sphere_ledger(delta: f64, radius: f64, hole: f64) -> Result<CompetitorLedger> {
    check_slope(delta)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if !(hole > 0.0) || hole >= radius / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "hole radius {hole} must lie in (0, R/4) for R = {radius}"
        )));
    }
    let original = ball_original(delta, radius)?;
    let lens = DrillIntegrals::compute(delta, radius, hole);
    let cap = PI * hole * hole;
    let competitor = EnergyBreakdown::new(lens.cutoff_dirichlet, 4.0 * PI * radius * radius - cap, Provenance::Quadrature);
    let sup = cracktip_constant() * radius.sqrt() + 2.0 * delta.abs() * hole;
    let bound = 2.0 * lens.plain_dirichlet + 2.0 * sup * sup / (hole * hole) * lens.volume;
    let mut ledger = CompetitorLedger::new(
        Construction::DrilledSphere,
        vec![("delta", delta), ("R", radius), ("eps_hole", hole)],
        original,
        competitor,
    );
    ledger.dirichlet_bound = Some(bound);
    Ok(ledger)
}

/// Integrals over the lens `B(0,R) ∩ B(y, 2 eps)` in spherical coordinates
/// around `y`; the direction makes angle `alpha` with `-e1`, and the ray stays
/// in the ball while `rho < 2 R cos(alpha)`.
struct DrillIntegrals {
    cutoff_dirichlet: f64,
    plain_dirichlet: f64,
    volume: f64,
}

impl DrillIntegrals {
    fn compute(delta: f64, radius: f64, eps: f64) -> Self {
        let rule = GaussRule::new(12);
        let u = CracktipFunction::udelta(delta);
        let y = Vec3::new(radius, 0.0, 0.0);
        let a1 = (eps / radius).acos();
        let a2 = (eps / (2.0 * radius)).acos();
        let rho_max = |a: f64| (2.0 * radius * a.cos()).min(2.0 * eps);
        let alpha_pieces = [(0.0, a1), (a1, a2), (a2, PI / 2.0)];
        let betas = rule.composite_points(0.0, 2.0 * PI, 16);
        let parts: Vec<[f64; 3]> = alpha_pieces
            .par_iter()
            .flat_map_iter(|&(lo, hi)| rule.composite_points(lo, hi, 8))
            .map(|(alpha, wa)| {
                let (sa, ca) = alpha.sin_cos();
                let top = rho_max(alpha);
                let mut rho_pts = rule.composite_points(0.0, top.min(eps), 2);
                if top > eps {
                    rho_pts.extend(rule.composite_points(eps, top, 2));
                }
                let mut acc = [0.0; 3];
                for &(beta, wb) in &betas {
                    let (sb, cb) = beta.sin_cos();
                    let dir = Vec3::new(-ca, sa * cb, sa * sb);
                    for &(rho, wr) in &rho_pts {
                        let w = wa * wb * wr * rho * rho * sa;
                        let p = y + rho * dir;
                        let polar = PolarPoint::new(p.x.hypot(p.y), p.y.atan2(p.x), p.z);
                        let g = u.grad_unchecked(polar.r, polar.theta);
                        let (psi, dpsi) = if rho <= eps { (1.0, 0.0) } else { ((2.0 * eps - rho) / eps, -1.0 / eps) };
                        // grad psi points along the ray direction.
                        let grad = psi * g + u.eval(&polar) * dpsi * dir;
                        acc[0] += w * grad.norm_squared();
                        acc[1] += w * g.norm_squared();
                        acc[2] += w;
                    }
                }
                acc
            })
            .collect();
        let mut sum = [0.0; 3];
        for p in &parts {
            for k in 0..3 {
                sum[k] += p[k];
            }
        }
        Self {
            cutoff_dirichlet: sum[0],
            plain_dirichlet: sum[1],
            volume: sum[2],
        }
    }
}

/// Shell competitor on the unit cylinder with `C_eps = B_2D(0, 1-eps) x [-(1-eps), 1-eps]`.
///
/// With `a = 1 - eps` the competitor carries `u_delta` only on the shell, so
/// `margin = (6 pi - 4) a^2 - 2 pi delta^2 a^3`; the `eps -> 0` limit is
/// recorded alongside.
pub fn cylinder_shell_ledger(delta: f64, eps: f64) -> Result<CompetitorLedger> {
    check_slope(delta)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("shrink parameter must lie in (0, 1), got {eps}")));
    }
    let u = CracktipFunction::udelta(delta);
    let original = u.closed_form_energy(&Domain::unit_cylinder())?;
    let competitor_at = |a: f64| -> Result<EnergyBreakdown> {
        let inner = if a > 0.0 {
            u.closed_form_energy(&Domain::cylinder(a, a)?)?
        } else {
            EnergyBreakdown::new(0.0, 0.0, Provenance::ClosedForm)
        };
        // Lateral area 2 pi a * 2a plus two lids pi a^2.
        let shell = 6.0 * PI * a * a;
        Ok(EnergyBreakdown::new(
            original.dirichlet - inner.dirichlet,
            original.surface - inner.surface + shell,
            Provenance::ClosedForm,
        ))
    };
    let competitor = competitor_at(1.0 - eps)?;
    let limit = competitor_at(1.0)?;
    let mut ledger = CompetitorLedger::new(
        Construction::CylinderShell,
        vec![("delta", delta), ("eps", eps)],
        original,
        competitor,
    );
    ledger.limit = Some(LimitEntry {
        competitor: limit,
        margin: limit.total - original.total,
    });
    Ok(ledger)
}

/// Slope above which the limit shell competitor wins: the root of
/// `6 pi - 4 - 2 pi delta^2`.
pub fn cylinder_shell_threshold() -> f64 {
    ((6.0 * PI - 4.0) / (2.0 * PI)).sqrt()
}

/// Both upper bounds on `s(delta)` evaluated on a discrete candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdeltaBound {
    /// `int_C (delta^2 - |d_z u|^2) + int_K (|sin theta| - 1)`.
    pub goodbound: f64,
    /// `2 delta^2 |C| - 2 delta int_C d_z u`.
    pub ineq00: f64,
    pub volume_term: f64,
    pub surface_term: f64,
    /// Discrete measure of the cylinder used by both bounds.
    pub measure: f64,
}

/// Evaluates the bounds for a candidate `(u, K)`; `d_z u` is the difference
/// quotient on vertical grid edges between inside nodes, each edge standing
/// for `h^3` of volume.
pub fn sdelta_upper_bound(u: &ScalarField, crack: &TriMesh, delta: f64) -> Result<SdeltaBound> {
    check_slope(delta)?;
    crack.validate()?;
    if u.dims[2] < 2 {
        return Err(Error::DimensionMismatch("the candidate field must be 3D".into()));
    }
    let h = u.spacing;
    let w = h * h * h;
    let [nx, ny, nz] = u.dims;
    let (mut measure, mut square, mut linear) = (0.0, 0.0, 0.0);
    for k in 0..nz - 1 {
        for j in 0..ny {
            for i in 0..nx {
                let (a, b) = (u.index(i, j, k), u.index(i, j, k + 1));
                if !(u.inside[a] && u.inside[b]) {
                    continue;
                }
                let d = (u.values[b] - u.values[a]) / h;
                measure += w;
                square += w * d * d;
                linear += w * d;
            }
        }
    }
    let parts: Vec<f64> = crack
        .triangles
        .par_iter()
        .map(|t| {
            let n = t.normal().expect("validated mesh");
            ((1.0 - n.z * n.z).max(0.0).sqrt() - 1.0) * t.area()
        })
        .collect();
    let surface_term: f64 = parts.iter().sum();
    let volume_term = delta * delta * measure - square;
    Ok(SdeltaBound {
        goodbound: volume_term + surface_term,
        ineq00: 2.0 * delta * delta * measure - 2.0 * delta * linear,
        volume_term,
        surface_term,
        measure,
    })
}

/// CSV with one ledger per row.
pub fn ledgers_csv(ledgers: &[CompetitorLedger]) -> String {
    let mut s = String::from(
        "construction,parameters,original_dirichlet,original_surface,original_total,\
         competitor_dirichlet,competitor_surface,competitor_total,margin\n",
    );
    for l in ledgers {
        let params: Vec<String> = l.parameters.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
        let _ = writeln!(
            s,
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            l.construction,
            params.join(";"),
            l.original.dirichlet,
            l.original.surface,
            l.original.total,
            l.competitor.dirichlet,
            l.competitor.surface,
            l.competitor.total,
            l.margin
        );
    }
    s
}
