//! Exact domains, crack sets and the branch-cut aware polar map.
//!
//! The angular branch cut sits exactly on the crack `K0 = {(x, 0) : x <= 0}`,
//! so every `theta / 2` formula is single valued off the crack. Points lying
//! on the crack must carry a [`Side`] tag that selects the `theta -> +pi`
//! (above) or `theta -> -pi` (below) limit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Which face of the crack an on-crack point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
    pub z: f64,
    /// Set only for points lying exactly on `K0`.
    pub side: Option<Side>,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64, z: f64) -> Self {
        Self {
            r,
            theta,
            z,
            side: None,
        }
    }

    pub fn to_cartesian(&self) -> Vec3 {
        Vec3::new(self.r * self.theta.cos(), self.r * self.theta.sin(), self.z)
    }
}

/// Cartesian to cylindrical coordinates with the branch cut on `K0`.
pub fn to_polar(p: &Vec3, side_hint: Option<Side>) -> Result<PolarPoint> {
    let r = p.x.hypot(p.y);
    if p.y == 0.0 && p.x < 0.0 {
        let side = side_hint.ok_or(Error::BranchAmbiguity { x: p.x, y: p.y })?;
        let theta = match side {
            Side::Above => PI,
            Side::Below => -PI,
        };
        return Ok(PolarPoint {
            r,
            theta,
            z: p.z,
            side: Some(side),
        });
    }
    // atan2(+0, x<0) would land on +pi; the case is handled above.
    Ok(PolarPoint::new(r, p.y.atan2(p.x), p.z))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainKind {
    Disk { radius: f64 },
    Ball { radius: f64 },
    /// Axis parallel to `e3`.
    Cylinder { radius: f64, half_height: f64 },
    /// Disk of `radius` with the concentric ball of radius `hole` removed.
    Excised { radius: f64, hole: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub center: Vec3,
}

impl Domain {
    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(DomainKind::Disk { radius }, Vec3::zeros())
    }

    pub fn ball(radius: f64) -> Result<Self> {
        Self::new(DomainKind::Ball { radius }, Vec3::zeros())
    }

    pub fn cylinder(radius: f64, half_height: f64) -> Result<Self> {
        Self::new(
            DomainKind::Cylinder {
                radius,
                half_height,
            },
            Vec3::zeros(),
        )
    }

    pub fn excised(radius: f64, hole: f64) -> Result<Self> {
        Self::new(DomainKind::Excised { radius, hole }, Vec3::zeros())
    }

    /// The unit cylinder `B_2D(0,1) x [-1,1]`.
    pub fn unit_cylinder() -> Self {
        Self::cylinder(1.0, 1.0).expect("unit cylinder is valid")
    }

    pub fn new(kind: DomainKind, center: Vec3) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match kind {
            DomainKind::Disk { radius } | DomainKind::Ball { radius } if !ok(radius) => {
                return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")))
            }
            DomainKind::Cylinder {
                radius,
                half_height,
            } if !ok(radius) || !ok(half_height) => {
                return Err(Error::InvalidDomain(format!(
                    "cylinder needs positive radius and half height, got {radius}, {half_height}"
                )))
            }
            DomainKind::Excised { radius, hole } if !ok(radius) || !ok(hole) || hole >= radius => {
                return Err(Error::InvalidDomain(format!(
                    "excised domain needs 0 < hole < radius, got hole {hole}, radius {radius}"
                )))
            }
            _ => {}
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidDomain("center must be finite".into()));
        }
        Ok(Self { kind, center })
    }

    pub fn with_center(mut self, center: Vec3) -> Self {
        self.center = center;
        self
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            DomainKind::Disk { .. } | DomainKind::Excised { .. } => 2,
            DomainKind::Ball { .. } | DomainKind::Cylinder { .. } => 3,
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let d = p - self.center;
        match self.kind {
            DomainKind::Disk { radius } => d.x.hypot(d.y) <= radius,
            DomainKind::Ball { radius } => d.norm() <= radius,
            DomainKind::Cylinder {
                radius,
                half_height,
            } => d.x.hypot(d.y) <= radius && d.z.abs() <= half_height,
            DomainKind::Excised { radius, hole } => {
                let r = d.x.hypot(d.y);
                r <= radius && r > hole
            }
        }
    }

    /// Area (2D domains) or volume (3D domains).
    pub fn measure(&self) -> f64 {
        match self.kind {
            DomainKind::Disk { radius } => PI * radius * radius,
            DomainKind::Ball { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            DomainKind::Cylinder {
                radius,
                half_height,
            } => PI * radius * radius * 2.0 * half_height,
            DomainKind::Excised { radius, hole } => PI * (radius * radius - hole * hole),
        }
    }

    fn is_convex(&self) -> bool {
        !matches!(self.kind, DomainKind::Excised { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [Vec3; 3],
}

/// Area below which a triangle counts as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self {
            vertices: [a, b, c],
        }
    }

    fn cross(&self) -> Vec3 {
        let [a, b, c] = &self.vertices;
        (b - a).cross(&(c - a))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.cross().norm()
    }

    /// Unit normal following the vertex winding; `None` for degenerate triangles.
    pub fn normal(&self) -> Option<Vec3> {
        let n = self.cross();
        let len = n.norm();
        (0.5 * len > DEGENERATE_AREA).then(|| n / len)
    }

    pub fn centroid(&self) -> Vec3 {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }

    fn split(&self) -> [Triangle; 4] {
        let [a, b, c] = self.vertices;
        let ab = 0.5 * (a + b);
        let bc = 0.5 * (b + c);
        let ca = 0.5 * (c + a);
        [
            Triangle::new(a, ab, ca),
            Triangle::new(ab, b, bc),
            Triangle::new(ca, bc, c),
            Triangle::new(ab, bc, ca),
        ]
    }
}

/// Triangle soup in length units.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub triangles: Vec<Triangle>,
}

impl TriMesh {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        Self { triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(Triangle::area).sum()
    }

    pub fn degenerate_indices(&self) -> Vec<usize> {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.normal().is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// Fails with the list of degenerate triangles, if any.
    pub fn validate(&self) -> Result<()> {
        let bad = self.degenerate_indices();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::DegenerateTriangles(bad))
        }
    }

    pub fn z_range(&self) -> Option<(f64, f64)> {
        let mut it = self.triangles.iter().flat_map(|t| t.vertices.iter().map(|v| v.z));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), z| (lo.min(z), hi.max(z))))
    }

    /// Triangulates the image of `[0,1]^2` under `map` on an `nu x nv` grid.
    pub fn from_parametric(nu: usize, nv: usize, map: impl Fn(f64, f64) -> Vec3) -> Self {
        let mut triangles = Vec::with_capacity(2 * nu * nv);
        let p = |i: usize, j: usize| map(i as f64 / nu as f64, j as f64 / nv as f64);
        for i in 0..nu {
            for j in 0..nv {
                let (a, b, c, d) = (p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1));
                triangles.push(Triangle::new(a, b, c));
                triangles.push(Triangle::new(a, c, d));
            }
        }
        Self { triangles }
    }

    /// ASCII form: one triangle per line, nine coordinates separated by spaces.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for t in &self.triangles {
            let mut first = true;
            for v in &t.vertices {
                for c in v.iter() {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    write!(out, "{c:?}").expect("writing to a String cannot fail");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_ascii(reader: impl Read) -> Result<Self> {
        let mut triangles = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                context: format!("triangle line {}", lineno + 1),
                message: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let values = trimmed
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    context: format!("triangle line {}", lineno + 1),
                    message: e.to_string(),
                })?;
            if values.len() != 9 {
                return Err(Error::Parse {
                    context: format!("triangle line {}", lineno + 1),
                    message: format!("expected 9 coordinates, found {}", values.len()),
                });
            }
            let v = |k: usize| Vec3::new(values[3 * k], values[3 * k + 1], values[3 * k + 2]);
            triangles.push(Triangle::new(v(0), v(1), v(2)));
        }
        Ok(Self { triangles })
    }

    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ascii()).map_err(|e| Error::io(path, e))
    }

    pub fn read_ascii(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_ascii(file)
    }
}

/// Candidate discontinuity sets.
#[derive(Clone, Debug, PartialEq)]
pub enum CrackGeometry {
    /// `K0 = ]-inf, 0] x {0}` in the plane.
    HalfLine,
    /// `P0 = K0 x R`.
    HalfPlane,
    /// The full line `y = 0` in the plane (two-constant control couple).
    Line,
    Triangulated(TriMesh),
}

impl CrackGeometry {
    pub fn dimension(&self) -> usize {
        match self {
            CrackGeometry::HalfLine | CrackGeometry::Line => 2,
            CrackGeometry::HalfPlane | CrackGeometry::Triangulated(_) => 3,
        }
    }
}

/// `H^{N-1}(K ∩ D)` with the error bound of the route used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceMeasure {
    pub value: f64,
    /// Zero for closed forms.
    pub error_estimate: f64,
    pub exact: bool,
}

impl SurfaceMeasure {
    fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            exact: true,
        }
    }
}

/// Subdivision depth for clipping triangles against curved domains.
pub const CLIP_DEPTH: u32 = 6;

pub fn surface_measure(crack: &CrackGeometry, domain: &Domain) -> Result<SurfaceMeasure> {
    if crack.dimension() != domain.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "crack set is {}D but domain is {}D",
            crack.dimension(),
            domain.dimension()
        )));
    }
    let c = domain.center;
    match (crack, domain.kind) {
        (CrackGeometry::HalfLine, DomainKind::Disk { radius }) => {
            Ok(SurfaceMeasure::exact(half_line_in_disk(c, radius)))
        }
        (CrackGeometry::HalfLine, DomainKind::Excised { radius, hole }) => Ok(
            SurfaceMeasure::exact(half_line_in_disk(c, radius) - half_line_in_disk(c, hole)),
        ),
        (CrackGeometry::Line, DomainKind::Disk { radius }) => {
            Ok(SurfaceMeasure::exact(2.0 * half_chord(c.y, radius)))
        }
        (CrackGeometry::Line, DomainKind::Excised { radius, hole }) => Ok(SurfaceMeasure::exact(
            2.0 * (half_chord(c.y, radius) - half_chord(c.y, hole)),
        )),
        (
            CrackGeometry::HalfPlane,
            DomainKind::Cylinder {
                radius,
                half_height,
            },
        ) => Ok(SurfaceMeasure::exact(
            half_line_in_disk(c, radius) * 2.0 * half_height,
        )),
        (CrackGeometry::HalfPlane, DomainKind::Ball { radius }) => {
            let rho = half_chord(c.y, radius);
            Ok(SurfaceMeasure::exact(disk_part_left_of_origin(c.x, rho)))
        }
        (CrackGeometry::Triangulated(mesh), _) => Ok(clipped_area(mesh, domain, CLIP_DEPTH)),
        _ => unreachable!("dimension check covers every remaining pair"),
    }
}

/// Half length of the chord cut on `y = offset` by a circle of `radius`.
fn half_chord(offset: f64, radius: f64) -> f64 {
    if offset.abs() >= radius {
        0.0
    } else {
        (radius * radius - offset * offset).sqrt()
    }
}

/// Length of `K0` inside the disk of `radius` centered at `c`.
fn half_line_in_disk(c: Vec3, radius: f64) -> f64 {
    let s = half_chord(c.y, radius);
    let lo = c.x - s;
    let hi = (c.x + s).min(0.0);
    (hi - lo).max(0.0)
}

/// Area of `{x <= 0}` inside the disk of radius `rho` centered at `(cx, .)`.
fn disk_part_left_of_origin(cx: f64, rho: f64) -> f64 {
    if rho <= 0.0 || cx >= rho {
        return 0.0;
    }
    if cx <= -rho {
        return PI * rho * rho;
    }
    let segment = |d: f64| rho * rho * (d / rho).acos() - d * (rho * rho - d * d).sqrt();
    if cx >= 0.0 {
        segment(cx)
    } else {
        PI * rho * rho - segment(-cx)
    }
}

/// Area of a meshed surface inside `domain` by recursive subdivision.
///
/// Leaves whose vertices straddle the domain boundary are counted by their
/// centroid; half of their total area is reported as the error estimate.
pub fn clipped_area(mesh: &TriMesh, domain: &Domain, depth: u32) -> SurfaceMeasure {
    fn visit(t: &Triangle, domain: &Domain, depth: u32, acc: &mut (f64, f64)) {
        let inside = t.vertices.iter().filter(|v| domain.contains(v)).count();
        if inside == 3 && domain.is_convex() {
            acc.0 += t.area();
            return;
        }
        if depth == 0 {
            let a = t.area();
            if domain.contains(&t.centroid()) {
                acc.0 += a;
            }
            if inside != 0 && inside != 3 {
                acc.1 += 0.5 * a;
            }
            return;
        }
        for child in t.split() {
            visit(&child, domain, depth - 1, acc);
        }
    }
    let mut acc = (0.0, 0.0);
    for t in &mesh.triangles {
        visit(t, domain, depth, &mut acc);
    }
    SurfaceMeasure {
        value: acc.0,
        error_estimate: acc.1,
        exact: false,
    }
}

/// Synthetic crack meshes used by the co-area and twist diagnostics.
pub mod meshes {
    use super::*;

    /// `P0 ∩ C` for the unit cylinder: `[-1,0] x {0} x [-1,1]`.
    pub fn half_plane_in_cylinder(n_radial: usize, n_axial: usize) -> TriMesh {
        TriMesh::from_parametric(n_radial, n_axial, |s, t| {
            Vec3::new(-s, 0.0, -1.0 + 2.0 * t)
        })
    }

    /// `P0 ∩ C` tilted by `alpha` about the `e1` axis: the plane contains
    /// `e1` and the direction `(0, -sin alpha, cos alpha)`.
    pub fn tilted_half_plane(alpha: f64, n_radial: usize, n_axial: usize) -> TriMesh {
        let dir = Vec3::new(0.0, -alpha.sin(), alpha.cos());
        TriMesh::from_parametric(n_radial, n_axial, |s, t| {
            Vec3::new(-s, 0.0, 0.0) + (-1.0 + 2.0 * t) * dir
        })
    }

    /// Half-plane whose direction rotates by `pitch` radians per unit height:
    /// `(s cos(pi + pitch z), s sin(pi + pitch z), z)`, `s in [0,1]`, `z in [-1,1]`.
    pub fn helicoid(pitch: f64, n_radial: usize, n_axial: usize) -> TriMesh {
        TriMesh::from_parametric(n_radial, n_axial, |s, t| {
            let z = -1.0 + 2.0 * t;
            let a = PI + pitch * z;
            Vec3::new(s * a.cos(), s * a.sin(), z)
        })
    }

    /// Horizontal disk of `radius` at height `z`, fanned around its center.
    pub fn horizontal_disk(radius: f64, z: f64, n_segments: usize) -> TriMesh {
        let c = Vec3::new(0.0, 0.0, z);
        let p = |k: usize| {
            let a = 2.0 * PI * k as f64 / n_segments as f64;
            Vec3::new(radius * a.cos(), radius * a.sin(), z)
        };
        TriMesh::new(
            (0..n_segments)
                .map(|k| Triangle::new(c, p(k), p(k + 1)))
                .collect(),
        )
    }
}
