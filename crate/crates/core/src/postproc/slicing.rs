//! Horizontal slices of triangulated cracks: co-area sums and twist angles.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::geometry::{TriMesh, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// Midpoints of `n` equal sub-intervals of `[lo, hi]`.
pub fn slice_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let dz = (hi - lo) / n as f64;
    (0..n).map(|k| lo + (k as f64 + 0.5) * dz).collect()
}

/// Intersection of the mesh with the plane `{z = level}`; a vertex on the
/// plane counts as above it. Degenerate triangles are skipped.
pub fn slice_mesh(mesh: &TriMesh, level: f64) -> Vec<Segment> {
    mesh.triangles
        .iter()
        .filter(|t| t.normal().is_some())
        .filter_map(|t| {
            let v = t.vertices;
            let above = v.map(|p| p.z >= level);
            let n_above = above.iter().filter(|&&x| x).count();
            if n_above == 0 || n_above == 3 {
                return None;
            }
            let mut pts = [Vec3::zeros(); 2];
            let mut m = 0;
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                if above[i] != above[j] {
                    let s = (level - v[i].z) / (v[j].z - v[i].z);
                    pts[m] = v[i] + s * (v[j] - v[i]);
                    m += 1;
                }
            }
            Some(Segment { a: pts[0], b: pts[1] })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoareaReport {
    /// Midpoint sum of slice lengths times slice spacing.
    pub lhs: f64,
    /// Sum of `|sin theta| * area` over triangles.
    pub rhs: f64,
    pub n_slices: usize,
    /// Degenerate triangles left out of both sides.
    pub excluded: Vec<usize>,
}

impl CoareaReport {
    pub fn relative_gap(&self) -> f64 {
        if self.rhs == 0.0 {
            self.lhs.abs()
        } else {
            (self.lhs - self.rhs).abs() / self.rhs
        }
    }
}

/// Both sides of the co-area identity `int L(z) dz = int_K |sin theta|`,
/// with `theta` the angle between the unit normal and `e3`.
pub fn coarea_check(mesh: &TriMesh, n_slices: usize) -> CoareaReport {
    let excluded = mesh.degenerate_indices();
    let parts: Vec<f64> = mesh
        .triangles
        .par_iter()
        .map(|t| match t.normal() {
            Some(n) => (1.0 - n.z * n.z).max(0.0).sqrt() * t.area(),
            None => 0.0,
        })
        .collect();
    let rhs = parts.iter().sum();
    let lhs = match mesh.z_range() {
        Some((lo, hi)) if hi > lo && n_slices > 0 => {
            let dz = (hi - lo) / n_slices as f64;
            let lengths: Vec<f64> = slice_levels(lo, hi, n_slices)
                .par_iter()
                .map(|&z| slice_mesh(mesh, z).iter().map(Segment::length).sum())
                .collect();
            lengths.iter().sum::<f64>() * dz
        }
        _ => 0.0,
    };
    CoareaReport {
        lhs,
        rhs,
        n_slices,
        excluded,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceMetrics {
    pub z: f64,
    pub length: f64,
    /// Unwrapped angle of the dominant direction, oriented away from the axis.
    pub centroid_angle: f64,
    /// Extreme points along the dominant direction.
    pub endpoints: [Vec3; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistReport {
    pub slices: Vec<SliceMetrics>,
    /// Slice heights without any intersection; not interpolated.
    pub gaps: Vec<f64>,
    /// Angle at the top slice minus angle at the bottom slice.
    pub total_twist: f64,
    /// Angles never step in both directions.
    pub monotone: bool,
}

impl TwistReport {
    /// Largest deviation of a slice angle from the mean angle.
    pub fn angle_spread(&self) -> f64 {
        if self.slices.is_empty() {
            return 0.0;
        }
        let mean = self.slices.iter().map(|s| s.centroid_angle).sum::<f64>() / self.slices.len() as f64;
        self.slices
            .iter()
            .map(|s| (s.centroid_angle - mean).abs())
            .fold(0.0, f64::max)
    }
}

fn slice_metrics(z: f64, segs: &[Segment]) -> Option<SliceMetrics> {
    let length: f64 = segs.iter().map(Segment::length).sum();
    if length <= 0.0 {
        return None;
    }
    let (mut txx, mut txy, mut tyy) = (0.0, 0.0, 0.0);
    let (mut cx, mut cy) = (0.0, 0.0);
    for s in segs {
        let l = s.length();
        if l == 0.0 {
            continue;
        }
        let (dx, dy) = ((s.b.x - s.a.x) / l, (s.b.y - s.a.y) / l);
        txx += l * dx * dx;
        txy += l * dx * dy;
        tyy += l * dy * dy;
        cx += l * 0.5 * (s.a.x + s.b.x);
        cy += l * 0.5 * (s.a.y + s.b.y);
    }
    let mut psi = 0.5 * (2.0 * txy).atan2(txx - tyy);
    if psi.cos() * cx + psi.sin() * cy < 0.0 {
        psi += PI;
    }
    let dir = Vec3::new(psi.cos(), psi.sin(), 0.0);
    let mut lo = (f64::INFINITY, Vec3::zeros());
    let mut hi = (f64::NEG_INFINITY, Vec3::zeros());
    for p in segs.iter().flat_map(|s| [s.a, s.b]) {
        let t = p.dot(&dir);
        if t < lo.0 {
            lo = (t, p);
        }
        if t > hi.0 {
            hi = (t, p);
        }
    }
    Some(SliceMetrics {
        z,
        length,
        centroid_angle: psi,
        endpoints: [lo.1, hi.1],
    })
}

/// Per-slice orientation of the crack curve and the total twist over the
/// mesh height. The angle is the length-weighted principal direction of the
/// slice segments, signed towards their centroid.
pub fn twist_metric(mesh: &TriMesh, n_slices: usize) -> TwistReport {
    let Some((lo, hi)) = mesh.z_range() else {
        return TwistReport {
            slices: Vec::new(),
            gaps: Vec::new(),
            total_twist: 0.0,
            monotone: true,
        };
    };
    let levels = slice_levels(lo, hi, n_slices);
    let found: Vec<(f64, Option<SliceMetrics>)> = levels
        .par_iter()
        .map(|&z| (z, slice_metrics(z, &slice_mesh(mesh, z))))
        .collect();
    let mut slices: Vec<SliceMetrics> = Vec::new();
    let mut gaps = Vec::new();
    for (z, m) in found {
        match m {
            Some(mut m) => {
                if let Some(prev) = slices.last() {
                    let mut d = m.centroid_angle - prev.centroid_angle;
                    d -= 2.0 * PI * (d / (2.0 * PI)).round();
                    m.centroid_angle = prev.centroid_angle + d;
                }
                slices.push(m);
            }
            None => gaps.push(z),
        }
    }
    const FLAT: f64 = 1e-9;
    let steps: Vec<f64> = slices
        .windows(2)
        .map(|w| w[1].centroid_angle - w[0].centroid_angle)
        .collect();
    let monotone = steps.iter().all(|&d| d >= -FLAT) || steps.iter().all(|&d| d <= FLAT);
    let total_twist = match (slices.first(), slices.last()) {
        (Some(a), Some(b)) => b.centroid_angle - a.centroid_angle,
        _ => 0.0,
    };
    TwistReport {
        slices,
        gaps,
        total_twist,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{meshes, Triangle};

    #[test]
    fn vertical_half_plane() {
        let m = meshes::half_plane_in_cylinder(6, 10);
        let r = coarea_check(&m, 37);
        assert!((r.rhs - 2.0).abs() < 1e-12);
        assert!((r.lhs - 2.0).abs() < 1e-12);
        let t = twist_metric(&m, 20);
        assert_eq!(t.slices.len(), 20);
        assert!(t.total_twist.abs() < 1e-12 && t.monotone);
        assert!(t.slices.iter().all(|s| (s.centroid_angle - PI).abs() < 1e-12));
        let [a, b] = t.slices[3].endpoints;
        assert!((a.x - 0.0).abs() < 1e-12 && (b.x + 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizontal_disk_has_no_slices() {
        let m = meshes::horizontal_disk(0.5, 0.2, 16);
        let r = coarea_check(&m, 10);
        assert!(r.rhs.abs() < 1e-15 && r.lhs == 0.0);
    }

    #[test]
    fn rotation_shifts_angles_only() {
        let m = meshes::helicoid(0.6, 12, 40);
        let rot = |p: Vec3, a: f64| Vec3::new(a.cos() * p.x - a.sin() * p.y, a.sin() * p.x + a.cos() * p.y, p.z);
        let turned = TriMesh::new(
            m.triangles
                .iter()
                .map(|t| Triangle::new(rot(t.vertices[0], 2.5), rot(t.vertices[1], 2.5), rot(t.vertices[2], 2.5)))
                .collect(),
        );
        let (a, b) = (twist_metric(&m, 25), twist_metric(&turned, 25));
        assert!((a.total_twist - b.total_twist).abs() < 1e-10);
        assert!(a.monotone && b.monotone);
    }

    #[test]
    fn gaps_are_recorded() {
        let mut m = meshes::half_plane_in_cylinder(2, 2);
        m.triangles.extend(meshes::horizontal_disk(0.3, 5.0, 8).triangles);
        let t = twist_metric(&m, 12);
        assert!(!t.gaps.is_empty());
        assert_eq!(t.slices.len() + t.gaps.len(), 12);
    }
}
