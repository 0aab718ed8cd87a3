//! Crack surfaces from phase fields, slicing diagnostics and file export.

pub mod export;
mod slicing;

use std::collections::BTreeMap;

pub use slicing::{coarea_check, slice_levels, slice_mesh, twist_metric, CoareaReport, Segment, SliceMetrics, TwistReport};

use crate::atsolver::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{Triangle, TriMesh, Vec3};

/// Default isovalue, the midpoint of the phase-field well.
pub const DEFAULT_LEVEL: f64 = 0.5;

/// Kuhn split of the unit cube into six tetrahedra sharing the main diagonal
/// `0 -> 7`; corner `b` has offset bits `(x, y, z) = (b & 1, b >> 1 & 1, b >> 2 & 1)`.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn require_3d(phi: &ScalarField) -> Result<()> {
    if phi.dimension() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "surface extraction needs a 3D field, got dimension {}",
            phi.dimension()
        )));
    }
    Ok(())
}

/// Isosurface `{phi = level}` by marching tetrahedra over cells whose corners
/// are all inside the domain. An empty result means `phi` never crosses `level`.
pub fn extract_surface(phi: &ScalarField, level: f64) -> Result<TriMesh> {
    require_3d(phi)?;
    let [nx, ny, nz] = phi.dims;
    let mut tris = Vec::new();
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corner = |b: usize| (i + (b & 1), j + (b >> 1 & 1), k + (b >> 2 & 1));
                let idx: Vec<usize> = (0..8).map(|b| {
                    let (a, c, d) = corner(b);
                    phi.index(a, c, d)
                }).collect();
                if idx.iter().any(|&n| !phi.inside[n]) {
                    continue;
                }
                let pts: Vec<Vec3> = (0..8).map(|b| {
                    let (a, c, d) = corner(b);
                    phi.point(a, c, d)
                }).collect();
                let vals: Vec<f64> = idx.iter().map(|&n| phi.values[n] - level).collect();
                for tet in TETS {
                    tet_surface(tet.map(|b| (pts[b], vals[b])), &mut tris);
                }
            }
        }
    }
    Ok(TriMesh::new(tris))
}

fn tet_surface(v: [(Vec3, f64); 4], out: &mut Vec<Triangle>) {
    let below: Vec<usize> = (0..4).filter(|&a| v[a].1 < 0.0).collect();
    let above: Vec<usize> = (0..4).filter(|&a| v[a].1 >= 0.0).collect();
    let cut = |a: usize, b: usize| {
        let (pa, fa) = v[a];
        let (pb, fb) = v[b];
        pa + (pb - pa) * (fa / (fa - fb))
    };
    match (below.len(), above.len()) {
        (1, 3) => out.push(Triangle::new(cut(below[0], above[0]), cut(below[0], above[1]), cut(below[0], above[2]))),
        (3, 1) => out.push(Triangle::new(cut(above[0], below[0]), cut(above[0], below[1]), cut(above[0], below[2]))),
        (2, 2) => {
            let (a, b) = (below[0], below[1]);
            let (c, d) = (above[0], above[1]);
            let quad = [cut(a, c), cut(a, d), cut(b, d), cut(b, c)];
            out.push(Triangle::new(quad[0], quad[1], quad[2]));
            out.push(Triangle::new(quad[0], quad[2], quad[3]));
        }
        _ => {}
    }
}

/// Mid-surface of a phase-field valley by dual contouring of discrete minima.
///
/// Along every grid line, a node whose value is below `level` and strictly
/// below its predecessor and not above its successor marks a valley; the
/// vertex of the parabola through the three samples locates the crossing on
/// one of the two adjacent edges. Lines along which the valley curvature is
/// under a quarter of the steepest neighbor difference at that node are
/// skipped. This rejects flat directions tangent to the sheet, and shallow
/// dips on the flanks of a sheet, where the normal slope dominates. Every valley edge emits the
/// quad joining the centers of mass of the valley points of its four cells.
pub fn extract_midsurface(phi: &ScalarField, level: f64) -> Result<TriMesh> {
    require_3d(phi)?;
    const RATIO: f64 = 0.25;
    let dims = phi.dims;
    let stride = [1, dims[0], dims[0] * dims[1]];
    let h = phi.spacing;
    let mut edges: BTreeMap<(usize, usize), Vec3> = BTreeMap::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let c = [i, j, k];
                let n = phi.index(i, j, k);
                let b = phi.values[n];
                if !phi.inside[n] || b >= level {
                    continue;
                }
                let mut curv = [0.0; 3];
                let mut sides = [(0.0, 0.0); 3];
                let mut top: f64 = 0.0;
                for axis in 0..3 {
                    if c[axis] == 0 || c[axis] + 1 == dims[axis] {
                        continue;
                    }
                    let (lo, hi) = (n - stride[axis], n + stride[axis]);
                    if !phi.inside[lo] || !phi.inside[hi] {
                        continue;
                    }
                    let (a, cc) = (phi.values[lo], phi.values[hi]);
                    sides[axis] = (a, cc);
                    top = top.max((a - b).abs()).max((cc - b).abs());
                    if a > b && cc >= b {
                        curv[axis] = a - 2.0 * b + cc;
                    }
                }
                for axis in 0..3 {
                    if curv[axis] <= 0.0 || curv[axis] < RATIO * top {
                        continue;
                    }
                    let (a, cc) = sides[axis];
                    let t = (a - cc) / (2.0 * curv[axis]);
                    let mut p = phi.point(i, j, k);
                    p[axis] += t * h;
                    let lower = if t >= 0.0 { n } else { n - stride[axis] };
                    edges.insert((lower, axis), p);
                }
            }
        }
    }
    let coords = |n: usize| [n % dims[0], (n / dims[0]) % dims[1], n / (dims[0] * dims[1])];
    let mut cells: BTreeMap<usize, (Vec3, usize)> = BTreeMap::new();
    let cells_of = |lower: usize, axis: usize| -> Option<[usize; 4]> {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        let c = coords(lower);
        let mut out = [0; 4];
        for (slot, (s1, s2)) in [(0, 0), (1, 0), (1, 1), (0, 1)].into_iter().enumerate() {
            let mut cc = c;
            if cc[a1] < s1 || cc[a2] < s2 {
                return None;
            }
            cc[a1] -= s1;
            cc[a2] -= s2;
            if (0..3).any(|ax| cc[ax] + 1 >= dims[ax]) {
                return None;
            }
            out[slot] = cc[0] + stride[1] * cc[1] + stride[2] * cc[2];
        }
        Some(out)
    };
    for (&(lower, axis), p) in &edges {
        if let Some(cs) = cells_of(lower, axis) {
            for c in cs {
                let e = cells.entry(c).or_insert((Vec3::zeros(), 0));
                e.0 += p;
                e.1 += 1;
            }
        }
    }
    let vertex = |c: usize| {
        let (s, m) = cells[&c];
        s / m as f64
    };
    let mut tris = Vec::new();
    for &(lower, axis) in edges.keys() {
        if let Some(cs) = cells_of(lower, axis) {
            let q = cs.map(vertex);
            tris.push(Triangle::new(q[0], q[1], q[2]));
            tris.push(Triangle::new(q[0], q[2], q[3]));
        }
    }
    Ok(TriMesh::new(tris))
}

/// Uniform bucket index over the triangles of a mesh for distance queries.
pub struct TriangleIndex<'a> {
    mesh: &'a TriMesh,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'a> TriangleIndex<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for t in &mesh.triangles {
            for v in &t.vertices {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
        }
        if mesh.is_empty() {
            lo = Vec3::zeros();
            hi = Vec3::zeros();
        }
        let extent = (hi - lo).max().max(1e-12);
        let per_axis = ((mesh.len() as f64).sqrt().ceil() as usize).clamp(1, 128);
        let cell = extent / per_axis as f64;
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).max(1));
        let mut buckets = vec![Vec::new(); dims.iter().product()];
        let to_cell = |v: f64, a: usize| (((v - lo[a]) / cell).floor().max(0.0) as usize).min(dims[a] - 1);
        for (n, t) in mesh.triangles.iter().enumerate() {
            let tlo = t.vertices[0].inf(&t.vertices[1]).inf(&t.vertices[2]);
            let thi = t.vertices[0].sup(&t.vertices[1]).sup(&t.vertices[2]);
            for z in to_cell(tlo.z, 2)..=to_cell(thi.z, 2) {
                for y in to_cell(tlo.y, 1)..=to_cell(thi.y, 1) {
                    for x in to_cell(tlo.x, 0)..=to_cell(thi.x, 0) {
                        buckets[x + dims[0] * (y + dims[1] * z)].push(n);
                    }
                }
            }
        }
        Self {
            mesh,
            lo,
            cell,
            dims,
            buckets,
        }
    }

    /// Euclidean distance from `p` to the mesh; infinite for an empty mesh.
    pub fn distance(&self, p: &Vec3) -> f64 {
        if self.mesh.is_empty() {
            return f64::INFINITY;
        }
        let c = [0, 1, 2].map(|a| {
            (((p[a] - self.lo[a]) / self.cell).floor().max(0.0) as usize).min(self.dims[a] - 1) as isize
        });
        // Distance from p to the bounding box of the buckets; every cell on
        // ring k is at least max(base, (k - 1) cell) away.
        let outside = [0, 1, 2]
            .map(|a| {
                let lo = self.lo[a] + c[a] as f64 * self.cell;
                (lo - p[a]).max(p[a] - lo - self.cell).max(0.0)
            });
        let base = Vec3::new(outside[0], outside[1], outside[2]).norm();
        let max_ring = *self.dims.iter().max().expect("three axes") as isize;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            if best <= base.max((ring - 1).max(0) as f64 * self.cell) {
                break;
            }
            for z in c[2] - ring..=c[2] + ring {
                for y in c[1] - ring..=c[1] + ring {
                    for x in c[0] - ring..=c[0] + ring {
                        let on_ring = (x - c[0]).abs() == ring || (y - c[1]).abs() == ring || (z - c[2]).abs() == ring;
                        if !on_ring || x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let (x, y, z) = (x as usize, y as usize, z as usize);
                        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
                            continue;
                        }
                        for &t in &self.buckets[x + self.dims[0] * (y + self.dims[1] * z)] {
                            best = best.min(point_triangle_distance(p, &self.mesh.triangles[t]));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Distance from `p` to a closed triangle.
pub fn point_triangle_distance(p: &Vec3, t: &Triangle) -> f64 {
    let [a, b, c] = t.vertices;
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return (p - a).norm();
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return (p - b).norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return (p - c).norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    (p - (a + ab * v + ac * w)).norm()
}

/// Sample points of a mesh: vertices, edge midpoints and centroids.
fn samples(mesh: &TriMesh) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(7 * mesh.len());
    for t in &mesh.triangles {
        let [a, b, c] = t.vertices;
        out.extend([a, b, c, (a + b) / 2.0, (b + c) / 2.0, (a + c) / 2.0, t.centroid()]);
    }
    out
}

/// Largest distance from the samples of `from` to the mesh `to`.
pub fn one_sided_distance(from: &TriMesh, to: &TriMesh) -> f64 {
    use rayon::prelude::*;
    let index = TriangleIndex::new(to);
    let pts = samples(from);
    let d: Vec<f64> = pts.par_iter().map(|p| index.distance(p)).collect();
    d.into_iter().fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance estimated on vertices, edge midpoints and
/// centroids; sample spacing bounds the underestimate.
pub fn hausdorff_distance(a: &TriMesh, b: &TriMesh) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    one_sided_distance(a, b).max(one_sided_distance(b, a))
}
