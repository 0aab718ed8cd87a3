//! Legacy ASCII VTK and CSV writers.
//!
//! Floats use Rust's shortest round-trip formatting, which is
//! locale-independent, so identical data give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::SliceMetrics;
use crate::atsolver::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{Triangle, TriMesh, Vec3};

pub fn vtk_field(field: &ScalarField, name: &str) -> String {
    let [nx, ny, nz] = field.dims;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{name}\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    let o = field.origin;
    let _ = writeln!(s, "ORIGIN {:?} {:?} {:?}", o.x, o.y, o.z);
    let h = field.spacing;
    let _ = writeln!(s, "SPACING {h:?} {h:?} {h:?}");
    let _ = writeln!(s, "POINT_DATA {}", field.values.len());
    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in &field.values {
        let _ = writeln!(s, "{v:?}");
    }
    s
}

pub fn vtk_surface(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let n = mesh.len();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\ncrack surface\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {} double", 3 * n);
    for t in &mesh.triangles {
        for v in &t.vertices {
            let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
        }
    }
    let _ = writeln!(s, "POLYGONS {n} {}", 4 * n);
    for k in 0..n {
        let _ = writeln!(s, "3 {} {} {}", 3 * k, 3 * k + 1, 3 * k + 2);
    }
    s
}

/// Reads triangles back from [`vtk_surface`] output (or any triangle-only polydata).
pub fn parse_vtk_surface(text: &str) -> Result<TriMesh> {
    let bad = |m: &str| Error::Parse {
        context: "vtk polydata".into(),
        message: m.into(),
    };
    let mut tokens = text.lines().skip(4).flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or_else(|| bad(&format!("missing {what}")));
    if next("POINTS")? != "POINTS" {
        return Err(bad("expected POINTS"));
    }
    let np: usize = next("point count")?.parse().map_err(|_| bad("bad point count"))?;
    next("point type")?;
    let mut pts = Vec::with_capacity(np);
    for _ in 0..np {
        let mut c = [0.0; 3];
        for x in &mut c {
            *x = next("coordinate")?.parse().map_err(|_| bad("bad coordinate"))?;
        }
        pts.push(Vec3::new(c[0], c[1], c[2]));
    }
    if next("POLYGONS")? != "POLYGONS" {
        return Err(bad("expected POLYGONS"));
    }
    let nt: usize = next("polygon count")?.parse().map_err(|_| bad("bad polygon count"))?;
    next("index count")?;
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        if next("vertex count")? != "3" {
            return Err(bad("only triangles are supported"));
        }
        let mut v = [Vec3::zeros(); 3];
        for p in &mut v {
            let i: usize = next("index")?.parse().map_err(|_| bad("bad index"))?;
            *p = *pts.get(i).ok_or_else(|| bad("index out of range"))?;
        }
        tris.push(Triangle::new(v[0], v[1], v[2]));
    }
    Ok(TriMesh::new(tris))
}

/// CSV with the fixed header `z,length,centroid_angle`.
pub fn slices_csv(slices: &[SliceMetrics]) -> String {
    let mut s = String::from("z,length,centroid_angle\n");
    for m in slices {
        let _ = writeln!(s, "{:?},{:?},{:?}", m.z, m.length, m.centroid_angle);
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_vtk_field(field: &ScalarField, name: &str, path: &Path) -> Result<()> {
    write_text(path, &vtk_field(field, name))
}

pub fn write_vtk_surface(mesh: &TriMesh, path: &Path) -> Result<()> {
    write_text(path, &vtk_surface(mesh))
}

pub fn read_vtk_surface(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vtk_surface(&text)
}

pub fn write_slices_csv(slices: &[SliceMetrics], path: &Path) -> Result<()> {
    write_text(path, &slices_csv(slices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::meshes;

    #[test]
    fn surface_round_trip_is_exact() {
        let m = meshes::helicoid(0.37, 5, 7);
        let back = parse_vtk_surface(&vtk_surface(&m)).unwrap();
        assert_eq!(back, m);
        let empty = TriMesh::new(Vec::new());
        let text = vtk_surface(&empty);
        assert!(text.contains("POLYGONS 0 0"));
        assert!(parse_vtk_surface(&text).unwrap().is_empty());
    }

    #[test]
    fn field_header() {
        let f = ScalarField::from_fn([3, 2, 1], Vec3::new(-1.0, -1.0, 0.0), 0.5, |p| p.x);
        let text = vtk_field(&f, "phi");
        assert!(text.starts_with("# vtk DataFile Version 3.0\nphi\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 3 2 1\n"));
        assert!(text.contains("POINT_DATA 6\nSCALARS phi double 1\nLOOKUP_TABLE default\n-1.0\n-0.5\n0.0\n"));
    }

    #[test]
    fn csv_columns() {
        let m = SliceMetrics {
            z: 0.25,
            length: 1.0,
            centroid_angle: std::f64::consts::PI,
            endpoints: [Vec3::zeros(); 2],
        };
        assert_eq!(slices_csv(&[m]), "z,length,centroid_angle\n0.25,1.0,3.141592653589793\n");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let r = write_text(Path::new("/nonexistent-dir/x.csv"), "a");
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
