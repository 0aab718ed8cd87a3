use std::f64::consts::PI;

use crackfront::analytic::CracktipFunction;
use crackfront::atsolver::ScalarField;
use crackfront::competitors::sdelta_upper_bound;
use crackfront::geometry::{meshes, PolarPoint, TriMesh, Vec3};
use crackfront::postproc::{self, coarea_check, export, hausdorff_distance, twist_metric};

#[test]
fn coarea_on_synthetic_meshes() {
    let vertical = meshes::half_plane_in_cylinder(8, 16);
    let r = coarea_check(&vertical, 50);
    assert!(r.relative_gap() < 0.01 && (r.rhs - 2.0).abs() < 1e-12);

    let alpha = PI / 6.0;
    let tilted = meshes::tilted_half_plane(alpha, 8, 16);
    let r = coarea_check(&tilted, 50);
    assert!((r.rhs - alpha.cos() * tilted.area()).abs() < 1e-10 * tilted.area());
    assert!(r.relative_gap() < 0.01, "{r:?}");

    let helix = meshes::helicoid(0.8, 16, 64);
    let r = coarea_check(&helix, 64);
    assert!(r.relative_gap() < 0.01, "{r:?}");
    assert!(r.excluded.is_empty());
}

#[test]
fn helicoid_twist_is_twice_the_pitch() {
    for &beta in &[0.2, 0.5, 1.0, -0.7] {
        let t = twist_metric(&meshes::helicoid(beta, 12, 80), 40);
        // Slices sit at interval midpoints, so the span is 2 (1 - 1/40).
        assert!((t.total_twist - 2.0 * beta).abs() < 0.05 * (2.0 * beta).abs(), "{beta}: {}", t.total_twist);
        assert!(t.monotone && t.gaps.is_empty());
    }
    let flat = twist_metric(&meshes::half_plane_in_cylinder(6, 12), 40);
    assert!(flat.total_twist.abs() < 1e-12 && flat.angle_spread() < 1e-12);
}

#[test]
fn distance_profile_recovers_the_half_plane() {
    let n = 32;
    let h = 2.0 / (n - 1) as f64;
    // A sharp profile: the 1/2-level sits 2 w ln 2 < h from the crack.
    let w = h / 2.0;
    let phi = ScalarField::from_fn([n, n, n], Vec3::new(-1.0, -1.0, -1.0), h, |p| {
        let d = if p.x <= 0.0 { p.y.abs() } else { p.x.hypot(p.y) };
        1.0 - (-d / (2.0 * w)).exp()
    });
    let mid = postproc::extract_midsurface(&phi, postproc::DEFAULT_LEVEL).unwrap();
    let exact = meshes::half_plane_in_cylinder(16, 32);
    let trim = |m: &TriMesh| {
        TriMesh::new(
            m.triangles
                .iter()
                .filter(|t| t.vertices.iter().all(|v| v.x.hypot(v.y) <= 1.0))
                .copied()
                .collect(),
        )
    };
    let mid = trim(&mid);
    assert!(!mid.is_empty());
    let d = postproc::one_sided_distance(&mid, &exact);
    assert!(d <= h, "{d} vs h = {h}");
    // Conversely the exact set lies within one cell diameter of the
    // midsurface, whose quads join cell centroids and so stop short of the
    // tip; the lateral rim is left out because trimming removes whole triangles.
    let inner = TriMesh::new(
        exact.triangles.iter().filter(|t| t.vertices.iter().all(|v| v.x >= -1.0 + 2.0 * h)).copied().collect(),
    );
    let back = postproc::one_sided_distance(&inner, &mid);
    assert!(back <= 3f64.sqrt() * h, "{back} vs h = {h}");
    let iso = trim(&postproc::extract_surface(&phi, 0.5).unwrap());
    assert!(!iso.is_empty());
    let d = postproc::one_sided_distance(&iso, &exact);
    assert!(d <= h, "{d} vs h = {h}");
    assert!(hausdorff_distance(&exact, &exact) < 1e-12);
}

#[test]
fn straight_front_has_no_slice_outliers() {
    // With an even node count one slice level falls exactly on a plane of
    // cell centroids, where the midsurface has vertices.
    let n = 32;
    let h = 2.0 / (n - 1) as f64;
    let phi = ScalarField::from_fn([n, n, n], Vec3::new(-1.0, -1.0, -1.0), h, |p| {
        let d = if p.x <= 0.0 { p.y.abs() } else { p.x.hypot(p.y) };
        1.0 - (-d / h).exp()
    });
    let mid = postproc::extract_midsurface(&phi, postproc::DEFAULT_LEVEL).unwrap();
    let t = twist_metric(&mid, n - 1);
    assert_eq!(t.slices.len(), n - 1);
    assert!(t.angle_spread() < 1e-9, "{}", t.angle_spread());
    let len0 = t.slices[0].length;
    for s in &t.slices {
        assert!((s.length - len0).abs() < 1e-9, "z = {}: {} vs {len0}", s.z, s.length);
    }
}

#[test]
fn curved_front_has_no_flank_sheets() {
    // The tip recedes most at mid-height, so off the crack the field dips
    // gently towards z = 0 without any sheet there.
    let n = 32;
    let h = 2.0 / (n - 1) as f64;
    let phi = ScalarField::from_fn([n, n, n], Vec3::new(-1.0, -1.0, -1.0), h, |p| {
        let x = p.x + 0.4 - 0.3 * p.z * p.z;
        let d = if x <= 0.0 { p.y.abs() } else { x.hypot(p.y) };
        1.0 - (-d / (4.0 * h)).exp()
    });
    let mid = postproc::extract_midsurface(&phi, postproc::DEFAULT_LEVEL).unwrap();
    assert!(!mid.is_empty());
    let off = mid.triangles.iter().flat_map(|t| t.vertices).map(|v| v.y.abs()).fold(0.0, f64::max);
    assert!(off <= h, "vertex {off} off the crack plane, h = {h}");
}

#[test]
fn export_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let m = meshes::tilted_half_plane(0.3, 4, 6);
    let path = dir.path().join("m.vtk");
    export::write_vtk_surface(&m, &path).unwrap();
    assert_eq!(export::read_vtk_surface(&path).unwrap(), m);
    let t = twist_metric(&meshes::helicoid(0.4, 6, 20), 10);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    export::write_slices_csv(&t.slices, &a).unwrap();
    export::write_slices_csv(&twist_metric(&meshes::helicoid(0.4, 6, 20), 10).slices, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(export::read_vtk_surface(&dir.path().join("missing.vtk")).is_err());
}

fn udelta_field(n: usize, delta: f64) -> ScalarField {
    let h = 2.0 / (n - 1) as f64;
    let u = CracktipFunction::udelta(delta);
    ScalarField::from_fn([n, n, n], Vec3::new(-1.0, -1.0, -1.0), h, |p| {
        u.eval(&PolarPoint::new(p.x.hypot(p.y), p.y.atan2(p.x), p.z))
    })
}

#[test]
fn sdelta_bounds_on_candidates() {
    let delta = 0.5;
    let u = udelta_field(16, delta);
    let exact = sdelta_upper_bound(&u, &meshes::half_plane_in_cylinder(6, 12), delta).unwrap();
    assert!(exact.goodbound.abs() < 1e-10 && exact.ineq00.abs() < 1e-10, "{exact:?}");

    let alpha: f64 = 0.4;
    let tilted = meshes::tilted_half_plane(alpha, 6, 12);
    let b = sdelta_upper_bound(&u, &tilted, delta).unwrap();
    assert!((b.surface_term - (alpha.cos() - 1.0) * tilted.area()).abs() < 1e-10);
    assert!(b.goodbound <= b.ineq00 + 1e-12);

    // A candidate with the wrong slope.
    let other = udelta_field(16, 0.2);
    for mesh in [meshes::half_plane_in_cylinder(6, 12), tilted, meshes::helicoid(0.5, 6, 12)] {
        let b = sdelta_upper_bound(&other, &mesh, delta).unwrap();
        assert!(b.goodbound <= b.ineq00 + 1e-12, "{b:?}");
        assert!(b.ineq00 > 0.0);
    }
}
