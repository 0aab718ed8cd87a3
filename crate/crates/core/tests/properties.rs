use std::f64::consts::PI;

use crackfront::analytic::CracktipFunction;
use crackfront::atsolver::{self, ATConfig, GridDomain};
use crackfront::geometry::{surface_measure, to_polar, CrackGeometry, Domain, Side, Vec3};
use crackfront::stationarity::{el_residual, AnalyticCouple, QuadratureSettings, TestVectorField};
use proptest::prelude::*;

fn coarse() -> QuadratureSettings {
    QuadratureSettings {
        order: 8,
        radial_panels: 6,
        angular_panels: 12,
        axial_panels: 6,
        // Properties hold for any rule; accuracy is not under test here.
        tolerance: f64::INFINITY,
        ..QuadratureSettings::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polar_round_trip(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -3.0f64..3.0) {
        prop_assume!(x.hypot(y) > 1e-9);
        let p = Vec3::new(x, y, z);
        let q = to_polar(&p, Some(Side::Above)).unwrap();
        prop_assert!(q.theta > -PI && q.theta <= PI);
        prop_assert!((q.to_cartesian() - p).norm() < 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn measure_is_additive_along_the_axis(h1 in 0.1f64..2.0, h2 in 0.1f64..2.0, r in 0.2f64..3.0) {
        // Stacked cylinders cut P0 in rectangles whose areas add.
        let a = surface_measure(&CrackGeometry::HalfPlane, &Domain::cylinder(r, h1).unwrap()).unwrap().value;
        let b = surface_measure(&CrackGeometry::HalfPlane, &Domain::cylinder(r, h2).unwrap()).unwrap().value;
        let ab = surface_measure(&CrackGeometry::HalfPlane, &Domain::cylinder(r, h1 + h2).unwrap()).unwrap().value;
        prop_assert!((a + b - ab).abs() < 1e-12 * ab);
    }

    #[test]
    fn measure_is_monotone_in_the_radius(r1 in 0.1f64..3.0, dr in 0.0f64..2.0, cx in -2.0f64..2.0, cy in -2.0f64..2.0) {
        let c = Vec3::new(cx, cy, 0.0);
        let m = |r: f64| {
            let d = Domain::disk(r).unwrap().with_center(c);
            surface_measure(&CrackGeometry::HalfLine, &d).unwrap().value
        };
        prop_assert!(m(r1) <= m(r1 + dr) + 1e-15);
        let b = |r: f64| {
            let d = Domain::ball(r).unwrap().with_center(c);
            surface_measure(&CrackGeometry::HalfPlane, &d).unwrap().value
        };
        prop_assert!(b(r1) <= b(r1 + dr) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn residual_is_linear_in_the_field(s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // A non-stationary couple, so the residual is not trivially zero.
        let couple = AnalyticCouple::Cracktip(CracktipFunction::cracktip().scaled(2.0));
        let (f, g) = (TestVectorField::random(2, s1), TestVectorField::random(2, s2));
        // The combined field spans a larger box, so the nodes differ and the
        // identity holds up to the quadrature error bars.
        let s = QuadratureSettings { tolerance: f64::INFINITY, ..QuadratureSettings::default() };
        let rf = el_residual(&couple, &f, &s).unwrap();
        let rg = el_residual(&couple, &g, &s).unwrap();
        let rc = el_residual(&couple, &f.combine(a, &g, b), &s).unwrap();
        let bar = rc.quadrature_error_estimate + a.abs() * rf.quadrature_error_estimate + b.abs() * rg.quadrature_error_estimate;
        let gap = (rc.total - a * rf.total - b * rg.total).abs();
        prop_assert!(gap <= 10.0 * bar + 1e-9, "gap {gap:e}, error bar {bar:e}");
        prop_assert!(gap < 1e-4 * (1.0 + (a * rf.total).abs() + (b * rg.total).abs()));
    }

    #[test]
    fn residual_is_covariant_under_axial_translation(seed in 0u64..1000, dz in -3.0f64..3.0, delta in -1.0f64..1.0) {
        // u_delta - delta z and P0 are invariant along e3, so shifting the
        // field in z leaves the residual unchanged.
        let couple = AnalyticCouple::CrackFront(CracktipFunction::udelta(delta).scaled(1.5));
        let f = TestVectorField::random(3, seed);
        let s = coarse();
        let r0 = el_residual(&couple, &f, &s).unwrap();
        let r1 = el_residual(&couple, &f.translated(Vec3::new(0.0, 0.0, dz)), &s).unwrap();
        prop_assert!((r0.total - r1.total).abs() < 1e-7 * (1.0 + r0.total.abs()), "{} vs {}", r0.total, r1.total);
    }

    #[test]
    fn alternating_minimization_descends(n in 6usize..11, ratio in 2.0f64..3.5, delta in -1.0f64..1.0, noise in 0.0f64..0.3, seed in 0u64..100) {
        let n = 2 * n;
        let mut cfg = ATConfig {
            domain: GridDomain::Disk,
            n,
            delta,
            init_noise: noise,
            seed,
            max_sweeps: 25,
            ..ATConfig::default()
        };
        cfg.eps = ratio * cfg.h();
        let s = atsolver::solve(&cfg).unwrap();
        for w in s.half_step_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{w:?}");
        }
        for w in s.energy_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{w:?}");
        }
        let (lo, hi) = s.phi_field().min_max();
        prop_assert!(lo >= 0.0 && hi <= 1.0);
    }
}
