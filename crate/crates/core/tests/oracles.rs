//! Regression values checked against independent oracles written here.

use std::f64::consts::PI;

use crackfront::analytic::CracktipFunction;
use crackfront::atsolver::{self, ATConfig, BoundaryData, Grid, GridDomain, NodeKind};
use crackfront::competitors::{cut_ball_ledger, cut_ball_sign_change, cylinder_shell_ledger, drilled_sphere_ledger};
use crackfront::geometry::{surface_measure, CrackGeometry, Domain, PolarPoint, Vec3};
use crackfront::quadrature::richardson;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// Radical-inverse Halton sequence.
fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn ball_energy_against_shell_quadrature() {
    for &(delta, r) in &[(0.0, 1.0), (0.5, 2.0), (1.3, 0.7)] {
        let e = CracktipFunction::udelta(delta).closed_form_energy(&Domain::ball(r).unwrap()).unwrap();
        // |grad u0|^2 = 1 / (2 pi rho) over cylindrical shells of height 2 sqrt(R^2 - rho^2).
        let singular = simpson(&|rho| 2.0 * (r * r - rho * rho).max(0.0).sqrt(), 0.0, r, 1e-13);
        let axial = simpson(&|z| PI * (r * r - z * z), -r, r, 1e-13);
        let d = singular + delta * delta * axial;
        assert!(close(e.dirichlet, d, 1e-6), "{} vs {d}", e.dirichlet);
        // Half disk on the plane slice by quasi-Monte Carlo.
        let n = 200_000u64;
        let hits = (1..=n)
            .filter(|&i| {
                let (x, z) = (-r * halton(i, 2), r * (2.0 * halton(i, 3) - 1.0));
                x * x + z * z <= r * r
            })
            .count();
        let area = 2.0 * r * r * hits as f64 / n as f64;
        assert!(close(e.surface, area, 1e-3), "{} vs {area}", e.surface);
    }
}

#[test]
fn cylinder_pieces() {
    let e = CracktipFunction::crack_front().closed_form_energy(&Domain::unit_cylinder()).unwrap();
    let d = 2.0 * simpson(&|r| 2.0 * PI * r / (2.0 * PI * r.max(1e-300)), 0.0, 1.0, 1e-14);
    assert!(close(e.dirichlet, d, 1e-12));
    assert!(close(e.surface, 2.0, 1e-15));
    let p0 = surface_measure(&CrackGeometry::HalfPlane, &Domain::unit_cylinder()).unwrap();
    assert!(p0.exact && p0.value == 2.0);
}

#[test]
fn point_values_and_gradients() {
    let u = CracktipFunction::udelta(0.5);
    // sqrt(2/pi) sin(pi/4) + 0.5 * 2.
    let exact = (2.0 / PI).sqrt() * (PI / 4.0).sin() + 1.0;
    assert!((u.eval(&PolarPoint::new(1.0, PI / 2.0, 2.0)) - exact).abs() < 1e-15);
    let at = |x: f64, y: f64| u.eval(&PolarPoint::new(x.hypot(y), y.atan2(x), 0.0));
    let (r, t) = (0.3f64, 1.1f64);
    let (x, y) = (r * t.cos(), r * t.sin());
    let step = 1e-5;
    let fd = Vec3::new(
        (at(x + step, y) - at(x - step, y)) / (2.0 * step),
        (at(x, y + step) - at(x, y - step)) / (2.0 * step),
        0.5,
    );
    let g = u.grad(&PolarPoint::new(r, t, 0.0)).unwrap();
    assert!((g - fd).norm() <= 1e-6 * g.norm(), "{g:?} vs {fd:?}");
}

#[test]
fn cut_ball_margin_formula() {
    for &delta in &[0.0, 0.25, 0.5, 1.0, 2.0] {
        for &r in &[0.5, 1.0, 9.0, 36.0] {
            let l = cut_ball_ledger(delta, r).unwrap();
            let formula = 4.0 * PI * r * r - (PI * r * r + delta * delta * 4.0 / 3.0 * PI * r.powi(3));
            // At R = 9 / (4 delta^2) the two terms cancel; scale by the surface.
            assert!((l.margin - formula).abs() <= 1e-12 * 4.0 * PI * r * r, "{delta} {r}");
        }
    }
    assert_eq!(cut_ball_sign_change(0.5), 9.0);
    // Scan oracle: first winning radius on a fine grid.
    let first = (1..4000).map(|k| k as f64 * 0.005).find(|&r| cut_ball_ledger(0.5, r).unwrap().competitor_wins());
    assert!((first.unwrap() - 9.0).abs() <= 0.005 + 1e-12);
}

#[test]
fn cylinder_shell_margin_formula() {
    for &delta in &[0.0, 1.0, 1.6, 2.5] {
        for &eps in &[0.5, 0.1, 1e-3] {
            let a: f64 = 1.0 - eps;
            let l = cylinder_shell_ledger(delta, eps).unwrap();
            let inner_dirichlet = 2.0 * a * simpson(&|_| 1.0, 0.0, a, 1e-14) + delta * delta * 2.0 * PI * a.powi(3);
            let inner_surface = 2.0 * a * a;
            let oracle = 6.0 * PI * a * a - inner_dirichlet - inner_surface;
            assert!((l.margin - oracle).abs() < 1e-12 * oracle.abs().max(1.0), "{delta} {eps}");
            let lim = l.limit.unwrap().margin;
            assert!((lim - (6.0 * PI - 4.0 - 2.0 * PI * delta * delta)).abs() < 1e-12 * lim.abs().max(1.0));
        }
    }
    // 1.6^2 exceeds 3 - 2/pi: some finite eps wins.
    assert!((1..100).any(|k| cylinder_shell_ledger(1.6, k as f64 * 1e-3).unwrap().competitor_wins()));
    assert!(!(1..100).any(|k| cylinder_shell_ledger(1.5, k as f64 * 1e-3).unwrap().competitor_wins()));
}

/// Independent `grad(u psi)` for the drilled competitor.
fn drilled_integrand(delta: f64, radius: f64, eps: f64, p: Vec3) -> f64 {
    let y = Vec3::new(radius, 0.0, 0.0);
    let rho = (p - y).norm();
    if p.norm() > radius || rho > 2.0 * eps {
        return 0.0;
    }
    let c0 = (2.0 / PI).sqrt();
    let r = p.x.hypot(p.y);
    let t = p.y.atan2(p.x);
    let u = c0 * r.sqrt() * (t / 2.0).sin() + delta * p.z;
    let er = Vec3::new(t.cos(), t.sin(), 0.0);
    let et = Vec3::new(-t.sin(), t.cos(), 0.0);
    let g = c0 / (2.0 * r.sqrt()) * ((t / 2.0).sin() * er + (t / 2.0).cos() * et) + Vec3::new(0.0, 0.0, delta);
    let (psi, dpsi) = if rho <= eps { (1.0, 0.0) } else { ((2.0 * eps - rho) / eps, -1.0 / eps) };
    let dir = if rho > 0.0 { (p - y) / rho } else { Vec3::zeros() };
    (psi * g + u * dpsi * dir).norm_squared()
}

#[test]
fn drilled_lens_against_quasi_monte_carlo() {
    let (delta, radius) = (0.5, 12.0);
    for &eps in &[0.1, 0.05] {
        let l = drilled_sphere_ledger(delta, radius, eps).unwrap();
        let n = 400_000u64;
        let side = 4.0 * eps;
        let y = Vec3::new(radius, 0.0, 0.0);
        let sum: f64 = (1..=n)
            .map(|i| {
                let q = Vec3::new(halton(i, 2), halton(i, 3), halton(i, 5)) - Vec3::repeat(0.5);
                drilled_integrand(delta, radius, eps, y + side * q)
            })
            .sum();
        let qmc = sum / n as f64 * side.powi(3);
        assert!(close(l.competitor.dirichlet, qmc, 1e-2), "{} vs {qmc}", l.competitor.dirichlet);
        assert!(l.dirichlet_bound.unwrap() >= l.competitor.dirichlet);
        assert!(l.complement_connected);
        assert!(close(l.competitor.surface, 4.0 * PI * radius * radius - PI * eps * eps, 1e-15));
    }
}

#[test]
fn drilled_margins_extrapolate_to_the_cut_ball() {
    let (delta, radius) = (0.5, 12.0);
    let samples: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&e| (e, drilled_sphere_ledger(delta, radius, e).unwrap().margin))
        .collect();
    // Cap area is O(eps^2) and the cut-off energy O(eps^3).
    let limit = richardson(&samples, &[2.0, 3.0]);
    let cut = cut_ball_ledger(delta, radius).unwrap().margin;
    assert!((limit - cut).abs() < 1e-6 * cut.abs(), "{limit} vs {cut}");
    let d: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&e| drilled_sphere_ledger(delta, radius, e).unwrap().competitor.dirichlet)
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2] && d[2] < 1e-3);
}

/// Alternating minimization of the 1D AT energy with P1 elements, a
/// lumped well term and Thomas solves.
fn at_1d_oracle(n: usize, eps: f64, k: f64, u: &mut [f64], phi: &mut [f64]) -> f64 {
    let h = 2.0 / (n - 1) as f64;
    let mass = |i: usize| if i == 0 || i == n - 1 { h / 2.0 } else { h };
    let energy = |u: &[f64], phi: &[f64]| {
        let mut e = 0.0;
        for i in 0..n - 1 {
            let du = u[i + 1] - u[i];
            let dp = phi[i + 1] - phi[i];
            e += (k + 0.5 * (phi[i] * phi[i] + phi[i + 1] * phi[i + 1])) * du * du / h + eps * dp * dp / h;
        }
        e + (0..n).map(|i| mass(i) * (1.0 - phi[i]).powi(2) / (4.0 * eps)).sum::<f64>()
    };
    let thomas = |sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]| {
        let m = diag.len();
        let (mut c, mut d) = (vec![0.0; m], vec![0.0; m]);
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..m {
            let w = diag[i] - sub[i] * c[i - 1];
            c[i] = if i + 1 < m { sup[i] / w } else { 0.0 };
            d[i] = (rhs[i] - sub[i] * d[i - 1]) / w;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let mut prev = f64::INFINITY;
    for _ in 0..5000 {
        // u on the interior nodes, endpoints fixed.
        let coef: Vec<f64> = (0..n - 1).map(|i| (k + 0.5 * (phi[i] * phi[i] + phi[i + 1] * phi[i + 1])) / h).collect();
        let m = n - 2;
        let diag: Vec<f64> = (1..n - 1).map(|i| coef[i - 1] + coef[i]).collect();
        let sub: Vec<f64> = (1..n - 1).map(|i| -coef[i - 1]).collect();
        let sup: Vec<f64> = (1..n - 1).map(|i| -coef[i]).collect();
        let mut rhs = vec![0.0; m];
        rhs[0] += coef[0] * u[0];
        rhs[m - 1] += coef[n - 2] * u[n - 1];
        let inner = thomas(&sub, &diag, &sup, &rhs);
        u[1..n - 1].copy_from_slice(&inner);
        // phi on every node.
        let g: Vec<f64> = (0..n - 1).map(|i| (u[i + 1] - u[i]).powi(2) / h).collect();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = mass(i) / (4.0 * eps);
            diag[i] = rhs[i];
        }
        for i in 0..n - 1 {
            let s = eps / h;
            // Each cell weighs phi^2 at its two ends by one half.
            diag[i] += s + 0.5 * g[i];
            diag[i + 1] += s + 0.5 * g[i];
            sup[i] = -s;
            sub[i + 1] = -s;
        }
        let next = thomas(&sub, &diag, &sup, &rhs);
        phi.copy_from_slice(&next);
        let e = energy(u, phi);
        if prev - e <= 1e-12 * e {
            return e;
        }
        prev = e;
    }
    energy(u, phi)
}

#[test]
fn one_dimensional_jump_costs_one() {
    let eps = 0.02;
    let cfg = ATConfig {
        domain: GridDomain::Interval,
        eps,
        boundary: BoundaryData::Jump { left: 0.0, right: 1.0 },
        alt_tol: 1e-10,
        max_sweeps: 2000,
        cg_tol: 1e-12,
        ..ATConfig::default()
    }
    .with_spacing(eps / 10.0);
    let grid = Grid::new(cfg.domain, cfg.n).unwrap();
    // A symmetric flat start is a fixed point; start from the optimal profile.
    let profile = |x: f64| 1.0 - (-x.abs() / (2.0 * eps)).exp();
    let step = |x: f64| if x < 0.0 { 0.0 } else { 1.0 };
    let mut u = vec![0.0; grid.len()];
    let mut phi = vec![1.0; grid.len()];
    for i in 0..grid.len() {
        if grid.kind[i] != NodeKind::Exterior {
            let x = grid.point(i).x;
            u[i] = step(x);
            phi[i] = profile(x);
        }
    }
    let state = atsolver::solve_from(&cfg, u, phi).unwrap();
    let e = atsolver::at_energy(&state, &cfg);
    assert!((e.surface - 1.0).abs() < 0.05, "{e:?}");
    assert!(e.dirichlet < 0.01);

    let n = cfg.n;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * 2.0 / (n - 1) as f64).collect();
    let mut ou: Vec<f64> = xs.iter().map(|&x| step(x)).collect();
    let mut ophi: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
    let oracle = at_1d_oracle(n, eps, cfg.k_floor, &mut ou, &mut ophi);
    assert!(close(e.total, oracle, 1e-4), "{} vs {oracle}", e.total);
}
