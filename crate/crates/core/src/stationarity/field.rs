//! Compactly supported test vector fields with closed-form Jacobians.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Radial profile of a bump term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `exp(1 - 1 / (1 - s^2))` for `s < 1`, zero beyond; equals 1 at the center.
    Compact,
    /// `exp(-s^2)`; never vanishes, kept as a negative control for support checks.
    Gaussian,
}

impl Profile {
    /// `(b(s), b'(s) / s)`; the second factor stays finite at `s = 0`.
    fn eval(self, s2: f64) -> (f64, f64) {
        match self {
            Profile::Compact => {
                if s2 >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - s2;
                let b = (1.0 - 1.0 / q).exp();
                (b, -2.0 * b / (q * q))
            }
            Profile::Gaussian => {
                let b = (-s2).exp();
                (b, -2.0 * b)
            }
        }
    }
}

/// `eta^k(x) = (a_k + g_k . (x - c)) b(|x - c| / rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpTerm {
    pub center: Vec3,
    pub radius: f64,
    pub constant: Vec3,
    pub slope: [Vec3; 3],
    pub profile: Profile,
}

impl BumpTerm {
    fn offset(&self, x: &Vec3, dim: usize) -> Vec3 {
        let mut d = x - self.center;
        if dim == 2 {
            d.z = 0.0;
        }
        d
    }

    fn value(&self, x: &Vec3, dim: usize) -> Vec3 {
        let d = self.offset(x, dim);
        let (b, _) = self.profile.eval(d.norm_squared() / (self.radius * self.radius));
        if b == 0.0 {
            return Vec3::zeros();
        }
        Vec3::from_fn(|k, _| (self.constant[k] + self.slope[k].dot(&d)) * b)
    }

    /// Row `k` is `grad eta^k`.
    fn jacobian(&self, x: &Vec3, dim: usize) -> Matrix3<f64> {
        let d = self.offset(x, dim);
        let rho2 = self.radius * self.radius;
        let (b, db_over_s) = self.profile.eval(d.norm_squared() / rho2);
        if b == 0.0 {
            return Matrix3::zeros();
        }
        // grad b(|d|/rho) = b'(s)/s * d / rho^2
        let grad_b = d * (db_over_s / rho2);
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let p = self.constant[k] + self.slope[k].dot(&d);
            let mut row = self.slope[k] * b + grad_b * p;
            if dim == 2 {
                row.z = 0.0;
            }
            jac.set_row(k, &row.transpose());
        }
        jac
    }
}

/// A finite sum of bump terms in 2 or 3 dimensions.
///
/// In 2D the third component and the `z` coordinate are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct TestVectorField {
    pub dim: usize,
    pub terms: Vec<BumpTerm>,
    pub seed: Option<u64>,
}

impl TestVectorField {
    /// Single bump centered at the origin with prescribed `eta(0)`.
    pub fn with_value_at_origin(dim: usize, value: Vec3, radius: f64) -> Self {
        Self::single(dim, Vec3::zeros(), radius, value, [Vec3::zeros(); 3])
    }

    /// The deterministic field with `eta(0) = e1`.
    pub fn unit_e1(dim: usize) -> Self {
        Self::with_value_at_origin(dim, Vec3::x(), 1.0)
    }

    pub fn single(dim: usize, center: Vec3, radius: f64, constant: Vec3, slope: [Vec3; 3]) -> Self {
        assert!(dim == 2 || dim == 3, "test fields live in 2D or 3D");
        let mut center = center;
        let mut constant = constant;
        let mut slope = slope;
        if dim == 2 {
            center.z = 0.0;
            constant.z = 0.0;
            slope[2] = Vec3::zeros();
            for s in &mut slope {
                s.z = 0.0;
            }
        }
        Self {
            dim,
            terms: vec![BumpTerm {
                center,
                radius,
                constant,
                slope,
                profile: Profile::Compact,
            }],
            seed: None,
        }
    }

    /// Random bump whose support always contains the origin.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = rng.gen_range(0.7..1.3);
        let a = rng.gen_range(0.0..2.0 * PI);
        let reach = rng.gen_range(0.0..0.35) * radius;
        let mut center = Vec3::new(reach * a.cos(), reach * a.sin(), 0.0);
        if dim == 3 {
            center.z = rng.gen_range(-0.3..0.3);
        }
        let mut unit = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let constant = unit();
        let slope = [unit(), unit(), unit()];
        let mut field = Self::single(dim, center, radius, constant, slope);
        field.seed = Some(seed);
        field
    }

    /// `n` random fields derived from `seed`, preceded by [`Self::unit_e1`].
    pub fn family(dim: usize, n: usize, seed: u64) -> Vec<Self> {
        std::iter::once(Self::unit_e1(dim))
            .chain((0..n as u64).map(|k| Self::random(dim, seed.wrapping_mul(1_000_003).wrapping_add(k))))
            .collect()
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        for t in &mut self.terms {
            t.profile = profile;
        }
        self
    }

    pub fn translated(&self, shift: Vec3) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.center += shift;
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.constant *= factor;
            for s in &mut t.slope {
                *s *= factor;
            }
        }
        out
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.dim, other.dim, "cannot combine fields of different dimension");
        let mut terms = self.scaled(a).terms;
        terms.extend(other.scaled(b).terms);
        Self {
            dim: self.dim,
            terms,
            seed: None,
        }
    }

    pub fn value(&self, x: &Vec3) -> Vec3 {
        self.terms.iter().map(|t| t.value(x, self.dim)).sum()
    }

    pub fn jacobian(&self, x: &Vec3) -> Matrix3<f64> {
        self.terms
            .iter()
            .fold(Matrix3::zeros(), |acc, t| acc + t.jacobian(x, self.dim))
    }

    pub fn divergence(&self, x: &Vec3) -> f64 {
        self.jacobian(x).trace()
    }

    /// Largest distance from the origin reached by the support, in the plane
    /// (2D) or space (3D).
    pub fn reach(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.center.norm() + t.radius)
            .fold(0.0, f64::max)
    }

    /// Planar `(r_min, r_max)` of the support measured from the `z` axis.
    pub fn radial_range(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::INFINITY, 0.0), |(lo, hi), t| {
            let c = t.center.x.hypot(t.center.y);
            ((c - t.radius).max(0.0).min(lo), hi.max(c + t.radius))
        })
    }

    /// Angular window `(lo, hi)` within `[-pi, pi]` covering the support.
    pub fn angular_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in &self.terms {
            let c = t.center.x.hypot(t.center.y);
            if c <= t.radius {
                return (-PI, PI);
            }
            let mid = t.center.y.atan2(t.center.x);
            let half = (t.radius / c).asin();
            if mid - half < -PI || mid + half > PI {
                return (-PI, PI);
            }
            lo = lo.min(mid - half);
            hi = hi.max(mid + half);
        }
        (lo, hi)
    }

    pub fn z_range(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t.center.z - t.radius), hi.max(t.center.z + t.radius))
        })
    }

    /// `sup |eta| + sup |D eta|` (Frobenius) sampled on a lattice over the support box.
    pub fn c1_norm(&self) -> f64 {
        let n: usize = if self.dim == 2 { 161 } else { 41 };
        let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
        for t in &self.terms {
            lo = lo.inf(&(t.center - Vec3::repeat(t.radius)));
            hi = hi.sup(&(t.center + Vec3::repeat(t.radius)));
        }
        let nz = if self.dim == 2 { 1 } else { n };
        let coord = |k: usize, i: usize, m: usize| {
            if m == 1 {
                0.0
            } else {
                lo[k] + (hi[k] - lo[k]) * i as f64 / (m - 1) as f64
            }
        };
        let (mut sup_v, mut sup_j) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..nz {
                    let x = Vec3::new(coord(0, i, n), coord(1, j, n), coord(2, k, nz));
                    sup_v = sup_v.max(self.value(&x).norm());
                    sup_j = sup_j.max(self.jacobian(&x).norm());
                }
            }
        }
        // The lattice may miss the peak of |eta| at a bump center.
        for t in &self.terms {
            sup_v = sup_v.max(self.value(&t.center).norm());
        }
        sup_v + sup_j
    }

    /// Samples every term on its support shell; any nonzero value is an error.
    pub fn check_compact_support(&self) -> Result<()> {
        let n = 24;
        let mut worst = 0.0f64;
        for t in &self.terms {
            let rho = t.radius * (1.0 + 1e-9);
            for i in 0..n {
                let a = 2.0 * PI * i as f64 / n as f64;
                let polar_steps = if self.dim == 2 { 1 } else { n / 2 };
                for j in 0..polar_steps {
                    let b = if self.dim == 2 { 0.5 * PI } else { PI * (j as f64 + 0.5) / polar_steps as f64 };
                    let dir = Vec3::new(a.cos() * b.sin(), a.sin() * b.sin(), b.cos());
                    let x = t.center + rho * dir;
                    worst = worst.max(t.value(&x, self.dim).norm());
                }
            }
        }
        if worst > 0.0 {
            return Err(Error::NotCompactlySupported { value: worst });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(f: &TestVectorField, x: &Vec3, h: f64) -> Matrix3<f64> {
        let mut j = Matrix3::zeros();
        for c in 0..f.dim {
            let mut e = Vec3::zeros();
            e[c] = h;
            let d = (f.value(&(x + e)) - f.value(&(x - e))) / (2.0 * h);
            for k in 0..3 {
                j[(k, c)] = d[k];
            }
        }
        j
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for dim in [2, 3] {
            for seed in 0..6 {
                let f = TestVectorField::random(dim, seed);
                for x in [Vec3::new(0.1, -0.2, 0.05), Vec3::new(-0.4, 0.3, -0.1), Vec3::new(0.5, 0.5, 0.2)] {
                    let err = (f.jacobian(&x) - fd_jacobian(&f, &x, 1e-5)).amax();
                    assert!(err < 1e-8, "dim {dim} seed {seed}: {err}");
                }
            }
        }
    }

    #[test]
    fn prescribed_value_at_origin() {
        let f = TestVectorField::with_value_at_origin(2, Vec3::new(0.3, -2.0, 0.0), 0.8);
        assert_eq!(f.value(&Vec3::zeros()), Vec3::new(0.3, -2.0, 0.0));
        assert_eq!(TestVectorField::unit_e1(3).value(&Vec3::zeros()), Vec3::x());
    }

    #[test]
    fn support_vanishes_outside() {
        let f = TestVectorField::random(3, 11);
        f.check_compact_support().unwrap();
        let t = &f.terms[0];
        let x = t.center + Vec3::new(t.radius * 1.01, 0.0, 0.0);
        assert_eq!(f.value(&x), Vec3::zeros());
        assert_eq!(f.jacobian(&x), Matrix3::zeros());
        let g = f.with_profile(Profile::Gaussian);
        assert!(matches!(g.check_compact_support(), Err(Error::NotCompactlySupported { .. })));
    }

    #[test]
    fn random_support_contains_origin_and_is_reproducible() {
        for seed in 0..20 {
            let f = TestVectorField::random(2, seed);
            assert!(f.terms[0].center.norm() < f.terms[0].radius);
            assert_eq!(f, TestVectorField::random(2, seed));
        }
        let fam = TestVectorField::family(3, 5, 42);
        assert_eq!(fam.len(), 6);
        assert_eq!(fam[0], TestVectorField::unit_e1(3));
    }

    #[test]
    fn windows() {
        let f = TestVectorField::single(2, Vec3::new(2.0, 0.0, 0.0), 0.5, Vec3::x(), [Vec3::zeros(); 3]);
        let (lo, hi) = f.angular_range();
        assert!((hi - (0.25f64).asin()).abs() < 1e-15 && (lo + hi).abs() < 1e-15);
        assert_eq!(f.radial_range(), (1.5, 2.5));
        let g = f.translated(Vec3::new(-4.0, 0.0, 0.0));
        assert_eq!(g.angular_range(), (-PI, PI));
    }
}
