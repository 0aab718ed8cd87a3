//! The closed-form solution family and its energies.
//!
//! `phi0(r, theta) = C0 sqrt(r) sin(theta / 2)` with `C0 = sqrt(2 / pi)` is the
//! cracktip, `u_delta = phi0 + delta z` the crack-front family. Gradients are
//! returned in cartesian components:
//!
//! ```text
//! grad phi0 = C0 / (2 sqrt r) * (-sin(theta/2), cos(theta/2))
//! ```
//!
//! so `|grad phi0|^2 = C0^2 / (4 r)` does not depend on `theta`.

use std::f64::consts::{FRAC_2_PI, PI};

use crate::energy::{EnergyBreakdown, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{surface_measure, CrackGeometry, Domain, DomainKind, PolarPoint, Vec3};

/// Normalization of the cracktip, `sqrt(2 / pi)`.
pub fn cracktip_constant() -> f64 {
    FRAC_2_PI.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CracktipFunction {
    pub c0: f64,
    /// Axial slope; zero for the cracktip and the crack-front.
    pub delta: f64,
}

impl Default for CracktipFunction {
    fn default() -> Self {
        Self::cracktip()
    }
}

impl CracktipFunction {
    pub fn cracktip() -> Self {
        Self {
            c0: cracktip_constant(),
            delta: 0.0,
        }
    }

    pub fn crack_front() -> Self {
        Self::cracktip()
    }

    pub fn udelta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::cracktip()
        }
    }

    /// Multiplies the singular part, e.g. `scaled(2.0)` gives `2 phi0`.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            c0: self.c0 * factor,
            ..self
        }
    }

    pub fn eval(&self, p: &PolarPoint) -> f64 {
        self.c0 * p.r.sqrt() * (0.5 * p.theta).sin() + self.delta * p.z
    }

    /// `(d/dr, r^-1 d/dtheta)` of the singular part.
    pub fn polar_derivatives(&self, p: &PolarPoint) -> Result<(f64, f64)> {
        if p.r <= 0.0 {
            return Err(Error::CracktipSingularity);
        }
        let a = self.c0 / (2.0 * p.r.sqrt());
        let (s, c) = (0.5 * p.theta).sin_cos();
        Ok((a * s, a * c))
    }

    pub fn grad(&self, p: &PolarPoint) -> Result<Vec3> {
        if p.r <= 0.0 {
            return Err(Error::CracktipSingularity);
        }
        Ok(self.grad_unchecked(p.r, p.theta))
    }

    /// Gradient at `r > 0`; callers guarantee the excision of the tip.
    #[inline]
    pub(crate) fn grad_unchecked(&self, r: f64, theta: f64) -> Vec3 {
        let a = self.c0 / (2.0 * r.sqrt());
        let (s, c) = (0.5 * theta).sin_cos();
        Vec3::new(-a * s, a * c, self.delta)
    }

    pub fn grad_sq(&self, p: &PolarPoint) -> Result<f64> {
        Ok(self.grad(p)?.norm_squared())
    }

    /// Closed-form `J(u, K, D)` for domains centered on the tip or front.
    ///
    /// Disks and excised disks are 2D and need `delta = 0`; balls and
    /// cylinders pair with the half-plane `P0`.
    pub fn closed_form_energy(&self, domain: &Domain) -> Result<EnergyBreakdown> {
        if domain.center != Vec3::zeros() {
            return Err(Error::UnsupportedClosedForm(format!(
                "a domain centered at {:?}",
                domain.center.as_slice()
            )));
        }
        // Dirichlet energy of the singular part on a disk of radius R is C0^2 pi R / 2.
        let disk = |radius: f64| self.c0 * self.c0 * PI * radius / 2.0;
        let delta2 = self.delta * self.delta;
        let (dirichlet, crack) = match domain.kind {
            DomainKind::Disk { radius } => {
                self.require_planar()?;
                (disk(radius), CrackGeometry::HalfLine)
            }
            DomainKind::Excised { radius, hole } => {
                self.require_planar()?;
                (disk(radius) - disk(hole), CrackGeometry::HalfLine)
            }
            DomainKind::Ball { radius } => {
                // Slices at height z are disks of radius sqrt(R^2 - z^2), whose
                // integral over z is pi R^2 / 2.
                let singular = self.c0 * self.c0 * PI / 2.0 * (PI * radius * radius / 2.0);
                (singular + delta2 * domain.measure(), CrackGeometry::HalfPlane)
            }
            DomainKind::Cylinder {
                radius,
                half_height,
            } => (
                disk(radius) * 2.0 * half_height + delta2 * domain.measure(),
                CrackGeometry::HalfPlane,
            ),
        };
        let surface = surface_measure(&crack, domain)?.value;
        Ok(EnergyBreakdown::new(dirichlet, surface, Provenance::ClosedForm))
    }

    fn require_planar(&self) -> Result<()> {
        if self.delta != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "planar domains carry no axial slope, got delta = {}",
                self.delta
            )));
        }
        Ok(())
    }
}
