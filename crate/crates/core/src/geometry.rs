//! Sphere-sphere and plane-sphere geometry.

use crate::{Error, Result};

/// Two spheres of radii `r1`, `r2` separated by a surface-to-surface gap `l`;
/// `r2 = ∞` describes the plane-sphere setup.
///
/// The center-to-center distance along the symmetry axis is `script_l`; for
/// the plane-sphere case the plane's reference point lies on its surface, so
/// the translation length is `l + r1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    r1: f64,
    r2: f64,
    gap: f64,
}

impl Geometry {
    pub fn sphere_sphere(r1: f64, r2: f64, gap: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1.is_finite()) {
            return Err(Error::domain(format!("sphere radius r1 must be positive and finite, got {r1}")));
        }
        if !(r2 > 0.0) {
            return Err(Error::domain(format!("sphere radius r2 must be positive, got {r2}")));
        }
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::domain(format!("gap must be positive and finite, got {gap}")));
        }
        Ok(Self { r1, r2, gap })
    }

    pub fn plane_sphere(r1: f64, gap: f64) -> Result<Self> {
        Self::sphere_sphere(r1, f64::INFINITY, gap)
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    /// Radius of the second object; infinite for a plane.
    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn is_plane_sphere(&self) -> bool {
        self.r2.is_infinite()
    }

    /// Center-to-center translation length: L + R1 + R2, or L + R1 when the
    /// second object is a plane referenced at its surface.
    pub fn script_l(&self) -> f64 {
        if self.is_plane_sphere() {
            self.gap + self.r1
        } else {
            self.gap + self.r1 + self.r2
        }
    }

    /// Effective radius R1·R2/(R1+R2); equals R1 in the plane-sphere limit.
    pub fn r_eff(&self) -> f64 {
        if self.is_plane_sphere() {
            self.r1
        } else {
            self.r1 * self.r2 / (self.r1 + self.r2)
        }
    }

    /// Radius asymmetry μ = R_min/(R1+R2) ∈ [0, 1/2]; zero for plane-sphere.
    pub fn mu(&self) -> f64 {
        if self.is_plane_sphere() {
            0.0
        } else {
            self.r1.min(self.r2) / (self.r1 + self.r2)
        }
    }
}
