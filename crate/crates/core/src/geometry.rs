//! Circular embedded interface: level set, indicator and the exact
//! radiating-pulse solution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular domain `[-lx/2, lx/2] x [-ly/2, ly/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { lx: 2.0, ly: 2.0 }
    }
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(Error::Config(format!(
                "domain extents must be positive (lx = {}, ly = {})",
                self.lx, self.ly
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleGeometry {
    pub xc: f64,
    pub yc: f64,
    pub r: f64,
}

impl Default for CircleGeometry {
    fn default() -> Self {
        Self {
            xc: 0.0,
            yc: 0.0,
            r: 0.2,
        }
    }
}

impl CircleGeometry {
    pub fn new(xc: f64, yc: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Config(format!(
                "circle radius must be positive, got {r}"
            )));
        }
        Ok(Self { xc, yc, r })
    }

    /// Checks that the circle plus a `halo` band fits strictly inside the domain.
    pub fn check_fits(&self, domain: &DomainSpec, halo: f64) -> Result<()> {
        let reach = self.r + halo;
        let ok = self.xc - reach > -domain.lx / 2.0
            && self.xc + reach < domain.lx / 2.0
            && self.yc - reach > -domain.ly / 2.0
            && self.yc + reach < domain.ly / 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "circle at ({}, {}) with radius {} and halo {} does not fit in {} x {} domain",
                self.xc, self.yc, self.r, halo, domain.lx, domain.ly
            )))
        }
    }

    /// Signed distance to the circle, negative inside.
    #[inline]
    pub fn level_set(&self, x: f64, y: f64) -> f64 {
        (x - self.xc).hypot(y - self.yc) - self.r
    }

    /// Unit gradient of the level set. The center is singular; there the
    /// zero vector is returned with the flag set to `false`.
    #[inline]
    pub fn grad_level_set(&self, x: f64, y: f64) -> ([f64; 2], bool) {
        let dx = x - self.xc;
        let dy = y - self.yc;
        let d = dx.hypot(dy);
        if d == 0.0 {
            ([0.0, 0.0], false)
        } else {
            ([dx / d, dy / d], true)
        }
    }

    /// Region-1 indicator. Points on the interface belong to region 2.
    #[inline]
    pub fn indicator(&self, x: f64, y: f64) -> f64 {
        if self.level_set(x, y) > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn exact_solution(&self, x: f64, y: f64, t: f64) -> f64 {
        (2.0 * PI * (self.level_set(x, y) - t)).sin()
    }

    /// Gradient of the exact solution, `2 pi cos(2 pi (G - t)) grad G`.
    pub fn exact_gradient(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (n, _) = self.grad_level_set(x, y);
        let c = 2.0 * PI * (2.0 * PI * (self.level_set(x, y) - t)).cos();
        [c * n[0], c * n[1]]
    }

    /// `grad G . grad u` for the exact solution, using `|grad G| = 1`.
    #[inline]
    pub fn exact_advective_derivative(&self, x: f64, y: f64, t: f64) -> f64 {
        2.0 * PI * (2.0 * PI * (self.level_set(x, y) - t)).cos()
    }
}

/// Prescribed interface value `u_I(t) = -sin(2 pi t)`.
#[inline]
pub fn boundary_signal(t: f64) -> f64 {
    -(2.0 * PI * t).sin()
}
