//! Compact, radially symmetric, unit-integral filter kernel.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial profile of the kernel as a function of `s = 2|y| / delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Profile {
    /// Wendland C2: `(1 - s)^4 (1 + 4 s)`.
    #[default]
    WendlandC2,
}

impl Profile {
    #[inline]
    pub fn shape(self, s: f64) -> f64 {
        match self {
            Profile::WendlandC2 => {
                if s >= 1.0 {
                    0.0
                } else {
                    let a = 1.0 - s;
                    let a2 = a * a;
                    a2 * a2 * (1.0 + 4.0 * s)
                }
            }
        }
    }

    /// Dimensionless constant `c0` with `g = c0 / delta_f^2 * shape(s)`
    /// integrating to one over the plane.
    ///
    /// For Wendland C2, `int_0^1 shape(s) s ds = 1/14`, so with
    /// `h = delta_f / 2` the constant is `7 / (pi h^2) = 28 / (pi delta_f^2)`.
    pub fn shape_constant(self) -> f64 {
        match self {
            Profile::WendlandC2 => WENDLAND_C2_SHAPE_CONSTANT,
        }
    }
}

pub const WENDLAND_C2_SHAPE_CONSTANT: f64 = 28.0 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    /// Support diameter.
    pub delta_f: f64,
    pub profile: Profile,
    norm: f64,
}

impl FilterKernel {
    pub fn new(delta_f: f64) -> Result<Self> {
        Self::with_profile(delta_f, Profile::default())
    }

    pub fn with_profile(delta_f: f64, profile: Profile) -> Result<Self> {
        if !(delta_f > 0.0 && delta_f.is_finite()) {
            return Err(Error::Config(format!(
                "filter width must be positive, got {delta_f}"
            )));
        }
        Ok(Self {
            delta_f,
            profile,
            norm: kernel_normalization(delta_f, profile),
        })
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        0.5 * self.delta_f
    }

    #[inline]
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    #[inline]
    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        let s = 2.0 * (dx * dx + dy * dy).sqrt() / self.delta_f;
        self.norm * self.profile.shape(s)
    }

    /// Smallest inclusive node-index box containing every node within the
    /// kernel radius of `center`, clipped to `[0, nx) x [0, ny)`. `None` when
    /// the box is empty.
    pub fn support_cells(
        &self,
        center: (f64, f64),
        origin: (f64, f64),
        spacing: f64,
        dims: (usize, usize),
    ) -> Option<(RangeInclusive<usize>, RangeInclusive<usize>)> {
        let rx = axis_range(center.0 - origin.0, self.radius(), spacing, dims.0)?;
        let ry = axis_range(center.1 - origin.1, self.radius(), spacing, dims.1)?;
        Some((rx, ry))
    }
}

fn axis_range(c: f64, radius: f64, h: f64, n: usize) -> Option<RangeInclusive<usize>> {
    const EPS: f64 = 1e-9;
    let lo = ((c - radius) / h - EPS).ceil().max(0.0);
    let hi = ((c + radius) / h + EPS).floor().min(n as f64 - 1.0);
    if hi < lo {
        None
    } else {
        Some(lo as usize..=hi as usize)
    }
}

/// Normalization `C = c0 / delta_f^2` of the kernel profile.
pub fn kernel_normalization(delta_f: f64, profile: Profile) -> f64 {
    profile.shape_constant() / (delta_f * delta_f)
}
