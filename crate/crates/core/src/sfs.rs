//! Exact sub-filter scale term from the analytical solution.
//!
//! `tau = filter_1(grad G . grad u) - grad_G_bar . filter_1(grad u)`. Both
//! filtered factors are sinusoids in `t`, so `tau` is assembled from four
//! static fields.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filtering::{FilterEngine, StaticFilteredFields};
use crate::geometry::CircleGeometry;
use crate::grid::ScalarField;

#[derive(Debug, Clone)]
pub struct SfsFields {
    /// `filter_1(2 pi cos 2 pi G)`.
    pub s1: ScalarField,
    /// `filter_1(2 pi sin 2 pi G)`.
    pub s2: ScalarField,
    /// `grad_G_bar . filter_1(2 pi cos(2 pi G) grad G)`.
    pub v1: ScalarField,
    /// `grad_G_bar . filter_1(2 pi sin(2 pi G) grad G)`.
    pub v2: ScalarField,
}

impl SfsFields {
    pub fn from_static(fields: &StaticFilteredFields) -> Self {
        Self {
            s1: fields.fc.scaled(2.0 * PI),
            s2: fields.fs.scaled(2.0 * PI),
            v1: fields.grad_g_bar.dot(&fields.w_cos),
            v2: fields.grad_g_bar.dot(&fields.w_sin),
        }
    }

    /// Coefficient fields `(cos part, sin part)` with
    /// `tau(t) = cos(2 pi t) a + sin(2 pi t) b`.
    pub fn amplitudes(&self) -> (ScalarField, ScalarField) {
        (
            self.s1.combine(1.0, &self.v1, -1.0),
            self.s2.combine(1.0, &self.v2, -1.0),
        )
    }

    pub fn tau(&self, t: f64) -> ScalarField {
        let (s, c) = (2.0 * PI * t).sin_cos();
        let grid = self.s1.grid;
        let values = (0..grid.len())
            .map(|k| {
                c * (self.s1.values[k] - self.v1.values[k])
                    + s * (self.s2.values[k] - self.v2.values[k])
            })
            .collect();
        ScalarField { grid, values }
    }
}

pub fn precompute_sfs_fields(engine: &FilterEngine, geom: &CircleGeometry) -> SfsFields {
    SfsFields::from_static(&StaticFilteredFields::compute(engine, geom))
}

/// Norms of `tau` at one phase for one filter width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfsNorms {
    pub delta_f_over_d: f64,
    pub phase: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct SfsScalingTable {
    pub rows: Vec<SfsNorms>,
    /// `(phase, slope of L2, slope of Linf)` against `delta_f`.
    pub slopes: Vec<(f64, f64, f64)>,
}

impl SfsScalingTable {
    /// Assembles the table from per-width norms and fits log-log slopes per phase.
    pub fn from_rows(rows: Vec<SfsNorms>, phases: &[f64]) -> Result<Self> {
        let mut slopes = Vec::new();
        for &phase in phases {
            let sel: Vec<_> = rows.iter().filter(|r| r.phase == phase).collect();
            if sel.len() < 3 {
                return Err(Error::Fit(format!(
                    "scaling study needs at least 3 filter widths, got {}",
                    sel.len()
                )));
            }
            let knobs: Vec<f64> = sel.iter().map(|r| r.delta_f_over_d).collect();
            let l2: Vec<f64> = sel.iter().map(|r| r.l2).collect();
            let linf: Vec<f64> = sel.iter().map(|r| r.linf).collect();
            let s2 = crate::analysis::fit_order(&knobs, &l2)?.slope;
            let sinf = crate::analysis::fit_order(&knobs, &linf)?.slope;
            slopes.push((phase, s2, sinf));
        }
        Ok(Self { rows, slopes })
    }

    /// CSV with columns `delta_f_over_D,norm_type,phase,value,slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_f_over_D,norm_type,phase,value,slope\n");
        for r in &self.rows {
            let (s2, sinf) = self
                .slopes
                .iter()
                .find(|s| s.0 == r.phase)
                .map(|s| (s.1, s.2))
                .unwrap_or((f64::NAN, f64::NAN));
            out.push_str(&format!(
                "{:.16e},L2,{:.16e},{:.16e},{:.16e}\n",
                r.delta_f_over_d, r.phase, r.l2, s2
            ));
            out.push_str(&format!(
                "{:.16e},Linf,{:.16e},{:.16e},{:.16e}\n",
                r.delta_f_over_d, r.phase, r.linf, sinf
            ));
        }
        out
    }
}
