//! Volume filtering by subgrid midpoint quadrature over the kernel support.
//!
//! Every output node uses the same set of quadrature offsets, so the kernel
//! weights form one fixed stencil. When the grid spacing is an integer
//! multiple of the subgrid spacing the quadrature points of all nodes fall on
//! one global fine lattice; integrands are then evaluated once per lattice
//! point (band by band) instead of once per node and offset.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CircleGeometry;
use crate::grid::{Grid, ScalarField, VectorField};
use crate::kernel::FilterKernel;

/// Smallest admissible `delta_f / dx_f`.
pub const MIN_SUBGRID_RATIO: f64 = 4.0;

const BAND_ROWS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Normalization {
    /// Weights `g(y) dx_f^2` with the analytic kernel constant.
    #[default]
    Analytic,
    /// Weights rescaled so the discrete stencil sums to exactly one.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgridQuadrature {
    /// `delta_f / dx_f`.
    pub ratio: f64,
    pub normalization: Normalization,
    /// Samples per direction used to resolve the indicator inside subgrid
    /// cells cut by the interface. `1` is the plain midpoint rule.
    pub cut_cell_samples: usize,
}

impl SubgridQuadrature {
    pub fn new(ratio: f64) -> Result<Self> {
        let q = Self {
            ratio,
            normalization: Normalization::Analytic,
            cut_cell_samples: 1,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_cut_cell_samples(mut self, n: usize) -> Self {
        self.cut_cell_samples = n.max(1);
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio >= MIN_SUBGRID_RATIO) || !self.ratio.is_finite() {
            return Err(Error::Config(format!(
                "delta_f_over_dxf = {} is below the quadrature floor of {MIN_SUBGRID_RATIO}",
                self.ratio
            )));
        }
        Ok(())
    }
}

/// One row of the weight stencil: offsets `k_lo..k_lo + weights.len()` at
/// row offset `l`.
#[derive(Debug, Clone)]
struct StencilRow {
    l: i64,
    k_lo: i64,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Stencil {
    /// Subgrid spacing.
    h: f64,
    /// Quadrature points sit at `(k + shift) h` relative to the node.
    shift: f64,
    rows: Vec<StencilRow>,
    k_min: i64,
    k_max: i64,
}

impl Stencil {
    fn build(kernel: &FilterKernel, h: f64, normalization: Normalization) -> Self {
        let radius = kernel.radius();
        let n = (kernel.delta_f / h).round() as i64;
        let shift = if n % 2 == 0 { 0.5 } else { 0.0 };
        let reach = (radius / h).ceil() as i64 + 1;
        let mut rows = Vec::new();
        let (mut k_min, mut k_max) = (i64::MAX, i64::MIN);
        let mut total = 0.0;
        for l in -reach..=reach {
            let y = (l as f64 + shift) * h;
            let mut k_lo = None;
            let mut weights = Vec::new();
            for k in -reach..=reach {
                let x = (k as f64 + shift) * h;
                let w = kernel.eval(x, y) * h * h;
                if w > 0.0 {
                    if k_lo.is_none() {
                        k_lo = Some(k);
                    }
                    weights.push(w);
                    total += w;
                } else if k_lo.is_some() {
                    break;
                }
            }
            if let Some(k_lo) = k_lo {
                k_min = k_min.min(k_lo);
                k_max = k_max.max(k_lo + weights.len() as i64 - 1);
                rows.push(StencilRow { l, k_lo, weights });
            }
        }
        if normalization == Normalization::Discrete && total > 0.0 {
            for row in &mut rows {
                row.weights.iter_mut().for_each(|w| *w /= total);
            }
        }
        Self {
            h,
            shift,
            rows,
            k_min,
            k_max,
        }
    }

    fn l_min(&self) -> i64 {
        self.rows.first().map_or(0, |r| r.l)
    }

    fn l_max(&self) -> i64 {
        self.rows.last().map_or(0, |r| r.l)
    }

    fn weight_sum(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.weights.iter()).sum()
    }

    fn len(&self) -> usize {
        self.rows.iter().map(|r| r.weights.len()).sum()
    }
}

/// Fraction of the subgrid cell centred at `(x, y)` lying in region 1.
#[inline]
fn cell_indicator(geom: &CircleGeometry, x: f64, y: f64, h: f64, samples: usize) -> f64 {
    let g = geom.level_set(x, y);
    let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
    if samples <= 1 || g > half_diag {
        return if g > 0.0 { 1.0 } else { 0.0 };
    }
    if g < -half_diag {
        return 0.0;
    }
    let step = h / samples as f64;
    let start = -0.5 * h + 0.5 * step;
    let mut inside = 0usize;
    for b in 0..samples {
        let yy = y + start + b as f64 * step;
        for a in 0..samples {
            let xx = x + start + a as f64 * step;
            if geom.level_set(xx, yy) > 0.0 {
                inside += 1;
            }
        }
    }
    inside as f64 / (samples * samples) as f64
}

/// Filtering engine bound to one grid, kernel and quadrature.
#[derive(Debug, Clone)]
pub struct FilterEngine {
    grid: Grid,
    kernel: FilterKernel,
    quad: SubgridQuadrature,
    stencil: Stencil,
    /// `dx / dx_f` when it is an integer.
    lattice_ratio: Option<usize>,
}

impl FilterEngine {
    pub fn new(grid: Grid, kernel: FilterKernel, quad: SubgridQuadrature) -> Result<Self> {
        quad.validate()?;
        let nominal_h = kernel.delta_f / quad.ratio;
        let m = grid.dx / nominal_h;
        let (h, lattice_ratio) = if (m - m.round()).abs() < 1e-6 && m.round() >= 1.0 {
            (grid.dx / m.round(), Some(m.round() as usize))
        } else {
            (nominal_h, None)
        };
        let stencil = Stencil::build(&kernel, h, quad.normalization);
        Ok(Self {
            grid,
            kernel,
            quad,
            stencil,
            lattice_ratio,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kernel(&self) -> &FilterKernel {
        &self.kernel
    }

    pub fn quadrature(&self) -> &SubgridQuadrature {
        &self.quad
    }

    /// Subgrid spacing actually used.
    pub fn subgrid_spacing(&self) -> f64 {
        self.stencil.h
    }

    /// Discrete sum of the quadrature weights (the numerical kernel integral).
    pub fn weight_sum(&self) -> f64 {
        self.stencil.weight_sum()
    }

    pub fn stencil_points(&self) -> usize {
        self.stencil.len()
    }

    pub fn uses_lattice(&self) -> bool {
        self.lattice_ratio.is_some()
    }

    /// Filters `K` integrands at once. Components with `weighted[c]` set are
    /// multiplied by the region-1 indicator of `geom` before filtering; the
    /// others are filtered over the whole plane.
    pub fn filter_fields<const K: usize, F>(
        &self,
        geom: Option<&CircleGeometry>,
        weighted: [bool; K],
        q: F,
    ) -> [ScalarField; K]
    where
        F: Fn(f64, f64) -> [f64; K] + Sync,
    {
        let samples = self.quad.cut_cell_samples;
        let h = self.stencil.h;
        let sample = |x: f64, y: f64| -> [f64; K] {
            let mut v = q(x, y);
            if let Some(geom) = geom {
                if weighted.iter().any(|&w| w) {
                    let ind = cell_indicator(geom, x, y, h, samples);
                    for c in 0..K {
                        if weighted[c] {
                            v[c] *= ind;
                        }
                    }
                }
            }
            v
        };
        let rows = match self.lattice_ratio {
            Some(m) => self.filter_on_lattice(m, &sample),
            None => self.filter_direct(&sample),
        };
        let grid = self.grid;
        std::array::from_fn(|c| ScalarField {
            grid,
            values: rows.iter().map(|v| v[c]).collect(),
        })
    }

    fn filter_direct<const K: usize>(
        &self,
        sample: &(impl Fn(f64, f64) -> [f64; K] + Sync),
    ) -> Vec<[f64; K]> {
        let grid = self.grid;
        let st = &self.stencil;
        let mut out = vec![[0.0; K]; grid.len()];
        out.par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(j, row)| {
                let y = grid.y(j);
                for (i, acc) in row.iter_mut().enumerate() {
                    let x = grid.x(i);
                    for r in &st.rows {
                        let yy = y + (r.l as f64 + st.shift) * st.h;
                        for (n, w) in r.weights.iter().enumerate() {
                            let xx = x + ((r.k_lo + n as i64) as f64 + st.shift) * st.h;
                            let v = sample(xx, yy);
                            for c in 0..K {
                                acc[c] += w * v[c];
                            }
                        }
                    }
                }
            });
        out
    }

    fn filter_on_lattice<const K: usize>(
        &self,
        m: usize,
        sample: &(impl Fn(f64, f64) -> [f64; K] + Sync),
    ) -> Vec<[f64; K]> {
        let grid = self.grid;
        let st = &self.stencil;
        let (k_min, k_max) = (st.k_min, st.k_max);
        let (l_min, l_max) = (st.l_min(), st.l_max());
        let width = (grid.nx - 1) * m + (k_max - k_min) as usize + 1;
        let x_of = |a: usize| grid.x0 + (a as f64 + k_min as f64 + st.shift) * st.h;
        let y_of = |b: usize| grid.y0 + (b as f64 + l_min as f64 + st.shift) * st.h;

        let bands: Vec<(usize, usize)> = (0..grid.ny)
            .step_by(BAND_ROWS)
            .map(|j0| (j0, (j0 + BAND_ROWS).min(grid.ny)))
            .collect();

        let results: Vec<Vec<[f64; K]>> = bands
            .par_iter()
            .map(|&(j0, j1)| {
                let b0 = j0 * m;
                let b1 = (j1 - 1) * m + (l_max - l_min) as usize + 1;
                let mut lattice = vec![[0.0; K]; (b1 - b0) * width];
                lattice
                    .chunks_mut(width)
                    .enumerate()
                    .for_each(|(rb, lrow)| {
                        let y = y_of(b0 + rb);
                        for (a, v) in lrow.iter_mut().enumerate() {
                            *v = sample(x_of(a), y);
                        }
                    });
                let mut out = vec![[0.0; K]; (j1 - j0) * grid.nx];
                for j in j0..j1 {
                    for i in 0..grid.nx {
                        let mut acc = [0.0; K];
                        for r in &st.rows {
                            let b = j * m + (r.l - l_min) as usize - b0;
                            let a = i * m + (r.k_lo - k_min) as usize;
                            let lrow = &lattice[b * width + a..b * width + a + r.weights.len()];
                            for (w, v) in r.weights.iter().zip(lrow) {
                                for c in 0..K {
                                    acc[c] += w * v[c];
                                }
                            }
                        }
                        out[(j - j0) * grid.nx + i] = acc;
                    }
                }
                out
            })
            .collect();
        results.into_iter().flatten().collect()
    }

    /// Indicator-weighted filter of a scalar point-wise function, `(alpha q-bar)`.
    pub fn filter_indicator_weighted(
        &self,
        geom: &CircleGeometry,
        q: impl Fn(f64, f64) -> f64 + Sync,
    ) -> ScalarField {
        let [f] = self.filter_fields(Some(geom), [true], |x, y| [q(x, y)]);
        f
    }

    pub fn filter_indicator_weighted_vector(
        &self,
        geom: &CircleGeometry,
        q: impl Fn(f64, f64) -> [f64; 2] + Sync,
    ) -> VectorField {
        let [x, y] = self.filter_fields(Some(geom), [true, true], q);
        VectorField { x, y }
    }

    /// Filter over the whole plane with no indicator.
    pub fn filter_full_space(&self, q: impl Fn(f64, f64) -> f64 + Sync) -> ScalarField {
        let [f] = self.filter_fields(None, [false], |x, y| [q(x, y)]);
        f
    }

    pub fn filter_full_space_vector(&self, q: impl Fn(f64, f64) -> [f64; 2] + Sync) -> VectorField {
        let [x, y] = self.filter_fields(None, [false, false], q);
        VectorField { x, y }
    }

    pub fn volume_fraction(&self, geom: &CircleGeometry) -> ScalarField {
        self.filter_indicator_weighted(geom, |_, _| 1.0)
    }
}

/// Second-order finite-difference gradient of the volume fraction.
pub fn grad_alpha(alpha: &ScalarField) -> VectorField {
    alpha.gradient()
}

/// Time-independent filtered fields from which every filtered reference
/// quantity of the exact solution is assembled.
///
/// With `u = sin(2 pi (G - t)) = sin(2 pi G) cos(2 pi t) - cos(2 pi G) sin(2 pi t)`
/// and filter linearity, `(alpha u-bar)(t) = cos(2 pi t) fs - sin(2 pi t) fc`.
#[derive(Debug, Clone)]
pub struct StaticFilteredFields {
    pub alpha: ScalarField,
    /// `filter_1(sin 2 pi G)`.
    pub fs: ScalarField,
    /// `filter_1(cos 2 pi G)`.
    pub fc: ScalarField,
    /// Full-space filter of `grad G`.
    pub grad_g_bar: VectorField,
    /// `filter_1(2 pi cos(2 pi G) grad G)`.
    pub w_cos: VectorField,
    /// `filter_1(2 pi sin(2 pi G) grad G)`.
    pub w_sin: VectorField,
}

impl StaticFilteredFields {
    pub fn compute(engine: &FilterEngine, geom: &CircleGeometry) -> Self {
        let two_pi = 2.0 * PI;
        let weighted = [true, true, true, true, true, true, true, false, false];
        let [alpha, fs, fc, wcx, wcy, wsx, wsy, gx, gy] =
            engine.filter_fields(Some(geom), weighted, |x, y| {
                let g = geom.level_set(x, y);
                let (n, _) = geom.grad_level_set(x, y);
                let (s, c) = (two_pi * g).sin_cos();
                let (s2, c2) = (two_pi * s, two_pi * c);
                [
                    1.0,
                    s,
                    c,
                    c2 * n[0],
                    c2 * n[1],
                    s2 * n[0],
                    s2 * n[1],
                    n[0],
                    n[1],
                ]
            });
        Self {
            alpha,
            fs,
            fc,
            grad_g_bar: VectorField { x: gx, y: gy },
            w_cos: VectorField { x: wcx, y: wcy },
            w_sin: VectorField { x: wsx, y: wsy },
        }
    }

    pub fn grid(&self) -> Grid {
        self.alpha.grid
    }

    /// Filtered exact solution `(alpha u-bar)_e` at time `t`.
    pub fn filtered_solution(&self, t: f64) -> ScalarField {
        let (s, c) = (2.0 * PI * t).sin_cos();
        self.fs.combine(c, &self.fc, -s)
    }

    /// Indicator-filtered exact gradient `alpha grad-u-bar` at time `t`.
    pub fn filtered_gradient(&self, t: f64) -> VectorField {
        let (s, c) = (2.0 * PI * t).sin_cos();
        VectorField {
            x: self.w_cos.x.combine(c, &self.w_sin.x, s),
            y: self.w_cos.y.combine(c, &self.w_sin.y, s),
        }
    }
}
