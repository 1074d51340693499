//! Uniform node-centred Cartesian grids and the fields that live on them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Node spacing, identical in both directions.
    pub dx: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(dx > 0.0) {
            return Err(Error::Config(format!(
                "invalid grid {nx} x {ny} with spacing {dx}"
            )));
        }
        Ok(Self { nx, ny, dx, x0, y0 })
    }

    /// Grid covering the domain with spacing as close to `target_dx` as an
    /// integer number of cells allows.
    pub fn for_domain(domain: &DomainSpec, target_dx: f64) -> Result<Self> {
        domain.validate()?;
        if !(target_dx > 0.0) {
            return Err(Error::Config(format!(
                "grid spacing must be positive, got {target_dx}"
            )));
        }
        let cells_x = (domain.lx / target_dx).round().max(1.0) as usize;
        let dx = domain.lx / cells_x as f64;
        let cells_y = (domain.ly / dx).round().max(1.0) as usize;
        Self::new(
            cells_x + 1,
            cells_y + 1,
            dx,
            -domain.lx / 2.0,
            -(cells_y as f64) * dx / 2.0,
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dx
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn lx(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    pub fn ly(&self) -> f64 {
        (self.ny - 1) as f64 * self.dx
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.x0 - other.x0).abs() <= 1e-12
            && (self.y0 - other.y0).abs() <= 1e-12
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} (dx {}) vs {}x{} (dx {})",
                self.nx, self.ny, self.dx, other.nx, other.ny, other.dx
            )))
        }
    }
}

/// Scalar samples at every grid node, stored row-major (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(j, row)| {
                let y = grid.y(j);
                for (i, v) in row.iter_mut().enumerate() {
                    *v = f(grid.x(i), y);
                }
            });
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Area-weighted L2 norm `sqrt(sum v^2 dx^2)`. Rows are reduced in
    /// parallel and combined in a fixed order so the result does not depend
    /// on the thread count.
    pub fn l2(&self) -> f64 {
        let rows: Vec<f64> = self
            .values
            .par_chunks(self.grid.nx)
            .map(|row| row.iter().map(|v| v * v).sum::<f64>())
            .collect();
        (rows.iter().sum::<f64>() * self.grid.dx * self.grid.dx).sqrt()
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    /// `a * self + b * other`, element-wise.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        debug_assert!(self.grid.same_as(&other.grid));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(p, q)| a * p + b * q)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Bilinear interpolation; points outside the grid are clamped to it.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = ((x - g.x0) / g.dx).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((y - g.y0) / g.dx).clamp(0.0, (g.ny - 1) as f64);
        let i = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        if g.nx == 1 || g.ny == 1 {
            return self.at(fx.round() as usize, fy.round() as usize);
        }
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Second-order central differences in the interior and second-order
    /// one-sided differences on the edges.
    pub fn gradient(&self) -> VectorField {
        let g = self.grid;
        let inv = 1.0 / (2.0 * g.dx);
        let deriv = |f0: f64, f1: f64, f2: f64| (-3.0 * f0 + 4.0 * f1 - f2) * inv;
        let gx = ScalarField::from_index_fn(g, |i, j| {
            if g.nx < 3 {
                0.0
            } else if i == 0 {
                deriv(self.at(0, j), self.at(1, j), self.at(2, j))
            } else if i == g.nx - 1 {
                -deriv(self.at(i, j), self.at(i - 1, j), self.at(i - 2, j))
            } else {
                (self.at(i + 1, j) - self.at(i - 1, j)) * inv
            }
        });
        let gy = ScalarField::from_index_fn(g, |i, j| {
            if g.ny < 3 {
                0.0
            } else if j == 0 {
                deriv(self.at(i, 0), self.at(i, 1), self.at(i, 2))
            } else if j == g.ny - 1 {
                -deriv(self.at(i, j), self.at(i, j - 1), self.at(i, j - 2))
            } else {
                (self.at(i, j + 1) - self.at(i, j - 1)) * inv
            }
        });
        VectorField { x: gx, y: gy }
    }

    pub fn from_index_fn(grid: Grid, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        Self { grid, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.x.grid
    }

    /// Point-wise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let values = (0..self.grid().len())
            .map(|k| self.x.values[k] * other.x.values[k] + self.y.values[k] * other.y.values[k])
            .collect();
        ScalarField {
            grid: self.grid(),
            values,
        }
    }

    /// Point-wise magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .x
            .values
            .iter()
            .zip(&self.y.values)
            .map(|(a, b)| a.hypot(*b))
            .collect();
        ScalarField {
            grid: self.grid(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_grid_is_centered() {
        let g = Grid::for_domain(&DomainSpec::default(), 0.1).unwrap();
        assert_eq!(g.nx, 21);
        assert_eq!(g.ny, 21);
        assert!((g.x(10)).abs() < 1e-15);
        assert!((g.y(20) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_exact_for_quadratics() {
        let g = Grid::new(11, 9, 0.1, -0.5, -0.4).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x * x + 3.0 * x * y - y);
        let grad = f.gradient();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                assert!((grad.x.at(i, j) - (2.0 * x + 3.0 * y)).abs() < 1e-12);
                assert!((grad.y.at(i, j) - (3.0 * x - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinear_sampling_reproduces_linears() {
        let g = Grid::new(5, 5, 0.25, 0.0, 0.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| 2.0 * x - y + 1.0);
        for &(x, y) in &[(0.1, 0.7), (0.999, 0.0), (0.5, 0.5), (1.0, 1.0)] {
            assert!((f.sample(x, y) - (2.0 * x - y + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn mismatched_vector_components_rejected() {
        let a = Grid::new(4, 4, 0.1, 0.0, 0.0).unwrap();
        let b = Grid::new(5, 4, 0.1, 0.0, 0.0).unwrap();
        assert!(VectorField::new(ScalarField::zeros(a), ScalarField::zeros(b)).is_err());
    }
}
