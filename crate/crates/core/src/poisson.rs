//! Volume fraction from a Poisson equation,
//! `lap(alpha) = div(sum_m n_m g(x - x_m) A_m)` with `alpha = 1` on the
//! domain boundary, solved by matrix-free red-black SOR.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::kernel::FilterKernel;
use crate::surface::{scatter_normals, SurfaceMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonOptions {
    /// Stop when the RMS residual relative to the RMS right-hand side drops
    /// below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Over-relaxation factor; `None` picks the optimal Jacobi-spectrum value.
    pub omega: Option<f64>,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200_000,
            omega: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub alpha: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

pub fn volume_fraction_poisson(
    grid: &Grid,
    mesh: &SurfaceMesh,
    kernel: &FilterKernel,
    opts: &PoissonOptions,
) -> Result<PoissonSolution> {
    let v = scatter_normals(mesh, grid, kernel);
    // central divergence; boundary nodes are Dirichlet and need no rhs
    let inv = 1.0 / (2.0 * grid.dx);
    let rhs = ScalarField::from_index_fn(*grid, |i, j| {
        if i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny {
            0.0
        } else {
            (v.x.at(i + 1, j) - v.x.at(i - 1, j) + v.y.at(i, j + 1) - v.y.at(i, j - 1)) * inv
        }
    });
    solve_dirichlet(&rhs, 1.0, opts)
}

/// Solves `lap(u) = rhs` on the interior with `u = boundary` on the edges.
pub fn solve_dirichlet(
    rhs: &ScalarField,
    boundary: f64,
    opts: &PoissonOptions,
) -> Result<PoissonSolution> {
    let grid = rhs.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut u = ScalarField::constant(grid, boundary);
    if nx < 3 || ny < 3 {
        return Ok(PoissonSolution {
            alpha: u,
            iterations: 0,
            residual: 0.0,
        });
    }
    let h2 = grid.dx * grid.dx;
    let omega = opts.omega.unwrap_or_else(|| {
        let n = nx.max(ny) as f64 - 1.0;
        2.0 / (1.0 + (std::f64::consts::PI / n).sin())
    });
    let rhs_norm = rms_interior(&grid, |i, j| rhs.at(i, j));
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 / h2 };
    let mut update = vec![0.0; nx * ny];

    let mut residual = relative_residual(&u, rhs, scale);
    let mut iterations = 0;
    while residual > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(Error::PoissonNotConverged {
                iterations,
                residual,
            });
        }
        for color in 0..2 {
            {
                let src = &u.values;
                update.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                    if j == 0 || j + 1 == ny {
                        return;
                    }
                    let start = 1 + (j + 1 + color) % 2;
                    for i in (start..nx - 1).step_by(2) {
                        let k = j * nx + i;
                        let gs = 0.25
                            * (src[k - 1] + src[k + 1] + src[k - nx] + src[k + nx]
                                - h2 * rhs.values[k]);
                        row[i] = src[k] + omega * (gs - src[k]);
                    }
                });
            }
            for j in 1..ny - 1 {
                let start = 1 + (j + 1 + color) % 2;
                for i in (start..nx - 1).step_by(2) {
                    let k = j * nx + i;
                    u.values[k] = update[k];
                }
            }
        }
        iterations += 1;
        if iterations % 10 == 0 {
            residual = relative_residual(&u, rhs, scale);
        }
    }
    Ok(PoissonSolution {
        alpha: u,
        iterations,
        residual,
    })
}

fn rms_interior(grid: &Grid, f: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let rows: Vec<f64> = (1..grid.ny - 1)
        .into_par_iter()
        .map(|j| (1..grid.nx - 1).map(|i| f(i, j).powi(2)).sum::<f64>())
        .collect();
    let count = ((grid.nx - 2) * (grid.ny - 2)) as f64;
    (rows.iter().sum::<f64>() / count).sqrt()
}

fn relative_residual(u: &ScalarField, rhs: &ScalarField, scale: f64) -> f64 {
    let grid = u.grid;
    let inv_h2 = 1.0 / (grid.dx * grid.dx);
    rms_interior(&grid, |i, j| {
        let lap = (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) + u.at(i, j + 1)
            - 4.0 * u.at(i, j))
            * inv_h2;
        lap - rhs.at(i, j)
    }) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn empty_surface_gives_unity() {
        let grid = Grid::for_domain(&DomainSpec::default(), 0.05).unwrap();
        let kernel = FilterKernel::new(0.2).unwrap();
        let sol = volume_fraction_poisson(
            &grid,
            &SurfaceMesh::empty(),
            &kernel,
            &PoissonOptions::default(),
        )
        .unwrap();
        assert!(sol.alpha.values.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn solves_manufactured_problem() {
        // u = 1 + sin(pi x) sin(pi y) on [0,1]^2 vanishes-to-one on the edges
        let grid = Grid::new(41, 41, 1.0 / 40.0, 0.0, 0.0).unwrap();
        let pi = std::f64::consts::PI;
        let rhs = ScalarField::from_fn(grid, |x, y| {
            -2.0 * pi * pi * (pi * x).sin() * (pi * y).sin()
        });
        let sol = solve_dirichlet(&rhs, 1.0, &PoissonOptions::default()).unwrap();
        assert!(sol.residual <= 1e-10);
        let err = ScalarField::from_index_fn(grid, |i, j| {
            sol.alpha.at(i, j) - 1.0 - (pi * grid.x(i)).sin() * (pi * grid.y(j)).sin()
        });
        assert!(err.max_abs() < 1e-3, "{}", err.max_abs());
    }

    #[test]
    fn reports_non_convergence() {
        let grid = Grid::new(41, 41, 1.0 / 40.0, 0.0, 0.0).unwrap();
        let rhs = ScalarField::constant(grid, 1.0);
        let opts = PoissonOptions {
            max_iterations: 3,
            ..Default::default()
        };
        assert!(matches!(
            solve_dirichlet(&rhs, 1.0, &opts),
            Err(Error::PoissonNotConverged { .. })
        ));
    }
}
