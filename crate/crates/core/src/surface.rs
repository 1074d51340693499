//! Lagrangian marker mesh of the circle and kernel scattering of surface
//! integrals onto the Eulerian grid.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{boundary_signal, CircleGeometry};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::kernel::FilterKernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    /// Element centroid.
    pub x: [f64; 2],
    /// Unit normal pointing into region 1.
    pub n: [f64; 2],
    /// Element length.
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub markers: Vec<Marker>,
    /// Interface velocity `u_IB`. The circle is stationary, so this is zero
    /// and the moving-surface term vanishes.
    pub velocity: [f64; 2],
}

impl SurfaceMesh {
    pub fn empty() -> Self {
        Self {
            markers: Vec::new(),
            velocity: [0.0; 2],
        }
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.markers.iter().map(|m| m.area).sum()
    }

    /// Writes `x_m,y_m,n_x,n_y,A_m` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x_m,y_m,n_x,n_y,A_m")?;
        for m in &self.markers {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                m.x[0], m.x[1], m.n[0], m.n[1], m.area
            )?;
        }
        Ok(())
    }
}

/// Splits the circle into `ceil(2 pi r / target_spacing)` equal arcs with one
/// marker at each arc midpoint.
pub fn build_circle_mesh(geom: &CircleGeometry, target_spacing: f64) -> Result<SurfaceMesh> {
    if !(target_spacing > 0.0) {
        return Err(Error::Config(format!(
            "marker spacing must be positive, got {target_spacing}"
        )));
    }
    let perimeter = 2.0 * PI * geom.r;
    let count = (perimeter / target_spacing - 1e-9).ceil() as usize;
    if count < 8 {
        return Err(Error::DegenerateMesh { markers: count });
    }
    let dtheta = 2.0 * PI / count as f64;
    let area = perimeter / count as f64;
    let markers = (0..count)
        .map(|m| {
            let (s, c) = ((m as f64 + 0.5) * dtheta).sin_cos();
            Marker {
                x: [geom.xc + geom.r * c, geom.yc + geom.r * s],
                n: [c, s],
                area,
            }
        })
        .collect();
    Ok(SurfaceMesh {
        markers,
        velocity: [0.0; 2],
    })
}

/// `sum_m n_m g(x - x_m) A_m` at every node. Markers deposit one after the
/// other onto their kernel support box, so the result is independent of
/// thread scheduling.
pub fn scatter_normals(mesh: &SurfaceMesh, grid: &Grid, kernel: &FilterKernel) -> VectorField {
    let mut out = VectorField::zeros(*grid);
    for m in &mesh.markers {
        let Some((ri, rj)) = kernel.support_cells(
            (m.x[0], m.x[1]),
            (grid.x0, grid.y0),
            grid.dx,
            (grid.nx, grid.ny),
        ) else {
            continue;
        };
        for j in rj {
            let dy = grid.y(j) - m.x[1];
            for i in ri.clone() {
                let w = kernel.eval(grid.x(i) - m.x[0], dy) * m.area;
                if w != 0.0 {
                    let k = grid.idx(i, j);
                    out.x.values[k] += w * m.n[0];
                    out.y.values[k] += w * m.n[1];
                }
            }
        }
    }
    out
}

/// Static forcing shape `F_hat = grad_G_bar . sum_m n_m g(x - x_m) A_m`;
/// the forcing at time `t` is `u_I(t) F_hat` since `u_I` is uniform along
/// the interface.
pub fn forcing_shape(scattered: &VectorField, grad_g_bar: &VectorField) -> ScalarField {
    grad_g_bar.dot(scattered)
}

/// Static shape of the moving-surface term `u_IB . sum_m n_m g(x - x_m) A_m`,
/// which enters the right-hand side with a minus sign.
pub fn surface_motion_shape(mesh: &SurfaceMesh, scattered: &VectorField) -> ScalarField {
    scattered
        .x
        .combine(mesh.velocity[0], &scattered.y, mesh.velocity[1])
}

/// Interface forcing `F_I(x, t)`.
pub fn forcing_field(
    mesh: &SurfaceMesh,
    grid: &Grid,
    kernel: &FilterKernel,
    grad_g_bar: &VectorField,
    t: f64,
) -> ScalarField {
    let shape = forcing_shape(&scatter_normals(mesh, grid, kernel), grad_g_bar);
    shape.scaled(boundary_signal(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn mesh_construction() {
        let geom = CircleGeometry::default();
        let spacing = 2.0 * PI * geom.r / 64.0;
        let mesh = build_circle_mesh(&geom, spacing).unwrap();
        assert_eq!(mesh.len(), 64);
        assert!((mesh.markers[0].area - 2.0 * PI * 0.2 / 64.0).abs() < 1e-15);
        assert!((mesh.total_area() - 2.0 * PI * geom.r).abs() < 1e-12);
    }

    #[test]
    fn closed_surface_sums() {
        let geom = CircleGeometry::new(0.3, -0.1, 0.2).unwrap();
        let mesh = build_circle_mesh(&geom, 0.01).unwrap();
        let (mut sx, mut sy, mut cx, mut cy) = (0.0, 0.0, 0.0, 0.0);
        for m in &mesh.markers {
            sx += m.n[0] * m.area;
            sy += m.n[1] * m.area;
            cx += m.x[0];
            cy += m.x[1];
            assert!((m.n[0].hypot(m.n[1]) - 1.0).abs() < 1e-15);
            let radial = [(m.x[0] - geom.xc) / geom.r, (m.x[1] - geom.yc) / geom.r];
            assert!(radial[0] * m.n[0] + radial[1] * m.n[1] > 0.999_999);
        }
        let n = mesh.len() as f64;
        assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        assert!((cx / n - geom.xc).abs() < 1e-12 && (cy / n - geom.yc).abs() < 1e-12);
    }

    #[test]
    fn refuses_degenerate_mesh() {
        let geom = CircleGeometry::default();
        assert!(matches!(
            build_circle_mesh(&geom, 0.5),
            Err(Error::DegenerateMesh { .. })
        ));
        assert!(build_circle_mesh(&geom, 0.0).is_err());
    }

    #[test]
    fn scatter_is_confined_to_band() {
        let geom = CircleGeometry::default();
        let kernel = FilterKernel::new(0.1).unwrap();
        let grid = Grid::for_domain(&DomainSpec::default(), 0.1 / 8.0).unwrap();
        let mesh = build_circle_mesh(&geom, grid.dx).unwrap();
        let v = scatter_normals(&mesh, &grid, &kernel);
        let mut max = 0.0_f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let g = geom.level_set(grid.x(i), grid.y(j));
                let mag = v.x.at(i, j).hypot(v.y.at(i, j));
                if g.abs() >= kernel.radius() {
                    assert_eq!(mag, 0.0);
                }
                max = max.max(mag);
            }
        }
        assert!(max > 0.0);
    }

    #[test]
    fn forcing_vanishes_at_zero_time_and_is_sinusoidal() {
        let geom = CircleGeometry::default();
        let kernel = FilterKernel::new(0.1).unwrap();
        let grid = Grid::for_domain(&DomainSpec::default(), 0.1 / 8.0).unwrap();
        let mesh = build_circle_mesh(&geom, grid.dx).unwrap();
        let gbar = VectorField::new(
            ScalarField::from_fn(grid, |x, y| geom.grad_level_set(x, y).0[0]),
            ScalarField::from_fn(grid, |x, y| geom.grad_level_set(x, y).0[1]),
        )
        .unwrap();
        let f0 = forcing_field(&mesh, &grid, &kernel, &gbar, 0.0);
        assert!(f0.max_abs() == 0.0);
        let fa = forcing_field(&mesh, &grid, &kernel, &gbar, 0.1);
        let fb = forcing_field(&mesh, &grid, &kernel, &gbar, 0.35);
        let ratio = (2.0 * PI * 0.35).sin() / (2.0 * PI * 0.1).sin();
        for (a, b) in fa.values.iter().zip(&fb.values) {
            assert!((a * ratio - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn csv_layout() {
        let geom = CircleGeometry::default();
        let mesh = build_circle_mesh(&geom, 2.0 * PI * 0.2 / 8.0).unwrap();
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x_m,y_m,n_x,n_y,A_m");
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
