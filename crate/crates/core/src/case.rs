//! Assembly of grid, kernel, geometry and filtering engine from a config.

use crate::config::CaseConfig;
use crate::error::Result;
use crate::filtering::{FilterEngine, StaticFilteredFields, SubgridQuadrature};
use crate::geometry::CircleGeometry;
use crate::grid::Grid;
use crate::kernel::FilterKernel;
use crate::surface::{build_circle_mesh, SurfaceMesh};

#[derive(Debug, Clone)]
pub struct Case {
    pub config: CaseConfig,
    pub geom: CircleGeometry,
    pub kernel: FilterKernel,
    pub grid: Grid,
    pub engine: FilterEngine,
}

impl Case {
    pub fn new(config: &CaseConfig) -> Result<Self> {
        config.validate()?;
        let geom = CircleGeometry::new(
            config.circle_center[0],
            config.circle_center[1],
            config.radius(),
        )?;
        let delta_f = config.delta_f();
        geom.check_fits(&config.domain, 0.5 * delta_f)?;
        let kernel = FilterKernel::new(delta_f)?;
        let grid = Grid::for_domain(&config.domain, delta_f / config.delta_f_over_dx)?;
        let quad = SubgridQuadrature::new(config.delta_f_over_dxf)?
            .with_normalization(config.kernel_normalization)
            .with_cut_cell_samples(config.cut_cell_samples);
        let engine = FilterEngine::new(grid, kernel, quad)?;
        Ok(Self {
            config: config.clone(),
            geom,
            kernel,
            grid,
            engine,
        })
    }

    pub fn static_fields(&self) -> StaticFilteredFields {
        StaticFilteredFields::compute(&self.engine, &self.geom)
    }

    /// Marker mesh with spacing `marker_spacing_factor * dx`.
    pub fn surface_mesh(&self) -> Result<SurfaceMesh> {
        build_circle_mesh(&self.geom, self.config.marker_spacing_factor * self.grid.dx)
    }
}
