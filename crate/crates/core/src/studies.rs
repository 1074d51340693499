//! A-priori and a-posteriori studies composed from cases and the solver.

use crate::analysis::{ConvergenceRecord, Knob, PhaseError};
use crate::case::Case;
use crate::config::CaseConfig;
use crate::error::{Error, Result};
use crate::geometry::boundary_signal;
use crate::sfs::{SfsFields, SfsNorms, SfsScalingTable};
use crate::solver::{RunOutput, Simulation};
use crate::surface::{forcing_shape, scatter_normals};

/// `L_inf` norms of the three right-hand-side terms over time.
#[derive(Debug, Clone)]
pub struct TermSeries {
    pub delta_f_over_d: f64,
    pub times: Vec<f64>,
    /// `||F_I||_inf`.
    pub forcing: Vec<f64>,
    /// `||grad_G_bar . grad (alpha u)_e||_inf`.
    pub advection: Vec<f64>,
    /// `||tau_sfs||_inf`.
    pub tau: Vec<f64>,
}

impl TermSeries {
    /// `max_t ||tau||_inf / max_t max(||F_I||_inf, ||advection||_inf)`.
    pub fn hierarchy_ratio(&self) -> f64 {
        let tau = self.tau.iter().cloned().fold(0.0, f64::max);
        let other = self
            .forcing
            .iter()
            .chain(&self.advection)
            .cloned()
            .fold(0.0, f64::max);
        tau / other
    }

    /// Largest per-time ratio `||tau||_inf / max(||F_I||_inf, ||advection||_inf)`.
    pub fn max_pointwise_ratio(&self) -> f64 {
        (0..self.times.len())
            .map(|k| self.tau[k] / self.forcing[k].max(self.advection[k]))
            .fold(0.0, f64::max)
    }

    /// CSV `t,F_I_Linf,advection_Linf,tau_sfs_Linf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F_I_Linf,advection_Linf,tau_sfs_Linf\n");
        for k in 0..self.times.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.times[k], self.forcing[k], self.advection[k], self.tau[k]
            ));
        }
        out
    }
}

/// Evaluates the three term norms from the analytical solution at `times`.
/// The advection term uses `grad (alpha u)_e = filter_1(grad u) + u_I * sum n g A`.
pub fn term_series(case: &Case, times: &[f64]) -> Result<TermSeries> {
    let fields = case.static_fields();
    let mesh = case.surface_mesh()?;
    let scattered = scatter_normals(&mesh, &case.grid, &case.kernel);
    let f_hat = forcing_shape(&scattered, &fields.grad_g_bar);
    let sfs = SfsFields::from_static(&fields);
    let (mut forcing, mut advection, mut tau) = (Vec::new(), Vec::new(), Vec::new());
    for &t in times {
        let (s, c) = (2.0 * std::f64::consts::PI * t).sin_cos();
        let ui = boundary_signal(t);
        let (mut f_max, mut a_max, mut t_max) = (0.0_f64, 0.0_f64, 0.0_f64);
        for k in 0..case.grid.len() {
            let f = ui * f_hat.values[k];
            let a = c * sfs.v1.values[k] + s * sfs.v2.values[k] + f;
            let tk = c * (sfs.s1.values[k] - sfs.v1.values[k])
                + s * (sfs.s2.values[k] - sfs.v2.values[k]);
            f_max = f_max.max(f.abs());
            a_max = a_max.max(a.abs());
            t_max = t_max.max(tk.abs());
        }
        forcing.push(f_max);
        advection.push(a_max);
        tau.push(t_max);
    }
    Ok(TermSeries {
        delta_f_over_d: case.config.delta_f_over_d,
        times: times.to_vec(),
        forcing,
        advection,
        tau,
    })
}

/// `tau_sfs` norms of one case at the given phases.
pub fn sfs_norms(case: &Case, phases: &[f64]) -> Vec<SfsNorms> {
    let sfs = SfsFields::from_static(&case.static_fields());
    phases
        .iter()
        .map(|&phase| {
            let tau = sfs.tau(phase);
            SfsNorms {
                delta_f_over_d: case.config.delta_f_over_d,
                phase,
                l2: tau.l2(),
                linf: tau.max_abs(),
            }
        })
        .collect()
}

/// `tau_sfs` norms over filter widths with fitted slopes against `delta_f`.
pub fn sfs_scaling(base: &CaseConfig, widths: &[f64], phases: &[f64]) -> Result<SfsScalingTable> {
    let mut rows = Vec::new();
    for &w in widths {
        let mut cfg = base.clone();
        cfg.delta_f_over_d = w;
        rows.extend(sfs_norms(&Case::new(&cfg)?, phases));
    }
    SfsScalingTable::from_rows(rows, phases)
}

/// `||tau_sfs / delta_f^2||` for one subgrid ratio and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgridRow {
    pub delta_f_over_dxf: f64,
    pub phase: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Normalized `tau_sfs` norms over subgrid ratios.
pub fn subgrid_convergence(
    base: &CaseConfig,
    ratios: &[f64],
    phases: &[f64],
) -> Result<Vec<SubgridRow>> {
    let mut rows = Vec::new();
    for &ratio in ratios {
        let mut cfg = base.clone();
        cfg.delta_f_over_dxf = ratio;
        let case = Case::new(&cfg)?;
        let d2 = case.kernel.delta_f.powi(2);
        for n in sfs_norms(&case, phases) {
            rows.push(SubgridRow {
                delta_f_over_dxf: ratio,
                phase: n.phase,
                l2: n.l2 / d2,
                linf: n.linf / d2,
            });
        }
    }
    Ok(rows)
}

pub fn subgrid_csv(rows: &[SubgridRow]) -> String {
    let mut out = String::from("delta_f_over_dxf,phase,L2_over_delta_f2,Linf_over_delta_f2\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.delta_f_over_dxf, r.phase, r.l2, r.linf
        ));
    }
    out
}

/// Runs one case up to the largest requested phase of its last period and
/// returns the errors at `phases` within that period.
pub fn measure_phases(case: &Case, phases: &[f64]) -> Result<(Vec<PhaseError>, RunOutput)> {
    let last = phases.iter().cloned().fold(0.0, f64::max);
    let period = case.config.periods.max(1) - 1;
    let sim = Simulation::new(case)?;
    let out = sim.run_until(period as f64 + last, |_, _| {})?;
    let errors = out.phase_errors(period, phases);
    if errors.len() != phases.len() {
        return Err(Error::Config(
            "requested phases are not reachable with the time step".into(),
        ));
    }
    Ok((errors, out))
}

/// Abscissa used for fitted slopes: the filter width for `delta_f/D` and the
/// spacing for the two resolution ratios, so orders come out positive.
pub fn knob_abscissa(knob: Knob, value: f64) -> f64 {
    match knob {
        Knob::DeltaFOverD => value,
        Knob::DeltaFOverDx | Knob::DeltaFOverDxf => 1.0 / value,
    }
}

/// Sweeps one knob, measuring errors at `phases` for each value.
pub fn convergence_sweep(
    base: &CaseConfig,
    knob: Knob,
    values: &[f64],
    phases: &[f64],
) -> Result<ConvergenceRecord> {
    let mut norms = Vec::new();
    for &v in values {
        let mut cfg = base.clone();
        match knob {
            Knob::DeltaFOverD => cfg.delta_f_over_d = v,
            Knob::DeltaFOverDx => cfg.delta_f_over_dx = v,
            Knob::DeltaFOverDxf => cfg.delta_f_over_dxf = v,
        }
        let case = Case::new(&cfg)?;
        norms.push(measure_phases(&case, phases)?.0);
    }
    ConvergenceRecord::new(knob, values.to_vec(), norms, |v| knob_abscissa(knob, v))
}

/// Filter-width sweeps for several circle centers.
pub fn placement_study(
    base: &CaseConfig,
    centers: &[[f64; 2]],
    widths: &[f64],
    phases: &[f64],
) -> Result<Vec<([f64; 2], ConvergenceRecord)>> {
    centers
        .iter()
        .map(|&c| {
            let mut cfg = base.clone();
            cfg.circle_center = c;
            Ok((
                c,
                convergence_sweep(&cfg, Knob::DeltaFOverD, widths, phases)?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(width: f64) -> CaseConfig {
        CaseConfig {
            delta_f_over_d: width,
            delta_f_over_dx: 4.0,
            delta_f_over_dxf: 8.0,
            ..CaseConfig::default()
        }
    }

    #[test]
    fn forcing_vanishes_at_zeros_of_boundary_signal() {
        let case = Case::new(&coarse(1.0 / 3.0)).unwrap();
        let ts = term_series(&case, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        for k in [0, 2, 4] {
            assert!(ts.forcing[k] < 1e-12 * ts.forcing[1]);
        }
        assert!((ts.forcing[1] - ts.forcing[3]).abs() < 1e-12 * ts.forcing[1]);
        assert!(ts.hierarchy_ratio() < 1.0);
        assert!(ts.to_csv().lines().count() == 6);
    }

    #[test]
    fn sweep_records_all_points() {
        let mut cfg = coarse(1.0);
        cfg.cfl = 0.5;
        let rec = convergence_sweep(
            &cfg,
            Knob::DeltaFOverD,
            &[1.0, 0.5, 1.0 / 3.0],
            &[0.25, 0.5],
        )
        .unwrap();
        assert_eq!(rec.norms.len(), 3);
        assert_eq!(rec.fits.len(), 2);
        assert!(rec.to_csv().lines().count() == 7);
    }
}
