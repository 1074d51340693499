//! SSP-RK3 time integration of the volume-filtered equation
//! `d(alpha u)/dt + grad_G_bar . grad(alpha u) = F_I - tau_sfs`.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{error_norms, PhaseError};
use crate::case::Case;
use crate::config::{AdvectingField, AlphaMethod};
use crate::error::{Error, Result};
use crate::filtering::StaticFilteredFields;
use crate::geometry::boundary_signal;
use crate::grid::{Grid, ScalarField, VectorField};
use crate::poisson::{volume_fraction_poisson, PoissonOptions};
use crate::sfs::SfsFields;
use crate::surface::{forcing_shape, scatter_normals, surface_motion_shape, SurfaceMesh};

#[derive(Debug, Clone)]
pub struct SolverState {
    /// Filtered unknown `(alpha u-bar)`.
    pub q: ScalarField,
    pub t: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct StaticOperators {
    pub grad_g_bar: VectorField,
    /// Forcing shape; `F_I(t) = u_I(t) f_hat`.
    pub f_hat: ScalarField,
    /// `tau(t) = cos(2 pi t) a + sin(2 pi t) b`, when enabled.
    pub tau: Option<(ScalarField, ScalarField)>,
    pub alpha: ScalarField,
}

impl StaticOperators {
    pub fn assemble(
        case: &Case,
        fields: &StaticFilteredFields,
        mesh: &SurfaceMesh,
    ) -> Result<Self> {
        let grad_g_bar = match case.config.advecting_field {
            AdvectingField::Filtered => fields.grad_g_bar.clone(),
            AdvectingField::Pointwise => {
                let g = case.geom;
                VectorField::new(
                    ScalarField::from_fn(case.grid, |x, y| g.grad_level_set(x, y).0[0]),
                    ScalarField::from_fn(case.grid, |x, y| g.grad_level_set(x, y).0[1]),
                )?
            }
        };
        let scattered = scatter_normals(mesh, &case.grid, &case.kernel);
        let f_hat = forcing_shape(&scattered, &grad_g_bar).combine(
            1.0,
            &surface_motion_shape(mesh, &scattered),
            -1.0,
        );
        let tau = case.config.sfs_enabled.then(|| {
            let mut sfs = SfsFields::from_static(fields);
            sfs.v1 = grad_g_bar.dot(&fields.w_cos);
            sfs.v2 = grad_g_bar.dot(&fields.w_sin);
            sfs.amplitudes()
        });
        let alpha = match case.config.alpha_method {
            AlphaMethod::Quadrature => fields.alpha.clone(),
            AlphaMethod::Poisson => {
                volume_fraction_poisson(&case.grid, mesh, &case.kernel, &PoissonOptions::default())?
                    .alpha
            }
        };
        Ok(Self {
            grad_g_bar,
            f_hat,
            tau,
            alpha,
        })
    }

    pub fn grid(&self) -> Grid {
        self.f_hat.grid
    }

    /// Largest advection speed `max |grad_G_bar|`.
    pub fn max_speed(&self) -> f64 {
        self.grad_g_bar.max_abs()
    }

    /// `F_I(t) - tau(t)` at every node.
    pub fn source(&self, t: f64) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid());
        let coeffs = SourceCoefficients::at(t);
        for k in 0..out.values.len() {
            out.values[k] = coeffs.eval(self, k);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct SourceCoefficients {
    forcing: f64,
    cos: f64,
    sin: f64,
}

impl SourceCoefficients {
    fn at(t: f64) -> Self {
        let (s, c) = (2.0 * PI * t).sin_cos();
        Self {
            forcing: boundary_signal(t),
            cos: c,
            sin: s,
        }
    }

    #[inline]
    fn eval(&self, ops: &StaticOperators, k: usize) -> f64 {
        let mut v = self.forcing * ops.f_hat.values[k];
        if let Some((a, b)) = &ops.tau {
            v -= self.cos * a.values[k] + self.sin * b.values[k];
        }
        v
    }
}

/// Initial condition `q = filter_1(sin 2 pi G)`.
pub fn init_state(fields: &StaticFilteredFields) -> SolverState {
    SolverState {
        q: fields.fs.clone(),
        t: 0.0,
        step: 0,
    }
}

/// Second-order upwind-biased derivative along one axis. `stride` steps to
/// the next node, `i` is the position along the axis of length `n`.
#[inline]
fn upwind(q: &[f64], k: usize, stride: usize, i: usize, n: usize, a: f64, inv2h: f64) -> f64 {
    let backward = |k: usize| (3.0 * q[k] - 4.0 * q[k - stride] + q[k - 2 * stride]) * inv2h;
    let forward = |k: usize| (-3.0 * q[k] + 4.0 * q[k + stride] - q[k + 2 * stride]) * inv2h;
    if n < 3 || a == 0.0 {
        0.0
    } else if (a > 0.0 && i >= 2) || i + 2 >= n {
        backward(k)
    } else {
        forward(k)
    }
}

#[inline]
fn advection_at(q: &[f64], grad: &VectorField, grid: &Grid, i: usize, j: usize, inv2h: f64) -> f64 {
    let k = grid.idx(i, j);
    let ax = grad.x.values[k];
    let ay = grad.y.values[k];
    ax * upwind(q, k, 1, i, grid.nx, ax, inv2h) + ay * upwind(q, k, grid.nx, j, grid.ny, ay, inv2h)
}

/// `-grad_G_bar . grad q` with second-order upwinding per component.
pub fn advection_rhs(q: &ScalarField, grad_g_bar: &VectorField) -> ScalarField {
    let grid = q.grid;
    let inv2h = 0.5 / grid.dx;
    ScalarField::from_index_fn(grid, |i, j| {
        -advection_at(&q.values, grad_g_bar, &grid, i, j, inv2h)
    })
}

/// Writes `out = a * base + b * (stage + dt * L(stage, t))`.
fn stage_update(
    out: &mut [f64],
    base: &[f64],
    stage: &[f64],
    a: f64,
    b: f64,
    dt: f64,
    t: f64,
    ops: &StaticOperators,
) {
    let grid = ops.grid();
    let inv2h = 0.5 / grid.dx;
    let coeffs = SourceCoefficients::at(t);
    out.par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, o) in row.iter_mut().enumerate() {
                let k = j * grid.nx + i;
                let rhs =
                    -advection_at(stage, &ops.grad_g_bar, &grid, i, j, inv2h) + coeffs.eval(ops, k);
                *o = a * base[k] + b * (stage[k] + dt * rhs);
            }
        });
}

/// Reusable stage buffers for repeated steps on one grid.
#[derive(Debug)]
pub struct Stepper<'a> {
    ops: &'a StaticOperators,
    q1: Vec<f64>,
    q2: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(ops: &'a StaticOperators) -> Self {
        let n = ops.grid().len();
        Self {
            ops,
            q1: vec![0.0; n],
            q2: vec![0.0; n],
            next: vec![0.0; n],
        }
    }

    /// Advances `state` by one step with sources at `t^n`, `t^{n+1}` and
    /// `t^{n+1/2}` in the three stages.
    pub fn step(&mut self, state: &mut SolverState, dt: f64) -> Result<()> {
        let t = state.t;
        let q0 = &state.q.values;
        stage_update(&mut self.q1, q0, q0, 0.0, 1.0, dt, t, self.ops);
        stage_update(&mut self.q2, q0, &self.q1, 0.75, 0.25, dt, t + dt, self.ops);
        stage_update(
            &mut self.next,
            q0,
            &self.q2,
            1.0 / 3.0,
            2.0 / 3.0,
            dt,
            t + 0.5 * dt,
            self.ops,
        );
        std::mem::swap(&mut state.q.values, &mut self.next);
        state.step += 1;
        state.t = t + dt;
        if state.q.has_non_finite() {
            return Err(Error::Unstable {
                step: state.step,
                time: state.t,
            });
        }
        Ok(())
    }
}

/// One SSP-RK3 step returning the new state.
pub fn ssp_rk3_step(state: &SolverState, ops: &StaticOperators, dt: f64) -> Result<SolverState> {
    state.q.grid.check_same(&ops.grid())?;
    let mut next = state.clone();
    Stepper::new(ops).step(&mut next, dt)?;
    Ok(next)
}

/// Number of steps per unit period for `dt <= cfl dx / speed`, rounded up to
/// a multiple of `multiple` so sample phases land on steps.
pub fn steps_per_period(cfl: f64, dx: f64, speed: f64, multiple: usize) -> usize {
    let raw = (speed.max(f64::MIN_POSITIVE) / (cfl * dx) - 1e-9)
        .ceil()
        .max(1.0) as usize;
    let m = multiple.max(1);
    raw.div_ceil(m) * m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub step: usize,
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ErrorRecord>,
    pub state: SolverState,
    pub dt: f64,
    pub steps_per_period: usize,
    pub wall_seconds: f64,
}

impl RunOutput {
    /// Errors at `phases` of the given (zero-based) period.
    pub fn phase_errors(&self, period: usize, phases: &[f64]) -> Vec<PhaseError> {
        phases
            .iter()
            .filter_map(|&phase| {
                let step =
                    ((period as f64 + phase) * self.steps_per_period as f64).round() as usize;
                self.records
                    .iter()
                    .find(|r| r.step == step)
                    .map(|r| PhaseError {
                        phase,
                        l2: r.l2,
                        linf: r.linf,
                    })
            })
            .collect()
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,L2,Linf\n");
        for r in &self.records {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.t, r.l2, r.linf));
        }
        out
    }
}

/// Prepared simulation: static fields, operators and time step.
#[derive(Debug)]
pub struct Simulation<'a> {
    pub case: &'a Case,
    pub fields: StaticFilteredFields,
    pub ops: StaticOperators,
    pub mesh: SurfaceMesh,
    pub dt: f64,
    pub steps_per_period: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(case: &'a Case) -> Result<Self> {
        let fields = case.static_fields();
        let mesh = case.surface_mesh()?;
        let ops = StaticOperators::assemble(case, &fields, &mesh)?;
        let cfg = &case.config;
        let speed = match cfg.advecting_field {
            AdvectingField::Filtered => ops.max_speed(),
            AdvectingField::Pointwise => 1.0,
        };
        let mut multiple = lcm(cfg.samples_per_period, 8);
        for &p in &cfg.phases {
            multiple = lcm(multiple, phase_denominator(p));
        }
        let steps_per_period = steps_per_period(cfg.cfl, case.grid.dx, speed, multiple);
        Ok(Self {
            case,
            fields,
            ops,
            mesh,
            dt: 1.0 / steps_per_period as f64,
            steps_per_period,
        })
    }

    pub fn reference(&self, t: f64) -> ScalarField {
        self.fields.filtered_solution(t)
    }

    /// Integrates to `t_end` (rounded to a whole step), recording errors every
    /// `1 / samples_per_period` and at the configured phases of each period.
    /// `observer` sees the state and reference at every configured phase.
    pub fn run_until(
        &self,
        t_end: f64,
        mut observer: impl FnMut(&SolverState, &ScalarField),
    ) -> Result<RunOutput> {
        let started = Instant::now();
        let n = self.steps_per_period;
        let total = (t_end * n as f64).round() as usize;
        let stride = n / self.case.config.samples_per_period.max(1);
        let phase_steps: Vec<usize> = self
            .case
            .config
            .phases
            .iter()
            .map(|p| (p * n as f64).round() as usize % n)
            .collect();

        let mut state = init_state(&self.fields);
        let mut stepper = Stepper::new(&self.ops);
        let mut records = Vec::new();
        loop {
            let in_period = state.step % n;
            let at_phase =
                phase_steps.contains(&in_period) || (state.step == total && in_period == 0);
            if state.step.is_multiple_of(stride.max(1)) || at_phase || state.step == total {
                let t = state.step as f64 * self.dt;
                let reference = self.reference(t);
                let (l2, linf) = error_norms(&state.q, &reference)?;
                records.push(ErrorRecord {
                    step: state.step,
                    t,
                    l2,
                    linf,
                });
                if at_phase {
                    observer(&state, &reference);
                }
            }
            if state.step >= total {
                break;
            }
            stepper.step(&mut state, self.dt)?;
            // keep the clock exact on step multiples
            state.t = state.step as f64 * self.dt;
        }
        Ok(RunOutput {
            records,
            state,
            dt: self.dt,
            steps_per_period: n,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Runs the configured number of periods.
pub fn run(case: &Case, observer: impl FnMut(&SolverState, &ScalarField)) -> Result<RunOutput> {
    let sim = Simulation::new(case)?;
    sim.run_until(case.config.periods as f64, observer)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Smallest `d <= 64` with `phase * d` integral, or 1.
fn phase_denominator(phase: f64) -> usize {
    (1..=64)
        .find(|&d| ((phase * d as f64) - (phase * d as f64).round()).abs() < 1e-9)
        .unwrap_or(1)
}
