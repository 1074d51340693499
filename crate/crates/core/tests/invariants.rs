use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use vfib_core::case::Case;
use vfib_core::config::CaseConfig;
use vfib_core::filtering::StaticFilteredFields;
use vfib_core::geometry::boundary_signal;
use vfib_core::grid::{ScalarField, VectorField};
use vfib_core::kernel::FilterKernel;
use vfib_core::sfs::SfsFields;
use vfib_core::solver::{ssp_rk3_step, SolverState, StaticOperators};
use vfib_core::surface::{forcing_field, forcing_shape, scatter_normals};

fn config(width: f64, per_filter: f64, subgrid: f64) -> CaseConfig {
    CaseConfig {
        delta_f_over_d: width,
        delta_f_over_dx: per_filter,
        delta_f_over_dxf: subgrid,
        ..CaseConfig::default()
    }
}

fn shared() -> &'static (Case, StaticFilteredFields) {
    static CELL: OnceLock<(Case, StaticFilteredFields)> = OnceLock::new();
    CELL.get_or_init(|| {
        let case = Case::new(&config(1.0 / 3.0, 8.0, 32.0)).unwrap();
        let fields = case.static_fields();
        (case, fields)
    })
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.combine(1.0, b, -1.0).max_abs()
}

/// Indicator-weighted fields move by up to 1.1% at the worst cut node; the
/// full-space and smooth-integrand fields move by about 3e-5.
#[test]
fn filtered_fields_settle_by_subgrid_ratio_32() {
    let at = |ratio: f64| {
        Case::new(&config(1.0 / 6.0, 16.0, ratio))
            .unwrap()
            .static_fields()
    };
    let (a, b) = (at(32.0), at(64.0));
    let pairs: [(&ScalarField, &ScalarField); 7] = [
        (&a.alpha, &b.alpha),
        (&a.fs, &b.fs),
        (&a.fc, &b.fc),
        (&a.w_cos.x, &b.w_cos.x),
        (&a.w_sin.y, &b.w_sin.y),
        (&a.grad_g_bar.x, &b.grad_g_bar.x),
        (&a.grad_g_bar.y, &b.grad_g_bar.y),
    ];
    for (k, (p, q)) in pairs.iter().enumerate() {
        let change = max_diff(p, q) / q.max_abs();
        assert!(change < 0.0125, "field {k}: relative change {change}");
    }
}

#[test]
fn volume_fraction_is_a_bounded_monotone_step() {
    let (case, fields) = shared();
    let grid = case.grid;
    assert!(fields
        .alpha
        .values
        .iter()
        .all(|&a| (-1e-12..=1.0 + 1e-6).contains(&a)));
    // along the positive x axis from the center
    let j = grid.ny / 2;
    let row: Vec<f64> = (grid.nx / 2..grid.nx)
        .map(|i| fields.alpha.at(i, j))
        .collect();
    for w in row.windows(2) {
        assert!(w[1] + 1e-6 >= w[0], "{w:?}");
    }
}

#[test]
fn sfs_peaks_where_the_boundary_signal_vanishes() {
    let (_, fields) = shared();
    let sfs = SfsFields::from_static(fields);
    let samples = CaseConfig::default().samples_per_period;
    let norms: Vec<f64> = (0..samples)
        .map(|k| sfs.tau(k as f64 / samples as f64).max_abs())
        .collect();
    let peak = (0..samples)
        .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
        .unwrap();
    let t = peak as f64 / samples as f64;
    let nearest_zero = [0.0, 0.5, 1.0]
        .iter()
        .map(|z| (t - z).abs())
        .fold(f64::MAX, f64::min);
    assert!(nearest_zero <= 1.0 / samples as f64, "peak at T = {t}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_scales_with_width(delta in 0.01..1.0f64, u in -0.5..0.5f64, v in -0.5..0.5f64) {
        let k1 = FilterKernel::new(delta).unwrap();
        let k2 = FilterKernel::new(2.0 * delta).unwrap();
        let (x, y) = (u * delta, v * delta);
        let lhs = k2.eval(2.0 * x, 2.0 * y);
        let rhs = 0.25 * k1.eval(x, y);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn kernel_is_radially_non_increasing(delta in 0.01..1.0f64, s in 0.0..0.5f64, ds in 0.0..0.1f64, theta in 0.0..(2.0 * PI)) {
        let k = FilterKernel::new(delta).unwrap();
        let (c, sn) = (theta.cos(), theta.sin());
        let inner = k.eval(s * delta * c, s * delta * sn);
        let outer = k.eval((s + ds) * delta * c, (s + ds) * delta * sn);
        prop_assert!(outer <= inner * (1.0 + 1e-12));
    }

    #[test]
    fn sfs_reconstructs_from_two_times(t1 in 0.0..1.0f64, gap in 0.05..0.45f64, t3 in 0.0..3.0f64) {
        let (_, fields) = shared();
        let sfs = SfsFields::from_static(fields);
        let t2 = t1 + gap;
        let (a, b) = (sfs.tau(t1), sfs.tau(t2));
        // solve [cos1 sin1; cos2 sin2] [A; B] = [a; b] per node
        let (s1, c1) = (2.0 * PI * t1).sin_cos();
        let (s2, c2) = (2.0 * PI * t2).sin_cos();
        let det = c1 * s2 - s1 * c2;
        let (s3, c3) = (2.0 * PI * t3).sin_cos();
        let direct = sfs.tau(t3);
        let scale = direct.max_abs().max(1e-300);
        for k in 0..a.values.len() {
            let amp_cos = (a.values[k] * s2 - b.values[k] * s1) / det;
            let amp_sin = (c1 * b.values[k] - c2 * a.values[k]) / det;
            let rebuilt = c3 * amp_cos + s3 * amp_sin;
            prop_assert!((rebuilt - direct.values[k]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn forcing_is_a_sinusoid_of_a_static_shape(t in 0.0..2.0f64) {
        let (case, fields) = shared();
        let mesh = case.surface_mesh().unwrap();
        let shape = forcing_shape(&scatter_normals(&mesh, &case.grid, &case.kernel), &fields.grad_g_bar);
        let f = forcing_field(&mesh, &case.grid, &case.kernel, &fields.grad_g_bar, t);
        let expect = shape.scaled(-(2.0 * PI * t).sin());
        prop_assert!(max_diff(&f, &expect) <= 1e-12 * shape.max_abs());
        prop_assert_eq!(boundary_signal(t), -(2.0 * PI * t).sin());
    }

    #[test]
    fn step_is_linear_without_sources(a in -2.0..2.0f64, b in -2.0..2.0f64, phase in 0.0..1.0f64) {
        let (case, fields) = shared();
        let grid = case.grid;
        let ops = StaticOperators {
            grad_g_bar: VectorField::new(fields.grad_g_bar.x.clone(), fields.grad_g_bar.y.clone()).unwrap(),
            f_hat: ScalarField::zeros(grid),
            tau: None,
            alpha: fields.alpha.clone(),
        };
        let q1 = fields.filtered_solution(phase);
        let q2 = ScalarField::from_fn(grid, |x, y| (3.0 * x + phase).sin() * y);
        let step = |q: ScalarField| ssp_rk3_step(&SolverState { q, t: phase, step: 0 }, &ops, 0.002).unwrap().q;
        let lhs = step(q1.combine(a, &q2, b));
        let rhs = step(q1.clone()).combine(a, &step(q2.clone()), b);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }
}
