use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const COARSE: [&str; 6] = [
    "-s",
    "delta_f_over_D=1",
    "-s",
    "delta_f_over_dx=4",
    "-s",
    "delta_f_over_dxf=8",
];

fn vfib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfib"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "-o", dir.to_str().unwrap()];
    args.extend(COARSE);
    args.extend(extra);
    vfib(&args)
}

#[test]
fn run_writes_series_snapshots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["-s", "phases=0.25,0.5"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "error_series.csv",
        "q_T0p2500.csv",
        "reference_T0p5000.csv",
        "snapshot_T0p2500.vtk",
        "markers.csv",
    ] {
        assert!(tmp.path().join(name).exists(), "missing {name}");
    }
    let series = fs::read_to_string(tmp.path().join("error_series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some("t,L2,Linf"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["config"]["delta_f_over_D"], "1.0");
    assert!(manifest["steps"].as_u64().unwrap() > 0);
    assert_eq!(manifest["phase_errors"].as_array().unwrap().len(), 2);
}

#[test]
fn config_echo_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), &["-s", "sfs_enabled=on"]).status.success());
    let cfg = a.path().join("config.cfg");
    let out = vfib(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "-o",
        b.path().to_str().unwrap(),
        "--no-vtk",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["error_series.csv", "q_T0p2500.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn closure_lowers_error_at_unit_filter_width() {
    let off = tempfile::tempdir().unwrap();
    let on = tempfile::tempdir().unwrap();
    let extra = [
        "-s",
        "delta_f_over_dx=8",
        "-s",
        "phases=0.25,0.5",
        "--no-vtk",
    ];
    assert!(run_in(off.path(), &extra).status.success());
    let mut with_sfs = extra.to_vec();
    with_sfs.extend(["-s", "sfs_enabled=on"]);
    assert!(run_in(on.path(), &with_sfs).status.success());
    let linf = |dir: &Path| -> Vec<f64> {
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        m["phase_errors"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["Linf"].as_f64().unwrap())
            .collect()
    };
    for (a, b) in linf(on.path()).iter().zip(linf(off.path())) {
        assert!(*a < b, "on {a} off {b}");
    }
}

#[test]
fn converge_emits_slopes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec![
        "converge",
        "--knob",
        "delta_f_over_D",
        "--values",
        "1,1/2,1/3",
        "-o",
        tmp.path().to_str().unwrap(),
    ];
    args.extend(&COARSE[2..]);
    args.extend(["-s", "phases=0.25,0.5"]);
    let out = vfib(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("knob,value,phase,L2,Linf,slope_L2,slope_Linf,pairwise_L2,pairwise_Linf")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r[5].parse::<f64>().unwrap().is_finite()));
}

#[test]
fn alpha_reports_poisson_difference() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec![
        "alpha",
        "--method",
        "poisson",
        "-o",
        tmp.path().to_str().unwrap(),
    ];
    args.extend(COARSE);
    let out = vfib(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("poisson vs quadrature"));
    assert!(tmp.path().join("alpha_poisson.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert!(manifest["poisson_max_difference"].as_f64().unwrap() < 0.2);
}

#[test]
fn apriori_and_cut() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let mut args = vec![
        "apriori",
        "--widths",
        "1,1/2,1/3",
        "--samples",
        "8",
        "-o",
        dir,
    ];
    args.extend(&COARSE[2..]);
    let out = vfib(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "term_series.csv",
        "sfs_scaling.csv",
        "subgrid_convergence.csv",
    ] {
        assert!(tmp.path().join(name).exists(), "missing {name}");
    }

    let mut args = vec!["alpha", "-o", dir];
    args.extend(COARSE);
    assert!(vfib(&args).status.success());
    let field = tmp.path().join("alpha.csv");
    let out = vfib(&[
        "cut",
        "--field",
        field.to_str().unwrap(),
        "--from",
        "-1,0",
        "--to",
        "1,0",
        "--samples",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("s,x,y,value\n"));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(vfib(&["bogus"]).status.code(), Some(1));
    assert_eq!(vfib(&["run", "-s", "cfl=0"]).status.code(), Some(1));
    assert_eq!(
        vfib(&["run", "-s", "delta_f_over_dxf=2"]).status.code(),
        Some(1)
    );
    assert_eq!(vfib(&["run", "-s", "no_such_key=1"]).status.code(), Some(1));
    assert_eq!(vfib(&["--help"]).status.code(), Some(0));
}
