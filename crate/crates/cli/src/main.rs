use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use vfib_core::analysis::{cut_to_csv, line_cut, Knob};
use vfib_core::case::Case;
use vfib_core::config::{parse_number, AlphaMethod, CaseConfig};
use vfib_core::filtering::grad_alpha;
use vfib_core::io::{read_field_csv, write_field_csv, write_vtk};
use vfib_core::poisson::{volume_fraction_poisson, PoissonOptions};
use vfib_core::solver::Simulation;
use vfib_core::studies;
use vfib_core::surface::scatter_normals;

#[derive(Parser, Debug)]
#[command(
    name = "vfib",
    version,
    about = "Volume-filtered immersed boundary solver and verification studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CaseArgs {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `-s delta_f_over_D=1/6`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides `output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Volume fraction fields and the gradient identity check.
    Alpha {
        #[command(flatten)]
        case: CaseArgs,
        /// Also solve the Poisson problem and report the difference.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Term series, tau_sfs scaling and subgrid convergence from the exact solution.
    Apriori {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum, default_value = "all")]
        study: AprioriStudy,
        /// Filter widths for the scaling study.
        #[arg(long, value_delimiter = ',', default_value = "1/3,1/6,1/12,1/24")]
        widths: Vec<String>,
        /// Subgrid ratios for the subgrid study.
        #[arg(long, value_delimiter = ',', default_value = "32,64")]
        ratios: Vec<String>,
        /// Samples per period in the term series.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// One a-posteriori simulation.
    Run {
        #[command(flatten)]
        case: CaseArgs,
        /// Skip VTK snapshots.
        #[arg(long)]
        no_vtk: bool,
    },
    /// Convergence sweep over one knob or over circle centers.
    Converge {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum)]
        knob: KnobArg,
        /// Knob values (filter widths for `center`).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Circle centers `x,y;x,y;...` for `--knob center`.
        #[arg(long)]
        centers: Option<String>,
    },
    /// Line cut through a stored CSV field.
    Cut {
        /// Field CSV written by `run` or `alpha`.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        from: String,
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = 401)]
        samples: usize,
        /// Output CSV; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Quadrature,
    Poisson,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum AprioriStudy {
    Terms,
    Scaling,
    Subgrid,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KnobArg {
    #[value(name = "delta_f_over_D")]
    DeltaFOverD,
    #[value(name = "delta_f_over_dx")]
    DeltaFOverDx,
    #[value(name = "delta_f_over_dxf")]
    DeltaFOverDxf,
    Center,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use vfib_core::Error;
    match e.downcast_ref::<Error>() {
        Some(Error::Unstable { .. })
        | Some(Error::PoissonNotConverged { .. })
        | Some(Error::Fit(_))
        | Some(Error::GridMismatch(_)) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Alpha { case, method } => alpha(&case, method),
        Command::Apriori {
            case,
            study,
            widths,
            ratios,
            samples,
        } => apriori(
            &case,
            study,
            &parse_values("widths", &widths)?,
            &parse_values("ratios", &ratios)?,
            samples,
        ),
        Command::Run { case, no_vtk } => run(&case, no_vtk),
        Command::Converge {
            case,
            knob,
            values,
            centers,
        } => converge(
            &case,
            knob,
            &parse_values("values", &values)?,
            centers.as_deref(),
        ),
        Command::Cut {
            field,
            from,
            to,
            samples,
            output,
        } => cut(&field, &from, &to, samples, output.as_deref()),
    }
}

fn parse_values(key: &str, items: &[String]) -> Result<Vec<f64>> {
    Ok(items
        .iter()
        .map(|s| parse_number(key, s.trim()))
        .collect::<vfib_core::Result<_>>()?)
}

fn parse_point(key: &str, text: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| parse_number(key, s.trim()))
        .collect::<vfib_core::Result<_>>()?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => bail!("{key}: expected 'x,y', got '{text}'"),
    }
}

fn load_config(args: &CaseArgs) -> Result<CaseConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CaseConfig::parse(&text)?
        }
        None => CaseConfig::default(),
    };
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .with_context(|| format!("override '{item}' is not KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Output directory plus the list of files written into it.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(cfg: &CaseConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir)
            .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Writes `config.cfg` and `manifest.json` describing the invocation.
    fn finish(
        mut self,
        command: &str,
        cfg: &CaseConfig,
        started: Instant,
        extra: Map<String, Value>,
    ) -> Result<()> {
        let kv = cfg.to_key_values();
        self.text("config.cfg", &kv)?;
        let config: Map<String, Value> = kv
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), Value::String(v.trim().to_string())))
            .collect();
        let mut manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "wall_seconds": started.elapsed().as_secs_f64(),
        });
        let obj = manifest.as_object_mut().expect("object literal");
        obj.extend(extra);
        self.files.push("manifest.json".into());
        obj.insert("outputs".into(), json!(self.files));
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn alpha(args: &CaseArgs, method: Option<MethodArg>) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load_config(args)?;
    if let Some(m) = method {
        cfg.alpha_method = match m {
            MethodArg::Quadrature => AlphaMethod::Quadrature,
            MethodArg::Poisson => AlphaMethod::Poisson,
        };
    }
    let case = Case::new(&cfg)?;
    let mut out = Outputs::new(&cfg)?;
    let fields = case.static_fields();
    let mesh = case.surface_mesh()?;
    let scattered = scatter_normals(&mesh, &case.grid, &case.kernel);
    let ga = grad_alpha(&fields.alpha);
    let identity = scattered
        .x
        .combine(1.0, &ga.x, -1.0)
        .max_abs()
        .max(scattered.y.combine(1.0, &ga.y, -1.0).max_abs());

    write_field_csv(out.create("alpha.csv")?, "alpha", &fields.alpha)?;
    mesh.write_csv(out.create("markers.csv")?)?;
    let mut extra = Map::new();
    extra.insert("grad_alpha_identity_linf".into(), json!(identity));
    extra.insert("markers".into(), json!(mesh.len()));
    println!("grad alpha identity: max |sum n g A - grad alpha| = {identity:.6e}");

    let mut vtk_fields = vec![
        ("alpha", &fields.alpha),
        ("scatter_x", &scattered.x),
        ("scatter_y", &scattered.y),
    ];
    let poisson;
    if cfg.alpha_method == AlphaMethod::Poisson {
        poisson =
            volume_fraction_poisson(&case.grid, &mesh, &case.kernel, &PoissonOptions::default())?;
        let diff = poisson.alpha.combine(1.0, &fields.alpha, -1.0).max_abs();
        write_field_csv(out.create("alpha_poisson.csv")?, "alpha", &poisson.alpha)?;
        vtk_fields.push(("alpha_poisson", &poisson.alpha));
        extra.insert("poisson_max_difference".into(), json!(diff));
        extra.insert("poisson_iterations".into(), json!(poisson.iterations));
        extra.insert("poisson_residual".into(), json!(poisson.residual));
        println!(
            "poisson vs quadrature: max |difference| = {diff:.6e} ({} iterations, residual {:.3e})",
            poisson.iterations, poisson.residual
        );
    }
    write_vtk(out.create("alpha.vtk")?, "volume fraction", &vtk_fields)?;
    out.finish("alpha", &cfg, started, extra)
}

fn apriori(
    args: &CaseArgs,
    study: AprioriStudy,
    widths: &[f64],
    ratios: &[f64],
    samples: usize,
) -> Result<()> {
    let started = Instant::now();
    let cfg = load_config(args)?;
    let mut out = Outputs::new(&cfg)?;
    let mut extra = Map::new();
    let all = study == AprioriStudy::All;
    if all || study == AprioriStudy::Terms {
        let times: Vec<f64> = (0..=samples.max(1))
            .map(|k| k as f64 / samples.max(1) as f64)
            .collect();
        let ts = studies::term_series(&Case::new(&cfg)?, &times)?;
        out.text("term_series.csv", &ts.to_csv())?;
        extra.insert("term_hierarchy_ratio".into(), json!(ts.hierarchy_ratio()));
        println!(
            "term hierarchy: max tau / max(F_I, advection) = {:.6e}",
            ts.hierarchy_ratio()
        );
    }
    if all || study == AprioriStudy::Scaling {
        let table = studies::sfs_scaling(&cfg, widths, &measured_phases(&cfg))?;
        out.text("sfs_scaling.csv", &table.to_csv())?;
        for (phase, s2, sinf) in &table.slopes {
            println!("tau_sfs slope at T = {phase}: L2 {s2:.4}, Linf {sinf:.4}");
        }
        extra.insert("sfs_slopes".into(), json!(table.slopes));
    }
    if all || study == AprioriStudy::Subgrid {
        let rows = studies::subgrid_convergence(&cfg, ratios, &measured_phases(&cfg))?;
        out.text("subgrid_convergence.csv", &studies::subgrid_csv(&rows))?;
        extra.insert("subgrid_points".into(), json!(rows.len()));
    }
    out.finish("apriori", &cfg, started, extra)
}

/// Configured phases without `T = 0`, where errors and exact terms may vanish.
fn measured_phases(cfg: &CaseConfig) -> Vec<f64> {
    cfg.phases.iter().cloned().filter(|&p| p > 0.0).collect()
}

fn phase_tag(phase: f64) -> String {
    format!("{phase:.4}").replace('.', "p")
}

fn run(args: &CaseArgs, no_vtk: bool) -> Result<()> {
    let started = Instant::now();
    let cfg = load_config(args)?;
    let case = Case::new(&cfg)?;
    let mut out = Outputs::new(&cfg)?;
    let sim = Simulation::new(&case)?;
    sim.mesh.write_csv(out.create("markers.csv")?)?;

    let n = sim.steps_per_period;
    let last_period = cfg.periods - 1;
    let mut snapshot_err: Option<anyhow::Error> = None;
    let mut written = Vec::new();
    let output = sim.run_until(cfg.periods as f64, |state, reference| {
        if snapshot_err.is_some() || state.step / n < last_period && state.step != 0 {
            return;
        }
        let phase = (state.step % n) as f64 / n as f64;
        let phase = if state.step > 0 && state.step % n == 0 {
            1.0
        } else {
            phase
        };
        let tag = phase_tag(phase);
        let mut write = || -> Result<()> {
            let q_name = format!("q_T{tag}.csv");
            write_field_csv(out.create(&q_name)?, "q", &state.q)?;
            write_field_csv(
                out.create(&format!("reference_T{tag}.csv"))?,
                "reference",
                reference,
            )?;
            if !no_vtk {
                let err = state.q.combine(1.0, reference, -1.0);
                write_vtk(
                    out.create(&format!("snapshot_T{tag}.vtk"))?,
                    &format!("t = {}", state.t),
                    &[
                        ("q", &state.q),
                        ("reference", reference),
                        ("error", &err),
                        ("alpha", &sim.ops.alpha),
                    ],
                )?;
            }
            Ok(())
        };
        match write() {
            Ok(()) => written.push(phase),
            Err(e) => snapshot_err = Some(e),
        }
    })?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    out.text("error_series.csv", &output.series_csv())?;
    let last = output.records.last().copied();
    if let Some(r) = last {
        println!(
            "t = {:.4}: L2 = {:.6e}, Linf = {:.6e} ({} steps)",
            r.t, r.l2, r.linf, output.state.step
        );
    }
    let phase_errors: Vec<Value> = output
        .phase_errors(last_period, &cfg.phases)
        .iter()
        .map(|p| json!({"phase": p.phase, "L2": p.l2, "Linf": p.linf}))
        .collect();
    let mut extra = Map::new();
    extra.insert("steps".into(), json!(output.state.step));
    extra.insert("steps_per_period".into(), json!(output.steps_per_period));
    extra.insert("dt".into(), json!(output.dt));
    extra.insert("solver_seconds".into(), json!(output.wall_seconds));
    extra.insert("phase_errors".into(), json!(phase_errors));
    extra.insert("snapshot_phases".into(), json!(written));
    out.finish("run", &cfg, started, extra)
}

fn converge(args: &CaseArgs, knob: KnobArg, values: &[f64], centers: Option<&str>) -> Result<()> {
    let started = Instant::now();
    let cfg = load_config(args)?;
    let mut out = Outputs::new(&cfg)?;
    let phases = measured_phases(&cfg);
    let mut extra = Map::new();
    let report = |label: &str, rec: &vfib_core::analysis::ConvergenceRecord| {
        for (phase, l2, linf) in &rec.fits {
            println!(
                "{label}T = {phase}: slope L2 {:.4}, Linf {:.4}",
                l2.slope, linf.slope
            );
        }
    };
    let knob = match knob {
        KnobArg::Center => {
            let centers: Vec<[f64; 2]> = match centers {
                Some(text) => text
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_point("centers", s))
                    .collect::<Result<_>>()?,
                None => bail!("--knob center requires --centers"),
            };
            let results = studies::placement_study(&cfg, &centers, values, &phases)?;
            let mut summary = Vec::new();
            for (k, (c, rec)) in results.iter().enumerate() {
                out.text(&format!("convergence_center{k}.csv"), &rec.to_csv())?;
                report(&format!("center ({}, {}) ", c[0], c[1]), rec);
                let fits: Vec<Value> = rec
                    .fits
                    .iter()
                    .map(
                        |(p, a, b)| json!({"phase": p, "slope_L2": a.slope, "slope_Linf": b.slope}),
                    )
                    .collect();
                summary.push(json!({"center": c, "fits": fits}));
            }
            extra.insert("centers".into(), json!(summary));
            return out.finish("converge", &cfg, started, extra);
        }
        KnobArg::DeltaFOverD => Knob::DeltaFOverD,
        KnobArg::DeltaFOverDx => Knob::DeltaFOverDx,
        KnobArg::DeltaFOverDxf => Knob::DeltaFOverDxf,
    };
    let rec = studies::convergence_sweep(&cfg, knob, values, &phases)?;
    out.text("convergence.csv", &rec.to_csv())?;
    report("", &rec);
    extra.insert("knob".into(), json!(knob.name()));
    extra.insert("values".into(), json!(values));
    out.finish("converge", &cfg, started, extra)
}

fn cut(field: &Path, from: &str, to: &str, samples: usize, output: Option<&Path>) -> Result<()> {
    let file = File::open(field).with_context(|| format!("opening {}", field.display()))?;
    let f = read_field_csv(BufReader::new(file))?;
    let rows = line_cut(
        &f,
        parse_point("from", from)?,
        parse_point("to", to)?,
        samples,
    )?;
    let csv = cut_to_csv(&rows);
    match output {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_map_to_two() {
        let unstable = anyhow::Error::new(vfib_core::Error::Unstable { step: 3, time: 0.1 });
        assert_eq!(exit_code(&unstable), 2);
        let poisson = anyhow::Error::new(vfib_core::Error::PoissonNotConverged {
            iterations: 5,
            residual: 1.0,
        });
        assert_eq!(exit_code(&poisson), 2);
        let config = anyhow::Error::new(vfib_core::Error::Config("bad".into()));
        assert_eq!(exit_code(&config), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), 1);
    }
}
