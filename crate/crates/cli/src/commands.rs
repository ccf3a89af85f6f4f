use std::path::Path;
use std::time::Instant;

use thermistor_fem::io::{write_trajectory, DumpFormat};
use thermistor_fem::model::{validate_assumptions, SampleRange};
use thermistor_fem::study::{self, StudyResult};
use thermistor_fem::{run_simulation, Mesh, NtRule, ReferenceSpec, RunConfig, Scheme, StepperConfig, StudyConfig};

use crate::args::{CompareArgs, FormatArg, GridArgs, Preset, RunArgs, SchemeArg, SolverArgs, StudyArgs, ValidateArgs};
use crate::config::{resolve_problem, ResolvedProblem};
use crate::output::{self, Manifest};
use crate::plot::{write_svg_plot, Series};
use crate::CliError;

fn stepper_config(scheme: Scheme, s: &SolverArgs) -> Result<StepperConfig, CliError> {
    if !(s.solver_tol > 0.0 && s.solver_tol < 1.0) {
        return Err(CliError::Usage(format!(
            "--solver-tol {} must lie in (0, 1)",
            s.solver_tol
        )));
    }
    if !(s.picard_tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--picard-tol {} must be positive",
            s.picard_tol
        )));
    }
    if s.picard_max_iter == 0 {
        return Err(CliError::Usage("--picard-max-iter must be at least 1".into()));
    }
    Ok(StepperConfig {
        scheme,
        picard_tol: s.picard_tol,
        picard_max_iter: s.picard_max_iter,
        solver_tol: s.solver_tol,
        ..StepperConfig::default()
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    if args.nx == 0 || args.nt == 0 {
        return Err(CliError::Usage(format!(
            "--nx and --nt must be positive (got {} and {})",
            args.nx, args.nt
        )));
    }
    if args.stride == Some(0) {
        return Err(CliError::Usage("--stride must be positive".into()));
    }
    let problem = resolve_problem(&args.problem)?;
    let stepper = stepper_config(args.scheme.into(), &args.solver)?;
    let run = RunConfig {
        stepper,
        stride: args.stride,
        ..RunConfig::default()
    };
    let mesh = Mesh::crisscross(args.nx)?;
    let stride = run.effective_stride(&mesh, args.nt);

    let start = Instant::now();
    let traj = run_simulation(&problem.spec, args.nx, args.nt, &run)?;
    let wall = start.elapsed().as_secs_f64();

    let format = match args.format {
        FormatArg::Bin => DumpFormat::Binary,
        FormatArg::Text => DumpFormat::Text,
    };
    let snapshots = args.out.join("snapshots");
    write_trajectory(&traj, &snapshots, format)?;
    let mut mesh_dump = Vec::new();
    mesh.write_dump(&mut mesh_dump)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    output::write_file(&args.out.join("mesh.txt"), &String::from_utf8_lossy(&mesh_dump))?;

    let mut m = Manifest::default();
    m.push("command", "run");
    m.push("scheme", Scheme::from(args.scheme).tag());
    m.push("nx", args.nx);
    m.push("nt", args.nt);
    m.push("h", mesh.h());
    m.push("k", traj.k);
    m.push("vertices", mesh.num_vertices());
    m.push("triangles", mesh.num_triangles());
    m.push_problem(&problem.spec, problem.gamma);
    for line in &problem.provenance {
        m.push("note", line);
    }
    m.push_numerics(&stepper);
    m.push("snapshot_stride", stride);
    m.push("snapshots", traj.snapshots.len());
    m.push(
        "snapshot_format",
        if format == DumpFormat::Binary {
            "f64 little-endian"
        } else {
            "text"
        },
    );
    let max_picard = traj.picard_iterations.iter().copied().max().unwrap_or(0);
    m.push("max_picard_iterations", max_picard);
    m.push("wall_s", format!("{wall:.3}"));
    m.write(&args.out.join("manifest.txt"))?;

    let last = traj.snapshots.last().expect("at least the initial snapshot");
    let theta_max = last.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{} {} nx={} nt={} k={} t={} max theta={:.6} snapshots={} wall={:.2}s",
        problem.spec.name,
        Scheme::from(args.scheme).tag(),
        args.nx,
        args.nt,
        traj.k,
        last.t,
        theta_max,
        traj.snapshots.len(),
        wall
    );
    Ok(())
}

/// Study sizes used when flags are omitted.
pub fn default_study(preset: Preset, full: bool) -> (Vec<usize>, NtRule, ReferenceSpec) {
    use Scheme::*;
    match (preset, full) {
        (Preset::P1, false) => (
            vec![4, 8, 16],
            NtRule::HalfSquare,
            ReferenceSpec {
                scheme: ImplicitEuler,
                nx: 32,
                nt: 512,
            },
        ),
        (Preset::P1, true) => (
            vec![4, 8, 16, 32, 64],
            NtRule::HalfSquare,
            ReferenceSpec {
                scheme: ImplicitEuler,
                nx: 128,
                nt: 8192,
            },
        ),
        (Preset::P2, false) => (
            vec![4, 8, 16],
            NtRule::QuarterSquare,
            ReferenceSpec {
                scheme: SemiImplicit,
                nx: 32,
                nt: 256,
            },
        ),
        (Preset::P2, true) => (
            vec![4, 8, 16, 32],
            NtRule::QuarterSquare,
            ReferenceSpec {
                scheme: SemiImplicit,
                nx: 64,
                nt: 1024,
            },
        ),
        (_, false) => (
            vec![4, 8, 16],
            NtRule::HalfSquare,
            ReferenceSpec {
                scheme: SemiImplicit,
                nx: 32,
                nt: 512,
            },
        ),
        (_, true) => (
            vec![8, 16, 32, 64],
            NtRule::HalfSquare,
            ReferenceSpec {
                scheme: SemiImplicit,
                nx: 128,
                nt: 8192,
            },
        ),
    }
}

fn study_config(
    problem: &ResolvedProblem,
    grid: &GridArgs,
    scheme: Scheme,
    solver: &SolverArgs,
    require_reference: bool,
) -> Result<StudyConfig, CliError> {
    let r = &grid.reference;
    if require_reference && (r.ref_nx.is_none() || r.ref_nt.is_none()) {
        return Err(CliError::Usage("--ref-nx and --ref-nt are required".into()));
    }
    if grid.jobs == 0 {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    let (nx_list, nt_rule, reference) = default_study(problem.preset, grid.full);
    let nx_list = grid.nx_list.clone().unwrap_or(nx_list);
    let nt_rule = match &grid.nt_rule {
        Some(s) => NtRule::parse(s).ok_or_else(|| CliError::Usage(format!("invalid --nt-rule '{s}'")))?,
        None => nt_rule,
    };
    let reference = ReferenceSpec {
        scheme: r.ref_scheme.map(Scheme::from).unwrap_or(reference.scheme),
        nx: r.ref_nx.unwrap_or(reference.nx),
        nt: r.ref_nt.unwrap_or(reference.nt),
    };
    let mut cfg = StudyConfig::new(nx_list, nt_rule, scheme, reference);
    cfg.stepper = stepper_config(scheme, solver)?;
    cfg.jobs = grid.jobs;
    // Divisibility and size checks happen before any computation.
    cfg.test_grid().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn study_manifest(command: &str, problem: &ResolvedProblem, cfg: &StudyConfig) -> Manifest {
    let mut m = Manifest::default();
    m.push("command", command);
    m.push(
        "nx_list",
        cfg.nx_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    m.push("nt_rule", cfg.nt_rule.label());
    m.push("reference_scheme", cfg.reference.scheme.tag());
    m.push("reference_nx", cfg.reference.nx);
    m.push("reference_nt", cfg.reference.nt);
    m.push("reference_k", problem.spec.t_final / cfg.reference.nt as f64);
    m.push(
        "error_measure",
        "max over shared t_n (n >= 1) of norms on the finer mesh after exact P1 transfer",
    );
    m.push("strain_norm", "sqrt(int eps(u):eps(u)), Voigt weights diag(1, 1, 1/2)");
    m.push_problem(&problem.spec, problem.gamma);
    for line in &problem.provenance {
        m.push("note", line);
    }
    m.push_numerics(&cfg.stepper);
    m.push("jobs", cfg.jobs);
    m
}

fn plot_series(result: &StudyResult) -> Vec<Series> {
    let labels = [
        ("err_theta_l2", "theta L2"),
        ("err_phi_l2", "phi L2"),
        ("err_u_l2", "U L2"),
        ("err_theta_h1", "theta H1 semi"),
        ("err_phi_h1", "phi H1 semi"),
        ("err_dtu_V", "D_t U V"),
    ];
    labels
        .iter()
        .filter_map(|&(col, label)| {
            let pts: Vec<(f64, f64)> = result
                .rows
                .iter()
                .map(|r| (r.h, output::column(r, col)))
                .filter(|p| p.1 > 0.0)
                .collect();
            (!pts.is_empty()).then(|| Series {
                label: label.to_string(),
                h: pts.iter().map(|p| p.0).collect(),
                err: pts.iter().map(|p| p.1).collect(),
            })
        })
        .collect()
}

/// All-zero errors have no place on a log axis; skip the plot in that case.
fn plot_if_any(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    if series.is_empty() {
        eprintln!("note: every error is zero, {} not written", path.display());
        return Ok(());
    }
    write_svg_plot(path, title, series)
}

fn write_study_outputs(dir: &Path, result: &StudyResult, cfg: &StudyConfig, suffix: &str) -> Result<(), CliError> {
    output::write_file(&dir.join(format!("errors{suffix}.csv")), &output::errors_csv(result))?;
    output::write_file(&dir.join(format!("orders{suffix}.csv")), &output::orders_csv(result)?)?;
    output::write_file(
        &dir.join(format!("timings{suffix}.csv")),
        &output::timings_csv(result, (cfg.reference.nx, cfg.reference.nt)),
    )?;
    Ok(())
}

pub fn cmd_converge(args: &StudyArgs) -> Result<(), CliError> {
    let problem = resolve_problem(&args.problem)?;
    let cfg = study_config(&problem, &args.grid, args.scheme.into(), &args.solver, false)?;
    let start = Instant::now();
    let result = study::run_study(&problem.spec, &cfg)?;
    let wall = start.elapsed().as_secs_f64();

    let out = &args.grid.out;
    write_study_outputs(out, &result, &cfg, "")?;
    if !args.grid.no_plot {
        let title = format!(
            "{} {} vs {} reference",
            problem.spec.name,
            cfg.scheme.tag(),
            cfg.reference.scheme.tag()
        );
        plot_if_any(&out.join("plots").join("errors.svg"), &title, &plot_series(&result))?;
    }
    let mut m = study_manifest("converge", &problem, &cfg);
    m.push("scheme", cfg.scheme.tag());
    m.push("wall_s", format!("{wall:.3}"));
    m.write(&out.join("manifest.txt"))?;
    output::print_table(&format!("{} {} errors", problem.spec.name, cfg.scheme.tag()), &result);
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let problem = resolve_problem(&args.problem)?;
    let schemes: [Scheme; 2] = match args.schemes.as_slice() {
        [a, b] => [Scheme::from(*a), Scheme::from(*b)],
        _ => return Err(CliError::Usage("--schemes takes exactly two schemes".into())),
    };
    let mut grid = args.grid.clone();
    if grid.reference.ref_scheme.is_none() {
        grid.reference.ref_scheme = Some(SchemeArg::Ie);
    }
    let cfg = study_config(&problem, &grid, schemes[0], &args.solver, true)?;
    let start = Instant::now();
    let (a, b) = study::compare_schemes(&problem.spec, &cfg, schemes)?;
    let wall = start.elapsed().as_secs_f64();

    let out = &args.grid.out;
    let tags = [schemes[0].tag(), schemes[1].tag()];
    let suffix = |i: usize| {
        if tags[0] == tags[1] {
            format!("_{}_{}", tags[i], i + 1)
        } else {
            format!("_{}", tags[i])
        }
    };
    write_study_outputs(out, &a, &cfg, &suffix(0))?;
    write_study_outputs(out, &b, &cfg, &suffix(1))?;
    output::write_file(&out.join("compare.csv"), &output::compare_csv(&a, &b, tags))?;
    if !args.grid.no_plot {
        for (i, r) in [&a, &b].into_iter().enumerate() {
            let title = format!(
                "{} {} vs {} reference",
                problem.spec.name,
                tags[i],
                cfg.reference.scheme.tag()
            );
            plot_if_any(
                &out.join("plots").join(format!("errors{}.svg", suffix(i))),
                &title,
                &plot_series(r),
            )?;
        }
    }
    let mut m = study_manifest("compare", &problem, &cfg);
    m.push("schemes", format!("{},{}", tags[0], tags[1]));
    m.push("wall_s", format!("{wall:.3}"));
    m.write(&out.join("manifest.txt"))?;

    output::print_table(&format!("{} {} errors", problem.spec.name, tags[0]), &a);
    output::print_table(&format!("{} {} errors", problem.spec.name, tags[1]), &b);
    println!("ratio {}/{}", tags[0], tags[1]);
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "nx", "theta_l2", "phi_l2", "u_l2", "theta_h1", "phi_h1"
    );
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let r = |c: &str| output::ratio(output::column(ra, c), output::column(rb, c));
        println!(
            "{:>5} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            ra.nx,
            r("err_theta_l2"),
            r("err_phi_l2"),
            r("err_u_l2"),
            r("err_theta_h1"),
            r("err_phi_h1")
        );
    }
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if !(args.theta_min < args.theta_max) || args.samples < 2 {
        return Err(CliError::Usage(
            "need --theta-min < --theta-max and at least 2 samples".into(),
        ));
    }
    let problem = resolve_problem(&args.problem)?;
    let range = SampleRange {
        lo: args.theta_min,
        hi: args.theta_max,
        samples: args.samples,
    };
    let report = validate_assumptions(&problem.spec, range)?;
    println!("problem: {}", problem.spec.name);
    println!("viscosity eigenvalues: {:?}", report.viscosity_eigenvalues);
    println!("elasticity eigenvalues: {:?}", report.elasticity_eigenvalues);
    println!("conductivity: {}", problem.spec.material.conductivity);
    println!(
        "declared bounds: [{}, {}]",
        report.sigma_bounds.0, report.sigma_bounds.1
    );
    println!(
        "sampled range: [{}, {}]",
        report.sigma_sampled.0, report.sigma_sampled.1
    );
    println!("derivative bound: {}", report.sigma_derivative_bound);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("ok");
    Ok(())
}
