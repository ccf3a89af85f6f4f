//! Manifest and CSV writers.

use std::fmt::Write as _;
use std::path::Path;

use thermistor_fem::study::{StudyResult, StudyRow};
use thermistor_fem::{CouplingTensor, ProblemSpec, StepperConfig, VoigtTensor};

use crate::CliError;

/// Error columns of `errors.csv`, in file order.
pub const ERROR_COLUMNS: [&str; 9] = [
    "err_theta_l2",
    "err_theta_h1",
    "err_phi_l2",
    "err_phi_h1",
    "err_u_l2",
    "err_dtu_l2",
    "err_dtu_V",
    "err_theta_h1_full",
    "err_phi_h1_full",
];

pub const QUADRATURE: &str = "3-point edge-midpoint rule (exact for quadratics), consistent mass";
pub const CONDUCTIVITY_SAMPLING: &str = "element average of sigma(theta) at the three edge midpoints";
pub const LINEAR_SOLVER: &str = "conjugate gradients, Jacobi preconditioner, true-residual check";

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failure(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Ordered `key = value` lines.
#[derive(Debug, Default, Clone)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.render())
    }

    pub fn push_problem(&mut self, spec: &ProblemSpec, gamma: f64) {
        let m = &spec.material;
        self.push("problem", &spec.name);
        self.push("gamma", gamma);
        self.push("t_final", spec.t_final);
        self.push("conductivity", m.conductivity);
        let (lo, hi) = m.conductivity.bounds();
        self.push("conductivity_bounds", format!("[{lo}, {hi}]"));
        self.push("viscosity_A", voigt(&m.viscosity));
        self.push("elasticity_B", voigt(&m.elasticity));
        self.push("expansion_M", coupling(&m.expansion));
        self.push("density", m.density);
        self.push("heat_capacity", m.heat_capacity);
        self.push("thermal_conductivity", m.thermal_conductivity);
        self.push("ambient_temperature", m.ambient_temperature);
        self.push("heat_source", if spec.heat_source.is_some() { "yes" } else { "none" });
    }

    pub fn push_numerics(&mut self, cfg: &StepperConfig) {
        self.push("quadrature", QUADRATURE);
        self.push("conductivity_sampling", CONDUCTIVITY_SAMPLING);
        self.push("linear_solver", LINEAR_SOLVER);
        self.push("solver_rel_tol", format!("{:e}", cfg.solver_tol));
        self.push("picard_tol", format!("{:e}", cfg.picard_tol));
        self.push("picard_max_iter", cfg.picard_max_iter);
        self.push("picard_min_relaxation", cfg.picard_min_relaxation);
        self.push("initial_velocity_point", "U^-1 = U^0 - k V^0");
        self.push("initial_potential", "solved from sigma(Theta^0) and phi_b(0)");
    }
}

pub fn voigt(t: &VoigtTensor) -> String {
    let rows: Vec<String> = t
        .entries()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn coupling(t: &CouplingTensor) -> String {
    let rows: Vec<String> = t
        .entries()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn column(row: &StudyRow, name: &str) -> f64 {
    row.report
        .columns()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|c| c.1)
        .expect("known error column")
}

fn fmt_err(v: f64) -> String {
    format!("{v:.12e}")
}

/// `errors.csv`: one row per test resolution. Wall times live in
/// `timings.csv` so that this file is reproducible byte for byte.
pub fn errors_csv(result: &StudyResult) -> String {
    let mut s = String::from("nx,h,nt,k");
    for c in ERROR_COLUMNS {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for r in &result.rows {
        write!(s, "{},{},{},{}", r.nx, r.h, r.nt, r.k).unwrap();
        for c in ERROR_COLUMNS {
            write!(s, ",{}", fmt_err(column(r, c))).unwrap();
        }
        s.push('\n');
    }
    s
}

/// `orders.csv`: observed orders between consecutive resolutions.
pub fn orders_csv(result: &StudyResult) -> Result<String, CliError> {
    let mut s = String::from("nx_coarse,nx_fine");
    for c in ERROR_COLUMNS {
        write!(s, ",order_{}", c.trim_start_matches("err_")).unwrap();
    }
    s.push('\n');
    let orders: Vec<Vec<f64>> = ERROR_COLUMNS.iter().map(|c| pair_orders(result, c)).collect();
    for (i, pair) in result.rows.windows(2).enumerate() {
        write!(s, "{},{}", pair[0].nx, pair[1].nx).unwrap();
        for o in &orders {
            write!(s, ",{:.4}", o[i]).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

/// Orders between consecutive rows; NaN where an error is zero.
pub fn pair_orders(result: &StudyResult, name: &str) -> Vec<f64> {
    result
        .rows
        .windows(2)
        .map(|p| {
            let (e0, e1) = (column(&p[0], name), column(&p[1], name));
            if e0 > 0.0 && e1 > 0.0 {
                (e0 / e1).ln() / (p[0].h / p[1].h).ln()
            } else {
                f64::NAN
            }
        })
        .collect()
}

pub fn timings_csv(result: &StudyResult, reference: (usize, usize)) -> String {
    let mut s = String::from("run,nx,nt,wall_s,max_picard_iterations\n");
    writeln!(
        s,
        "reference,{},{},{:.3},{}",
        reference.0, reference.1, result.reference_wall_seconds, result.reference_max_picard_iterations
    )
    .unwrap();
    for r in &result.rows {
        writeln!(
            s,
            "test,{},{},{:.3},{}",
            r.nx, r.nt, r.wall_seconds, r.max_picard_iterations
        )
        .unwrap();
    }
    s
}

/// `compare.csv`: errors of both schemes and their ratios `a / b`.
pub fn compare_csv(a: &StudyResult, b: &StudyResult, tags: [&str; 2]) -> String {
    let (ta, tb) = if tags[0] == tags[1] {
        (format!("{}_1", tags[0]), format!("{}_2", tags[1]))
    } else {
        (tags[0].to_string(), tags[1].to_string())
    };
    let mut s = String::from("nx,h,nt,k");
    for c in ERROR_COLUMNS {
        write!(s, ",{c}_{ta},{c}_{tb},ratio_{}", c.trim_start_matches("err_")).unwrap();
    }
    s.push('\n');
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        write!(s, "{},{},{},{}", ra.nx, ra.h, ra.nt, ra.k).unwrap();
        for c in ERROR_COLUMNS {
            let (ea, eb) = (column(ra, c), column(rb, c));
            write!(s, ",{},{},{:.6}", fmt_err(ea), fmt_err(eb), ratio(ea, eb)).unwrap();
        }
        s.push('\n');
    }
    s
}

/// `a / b`, with equal values (including two zeros) giving exactly 1.
pub fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

pub fn print_table(title: &str, result: &StudyResult) {
    println!("{title}");
    println!(
        "{:>5} {:>6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "nx", "nt", "theta_l2", "theta_h1", "phi_l2", "phi_h1", "u_l2", "dtu_V"
    );
    for r in &result.rows {
        println!(
            "{:>5} {:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.nx,
            r.nt,
            column(r, "err_theta_l2"),
            column(r, "err_theta_h1"),
            column(r, "err_phi_l2"),
            column(r, "err_phi_h1"),
            column(r, "err_u_l2"),
            column(r, "err_dtu_V"),
        );
    }
    let l2 = ["err_theta_l2", "err_phi_l2", "err_u_l2"];
    for pair in 0..result.rows.len().saturating_sub(1) {
        let o: Vec<String> = l2
            .iter()
            .map(|c| format!("{:.2}", pair_orders(result, c)[pair]))
            .collect();
        println!(
            "order {}->{}: theta {} phi {} u {}",
            result.rows[pair].nx,
            result.rows[pair + 1].nx,
            o[0],
            o[1],
            o[2]
        );
    }
}
