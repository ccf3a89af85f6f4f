//! Self-convergence studies against a reference run.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{max_error_over_time, observed_order, ErrorReport};
use crate::model::ProblemSpec;
use crate::stepper::{run_simulation, RunConfig, Scheme, StepperConfig, Trajectory};

/// How the number of time steps follows from `nx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NtRule {
    /// `nt = nx^2 / 2`
    HalfSquare,
    /// `nt = nx^2 / 4`
    QuarterSquare,
    /// One entry per `nx`.
    Explicit(Vec<usize>),
}

impl NtRule {
    pub fn parse(s: &str) -> Option<NtRule> {
        match s.trim() {
            "nx^2/2" | "nx2/2" | "half" => Some(NtRule::HalfSquare),
            "nx^2/4" | "nx2/4" | "quarter" => Some(NtRule::QuarterSquare),
            list => list
                .split(',')
                .map(|v| v.trim().parse::<usize>().ok())
                .collect::<Option<Vec<_>>>()
                .map(NtRule::Explicit),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NtRule::HalfSquare => "nx^2/2".into(),
            NtRule::QuarterSquare => "nx^2/4".into(),
            NtRule::Explicit(v) => v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        }
    }

    fn nt_for(&self, nx: usize, index: usize) -> Result<usize> {
        let nt = match self {
            NtRule::HalfSquare => nx * nx / 2,
            NtRule::QuarterSquare => nx * nx / 4,
            NtRule::Explicit(v) => *v
                .get(index)
                .ok_or_else(|| Error::InvalidArgument(format!("explicit nt list has no entry for nx = {nx}")))?,
        };
        if nt == 0 {
            return Err(Error::InvalidArgument(format!(
                "nt rule {} gives zero steps at nx = {nx}",
                self.label()
            )));
        }
        Ok(nt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSpec {
    pub scheme: Scheme,
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub nx_list: Vec<usize>,
    pub nt_rule: NtRule,
    pub scheme: Scheme,
    pub reference: ReferenceSpec,
    pub stepper: StepperConfig,
    /// Worker threads for the test runs; the reference always runs first.
    pub jobs: usize,
}

impl StudyConfig {
    pub fn new(nx_list: Vec<usize>, nt_rule: NtRule, scheme: Scheme, reference: ReferenceSpec) -> StudyConfig {
        StudyConfig {
            nx_list,
            nt_rule,
            scheme,
            reference,
            stepper: StepperConfig::default(),
            jobs: 1,
        }
    }

    /// `(nx, nt)` of every test run after checking divisibility against the
    /// reference grid.
    pub fn test_grid(&self) -> Result<Vec<(usize, usize)>> {
        if self.nx_list.is_empty() {
            return Err(Error::InvalidArgument("empty nx list".into()));
        }
        let r = self.reference;
        if r.nx == 0 || r.nt == 0 {
            return Err(Error::InvalidArgument("reference nx and nt must be positive".into()));
        }
        let mut grid = Vec::with_capacity(self.nx_list.len());
        for (i, &nx) in self.nx_list.iter().enumerate() {
            if nx == 0 {
                return Err(Error::InvalidArgument("nx must be positive".into()));
            }
            let nt = self.nt_rule.nt_for(nx, i)?;
            if r.nx % nx != 0 {
                return Err(Error::InvalidArgument(format!(
                    "reference nx = {} not divisible by nx = {nx}",
                    r.nx
                )));
            }
            if r.nt % nt != 0 {
                return Err(Error::InvalidArgument(format!(
                    "reference nt = {} not divisible by nt = {nt}",
                    r.nt
                )));
            }
            grid.push((nx, nt));
        }
        Ok(grid)
    }

    /// Coarsest reference snapshot stride that still covers every test time.
    pub fn reference_stride(&self) -> Result<usize> {
        let grid = self.test_grid()?;
        let lcm = grid.iter().fold(1usize, |acc, &(_, nt)| acc / gcd(acc, nt) * nt);
        Ok(self.reference.nt / lcm)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub nx: usize,
    pub h: f64,
    pub nt: usize,
    pub k: f64,
    pub report: ErrorReport,
    pub wall_seconds: f64,
    pub max_picard_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    pub reference_wall_seconds: f64,
    pub reference_max_picard_iterations: usize,
}

impl StudyResult {
    /// Observed orders between consecutive rows for one error column.
    pub fn orders(&self, column: &str) -> Result<Vec<f64>> {
        let errors: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.report.columns().iter().find(|(n, _)| *n == column).map(|c| c.1))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown error column {column}")))?;
        let hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        observed_order(&errors, &hs)
    }
}

/// Runs the reference once at the stride the test grid needs.
pub fn run_reference(spec: &ProblemSpec, config: &StudyConfig) -> Result<(Trajectory, f64)> {
    let stride = config.reference_stride()?;
    let run = RunConfig {
        stepper: StepperConfig {
            scheme: config.reference.scheme,
            ..config.stepper
        },
        stride: Some(stride),
        ..Default::default()
    };
    let start = Instant::now();
    let traj = run_simulation(spec, config.reference.nx, config.reference.nt, &run)?;
    Ok((traj, start.elapsed().as_secs_f64()))
}

/// Runs every test configuration of `config` against an existing reference.
pub fn run_against(
    spec: &ProblemSpec,
    config: &StudyConfig,
    scheme: Scheme,
    reference: &Trajectory,
) -> Result<Vec<StudyRow>> {
    let grid = config.test_grid()?;
    let run_one = |&(nx, nt): &(usize, usize)| -> Result<StudyRow> {
        let run = RunConfig {
            stepper: StepperConfig {
                scheme,
                ..config.stepper
            },
            stride: Some(1),
            ..Default::default()
        };
        let start = Instant::now();
        let traj = run_simulation(spec, nx, nt, &run)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let report = max_error_over_time(&traj, reference)?;
        Ok(StudyRow {
            nx,
            h: 1.0 / nx as f64,
            nt,
            k: traj.k,
            report,
            wall_seconds,
            max_picard_iterations: traj.picard_iterations.iter().copied().max().unwrap_or(0),
        })
    };
    if config.jobs <= 1 {
        grid.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(run_one).collect())
    }
}

/// Reference run followed by all test runs.
pub fn run_study(spec: &ProblemSpec, config: &StudyConfig) -> Result<StudyResult> {
    config.test_grid()?;
    let (reference, reference_wall_seconds) = run_reference(spec, config)?;
    let rows = run_against(spec, config, config.scheme, &reference)?;
    Ok(StudyResult {
        rows,
        reference_wall_seconds,
        reference_max_picard_iterations: reference.picard_iterations.iter().copied().max().unwrap_or(0),
    })
}

/// Runs both schemes against one shared reference.
pub fn compare_schemes(
    spec: &ProblemSpec,
    config: &StudyConfig,
    schemes: [Scheme; 2],
) -> Result<(StudyResult, StudyResult)> {
    config.test_grid()?;
    let (reference, reference_wall_seconds) = run_reference(spec, config)?;
    let ref_picard = reference.picard_iterations.iter().copied().max().unwrap_or(0);
    let wrap = |rows| StudyResult {
        rows,
        reference_wall_seconds,
        reference_max_picard_iterations: ref_picard,
    };
    let a = run_against(spec, config, schemes[0], &reference)?;
    let b = if schemes[1] == schemes[0] {
        a.clone()
    } else {
        run_against(spec, config, schemes[1], &reference)?
    };
    Ok((wrap(a), wrap(b)))
}
