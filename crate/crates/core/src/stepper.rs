//! Time stepping for the coupled temperature / potential / displacement system.
//!
//! The semi-implicit scheme lags the Joule heating and the thermal coupling
//! term by one step, which decouples the three equations into a temperature
//! solve, a potential solve with the new conductivity and a displacement
//! solve with the new temperature. The implicit Euler scheme solves the
//! fully coupled system at every step by Picard iteration.

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::{self, Assembler};
use crate::mesh::Mesh;
use crate::model::ProblemSpec;
use crate::sparse::{dot, solve_spd_from, LinearSystem, SparseMatrix, DEFAULT_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SemiImplicit,
    ImplicitEuler,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::SemiImplicit => "semi",
            Scheme::ImplicitEuler => "ie",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Scheme> {
        match tag {
            "semi" => Some(Scheme::SemiImplicit),
            "ie" => Some(Scheme::ImplicitEuler),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Relative L2 increment at which Picard iteration stops.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Lower bound for the Aitken relaxation factor of the Picard loop;
    /// 1 disables relaxation.
    pub picard_min_relaxation: f64,
    pub solver_tol: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::SemiImplicit,
            picard_tol: 1e-8,
            picard_max_iter: 50,
            picard_min_relaxation: 1.0 / 64.0,
            solver_tol: DEFAULT_REL_TOL,
        }
    }
}

impl StepperConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        StepperConfig {
            scheme,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.picard_max_iter == 0 {
            return Err(Error::InvalidArgument("picard_max_iter must be at least 1".into()));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "picard_tol {} must be positive",
                self.picard_tol
            )));
        }
        if !(self.picard_min_relaxation > 0.0 && self.picard_min_relaxation <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "picard_min_relaxation {} must lie in (0, 1]",
                self.picard_min_relaxation
            )));
        }
        Ok(())
    }
}

/// Discrete state at `t_n`. `u_prev` holds `U^{n-1}`; at `n = 0` it is the
/// fictitious point `U^0 - k V^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub n: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
}

impl State {
    /// Backward difference `(U^n - U^{n-1}) / k`.
    pub fn velocity(&self, k: f64) -> Vec<f64> {
        self.u.iter().zip(&self.u_prev).map(|(a, b)| (a - b) / k).collect()
    }
}

/// Operators that stay fixed during a run, plus the data needed to rebuild
/// the conductivity weighted potential matrix.
pub struct Operators<'m> {
    mesh: &'m Mesh,
    assembler: Assembler<'m>,
    spec: ProblemSpec,
    k: f64,
    mass: SparseMatrix,
    vector_mass: SparseMatrix,
    viscosity: SparseMatrix,
    coupling: SparseMatrix,
    /// `rho c M / k + kappa K`, constrained.
    heat_matrix: SparseMatrix,
    /// `rho M_v / k^2 + K_A / k + K_B`, constrained.
    displacement_matrix: SparseMatrix,
    scalar_boundary: Vec<usize>,
    vector_boundary: Vec<usize>,
    solver_tol: f64,
}

impl<'m> Operators<'m> {
    pub fn new(mesh: &'m Mesh, spec: &ProblemSpec, k: f64, solver_tol: f64) -> Result<Operators<'m>> {
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {k} must be positive")));
        }
        let mat = &spec.material;
        let assembler = Assembler::new(mesh);
        let mass = assembler.mass();
        let stiffness = assembler.stiffness(&vec![1.0; mesh.num_triangles()])?;
        let vector_mass = assembler.vector_mass();
        let viscosity = assembler.elasticity(&mat.viscosity);
        let elasticity = assembler.elasticity(&mat.elasticity);
        let coupling = fem::coupling_matrix(mesh, &mat.expansion);

        let rho_c = mat.density * mat.heat_capacity;
        let heat = mass.linear_combination(rho_c / k, &stiffness, mat.thermal_conductivity)?;
        let dyn_part = vector_mass.linear_combination(mat.density / (k * k), &viscosity, 1.0 / k)?;
        let displacement = dyn_part.linear_combination(1.0, &elasticity, 1.0)?;

        let scalar_boundary = mesh.boundary_vertices().to_vec();
        let vector_boundary: Vec<usize> = scalar_boundary.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect();
        let constrain = |m: SparseMatrix, dofs: &[usize]| -> Result<SparseMatrix> {
            let n = m.nrows();
            let zeros: Vec<(usize, f64)> = dofs.iter().map(|&d| (d, 0.0)).collect();
            Ok(LinearSystem::new(m, vec![0.0; n])?.apply_dirichlet(&zeros)?.matrix)
        };
        let heat_matrix = constrain(heat, &scalar_boundary)?;
        let displacement_matrix = constrain(displacement, &vector_boundary)?;

        Ok(Operators {
            mesh,
            assembler,
            spec: spec.clone(),
            k,
            mass,
            vector_mass,
            viscosity,
            coupling,
            heat_matrix,
            displacement_matrix,
            scalar_boundary,
            vector_boundary,
            solver_tol,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn vector_mass(&self) -> &SparseMatrix {
        &self.vector_mass
    }

    pub fn coupling(&self) -> &SparseMatrix {
        &self.coupling
    }

    /// Interpolated initial data with `Phi^0` solved from `sigma(Theta^0)`.
    pub fn initial_state(&self) -> Result<State> {
        let spec = &self.spec;
        let theta = fem::interpolate_scalar(self.mesh, |x, y| (spec.initial_temperature)(x, y));
        let u = fem::interpolate_vector(self.mesh, |x, y| (spec.initial_displacement)(x, y));
        let v0 = fem::interpolate_vector(self.mesh, |x, y| (spec.initial_velocity)(x, y));
        let u_prev = u.iter().zip(&v0).map(|(a, v)| a - self.k * v).collect();
        let guess = fem::interpolate_scalar(self.mesh, |x, y| (spec.boundary_potential)(0.0, x, y));
        let phi = self.solve_potential(&theta, 0.0, guess)?;
        Ok(State {
            n: 0,
            t: 0.0,
            theta,
            phi,
            u,
            u_prev,
        })
    }

    /// Temperature at `t` from `Theta^{n-1}`, with the Joule heating and the
    /// coupling velocity taken from the given (possibly lagged) fields.
    pub fn solve_temperature(
        &self,
        theta_prev: &[f64],
        theta_source: &[f64],
        phi_source: &[f64],
        velocity: &[f64],
        t: f64,
        guess: Vec<f64>,
    ) -> Result<Vec<f64>> {
        let mat = &self.spec.material;
        let rho_c = mat.density * mat.heat_capacity;
        let sigma = mat.conductivity;
        let mut rhs = self.mass.matvec(theta_prev);
        let joule = fem::joule_load(self.mesh, theta_source, phi_source, |s| sigma.eval(s));
        let coupling = self.coupling.matvec(velocity);
        for i in 0..rhs.len() {
            rhs[i] = rho_c / self.k * rhs[i] + joule[i] - mat.ambient_temperature * coupling[i];
        }
        if let Some(q) = &self.spec.heat_source {
            let load = fem::scalar_load(self.mesh, |x, y| q(t, x, y));
            for (r, l) in rhs.iter_mut().zip(load) {
                *r += l;
            }
        }
        for &b in &self.scalar_boundary {
            rhs[b] = 0.0;
        }
        self.solve(&self.heat_matrix, &rhs, guess)
    }

    /// Potential with conductivity `sigma(theta)` and boundary data at `t`.
    pub fn solve_potential(&self, theta: &[f64], t: f64, guess: Vec<f64>) -> Result<Vec<f64>> {
        let sigma = self.spec.material.conductivity;
        let weights = self.assembler.conductivity_weights(theta, |s| sigma.eval(s));
        let matrix = self.assembler.stiffness(&weights)?;
        let g = &self.spec.boundary_potential;
        let bc = self.mesh.boundary_values(|x, y| g(t, x, y));
        let system = LinearSystem::new(matrix, vec![0.0; self.mesh.num_vertices()])?.apply_dirichlet(&bc)?;
        self.solve(&system.matrix, &system.rhs, guess)
    }

    /// Displacement at `t` from `U^{n-1}`, `U^{n-2}` and the temperature.
    pub fn solve_displacement(
        &self,
        u1: &[f64],
        u2: &[f64],
        theta: &[f64],
        t: f64,
        guess: Vec<f64>,
    ) -> Result<Vec<f64>> {
        let rho = self.spec.material.density;
        let k = self.k;
        let extrap: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| 2.0 * a - b).collect();
        let inertia = self.vector_mass.matvec(&extrap);
        let visc = self.viscosity.matvec(u1);
        let thermal = self.coupling.matvec_transpose(theta);
        let f = &self.spec.body_force;
        let force = fem::load_vector(self.mesh, |x, y| f(t, x, y));
        let mut rhs: Vec<f64> = (0..inertia.len())
            .map(|i| rho / (k * k) * inertia[i] + visc[i] / k + thermal[i] + force[i])
            .collect();
        for &b in &self.vector_boundary {
            rhs[b] = 0.0;
        }
        self.solve(&self.displacement_matrix, &rhs, guess)
    }

    fn solve(&self, matrix: &SparseMatrix, rhs: &[f64], mut guess: Vec<f64>) -> Result<Vec<f64>> {
        let stats = solve_spd_from(matrix, rhs, &mut guess, self.solver_tol)?;
        debug_assert!(stats.relative_residual <= self.solver_tol);
        Ok(guess)
    }

    fn l2(&self, matrix: &SparseMatrix, x: &[f64]) -> f64 {
        dot(x, &matrix.matvec(x)).max(0.0).sqrt()
    }

    /// Time of step `n` on a grid of `nt` steps.
    pub fn time_of(&self, n: usize, nt: usize) -> f64 {
        time_of(self.spec.t_final, n, nt)
    }
}

/// `t_n = T n / nt`, so `t_nt == T` exactly.
pub fn time_of(t_final: f64, n: usize, nt: usize) -> f64 {
    t_final * n as f64 / nt as f64
}

/// One step of the decoupled scheme.
pub fn semi_implicit_step(state: &State, ops: &Operators<'_>, t: f64) -> Result<State> {
    let velocity = state.velocity(ops.k);
    let theta = ops.solve_temperature(
        &state.theta,
        &state.theta,
        &state.phi,
        &velocity,
        t,
        state.theta.clone(),
    )?;
    let phi = ops.solve_potential(&theta, t, state.phi.clone())?;
    let u = ops.solve_displacement(&state.u, &state.u_prev, &theta, t, state.u.clone())?;
    Ok(State {
        n: state.n + 1,
        t,
        theta,
        phi,
        u,
        u_prev: state.u.clone(),
    })
}

/// One implicit Euler step; returns the new state and the number of Picard
/// iterations used.
pub fn implicit_euler_step(
    state: &State,
    ops: &Operators<'_>,
    t: f64,
    config: &StepperConfig,
) -> Result<(State, usize)> {
    let mut theta = state.theta.clone();
    let mut phi = state.phi.clone();
    let mut u = state.u.clone();
    let mut increment = f64::INFINITY;
    let mut omega: f64 = 1.0;
    let mut last_residual: Option<Vec<f64>> = None;
    for iteration in 1..=config.picard_max_iter {
        let velocity: Vec<f64> = u.iter().zip(&state.u).map(|(a, b)| (a - b) / ops.k).collect();
        let theta_new = ops.solve_temperature(&state.theta, &theta, &phi, &velocity, t, theta.clone())?;
        let phi_new = ops.solve_potential(&theta_new, t, phi.clone())?;
        let u_new = ops.solve_displacement(&state.u, &state.u_prev, &theta_new, t, u.clone())?;

        increment = relative_increment(ops, &ops.mass, &theta, &theta_new)
            .max(relative_increment(ops, &ops.mass, &phi, &phi_new))
            .max(relative_increment(ops, &ops.vector_mass, &u, &u_new));
        if increment <= config.picard_tol {
            let next = State {
                n: state.n + 1,
                t,
                theta: theta_new,
                phi: phi_new,
                u: u_new,
                u_prev: state.u.clone(),
            };
            return Ok((next, iteration));
        }
        // Aitken relaxation on the stacked fixed-point residual.
        let residual: Vec<f64> = [(&theta, &theta_new), (&phi, &phi_new), (&u, &u_new)]
            .iter()
            .flat_map(|(old, new)| old.iter().zip(new.iter()).map(|(a, b)| b - a))
            .collect();
        if let Some(prev) = &last_residual {
            let diff: Vec<f64> = residual.iter().zip(prev).map(|(a, b)| a - b).collect();
            let dd = dot(&diff, &diff);
            if dd > 0.0 {
                omega = (-omega * dot(prev, &diff) / dd).clamp(config.picard_min_relaxation, 1.0);
            }
        }
        last_residual = Some(residual);
        relax(&mut theta, &theta_new, omega);
        relax(&mut phi, &phi_new, omega);
        relax(&mut u, &u_new, omega);
    }
    Err(Error::PicardDivergence {
        iterations: config.picard_max_iter,
        increment,
    })
}

fn relax(x: &mut [f64], target: &[f64], omega: f64) {
    if omega == 1.0 {
        x.copy_from_slice(target);
    } else {
        for (a, b) in x.iter_mut().zip(target) {
            *a += omega * (b - *a);
        }
    }
}

fn relative_increment(ops: &Operators<'_>, m: &SparseMatrix, old: &[f64], new: &[f64]) -> f64 {
    let diff: Vec<f64> = old.iter().zip(new).map(|(a, b)| b - a).collect();
    let d = ops.l2(m, &diff);
    if d == 0.0 {
        return 0.0;
    }
    let scale = ops.l2(m, new);
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Stored fields at one time level. `velocity` is `D_t U^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Snapshot {
    fn from_state(state: &State, k: f64) -> Snapshot {
        Snapshot {
            n: state.n,
            t: state.t,
            theta: state.theta.clone(),
            phi: state.phi.clone(),
            u: state.u.clone(),
            velocity: state.velocity(k),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub nt: usize,
    pub t_final: f64,
    pub k: f64,
    pub scheme: Scheme,
    pub snapshots: Vec<Snapshot>,
    /// Picard iterations per step (implicit Euler only).
    pub picard_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn nx(&self) -> usize {
        self.mesh.nx()
    }

    pub fn snapshot(&self, n: usize) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&n, |s| s.n)
            .ok()
            .map(|i| &self.snapshots[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub stepper: StepperConfig,
    /// Store every `stride`-th step; `None` picks 1 unless the memory budget
    /// forces a coarser stride.
    pub stride: Option<usize>,
    pub memory_budget_bytes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stepper: StepperConfig::default(),
            stride: None,
            memory_budget_bytes: 2 << 30,
        }
    }
}

impl RunConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        RunConfig {
            stepper: StepperConfig::with_scheme(scheme),
            ..Default::default()
        }
    }

    /// Effective snapshot stride for a run on `mesh` with `nt` steps.
    pub fn effective_stride(&self, mesh: &Mesh, nt: usize) -> usize {
        if let Some(s) = self.stride {
            return s.max(1);
        }
        let per_snapshot = 6 * mesh.num_vertices() * std::mem::size_of::<f64>();
        let mut stride = 1;
        while (nt / stride + 2) * per_snapshot > self.memory_budget_bytes && stride < nt {
            stride += 1;
            while nt % stride != 0 && stride < nt {
                stride += 1;
            }
        }
        stride
    }
}

/// Advances `nt` steps on `mesh`, calling `observer` with every state
/// (including the initial one).
pub fn simulate<F>(
    spec: &ProblemSpec,
    mesh: &Mesh,
    nt: usize,
    config: &StepperConfig,
    mut observer: F,
) -> Result<Vec<usize>>
where
    F: FnMut(&State, f64),
{
    if nt == 0 {
        return Err(Error::InvalidArgument("nt must be at least 1".into()));
    }
    config.validate()?;
    let k = spec.t_final / nt as f64;
    let ops = Operators::new(mesh, spec, k, config.solver_tol)?;
    let mut state = ops.initial_state()?;
    observer(&state, k);
    let mut picard = Vec::new();
    for n in 1..=nt {
        let t = ops.time_of(n, nt);
        state = match config.scheme {
            Scheme::SemiImplicit => semi_implicit_step(&state, &ops, t).map_err(|e| e.at_step(n))?,
            Scheme::ImplicitEuler => {
                let (s, it) = implicit_euler_step(&state, &ops, t, config).map_err(|e| e.at_step(n))?;
                picard.push(it);
                s
            }
        };
        observer(&state, k);
    }
    Ok(picard)
}

/// Builds the mesh, runs `nt` steps and records snapshots at the configured
/// stride (plus the final state).
pub fn run_simulation(spec: &ProblemSpec, nx: usize, nt: usize, config: &RunConfig) -> Result<Trajectory> {
    let mesh = Mesh::crisscross(nx)?;
    if nt == 0 {
        return Err(Error::InvalidArgument("nt must be at least 1".into()));
    }
    let stride = config.effective_stride(&mesh, nt);
    let mut snapshots = Vec::new();
    let picard = simulate(spec, &mesh, nt, &config.stepper, |state, k| {
        if state.n % stride == 0 || state.n == nt {
            snapshots.push(Snapshot::from_state(state, k));
        }
    })?;
    Ok(Trajectory {
        mesh,
        nt,
        t_final: spec.t_final,
        k: spec.t_final / nt as f64,
        scheme: config.stepper.scheme,
        snapshots,
        picard_iterations: picard,
    })
}

/// Static elastic response `K_B U = F(t)` with zero boundary displacement.
pub fn static_displacement(mesh: &Mesh, spec: &ProblemSpec, t: f64, solver_tol: f64) -> Result<Vec<f64>> {
    let k = fem::elasticity_matrix(mesh, &spec.material.elasticity);
    let f = &spec.body_force;
    let rhs = fem::load_vector(mesh, |x, y| f(t, x, y));
    let bc: Vec<(usize, f64)> = mesh
        .boundary_vertices()
        .iter()
        .flat_map(|&v| [(2 * v, 0.0), (2 * v + 1, 0.0)])
        .collect();
    let system = LinearSystem::new(k, rhs)?.apply_dirichlet(&bc)?;
    system.solve(solver_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_problem1, make_zero_problem, Conductivity};
    use std::sync::Arc;

    #[test]
    fn zero_data_is_a_fixed_point() {
        let spec = make_zero_problem();
        for scheme in [Scheme::SemiImplicit, Scheme::ImplicitEuler] {
            let traj = run_simulation(&spec, 4, 3, &RunConfig::with_scheme(scheme)).unwrap();
            assert_eq!(traj.snapshots.len(), 4);
            for s in &traj.snapshots {
                assert!(s
                    .theta
                    .iter()
                    .chain(&s.phi)
                    .chain(&s.u)
                    .chain(&s.velocity)
                    .all(|&v| v == 0.0));
            }
            if scheme == Scheme::ImplicitEuler {
                assert!(traj.picard_iterations.iter().all(|&i| i == 1));
            }
        }
        let traj = run_simulation(&spec, 2, 1, &RunConfig::default()).unwrap();
        assert_eq!(traj.snapshots.len(), 2);
    }

    #[test]
    fn linear_decoupled_picard_takes_two_iterations() {
        let mut spec = make_zero_problem();
        spec.material.conductivity = Conductivity::Constant(1.0);
        spec.material.expansion = crate::fem::CouplingTensor::zero();
        spec.initial_temperature = Arc::new(|x, y| x * (1.0 - x) * y * (1.0 - y));
        let mesh = Mesh::crisscross(4).unwrap();
        let config = StepperConfig::with_scheme(Scheme::ImplicitEuler);
        let ops = Operators::new(&mesh, &spec, 0.1, config.solver_tol).unwrap();
        let s0 = ops.initial_state().unwrap();
        let (s1, iters) = implicit_euler_step(&s0, &ops, 0.1, &config).unwrap();
        assert_eq!(iters, 2);
        assert!(s1.theta.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn initial_potential_is_linear() {
        let spec = make_problem1();
        let mesh = Mesh::crisscross(8).unwrap();
        let ops = Operators::new(&mesh, &spec, 1.0 / 32.0, 1e-12).unwrap();
        let s0 = ops.initial_state().unwrap();
        let exact = fem::interpolate_scalar(&mesh, |x, _| 5.0 * (1.0 - x));
        for (a, b) in s0.phi.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
        let s1 = semi_implicit_step(&s0, &ops, ops.k()).unwrap();
        assert!(s1.theta.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn temperature_solve_reads_only_lagged_fields() {
        let spec = make_problem1();
        let mesh = Mesh::crisscross(4).unwrap();
        let ops = Operators::new(&mesh, &spec, 0.125, 1e-10).unwrap();
        let mut state = ops.initial_state().unwrap();
        for n in 1..=3 {
            state = semi_implicit_step(&state, &ops, ops.time_of(n, 8)).unwrap();
        }
        let next = semi_implicit_step(&state, &ops, ops.time_of(4, 8)).unwrap();
        let theta = ops
            .solve_temperature(
                &state.theta,
                &state.theta,
                &state.phi,
                &state.velocity(0.125),
                ops.time_of(4, 8),
                state.theta.clone(),
            )
            .unwrap();
        assert_eq!(theta, next.theta);
    }

    #[test]
    fn snapshot_counts_and_times() {
        let spec = make_problem1();
        let traj = run_simulation(&spec, 4, 8, &RunConfig::default()).unwrap();
        assert_eq!(traj.snapshots.len(), 9);
        assert_eq!(traj.snapshots.last().unwrap().t, 1.0);
        let config = RunConfig {
            stride: Some(4),
            ..Default::default()
        };
        let traj = run_simulation(&spec, 4, 8, &config).unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        for nt in [3, 7, 49, 97] {
            assert_eq!(time_of(1.0, nt, nt), 1.0);
        }
    }

    #[test]
    fn zero_viscosity_still_steps() {
        let spec = crate::model::make_problem2(0.0).unwrap();
        let traj = run_simulation(&spec, 4, 4, &RunConfig::default()).unwrap();
        assert!(traj.snapshots.last().unwrap().u.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn invalid_arguments() {
        let spec = make_problem1();
        assert!(run_simulation(&spec, 0, 4, &RunConfig::default()).is_err());
        assert!(run_simulation(&spec, 2, 0, &RunConfig::default()).is_err());
        let mut cfg = RunConfig::with_scheme(Scheme::ImplicitEuler);
        cfg.stepper.picard_max_iter = 0;
        assert!(run_simulation(&spec, 2, 2, &cfg).is_err());
    }

    #[test]
    fn picard_cap_reports_divergence() {
        let spec = make_problem1();
        let mut cfg = RunConfig::with_scheme(Scheme::ImplicitEuler);
        cfg.stepper.picard_max_iter = 1;
        let err = run_simulation(&spec, 4, 2, &cfg).unwrap_err();
        match err {
            Error::Step { step, source } => {
                assert_eq!(step, 1);
                assert!(matches!(*source, Error::PicardDivergence { iterations: 1, .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
