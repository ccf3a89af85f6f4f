//! Discrete norms, transfer between nested meshes and error measurement
//! against a reference trajectory.

use crate::error::{Error, Result};
use crate::fem::{Assembler, VoigtTensor};
use crate::mesh::Mesh;
use crate::sparse::{dot, SparseMatrix};
use crate::stepper::{Scheme, Trajectory};

/// Norm matrices for one mesh.
#[derive(Debug, Clone)]
pub struct Norms {
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    vector_mass: SparseMatrix,
    strain: SparseMatrix,
}

/// `(eps_11^2 + eps_22^2 + 2 eps_12^2)` in engineering-shear Voigt form, i.e.
/// the Frobenius product `eps : eps`.
pub fn strain_inner_product_tensor() -> VoigtTensor {
    VoigtTensor::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]]).expect("symmetric")
}

impl Norms {
    pub fn new(mesh: &Mesh) -> Norms {
        let asm = Assembler::new(mesh);
        Norms {
            mass: asm.mass(),
            stiffness: asm.stiffness(&vec![1.0; mesh.num_triangles()]).expect("unit weights"),
            vector_mass: asm.vector_mass(),
            strain: asm.elasticity(&strain_inner_product_tensor()),
        }
    }

    fn quad(m: &SparseMatrix, x: &[f64]) -> Result<f64> {
        if x.len() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "field of length {} on a space of dimension {}",
                x.len(),
                m.ncols()
            )));
        }
        Ok(dot(x, &m.matvec(x)).max(0.0).sqrt())
    }

    pub fn l2(&self, x: &[f64]) -> Result<f64> {
        Self::quad(&self.mass, x)
    }

    pub fn h1_seminorm(&self, x: &[f64]) -> Result<f64> {
        Self::quad(&self.stiffness, x)
    }

    pub fn h1(&self, x: &[f64]) -> Result<f64> {
        Ok(self.l2(x)?.hypot(self.h1_seminorm(x)?))
    }

    pub fn l2_vector(&self, u: &[f64]) -> Result<f64> {
        Self::quad(&self.vector_mass, u)
    }

    /// `||eps(u)||_Q`.
    pub fn strain(&self, u: &[f64]) -> Result<f64> {
        Self::quad(&self.strain, u)
    }
}

pub fn l2_norm(mesh: &Mesh, field: &[f64]) -> Result<f64> {
    Norms::new(mesh).l2(field)
}

pub fn h1_seminorm(mesh: &Mesh, field: &[f64]) -> Result<f64> {
    Norms::new(mesh).h1_seminorm(field)
}

pub fn strain_norm(mesh: &Mesh, u: &[f64]) -> Result<f64> {
    Norms::new(mesh).strain(u)
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Node(usize),
    Triangle([usize; 3], [f64; 3]),
}

/// Evaluation of coarse P1 functions at the vertices of a nested fine mesh.
#[derive(Debug, Clone)]
pub struct Transfer {
    coarse_vertices: usize,
    sources: Vec<Source>,
}

impl Transfer {
    pub fn new(coarse: &Mesh, fine: &Mesh) -> Result<Transfer> {
        let (nc, nf) = (coarse.nx(), fine.nx());
        if nf % nc != 0 {
            return Err(Error::InvalidArgument(format!(
                "fine nx = {nf} is not a multiple of coarse nx = {nc}"
            )));
        }
        let r = nf / nc;
        let lattice = fine.corner_node_count();
        let mut sources = Vec::with_capacity(fine.num_vertices());
        for (v, &p) in fine.vertices().iter().enumerate() {
            if v < lattice {
                let (i, j) = (v % (nf + 1), v / (nf + 1));
                if i % r == 0 && j % r == 0 {
                    sources.push(Source::Node(coarse.lattice_index(i / r, j / r)));
                    continue;
                }
            }
            let loc = coarse.locate_point(p)?;
            sources.push(Source::Triangle(coarse.triangles()[loc.triangle], loc.barycentric));
        }
        Ok(Transfer {
            coarse_vertices: coarse.num_vertices(),
            sources,
        })
    }

    pub fn scalar(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.coarse_vertices {
            return Err(Error::InvalidArgument(
                "scalar field does not match the coarse mesh".into(),
            ));
        }
        Ok(self
            .sources
            .iter()
            .map(|s| match *s {
                Source::Node(c) => field[c],
                Source::Triangle(t, b) => b[0] * field[t[0]] + b[1] * field[t[1]] + b[2] * field[t[2]],
            })
            .collect())
    }

    pub fn vector(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != 2 * self.coarse_vertices {
            return Err(Error::InvalidArgument(
                "vector field does not match the coarse mesh".into(),
            ));
        }
        let mut out = Vec::with_capacity(2 * self.sources.len());
        for s in &self.sources {
            for c in 0..2 {
                out.push(match *s {
                    Source::Node(v) => field[2 * v + c],
                    Source::Triangle(t, b) => {
                        b[0] * field[2 * t[0] + c] + b[1] * field[2 * t[1] + c] + b[2] * field[2 * t[2] + c]
                    }
                });
            }
        }
        Ok(out)
    }
}

/// Coarse scalar P1 field evaluated on the fine mesh.
pub fn transfer_to_fine(coarse: &Mesh, field: &[f64], fine: &Mesh) -> Result<Vec<f64>> {
    Transfer::new(coarse, fine)?.scalar(field)
}

/// Max-in-time errors between two trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub nx: usize,
    pub nt: usize,
    pub reference_nx: usize,
    pub reference_nt: usize,
    pub scheme: Scheme,
    pub reference_scheme: Scheme,
    /// Shared comparison times (`n >= 1` of the coarser time grid).
    pub times: Vec<f64>,
    pub theta_l2: f64,
    pub theta_h1_semi: f64,
    pub theta_h1: f64,
    pub phi_l2: f64,
    pub phi_h1_semi: f64,
    pub phi_h1: f64,
    pub u_l2: f64,
    pub dtu_l2: f64,
    pub dtu_strain: f64,
}

impl ErrorReport {
    /// `(name, value)` pairs in the fixed column order.
    pub fn columns(&self) -> [(&'static str, f64); 9] {
        [
            ("err_theta_l2", self.theta_l2),
            ("err_theta_h1", self.theta_h1_semi),
            ("err_theta_h1_full", self.theta_h1),
            ("err_phi_l2", self.phi_l2),
            ("err_phi_h1", self.phi_h1_semi),
            ("err_phi_h1_full", self.phi_h1),
            ("err_u_l2", self.u_l2),
            ("err_dtu_l2", self.dtu_l2),
            ("err_dtu_V", self.dtu_strain),
        ]
    }
}

fn divides(a: usize, b: usize) -> bool {
    a != 0 && b % a == 0
}

/// Errors of `traj` against `reference` at every shared time level `n >= 1`.
///
/// The spatially coarser fields are transferred exactly onto the finer mesh
/// and all norms are evaluated there.
pub fn max_error_over_time(traj: &Trajectory, reference: &Trajectory) -> Result<ErrorReport> {
    let (nxa, nxb) = (traj.nx(), reference.nx());
    if !divides(nxa, nxb) && !divides(nxb, nxa) {
        return Err(Error::InvalidArgument(format!(
            "meshes nx = {nxa} and nx = {nxb} are not nested"
        )));
    }
    let (nta, ntb) = (traj.nt, reference.nt);
    if !divides(nta, ntb) && !divides(ntb, nta) {
        return Err(Error::InvalidArgument(format!(
            "time grids nt = {nta} and nt = {ntb} are not nested"
        )));
    }
    if traj.t_final != reference.t_final {
        return Err(Error::InvalidArgument("trajectories have different final times".into()));
    }
    let a_is_coarse = nxa <= nxb;
    let (coarse, fine) = if a_is_coarse {
        (traj, reference)
    } else {
        (reference, traj)
    };
    let transfer = if coarse.nx() == fine.nx() {
        None
    } else {
        Some(Transfer::new(&coarse.mesh, &fine.mesh)?)
    };
    let norms = Norms::new(&fine.mesh);

    let nt = nta.min(ntb);
    let (ra, rb) = (nta / nt, ntb / nt);
    let mut report = ErrorReport {
        nx: nxa,
        nt: nta,
        reference_nx: nxb,
        reference_nt: ntb,
        scheme: traj.scheme,
        reference_scheme: reference.scheme,
        times: Vec::with_capacity(nt),
        theta_l2: 0.0,
        theta_h1_semi: 0.0,
        theta_h1: 0.0,
        phi_l2: 0.0,
        phi_h1_semi: 0.0,
        phi_h1: 0.0,
        u_l2: 0.0,
        dtu_l2: 0.0,
        dtu_strain: 0.0,
    };
    let missing =
        |which: &str, n: usize| Error::InvalidArgument(format!("{which} trajectory has no snapshot at step {n}"));
    for n in 1..=nt {
        let sa = traj.snapshot(n * ra).ok_or_else(|| missing("test", n * ra))?;
        let sb = reference.snapshot(n * rb).ok_or_else(|| missing("reference", n * rb))?;
        let (sc, sf) = if a_is_coarse { (sa, sb) } else { (sb, sa) };
        let lift_s = |x: &Vec<f64>| -> Result<Vec<f64>> {
            match &transfer {
                Some(t) => t.scalar(x),
                None => Ok(x.clone()),
            }
        };
        let lift_v = |x: &Vec<f64>| -> Result<Vec<f64>> {
            match &transfer {
                Some(t) => t.vector(x),
                None => Ok(x.clone()),
            }
        };
        let diff = |a: Vec<f64>, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

        let dtheta = diff(lift_s(&sc.theta)?, &sf.theta);
        let dphi = diff(lift_s(&sc.phi)?, &sf.phi);
        let du = diff(lift_v(&sc.u)?, &sf.u);
        let dv = diff(lift_v(&sc.velocity)?, &sf.velocity);

        report.times.push(sa.t);
        let r = &mut report;
        r.theta_l2 = r.theta_l2.max(norms.l2(&dtheta)?);
        r.theta_h1_semi = r.theta_h1_semi.max(norms.h1_seminorm(&dtheta)?);
        r.theta_h1 = r.theta_h1.max(norms.h1(&dtheta)?);
        r.phi_l2 = r.phi_l2.max(norms.l2(&dphi)?);
        r.phi_h1_semi = r.phi_h1_semi.max(norms.h1_seminorm(&dphi)?);
        r.phi_h1 = r.phi_h1.max(norms.h1(&dphi)?);
        r.u_l2 = r.u_l2.max(norms.l2_vector(&du)?);
        r.dtu_l2 = r.dtu_l2.max(norms.l2_vector(&dv)?);
        r.dtu_strain = r.dtu_strain.max(norms.strain(&dv)?);
    }
    Ok(report)
}

/// Pairwise slopes `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn observed_order(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need matching sequences of length >= 2, got {} errors and {} sizes",
            errors.len(),
            hs.len()
        )));
    }
    if errors.iter().chain(hs).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("errors and mesh sizes must be positive".into()));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}
