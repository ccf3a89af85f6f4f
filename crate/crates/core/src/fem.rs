//! P1 assembly of the bilinear forms and load functionals.
//!
//! All element integrals use the three-point edge-midpoint rule, which is
//! exact for quadratics. Vector fields use the interleaved layout
//! `(2 v, 2 v + 1) = (u_x, u_y)` at vertex `v`.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

/// Symmetric 3x3 moduli acting on `(eps_11, eps_22, gamma_12)` with
/// engineering shear `gamma_12 = du_x/dy + du_y/dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoigtTensor([[f64; 3]; 3]);

impl VoigtTensor {
    pub fn new(entries: [[f64; 3]; 3]) -> Result<VoigtTensor> {
        for i in 0..3 {
            for j in 0..i {
                let (a, b) = (entries[i][j], entries[j][i]);
                if (a - b).abs() > 1e-14 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Voigt tensor not symmetric: T[{i}][{j}] = {a} vs T[{j}][{i}] = {b}"
                    )));
                }
            }
        }
        Ok(VoigtTensor(entries))
    }

    pub fn identity() -> VoigtTensor {
        VoigtTensor([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// `[[1,1,0],[1,1,0],[0,0,1]]`: energy `(div u)^2 + gamma_12^2`.
    pub fn div_shear() -> VoigtTensor {
        VoigtTensor([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Isotropic tensor `2 mu eps + lambda tr(eps) I`.
    pub fn lame(mu: f64, lambda: f64) -> Result<VoigtTensor> {
        if !(mu > 0.0) {
            return Err(Error::Coercivity(format!("shear modulus mu = {mu} must be positive")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Coercivity(format!("lambda = {lambda} must be non-negative")));
        }
        Ok(VoigtTensor([
            [2.0 * mu + lambda, lambda, 0.0],
            [lambda, 2.0 * mu + lambda, 0.0],
            [0.0, 0.0, mu],
        ]))
    }

    /// Lamé parameters `(mu, lambda)` from Young's modulus and Poisson's ratio.
    pub fn lame_parameters(young: f64, poisson: f64) -> (f64, f64) {
        let mu = young / (2.0 * (1.0 + poisson));
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        (mu, lambda)
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> VoigtTensor {
        let mut e = self.0;
        for row in &mut e {
            for v in row {
                *v *= s;
            }
        }
        VoigtTensor(e)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let m = nalgebra::Matrix3::from_fn(|i, j| self.0[i][j]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    }
}

/// Symmetric 2x2 thermal-expansion stress matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTensor([[f64; 2]; 2]);

impl CouplingTensor {
    pub fn new(entries: [[f64; 2]; 2]) -> Result<CouplingTensor> {
        let (a, b) = (entries[0][1], entries[1][0]);
        if (a - b).abs() > 1e-14 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling matrix not symmetric: {a} vs {b}"
            )));
        }
        Ok(CouplingTensor(entries))
    }

    pub fn identity() -> CouplingTensor {
        CouplingTensor([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn isotropic(m: f64) -> CouplingTensor {
        CouplingTensor([[m, 0.0], [0.0, m]])
    }

    pub fn zero() -> CouplingTensor {
        CouplingTensor([[0.0; 2]; 2])
    }

    pub fn entries(&self) -> &[[f64; 2]; 2] {
        &self.0
    }
}

/// Cached CSR structure of a P1 operator plus, per element, the positions of
/// its local entries in the value array.
#[derive(Debug, Clone)]
pub struct Pattern {
    dofs_per_node: usize,
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    slots: Vec<usize>,
}

impl Pattern {
    /// Pattern for `dofs_per_node` (1 or 2) unknowns per vertex.
    pub fn new(mesh: &Mesh, dofs_per_node: usize) -> Pattern {
        let d = dofs_per_node;
        let n = d * mesh.num_vertices();
        let local = 3 * d;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in mesh.triangles() {
            let dofs = element_dofs(tri, d);
            for &r in &dofs[..local] {
                rows[r].extend_from_slice(&dofs[..local]);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let mut slots = Vec::with_capacity(mesh.num_triangles() * local * local);
        for tri in mesh.triangles() {
            let dofs = element_dofs(tri, d);
            for &r in &dofs[..local] {
                let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
                for &c in &dofs[..local] {
                    slots.push(row_ptr[r] + cols.binary_search(&c).expect("pattern covers element"));
                }
            }
        }
        Pattern {
            dofs_per_node: d,
            n,
            row_ptr,
            col_idx,
            slots,
        }
    }

    /// Sums element matrices (row-major, `3d x 3d`) in element order.
    pub fn assemble<F>(&self, mesh: &Mesh, mut element: F) -> SparseMatrix
    where
        F: FnMut(usize) -> [[f64; 6]; 6],
    {
        let local = 3 * self.dofs_per_node;
        let mut values = vec![0.0; self.col_idx.len()];
        let mut s = self.slots.iter();
        for t in 0..mesh.num_triangles() {
            let ke = element(t);
            for row in ke.iter().take(local) {
                for &v in row.iter().take(local) {
                    values[*s.next().unwrap()] += v;
                }
            }
        }
        SparseMatrix::from_csr(self.n, self.n, self.row_ptr.clone(), self.col_idx.clone(), values)
    }
}

fn element_dofs(tri: &[usize; 3], d: usize) -> [usize; 6] {
    let mut dofs = [0; 6];
    for (a, &v) in tri.iter().enumerate() {
        for c in 0..d {
            dofs[d * a + c] = d * v + c;
        }
    }
    dofs
}

/// Reusable assembly state for one mesh.
#[derive(Debug, Clone)]
pub struct Assembler<'m> {
    mesh: &'m Mesh,
    scalar: Pattern,
    vector: Pattern,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m Mesh) -> Assembler<'m> {
        Assembler {
            mesh,
            scalar: Pattern::new(mesh, 1),
            vector: Pattern::new(mesh, 2),
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    /// Consistent scalar mass matrix.
    pub fn mass(&self) -> SparseMatrix {
        self.scalar.assemble(self.mesh, |t| {
            let a = self.mesh.geometry(t).area;
            let mut ke = [[0.0; 6]; 6];
            for (i, row) in ke.iter_mut().enumerate().take(3) {
                for (j, v) in row.iter_mut().enumerate().take(3) {
                    *v = if i == j { a / 6.0 } else { a / 12.0 };
                }
            }
            ke
        })
    }

    /// Weighted Laplacian `sum_T w_T (grad phi_j, grad phi_i)_T`.
    pub fn stiffness(&self, weights: &[f64]) -> Result<SparseMatrix> {
        if weights.len() != self.mesh.num_triangles() {
            return Err(Error::InvalidArgument(format!(
                "{} element weights for {} triangles",
                weights.len(),
                self.mesh.num_triangles()
            )));
        }
        if let Some(t) = weights.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::Coercivity(format!(
                "element {t} has weight {}; conductivity must stay above a positive lower bound",
                weights[t]
            )));
        }
        Ok(self.scalar.assemble(self.mesh, |t| {
            let g = self.mesh.geometry(t);
            let s = weights[t] * g.area;
            let mut ke = [[0.0; 6]; 6];
            for (i, row) in ke.iter_mut().enumerate().take(3) {
                for (j, v) in row.iter_mut().enumerate().take(3) {
                    *v = s * (g.dx[i] * g.dx[j] + g.dy[i] * g.dy[j]);
                }
            }
            ke
        }))
    }

    /// Block-diagonal vector mass matrix.
    pub fn vector_mass(&self) -> SparseMatrix {
        self.vector.assemble(self.mesh, |t| {
            let a = self.mesh.geometry(t).area;
            let mut ke = [[0.0; 6]; 6];
            for i in 0..3 {
                for j in 0..3 {
                    let m = if i == j { a / 6.0 } else { a / 12.0 };
                    ke[2 * i][2 * j] = m;
                    ke[2 * i + 1][2 * j + 1] = m;
                }
            }
            ke
        })
    }

    /// `(u, v) -> integral voigt(v)^T T voigt(u)`.
    pub fn elasticity(&self, tensor: &VoigtTensor) -> SparseMatrix {
        let d = tensor.entries();
        self.vector.assemble(self.mesh, |t| {
            let g = self.mesh.geometry(t);
            // strain-displacement rows (eps_11, eps_22, gamma_12) per local dof
            let mut b = [[0.0; 6]; 3];
            for a in 0..3 {
                b[0][2 * a] = g.dx[a];
                b[1][2 * a + 1] = g.dy[a];
                b[2][2 * a] = g.dy[a];
                b[2][2 * a + 1] = g.dx[a];
            }
            let mut db = [[0.0; 6]; 3];
            for r in 0..3 {
                for c in 0..6 {
                    db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
                }
            }
            let mut ke = [[0.0; 6]; 6];
            for (i, row) in ke.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = g.area * (0..3).map(|k| b[k][i] * db[k][j]).sum::<f64>();
                }
            }
            ke
        })
    }

    /// Element-averaged conductivity weights from the P1 temperature sampled
    /// at the edge midpoints.
    pub fn conductivity_weights(&self, theta: &[f64], sigma: impl Fn(f64) -> f64) -> Vec<f64> {
        self.mesh
            .triangles()
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|v| theta[v]);
                (sigma(0.5 * (a + b)) + sigma(0.5 * (b + c)) + sigma(0.5 * (c + a))) / 3.0
            })
            .collect()
    }
}

pub fn mass_matrix(mesh: &Mesh) -> SparseMatrix {
    Assembler::new(mesh).mass()
}

pub fn stiffness_matrix(mesh: &Mesh, weights: &[f64]) -> Result<SparseMatrix> {
    Assembler::new(mesh).stiffness(weights)
}

pub fn vector_mass_matrix(mesh: &Mesh) -> SparseMatrix {
    Assembler::new(mesh).vector_mass()
}

pub fn elasticity_matrix(mesh: &Mesh, tensor: &VoigtTensor) -> SparseMatrix {
    Assembler::new(mesh).elasticity(tensor)
}

/// `C[i, j] = integral (M : eps(psi_j)) phi_i`; rows are scalar dofs, columns
/// vector dofs. `C^T theta` is the thermal stress load.
pub fn coupling_matrix(mesh: &Mesh, m: &CouplingTensor) -> SparseMatrix {
    let [[m11, m12], [_, m22]] = *m.entries();
    let mut triplets = Vec::with_capacity(18 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.geometry(t);
        let w = g.area / 3.0;
        for &i in tri {
            for (b, &j) in tri.iter().enumerate() {
                triplets.push((i, 2 * j, w * (m11 * g.dx[b] + m12 * g.dy[b])));
                triplets.push((i, 2 * j + 1, w * (m12 * g.dx[b] + m22 * g.dy[b])));
            }
        }
    }
    SparseMatrix::from_triplets_rect(mesh.num_vertices(), 2 * mesh.num_vertices(), &triplets)
        .expect("indices come from the mesh")
}

/// Joule heating load `(sigma(theta) |grad phi|^2, chi_i)`.
pub fn joule_load(mesh: &Mesh, theta: &[f64], phi: &[f64], sigma: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.geometry(t);
        let gx: f64 = (0..3).map(|a| g.dx[a] * phi[tri[a]]).sum();
        let gy: f64 = (0..3).map(|a| g.dy[a] * phi[tri[a]]).sum();
        let grad2 = gx * gx + gy * gy;
        if grad2 == 0.0 {
            continue;
        }
        let w = g.area / 3.0 * grad2 * 0.5;
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            let s = w * sigma(0.5 * (theta[a] + theta[b]));
            load[a] += s;
            load[b] += s;
        }
    }
    load
}

/// `(f, chi_i)` for a scalar source.
pub fn scalar_load(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.geometry(t).area / 3.0 * 0.5;
        for (e, q) in mesh.edge_midpoints(t).into_iter().enumerate() {
            let s = w * f(q[0], q[1]);
            load[tri[e]] += s;
            load[tri[(e + 1) % 3]] += s;
        }
    }
    load
}

/// `(f, chi_i)` for a vector body force, interleaved layout.
pub fn load_vector(mesh: &Mesh, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let mut load = vec![0.0; 2 * mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.geometry(t).area / 3.0 * 0.5;
        for (e, q) in mesh.edge_midpoints(t).into_iter().enumerate() {
            let fq = f(q[0], q[1]);
            for v in [tri[e], tri[(e + 1) % 3]] {
                load[2 * v] += w * fq[0];
                load[2 * v + 1] += w * fq[1];
            }
        }
    }
    load
}

pub fn interpolate_scalar(mesh: &Mesh, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(|p| g(p[0], p[1])).collect()
}

pub fn interpolate_vector(mesh: &Mesh, g: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    mesh.vertices().iter().flat_map(|p| g(p[0], p[1])).collect()
}
