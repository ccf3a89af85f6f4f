//! Compressed sparse row matrices, Dirichlet elimination and a Jacobi
//! preconditioned conjugate gradient solver.

use crate::error::{Error, Result};

/// Default relative residual tolerance for [`solve_spd`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
        Self::from_triplets_rect(n, n, triplets)
    }

    /// Rectangular variant of [`SparseMatrix::from_triplets`].
    ///
    /// Duplicate entries are summed in ascending value order, so the result
    /// is bitwise independent of the triplet order.
    pub fn from_triplets_rect(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::InvalidArgument(format!(
                "triplet index ({r}, {c}) out of range for {nrows}x{ncols} matrix"
            )));
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from an existing CSR structure.
    pub(crate) fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> SparseMatrix {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    /// `A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose matvec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// `a * self + b * other`; both matrices must share a sparsity pattern.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::InvalidArgument("sparsity patterns differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SparseMatrix { values, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> SparseMatrix {
        SparseMatrix {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}

/// A symmetric system with optional Dirichlet constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Constrained dofs and their prescribed values, ascending by dof.
    pub constrained: Vec<(usize, f64)>,
}

impl LinearSystem {
    pub fn new(matrix: SparseMatrix, rhs: Vec<f64>) -> Result<LinearSystem> {
        if matrix.nrows() != matrix.ncols() || rhs.len() != matrix.nrows() {
            return Err(Error::InvalidArgument(format!(
                "system of size {}x{} with rhs of length {}",
                matrix.nrows(),
                matrix.ncols(),
                rhs.len()
            )));
        }
        Ok(LinearSystem {
            matrix,
            rhs,
            constrained: Vec::new(),
        })
    }

    /// Symmetric elimination of the constrained dofs.
    ///
    /// Free rows are lifted by the prescribed values, constrained rows and
    /// columns are cleared, the diagonal is set to one and the rhs to the
    /// prescribed value.
    pub fn apply_dirichlet(self, values: &[(usize, f64)]) -> Result<LinearSystem> {
        let n = self.matrix.nrows();
        let mut prescribed: Vec<Option<f64>> = vec![None; n];
        for &(dof, val) in &self.constrained {
            prescribed[dof] = Some(val);
        }
        for &(dof, val) in values {
            if dof >= n {
                return Err(Error::InvalidArgument(format!(
                    "constrained dof {dof} out of range ({n})"
                )));
            }
            prescribed[dof] = Some(val);
        }

        let m = &self.matrix;
        let mut rhs = self.rhs;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(m.nnz());
        let mut vals = Vec::with_capacity(m.nnz());
        row_ptr.push(0);
        for r in 0..n {
            if let Some(v) = prescribed[r] {
                col_idx.push(r);
                vals.push(1.0);
                rhs[r] = v;
            } else {
                for (c, a) in m.row(r) {
                    match prescribed[c] {
                        Some(v) => rhs[r] -= a * v,
                        None => {
                            col_idx.push(c);
                            vals.push(a);
                        }
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        let constrained = (0..n).filter_map(|d| prescribed[d].map(|v| (d, v))).collect();
        Ok(LinearSystem {
            matrix: SparseMatrix::from_csr(n, n, row_ptr, col_idx, vals),
            rhs,
            constrained,
        })
    }

    pub fn solve(&self, rel_tol: f64) -> Result<Vec<f64>> {
        solve_spd(&self.matrix, &self.rhs, rel_tol)
    }
}

/// Convergence information from the conjugate gradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from zero.
pub fn solve_spd(matrix: &SparseMatrix, rhs: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; rhs.len()];
    solve_spd_from(matrix, rhs, &mut x, rel_tol)?;
    Ok(x)
}

/// Jacobi preconditioned conjugate gradients from the initial guess in `x`.
///
/// On success `||b - A x|| <= rel_tol * ||b||` holds for the true residual.
/// The iteration cap is `10 n`.
pub fn solve_spd_from(matrix: &SparseMatrix, rhs: &[f64], x: &mut [f64], rel_tol: f64) -> Result<SolveStats> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n || x.len() != n {
        return Err(Error::InvalidArgument("solve_spd dimension mismatch".into()));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol {rel_tol} not in (0, 1)")));
    }
    let diag = matrix.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd(format!("diagonal entry {i} is {}", diag[i])));
    }
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = rel_tol * bnorm;
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let max_iter = 10 * n.max(1);
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    // Outer loop restarts from the true residual if the recursive one drifted.
    loop {
        matrix.matvec_into(x, &mut ax);
        for i in 0..n {
            r[i] = rhs[i] - ax[i];
        }
        let true_res = norm2(&r);
        if true_res <= target {
            return Ok(SolveStats {
                iterations,
                relative_residual: true_res / bnorm,
            });
        }
        if iterations >= max_iter {
            return Err(Error::SolverFailure {
                iterations,
                residual: true_res / bnorm,
            });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            matrix.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotSpd(format!("non-positive curvature p^T A p = {pap:e}")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if norm2(&r) <= 0.5 * target {
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting; oracle only.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| g[i][k] * g[j][k]).sum::<f64>() + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    fn dense_to_triplets(a: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        t
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn empty_matrix_is_zero() {
        let m = SparseMatrix::from_triplets(3, &[]).unwrap();
        assert_eq!(m.matvec(&[1.0, -2.0, 3.0]), vec![0.0; 3]);
    }

    #[test]
    fn out_of_range_triplet() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, &[(2, 0, 1.0)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn one_dimensional_laplace_with_constraints() {
        let t = [
            (0, 0, 1.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 1.0),
        ];
        let m = SparseMatrix::from_triplets(3, &t).unwrap();
        let sys = LinearSystem::new(m, vec![0.0; 3])
            .unwrap()
            .apply_dirichlet(&[(0, 0.0), (2, 1.0)])
            .unwrap();
        let x = sys.solve(1e-12).unwrap();
        assert!((x[1] - 0.5).abs() < 1e-12);
        assert_eq!(x[0], 0.0);
        assert_eq!(x[2], 1.0);
    }

    #[test]
    fn fully_constrained_system_returns_prescribed_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(4, &mut rng);
        let m = SparseMatrix::from_triplets(4, &dense_to_triplets(&a)).unwrap();
        let vals = [(0, 1.5), (1, -2.0), (2, 0.25), (3, 7.0)];
        let sys = LinearSystem::new(m, vec![1.0; 4])
            .unwrap()
            .apply_dirichlet(&vals)
            .unwrap();
        let x = sys.solve(1e-10).unwrap();
        assert_eq!(x, vec![1.5, -2.0, 0.25, 7.0]);
    }

    #[test]
    fn dirichlet_matches_dense_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let a = random_spd(n, &mut rng);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fixed = [(1usize, 0.5), (4, -1.0), (8, 2.0)];
        let m = SparseMatrix::from_triplets(n, &dense_to_triplets(&a)).unwrap();
        let sys = LinearSystem::new(m, b.clone())
            .unwrap()
            .apply_dirichlet(&fixed)
            .unwrap();
        assert!(sys.matrix.symmetry_defect() < 1e-15);
        let x = sys.solve(1e-13).unwrap();

        // Oracle: reduce to the free block directly.
        let free: Vec<usize> = (0..n).filter(|i| !fixed.iter().any(|f| f.0 == *i)).collect();
        let af: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| a[i][j]).collect()).collect();
        let bf: Vec<f64> = free
            .iter()
            .map(|&i| b[i] - fixed.iter().map(|&(j, v)| a[i][j] * v).sum::<f64>())
            .collect();
        let xf = dense_solve(af, bf);
        for (k, &i) in free.iter().enumerate() {
            assert!((x[i] - xf[k]).abs() < 1e-10);
        }
        for &(i, v) in &fixed {
            assert_eq!(x[i], v);
        }
    }

    #[test]
    fn dirichlet_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spd(6, &mut rng);
        let m = SparseMatrix::from_triplets(6, &dense_to_triplets(&a)).unwrap();
        let fixed = [(0, 1.0), (5, -3.0)];
        let once = LinearSystem::new(m, vec![1.0; 6])
            .unwrap()
            .apply_dirichlet(&fixed)
            .unwrap();
        let twice = once.clone().apply_dirichlet(&fixed).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn solve_small_systems() {
        let id = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(solve_spd(&id, &[1.0, 2.0, 3.0], 1e-10).unwrap(), vec![1.0, 2.0, 3.0]);
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let x = solve_spd(&m, &[3.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solver_errors() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
        assert!(matches!(solve_spd(&m, &[1.0, 1.0], 1e-10), Err(Error::NotSpd(_))));
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 3.0), (1, 0, 3.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(solve_spd(&m, &[1.0, -1.0], 1e-10), Err(Error::NotSpd(_))));
        assert!(solve_spd(&m, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn zero_rhs_gives_exact_zero() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let mut x = vec![5.0, 6.0];
        solve_spd_from(&m, &[0.0, 0.0], &mut x, 1e-10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }
}
