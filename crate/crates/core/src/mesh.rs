//! Crisscross triangulations of the unit square.
//!
//! Every lattice square is split into four triangles through its center.
//! Vertices are stored lattice-first (row-major, `y` outer) followed by the
//! square centers (row-major), so the lattice vertices of `mesh(nx)` can be
//! found by index arithmetic in `mesh(r * nx)`.

use std::io::Write;

use crate::error::{Error, Result};

/// Point-location tolerance on barycentric coordinates.
const LOCATE_TOL: f64 = 1e-12;
/// Barycentric coordinates below this magnitude are snapped to zero.
const SNAP_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Mesh {
    nx: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_mask: Vec<bool>,
    boundary: Vec<usize>,
}

/// Result of [`Mesh::locate_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

/// Constant P1 basis-function gradients on one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// `d(phi_i)/dx`
    pub dx: [f64; 3],
    /// `d(phi_i)/dy`
    pub dy: [f64; 3],
}

impl Mesh {
    /// Builds the crisscross mesh with `nx` squares per side.
    pub fn crisscross(nx: usize) -> Result<Mesh> {
        if nx == 0 {
            return Err(Error::InvalidArgument("nx must be at least 1".into()));
        }
        let n_lattice = (nx + 1) * (nx + 1);
        let mut vertices = Vec::with_capacity(n_lattice + nx * nx);
        let mut boundary_mask = Vec::with_capacity(n_lattice + nx * nx);
        let nxf = nx as f64;
        for j in 0..=nx {
            for i in 0..=nx {
                vertices.push([i as f64 / nxf, j as f64 / nxf]);
                boundary_mask.push(i == 0 || j == 0 || i == nx || j == nx);
            }
        }
        for j in 0..nx {
            for i in 0..nx {
                vertices.push([(2 * i + 1) as f64 / (2.0 * nxf), (2 * j + 1) as f64 / (2.0 * nxf)]);
                boundary_mask.push(false);
            }
        }

        let lattice = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(4 * nx * nx);
        for j in 0..nx {
            for i in 0..nx {
                let c = n_lattice + j * nx + i;
                let (v00, v10) = (lattice(i, j), lattice(i + 1, j));
                let (v11, v01) = (lattice(i + 1, j + 1), lattice(i, j + 1));
                triangles.push([v00, v10, c]);
                triangles.push([v10, v11, c]);
                triangles.push([v11, v01, c]);
                triangles.push([v01, v00, c]);
            }
        }

        let boundary = (0..vertices.len()).filter(|&v| boundary_mask[v]).collect();
        Ok(Mesh {
            nx,
            vertices,
            triangles,
            boundary_mask,
            boundary,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Mesh width `1/nx`.
    pub fn h(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of lattice (non-center) vertices; these come first.
    pub fn corner_node_count(&self) -> usize {
        (self.nx + 1) * (self.nx + 1)
    }

    pub fn lattice_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_mask[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    /// Boundary vertex indices in ascending order.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        let [p0, p1, p2] = self.triangle_coords(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / det;
        ElementGeometry {
            area: 0.5 * det,
            dx: [(p1[1] - p2[1]) * inv, (p2[1] - p0[1]) * inv, (p0[1] - p1[1]) * inv],
            dy: [(p2[0] - p1[0]) * inv, (p0[0] - p2[0]) * inv, (p1[0] - p0[0]) * inv],
        }
    }

    /// Edge midpoints of triangle `t`, ordered (v0v1, v1v2, v2v0).
    pub fn edge_midpoints(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangle_coords(t);
        let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        [mid(p0, p1), mid(p1, p2), mid(p2, p0)]
    }

    /// Samples `g` at the boundary vertices, ascending by vertex index.
    pub fn boundary_values(&self, g: impl Fn(f64, f64) -> f64) -> Vec<(usize, f64)> {
        self.boundary
            .iter()
            .map(|&v| {
                let [x, y] = self.vertices[v];
                (v, g(x, y))
            })
            .collect()
    }

    /// Finds the triangle containing `p` and its barycentric coordinates.
    ///
    /// Points on shared edges or vertices go to the lowest-indexed triangle
    /// containing them.
    pub fn locate_point(&self, p: [f64; 2]) -> Result<Location> {
        let [x, y] = p;
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfDomain { x, y });
        }
        let nx = self.nx;
        let candidates = |s: f64| -> Vec<usize> {
            let scaled = s * nx as f64;
            let k = (scaled.floor() as usize).min(nx - 1);
            let mut out = Vec::with_capacity(2);
            if k > 0 && scaled - (k as f64) <= LOCATE_TOL * nx as f64 {
                out.push(k - 1);
            }
            out.push(k);
            if k + 1 < nx && (k + 1) as f64 - scaled <= LOCATE_TOL * nx as f64 {
                out.push(k + 1);
            }
            out
        };
        let (ci, cj) = (candidates(x), candidates(y));
        for &j in &cj {
            for &i in &ci {
                let first = 4 * (j * nx + i);
                for t in first..first + 4 {
                    if let Some(bary) = self.barycentric(t, p) {
                        return Ok(Location {
                            triangle: t,
                            barycentric: bary,
                        });
                    }
                }
            }
        }
        // Unreachable for points inside the closed square; kept as a hard error.
        Err(Error::OutOfDomain { x, y })
    }

    fn barycentric(&self, t: usize, p: [f64; 2]) -> Option<[f64; 3]> {
        let [p0, p1, p2] = self.triangle_coords(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((p2[1] - p0[1]) * (p[0] - p0[0]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p1[1] - p0[1]) * (p[0] - p0[0])) / det;
        let mut lam = [1.0 - l1 - l2, l1, l2];
        if lam.iter().any(|&l| l < -LOCATE_TOL) {
            return None;
        }
        for l in &mut lam {
            if *l < SNAP_TOL {
                *l = 0.0;
            }
        }
        let sum: f64 = lam.iter().sum();
        for l in &mut lam {
            *l /= sum;
        }
        Some(lam)
    }

    /// Writes the plain-text debug dump: `nx nv nt`, then `v x y b` lines and
    /// `t i j k` lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nx, self.num_vertices(), self.num_triangles())?;
        for (v, p) in self.vertices.iter().enumerate() {
            writeln!(w, "v {:e} {:e} {}", p[0], p[1], u8::from(self.boundary_mask[v]))?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_construction() {
        let m = Mesh::crisscross(4).unwrap();
        assert_eq!(m.num_vertices(), 41);
        assert_eq!(m.num_triangles(), 64);
        let m1 = Mesh::crisscross(1).unwrap();
        assert_eq!(m1.num_vertices(), 5);
        assert_eq!(m1.num_triangles(), 4);
        let area: f64 = (0..4).map(|t| m1.signed_area(t)).sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(Mesh::crisscross(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn areas_positive_and_sum_to_one() {
        for nx in 1..=64 {
            let m = Mesh::crisscross(nx).unwrap();
            let mut total = 0.0;
            for t in 0..m.num_triangles() {
                let a = m.signed_area(t);
                assert!(a > 0.0);
                total += a;
            }
            assert!((total - 1.0).abs() < 1e-12, "nx={nx}: {total}");
        }
    }

    #[test]
    fn boundary_mask_matches_coordinates() {
        let m = Mesh::crisscross(6).unwrap();
        for (v, p) in m.vertices().iter().enumerate() {
            let on = p[0].min(p[1]).min(1.0 - p[0]).min(1.0 - p[1]) == 0.0;
            assert_eq!(m.is_boundary(v), on);
        }
        assert_eq!(m.boundary_vertices().len(), 4 * 6);
    }

    #[test]
    fn lattice_vertices_nest_bitwise() {
        for nx in [1, 2, 4, 8, 16, 32] {
            let coarse = Mesh::crisscross(nx).unwrap();
            let fine = Mesh::crisscross(2 * nx).unwrap();
            for j in 0..=nx {
                for i in 0..=nx {
                    let a = coarse.vertices()[coarse.lattice_index(i, j)];
                    let b = fine.vertices()[fine.lattice_index(2 * i, 2 * j)];
                    assert_eq!(a[0].to_bits(), b[0].to_bits());
                    assert_eq!(a[1].to_bits(), b[1].to_bits());
                }
            }
        }
    }

    #[test]
    fn boundary_sampling() {
        let m = Mesh::crisscross(2).unwrap();
        for (v, val) in m.boundary_values(|x, _| 5.0 * (1.0 - x)) {
            let x = m.vertices()[v][0];
            if x == 0.0 {
                assert_eq!(val, 5.0);
            }
            if x == 1.0 {
                assert_eq!(val, 0.0);
            }
        }
        assert!(m.boundary_values(|_, _| 0.0).iter().all(|&(_, v)| v == 0.0));
        let corner = m.lattice_index(2, 2);
        let vals = m.boundary_values(|x, y| x + y);
        assert_eq!(vals.iter().find(|(v, _)| *v == corner).unwrap().1, 2.0);
    }

    #[test]
    fn locate_centroid_and_vertices() {
        let m = Mesh::crisscross(4).unwrap();
        let [a, b, c] = m.triangle_coords(0);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let loc = m.locate_point(centroid).unwrap();
        assert_eq!(loc.triangle, 0);
        for l in loc.barycentric {
            assert!((l - 1.0 / 3.0).abs() < 1e-12);
        }
        for (v, &p) in m.vertices().iter().enumerate() {
            let loc = m.locate_point(p).unwrap();
            let tri = m.triangles()[loc.triangle];
            let k = tri.iter().position(|&w| w == v).expect("owner incident to vertex");
            assert_eq!(loc.barycentric[k], 1.0);
        }
    }

    #[test]
    fn locate_matches_exhaustive_scan() {
        let m = Mesh::crisscross(4).unwrap();
        let pts = [
            [0.3, 0.7],
            [0.0, 0.0],
            [1.0, 1.0],
            [0.125, 0.125],
            [0.25, 0.6],
            [0.999, 0.001],
        ];
        for p in pts {
            let loc = m.locate_point(p).unwrap();
            // brute force: first triangle (ascending) with all barycentrics >= -tol
            let owner = (0..m.num_triangles())
                .find(|&t| {
                    let [p0, p1, p2] = m.triangle_coords(t);
                    let area = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
                        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
                    };
                    let tot = area(p0, p1, p2);
                    [area(p, p1, p2), area(p0, p, p2), area(p0, p1, p)]
                        .iter()
                        .all(|&s| s / tot >= -1e-12)
                })
                .unwrap();
            assert_eq!(loc.triangle, owner, "point {p:?}");
            let s: f64 = loc.barycentric.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let [p0, p1, p2] = m.triangle_coords(loc.triangle);
            let b = loc.barycentric;
            let rx = b[0] * p0[0] + b[1] * p1[0] + b[2] * p2[0];
            let ry = b[0] * p0[1] + b[1] * p1[1] + b[2] * p2[1];
            assert!((rx - p[0]).abs() < 1e-12 && (ry - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_rejects_outside() {
        let m = Mesh::crisscross(2).unwrap();
        assert!(matches!(
            m.locate_point([1.0 + 1e-9, 0.5]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(m.locate_point([-0.1, 0.5]).is_err());
        assert!(m.locate_point([f64::NAN, 0.5]).is_err());
    }

    #[test]
    fn dump_header() {
        let m = Mesh::crisscross(1).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("1 5 4"));
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 5);
        assert_eq!(text.lines().filter(|l| l.starts_with("t ")).count(), 4);
    }
}
