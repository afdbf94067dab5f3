//! Cotangent (Dirichlet) and stretch Laplacians assembled from per-face 3×3 blocks.
//!
//! Both matrices share the sparsity pattern of the mesh's vertex adjacency
//! plus the diagonal. The pattern is computed once per mesh and kept behind
//! an [`Arc`], so that repeated stretch assemblies and the linear solver can
//! reuse it (and the solver's symbolic factorization) across iterations.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{cotangent_at, Mapping, Mesh, Point2, Point3};

pub type LocalMatrix = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    Dirichlet,
    Stretch,
}

/// CSR pattern (sorted columns, diagonal included) plus the slot of every
/// local 3×3 entry of every face.
#[derive(Debug)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    face_slots: Vec<[usize; 9]>,
}

impl SparsityPattern {
    pub fn from_mesh(mesh: &Mesh) -> Arc<Self> {
        let n = mesh.num_vertices();
        let adjacency = mesh.vertex_neighbors();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, nbrs) in adjacency.iter().enumerate() {
            let at = nbrs.partition_point(|&j| j < i);
            col_idx.extend_from_slice(&nbrs[..at]);
            col_idx.push(i);
            col_idx.extend_from_slice(&nbrs[at..]);
            row_ptr.push(col_idx.len());
        }
        let slot = |i: usize, j: usize| -> usize {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i] + row.binary_search(&j).expect("face edge missing from pattern")
        };
        let face_slots = mesh
            .faces()
            .iter()
            .map(|f| {
                let mut s = [0usize; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = slot(f[a], f[b]);
                    }
                }
                s
            })
            .collect();
        Arc::new(SparsityPattern {
            n,
            row_ptr,
            col_idx,
            face_slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }
}

/// Symmetric, zero-row-sum sparse Laplacian.
#[derive(Debug, Clone)]
pub struct SparseLaplacian {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
    kind: LaplacianKind,
}

impl SparseLaplacian {
    /// Graph Laplacian with weight `w` on each listed edge `(i, j, w)`:
    /// off-diagonal entries `−w` (summed over repeats) and diagonals making
    /// every row sum to zero.
    pub fn from_edge_weights(n: usize, edges: &[(usize, usize, f64)], kind: LaplacianKind) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j, w) in edges {
            if i >= n || j >= n || i == j || !w.is_finite() {
                return Err(Error::InvalidInput(format!("bad edge ({i}, {j}, {w})")));
            }
            rows[i].push(j);
            rows[j].push(i);
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let pattern = Arc::new(SparsityPattern {
            n,
            row_ptr,
            col_idx,
            face_slots: Vec::new(),
        });
        let mut values = vec![0.0; pattern.nnz()];
        let slot = |i: usize, j: usize| {
            let r = pattern.row(i);
            r.start + pattern.col_idx[r].binary_search(&j).unwrap()
        };
        for &(i, j, w) in edges {
            values[slot(i, j)] -= w;
            values[slot(j, i)] -= w;
            values[slot(i, i)] += w;
            values[slot(j, j)] += w;
        }
        Ok(SparseLaplacian {
            pattern,
            values,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.pattern.row(i);
        match self.pattern.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored `(row, col, value)` triples in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            self.pattern
                .row(i)
                .map(move |k| (i, self.pattern.col_idx[k], self.values[k]))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| {
                self.pattern
                    .row(i)
                    .map(|k| self.values[k] * x[self.pattern.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// `xᵀ L x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest `|Σ_j L_ij| / max_j |L_ij|` over rows (rows of zeros count as 0).
    pub fn max_relative_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let r = self.pattern.row(i);
                let sum: f64 = self.values[r.clone()].iter().sum();
                let max = self.values[r].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if max == 0.0 {
                    0.0
                } else {
                    sum.abs() / max
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|L_ij − L_ji|` over the pattern.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Adds `delta` to the single entry `(i, j)`, breaking symmetry and the
    /// zero row sum. Only meant for exercising the diagnostics.
    pub fn perturb_entry(&mut self, i: usize, j: usize, delta: f64) -> Result<()> {
        let r = self.pattern.row(i);
        let k = self.pattern.col_idx[r.clone()]
            .binary_search(&j)
            .map_err(|_| Error::InvalidInput(format!("({i}, {j}) is not in the pattern")))?;
        self.values[r.start + k] += delta;
        Ok(())
    }

    /// MatrixMarket coordinate dump (1-based, general storage).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "% {:?} Laplacian", self.kind)?;
        writeln!(out, "{} {} {}", self.dim(), self.dim(), self.pattern.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// Reusable assembler bound to one mesh's sparsity pattern.
#[derive(Debug, Clone)]
pub struct LaplacianAssembler {
    pattern: Arc<SparsityPattern>,
}

impl LaplacianAssembler {
    pub fn new(mesh: &Mesh) -> Self {
        LaplacianAssembler {
            pattern: SparsityPattern::from_mesh(mesh),
        }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    fn accumulate<F>(&self, mesh: &Mesh, kind: LaplacianKind, mut local: F) -> Result<SparseLaplacian>
    where
        F: FnMut(usize, [usize; 3]) -> Result<LocalMatrix>,
    {
        assert_eq!(mesh.num_faces(), self.pattern.face_slots.len());
        let mut values = vec![0.0; self.pattern.nnz()];
        for (fi, (&face, slots)) in mesh.faces().iter().zip(&self.pattern.face_slots).enumerate() {
            let m = local(fi, face)?;
            for a in 0..3 {
                for b in 0..3 {
                    values[slots[3 * a + b]] += m[a][b];
                }
            }
        }
        Ok(SparseLaplacian {
            pattern: Arc::clone(&self.pattern),
            values,
            kind,
        })
    }

    pub fn dirichlet(&self, mesh: &Mesh) -> Result<SparseLaplacian> {
        let v = mesh.vertices();
        self.accumulate(mesh, LaplacianKind::Dirichlet, |fi, f| {
            local_dirichlet_matrix([v[f[0]], v[f[1]], v[f[2]]])
                .map_err(|e| e.in_stage(format!("face {fi}")))
        })
    }

    pub fn stretch(&self, mesh: &Mesh, mapping: &Mapping) -> Result<SparseLaplacian> {
        check_rows(mesh, mapping)?;
        let areas = mesh.face_areas();
        let f = mapping.coords();
        self.accumulate(mesh, LaplacianKind::Stretch, |fi, t| {
            Ok(stretch_block(areas[fi], [f[t[0]], f[t[1]], f[t[2]]]))
        })
    }
}

pub(crate) fn check_rows(mesh: &Mesh, mapping: &Mapping) -> Result<()> {
    if mapping.len() != mesh.num_vertices() {
        return Err(Error::InvalidInput(format!(
            "mapping has {} rows but the mesh has {} vertices",
            mapping.len(),
            mesh.num_vertices()
        )));
    }
    Ok(())
}

/// Cotangent Laplacian `L_D` of the mesh.
pub fn assemble_dirichlet(mesh: &Mesh) -> Result<SparseLaplacian> {
    LaplacianAssembler::new(mesh).dirichlet(mesh)
}

/// Stretch Laplacian `L_S(f)` of the mesh under `mapping`.
pub fn assemble_stretch(mesh: &Mesh, mapping: &Mapping) -> Result<SparseLaplacian> {
    LaplacianAssembler::new(mesh).stretch(mesh, mapping)
}

/// Local block with edge weights `w_ij, w_jk, w_ki` (the weight of each edge
/// sits opposite the third vertex).
#[inline]
fn block_from_weights(w_ij: f64, w_jk: f64, w_ki: f64) -> LocalMatrix {
    [
        [w_ij + w_ki, -w_ij, -w_ki],
        [-w_ij, w_ij + w_jk, -w_jk],
        [-w_ki, -w_jk, w_jk + w_ki],
    ]
}

#[inline]
fn dot2(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sub2(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn stretch_block(area: f64, img: [Point2; 3]) -> LocalMatrix {
    let [fi, fj, fk] = img;
    let scale = 1.0 / (4.0 * area);
    let w_ij = dot2(sub2(fi, fk), sub2(fj, fk)) * scale;
    let w_jk = dot2(sub2(fj, fi), sub2(fk, fi)) * scale;
    let w_ki = dot2(sub2(fi, fj), sub2(fk, fj)) * scale;
    block_from_weights(w_ij, w_jk, w_ki)
}

/// Per-face block of `L_S(f)`: off-diagonal `(i, j)` is
/// `−(f_i−f_k)·(f_j−f_k) / (4|τ|)`, diagonals make each row sum to zero.
pub fn local_stretch_matrix(face_vertices: [Point3; 3], face_images: [Point2; 3]) -> Result<LocalMatrix> {
    let area = crate::mesh::face_area_3d(face_vertices[0], face_vertices[1], face_vertices[2]);
    if !(area > 0.0) {
        return Err(Error::Validation(crate::error::Violation::DegenerateFace { face: 0 }));
    }
    Ok(stretch_block(area, face_images))
}

/// Per-face block of `L_D`: off-diagonal `(i, j)` is `−½ cot θ_k`, with
/// `θ_k` the angle at the third vertex.
pub fn local_dirichlet_matrix(face_vertices: [Point3; 3]) -> Result<LocalMatrix> {
    let [vi, vj, vk] = face_vertices;
    let degenerate = || Error::Validation(crate::error::Violation::DegenerateFace { face: 0 });
    let cot_k = cotangent_at(vk, vi, vj).ok_or_else(degenerate)?;
    let cot_i = cotangent_at(vi, vj, vk).ok_or_else(degenerate)?;
    let cot_j = cotangent_at(vj, vk, vi).ok_or_else(degenerate)?;
    Ok(block_from_weights(0.5 * cot_k, 0.5 * cot_i, 0.5 * cot_j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{grid_mesh, GridKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn equilateral() -> [Point3; 3] {
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]]
    }

    #[test]
    fn equilateral_dirichlet_weights() {
        let m = Mesh::new(equilateral().to_vec(), vec![[0, 1, 2]]).unwrap();
        let l = assemble_dirichlet(&m).unwrap();
        let off = -1.0 / (2.0 * 3f64.sqrt());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / 3f64.sqrt() } else { off };
                assert!(close(l.get(i, j), want, 1e-15), "({i},{j}) {}", l.get(i, j));
            }
        }
    }

    #[test]
    fn right_triangle_dirichlet_weights() {
        let m = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = assemble_dirichlet(&m).unwrap();
        assert!(close(l.get(1, 2), 0.0, 1e-16));
        assert!(close(l.get(0, 1), -0.5, 1e-15));
        assert!(close(l.get(0, 2), -0.5, 1e-15));
        assert!(close(l.get(0, 0), 1.0, 1e-15));
    }

    /// Dense cotangent matrix built straight from the definition: for each
    /// face and each corner, the angle from `acos` of normalised edge vectors.
    fn brute_force_dirichlet(mesh: &Mesh) -> Vec<Vec<f64>> {
        let n = mesh.num_vertices();
        let mut l = vec![vec![0.0; n]; n];
        let v = mesh.vertices();
        for f in mesh.faces() {
            for k in 0..3 {
                let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                let e1 = crate::mesh::sub3(v[a], v[c]);
                let e2 = crate::mesh::sub3(v[b], v[c]);
                let cos = crate::mesh::dot3(e1, e2)
                    / (crate::mesh::norm3(e1) * crate::mesh::norm3(e2));
                let w = 0.5 / cos.acos().tan();
                l[a][b] -= w;
                l[b][a] -= w;
            }
        }
        for i in 0..n {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| l[i][j]).sum();
            l[i][i] = -s;
        }
        l
    }

    #[test]
    fn grid_dirichlet_matches_definition() {
        for kind in [GridKind::Flat, GridKind::Bump] {
            let m = grid_mesh(3, kind).unwrap();
            let l = assemble_dirichlet(&m).unwrap();
            let dense = brute_force_dirichlet(&m);
            for i in 0..9 {
                for j in 0..9 {
                    assert!(close(l.get(i, j), dense[i][j], 1e-12), "({i},{j})");
                }
            }
            assert_eq!(l.max_asymmetry(), 0.0);
            assert!(l.max_relative_row_sum() < 1e-10);
        }
        // Flat 3×3 grid: centre vertex is adjacent to all others; the four
        // axis neighbours carry weight −1 and the diagonal neighbours 0.
        let l = assemble_dirichlet(&grid_mesh(3, GridKind::Flat).unwrap()).unwrap();
        assert!(close(l.get(4, 4), 4.0, 1e-12));
        for j in [1, 3, 5, 7] {
            assert!(close(l.get(4, j), -1.0, 1e-12));
        }
        for j in [0, 2, 6, 8] {
            assert!(close(l.get(4, j), 0.0, 1e-12));
        }
    }

    #[test]
    fn stretch_right_triangle_entry() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let f = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = local_stretch_matrix(v, f).unwrap();
        // pair (1,2) of the face, i.e. local (0,1): −((0,−1)·(1,−1))/(4·½)
        assert!(close(m[0][1], -0.5, 1e-15));
    }

    #[test]
    fn stretch_of_identity_is_dirichlet_on_flat_mesh() {
        let m = grid_mesh(6, GridKind::Flat).unwrap();
        let f = Mapping::planar_projection(&m);
        let ls = assemble_stretch(&m, &f).unwrap();
        let ld = assemble_dirichlet(&m).unwrap();
        for ((_, _, a), (_, _, b)) in ls.triplets().zip(ld.triplets()) {
            assert!(close(a, b, 1e-12));
        }
    }

    #[test]
    fn stretch_scales_quadratically() {
        let m = grid_mesh(5, GridKind::Bump).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = Mapping::new((0..25).map(|_| [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]).collect()).unwrap();
        let a = assemble_stretch(&m, &f).unwrap();
        let b = assemble_stretch(&m, &f.scaled(2.0)).unwrap();
        for ((_, _, x), (_, _, y)) in a.triplets().zip(b.triplets()) {
            assert!(close(y, 4.0 * x, 1e-12 * x.abs().max(1.0)));
        }
    }

    #[test]
    fn local_blocks_of_special_images() {
        let v = equilateral();
        let same = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        let s = local_stretch_matrix(v, same).unwrap();
        let d = local_dirichlet_matrix(v).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!(close(s[a][b], d[a][b], 1e-15));
            }
        }
        let collapsed = local_stretch_matrix(v, [[0.3, 0.7]; 3]).unwrap();
        assert_eq!(collapsed, [[0.0; 3]; 3]);
        assert!(local_stretch_matrix([[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], same).is_err());
    }

    #[test]
    fn dirichlet_is_positive_semidefinite() {
        let m = grid_mesh(9, GridKind::Bump).unwrap();
        let l = assemble_dirichlet(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            assert!(l.quadratic_form(&x) >= -1e-10 * norm2);
        }
    }

    #[test]
    fn matrix_market_dump() {
        let m = grid_mesh(2, GridKind::Flat).unwrap();
        let l = assemble_dirichlet(&m).unwrap();
        let mut buf = Vec::new();
        l.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        lines.next();
        assert_eq!(lines.next().unwrap(), format!("4 4 {}", l.pattern().nnz()));
        assert_eq!(text.lines().count(), 3 + l.pattern().nnz());
    }

    #[test]
    fn perturbation_breaks_row_sum() {
        let m = grid_mesh(3, GridKind::Flat).unwrap();
        let mut l = assemble_dirichlet(&m).unwrap();
        l.perturb_entry(4, 1, 0.25).unwrap();
        assert!(l.max_relative_row_sum() > 1e-3);
        assert!(l.max_asymmetry() > 0.2);
        assert!(l.perturb_entry(0, 8, 1.0).is_err());
    }

    fn point3() -> impl Strategy<Value = Point3> {
        prop::array::uniform3(-2.0f64..2.0)
    }

    fn point2() -> impl Strategy<Value = Point2> {
        prop::array::uniform2(-2.0f64..2.0)
    }

    proptest! {
        #[test]
        fn local_stretch_is_symmetric_with_zero_rows(
            v in prop::array::uniform3(point3()),
            f in prop::array::uniform3(point2()),
        ) {
            prop_assume!(crate::mesh::face_area_3d(v[0], v[1], v[2]) > 1e-3);
            let m = local_stretch_matrix(v, f).unwrap();
            let scale = m.iter().flatten().fold(1.0f64, |a, b| a.max(b.abs()));
            for a in 0..3 {
                prop_assert!((m[a][0] + m[a][1] + m[a][2]).abs() <= 1e-13 * scale);
                for b in 0..3 {
                    prop_assert_eq!(m[a][b], m[b][a]);
                }
            }
        }

        /// The dot-product block equals the cot-weight definition
        /// `−cot θ_k(f)·|f(τ)| / (2|τ|)`, with the image angle taken with the
        /// orientation of the image triangle so that folds keep the identity.
        #[test]
        fn local_stretch_matches_cot_definition(
            v in prop::array::uniform3(point3()),
            f in prop::array::uniform3(point2()),
        ) {
            let area = crate::mesh::face_area_3d(v[0], v[1], v[2]);
            let img_area = crate::mesh::signed_area_2d(f[0], f[1], f[2]);
            prop_assume!(area > 1e-3 && img_area.abs() > 1e-3);
            let m = local_stretch_matrix(v, f).unwrap();
            let cot = |apex: Point2, a: Point2, b: Point2| {
                let (ea, eb) = ([a[0] - apex[0], a[1] - apex[1]], [b[0] - apex[0], b[1] - apex[1]]);
                let cross = ea[0] * eb[1] - ea[1] * eb[0];
                (ea[0] * eb[0] + ea[1] * eb[1]) / cross.abs()
            };
            let pairs = [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)];
            for (i, j, k) in pairs {
                let want = -cot(f[k], f[i], f[j]) * img_area.abs() / (2.0 * area);
                let got = m[i][j];
                prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "({}, {}) {} vs {}", i, j, got, want);
            }
        }
    }
}
