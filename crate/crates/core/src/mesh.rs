//! Triangle meshes, planar mappings, and the geometric primitives shared by
//! every other module.
//!
//! A [`Mesh`] is validated on construction: it must be an edge-manifold,
//! consistently oriented, connected triangle mesh with exactly one boundary
//! loop (a topological disk). Indices are 0-based.

use std::collections::HashMap;

use crate::error::{Error, Result, Violation};

pub type Point3 = [f64; 3];
pub type Point2 = [f64; 2];

#[inline]
pub(crate) fn sub3(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm3(a: Point3) -> f64 {
    dot3(a, a).sqrt()
}

/// Area of the triangle `pqr` in space, `‖(q−p)×(r−p)‖/2`. Collinear input gives 0.
pub fn face_area_3d(p: Point3, q: Point3, r: Point3) -> f64 {
    0.5 * norm3(cross3(sub3(q, p), sub3(r, p)))
}

/// Signed area of the planar triangle `abc`; positive iff counterclockwise.
///
/// Computed from edge vectors at `a`, the same expression the 3D area uses
/// for triangles in the plane `z = 0`, so the two agree bit for bit there,
/// and swapping `b` and `c` negates the result exactly.
pub fn signed_area_2d(a: Point2, b: Point2, c: Point2) -> f64 {
    let (u, v) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
    0.5 * (u[0] * v[1] - u[1] * v[0])
}

/// Cotangent of the angle at `apex` between the edges towards `a` and `b`.
/// Returns `None` when the two edges are parallel.
pub fn cotangent_at(apex: Point3, a: Point3, b: Point3) -> Option<f64> {
    let ea = sub3(a, apex);
    let eb = sub3(b, apex);
    let cross = norm3(cross3(ea, eb));
    if cross == 0.0 {
        None
    } else {
        Some(dot3(ea, eb) / cross)
    }
}

/// Validated simplicial surface.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    total_area: f64,
    boundary: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh and checks every invariant, returning the first violation found.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Violation::Empty.into());
        }
        let n = vertices.len();
        if let Some((i, _)) = vertices
            .iter()
            .enumerate()
            .find(|(_, p)| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidInput(format!("vertex {i} has a non-finite coordinate")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&v| v >= n) {
                return Err(Violation::IndexOutOfRange { face: fi, index }.into());
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Violation::RepeatedVertex { face: fi }.into());
            }
        }

        let face_areas: Vec<f64> = faces
            .iter()
            .map(|f| face_area_3d(vertices[f[0]], vertices[f[1]], vertices[f[2]]))
            .collect();
        if let Some(fi) = face_areas.iter().position(|&a| !(a > 0.0)) {
            return Err(Violation::DegenerateFace { face: fi }.into());
        }

        check_edges(&faces)?;

        let mut used = vec![false; n];
        for f in &faces {
            for &v in f {
                used[v] = true;
            }
        }
        if let Some(vertex) = used.iter().position(|&u| !u) {
            return Err(Violation::IsolatedVertex { vertex }.into());
        }

        let components = face_components(&faces);
        if components > 1 {
            return Err(Violation::Disconnected { components }.into());
        }

        let boundary = boundary_loop(&faces)?;
        let total_area = face_areas.iter().sum();
        let mesh = Mesh {
            vertices,
            faces,
            face_areas,
            total_area,
            boundary,
        };

        let lonely = mesh.faces_without_interior_vertex();
        if !lonely.is_empty() {
            log::warn!(
                "{} face(s) have no interior vertex (first: face {}); the area of such \
                 faces is hard to control under square boundary constraints",
                lonely.len(),
                lonely[0]
            );
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// The boundary cycle, counterclockwise with respect to the face
    /// orientation, starting at its smallest vertex index.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &b in &self.boundary {
            mask[b] = true;
        }
        mask
    }

    /// Faces whose three vertices all lie on the boundary.
    pub fn faces_without_interior_vertex(&self) -> Vec<usize> {
        let mask = self.is_boundary_mask();
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.iter().all(|&v| mask[v]))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sorted vertex adjacency (without the vertex itself).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    fn rescaled(&self, scale: f64) -> Mesh {
        let vertices: Vec<Point3> = self
            .vertices
            .iter()
            .map(|p| [p[0] * scale, p[1] * scale, p[2] * scale])
            .collect();
        let face_areas: Vec<f64> = self
            .faces
            .iter()
            .map(|f| face_area_3d(vertices[f[0]], vertices[f[1]], vertices[f[2]]))
            .collect();
        let total_area = face_areas.iter().sum();
        Mesh {
            vertices,
            faces: self.faces.clone(),
            face_areas,
            total_area,
            boundary: self.boundary.clone(),
        }
    }
}

/// Rejects non-manifold edges and inconsistent orientation.
fn check_edges(faces: &[[usize; 3]]) -> Result<()> {
    let mut undirected: HashMap<(usize, usize), u32> = HashMap::with_capacity(faces.len() * 2);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    if let Some((&(a, b), _)) = undirected
        .iter()
        .filter(|(_, &c)| c > 2)
        .min_by_key(|(k, _)| **k)
    {
        return Err(Violation::NonManifoldEdge { a, b }.into());
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if directed.insert((a, b), fi).is_some() {
                return Err(Violation::InconsistentOrientation { a, b }.into());
            }
        }
    }
    Ok(())
}

fn face_components(faces: &[[usize; 3]]) -> usize {
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut first_face: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match first_face.get(&key) {
                Some(&other) => {
                    let (ra, rb) = (find(&mut parent, fi), find(&mut parent, other));
                    if ra != rb {
                        parent[ra] = rb;
                    }
                }
                None => {
                    first_face.insert(key, fi);
                }
            }
        }
    }
    (0..faces.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// Extracts the unique boundary cycle of a face list.
///
/// Boundary edges are directed edges `a→b` of some face whose reverse `b→a`
/// belongs to no face; following them keeps the adjacent face on the left.
/// The cycle starts at its smallest vertex index.
pub fn boundary_loop(faces: &[[usize; 3]]) -> Result<Vec<usize>> {
    let mut directed: HashMap<(usize, usize), ()> = HashMap::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            directed.insert((f[k], f[(k + 1) % 3]), ());
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut starts: Vec<usize> = Vec::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if !directed.contains_key(&(b, a)) {
                if next.insert(a, b).is_some() {
                    return Err(Violation::NonManifoldVertex { vertex: a }.into());
                }
                starts.push(a);
            }
        }
    }
    if next.is_empty() {
        return Err(Violation::NoBoundaryLoop.into());
    }
    starts.sort_unstable();

    let mut visited: HashMap<usize, ()> = HashMap::with_capacity(next.len());
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for &s in &starts {
        if visited.contains_key(&s) {
            continue;
        }
        let mut cycle = vec![s];
        visited.insert(s, ());
        let mut cur = next[&s];
        while cur != s {
            if visited.insert(cur, ()).is_some() {
                return Err(Violation::NonManifoldVertex { vertex: cur }.into());
            }
            cycle.push(cur);
            cur = match next.get(&cur) {
                Some(&v) => v,
                None => return Err(Violation::NonManifoldVertex { vertex: cur }.into()),
            };
        }
        loops.push(cycle);
    }
    match loops.len() {
        1 => Ok(loops.pop().unwrap()),
        k => Err(Violation::MultipleBoundaryLoops { loops: k }.into()),
    }
}

/// Uniformly rescales the mesh so that its total area is 1.
pub fn normalize_area(mesh: &Mesh) -> Mesh {
    let scale = (1.0 / mesh.total_area()).sqrt();
    if scale == 1.0 {
        return mesh.clone();
    }
    mesh.rescaled(scale)
}

/// Per-vertex planar image of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    coords: Vec<Point2>,
}

impl Mapping {
    pub fn new(coords: Vec<Point2>) -> Result<Self> {
        if let Some(i) = coords
            .iter()
            .position(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(Error::InvalidInput(format!("mapping row {i} is not finite")));
        }
        Ok(Mapping { coords })
    }

    /// Like [`Mapping::new`], additionally checking the row count against `mesh`.
    pub fn for_mesh(mesh: &Mesh, coords: Vec<Point2>) -> Result<Self> {
        if coords.len() != mesh.num_vertices() {
            return Err(Error::InvalidInput(format!(
                "mapping has {} rows but the mesh has {} vertices",
                coords.len(),
                mesh.num_vertices()
            )));
        }
        Mapping::new(coords)
    }

    pub fn from_columns(u: &[f64], v: &[f64]) -> Result<Self> {
        assert_eq!(u.len(), v.len());
        Mapping::new(u.iter().zip(v).map(|(&a, &b)| [a, b]).collect())
    }

    /// The `x, y` projection of the mesh vertices.
    pub fn planar_projection(mesh: &Mesh) -> Self {
        Mapping {
            coords: mesh.vertices().iter().map(|p| [p[0], p[1]]).collect(),
        }
    }

    pub fn coords(&self) -> &[Point2] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinate column `s` (0 or 1).
    pub fn column(&self, s: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[s]).collect()
    }

    pub fn scaled(&self, c: f64) -> Mapping {
        Mapping {
            coords: self.coords.iter().map(|p| [p[0] * c, p[1] * c]).collect(),
        }
    }

    pub fn face_image(&self, face: [usize; 3]) -> [Point2; 3] {
        [self.coords[face[0]], self.coords[face[1]], self.coords[face[2]]]
    }

    pub fn max_abs_diff(&self, other: &Mapping) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Barycentric tolerance of [`evaluate_mapping`].
pub const BARYCENTRIC_EPS: f64 = 1e-9;

/// Evaluates the piecewise-affine extension of `mapping` at `point` inside `face`.
pub fn evaluate_mapping(mesh: &Mesh, mapping: &Mapping, face: usize, point: Point3) -> Result<Point2> {
    let f = *mesh
        .faces()
        .get(face)
        .ok_or_else(|| Error::InvalidInput(format!("face {face} does not exist")))?;
    let [vi, vj, vk] = [0, 1, 2].map(|k| mesh.vertices()[f[k]]);
    let normal = cross3(sub3(vj, vi), sub3(vk, vi));
    let nn = dot3(normal, normal);
    let scale = norm3(sub3(vj, vi)).max(norm3(sub3(vk, vi))).max(1.0);
    let offset = dot3(normal, sub3(point, vi)) / nn.sqrt();
    if offset.abs() > BARYCENTRIC_EPS * scale {
        return Err(Error::InvalidInput(format!(
            "point is {offset:e} away from the plane of face {face}"
        )));
    }
    // Signed sub-triangle areas relative to the face normal.
    let lambda = [
        dot3(normal, cross3(sub3(vj, point), sub3(vk, point))) / nn,
        dot3(normal, cross3(sub3(vk, point), sub3(vi, point))) / nn,
        dot3(normal, cross3(sub3(vi, point), sub3(vj, point))) / nn,
    ];
    if lambda
        .iter()
        .any(|&l| !(-BARYCENTRIC_EPS..=1.0 + BARYCENTRIC_EPS).contains(&l))
    {
        return Err(Error::InvalidInput(format!(
            "point lies outside face {face} (barycentric {lambda:?})"
        )));
    }
    let img = mapping.face_image(f);
    Ok([
        lambda[0] * img[0][0] + lambda[1] * img[1][0] + lambda[2] * img[2][0],
        lambda[0] * img[0][1] + lambda[1] * img[1][1] + lambda[2] * img[2][1],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{grid_mesh, GridKind};
    use proptest::prelude::*;

    fn right_triangle() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn face_area_examples() {
        assert_eq!(face_area_3d([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 0.5);
        assert_eq!(face_area_3d([0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]), 0.0);
        assert_eq!(face_area_3d([0.0; 3], [1.0, 0.0, 0.0], [0.0, 0.0, 3.0]), 1.5);
    }

    #[test]
    fn signed_area_examples() {
        assert_eq!(signed_area_2d([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]), 0.5);
        assert_eq!(signed_area_2d([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]), -0.5);
        assert_eq!(signed_area_2d([0.0, 0.0], [2.0, 0.0], [2.0, 3.0]), 3.0);
    }

    #[test]
    fn single_triangle_mesh() {
        let m = right_triangle();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_faces(), 1);
        assert_eq!(m.total_area(), 0.5);
        assert_eq!(m.boundary(), &[0, 1, 2]);
        assert_eq!(m.faces_without_interior_vertex(), vec![0]);
    }

    #[test]
    fn grid_boundary_is_ccw_from_smallest_index() {
        let m = grid_mesh(3, GridKind::Flat).unwrap();
        assert_eq!(m.boundary(), &[0, 1, 2, 5, 8, 7, 6, 3]);
        let faces = m.faces();
        for w in m.boundary().windows(2).chain(std::iter::once(&[3usize, 0][..])) {
            let (a, b) = (w[0], w[1]);
            let incident = faces
                .iter()
                .filter(|f| f.contains(&a) && f.contains(&b))
                .count();
            assert_eq!(incident, 1, "boundary edge ({a},{b})");
        }
    }

    #[test]
    fn tetrahedron_has_no_boundary() {
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let verts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let err = Mesh::new(verts, faces.clone()).unwrap_err();
        assert!(err.to_string().contains("no boundary loop"), "{err}");
        assert!(matches!(
            boundary_loop(&faces),
            Err(Error::Validation(Violation::NoBoundaryLoop))
        ));
    }

    #[test]
    fn bowtie_is_rejected() {
        let verts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ];
        let err = Mesh::new(verts, vec![[0, 1, 2], [0, 3, 4]]).unwrap_err();
        assert!(err.to_string().contains("non-manifold or disconnected"), "{err}");
    }

    #[test]
    fn disjoint_triangles_are_rejected() {
        let verts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [5.0, 0.0, 0.0],
            [6.0, 0.0, 0.0],
            [5.0, 1.0, 0.0],
        ];
        let err = Mesh::new(verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap_err();
        assert!(err.to_string().contains("non-manifold or disconnected"), "{err}");
    }

    #[test]
    fn validation_errors() {
        let tri = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(matches!(
            Mesh::new(tri.clone(), vec![[0, 1, 7]]),
            Err(Error::Validation(Violation::IndexOutOfRange { index: 7, .. }))
        ));
        assert!(matches!(
            Mesh::new(tri.clone(), vec![[0, 1, 1]]),
            Err(Error::Validation(Violation::RepeatedVertex { .. }))
        ));
        let collinear = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            Mesh::new(collinear, vec![[0, 1, 2]]),
            Err(Error::Validation(Violation::DegenerateFace { face: 0 }))
        ));
        // second face repeats the shared edge direction
        assert!(matches!(
            Mesh::new(tri.clone(), vec![[0, 1, 2], [1, 2, 3]]),
            Err(Error::Validation(Violation::InconsistentOrientation { .. }))
        ));
        assert!(matches!(
            Mesh::new(tri.clone(), vec![[0, 1, 2]]),
            Err(Error::Validation(Violation::IsolatedVertex { vertex: 3 }))
        ));
        let fan = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        assert!(matches!(
            Mesh::new(fan, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]),
            Err(Error::Validation(Violation::NonManifoldEdge { a: 0, b: 1 }))
        ));
    }

    #[test]
    fn annulus_has_two_loops() {
        // square ring: outer 0..4, inner 4..8
        let verts = vec![
            [0.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
            [3.0, 3.0, 0.0],
            [0.0, 3.0, 0.0],
            [1.0, 1.0, 0.0],
            [2.0, 1.0, 0.0],
            [2.0, 2.0, 0.0],
            [1.0, 2.0, 0.0],
        ];
        let faces = vec![
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        let err = Mesh::new(verts, faces).unwrap_err();
        assert!(matches!(
            err,
            Error::Validation(Violation::MultipleBoundaryLoops { loops: 2 })
        ));
    }

    #[test]
    fn normalize_examples() {
        let big = Mesh::new(
            vec![[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 2.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(big.total_area(), 4.0);
        let n = normalize_area(&big);
        assert_eq!(n.vertices()[1], [2.0, 0.0, 0.0]);
        assert_eq!(n.vertices()[2], [0.0, 1.0, 0.0]);
        assert!((n.total_area() - 1.0).abs() < 1e-12);

        let unit = grid_mesh(4, GridKind::Flat).unwrap();
        let same = normalize_area(&unit);
        for (a, b) in unit.vertices().iter().zip(same.vertices()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-15);
            }
        }

        let half = normalize_area(&right_triangle());
        assert!((half.vertices()[1][0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((half.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_mapping_examples() {
        let m = right_triangle();
        let f = Mapping::new(vec![[0.3, 0.1], [2.0, -1.0], [0.5, 4.0]]).unwrap();
        assert_eq!(evaluate_mapping(&m, &f, 0, [0.0, 0.0, 0.0]).unwrap(), [0.3, 0.1]);
        assert_eq!(evaluate_mapping(&m, &f, 0, [1.0, 0.0, 0.0]).unwrap(), [2.0, -1.0]);
        let c = evaluate_mapping(&m, &f, 0, [1.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap();
        assert!((c[0] - (0.3 + 2.0 + 0.5) / 3.0).abs() < 1e-15);
        assert!((c[1] - (0.1 - 1.0 + 4.0) / 3.0).abs() < 1e-15);
        let mid = evaluate_mapping(&m, &f, 0, [0.5, 0.0, 0.0]).unwrap();
        assert!((mid[0] - 1.15).abs() < 1e-15 && (mid[1] + 0.45).abs() < 1e-15);
        assert!(evaluate_mapping(&m, &f, 0, [1.0, 1.0, 0.0]).is_err());
        assert!(evaluate_mapping(&m, &f, 0, [0.2, 0.2, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn signed_area_is_antisymmetric(
            a in prop::array::uniform2(-10.0f64..10.0),
            b in prop::array::uniform2(-10.0f64..10.0),
            c in prop::array::uniform2(-10.0f64..10.0),
        ) {
            prop_assert_eq!(signed_area_2d(a, b, c), -signed_area_2d(a, c, b));
        }

        #[test]
        fn planar_area_matches_signed_area(
            a in prop::array::uniform2(-10.0f64..10.0),
            b in prop::array::uniform2(-10.0f64..10.0),
            c in prop::array::uniform2(-10.0f64..10.0),
        ) {
            let s = signed_area_2d(a, b, c);
            prop_assume!(s > 1e-6);
            let u = face_area_3d([a[0], a[1], 0.0], [b[0], b[1], 0.0], [c[0], c[1], 0.0]);
            prop_assert!((u - s).abs() <= 1e-12 * s.max(1.0));
        }
    }
}
