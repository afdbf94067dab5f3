//! Synthetic unit-square grid meshes used by the CLI `generate` command and
//! throughout the test suites.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// The unit square in the plane `z = 0`.
    Flat,
    /// The unit square lifted by a Gaussian bump (see [`bump_height`]).
    Bump,
}

/// Height of the bump surface, `0.5·exp(−8((x−½)² + (y−½)²))`.
pub fn bump_height(x: f64, y: f64) -> f64 {
    0.5 * (-8.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
}

/// Whether cell `(i, j)` of a `cells × cells` grid is split along its
/// lower-left to upper-right diagonal.
///
/// The pattern alternates like a checkerboard and is mirrored about the
/// grid's centre lines, so every corner cell is split through the square's
/// corner and no face ends up with all three vertices on the boundary.
fn splits_rising(i: usize, j: usize, cells: usize) -> bool {
    let fold = |k: usize| {
        if 2 * k < cells {
            (k, false)
        } else {
            (cells - 1 - k, true)
        }
    };
    let (fi, mi) = fold(i);
    let (fj, mj) = fold(j);
    ((fi + fj) % 2 == 0) ^ (mi ^ mj)
}

/// Triangulated `resolution × resolution` vertex grid over `[0,1]²`.
///
/// Vertex `(i, j)` has index `j·resolution + i` and sits at
/// `(i/(resolution−1), j/(resolution−1))`. Faces are counterclockwise.
pub fn grid_mesh(resolution: usize, kind: GridKind) -> Result<Mesh> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be >= 2 (got {resolution})"
        )));
    }
    let cells = resolution - 1;
    let h = 1.0 / cells as f64;
    let mut vertices: Vec<Point3> = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let z = match kind {
                GridKind::Flat => 0.0,
                GridKind::Bump => bump_height(x, y),
            };
            vertices.push([x, y, z]);
        }
    }
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let a = j * resolution + i;
            let b = a + 1;
            let c = a + resolution;
            let d = c + 1;
            if splits_rising(i, j, cells) {
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            } else {
                faces.push([a, b, c]);
                faces.push([b, d, c]);
            }
        }
    }
    Mesh::new(vertices, faces)
}
