//! Dirichlet, stretch and authalic energies, and the stretch-energy gradient.

use crate::error::Result;
use crate::laplacian::{assemble_dirichlet, check_rows, LaplacianAssembler, SparseLaplacian};
use crate::mesh::{signed_area_2d, Mapping, Mesh, Point2};

/// Stretch energy evaluated two ways, plus the image area and `E_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½ tr(fᵀ L_S(f) f)`.
    pub stretch_quadratic: f64,
    /// `Σ_τ |f(τ)|² / |τ|`, the value used everywhere downstream.
    pub stretch_geometric: f64,
    /// `Σ_τ |f(τ)|` with signed image areas.
    pub image_area: f64,
    /// `stretch_geometric − image_area`.
    pub authalic: f64,
}

/// Per-vertex `n×2` field, row `ℓ` holding the derivatives with respect to `f_ℓ¹, f_ℓ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    rows: Vec<Point2>,
}

impl GradientField {
    pub fn from_rows(rows: Vec<Point2>) -> Self {
        GradientField { rows }
    }

    pub fn rows(&self) -> &[Point2] {
        &self.rows
    }

    pub fn column(&self, s: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[s]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GradientField) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Signed image area of every face.
pub fn image_face_areas(mesh: &Mesh, mapping: &Mapping) -> Vec<f64> {
    mesh.faces()
        .iter()
        .map(|&f| {
            let [a, b, c] = mapping.face_image(f);
            signed_area_2d(a, b, c)
        })
        .collect()
}

/// `(Σ|f(τ)|²/|τ|, Σ|f(τ)|)` in one pass over the faces.
pub fn stretch_and_area(mesh: &Mesh, mapping: &Mapping) -> Result<(f64, f64)> {
    check_rows(mesh, mapping)?;
    let mut stretch = 0.0;
    let mut area = 0.0;
    for (&f, &ref_area) in mesh.faces().iter().zip(mesh.face_areas()) {
        let [a, b, c] = mapping.face_image(f);
        let img = signed_area_2d(a, b, c);
        stretch += img * img / ref_area;
        area += img;
    }
    Ok((stretch, area))
}

/// Authalic energy `E_A = E_S − 𝒜(f)` from the geometric form.
pub fn authalic_energy(mesh: &Mesh, mapping: &Mapping) -> Result<f64> {
    let (s, a) = stretch_and_area(mesh, mapping)?;
    Ok(s - a)
}

fn half_trace(l: &SparseLaplacian, mapping: &Mapping) -> f64 {
    0.5 * (0..2)
        .map(|s| l.quadratic_form(&mapping.column(s)))
        .sum::<f64>()
}

/// Evaluates both stretch-energy formulas.
pub fn stretch_energy(mesh: &Mesh, mapping: &Mapping) -> Result<EnergyBreakdown> {
    let ls = LaplacianAssembler::new(mesh).stretch(mesh, mapping)?;
    stretch_energy_with(mesh, mapping, &ls)
}

/// Like [`stretch_energy`], reusing an already assembled `L_S(f)`.
pub fn stretch_energy_with(mesh: &Mesh, mapping: &Mapping, ls: &SparseLaplacian) -> Result<EnergyBreakdown> {
    let (stretch_geometric, image_area) = stretch_and_area(mesh, mapping)?;
    Ok(EnergyBreakdown {
        stretch_quadratic: half_trace(ls, mapping),
        stretch_geometric,
        image_area,
        authalic: stretch_geometric - image_area,
    })
}

/// `E_D(f) = ½(f¹ᵀ L_D f¹ + f²ᵀ L_D f²)`.
pub fn dirichlet_energy(mesh: &Mesh, mapping: &Mapping) -> Result<f64> {
    check_rows(mesh, mapping)?;
    Ok(half_trace(&assemble_dirichlet(mesh)?, mapping))
}

fn times_mapping(l: &SparseLaplacian, mapping: &Mapping, factor: f64) -> GradientField {
    let u = l.matvec(&mapping.column(0));
    let v = l.matvec(&mapping.column(1));
    GradientField {
        rows: u.into_iter().zip(v).map(|(a, b)| [factor * a, factor * b]).collect(),
    }
}

/// `∇E_S(f) = 2 L_S(f) f`, column by column.
pub fn stretch_gradient(mesh: &Mesh, mapping: &Mapping) -> Result<GradientField> {
    let ls = LaplacianAssembler::new(mesh).stretch(mesh, mapping)?;
    Ok(times_mapping(&ls, mapping, 2.0))
}

/// `L_S(f) f` from an assembled matrix.
pub fn laplacian_times_mapping(ls: &SparseLaplacian, mapping: &Mapping) -> GradientField {
    times_mapping(ls, mapping, 1.0)
}

/// Half gradient `h = (h¹, h²)` accumulated face by face, without any matrix:
/// for a face `[v_i, v_j, v_k]` the contribution to row `i` is
/// `½ (|f(τ)|/|τ|) (f_j² − f_k², f_k¹ − f_j¹)`.
///
/// It equals `L_S(f) f` and serves as an independent check of the assembly.
pub fn stretch_half_gradient(mesh: &Mesh, mapping: &Mapping) -> Result<GradientField> {
    check_rows(mesh, mapping)?;
    let mut rows = vec![[0.0; 2]; mesh.num_vertices()];
    for (&face, &ref_area) in mesh.faces().iter().zip(mesh.face_areas()) {
        let img = mapping.face_image(face);
        let ratio = signed_area_2d(img[0], img[1], img[2]) / ref_area;
        for k in 0..3 {
            let (fj, fk) = (img[(k + 1) % 3], img[(k + 2) % 3]);
            let row = &mut rows[face[k]];
            row[0] += 0.5 * ratio * (fj[1] - fk[1]);
            row[1] += 0.5 * ratio * (fk[0] - fj[0]);
        }
    }
    Ok(GradientField { rows })
}

/// Central finite differences of the geometric stretch energy.
///
/// Coordinate `f_ℓ^s` is perturbed by `h = step·max(1, |f_ℓ^s|)`; only the
/// faces around vertex `ℓ` are re-evaluated, which gives the same difference
/// as the full sum with less cancellation.
pub fn gradient_fd_oracle(mesh: &Mesh, mapping: &Mapping, step: f64) -> Result<GradientField> {
    check_rows(mesh, mapping)?;
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut incident = vec![Vec::new(); mesh.num_vertices()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for &v in f {
            incident[v].push(fi);
        }
    }
    let mut coords = mapping.coords().to_vec();
    let local = |coords: &[Point2], faces: &[usize]| -> f64 {
        faces
            .iter()
            .map(|&fi| {
                let f = mesh.faces()[fi];
                let a = signed_area_2d(coords[f[0]], coords[f[1]], coords[f[2]]);
                a * a / mesh.face_areas()[fi]
            })
            .sum()
    };
    let mut rows = vec![[0.0; 2]; mesh.num_vertices()];
    for l in 0..mesh.num_vertices() {
        for s in 0..2 {
            let orig = coords[l][s];
            let h = step * orig.abs().max(1.0);
            coords[l][s] = orig + h;
            let plus = local(&coords, &incident[l]);
            coords[l][s] = orig - h;
            let minus = local(&coords, &incident[l]);
            coords[l][s] = orig;
            rows[l][s] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(GradientField { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{grid_mesh, GridKind};
    use crate::mesh::normalize_area;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn right_triangle() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn random_mapping(rng: &mut ChaCha8Rng, n: usize) -> Mapping {
        Mapping::new(
            (0..n)
                .map(|_| [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn flat_identity_energies() {
        let m = grid_mesh(8, GridKind::Flat).unwrap();
        let e = stretch_energy(&m, &Mapping::planar_projection(&m)).unwrap();
        assert!((e.stretch_geometric - 1.0).abs() < 1e-14);
        assert!((e.image_area - 1.0).abs() < 1e-14);
        assert!(e.authalic.abs() < 1e-14);
        assert!((e.stretch_quadratic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_triangle_energy() {
        let m = right_triangle();
        let e = stretch_energy(&m, &Mapping::planar_projection(&m)).unwrap();
        assert_eq!(e.stretch_geometric, 0.5);
        assert_eq!(e.authalic, 0.0);
    }

    #[test]
    fn scaling_laws() {
        let m = grid_mesh(5, GridKind::Bump).unwrap();
        let f = random_mapping(&mut ChaCha8Rng::seed_from_u64(3), 25);
        let a = stretch_energy(&m, &f).unwrap();
        let b = stretch_energy(&m, &f.scaled(1.7)).unwrap();
        let c4 = 1.7f64.powi(4);
        assert!((b.stretch_geometric - c4 * a.stretch_geometric).abs() <= 1e-12 * b.stretch_geometric);
        assert!((b.image_area - 1.7 * 1.7 * a.image_area).abs() <= 1e-12 * b.image_area.abs());
    }

    #[test]
    fn dirichlet_examples() {
        let m = grid_mesh(5, GridKind::Bump).unwrap();
        let constant = Mapping::new(vec![[0.3, -2.0]; 25]).unwrap();
        assert!(dirichlet_energy(&m, &constant).unwrap().abs() < 1e-13);
        let flat = grid_mesh(5, GridKind::Flat).unwrap();
        let id = Mapping::planar_projection(&flat);
        let ed = dirichlet_energy(&flat, &id).unwrap();
        let es = stretch_energy(&flat, &id).unwrap().stretch_quadratic;
        assert!((ed - es).abs() < 1e-12);
    }

    /// Per-edge brute force with angles from `acos`.
    #[test]
    fn dirichlet_matches_edge_sum() {
        let m = grid_mesh(6, GridKind::Bump).unwrap();
        let f = random_mapping(&mut ChaCha8Rng::seed_from_u64(5), 36);
        let v = m.vertices();
        let mut want = 0.0;
        for face in m.faces() {
            for k in 0..3 {
                let (a, b, c) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
                let e1 = crate::mesh::sub3(v[a], v[c]);
                let e2 = crate::mesh::sub3(v[b], v[c]);
                let theta = (crate::mesh::dot3(e1, e2)
                    / (crate::mesh::norm3(e1) * crate::mesh::norm3(e2)))
                .acos();
                let d = [f.coords()[a][0] - f.coords()[b][0], f.coords()[a][1] - f.coords()[b][1]];
                want += 0.5 * 0.5 / theta.tan() * (d[0] * d[0] + d[1] * d[1]);
            }
        }
        let got = dirichlet_energy(&m, &f).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn right_triangle_gradient() {
        let m = right_triangle();
        let id = Mapping::planar_projection(&m);
        let g = stretch_gradient(&m, &id).unwrap();
        let want = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for (r, w) in g.rows().iter().zip(want) {
            assert!((r[0] - w[0]).abs() < 1e-14 && (r[1] - w[1]).abs() < 1e-14, "{r:?}");
        }
        let fd = gradient_fd_oracle(&m, &id, 1e-6).unwrap();
        assert!(fd.max_abs_diff(&g) < 1e-6);
    }

    #[test]
    fn collapsed_mapping_has_zero_gradient() {
        let m = grid_mesh(4, GridKind::Bump).unwrap();
        let f = Mapping::new(vec![[0.4, 0.1]; 16]).unwrap();
        assert_eq!(stretch_gradient(&m, &f).unwrap().max_abs(), 0.0);
        assert!(gradient_fd_oracle(&m, &f, 1e-6).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = grid_mesh(5, GridKind::Flat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let f = random_mapping(&mut rng, 25);
            let g = stretch_gradient(&m, &f).unwrap();
            let fd = gradient_fd_oracle(&m, &f, 1e-6).unwrap();
            assert!(g.max_abs_diff(&fd) / g.max_abs().max(1e-300) < 1e-5);
        }
    }

    #[test]
    fn half_gradient_is_laplacian_times_mapping() {
        let m = grid_mesh(7, GridKind::Bump).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let f = random_mapping(&mut rng, 49);
            let ls = LaplacianAssembler::new(&m).stretch(&m, &f).unwrap();
            let lf = laplacian_times_mapping(&ls, &f);
            let h = stretch_half_gradient(&m, &f).unwrap();
            for s in 0..2 {
                let (a, b) = (h.column(s), lf.column(s));
                let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                assert!(err <= 1e-12 * scale + 1e-14, "s={s}: {err:e} vs {scale:e}");
            }
        }
    }

    /// Fold-free perturbations of a unit-area mesh's own embedding, rescaled
    /// to unit image area, never have stretch energy below 1.
    #[test]
    fn stretch_is_bounded_below_at_unit_area() {
        let m = normalize_area(&grid_mesh(6, GridKind::Bump).unwrap());
        let base = Mapping::planar_projection(&grid_mesh(6, GridKind::Flat).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut tested = 0;
        while tested < 200 {
            let noisy = Mapping::new(
                base.coords()
                    .iter()
                    .map(|p| [p[0] + rng.gen_range(-0.08..0.08), p[1] + rng.gen_range(-0.08..0.08)])
                    .collect(),
            )
            .unwrap();
            if image_face_areas(&m, &noisy).iter().any(|&a| a <= 0.0) {
                continue;
            }
            let (_, area) = stretch_and_area(&m, &noisy).unwrap();
            let g = noisy.scaled(1.0 / area.sqrt());
            let e = stretch_energy(&m, &g).unwrap();
            assert!(e.stretch_geometric >= 1.0 - 1e-10);
            assert!(e.authalic >= -1e-10);
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn quadratic_and_geometric_forms_agree(
            seed in any::<u64>(),
            res in 2usize..7,
            bump in any::<bool>(),
        ) {
            let kind = if bump { GridKind::Bump } else { GridKind::Flat };
            let m = grid_mesh(res, kind).unwrap();
            let f = random_mapping(&mut ChaCha8Rng::seed_from_u64(seed), res * res);
            let e = stretch_energy(&m, &f).unwrap();
            prop_assert!((e.stretch_quadratic - e.stretch_geometric).abs()
                <= 1e-10 * e.stretch_geometric.max(1.0));
            prop_assert_eq!(e.authalic, e.stretch_geometric - e.image_area);
        }
    }
}
