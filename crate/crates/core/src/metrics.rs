//! Area-distortion statistics of a mapping.

use serde::Serialize;

use crate::energy::{image_face_areas, stretch_and_area};
use crate::mesh::{Mapping, Mesh};
use crate::sem::{SolveResult, Termination};

/// Version of the JSON layout written by [`QualityReport::to_json`].
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// Per-face area ratios `|f(τ)| / |τ|` with signed image areas.
pub fn area_ratios(mesh: &Mesh, mapping: &Mapping) -> Vec<f64> {
    image_face_areas(mesh, mapping)
        .iter()
        .zip(mesh.face_areas())
        .map(|(img, a)| img / a)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Uniform bins over `[lo, hi]`; values outside fall into the end bins.
    pub fn uniform(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = ((v - lo) / width).floor();
            let k = if k.is_nan() { 0 } else { (k.max(0.0) as usize).min(bins - 1) };
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub mesh: MeshStats,
    pub iterations: usize,
    pub termination: Option<Termination>,
    /// Unweighted mean over faces.
    pub area_ratio_mean: f64,
    /// Population standard deviation over faces.
    pub area_ratio_sd: f64,
    /// `Σ R_A |τ| / Σ |τ|`, equal to image area over mesh area.
    pub area_ratio_weighted_mean: f64,
    pub area_ratio_min: f64,
    pub area_ratio_max: f64,
    pub stretch_energy: f64,
    pub image_area: f64,
    pub authalic_energy: f64,
    pub fold_count: usize,
    pub boundary_excursions: usize,
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

impl QualityReport {
    /// Statistics of `mapping` alone, without solver information.
    pub fn for_mapping(mesh: &Mesh, mapping: &Mapping) -> Self {
        let ratios = area_ratios(mesh, mapping);
        let m = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / m;
        let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / m).sqrt();
        let weighted = ratios
            .iter()
            .zip(mesh.face_areas())
            .map(|(r, a)| r * a)
            .sum::<f64>()
            / mesh.total_area();
        let (min, max) = ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let half = if sd > 0.0 { 5.0 * sd } else { 1e-6 };
        let histogram = Histogram::uniform(&ratios, (mean - half).max(0.0), mean + half, DEFAULT_HISTOGRAM_BINS);
        let (stretch, area) = stretch_and_area(mesh, mapping).expect("mapping rows match the mesh");
        QualityReport {
            schema_version: REPORT_SCHEMA_VERSION,
            mesh: MeshStats {
                vertices: mesh.num_vertices(),
                faces: mesh.num_faces(),
            },
            iterations: 0,
            termination: None,
            area_ratio_mean: mean,
            area_ratio_sd: sd,
            area_ratio_weighted_mean: weighted,
            area_ratio_min: min,
            area_ratio_max: max,
            stretch_energy: stretch,
            image_area: area,
            authalic_energy: stretch - area,
            fold_count: ratios.iter().filter(|&&r| r <= 0.0).count(),
            boundary_excursions: 0,
            histogram,
            wall_time_seconds: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line in the spirit of a results table row.
    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "n={} m={} iterations={} E_A={:.3e} mean={:.4} sd={:.4} folds={}",
            self.mesh.vertices,
            self.mesh.faces,
            self.iterations,
            self.authalic_energy,
            self.area_ratio_mean,
            self.area_ratio_sd,
            self.fold_count
        );
        if let Some(t) = self.termination {
            line.push_str(&format!(" termination={t}"));
        }
        if let Some(s) = self.wall_time_seconds {
            line.push_str(&format!(" time={s:.2}s"));
        }
        line
    }
}

/// Report for a finished run; `mesh` should be the mesh the run normalized.
pub fn summarize(mesh: &Mesh, mapping: &Mapping, result: &SolveResult) -> QualityReport {
    QualityReport {
        iterations: result.iterations_used,
        termination: Some(result.termination),
        boundary_excursions: result.boundary_excursions,
        ..QualityReport::for_mapping(mesh, mapping)
    }
}
