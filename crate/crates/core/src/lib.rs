//! Square-shaped area-preserving (authalic) parameterization of triangle
//! meshes by stretch energy minimization.
//!
//! The pipeline normalizes a disk-like mesh to unit area, pins its boundary to
//! the sides of the unit square, starts from a harmonic map, and then runs a
//! fixed-point iteration on the stretch energy
//! `E_S(f) = Σ_τ |f(τ)|² / |τ|` until the authalic energy
//! `E_A(f) = E_S(f) − Σ_τ |f(τ)|` stops decreasing.
//!
//! ```no_run
//! use authalic::{grid_mesh, run_sem, summarize, GridKind, SolverConfig};
//!
//! let mesh = grid_mesh(33, GridKind::Bump).unwrap();
//! let result = run_sem(&mesh, &SolverConfig::default()).unwrap();
//! let report = summarize(&result.mesh, &result.mapping, &result);
//! println!("E_A = {:e}, folds = {}", report.authalic_energy, report.fold_count);
//! ```

// `!(x > 0.0)` deliberately treats NaN as a failure; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod laplacian;
pub mod linsolve;
pub mod mesh;
pub mod metrics;
pub mod sem;

pub use energy::{dirichlet_energy, stretch_energy, stretch_gradient, EnergyBreakdown, GradientField};
pub use error::{Error, Result, Violation};
pub use grid::{grid_mesh, GridKind};
pub use io::{load_mesh, MeshFormat};
pub use laplacian::{assemble_dirichlet, assemble_stretch, LaplacianKind, SparseLaplacian};
pub use linsolve::{solve_constrained, ConstrainedSystem};
pub use mesh::{boundary_loop, face_area_3d, normalize_area, signed_area_2d, Mapping, Mesh};
pub use metrics::{area_ratios, summarize, QualityReport};
pub use sem::{
    harmonic_initial, partition_boundary, run_sem, sem_step, BoundaryPartition, SolveResult,
    SolverConfig, Termination,
};
