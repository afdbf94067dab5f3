//! Square-boundary stretch energy minimization.
//!
//! The boundary loop is cut at four corners into the sides of the unit
//! square. Each side pins one image coordinate (`f² = 0` on the bottom side,
//! `f¹ = 1` on the right, `f² = 1` on the top, `f¹ = 0` on the left) and lets
//! the other slide; corners are pinned in both. Starting from the harmonic
//! map with these constraints, every iteration re-assembles the stretch
//! Laplacian at the current map and solves for the free coordinates.

use std::fmt;

use serde::Serialize;

use crate::energy::{image_face_areas, laplacian_times_mapping, stretch_and_area, GradientField};
use crate::error::{Error, Result};
use crate::laplacian::{LaplacianAssembler, SparseLaplacian};
use crate::linsolve::{ConstrainedSolver, SolveMethod};
use crate::mesh::{normalize_area, norm3, sub3, Mapping, Mesh};

/// Side names in counterclockwise order starting at the first corner.
pub const SIDE_NAMES: [&str; 4] = ["Y0", "X1", "Y1", "X0"];

/// Corner-delimited split of the boundary loop and the resulting free and
/// fixed index sets of each image coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    /// Boundary loop, counterclockwise, starting at the first corner.
    pub boundary: Vec<usize>,
    /// Vertices not on the boundary, ascending.
    pub interior: Vec<usize>,
    pub corners: [usize; 4],
    /// `Y0, X1, Y1, X0`, each running corner to corner inclusive.
    pub sides: [Vec<usize>; 4],
    /// Free indices per coordinate, ascending.
    pub free: [Vec<usize>; 2],
    /// Fixed indices per coordinate, ascending.
    pub fixed: [Vec<usize>; 2],
    /// Prescribed values aligned with `fixed`.
    pub fixed_values: [Vec<f64>; 2],
}

impl BoundaryPartition {
    fn build(num_vertices: usize, boundary: Vec<usize>, positions: [usize; 4]) -> Self {
        let len = boundary.len();
        let corners = positions.map(|p| boundary[p]);
        let span = |a: usize, b: usize| -> Vec<usize> {
            let b = if b == 0 { len } else { b };
            (a..=b).map(|p| boundary[p % len]).collect()
        };
        let sides = [
            span(positions[0], positions[1]),
            span(positions[1], positions[2]),
            span(positions[2], positions[3]),
            span(positions[3], positions[0]),
        ];

        // target[v][s]: prescribed value of coordinate s at v, if any.
        let mut target = vec![[None::<f64>; 2]; num_vertices];
        for &v in &sides[0] {
            target[v][1] = Some(0.0);
        }
        for &v in &sides[1] {
            target[v][0] = Some(1.0);
        }
        for &v in &sides[2] {
            target[v][1] = Some(1.0);
        }
        for &v in &sides[3] {
            target[v][0] = Some(0.0);
        }
        let mut free = [Vec::new(), Vec::new()];
        let mut fixed = [Vec::new(), Vec::new()];
        let mut fixed_values = [Vec::new(), Vec::new()];
        for (v, t) in target.iter().enumerate() {
            for s in 0..2 {
                match t[s] {
                    Some(val) => {
                        fixed[s].push(v);
                        fixed_values[s].push(val);
                    }
                    None => free[s].push(v),
                }
            }
        }
        let mut on_boundary = vec![false; num_vertices];
        for &b in &boundary {
            on_boundary[b] = true;
        }
        let interior = (0..num_vertices).filter(|&v| !on_boundary[v]).collect();
        BoundaryPartition {
            boundary,
            interior,
            corners,
            sides,
            free,
            fixed,
            fixed_values,
        }
    }

    /// Full-length column `s` with the prescribed values on fixed entries and
    /// zeros elsewhere.
    fn constrained_column(&self, n: usize, s: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&i, &v) in self.fixed[s].iter().zip(&self.fixed_values[s]) {
            x[i] = v;
        }
        x
    }

    /// Number of side-interior boundary vertices whose sliding coordinate
    /// left `[0, 1]`.
    pub fn boundary_excursions(&self, mapping: &Mapping) -> usize {
        let c = mapping.coords();
        let mut count = 0;
        for (k, side) in self.sides.iter().enumerate() {
            let sliding = if k % 2 == 0 { 0 } else { 1 };
            count += side[1..side.len() - 1]
                .iter()
                .filter(|&&v| !(0.0..=1.0).contains(&c[v][sliding]))
                .count();
        }
        count
    }
}

/// Cumulative 3D arc length along the loop; entry `p` is the length from
/// `boundary[0]` to `boundary[p]`, and the last entry closes the loop.
fn arc_lengths(mesh: &Mesh, boundary: &[usize]) -> Vec<f64> {
    let v = mesh.vertices();
    let mut acc = vec![0.0];
    for p in 0..boundary.len() {
        let (a, b) = (boundary[p], boundary[(p + 1) % boundary.len()]);
        acc.push(acc[p] + norm3(sub3(v[b], v[a])));
    }
    acc
}

/// Loop positions of the corners: the first is position 0, the rest are the
/// vertices nearest to a quarter, half, and three quarters of the loop
/// length, kept distinct and increasing (ties go to the lower position).
fn auto_corner_positions(mesh: &Mesh, boundary: &[usize]) -> [usize; 4] {
    let len = boundary.len();
    let s = arc_lengths(mesh, boundary);
    let total = s[len];
    let mut pos = [0usize; 4];
    for q in 1..4 {
        let target = total * q as f64 / 4.0;
        let (lo, hi) = (pos[q - 1] + 1, len - (4 - q));
        let mut best = lo;
        for p in lo..=hi {
            if (s[p] - target).abs() < (s[best] - target).abs() {
                best = p;
            }
        }
        pos[q] = best;
    }
    pos
}

/// Splits the boundary of `mesh` into the four sides of the square.
///
/// Without `corners`, the first corner is the boundary loop's start vertex
/// and the other three are picked at arc-length quartiles. Given corners that
/// are not in counterclockwise loop order are reordered with a warning.
pub fn partition_boundary(mesh: &Mesh, corners: Option<[usize; 4]>) -> Result<BoundaryPartition> {
    let loop_ = mesh.boundary();
    let len = loop_.len();
    if len < 4 {
        return Err(Error::Partition(format!(
            "need ≥4 boundary vertices to place four corners (found {len})"
        )));
    }
    let (rotated, positions) = match corners {
        None => (loop_.to_vec(), auto_corner_positions(mesh, loop_)),
        Some(c) => {
            let mut at = [0usize; 4];
            for k in 0..4 {
                at[k] = loop_.iter().position(|&v| v == c[k]).ok_or_else(|| {
                    Error::Partition(format!("corner vertex {} is not on the boundary loop", c[k]))
                })?;
                if c[..k].contains(&c[k]) {
                    return Err(Error::Partition(format!("corner vertex {} is repeated", c[k])));
                }
            }
            let start = at[0];
            let rotated: Vec<usize> = (0..len).map(|p| loop_[(start + p) % len]).collect();
            let rel = at.map(|p| (p + len - start) % len);
            let mut sorted = rel;
            sorted.sort_unstable();
            if sorted != rel {
                log::warn!(
                    "corners {c:?} are not in counterclockwise boundary order; using {:?}",
                    sorted.map(|p| rotated[p])
                );
            }
            (rotated, sorted)
        }
    };
    Ok(BoundaryPartition::build(mesh.num_vertices(), rotated, positions))
}

/// Stopping rule and options of [`run_sem`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// The iteration stops once `E_A` decreases by less than this.
    pub energy_tolerance: f64,
    pub corner_indices: Option<[usize; 4]>,
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            energy_tolerance: 1e-9,
            corner_indices: None,
            record_history: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        if !(self.energy_tolerance > 0.0 && self.energy_tolerance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "energy tolerance must be positive and finite (got {})",
                self.energy_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    EnergyIncrease,
    SolverFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::EnergyIncrease => "energy_increase",
            Termination::SolverFailure => "solver_failure",
        })
    }
}

/// Energies of one iterate; iteration 0 is the harmonic map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub stretch_energy: f64,
    pub authalic_energy: f64,
    pub fold_count: usize,
    /// Whether any linear solve producing this iterate needed the MINRES fallback.
    pub used_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The area-normalized mesh the mapping belongs to.
    pub mesh: Mesh,
    pub mapping: Mapping,
    pub iterations_used: usize,
    /// One record per accepted iterate, including the harmonic map; empty
    /// when history recording is off.
    pub energy_history: Vec<IterationRecord>,
    pub termination: Termination,
    pub partition: BoundaryPartition,
    /// Side-interior boundary vertices whose sliding coordinate left `[0, 1]`.
    pub boundary_excursions: usize,
    /// Why the run stopped early, for solver failures.
    pub failure: Option<String>,
}

pub fn fold_count(mesh: &Mesh, mapping: &Mapping) -> usize {
    image_face_areas(mesh, mapping).iter().filter(|&&a| a <= 0.0).count()
}

/// Assembly pattern and per-coordinate solvers shared by all iterations.
struct Workspace<'m> {
    mesh: &'m Mesh,
    partition: &'m BoundaryPartition,
    assembler: LaplacianAssembler,
    solvers: [ConstrainedSolver; 2],
}

impl<'m> Workspace<'m> {
    fn new(mesh: &'m Mesh, partition: &'m BoundaryPartition) -> Result<Self> {
        let assembler = LaplacianAssembler::new(mesh);
        let solvers = [
            ConstrainedSolver::new(assembler.pattern(), &partition.free[0])?,
            ConstrainedSolver::new(assembler.pattern(), &partition.free[1])?,
        ];
        Ok(Workspace {
            mesh,
            partition,
            assembler,
            solvers,
        })
    }

    /// Solves both coordinate systems of `l` with the given starting columns.
    fn solve(&self, l: &SparseLaplacian, columns: [Vec<f64>; 2]) -> Result<(Mapping, bool)> {
        let mut out = Vec::with_capacity(2);
        let mut fallback = false;
        for (s, x) in columns.iter().enumerate() {
            let (sol, stats) = self.solvers[s]
                .solve(l, x)
                .map_err(|e| e.in_stage(format!("coordinate {}", s + 1)))?;
            fallback |= stats.method == SolveMethod::Minres;
            out.push(sol);
        }
        Ok((Mapping::from_columns(&out[0], &out[1])?, fallback))
    }

    fn harmonic(&self) -> Result<(Mapping, bool)> {
        let ld = self.assembler.dirichlet(self.mesh)?;
        let n = self.mesh.num_vertices();
        self.solve(
            &ld,
            [
                self.partition.constrained_column(n, 0),
                self.partition.constrained_column(n, 1),
            ],
        )
    }

    fn step(&self, current: &Mapping) -> Result<(Mapping, bool)> {
        let ls = self.assembler.stretch(self.mesh, current)?;
        self.solve(&ls, [current.column(0), current.column(1)])
    }
}

/// Harmonic map of `mesh` onto the unit square under the partition's
/// boundary constraints.
pub fn harmonic_initial(mesh: &Mesh, partition: &BoundaryPartition) -> Result<Mapping> {
    Workspace::new(mesh, partition)?.harmonic().map(|(m, _)| m)
}

/// One fixed-point step: assemble `L_S(current)` and solve for the free
/// coordinates; fixed coordinates are carried over unchanged.
pub fn sem_step(mesh: &Mesh, partition: &BoundaryPartition, current: &Mapping) -> Result<Mapping> {
    if current.len() != mesh.num_vertices() {
        return Err(Error::InvalidInput(format!(
            "mapping has {} rows but the mesh has {} vertices",
            current.len(),
            mesh.num_vertices()
        )));
    }
    Workspace::new(mesh, partition)?.step(current).map(|(m, _)| m)
}

/// `2 L_S(f) f` with the rows of fixed coordinates zeroed.
pub fn projected_gradient(mesh: &Mesh, partition: &BoundaryPartition, mapping: &Mapping) -> Result<GradientField> {
    let ls = LaplacianAssembler::new(mesh).stretch(mesh, mapping)?;
    let mut rows = laplacian_times_mapping(&ls, mapping).rows().to_vec();
    for r in &mut rows {
        r[0] *= 2.0;
        r[1] *= 2.0;
    }
    for s in 0..2 {
        for &i in &partition.fixed[s] {
            rows[i][s] = 0.0;
        }
    }
    Ok(GradientField::from_rows(rows))
}

fn record(mesh: &Mesh, mapping: &Mapping, iteration: usize, used_fallback: bool) -> Result<(IterationRecord, f64)> {
    let (stretch, area) = stretch_and_area(mesh, mapping)?;
    let authalic = stretch - area;
    Ok((
        IterationRecord {
            iteration,
            stretch_energy: stretch,
            authalic_energy: authalic,
            fold_count: fold_count(mesh, mapping),
            used_fallback,
        },
        authalic,
    ))
}

/// Runs the full minimization on the area-normalized copy of `mesh`.
pub fn run_sem(mesh: &Mesh, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let mesh = normalize_area(mesh);
    let partition =
        partition_boundary(&mesh, config.corner_indices).map_err(|e| e.in_stage("boundary partition"))?;
    let ws = Workspace::new(&mesh, &partition)?;
    let (mut current, fallback) = ws.harmonic().map_err(|e| e.in_stage("harmonic initialization"))?;

    let mut history = Vec::new();
    let (rec, mut prev_ea) = record(&mesh, &current, 0, fallback)?;
    log::info!("iteration 0: E_S = {:.12e}, E_A = {:.6e}", rec.stretch_energy, rec.authalic_energy);
    if config.record_history {
        history.push(rec);
    }

    let mut termination = Termination::MaxIterations;
    let mut iterations_used = 0;
    let mut failure = None;
    for k in 1..=config.max_iterations {
        let (next, fallback) = match ws.step(&current) {
            Ok(r) => r,
            Err(e) if e.is_solver_failure() => {
                let msg = format!("iteration {k}: {e}");
                log::error!("{msg}");
                failure = Some(msg);
                termination = Termination::SolverFailure;
                break;
            }
            Err(e) => return Err(e.in_stage(format!("iteration {k}"))),
        };
        let (rec, ea) = record(&mesh, &next, k, fallback)?;
        log::info!(
            "iteration {k}: E_S = {:.12e}, E_A = {:.6e}, folds = {}",
            rec.stretch_energy,
            rec.authalic_energy,
            rec.fold_count
        );
        if ea - prev_ea > config.energy_tolerance {
            log::warn!("E_A increased from {prev_ea:e} to {ea:e} at iteration {k}; keeping iteration {}", k - 1);
            termination = Termination::EnergyIncrease;
            break;
        }
        if config.record_history {
            history.push(rec);
        }
        current = next;
        iterations_used = k;
        if prev_ea - ea < config.energy_tolerance {
            termination = Termination::Converged;
            break;
        }
        prev_ea = ea;
    }

    let boundary_excursions = partition.boundary_excursions(&current);
    if boundary_excursions > 0 {
        log::warn!("{boundary_excursions} boundary vertices slid outside their side");
    }
    Ok(SolveResult {
        mesh,
        mapping: current,
        iterations_used,
        energy_history: history,
        termination,
        partition,
        boundary_excursions,
        failure,
    })
}
