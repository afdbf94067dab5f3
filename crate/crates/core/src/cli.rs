//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for input errors (unreadable or invalid
//! meshes, bad options, failed checks), 2 when a linear solve fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{
    gradient_fd_oracle, laplacian_times_mapping, GradientField, stretch_energy_with, stretch_half_gradient,
};
use crate::error::{Error, Result};
use crate::grid::{grid_mesh, GridKind};
use crate::io::{load_mesh, load_obj_with_uv, save_obj, MeshFormat};
use crate::laplacian::LaplacianAssembler;
use crate::mesh::{signed_area_2d, Mapping, Mesh};
use crate::metrics::{summarize, QualityReport};
use crate::sem::{run_sem, IterationRecord, SolverConfig, Termination};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "authalic", version, about = "Square-shaped area-preserving mesh parameterization")]
pub struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Obj,
    Off,
}

impl From<FormatArg> for MeshFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Obj => MeshFormat::Obj,
            FormatArg::Off => MeshFormat::Off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    FlatGrid,
    BumpGrid,
}

#[derive(Debug, clap::Args)]
pub struct ParameterizeArgs {
    /// Input mesh (OBJ or OFF).
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Four corner vertices in file indexing (1-based for OBJ, 0-based for OFF).
    #[arg(long, num_args = 4, value_names = ["C1", "C2", "C3", "C4"])]
    pub corners: Option<Vec<usize>>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iterations: u32,
    /// Stop once the authalic energy decreases by less than this.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Output OBJ with one `vt` per vertex.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Quality report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-iteration energies (CSV).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Area-ratio histogram (CSV).
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Wireframe of the parameterization (SVG).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Include the wall-clock time in the JSON report (makes it run-dependent).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Check a random mapping with entries in [-1, 2] drawn from this seed.
    #[arg(long, conflicts_with = "uv")]
    pub seed: Option<u64>,
    /// Check the mapping stored as `vt` records in the input OBJ.
    #[arg(long)]
    pub uv: bool,
    /// Relative finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, hide = true)]
    pub debug_corrupt_laplacian: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map a disk-like mesh onto the unit square.
    Parameterize(ParameterizeArgs),
    /// Write a synthetic unit-square grid mesh.
    Generate {
        #[arg(value_enum)]
        kind: GridArg,
        /// Vertices per side (at least 2).
        resolution: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Verify the energy, Laplacian and gradient identities on a mesh.
    Check(CheckArgs),
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let outcome = match cli.command {
        Command::Parameterize(a) => cmd_parameterize(&a),
        Command::Generate {
            kind,
            resolution,
            output,
        } => cmd_generate(kind, resolution, &output),
        Command::Check(a) => cmd_check(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_INPUT })
        }
    }
}

fn resolve_format(path: &Path, format: Option<FormatArg>) -> Result<MeshFormat> {
    format
        .map(Into::into)
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "cannot tell the format of {}; pass --format",
                path.display()
            ))
        })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from("iteration,stretch_energy,authalic_energy,fold_count\n");
    for r in history {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.iteration, r.stretch_energy, r.authalic_energy, r.fold_count
        );
    }
    s
}

pub fn histogram_csv(report: &QualityReport) -> String {
    let h = &report.histogram;
    let mut s = String::from("bin_low,bin_high,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", h.edges[k], h.edges[k + 1], c);
    }
    s
}

/// Wireframe of the image in a 1000×1000 view of `[0,1]²` (y up). Folded
/// faces are filled red.
pub fn mapping_svg(mesh: &Mesh, mapping: &Mapping) -> String {
    let px = |p: [f64; 2]| (1000.0 * p[0], 1000.0 * (1.0 - p[1]));
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\" width=\"1000\" height=\"1000\">\n\
         <rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"white\" stroke=\"#999\" stroke-width=\"1\"/>\n",
    );
    for &f in mesh.faces() {
        let img = mapping.face_image(f);
        if signed_area_2d(img[0], img[1], img[2]) <= 0.0 {
            let pts: Vec<String> = img
                .iter()
                .map(|&p| {
                    let (x, y) = px(p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(s, "<polygon points=\"{}\" fill=\"#e33\" fill-opacity=\"0.6\"/>", pts.join(" "));
        }
    }
    let _ = writeln!(s, "<g stroke=\"#226\" stroke-width=\"0.5\" fill=\"none\">");
    let mut edges: Vec<(usize, usize)> = mesh
        .faces()
        .iter()
        .flat_map(|f| (0..3).map(move |k| (f[k].min(f[(k + 1) % 3]), f[k].max(f[(k + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    for (a, b) in edges {
        let (x1, y1) = px(mapping.coords()[a]);
        let (x2, y2) = px(mapping.coords()[b]);
        let _ = writeln!(s, "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\"/>");
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn cmd_parameterize(args: &ParameterizeArgs) -> Result<u8> {
    let format = resolve_format(&args.input, args.format)?;
    let mesh = load_mesh(&args.input, format).map_err(|e| e.in_stage("load"))?;
    let corner_indices = match &args.corners {
        None => None,
        Some(c) => {
            let mut out = [0usize; 4];
            for (o, &v) in out.iter_mut().zip(c) {
                *o = match format {
                    MeshFormat::Obj => v.checked_sub(1).ok_or_else(|| {
                        Error::InvalidInput("OBJ corner indices are 1-based".into())
                    })?,
                    MeshFormat::Off => v,
                };
            }
            Some(out)
        }
    };
    let config = SolverConfig {
        max_iterations: args.max_iterations as usize,
        energy_tolerance: args.tolerance,
        corner_indices,
        record_history: true,
    };

    let start = Instant::now();
    let result = run_sem(&mesh, &config)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut report = summarize(&result.mesh, &result.mapping, &result);
    if args.record_timing {
        report.wall_time_seconds = Some(elapsed);
    }
    if let Some(p) = &args.output {
        save_obj(p, &mesh, Some(&result.mapping))?;
    }
    if let Some(p) = &args.report {
        write_file(p, &(report.to_json() + "\n"))?;
    }
    if let Some(p) = &args.history {
        write_file(p, &history_csv(&result.energy_history))?;
    }
    if let Some(p) = &args.histogram {
        write_file(p, &histogram_csv(&report))?;
    }
    if let Some(p) = &args.svg {
        write_file(p, &mapping_svg(&result.mesh, &result.mapping))?;
    }

    let mut line = report.summary_line();
    if report.wall_time_seconds.is_none() {
        let _ = write!(line, " time={elapsed:.2}s");
    }
    println!("{line}");
    if let Some(msg) = &result.failure {
        eprintln!("error: linear solve failed at {msg}");
    }
    Ok(match result.termination {
        Termination::SolverFailure => EXIT_SOLVER,
        _ => EXIT_OK,
    })
}

pub fn cmd_generate(kind: GridArg, resolution: usize, output: &Path) -> Result<u8> {
    let kind = match kind {
        GridArg::FlatGrid => GridKind::Flat,
        GridArg::BumpGrid => GridKind::Bump,
    };
    let mesh = grid_mesh(resolution, kind)?;
    save_obj(output, &mesh, None)?;
    println!("wrote {} vertices, {} faces to {}", mesh.num_vertices(), mesh.num_faces(), output.display());
    Ok(EXIT_OK)
}

/// Outcome of one property check.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.measured <= self.threshold
    }
}

/// Runs the identity checks for `mapping` on `mesh`.
pub fn run_checks(mesh: &Mesh, mapping: &Mapping, step: f64, corrupt: bool) -> Result<Vec<CheckLine>> {
    let mut ls = LaplacianAssembler::new(mesh).stretch(mesh, mapping)?;
    if corrupt {
        let scale = ls.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let j = mesh.vertex_neighbors()[0][0];
        ls.perturb_entry(0, j, 0.1 * scale.max(1.0))?;
    }
    let mut lines = Vec::new();
    let scale = ls.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    lines.push(CheckLine {
        name: "laplacian symmetry",
        measured: ls.max_asymmetry() / scale,
        threshold: 0.0,
    });
    lines.push(CheckLine {
        name: "laplacian row sums",
        measured: ls.max_relative_row_sum(),
        threshold: 1e-10,
    });

    let e = stretch_energy_with(mesh, mapping, &ls)?;
    lines.push(CheckLine {
        name: "stretch energy identity",
        measured: (e.stretch_quadratic - e.stretch_geometric).abs() / e.stretch_geometric.max(1.0),
        threshold: 1e-10,
    });

    let lf = laplacian_times_mapping(&ls, mapping);
    let h = stretch_half_gradient(mesh, mapping)?;
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let (a, b) = (h.column(s), lf.column(s));
        let norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(err / (1e-12 * norm + 1e-14));
    }
    lines.push(CheckLine {
        name: "half gradient identity (err / bound)",
        measured: worst,
        threshold: 1.0,
    });

    let grad = GradientField::from_rows(lf.rows().iter().map(|r| [2.0 * r[0], 2.0 * r[1]]).collect());
    let fd = gradient_fd_oracle(mesh, mapping, step)?;
    let denom = grad.max_abs().max(f64::MIN_POSITIVE);
    lines.push(CheckLine {
        name: "gradient vs finite differences",
        measured: grad.max_abs_diff(&fd) / denom,
        threshold: 1e-5,
    });
    Ok(lines)
}

pub fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let format = resolve_format(&args.input, args.format)?;
    let (mesh, mapping) = if args.uv {
        if format != MeshFormat::Obj {
            return Err(Error::InvalidInput("--uv needs an OBJ input".into()));
        }
        let (mesh, uv) = load_obj_with_uv(&args.input)?;
        let uv = uv.ok_or_else(|| Error::InvalidInput("input has no per-vertex vt records".into()))?;
        (mesh, uv)
    } else {
        let mesh = load_mesh(&args.input, format)?;
        let mapping = match args.seed {
            Some(seed) => {
                log::info!("random mapping from seed {seed}");
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Mapping::new(
                    (0..mesh.num_vertices())
                        .map(|_| [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)])
                        .collect(),
                )?
            }
            None => Mapping::planar_projection(&mesh),
        };
        (mesh, mapping)
    };
    if !(args.step > 0.0) {
        return Err(Error::InvalidInput("--step must be positive".into()));
    }
    let lines = run_checks(&mesh, &mapping, args.step, args.debug_corrupt_laplacian)?;
    let mut all = true;
    for l in &lines {
        all &= l.passed();
        println!(
            "{} {}: {:.3e} (limit {:.0e})",
            if l.passed() { "PASS" } else { "FAIL" },
            l.name,
            l.measured,
            l.threshold
        );
    }
    Ok(if all { EXIT_OK } else { EXIT_INPUT })
}
