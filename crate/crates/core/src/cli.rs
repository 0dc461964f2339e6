//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::align::{build_ssm, generalized_procrustes, project, GpaOptions};
use crate::error::{Error, Result};
use crate::extrapolate::{Extrapolator, Method, DEFAULT_FEATHER_DEPTH, DEFAULT_TPS_DEPTH};
use crate::harness::{
    emit_heatmap, generate_synthetic_corpus, parse_fractions, run_loo_extrapolation, Axis,
    CropDirection, ExperimentConfig, SyntheticCorpusSpec, Template,
};
use crate::io::{self, report, PlyFormat};
use crate::mesh::{compute_partition, surface_error_stats, TriMesh};
use crate::tps::{TpsKernel, TpsOptions};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SHAPE_EXTRAP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "shape-extrap",
    version,
    about = "Statistical shape models and partial mesh completion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    Ellipsoid,
    Skull,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Po,
    Feather,
    Tps,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Po => Method::ProjectionOnly,
            MethodArg::Feather => Method::Feather,
            MethodArg::Tps => Method::Tps,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    R,
    R2logr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    FromMax,
    FromMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Unknown,
    #[value(name = "unknown+overlap")]
    UnknownOverlap,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus as binary PLY files.
    GenSynthetic {
        #[arg(long, value_enum, default_value = "skull")]
        template: TemplateArg,
        #[arg(long, default_value_t = 20)]
        shapes: usize,
        #[arg(long, default_value_t = SyntheticCorpusSpec::default().latent_modes)]
        modes: usize,
        #[arg(long, default_value_t = SyntheticCorpusSpec::default().amplitude_mm)]
        amplitude_mm: f64,
        #[arg(long, default_value_t = SyntheticCorpusSpec::default().noise_mm)]
        noise_mm: f64,
        #[arg(long, default_value_t = SyntheticCorpusSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SyntheticCorpusSpec::default().vertex_budget)]
        vertex_budget: usize,
        /// Keep every shape in the template pose.
        #[arg(long)]
        no_pose: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Align a corpus and write its shape model.
    BuildSsm {
        /// Mesh files, or directories whose .ply/.obj files are read in name order.
        #[arg(long, num_args = 1.., required = true)]
        meshes: Vec<PathBuf>,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        gpa_tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
    },
    /// Project a (partial) mesh onto a model.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        /// Without a partition every vertex is known.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Defaults to every mode.
        #[arg(long)]
        num_modes: Option<usize>,
        #[arg(long)]
        out_mesh: Option<PathBuf>,
        #[arg(long)]
        out_coeffs: Option<PathBuf>,
    },
    /// Complete a partial mesh.
    Extrapolate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, value_enum, default_value = "tps")]
        method: MethodArg,
        /// Band depth; defaults to 20 for feather and 3 for tps.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, value_enum, default_value = "r")]
        tps_kernel: KernelArg,
        #[arg(long, default_value_t = 0.0)]
        tps_reg: f64,
        #[arg(long)]
        num_modes: Option<usize>,
        #[arg(long)]
        out_mesh: PathBuf,
        #[arg(long)]
        timings_out: Option<PathBuf>,
    },
    /// Leave-one-out completion experiment over crop fractions.
    LooEval {
        #[arg(long, num_args = 1.., required = true)]
        meshes: Vec<PathBuf>,
        /// `start:stop:step` or a comma-separated list of percentages.
        #[arg(long, default_value = "5:50:5")]
        fractions: String,
        #[arg(long, value_enum, default_value = "x")]
        axis: AxisArg,
        #[arg(long, value_enum, default_value = "from-max")]
        direction: DirectionArg,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "po,feather,tps"
        )]
        methods: Vec<MethodArg>,
        #[arg(long, default_value_t = DEFAULT_FEATHER_DEPTH)]
        d_feather: u32,
        #[arg(long, default_value_t = DEFAULT_TPS_DEPTH)]
        d_tps: u32,
        #[arg(long, value_enum, default_value = "r")]
        tps_kernel: KernelArg,
        /// Line-delimited trial records; the summary goes next to it as `.summary.json`.
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Directory for per-(method, fraction) heatmap PLY files.
        #[arg(long)]
        heatmaps_out: Option<PathBuf>,
    },
    /// Error statistics between a truth and an estimate.
    Stats {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        /// Without a partition every vertex is evaluated.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "unknown")]
        region: RegionArg,
        /// Band depth for `unknown+overlap`.
        #[arg(long, default_value_t = DEFAULT_FEATHER_DEPTH)]
        depth: u32,
    },
}

fn kernel(k: KernelArg) -> TpsKernel {
    match k {
        KernelArg::R => TpsKernel::Linear,
        KernelArg::R2logr => TpsKernel::ThinPlate,
    }
}

fn collect_meshes(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| io::MeshFormat::from_path(f).is_ok())
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("no mesh files found".into()));
    }
    Ok(out)
}

fn read_corpus(inputs: &[PathBuf]) -> Result<Vec<TriMesh>> {
    collect_meshes(inputs)?.iter().map(io::read_mesh).collect()
}

fn read_known(partition: Option<&Path>, vertex_count: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    match partition {
        None => Ok(((0..vertex_count).collect(), Vec::new())),
        Some(path) => {
            let p = io::read_partition(path)?;
            if p.vertex_count != vertex_count {
                return Err(Error::TopologyMismatch(format!(
                    "partition is for {} vertices, mesh has {vertex_count}",
                    p.vertex_count
                )));
            }
            Ok((p.known_indices(), p.unknown_indices))
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    io::write_text(
        path,
        &(serde_json::to_string_pretty(value).expect("json") + "\n"),
    )
}

/// Sibling path `<stem>.summary.json`.
fn summary_path(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    report.with_file_name(format!("{stem}.summary.json"))
}

/// Runs one command; human-readable output goes to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic {
            template,
            shapes,
            modes,
            amplitude_mm,
            noise_mm,
            seed,
            vertex_budget,
            no_pose,
            out_dir,
        } => {
            let spec = SyntheticCorpusSpec {
                template: match template {
                    TemplateArg::Ellipsoid => Template::Ellipsoid,
                    TemplateArg::Skull => Template::Skull,
                },
                vertex_budget,
                shapes,
                latent_modes: modes,
                amplitude_mm,
                noise_mm,
                random_pose: !no_pose,
                seed,
                ..SyntheticCorpusSpec::default()
            };
            let corpus = generate_synthetic_corpus(&spec)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            for (i, m) in corpus.iter().enumerate() {
                io::write_mesh(out_dir.join(format!("shape_{i:03}.ply")), m)?;
            }
            println!(
                "wrote {} meshes with {} vertices to {}",
                corpus.len(),
                corpus[0].vertex_count(),
                out_dir.display()
            );
        }
        Command::BuildSsm {
            meshes,
            out_model,
            gpa_tol,
            max_iters,
        } => {
            let corpus = read_corpus(&meshes)?;
            let gpa = generalized_procrustes(
                &corpus,
                &GpaOptions {
                    tolerance: gpa_tol,
                    max_iterations: max_iters,
                },
            )?;
            let model = build_ssm(&gpa.aligned)?;
            io::write_model(&out_model, &model)?;
            println!(
                "{}",
                json!({
                    "samples": model.sample_count(),
                    "vertices": model.vertex_count(),
                    "modes": model.mode_count(),
                    "gpa_iterations": gpa.iterations,
                    "gpa_converged": gpa.converged,
                    "stddevs": model.stddevs(),
                })
            );
        }
        Command::Project {
            model,
            mesh,
            partition,
            num_modes,
            out_mesh,
            out_coeffs,
        } => {
            let model = io::read_model(&model)?;
            let patient = io::read_mesh_data(&mesh)?.mesh;
            let (known, _) = read_known(partition.as_deref(), patient.vertex_count())?;
            let k = num_modes.unwrap_or(model.mode_count());
            let p = project(&patient, &known, &model, k)?;
            if let Some(path) = out_mesh {
                io::write_mesh(&path, &p.instance)?;
            }
            let doc = json!({ "coefficients": p.coefficients, "transform": p.transform });
            if let Some(path) = out_coeffs {
                write_json(&path, &doc)?;
            }
            println!("{doc}");
        }
        Command::Extrapolate {
            model,
            mesh,
            partition,
            method,
            depth,
            tps_kernel,
            tps_reg,
            num_modes,
            out_mesh,
            timings_out,
        } => {
            let model = io::read_model(&model)?;
            let patient = io::read_mesh_data(&mesh)?.mesh;
            let (known, _) = read_known(Some(&partition), patient.vertex_count())?;
            let method = Method::from(method);
            let depth = depth.unwrap_or(match method {
                Method::Feather => DEFAULT_FEATHER_DEPTH,
                _ => DEFAULT_TPS_DEPTH,
            });
            let tps = TpsOptions {
                kernel: kernel(tps_kernel),
                regularization: tps_reg,
                ..TpsOptions::default()
            };
            let k = num_modes.unwrap_or(model.mode_count());
            let start = std::time::Instant::now();
            let projection = project(&patient, &known, &model, k)?;
            let projection_time = start.elapsed().as_secs_f64();
            let mut result = Extrapolator::new(&patient).run(
                method,
                &patient,
                &known,
                &projection.instance,
                depth,
                &tps,
            )?;
            result.timings.projection = projection_time;
            io::write_mesh(&out_mesh, &result.mesh)?;
            let doc = json!({
                "method": method,
                "timings": result.timings,
                "overlap_count": result.overlap_count,
                "eval_count": result.eval_region.len(),
                "tps_regularized": result.tps_regularized,
            });
            if let Some(path) = timings_out {
                write_json(&path, &doc)?;
            }
            println!("{doc}");
        }
        Command::LooEval {
            meshes,
            fractions,
            axis,
            direction,
            methods,
            d_feather,
            d_tps,
            tps_kernel,
            report_out,
            heatmaps_out,
        } => {
            let corpus = read_corpus(&meshes)?;
            let config = ExperimentConfig {
                fractions: parse_fractions(&fractions)?,
                methods: methods.into_iter().map(Method::from).collect(),
                axis: match axis {
                    AxisArg::X => Axis::X,
                    AxisArg::Y => Axis::Y,
                    AxisArg::Z => Axis::Z,
                },
                direction: match direction {
                    DirectionArg::FromMax => CropDirection::FromMax,
                    DirectionArg::FromMin => CropDirection::FromMin,
                },
                d_feather,
                d_tps,
                tps: TpsOptions {
                    kernel: kernel(tps_kernel),
                    ..TpsOptions::default()
                },
                heatmaps: heatmaps_out.is_some(),
                ..ExperimentConfig::default()
            };
            let out = run_loo_extrapolation(&corpus, &config)?;
            if let Some(path) = &report_out {
                io::write_text(path, &report::trials_to_jsonl(&out.trials))?;
                io::write_text(summary_path(path), &report::summary_to_json(&out.summary))?;
            }
            if let Some(dir) = &heatmaps_out {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for h in &out.heatmaps {
                    let (mesh, scalars) = emit_heatmap(&out.mean_shape, &h.accumulator)?;
                    let name = format!("heatmap_{}_{:02}.ply", h.method.name(), h.fraction);
                    io::write_ply(
                        dir.join(name),
                        &mesh,
                        Some(&scalars),
                        PlyFormat::BinaryLittleEndian,
                    )?;
                }
            }
            print!("{}", report::format_summary(&out.summary));
        }
        Command::Stats {
            truth,
            estimate,
            partition,
            region,
            depth,
        } => {
            let truth = io::read_mesh(&truth)?;
            let estimate = io::read_mesh_data(&estimate)?.mesh;
            let (_, unknown) = read_known(partition.as_deref(), truth.vertex_count())?;
            let eval: Vec<usize> = match (region, partition.is_some()) {
                (RegionArg::All, _) | (_, false) => (0..truth.vertex_count()).collect(),
                (RegionArg::Unknown, true) => unknown,
                (RegionArg::UnknownOverlap, true) => {
                    compute_partition(&truth, &unknown, depth)?.unknown_and_overlap()
                }
            };
            let mut stats = surface_error_stats(&truth, &estimate, &eval)?;
            stats.per_vertex_surface.clear();
            println!("{}", json!({ "eval_count": eval.len(), "stats": stats }));
        }
    }
    Ok(())
}

/// One-line JSON diagnostic for `err`.
pub fn error_line(err: &Error) -> String {
    json!({ "error": err.kind(), "message": err.to_string() }).to_string()
}

/// Caps the global worker pool at `SHAPE_EXTRAP_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        // A pool that is already initialized keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return 2;
        }
    };
    match configure_threads().and_then(|_| execute(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}
