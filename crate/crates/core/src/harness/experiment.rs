//! Leave-one-out extrapolation experiments over a range of crop fractions.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::align::{
    build_ssm, centroid_size, generalized_procrustes, project_with, GpaOptions, ShapeModel,
    UnknownFill,
};
use crate::error::{Error, Result};
use crate::extrapolate::{
    Extrapolator, Method, StageTimings, DEFAULT_FEATHER_DEPTH, DEFAULT_TPS_DEPTH,
};
use crate::harness::crop::{Axis, CropDirection, CropSpec};
use crate::harness::heatmap::HeatmapAccumulator;
use crate::mesh::{seam_jump, surface_error_stats, ErrorStats, SeamStats, TriMesh};
use crate::stats::MeanStd;
use crate::tps::TpsOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Crop percentages.
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub axis: Axis,
    pub direction: CropDirection,
    pub d_feather: u32,
    pub d_tps: u32,
    pub tps: TpsOptions,
    pub gpa: GpaOptions,
    pub fill: UnknownFill,
    /// `None` uses every mode of each leave-one-out model.
    pub num_modes: Option<usize>,
    /// Keep per-vertex heatmap accumulators.
    pub heatmaps: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fractions: (1..=10).map(|i| 5.0 * i as f64).collect(),
            methods: Method::ALL.to_vec(),
            axis: Axis::X,
            direction: CropDirection::FromMax,
            d_feather: DEFAULT_FEATHER_DEPTH,
            d_tps: DEFAULT_TPS_DEPTH,
            tps: TpsOptions::default(),
            gpa: GpaOptions::default(),
            fill: UnknownFill::Mean,
            num_modes: None,
            heatmaps: false,
        }
    }
}

impl ExperimentConfig {
    fn depth(&self, method: Method) -> u32 {
        match method {
            Method::ProjectionOnly => 0,
            Method::Feather => self.d_feather,
            Method::Tps => self.d_tps,
        }
    }
}

/// One (left-out shape, crop fraction, method) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub left_out: usize,
    pub fraction: f64,
    pub method: Method,
    /// `None` when the trial failed.
    pub stats: Option<ErrorStats>,
    pub seam: Option<SeamStats>,
    /// Seconds. `projection` is shared by all methods of the same left-out shape and fraction.
    pub timings: StageTimings,
    pub overlap_count: usize,
    pub eval_count: usize,
    pub tps_regularized: bool,
    pub error: Option<String>,
}

impl TrialReport {
    /// Projection plus extrapolation, in seconds.
    pub fn total_time(&self) -> f64 {
        self.timings.projection + self.timings.extrapolation_total()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub fraction: f64,
    pub method: Method,
    pub failures: usize,
    pub rms_surface: MeanStd,
    pub max_surface: MeanStd,
    pub rms_vertex: MeanStd,
    pub max_seam_jump: MeanStd,
    /// Milliseconds, projection included.
    pub total_ms: MeanStd,
}

/// Mean error of `baseline` minus mean error of P+TPS; positive means P+TPS is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    /// `None` for the average over all fractions.
    pub fraction: Option<f64>,
    pub baseline: Method,
    pub rms_vertex: f64,
    pub rms_surface: f64,
    pub max_surface: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub shapes: usize,
    pub vertex_count: usize,
    pub rows: Vec<AggregateRow>,
    pub improvements: Vec<Improvement>,
    pub failed_trials: usize,
}

impl ExperimentSummary {
    pub fn row(&self, fraction: f64, method: Method) -> Option<&AggregateRow> {
        self.rows
            .iter()
            .find(|r| r.fraction == fraction && r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub fraction: f64,
    pub method: Method,
    pub accumulator: HeatmapAccumulator,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub trials: Vec<TrialReport>,
    pub summary: ExperimentSummary,
    /// Full-corpus mean shape scaled to the corpus' mean centroid size (mm).
    pub mean_shape: TriMesh,
    pub heatmaps: Vec<Heatmap>,
}

fn failed(left_out: usize, fraction: f64, method: Method, err: &Error) -> TrialReport {
    TrialReport {
        left_out,
        fraction,
        method,
        stats: None,
        seam: None,
        timings: StageTimings::default(),
        overlap_count: 0,
        eval_count: 0,
        tps_regularized: false,
        error: Some(format!("{}: {err}", err.kind())),
    }
}

struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    extrapolator: &'a Extrapolator,
    model: &'a ShapeModel,
    truth: &'a TriMesh,
    known: &'a [usize],
    unknown: &'a [usize],
}

impl TrialContext<'_> {
    /// Runs every configured method for one left-out shape and fraction.
    fn run(&self, left_out: usize, fraction: f64) -> Vec<(TrialReport, Option<Vec<usize>>)> {
        let config = self.config;
        let patient = self.truth.with_zeroed(self.unknown);
        let modes = config.num_modes.unwrap_or(self.model.mode_count());
        let start = Instant::now();
        let projection = project_with(&patient, self.known, self.model, modes, config.fill);
        let projection_time = start.elapsed().as_secs_f64();
        let projection = match projection {
            Ok(p) => p,
            Err(e) => {
                return config
                    .methods
                    .iter()
                    .map(|&m| (failed(left_out, fraction, m, &e), None))
                    .collect()
            }
        };
        config
            .methods
            .iter()
            .map(|&method| {
                let result = self
                    .extrapolator
                    .run(
                        method,
                        &patient,
                        self.known,
                        &projection.instance,
                        config.depth(method),
                        &config.tps,
                    )
                    .and_then(|r| {
                        let stats = surface_error_stats(self.truth, &r.mesh, &r.eval_region)?;
                        let seam = match &r.partition {
                            Some(p) => Some(seam_jump(self.truth, &r.mesh, p)?),
                            None => None,
                        };
                        Ok((r, stats, seam))
                    });
                match result {
                    Ok((r, stats, seam)) => {
                        let report = TrialReport {
                            left_out,
                            fraction,
                            method,
                            stats: Some(stats),
                            seam,
                            timings: StageTimings {
                                projection: projection_time,
                                ..r.timings
                            },
                            overlap_count: r.overlap_count,
                            eval_count: r.eval_region.len(),
                            tps_regularized: r.tps_regularized,
                            error: None,
                        };
                        (report, Some(r.eval_region))
                    }
                    Err(e) => (failed(left_out, fraction, method, &e), None),
                }
            })
            .collect()
    }
}

/// Leave-one-out completion experiment.
///
/// The crop planes come from the bounding box of the full-corpus mean, so every left-out shape
/// loses the same homologous vertices at a given fraction. For each left-out shape a model is
/// built from the rest, the cropped shape is projected with all modes (or `num_modes`), and
/// each method's output is scored on its own evaluation region. Trials run one after another
/// so that stage timings are not disturbed by each other; a warm-up run is discarded.
pub fn run_loo_extrapolation(
    corpus: &[TriMesh],
    config: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    if corpus.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: corpus.len(),
        });
    }
    if config.fractions.is_empty() || config.methods.is_empty() {
        return Err(Error::InvalidArgument(
            "no fractions or no methods requested".into(),
        ));
    }
    let crops: Vec<CropSpec> = config
        .fractions
        .iter()
        .map(|&f| CropSpec::new(config.axis, f, config.direction))
        .collect::<Result<_>>()?;

    let full = generalized_procrustes(corpus, &config.gpa)?;
    let size = corpus.iter().map(centroid_size).sum::<f64>() / corpus.len() as f64;
    let mean_shape = full
        .mean
        .with_vertices(full.mean.vertices().iter().map(|p| p * size).collect())?;
    let n = mean_shape.vertex_count();
    let extrapolator = Extrapolator::new(&mean_shape);

    let partitions: Vec<(Vec<usize>, Vec<usize>)> = crops
        .iter()
        .map(|c| {
            let unknown = c.unknown_vertices(&full.mean);
            let mut is_unknown = vec![false; n];
            unknown.iter().for_each(|&u| is_unknown[u] = true);
            let known = (0..n).filter(|&i| !is_unknown[i]).collect();
            (known, unknown)
        })
        .collect();

    let mut heatmaps: Vec<Heatmap> = if config.heatmaps {
        config
            .fractions
            .iter()
            .flat_map(|&fraction| {
                config.methods.iter().map(move |&method| Heatmap {
                    fraction,
                    method,
                    accumulator: HeatmapAccumulator::new(n),
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut trials = Vec::with_capacity(corpus.len() * crops.len() * config.methods.len());
    for left_out in 0..corpus.len() {
        let training: Vec<TriMesh> = corpus
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != left_out)
            .map(|(_, s)| s.clone())
            .collect();
        let model = match generalized_procrustes(&training, &config.gpa)
            .and_then(|g| build_ssm(&g.aligned))
        {
            Ok(m) => m,
            Err(e) => {
                for &fraction in &config.fractions {
                    trials.extend(
                        config
                            .methods
                            .iter()
                            .map(|&m| failed(left_out, fraction, m, &e)),
                    );
                }
                continue;
            }
        };
        for (fi, &fraction) in config.fractions.iter().enumerate() {
            let (known, unknown) = &partitions[fi];
            let ctx = TrialContext {
                config,
                extrapolator: &extrapolator,
                model: &model,
                truth: &corpus[left_out],
                known,
                unknown,
            };
            if left_out == 0 && fi == 0 {
                let _ = ctx.run(left_out, fraction);
            }
            for (mi, (mut report, region)) in ctx.run(left_out, fraction).into_iter().enumerate() {
                if let (Some(region), Some(stats)) = (region, report.stats.as_mut()) {
                    if config.heatmaps {
                        heatmaps[fi * config.methods.len() + mi]
                            .accumulator
                            .add_stats(&region, stats)?;
                    }
                    stats.per_vertex_surface = Vec::new();
                }
                trials.push(report);
            }
        }
    }

    let summary = summarize(&trials, config, corpus.len(), n);
    Ok(ExperimentOutput {
        trials,
        summary,
        mean_shape,
        heatmaps,
    })
}

/// Mean and standard deviation per (fraction, method) plus the P+TPS improvements.
pub fn summarize(
    trials: &[TrialReport],
    config: &ExperimentConfig,
    shapes: usize,
    vertex_count: usize,
) -> ExperimentSummary {
    let mut rows = Vec::new();
    for &fraction in &config.fractions {
        for &method in &config.methods {
            let group: Vec<&TrialReport> = trials
                .iter()
                .filter(|t| t.fraction == fraction && t.method == method)
                .collect();
            let ok: Vec<(&TrialReport, &ErrorStats)> = group
                .iter()
                .filter_map(|t| t.stats.as_ref().map(|s| (*t, s)))
                .collect();
            rows.push(AggregateRow {
                fraction,
                method,
                failures: group.len() - ok.len(),
                rms_surface: MeanStd::from_values(ok.iter().map(|(_, s)| s.rms_surface)),
                max_surface: MeanStd::from_values(ok.iter().map(|(_, s)| s.max_surface)),
                rms_vertex: MeanStd::from_values(ok.iter().map(|(_, s)| s.rms_vertex)),
                max_seam_jump: MeanStd::from_values(
                    ok.iter()
                        .filter_map(|(t, _)| t.seam.as_ref().map(|s| s.max_jump)),
                ),
                total_ms: MeanStd::from_values(ok.iter().map(|(t, _)| 1e3 * t.total_time())),
            });
        }
    }

    let mut improvements = Vec::new();
    if config.methods.contains(&Method::Tps) {
        for baseline in [Method::Feather, Method::ProjectionOnly] {
            if !config.methods.contains(&baseline) {
                continue;
            }
            let mut per_fraction = Vec::new();
            for &fraction in &config.fractions {
                let (Some(b), Some(t)) = (
                    rows.iter()
                        .find(|r| r.fraction == fraction && r.method == baseline),
                    rows.iter()
                        .find(|r| r.fraction == fraction && r.method == Method::Tps),
                ) else {
                    continue;
                };
                per_fraction.push(Improvement {
                    fraction: Some(fraction),
                    baseline,
                    rms_vertex: b.rms_vertex.mean - t.rms_vertex.mean,
                    rms_surface: b.rms_surface.mean - t.rms_surface.mean,
                    max_surface: b.max_surface.mean - t.max_surface.mean,
                });
            }
            let k = per_fraction.len().max(1) as f64;
            let overall = Improvement {
                fraction: None,
                baseline,
                rms_vertex: per_fraction.iter().map(|i| i.rms_vertex).sum::<f64>() / k,
                rms_surface: per_fraction.iter().map(|i| i.rms_surface).sum::<f64>() / k,
                max_surface: per_fraction.iter().map(|i| i.max_surface).sum::<f64>() / k,
            };
            improvements.extend(per_fraction);
            improvements.push(overall);
        }
    }

    ExperimentSummary {
        shapes,
        vertex_count,
        rows,
        improvements,
        failed_trials: trials.iter().filter(|t| t.error.is_some()).count(),
    }
}
