//! Completion of a partial patient mesh from a model instance.
//!
//! * Projection only (PO): unknown vertices are copied from the instance.
//! * Projection plus feathering (P+F): as PO, and every overlap vertex at depth `n` becomes
//!   `((d - n) / d) r + (n / d) q`, where `q` is the patient vertex and `r` the instance vertex.
//! * Projection plus thin-plate spline (P+TPS): a spline fitted to the instance-to-patient
//!   displacements on the overlap band warps the instance's unknown region.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Adjacency, RegionPartition, TriMesh};
use crate::tps::{build_tps, evaluate_tps, TpsOptions};

pub const DEFAULT_FEATHER_DEPTH: u32 = 20;
pub const DEFAULT_TPS_DEPTH: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "po")]
    ProjectionOnly,
    Feather,
    Tps,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ProjectionOnly, Method::Feather, Method::Tps];

    pub fn label(self) -> &'static str {
        match self {
            Method::ProjectionOnly => "PO",
            Method::Feather => "P+F",
            Method::Tps => "P+TPS",
        }
    }

    /// Lower-case identifier used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            Method::ProjectionOnly => "po",
            Method::Feather => "feather",
            Method::Tps => "tps",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "po" | "p" | "projection" => Ok(Method::ProjectionOnly),
            "feather" | "f" | "p+f" => Ok(Method::Feather),
            "tps" | "p+tps" => Ok(Method::Tps),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// Wall-clock seconds spent in each stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub projection: f64,
    pub band: f64,
    pub tps_build: f64,
    pub tps_evaluate: f64,
    pub assembly: f64,
}

impl StageTimings {
    /// Time spent after projection.
    pub fn extrapolation_total(&self) -> f64 {
        self.band + self.tps_build + self.tps_evaluate + self.assembly
    }
}

#[derive(Debug, Clone)]
pub struct ExtrapolationResult {
    pub mesh: TriMesh,
    pub method: Method,
    /// `None` when nothing was unknown.
    pub partition: Option<RegionPartition>,
    /// Vertices over which errors are meaningful: unknown for PO and P+TPS, unknown plus
    /// overlap for P+F.
    pub eval_region: Vec<usize>,
    pub timings: StageTimings,
    /// Vertices in the band used for blending or spline fitting.
    pub overlap_count: usize,
    /// Set when the spline system was singular and a regularized refit was used.
    pub tps_regularized: bool,
}

/// Reusable completion driver for one mesh topology.
#[derive(Debug, Clone)]
pub struct Extrapolator {
    topology: TriMesh,
    adjacency: Adjacency,
}

impl Extrapolator {
    pub fn new(topology: &TriMesh) -> Self {
        Self {
            topology: topology.clone(),
            adjacency: Adjacency::new(topology),
        }
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    fn unknown_from_known(&self, known: &[usize]) -> Result<Vec<usize>> {
        let n = self.topology.vertex_count();
        let mut is_known = vec![false; n];
        for &k in known {
            if k >= n {
                return Err(Error::InvalidPartition(format!(
                    "known vertex {k} out of range"
                )));
            }
            is_known[k] = true;
        }
        if !is_known.iter().any(|&k| k) {
            return Err(Error::InvalidPartition("no known vertices".into()));
        }
        Ok((0..n).filter(|&i| !is_known[i]).collect())
    }

    fn check(&self, patient: &TriMesh, instance: &TriMesh) -> Result<()> {
        self.topology.check_topology(patient)?;
        patient.check_topology(instance)
    }

    fn passthrough(patient: &TriMesh, method: Method) -> ExtrapolationResult {
        ExtrapolationResult {
            mesh: patient.clone(),
            method,
            partition: None,
            eval_region: Vec::new(),
            timings: StageTimings::default(),
            overlap_count: 0,
            tps_regularized: false,
        }
    }

    pub fn run(
        &self,
        method: Method,
        patient: &TriMesh,
        known: &[usize],
        instance: &TriMesh,
        depth: u32,
        tps: &TpsOptions,
    ) -> Result<ExtrapolationResult> {
        match method {
            Method::ProjectionOnly => self.projection_only(patient, known, instance),
            Method::Feather => self.feather(patient, known, instance, depth),
            Method::Tps => self.tps(patient, known, instance, depth, tps),
        }
    }

    pub fn projection_only(
        &self,
        patient: &TriMesh,
        known: &[usize],
        instance: &TriMesh,
    ) -> Result<ExtrapolationResult> {
        self.check(patient, instance)?;
        let unknown = self.unknown_from_known(known)?;
        if unknown.is_empty() {
            return Ok(Self::passthrough(patient, Method::ProjectionOnly));
        }
        let start = Instant::now();
        let partition = RegionPartition::with_adjacency(&self.adjacency, &unknown, 0)?;
        let band = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let mut out = patient.clone();
        paste(&mut out, instance, &unknown);
        let assembly = start.elapsed().as_secs_f64();

        Ok(ExtrapolationResult {
            mesh: out,
            method: Method::ProjectionOnly,
            partition: Some(partition),
            eval_region: unknown,
            timings: StageTimings {
                band,
                assembly,
                ..StageTimings::default()
            },
            overlap_count: 0,
            tps_regularized: false,
        })
    }

    pub fn feather(
        &self,
        patient: &TriMesh,
        known: &[usize],
        instance: &TriMesh,
        depth: u32,
    ) -> Result<ExtrapolationResult> {
        if depth == 0 {
            return Err(Error::InvalidArgument(
                "feathering depth must be at least 1".into(),
            ));
        }
        self.check(patient, instance)?;
        let unknown = self.unknown_from_known(known)?;
        if unknown.is_empty() {
            return Ok(Self::passthrough(patient, Method::Feather));
        }
        let start = Instant::now();
        let partition = RegionPartition::with_adjacency(&self.adjacency, &unknown, depth)?;
        let overlap = partition.overlap();
        let band = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let mut out = patient.clone();
        paste(&mut out, instance, &unknown);
        let d = depth as f64;
        for &v in &overlap {
            let n = partition.depth(v).expect("overlap vertex has a depth") as f64;
            let r = instance.vertices()[v].coords;
            let q = patient.vertices()[v].coords;
            out.vertices_mut()[v] = Point3::from(r * ((d - n) / d) + q * (n / d));
        }
        let assembly = start.elapsed().as_secs_f64();

        Ok(ExtrapolationResult {
            mesh: out,
            method: Method::Feather,
            eval_region: partition.unknown_and_overlap(),
            partition: Some(partition),
            timings: StageTimings {
                band,
                assembly,
                ..StageTimings::default()
            },
            overlap_count: overlap.len(),
            tps_regularized: false,
        })
    }

    pub fn tps(
        &self,
        patient: &TriMesh,
        known: &[usize],
        instance: &TriMesh,
        depth: u32,
        options: &TpsOptions,
    ) -> Result<ExtrapolationResult> {
        self.check(patient, instance)?;
        let unknown = self.unknown_from_known(known)?;
        if unknown.is_empty() {
            return Ok(Self::passthrough(patient, Method::Tps));
        }
        let start = Instant::now();
        let partition = RegionPartition::with_adjacency(&self.adjacency, &unknown, depth)?;
        let overlap = partition.overlap();
        let band = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let sources: Vec<Point3<f64>> = overlap.iter().map(|&v| instance.vertices()[v]).collect();
        let targets: Vec<Point3<f64>> = overlap.iter().map(|&v| patient.vertices()[v]).collect();
        let mut regularized = false;
        let model = match build_tps(&sources, &targets, options) {
            Err(Error::RankDeficient { .. }) => {
                regularized = true;
                let spacing = self.mean_edge_length(instance, &overlap, &partition);
                let retry = TpsOptions {
                    regularization: options.regularization.max(1e-6 * spacing * spacing),
                    allow_rank_deficient: true,
                    ..*options
                };
                build_tps(&sources, &targets, &retry)?
            }
            other => other?,
        };
        let tps_build = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let queries: Vec<Point3<f64>> = unknown.iter().map(|&v| instance.vertices()[v]).collect();
        let warped = evaluate_tps(&model, &queries);
        let tps_evaluate = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let mut out = patient.clone();
        for (&v, p) in unknown.iter().zip(warped) {
            out.vertices_mut()[v] = p;
        }
        let assembly = start.elapsed().as_secs_f64();

        Ok(ExtrapolationResult {
            mesh: out,
            method: Method::Tps,
            partition: Some(partition),
            eval_region: unknown,
            timings: StageTimings {
                projection: 0.0,
                band,
                tps_build,
                tps_evaluate,
                assembly,
            },
            overlap_count: overlap.len(),
            tps_regularized: regularized,
        })
    }

    /// Mean length of instance edges with both ends in the overlap band.
    fn mean_edge_length(
        &self,
        instance: &TriMesh,
        overlap: &[usize],
        partition: &RegionPartition,
    ) -> f64 {
        let v = instance.vertices();
        let mut sum = 0.0;
        let mut count = 0usize;
        for &a in overlap {
            for &b in self.adjacency.neighbors(a) {
                let b = b as usize;
                if b > a && partition.depth(b).is_some() {
                    sum += (v[a] - v[b]).norm();
                    count += 1;
                }
            }
        }
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }
}

fn paste(out: &mut TriMesh, instance: &TriMesh, unknown: &[usize]) {
    let src = instance.vertices();
    let dst = out.vertices_mut();
    for &v in unknown {
        dst[v] = src[v];
    }
}

/// Projection only: `(known patient vertices, instance vertices elsewhere)`.
pub fn extrapolate_po(
    patient: &TriMesh,
    known: &[usize],
    instance: &TriMesh,
) -> Result<ExtrapolationResult> {
    Extrapolator::new(patient).projection_only(patient, known, instance)
}

/// Projection plus feathering over a band of `depth` edge hops.
pub fn extrapolate_feather(
    patient: &TriMesh,
    known: &[usize],
    instance: &TriMesh,
    depth: u32,
) -> Result<ExtrapolationResult> {
    Extrapolator::new(patient).feather(patient, known, instance, depth)
}

/// Projection plus a thin-plate spline fitted on a band of `depth` edge hops.
pub fn extrapolate_tps(
    patient: &TriMesh,
    known: &[usize],
    instance: &TriMesh,
    depth: u32,
    options: &TpsOptions,
) -> Result<ExtrapolationResult> {
    Extrapolator::new(patient).tps(patient, known, instance, depth, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::SimilarityTransform;
    use crate::harness::synthetic::skull_template;
    use nalgebra::{Rotation3, Vector3};

    fn crop(m: &TriMesh, fraction: f64) -> (Vec<usize>, Vec<usize>) {
        let (lo, hi) = m.bounding_box();
        let plane = hi.x - fraction * (hi.x - lo.x);
        (0..m.vertex_count()).partition(|&i| m.vertices()[i].x <= plane)
    }

    fn perturbed(m: &TriMesh) -> TriMesh {
        m.with_vertices(
            m.vertices()
                .iter()
                .map(|p| p + Vector3::new((p.y * 0.05).sin(), (p.z * 0.04).cos(), 0.02 * p.x))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn po_is_an_index_wise_splice() {
        let truth = skull_template(2562);
        let instance = perturbed(&truth);
        let (known, unknown) = crop(&truth, 0.2);
        let r = extrapolate_po(&truth.with_zeroed(&unknown), &known, &instance).unwrap();
        for i in 0..truth.vertex_count() {
            let expected = if unknown.contains(&i) {
                instance.vertices()[i]
            } else {
                truth.vertices()[i]
            };
            assert_eq!(r.mesh.vertices()[i], expected);
        }
        assert_eq!(r.eval_region, unknown);
    }

    #[test]
    fn perfect_instance_gives_perfect_completion() {
        let truth = skull_template(642);
        let (known, unknown) = crop(&truth, 0.3);
        let patient = truth.with_zeroed(&unknown);
        for method in Method::ALL {
            let depth = if method == Method::Feather { 20 } else { 3 };
            let r = Extrapolator::new(&truth)
                .run(
                    method,
                    &patient,
                    &known,
                    &truth,
                    depth,
                    &TpsOptions::default(),
                )
                .unwrap();
            let err = crate::align::gpa::rms_vertex_distance(&r.mesh, &truth);
            assert!(err < 1e-9, "{method}: {err}");
        }
    }

    #[test]
    fn empty_unknown_returns_patient() {
        let truth = skull_template(162);
        let all: Vec<usize> = (0..truth.vertex_count()).collect();
        let r = extrapolate_po(&truth, &all, &perturbed(&truth)).unwrap();
        assert_eq!(r.mesh, truth);
        assert!(r.partition.is_none());
    }

    #[test]
    fn feather_endpoints_and_band() {
        let truth = skull_template(2562);
        let instance = perturbed(&truth);
        let (known, unknown) = crop(&truth, 0.25);
        let d = 4;
        let r = extrapolate_feather(&truth, &known, &instance, d).unwrap();
        let part = r.partition.as_ref().unwrap();
        let mut corrupted = 0;
        for &v in &known {
            let out = r.mesh.vertices()[v];
            match part.depth(v) {
                Some(0) => assert_eq!(out, instance.vertices()[v]),
                Some(n) if n == d => assert_eq!(out, truth.vertices()[v]),
                Some(_) => corrupted += (out != truth.vertices()[v]) as usize,
                None => assert_eq!(out, truth.vertices()[v]),
            }
        }
        assert!(corrupted > 0);
        assert_eq!(r.eval_region, part.unknown_and_overlap());
        for &u in &unknown {
            assert_eq!(r.mesh.vertices()[u], instance.vertices()[u]);
        }
    }

    #[test]
    fn feather_formula_value() {
        // d = 4, n = 1, q = 0, r = (4, 0, 0) -> (3, 0, 0)
        let (d, n) = (4.0, 1.0);
        let r = Vector3::new(4.0, 0.0, 0.0);
        let q = Vector3::zeros();
        assert_eq!(r * ((d - n) / d) + q * (n / d), Vector3::new(3.0, 0.0, 0.0));
    }

    #[test]
    fn tps_recovers_rigid_offset_and_keeps_known() {
        let truth = skull_template(2562);
        let t = SimilarityTransform::new(
            1.0,
            *Rotation3::new(Vector3::new(0.02, -0.03, 0.01)).matrix(),
            Vector3::new(2.0, -1.0, 0.5),
        );
        let instance = t.inverse().apply_mesh(&truth);
        let (known, unknown) = crop(&truth, 0.3);
        let patient = truth.with_zeroed(&unknown);
        let r = extrapolate_tps(&patient, &known, &instance, 3, &TpsOptions::default()).unwrap();
        for &k in &known {
            assert_eq!(r.mesh.vertices()[k], patient.vertices()[k]);
        }
        for &u in &unknown {
            assert!((r.mesh.vertices()[u] - truth.vertices()[u]).norm() < 1e-6);
        }
        assert_eq!(r.eval_region, unknown);
        assert!(r.overlap_count > 0);
    }

    #[test]
    fn tps_reduces_to_po_when_overlap_matches() {
        let truth = skull_template(642);
        let instance = perturbed(&truth);
        let (known, unknown) = crop(&truth, 0.3);
        // patient equals the instance on the known side
        let mut patient = instance.clone();
        for &u in &unknown {
            patient.vertices_mut()[u] = Point3::origin();
        }
        let tps = extrapolate_tps(&patient, &known, &instance, 3, &TpsOptions::default()).unwrap();
        let po = extrapolate_po(&patient, &known, &instance).unwrap();
        assert_eq!(tps.mesh, po.mesh);
    }

    #[test]
    fn rejects_bad_inputs() {
        let truth = skull_template(162);
        let other = skull_template(642);
        let known: Vec<usize> = (0..100).collect();
        assert!(matches!(
            extrapolate_po(&truth, &known, &other),
            Err(Error::TopologyMismatch(_))
        ));
        assert!(extrapolate_po(&truth, &[], &truth).is_err());
        assert!(extrapolate_feather(&truth, &known, &truth, 0).is_err());
        assert!("nope".parse::<Method>().is_err());
        assert_eq!("P+TPS".parse::<Method>().unwrap(), Method::Tps);
    }
}
