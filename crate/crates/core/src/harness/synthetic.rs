//! Seeded synthetic corpora of topologically consistent meshes.

use std::collections::HashMap;

use nalgebra::{Point3, UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::align::SimilarityTransform;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Largest supported subdivision level (655 362 vertices).
pub const MAX_ICOSPHERE_LEVEL: u32 = 7;

/// Unit icosphere with `10 * 4^level + 2` vertices.
pub fn icosphere(level: u32) -> TriMesh {
    let level = level.min(MAX_ICOSPHERE_LEVEL);
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vector3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(vertices.into_iter().map(Point3::from).collect(), faces)
        .expect("icosphere topology is valid")
}

/// Subdivision level whose vertex count is the largest not exceeding `budget`.
pub fn level_for_budget(budget: usize) -> u32 {
    let mut level = 0;
    while level < MAX_ICOSPHERE_LEVEL && 10 * 4usize.pow(level + 1) + 2 <= budget {
        level += 1;
    }
    level
}

const ELLIPSOID_RADII: [f64; 3] = [95.0, 72.0, 80.0];

/// Ellipsoid with semi-axes 95 x 72 x 80 mm.
pub fn ellipsoid_template(vertex_budget: usize) -> TriMesh {
    let sphere = icosphere(level_for_budget(vertex_budget));
    let r = Vector3::from(ELLIPSOID_RADII);
    let v = sphere
        .vertices()
        .iter()
        .map(|p| Point3::from(p.coords.component_mul(&r)))
        .collect();
    sphere.with_vertices(v).expect("same topology")
}

/// (direction, amplitude mm, angular width) of radial features; +x is anterior, +z superior.
const SKULL_FEATURES: [([f64; 3], f64, f64); 9] = [
    ([0.85, 0.0, 0.35], 8.0, 0.30),   // brow
    ([0.80, 0.0, -0.45], 15.0, 0.35), // maxilla
    ([0.85, 0.35, 0.10], -8.0, 0.15), // orbits
    ([0.85, -0.35, 0.10], -8.0, 0.15),
    ([0.50, 0.75, -0.20], 7.0, 0.25), // zygomatic arches
    ([0.50, -0.75, -0.20], 7.0, 0.25),
    ([-0.90, 0.0, 0.20], 6.0, 0.40), // occiput
    ([0.0, 0.0, -1.0], -10.0, 0.50), // cranial base
    ([0.20, 0.0, 1.0], 4.0, 0.45),   // vertex
];

fn skull_radial_offset(u: &Vector3<f64>) -> f64 {
    SKULL_FEATURES
        .iter()
        .map(|(c, amp, w)| {
            let c = Vector3::from(*c).normalize();
            amp * (-(u - c).norm_squared() / (2.0 * w * w)).exp()
        })
        .sum()
}

/// Skull-like bumpy template: an ellipsoid with brow, maxilla, orbit, cheek and
/// occipital features.
pub fn skull_template(vertex_budget: usize) -> TriMesh {
    let sphere = icosphere(level_for_budget(vertex_budget));
    let r = Vector3::from(ELLIPSOID_RADII);
    let v = sphere
        .vertices()
        .iter()
        .map(|p| {
            Point3::from(p.coords.component_mul(&r) + p.coords * skull_radial_offset(&p.coords))
        })
        .collect();
    sphere.with_vertices(v).expect("same topology")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Ellipsoid,
    Skull,
}

impl std::str::FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ellipsoid" => Ok(Template::Ellipsoid),
            "skull" | "skull-like" => Ok(Template::Skull),
            other => Err(Error::InvalidArgument(format!(
                "unknown template {other:?}"
            ))),
        }
    }
}

impl Template {
    pub fn build(self, vertex_budget: usize) -> TriMesh {
        match self {
            Template::Ellipsoid => ellipsoid_template(vertex_budget),
            Template::Skull => skull_template(vertex_budget),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub template: Template,
    /// Upper bound on the vertex count; the nearest icosphere level at or below it is used.
    pub vertex_budget: usize,
    pub shapes: usize,
    pub latent_modes: usize,
    /// RMS per-vertex displacement of a unit-coefficient leading mode.
    pub amplitude_mm: f64,
    /// Ratio between successive latent mode amplitudes.
    pub mode_decay: f64,
    /// Standard deviation of independent per-vertex, per-axis noise.
    pub noise_mm: f64,
    /// Apply a random similarity transform to every shape.
    pub random_pose: bool,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            template: Template::Skull,
            vertex_budget: 2562,
            shapes: 20,
            latent_modes: 12,
            amplitude_mm: 4.0,
            mode_decay: 0.85,
            noise_mm: 0.02,
            random_pose: true,
            seed: 20_170_301,
        }
    }
}

/// One smooth displacement field: a sum of a few low-frequency plane waves over the unit
/// sphere, normalized to unit RMS vertex displacement.
fn smooth_field(sphere: &[Point3<f64>], rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    const WAVES: usize = 3;
    let waves: Vec<(Vector3<f64>, f64, f64, Vector3<f64>)> = (0..WAVES)
        .map(|_| {
            let dir = random_unit(rng);
            let freq = rng.random_range(0.3..1.5) * std::f64::consts::PI;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
            (dir, freq, phase, amp)
        })
        .collect();
    let mut field: Vec<Vector3<f64>> = sphere
        .iter()
        .map(|p| {
            waves
                .iter()
                .map(|(dir, freq, phase, amp)| amp * (freq * dir.dot(&p.coords) + phase).sin())
                .sum()
        })
        .collect();
    let rms = (field.iter().map(|d| d.norm_squared()).sum::<f64>() / field.len() as f64).sqrt();
    if rms > 0.0 {
        field.iter_mut().for_each(|d| *d /= rms);
    }
    field
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn random_pose(rng: &mut ChaCha8Rng) -> SimilarityTransform {
    let q = Vector4::from_fn(|_, _| StandardNormal.sample(rng));
    let rotation = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q));
    let scale = rng.random_range(0.8..1.25);
    let translation = Vector3::from_fn(|_, _| 20.0 * rng.sample::<f64, _>(StandardNormal));
    SimilarityTransform::new(scale, *rotation.to_rotation_matrix().matrix(), translation)
}

/// Generates `spec.shapes` meshes sharing the template topology. The same spec always gives
/// the same corpus.
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<Vec<TriMesh>> {
    if spec.latent_modes == 0 {
        return Err(Error::InvalidArgument(
            "at least one latent mode is required".into(),
        ));
    }
    if spec.shapes == 0 {
        return Err(Error::InvalidArgument(
            "at least one shape is required".into(),
        ));
    }
    if !(spec.amplitude_mm >= 0.0 && spec.noise_mm >= 0.0 && spec.mode_decay > 0.0) {
        return Err(Error::InvalidArgument(
            "amplitude and noise must be non-negative and decay positive".into(),
        ));
    }
    let level = level_for_budget(spec.vertex_budget);
    let sphere = icosphere(level);
    let template = spec.template.build(spec.vertex_budget);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let fields: Vec<Vec<Vector3<f64>>> = (0..spec.latent_modes)
        .map(|_| smooth_field(sphere.vertices(), &mut rng))
        .collect();

    let mut corpus = Vec::with_capacity(spec.shapes);
    for _ in 0..spec.shapes {
        let coeffs: Vec<f64> = (0..spec.latent_modes)
            .map(|k| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * spec.amplitude_mm * spec.mode_decay.powi(k as i32)
            })
            .collect();
        let mut vertices: Vec<Point3<f64>> = template.vertices().to_vec();
        for (field, c) in fields.iter().zip(&coeffs) {
            for (v, d) in vertices.iter_mut().zip(field) {
                *v += d * *c;
            }
        }
        if spec.noise_mm > 0.0 {
            for v in &mut vertices {
                *v += Vector3::from_fn(|_, _| spec.noise_mm * rng.sample::<f64, _>(StandardNormal));
            }
        }
        let mesh = template.with_vertices(vertices)?;
        corpus.push(if spec.random_pose {
            random_pose(&mut rng).apply_mesh(&mesh)
        } else {
            mesh
        });
    }
    Ok(corpus)
}
