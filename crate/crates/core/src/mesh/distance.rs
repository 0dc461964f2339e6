//! Exact point-to-surface distance with an axis-aligned bounding-volume hierarchy.

use nalgebra::{Point3, Vector3};

use super::TriMesh;

const LEAF_SIZE: usize = 4;

/// Closest point to `p` on the triangle `(a, b, c)`, resolving the vertex, edge and face regions.
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

fn triangle_sq_distance(p: &Point3<f64>, tri: &[Point3<f64>; 3]) -> f64 {
    (p - closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2])).norm_squared()
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point3::from(Vector3::repeat(f64::INFINITY)),
            max: Point3::from(Vector3::repeat(f64::NEG_INFINITY)),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn sq_distance(&self, p: &Point3<f64>) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle slot. Interior: left child index.
    start: usize,
    count: usize,
    right: usize,
}

/// Spatial index answering exact closest-point queries against a fixed triangle set.
#[derive(Debug, Clone)]
pub struct MeshDistance {
    nodes: Vec<Node>,
    triangles: Vec<[Point3<f64>; 3]>,
    /// Original triangle index for each slot of `triangles`.
    order: Vec<usize>,
}

impl MeshDistance {
    pub fn new(mesh: &TriMesh) -> Self {
        let v = mesh.vertices();
        let corners: Vec<[Point3<f64>; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| t.map(|i| v[i as usize]))
            .collect();
        let centroids: Vec<Point3<f64>> = corners
            .iter()
            .map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut order: Vec<usize> = (0..corners.len()).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            build(&mut nodes, &corners, &centroids, &mut order, 0);
        }
        let triangles = order.iter().map(|&i| corners[i]).collect();
        Self {
            nodes,
            triangles,
            order,
        }
    }

    /// Closest surface point, its distance, and the index of the triangle it lies on.
    /// Returns `None` for a mesh without triangles.
    pub fn closest_point(&self, p: &Point3<f64>) -> Option<(Point3<f64>, f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut best_slot = 0;
        let mut stack = vec![(0usize, self.nodes[0].bounds.sq_distance(p))];
        while let Some((idx, bound)) = stack.pop() {
            if bound > best {
                continue;
            }
            let node = &self.nodes[idx];
            if node.count > 0 {
                for slot in node.start..node.start + node.count {
                    let d = triangle_sq_distance(p, &self.triangles[slot]);
                    if d < best {
                        best = d;
                        best_slot = slot;
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let dl = self.nodes[l].bounds.sq_distance(p);
                let dr = self.nodes[r].bounds.sq_distance(p);
                // push the farther child first so the nearer one is explored first
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        let t = &self.triangles[best_slot];
        let q = closest_point_on_triangle(p, &t[0], &t[1], &t[2]);
        Some((q, best.sqrt(), self.order[best_slot]))
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.closest_point(p).map_or(f64::INFINITY, |(_, d, _)| d)
    }
}

fn build(
    nodes: &mut Vec<Node>,
    corners: &[[Point3<f64>; 3]],
    centroids: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in order.iter() {
        for p in &corners[i] {
            bounds.grow(p);
        }
        cbounds.grow(&centroids[i]);
    }
    let idx = nodes.len();
    nodes.push(Node {
        bounds,
        start,
        count: order.len(),
        right: 0,
    });
    if order.len() <= LEAF_SIZE {
        return idx;
    }
    let extent = cbounds.max - cbounds.min;
    let axis = extent.imax();
    if extent[axis] <= 0.0 {
        return idx;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis])
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build(nodes, corners, centroids, lo, start);
    let right = build(nodes, corners, centroids, hi, start + mid);
    nodes[idx].start = left;
    nodes[idx].count = 0;
    nodes[idx].right = right;
    idx
}

/// Distance from `p` to the surface of `mesh`; builds a one-off index.
pub fn point_to_mesh_distance(p: &Point3<f64>, mesh: &TriMesh) -> f64 {
    MeshDistance::new(mesh).distance(p)
}

/// Reference implementation that scans every triangle.
pub fn point_to_mesh_distance_exhaustive(p: &Point3<f64>, mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    mesh.triangles()
        .iter()
        .map(|t| triangle_sq_distance(p, &t.map(|i| v[i as usize])))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::skull_template;
    use nalgebra::{Rotation3, Translation3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_triangle() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    /// Oracle: minimum over a dense barycentric grid of the triangle.
    fn sampled_distance(p: &Point3<f64>, m: &TriMesh, steps: usize) -> f64 {
        let v = m.vertices();
        let mut best = f64::INFINITY;
        for t in m.triangles() {
            let [a, b, c] = t.map(|i| v[i as usize]);
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let u = i as f64 / steps as f64;
                    let w = j as f64 / steps as f64;
                    let q = a + (b - a) * u + (c - a) * w;
                    best = best.min((p - q).norm());
                }
            }
        }
        best
    }

    #[test]
    fn perpendicular_foot_inside_face() {
        let m = unit_triangle();
        assert_eq!(point_to_mesh_distance(&Point3::new(0.0, 0.0, 1.0), &m), 1.0);
        assert_eq!(point_to_mesh_distance(&Point3::new(1.0, 0.0, 0.0), &m), 0.0);
    }

    #[test]
    fn edge_region_matches_sampling_oracle() {
        let m = unit_triangle();
        let p = Point3::new(2.0, 2.0, 0.0);
        let oracle = sampled_distance(&p, &m, 2000);
        let d = point_to_mesh_distance(&p, &m);
        assert!((d - 1.5 * 2f64.sqrt()).abs() < 1e-12);
        assert!((d - oracle).abs() < 1e-9);
        let (q, _, _) = MeshDistance::new(&m).closest_point(&p).unwrap();
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn random_points_match_sampling_oracle() {
        let m = unit_triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = Point3::new(
                rng.random_range(-1.0..2.0),
                rng.random_range(-1.0..2.0),
                rng.random_range(-1.0..1.0),
            );
            let d = point_to_mesh_distance(&p, &m);
            let oracle = sampled_distance(&p, &m, 400);
            // sampling overestimates by at most the grid spacing
            assert!(d <= oracle + 1e-12 && oracle - d < 5e-3, "{d} {oracle}");
        }
    }

    #[test]
    fn indexed_equals_exhaustive_on_large_mesh() {
        let m = skull_template(10242);
        assert!(m.triangle_count() >= 10_000);
        let index = MeshDistance::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let p = Point3::new(
                rng.random_range(-150.0..150.0),
                rng.random_range(-150.0..150.0),
                rng.random_range(-150.0..150.0),
            );
            let fast = index.distance(&p);
            let slow = point_to_mesh_distance_exhaustive(&p, &m);
            assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rigid_invariance(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
            tx in -50.0f64..50.0, ty in -50.0f64..50.0, tz in -50.0f64..50.0,
            px in -120.0f64..120.0, py in -120.0f64..120.0, pz in -120.0f64..120.0,
        ) {
            let m = skull_template(642);
            let iso = Translation3::new(tx, ty, tz) * Rotation3::new(Vector3::new(ax, ay, az));
            let moved = m.with_vertices(m.vertices().iter().map(|v| iso * v).collect()).unwrap();
            let p = Point3::new(px, py, pz);
            let d0 = point_to_mesh_distance(&p, &m);
            let d1 = point_to_mesh_distance(&(iso * p), &moved);
            prop_assert!((d0 - d1).abs() < 1e-6);
        }
    }
}
