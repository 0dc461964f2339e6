use nalgebra::{Point3, Rotation3, Vector3};
use proptest::prelude::*;

use shape_extrap::align::{procrustes_points, SimilarityTransform};
use shape_extrap::extrapolate::Extrapolator;
use shape_extrap::harness::{icosphere, parse_fractions, skull_template};
use shape_extrap::io::{encode_ply, parse_ply, PlyFormat};
use shape_extrap::mesh::{point_to_mesh_distance, point_to_mesh_distance_exhaustive, Adjacency};
use shape_extrap::stats::MeanStd;
use shape_extrap::tps::{build_tps, TpsKernel, TpsOptions};
use shape_extrap::{compute_partition, TriMesh};

fn point(range: f64) -> impl Strategy<Value = Point3<f64>> {
    prop::array::uniform3(-range..range).prop_map(|[x, y, z]| Point3::new(x, y, z))
}

fn similarity() -> impl Strategy<Value = SimilarityTransform> {
    (
        0.3f64..3.0,
        prop::array::uniform3(-3.2f64..3.2),
        prop::array::uniform3(-50.0f64..50.0),
    )
        .prop_map(|(s, [a, b, c], [x, y, z])| {
            SimilarityTransform::new(
                s,
                *Rotation3::from_euler_angles(a, b, c).matrix(),
                Vector3::new(x, y, z),
            )
        })
}

/// Points with a guaranteed spread in all three directions plus random extras.
fn spread_points() -> impl Strategy<Value = Vec<Point3<f64>>> {
    prop::collection::vec(point(40.0), 0..30).prop_map(|mut extra| {
        extra.extend([
            Point3::new(30.0, 0.0, 0.0),
            Point3::new(0.0, 25.0, 0.0),
            Point3::new(0.0, 0.0, 20.0),
            Point3::new(-10.0, -10.0, -10.0),
            Point3::new(15.0, -20.0, 5.0),
        ]);
        extra
    })
}

fn sphere_mask() -> impl Strategy<Value = Vec<bool>> {
    let n = icosphere(2).vertex_count();
    prop::collection::vec(prop::bool::weighted(0.3), n).prop_filter("mixed labels", |m| {
        m.iter().any(|&b| b) && m.iter().any(|&b| !b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn procrustes_recovers_any_similarity(pts in spread_points(), t in similarity()) {
        let moved: Vec<_> = pts.iter().map(|p| t.apply(p)).collect();
        let est = procrustes_points(&pts, &moved).unwrap();
        prop_assert!((est.scale - t.scale).abs() < 1e-9 * t.scale);
        prop_assert!((est.rotation - t.rotation).amax() < 1e-9);
        for (p, q) in pts.iter().zip(&moved) {
            prop_assert!((est.apply(p) - q).norm() < 1e-8);
        }
    }

    #[test]
    fn similarity_inverse_undoes(t in similarity(), p in point(100.0)) {
        let back = t.inverse().apply(&t.apply(&p));
        prop_assert!((back - p).norm() < 1e-9 * (1.0 + p.coords.norm()));
        let id = t.compose(&t.inverse());
        prop_assert!((id.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tps_interpolates_its_controls(
        pts in spread_points(),
        shifts in prop::collection::vec(prop::array::uniform3(-4.0f64..4.0), 34),
        thin_plate in any::<bool>(),
    ) {
        // random extras can collide; drop near-duplicates
        let mut src: Vec<Point3<f64>> = Vec::new();
        for p in pts {
            if src.iter().all(|q| (q - p).norm() > 1e-3) {
                src.push(p);
            }
        }
        let tgt: Vec<_> = src.iter().zip(&shifts).map(|(p, [a, b, c])| p + Vector3::new(*a, *b, *c)).collect();
        let kernel = if thin_plate { TpsKernel::ThinPlate } else { TpsKernel::Linear };
        let m = build_tps(&src, &tgt, &TpsOptions { kernel, allow_rank_deficient: false, ..TpsOptions::default() }).unwrap();
        for (s, t) in src.iter().zip(&tgt) {
            prop_assert!((m.evaluate_point(s) - t).norm() < 1e-6);
        }
    }

    #[test]
    fn partition_depths_are_breadth_first(mask in sphere_mask(), depth in 0u32..6) {
        let mesh = icosphere(2);
        let unknown: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let part = compute_partition(&mesh, &unknown, depth).unwrap();
        let adj = Adjacency::new(&mesh);
        for v in 0..mesh.vertex_count() {
            let nbrs = adj.neighbors(v);
            match part.depth(v) {
                _ if mask[v] => prop_assert!(part.depth(v).is_none()),
                Some(0) => prop_assert!(nbrs.iter().any(|&u| mask[u as usize])),
                Some(k) => {
                    prop_assert!(nbrs.iter().all(|&u| !mask[u as usize]));
                    prop_assert!(nbrs.iter().any(|&u| part.depth(u as usize) == Some(k - 1)));
                    prop_assert!(nbrs.iter().all(|&u| part.depth(u as usize).is_none_or(|d| d + 1 >= k)));
                }
                None => {
                    // outside the band: no neighbour sits at depth < max
                    prop_assert!(nbrs.iter().all(|&u| !mask[u as usize]));
                    prop_assert!(nbrs.iter().all(|&u| part.depth(u as usize).is_none_or(|d| d == depth)));
                }
            }
        }
        prop_assert_eq!(part.unknown().len() + part.known().len(), mesh.vertex_count());
    }

    #[test]
    fn feathered_vertices_lie_between_instance_and_patient(
        mask in sphere_mask(),
        depth in 1u32..6,
        offset in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let patient = icosphere(2);
        let shift = Vector3::new(offset[0], offset[1], offset[2]);
        let instance = patient.with_vertices(patient.vertices().iter().map(|p| p + shift).collect()).unwrap();
        let known: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
        let out = Extrapolator::new(&patient).feather(&patient, &known, &instance, depth).unwrap();
        let part = out.partition.as_ref().unwrap();
        for v in 0..patient.vertex_count() {
            let got = out.mesh.vertices()[v];
            let q = patient.vertices()[v];
            match part.depth(v) {
                _ if mask[v] => prop_assert_eq!(got, instance.vertices()[v]),
                Some(n) => {
                    let t = n as f64 / depth as f64;
                    let expect = instance.vertices()[v] + (q - instance.vertices()[v]) * t;
                    prop_assert!((got - expect).norm() < 1e-12);
                }
                None => prop_assert_eq!(got, q),
            }
        }
    }

    #[test]
    fn ply_round_trip_is_bit_exact(
        coords in prop::collection::vec(prop::array::uniform3(any::<f64>().prop_filter("finite", |x| x.is_finite())), 3..60),
        ascii in any::<bool>(),
        with_quality in any::<bool>(),
    ) {
        let n = coords.len() as u32;
        let vertices: Vec<_> = coords.iter().map(|[x, y, z]| Point3::new(*x, *y, *z)).collect();
        let triangles: Vec<[u32; 3]> = (0..n - 2).map(|i| [i, i + 1, i + 2]).collect();
        let mesh = TriMesh::new(vertices, triangles).unwrap();
        let quality: Option<Vec<f64>> = with_quality.then(|| coords.iter().map(|c| c[0] * 0.5).collect());
        let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
        let back = parse_ply(&encode_ply(&mesh, quality.as_deref(), format).unwrap()).unwrap();
        for (a, b) in mesh.vertices().iter().zip(back.mesh.vertices()) {
            for c in 0..3 {
                prop_assert_eq!(a[c].to_bits(), b[c].to_bits());
            }
        }
        prop_assert_eq!(mesh.triangles(), back.mesh.triangles());
        prop_assert_eq!(quality, back.quality);
    }

    #[test]
    fn surface_distance_is_rigid_invariant(p in point(150.0), t in similarity()) {
        let mesh = skull_template(162);
        let rigid = SimilarityTransform::new(1.0, t.rotation, t.translation);
        let moved = rigid.apply_mesh(&mesh);
        let d0 = point_to_mesh_distance(&p, &mesh);
        let d1 = point_to_mesh_distance(&rigid.apply(&p), &moved);
        prop_assert!((d0 - d1).abs() < 1e-6);
        prop_assert!((d0 - point_to_mesh_distance_exhaustive(&p, &mesh)).abs() < 1e-9);
        let nearest_vertex = mesh.vertices().iter().map(|v| (v - p).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(d0 <= nearest_vertex + 1e-12);
    }

    #[test]
    fn mean_std_brackets(values in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let s = MeanStd::from_values(values.iter().copied());
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s.mean >= lo - 1e-6 && s.mean <= hi + 1e-6);
        prop_assert!(s.std >= 0.0 && s.std <= (hi - lo) + 1e-6);
        prop_assert!(s.std_error() <= s.std);
    }

    #[test]
    fn fraction_ranges_are_inclusive(start in 1u32..20, steps in 0u32..8, step in 1u32..4) {
        let stop = start + steps * step;
        let f = parse_fractions(&format!("{start}:{stop}:{step}")).unwrap();
        prop_assert_eq!(f.len(), steps as usize + 1);
        prop_assert_eq!(f[0], start as f64);
        prop_assert_eq!(*f.last().unwrap(), stop as f64);
    }
}
