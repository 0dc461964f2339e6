use shape_extrap::align::{build_ssm, generalized_procrustes, project, GpaOptions};
use shape_extrap::harness::{generate_synthetic_corpus, skull_template, Axis, SyntheticCorpusSpec};
use shape_extrap::io::{self, CropProvenance, PartitionFile, PlyFormat};
use shape_extrap::{Error, TriMesh};

fn corpus(shapes: usize, budget: usize) -> Vec<TriMesh> {
    generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes,
        vertex_budget: budget,
        ..SyntheticCorpusSpec::default()
    })
    .unwrap()
}

#[test]
fn ten_thousand_vertex_ply_obj_cross_read() {
    let mesh = corpus(1, 10242).remove(0);
    assert!(mesh.vertex_count() >= 10_000);
    let dir = tempfile::tempdir().unwrap();
    let ply = dir.path().join("a.ply");
    let obj = dir.path().join("a.obj");
    io::write_mesh(&ply, &mesh).unwrap();
    io::write_mesh(&obj, &mesh).unwrap();
    let a = io::read_mesh(&ply).unwrap();
    let b = io::read_mesh(&obj).unwrap();
    assert_eq!(a.triangles(), b.triangles());
    let worst = a
        .vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).amax())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    assert_eq!(a, mesh);
}

#[test]
fn ascii_and_binary_ply_agree() {
    let mesh = skull_template(642);
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ply");
    let b = dir.path().join("b.ply");
    io::write_ply(&a, &mesh, None, PlyFormat::Ascii).unwrap();
    io::write_ply(&b, &mesh, None, PlyFormat::BinaryLittleEndian).unwrap();
    assert_eq!(io::read_mesh(&a).unwrap(), io::read_mesh(&b).unwrap());
}

#[test]
fn writers_are_deterministic() {
    let c = corpus(3, 162);
    let model = build_ssm(
        &generalized_procrustes(&c, &GpaOptions::default())
            .unwrap()
            .aligned,
    )
    .unwrap();
    let q: Vec<f64> = (0..c[0].vertex_count()).map(|i| i as f64 * 0.1).collect();
    for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
        assert_eq!(
            io::encode_ply(&c[0], Some(&q), format).unwrap(),
            io::encode_ply(&c[0], Some(&q), format).unwrap()
        );
    }
    assert_eq!(io::encode_obj(&c[1]), io::encode_obj(&c[1]));
    assert_eq!(io::encode_model(&model), io::encode_model(&model));
}

#[test]
fn loaded_model_projects_bit_identically() {
    let c = corpus(21, 642);
    let (train, test) = c.split_at(20);
    let model = build_ssm(
        &generalized_procrustes(train, &GpaOptions::default())
            .unwrap()
            .aligned,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ssm");
    io::write_model(&path, &model).unwrap();
    let loaded = io::read_model(&path).unwrap();
    assert_eq!(loaded, model);

    let known: Vec<usize> = (0..test[0].vertex_count()).filter(|i| i % 3 != 0).collect();
    let a = project(&test[0], &known, &model, model.mode_count()).unwrap();
    let b = project(&test[0], &known, &loaded, loaded.mode_count()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.coefficients), bits(&b.coefficients));
    assert_eq!(a.instance, b.instance);
}

#[test]
fn truncated_model_file_is_rejected() {
    let c = corpus(3, 162);
    let model = build_ssm(
        &generalized_procrustes(&c, &GpaOptions::default())
            .unwrap()
            .aligned,
    )
    .unwrap();
    let bytes = io::encode_model(&model);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.ssm");
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let err = io::read_model(&path).unwrap_err();
    assert_eq!(err.kind(), "truncated_payload");
}

#[test]
fn quad_obj_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quad.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
    match io::read_mesh(&path).unwrap_err() {
        Error::NonTriangleFace {
            location, vertices, ..
        } => {
            assert_eq!(vertices, 4);
            assert!(location.contains('5'), "{location}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn zero_area_triangles_are_rejected_only_by_the_strict_reader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").unwrap();
    assert!(matches!(io::read_mesh(&path), Err(Error::InvalidMesh(_))));
    assert_eq!(io::read_mesh_data(&path).unwrap().mesh.vertex_count(), 3);
}

#[test]
fn unknown_extension_is_an_argument_error() {
    let mesh = skull_template(162);
    let err = io::write_mesh("/tmp/never-written.stl", &mesh).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn partition_file_round_trip_on_disk() {
    let p = PartitionFile::new(
        10,
        &[7, 2, 2, 5],
        Some(CropProvenance {
            axis: Axis::Y,
            fraction: 25.0,
        }),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    io::write_partition(&path, &p).unwrap();
    let back = io::read_partition(&path).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.unknown_indices, vec![2, 5, 7]);
    assert_eq!(back.known_indices(), vec![0, 1, 3, 4, 6, 8, 9]);

    std::fs::write(
        &path,
        r#"{"version":1,"vertex_count":3,"unknown_indices":[2,1]}"#,
    )
    .unwrap();
    assert!(io::read_partition(&path).is_err());
}

#[test]
fn heatmap_quality_survives_round_trip() {
    let mesh = skull_template(162);
    let q: Vec<f64> = (0..mesh.vertex_count())
        .map(|i| if i % 4 == 0 { -1.0 } else { i as f64 / 7.0 })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.ply");
    io::write_ply(&path, &mesh, Some(&q), PlyFormat::BinaryLittleEndian).unwrap();
    let back = io::read_mesh_data(&path).unwrap();
    assert_eq!(back.quality.unwrap(), q);
    assert_eq!(back.mesh, mesh);
}
