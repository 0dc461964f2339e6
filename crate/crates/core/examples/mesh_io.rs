//! Write and read back meshes, models and partitions.
//!
//! cargo run --release --example mesh_io

use shape_extrap::align::{build_ssm, generalized_procrustes, GpaOptions};
use shape_extrap::harness::{
    generate_synthetic_corpus, Axis, CropDirection, CropSpec, SyntheticCorpusSpec,
};
use shape_extrap::io::{self, CropProvenance, PartitionFile, PlyFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("shape-extrap-mesh-io");
    std::fs::create_dir_all(&dir)?;
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes: 5,
        ..SyntheticCorpusSpec::default()
    })?;
    let mesh = &corpus[0];

    io::write_mesh(dir.join("shape.ply"), mesh)?;
    io::write_mesh(dir.join("shape.obj"), mesh)?;
    io::write_ply(dir.join("shape_ascii.ply"), mesh, None, PlyFormat::Ascii)?;
    let ply = io::read_mesh(dir.join("shape.ply"))?;
    let obj = io::read_mesh(dir.join("shape.obj"))?;
    let drift = ply
        .vertices()
        .iter()
        .zip(obj.vertices())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    println!(
        "binary PLY exact: {}, OBJ max drift {drift:.1e} mm",
        &ply == mesh
    );

    let model = build_ssm(&generalized_procrustes(&corpus, &GpaOptions::default())?.aligned)?;
    io::write_model(dir.join("model.ssm"), &model)?;
    println!(
        "model round trip exact: {}",
        io::read_model(dir.join("model.ssm"))? == model
    );

    let unknown =
        CropSpec::new(Axis::X, 20.0, CropDirection::FromMax)?.unknown_vertices(model.mean_mesh());
    let part = PartitionFile::new(
        mesh.vertex_count(),
        &unknown,
        Some(CropProvenance {
            axis: Axis::X,
            fraction: 20.0,
        }),
    )?;
    io::write_partition(dir.join("crop.json"), &part)?;
    let back = io::read_partition(dir.join("crop.json"))?;
    println!(
        "partition: {} unknown of {}",
        back.unknown_indices.len(),
        back.vertex_count
    );

    match io::read_mesh_data(dir.join("missing.ply")) {
        Err(e) => println!("missing file -> {}", shape_extrap::cli::error_line(&e)),
        Ok(_) => unreachable!(),
    }
    println!("files in {}", dir.display());
    Ok(())
}
