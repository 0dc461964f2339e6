//! Per-vertex mean surface error over leave-one-out trials, written as PLY heatmaps.
//!
//! cargo run --release --example heatmap

use shape_extrap::harness::{
    emit_heatmap, generate_synthetic_corpus, run_loo_extrapolation, ExperimentConfig,
    SyntheticCorpusSpec,
};
use shape_extrap::io::{self, PlyFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes: 10,
        ..SyntheticCorpusSpec::default()
    })?;
    let config = ExperimentConfig {
        fractions: vec![30.0],
        heatmaps: true,
        ..ExperimentConfig::default()
    };
    let out = run_loo_extrapolation(&corpus, &config)?;

    let dir = std::env::temp_dir().join("shape-extrap-heatmaps");
    std::fs::create_dir_all(&dir)?;
    for h in &out.heatmaps {
        let (mesh, quality) = emit_heatmap(&out.mean_shape, &h.accumulator)?;
        let seen: Vec<f64> = quality.iter().copied().filter(|&q| q >= 0.0).collect();
        let peak = seen.iter().copied().fold(0.0, f64::max);
        let path = dir.join(format!("heatmap_{}_{}.ply", h.method.name(), h.fraction));
        io::write_ply(&path, &mesh, Some(&quality), PlyFormat::BinaryLittleEndian)?;
        println!(
            "{:>6}: {} vertices evaluated, peak mean error {peak:.3} mm -> {}",
            h.method.label(),
            seen.len(),
            path.display()
        );
    }
    Ok(())
}
