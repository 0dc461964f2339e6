//! Generate a synthetic corpus, align it, and inspect the shape model.
//!
//! cargo run --release --example build_model

use shape_extrap::align::{build_ssm, generalized_procrustes, GpaOptions};
use shape_extrap::harness::{generate_synthetic_corpus, SyntheticCorpusSpec};

fn main() -> shape_extrap::Result<()> {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec::default())?;
    let gpa = generalized_procrustes(&corpus, &GpaOptions::default())?;
    println!(
        "{} shapes, {} vertices, GPA converged: {} after {} iterations",
        corpus.len(),
        corpus[0].vertex_count(),
        gpa.converged,
        gpa.iterations
    );

    let model = build_ssm(&gpa.aligned)?;
    let total: f64 = model.stddevs().iter().map(|s| s * s).sum();
    let mut cumulative = 0.0;
    println!("mode   sigma      cumulative variance");
    for (i, s) in model.stddevs().iter().enumerate() {
        cumulative += s * s;
        println!("{i:>4}   {s:.6}   {:>6.2}%", 100.0 * cumulative / total);
    }
    println!("orthonormality error {:.2e}", model.orthonormality_error());

    // +/- 3 sigma along the first mode, in the unit-size model frame
    for k in [-3.0, 3.0] {
        let inst = model.instance(&[k * model.stddevs()[0]])?;
        let (lo, hi) = inst.bounding_box();
        println!(
            "mode 0 at {k:+} sigma: bounding box extent {:.4}",
            (hi - lo).norm()
        );
    }
    Ok(())
}
