//! Leave-one-out generalization of the shape model as modes are added.
//!
//! cargo run --release --example shape_space_generalization

use shape_extrap::align::{loo_generalization, GpaOptions};
use shape_extrap::harness::{generate_synthetic_corpus, SyntheticCorpusSpec};

fn main() -> shape_extrap::Result<()> {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes: 12,
        ..SyntheticCorpusSpec::default()
    })?;
    let counts: Vec<usize> = (0..=10).collect();
    let loo = loo_generalization(&corpus, &counts, &GpaOptions::default())?;
    println!("modes  rms vertex (mm)      rms surface (mm)");
    for r in &loo.summary {
        println!(
            "{:>5}  {:.3} +- {:.3}     {:.3} +- {:.3}",
            r.num_modes, r.rms_vertex.mean, r.rms_vertex.std, r.rms_surface.mean, r.rms_surface.std
        );
    }
    Ok(())
}
