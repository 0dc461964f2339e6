//! Leave-one-out cropping experiment comparing the three completion methods.
//!
//! cargo run --release --example loo_experiment [shapes]

use shape_extrap::harness::{
    generate_synthetic_corpus, run_loo_extrapolation, ExperimentConfig, SyntheticCorpusSpec,
};
use shape_extrap::io::report::format_summary;

fn main() -> shape_extrap::Result<()> {
    let shapes = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12);
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes,
        ..SyntheticCorpusSpec::default()
    })?;
    let config = ExperimentConfig {
        fractions: vec![10.0, 20.0, 30.0, 40.0, 50.0],
        ..ExperimentConfig::default()
    };
    let out = run_loo_extrapolation(&corpus, &config)?;
    print!("{}", format_summary(&out.summary));
    Ok(())
}
