//! TPS build time against overlap size, with a quadratic fit.
//!
//! cargo run --release --example runtime_curve

use shape_extrap::extrapolate::Method;
use shape_extrap::harness::{
    fit_runtime_curve, generate_synthetic_corpus, run_loo_extrapolation, ExperimentConfig,
    SyntheticCorpusSpec,
};

fn main() -> shape_extrap::Result<()> {
    let corpus = generate_synthetic_corpus(&SyntheticCorpusSpec {
        shapes: 8,
        ..SyntheticCorpusSpec::default()
    })?;
    let config = ExperimentConfig {
        methods: vec![Method::Tps],
        ..ExperimentConfig::default()
    };
    let out = run_loo_extrapolation(&corpus, &config)?;
    let curve = fit_runtime_curve(&out.trials, 2)?;

    println!("overlap  trials  build (ms)  total (ms)  build share");
    for b in &curve.buckets {
        println!(
            "{:>7}  {:>6}  {:>10.3}  {:>10.3}  {:>10.1}%",
            b.overlap_count,
            b.samples,
            1e3 * b.mean_build,
            1e3 * b.mean_total,
            100.0 * b.build_share
        );
    }
    let c = &curve.fit.coefficients;
    println!(
        "build(s) ~ {:.3e} + {:.3e} n + {:.3e} n^2, R^2 = {:.4}",
        c[0], c[1], c[2], curve.fit.r_squared
    );
    Ok(())
}
