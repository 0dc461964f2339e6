//! Crop a held-out shape, fit the model to what is left, and complete it with every method.
//!
//! cargo run --release --example complete_partial_mesh

use shape_extrap::align::{build_ssm, generalized_procrustes, project, GpaOptions};
use shape_extrap::extrapolate::{Extrapolator, Method, DEFAULT_FEATHER_DEPTH, DEFAULT_TPS_DEPTH};
use shape_extrap::harness::{
    generate_synthetic_corpus, Axis, CropDirection, CropSpec, SyntheticCorpusSpec,
};
use shape_extrap::mesh::{compute_partition, seam_jump};
use shape_extrap::surface_error_stats;
use shape_extrap::tps::TpsOptions;

fn main() -> shape_extrap::Result<()> {
    let mut corpus = generate_synthetic_corpus(&SyntheticCorpusSpec::default())?;
    let truth = corpus.pop().expect("non-empty corpus");
    let gpa = generalized_procrustes(&corpus, &GpaOptions::default())?;
    let model = build_ssm(&gpa.aligned)?;

    // remove the anterior 30% of the bounding box of the mean
    let unknown = CropSpec::new(Axis::X, 30.0, CropDirection::FromMax)?.unknown_vertices(&gpa.mean);
    let partition = compute_partition(&truth, &unknown, 0)?;
    let patient = truth.with_zeroed(&unknown);
    println!(
        "{} of {} vertices unknown",
        unknown.len(),
        truth.vertex_count()
    );

    let fit = project(&patient, partition.known(), &model, model.mode_count())?;
    println!("first coefficients: {:?}", &fit.coefficients[..3]);

    let extrapolator = Extrapolator::new(&patient);
    for method in Method::ALL {
        let depth = match method {
            Method::ProjectionOnly => 0,
            Method::Feather => DEFAULT_FEATHER_DEPTH,
            Method::Tps => DEFAULT_TPS_DEPTH,
        };
        let out = extrapolator.run(
            method,
            &patient,
            partition.known(),
            &fit.instance,
            depth,
            &TpsOptions::default(),
        )?;
        let err = surface_error_stats(&truth, &out.mesh, &out.eval_region)?;
        let seam = seam_jump(&truth, &out.mesh, &partition)?;
        println!(
            "{:>6}: rms vertex {:.3} mm, max surface {:.3} mm, max seam jump {:.3} mm, overlap {}",
            method.label(),
            err.rms_vertex,
            err.max_surface,
            seam.max_jump,
            out.overlap_count
        );
    }
    Ok(())
}
