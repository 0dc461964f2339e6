//! How the feathering blend moves from the model instance to the patient across the band.
//!
//! cargo run --release --example feathering

use nalgebra::Vector3;
use shape_extrap::extrapolate::Extrapolator;
use shape_extrap::harness::skull_template;

fn main() -> shape_extrap::Result<()> {
    let patient = skull_template(2562);
    // an instance that is off by a constant 2 mm
    let instance = patient.with_vertices(
        patient
            .vertices()
            .iter()
            .map(|p| p + Vector3::new(0.0, 0.0, 2.0))
            .collect(),
    )?;
    let known: Vec<usize> = (0..patient.vertex_count())
        .filter(|&i| patient.vertices()[i].x < 40.0)
        .collect();

    let depth = 8;
    let out = Extrapolator::new(&patient).feather(&patient, &known, &instance, depth)?;
    let part = out.partition.as_ref().expect("feathering records its band");
    println!("depth  vertices  mean offset from patient (mm)");
    for n in 0..=depth {
        let band: Vec<usize> = part
            .overlap()
            .into_iter()
            .filter(|&v| part.depth(v) == Some(n))
            .collect();
        let mean = band
            .iter()
            .map(|&v| (out.mesh.vertices()[v] - patient.vertices()[v]).norm())
            .sum::<f64>()
            / band.len().max(1) as f64;
        println!("{n:>5}  {:>8}  {mean:.3}", band.len());
    }
    Ok(())
}
