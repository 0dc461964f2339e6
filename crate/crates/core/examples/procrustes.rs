//! Similarity alignment of two homologous meshes.
//!
//! cargo run --release --example procrustes

use nalgebra::{Rotation3, Vector3};
use shape_extrap::align::{procrustes_align, SimilarityTransform};
use shape_extrap::harness::skull_template;

fn main() -> shape_extrap::Result<()> {
    let fixed = skull_template(2562);
    let truth = SimilarityTransform::new(
        1.3,
        *Rotation3::from_euler_angles(0.4, -0.2, 1.1).matrix(),
        Vector3::new(12.0, -40.0, 7.5),
    );
    let moving = truth.inverse().apply_mesh(&fixed);

    let all: Vec<usize> = (0..fixed.vertex_count()).collect();
    let est = procrustes_align(&moving, &fixed, &all)?;
    println!("true scale {:.6}, estimated {:.6}", truth.scale, est.scale);
    println!(
        "rotation error {:.2e}",
        (est.rotation - truth.rotation).amax()
    );

    let aligned = est.apply_mesh(&moving);
    let worst = aligned
        .vertices()
        .iter()
        .zip(fixed.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("max vertex residual after alignment {worst:.2e} mm");

    // a subset of vertices is enough when the shapes are exact copies
    let front: Vec<usize> = (0..fixed.vertex_count())
        .filter(|&i| fixed.vertices()[i].x > 0.0)
        .collect();
    let sub = procrustes_align(&moving, &fixed, &front)?;
    println!(
        "from {} anterior vertices: scale {:.6}",
        front.len(),
        sub.scale
    );
    Ok(())
}
