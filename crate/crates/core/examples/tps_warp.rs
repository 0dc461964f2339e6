//! Fit a thin-plate spline to control point pairs and warp other points with it.
//!
//! cargo run --release --example tps_warp

use nalgebra::{Point3, Vector3};
use shape_extrap::tps::{build_tps, evaluate_tps, TpsKernel, TpsOptions};

fn main() -> shape_extrap::Result<()> {
    // controls on a 4x4x2 grid, displaced by a smooth bump
    let mut sources = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..2 {
                sources.push(Point3::new(
                    20.0 * i as f64,
                    20.0 * j as f64,
                    20.0 * k as f64,
                ));
            }
        }
    }
    let bump = |p: &Point3<f64>| {
        let r2 = (p - Point3::new(30.0, 30.0, 10.0)).norm_squared();
        Vector3::new(0.0, 0.0, 5.0 * (-r2 / 800.0).exp())
    };
    let targets: Vec<_> = sources.iter().map(|p| p + bump(p)).collect();

    for kernel in [TpsKernel::Linear, TpsKernel::ThinPlate] {
        let opts = TpsOptions {
            kernel,
            ..TpsOptions::default()
        };
        let m = build_tps(&sources, &targets, &opts)?;
        let worst = sources
            .iter()
            .zip(&targets)
            .map(|(s, t)| (m.evaluate_point(s) - t).norm())
            .fold(0.0, f64::max);
        let queries = [Point3::new(30.0, 30.0, 10.0), Point3::new(10.0, 50.0, 5.0)];
        let warped = evaluate_tps(&m, &queries);
        println!(
            "{kernel:?}: control residual {worst:.1e} mm, side conditions {:.1e}",
            m.side_condition_residual()
        );
        for (q, w) in queries.iter().zip(&warped) {
            println!(
                "  {:?} -> dz {:+.4} (bump {:+.4})",
                q.coords.as_slice(),
                w.z - q.z,
                bump(q).z
            );
        }
    }

    // smoothing: a ridge trades exact interpolation for a gentler warp
    let smooth = build_tps(
        &sources,
        &targets,
        &TpsOptions {
            regularization: 10.0,
            ..TpsOptions::default()
        },
    )?;
    let miss = (smooth.evaluate_point(&sources[10]) - targets[10]).norm();
    println!("regularized spline misses control 10 by {miss:.3} mm");
    Ok(())
}
