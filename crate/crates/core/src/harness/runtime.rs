//! Least-squares fits of stage runtime against overlap size.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrapolate::Method;
use crate::harness::experiment::TrialReport;
use crate::linalg::PivotedQr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    /// Ascending powers: `y = c0 + c1 x + c2 x^2 + ...`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl PolynomialFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

/// Least-squares polynomial of the given degree. Needs more distinct `xs` than `degree`.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolynomialFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("xs and ys differ in length".into()));
    }
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= degree {
        return Err(Error::InsufficientData(format!(
            "degree {degree} fit needs {} distinct sizes, got {}",
            degree + 1,
            distinct.len()
        )));
    }
    // Fit in x / xmax to keep the Vandermonde columns comparable.
    let xmax = distinct
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / xmax).powi(j as i32));
    let b = DMatrix::from_column_slice(ys.len(), 1, ys);
    let c = PivotedQr::new(a).solve(&b)?;
    let coefficients: Vec<f64> = (0..=degree)
        .map(|j| c[(j, 0)] / xmax.powi(j as i32))
        .collect();
    let fit = PolynomialFit {
        coefficients,
        r_squared: 0.0,
        residuals: Vec::new(),
    };
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| y - fit.eval(x)).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let scale: f64 = ys.iter().map(|y| y * y).sum();
    let r_squared = if ss_tot > 1e-24 * scale {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 * scale {
        1.0
    } else {
        0.0
    };
    Ok(PolynomialFit {
        r_squared,
        residuals,
        ..fit
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeBucket {
    pub overlap_count: usize,
    pub samples: usize,
    /// Seconds.
    pub mean_build: f64,
    pub mean_total: f64,
    /// `mean_build / mean_total`.
    pub build_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCurve {
    /// Build seconds against overlap vertex count, fitted to the per-bucket means.
    pub fit: PolynomialFit,
    pub buckets: Vec<RuntimeBucket>,
    pub largest_bucket_build_share: f64,
}

/// Fits P+TPS build time against overlap size. Failed trials are skipped.
pub fn fit_runtime_curve(reports: &[TrialReport], degree: usize) -> Result<RuntimeCurve> {
    let mut groups: BTreeMap<usize, Vec<&TrialReport>> = BTreeMap::new();
    for r in reports
        .iter()
        .filter(|r| r.method == Method::Tps && r.error.is_none())
    {
        groups.entry(r.overlap_count).or_default().push(r);
    }
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "runtime fit needs at least 3 distinct overlap sizes, got {}",
            groups.len()
        )));
    }
    let buckets: Vec<RuntimeBucket> = groups
        .iter()
        .map(|(&overlap_count, rs)| {
            let n = rs.len() as f64;
            let mean_build = rs.iter().map(|r| r.timings.tps_build).sum::<f64>() / n;
            let mean_total = rs
                .iter()
                .map(|r| r.timings.extrapolation_total())
                .sum::<f64>()
                / n;
            RuntimeBucket {
                overlap_count,
                samples: rs.len(),
                mean_build,
                mean_total,
                build_share: if mean_total > 0.0 {
                    mean_build / mean_total
                } else {
                    0.0
                },
            }
        })
        .collect();
    let xs: Vec<f64> = buckets.iter().map(|b| b.overlap_count as f64).collect();
    let ys: Vec<f64> = buckets.iter().map(|b| b.mean_build).collect();
    let fit = fit_polynomial(&xs, &ys, degree)?;
    Ok(RuntimeCurve {
        fit,
        largest_bucket_build_share: buckets.last().map(|b| b.build_share).unwrap_or(0.0),
        buckets,
    })
}
