//! Three-dimensional thin-plate-spline displacement fields.
//!
//! The field is `f(x) = x + A x + b + sum_i w_i U(|x - c_i|)` with the side conditions
//! `sum_i w_i = 0` and `sum_i w_i c_i^T = 0`. The weights solve the `(N + 4) x (N + 4)` system
//! `[[K + lambda I, P], [P^T, 0]]` with `K_ij = U(|c_i - c_j|)` and rows of `P` equal to
//! `(1, x, y, z)`. One system per output coordinate; all three share the matrix.
//!
//! Internally the control points are centred and scaled to unit RMS radius before assembly,
//! which keeps the system well conditioned for millimetre-scale inputs. Accessors report the
//! affine part and weights in the caller's frame.

use nalgebra::{DMatrix, Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PivotedQr;

pub const MIN_CONTROL_POINTS: usize = 5;

/// Radial basis function of the spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TpsKernel {
    /// `U(r) = r`, the biharmonic kernel in three dimensions.
    #[default]
    Linear,
    /// `U(r) = r^2 log r`, the planar thin-plate kernel.
    ThinPlate,
}

impl TpsKernel {
    #[inline]
    pub fn eval(self, r: f64) -> f64 {
        match self {
            TpsKernel::Linear => r,
            TpsKernel::ThinPlate => {
                if r == 0.0 {
                    0.0
                } else {
                    r * r * r.ln()
                }
            }
        }
    }

    /// Power of the length scale by which the kernel grows, up to affine terms.
    fn degree(self) -> i32 {
        match self {
            TpsKernel::Linear => 1,
            TpsKernel::ThinPlate => 2,
        }
    }
}

/// How the three coordinate systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStrategy {
    /// Factor once, back-substitute three right-hand sides.
    #[default]
    SharedFactorization,
    /// Factor the same matrix three times, one coordinate per worker.
    IndependentSystems,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpsOptions {
    pub kernel: TpsKernel,
    /// Ridge added to the kernel block, in kernel units of the input frame.
    pub regularization: f64,
    pub strategy: SolveStrategy,
    /// Accept the basic (rank-truncated) least-squares solution of a singular system instead
    /// of failing.
    pub allow_rank_deficient: bool,
}

impl Default for TpsOptions {
    fn default() -> Self {
        Self {
            kernel: TpsKernel::Linear,
            regularization: 0.0,
            strategy: SolveStrategy::SharedFactorization,
            allow_rank_deficient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpsModel {
    kernel: TpsKernel,
    control_points: Vec<Point3<f64>>,
    center: Vector3<f64>,
    scale: f64,
    /// Control points in the normalized frame.
    normalized: Vec<Vector3<f64>>,
    /// Non-affine weights for the normalized kernel.
    weights: Vec<Vector3<f64>>,
    /// Displacement affine part acting on normalized inputs.
    linear: Matrix3<f64>,
    offset: Vector3<f64>,
    rank: usize,
}

/// Fits the spline mapping each source point exactly onto its target (when unregularized).
pub fn build_tps(
    sources: &[Point3<f64>],
    targets: &[Point3<f64>],
    options: &TpsOptions,
) -> Result<TpsModel> {
    let n = sources.len();
    if targets.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{n} sources but {} targets",
            targets.len()
        )));
    }
    if n < MIN_CONTROL_POINTS {
        return Err(Error::TooFewControlPoints {
            needed: MIN_CONTROL_POINTS,
            got: n,
        });
    }
    if !(options.regularization >= 0.0) {
        return Err(Error::InvalidArgument(
            "regularization must be non-negative".into(),
        ));
    }
    check_duplicates(sources)?;

    let center = crate::mesh::centroid(sources).coords;
    let scale = (sources
        .iter()
        .map(|p| (p.coords - center).norm_squared())
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let normalized: Vec<Vector3<f64>> = sources
        .iter()
        .map(|p| (p.coords - center) / scale)
        .collect();
    let ridge = options.regularization / scale.powi(options.kernel.degree());

    let size = n + 4;
    let mut system = DMatrix::zeros(size, size);
    for i in 0..n {
        for j in 0..i {
            let k = options.kernel.eval((normalized[i] - normalized[j]).norm());
            system[(i, j)] = k;
            system[(j, i)] = k;
        }
        system[(i, i)] = ridge;
        let row = [1.0, normalized[i].x, normalized[i].y, normalized[i].z];
        for (c, v) in row.into_iter().enumerate() {
            system[(i, n + c)] = v;
            system[(n + c, i)] = v;
        }
    }
    let mut rhs = DMatrix::zeros(size, 3);
    for i in 0..n {
        let d = targets[i] - sources[i];
        for c in 0..3 {
            rhs[(i, c)] = d[c];
        }
    }

    let (solution, rank) = match options.strategy {
        SolveStrategy::SharedFactorization => {
            let qr = PivotedQr::new(system);
            (solve(&qr, &rhs, options.allow_rank_deficient)?, qr.rank())
        }
        SolveStrategy::IndependentSystems => {
            let columns: Vec<(DMatrix<f64>, usize)> = (0..3)
                .into_par_iter()
                .map(|c| {
                    let qr = PivotedQr::new(system.clone());
                    let b = rhs.columns(c, 1).into_owned();
                    Ok((solve(&qr, &b, options.allow_rank_deficient)?, qr.rank()))
                })
                .collect::<Result<_>>()?;
            let mut x = DMatrix::zeros(size, 3);
            for (c, (col, _)) in columns.iter().enumerate() {
                x.set_column(c, &col.column(0));
            }
            (x, columns[0].1)
        }
    };

    let weights = (0..n)
        .map(|i| Vector3::new(solution[(i, 0)], solution[(i, 1)], solution[(i, 2)]))
        .collect();
    let offset = Vector3::new(solution[(n, 0)], solution[(n, 1)], solution[(n, 2)]);
    // column c of the linear part multiplies input coordinate c
    let linear = Matrix3::from_fn(|r, c| solution[(n + 1 + c, r)]);

    Ok(TpsModel {
        kernel: options.kernel,
        control_points: sources.to_vec(),
        center,
        scale,
        normalized,
        weights,
        linear,
        offset,
        rank,
    })
}

fn solve(qr: &PivotedQr, rhs: &DMatrix<f64>, allow_rank_deficient: bool) -> Result<DMatrix<f64>> {
    if allow_rank_deficient {
        Ok(qr.solve_basic(rhs))
    } else {
        qr.solve(rhs)
    }
}

fn check_duplicates(points: &[Point3<f64>]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let key = |i: &usize| [points[*i].x, points[*i].y, points[*i].z];
    order.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka[0]
            .total_cmp(&kb[0])
            .then(ka[1].total_cmp(&kb[1]))
            .then(ka[2].total_cmp(&kb[2]))
    });
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicateControlPoint { first, second });
        }
    }
    Ok(())
}

impl TpsModel {
    pub fn kernel(&self) -> TpsKernel {
        self.kernel
    }

    pub fn control_points(&self) -> &[Point3<f64>] {
        &self.control_points
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    /// Numerical rank of the factored system (`N + 4` when non-singular).
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn evaluate_point(&self, x: &Point3<f64>) -> Point3<f64> {
        let xn = (x.coords - self.center) / self.scale;
        let mut d = self.offset + self.linear * xn;
        for (c, w) in self.normalized.iter().zip(&self.weights) {
            d += w * self.kernel.eval((xn - c).norm());
        }
        x + d
    }

    /// Non-affine weights in the input frame.
    pub fn weights(&self) -> Vec<Vector3<f64>> {
        let f = self.scale.powi(self.kernel.degree());
        self.weights.iter().map(|w| w / f).collect()
    }

    /// Linear part `M` of the affine component `M x + t` of `f` in the input frame
    /// (includes the identity).
    pub fn affine_matrix(&self) -> Matrix3<f64> {
        Matrix3::identity() + self.linear / self.scale
    }

    /// Translation `t` of the affine component `M x + t` of `f` in the input frame.
    pub fn affine_translation(&self) -> Vector3<f64> {
        let mut t = self.offset - self.linear * self.center / self.scale;
        if self.kernel == TpsKernel::ThinPlate {
            // Rescaling r^2 log r leaves sum_i w_i |x - c_i|^2 behind, which the side
            // conditions reduce to the constant sum_i w_i |c_i|^2.
            let s2 = self.scale * self.scale;
            let constant: Vector3<f64> = self
                .weights
                .iter()
                .zip(&self.control_points)
                .map(|(w, c)| w * c.coords.norm_squared())
                .sum();
            t -= constant * (self.scale.ln() / s2);
        }
        t
    }

    /// Largest entry of `sum_i w_i` and `sum_i w_i c_i^T`, in the input frame.
    pub fn side_condition_residual(&self) -> f64 {
        let w = self.weights();
        let sum: Vector3<f64> = w.iter().sum();
        let moment: Matrix3<f64> = w
            .iter()
            .zip(&self.control_points)
            .map(|(w, c)| w * c.coords.transpose())
            .sum();
        sum.amax().max(moment.amax())
    }
}

/// Applies the spline to every query; output order matches input order and each point is
/// summed in a fixed order, so results do not depend on the thread count.
pub fn evaluate_tps(model: &TpsModel, queries: &[Point3<f64>]) -> Vec<Point3<f64>> {
    queries
        .par_iter()
        .map(|q| model.evaluate_point(q))
        .collect()
}
