//! Householder QR with column pivoting, and a thin SVD built on top of it.
//!
//! [`PivotedQr`] factors `A P = Q R` for a dense `m x n` matrix with `m >= n`. Column norms are downdated after
//! every reflection and recomputed when cancellation makes the downdate unreliable. The numerical
//! rank is the number of diagonal entries of `R` above `rank_tolerance * |R_00|`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative threshold on `|R_kk| / |R_00|` below which columns count as dependent.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `R` in the upper triangle, Householder vectors (implicit leading 1) below it.
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    /// `perm[k]` is the original column stored at position `k`.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self::with_tolerance(a, DEFAULT_RANK_TOLERANCE)
    }

    pub fn with_tolerance(mut a: DMatrix<f64>, rank_tolerance: f64) -> Self {
        let (m, n) = a.shape();
        assert!(m >= n, "pivoted QR needs at least as many rows as columns");
        let steps = n;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; steps];
        let mut norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
        let mut reference = norms.clone();
        let eps_sqrt = f64::EPSILON.sqrt();

        for k in 0..steps {
            let pivot = (k..n)
                .max_by(|&x, &y| norms[x].total_cmp(&norms[y]))
                .unwrap();
            if pivot != k {
                a.swap_columns(k, pivot);
                perm.swap(k, pivot);
                norms.swap(k, pivot);
                reference.swap(k, pivot);
            }

            let data = a.as_mut_slice();
            let (head, tail) = data.split_at_mut((k + 1) * m);
            let col = &mut head[k * m..];
            tau[k] = make_reflector(&mut col[k..]);
            let v = &col[k..];

            for (offset, other) in tail.chunks_exact_mut(m).enumerate() {
                let j = k + 1 + offset;
                apply_reflector(v, tau[k], &mut other[k..]);
                if norms[j] != 0.0 {
                    let ratio = other[k].abs() / norms[j];
                    let shrink = (1.0 - ratio * ratio).max(0.0);
                    let drift = shrink * (norms[j] / reference[j]).powi(2);
                    if drift <= eps_sqrt {
                        norms[j] = other[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                        reference[j] = norms[j];
                    } else {
                        norms[j] *= shrink.sqrt();
                    }
                }
            }
        }

        let lead = if n > 0 { a[(0, 0)].abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| lead > 0.0 && a[(k, k)].abs() > rank_tolerance * lead)
            .count();
        Self {
            qr: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols()
    }

    /// Diagonal of `R`, in pivoted order.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.qr.ncols()).map(|k| self.qr[(k, k)]).collect()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Least-squares solution of `A X = B` for every column of `B`; fails when `A` is rank
    /// deficient.
    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.rank < self.qr.ncols() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                size: self.qr.ncols(),
            });
        }
        Ok(self.solve_basic(b))
    }

    /// Basic solution: components past the numerical rank are set to zero.
    pub fn solve_basic(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let (m, n) = self.qr.shape();
        assert_eq!(b.nrows(), m, "right-hand side has the wrong number of rows");
        let mut rhs = b.clone();
        let qr = self.qr.as_slice();
        for k in 0..n {
            let v = &qr[k * m + k..(k + 1) * m];
            for mut col in rhs.column_iter_mut() {
                apply_reflector(v, self.tau[k], &mut col.as_mut_slice()[k..]);
            }
        }
        let r = self.rank;
        let mut x = DMatrix::zeros(n, b.ncols());
        for c in 0..b.ncols() {
            let mut y = vec![0.0; r];
            for i in (0..r).rev() {
                let mut s = rhs[(i, c)];
                for j in i + 1..r {
                    s -= self.qr[(i, j)] * y[j];
                }
                y[i] = s / self.qr[(i, i)];
            }
            for i in 0..r {
                x[(self.perm[i], c)] = y[i];
            }
        }
        x
    }
}

/// Turns `x` into `beta e_1` in place, storing the Householder vector (leading 1 implied) in
/// `x[1..]`; returns `tau`.
fn make_reflector(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail_norm = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if tail_norm == 0.0 {
        return 0.0;
    }
    let beta = -alpha.signum() * alpha.hypot(tail_norm);
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    (beta - alpha) / beta
}

/// `y <- (I - tau v v^T) y`, where `v[0]` is implicitly 1.
fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let mut w = y[0];
    for (vi, yi) in v[1..].iter().zip(&y[1..]) {
        w += vi * yi;
    }
    w *= tau;
    y[0] -= w;
    for (vi, yi) in v[1..].iter().zip(&mut y[1..]) {
        *yi -= w * vi;
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T` of an `m x n` matrix with `m >= n`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `m x n`, orthonormal columns (columns for zero singular values are zero).
    pub u: DMatrix<f64>,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// `n x n`, orthogonal.
    pub v: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Thin SVD by Householder QR followed by one-sided Jacobi on the triangular factor.
///
/// Small singular values keep high relative accuracy, which the mode cutoff relies on.
pub fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "thin SVD needs at least as many rows as columns");
    let qr = PivotedQr::with_tolerance(a.clone(), 0.0);
    // columns of w are the columns of R P^T; Jacobi rotations act on them from the right
    let mut w = DMatrix::zeros(n, n);
    for (k, &orig) in qr.perm.iter().enumerate() {
        for i in 0..=k.min(n - 1) {
            w[(i, orig)] = qr.qr[(i, k)];
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * (n as f64);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut ur = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        vs.set_column(k, &v.column(j));
        if s > 0.0 {
            for i in 0..n {
                ur[(i, k)] = w[(i, j)] / s;
            }
        }
    }
    // U = Q [U_R; 0]
    let packed = qr.qr.as_slice();
    for mut col in ur.column_iter_mut() {
        let col = col.as_mut_slice();
        for step in (0..n).rev() {
            let v = &packed[step * m + step..(step + 1) * m];
            apply_reflector(v, qr.tau[step], &mut col[step..]);
        }
    }
    ThinSvd {
        u: ur,
        singular_values,
        v: vs,
    }
}

fn rotate_columns(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..a.nrows() {
        let x = a[(i, p)];
        let y = a[(i, q)];
        a[(i, p)] = c * x - s * y;
        a[(i, q)] = s * x + c * y;
    }
}
