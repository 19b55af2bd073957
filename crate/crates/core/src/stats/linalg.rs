//! Householder QR on column-major designs.

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
/// Columns whose scaled pivot falls below this are treated as linear
/// combinations of the columns before them.
pub const RANK_TOL: f64 = 1e-9;

/// Thin QR of an `n x p` design with unit-norm column scaling.
///
/// Reflectors are kept in place, so `Q^T b` can be applied to any number of
/// right-hand sides and nested fits on leading columns come for free.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    /// Column `j` holds the reflector for step `j` in rows `j..n` and the
    /// strict upper part of `R` in rows `0..j`.
    cols: Vec<Vec<f64>>,
    rdiag: Vec<f64>,
    /// Euclidean norm of each original column.
    pub scale: Vec<f64>,
}

impl Qr {
    /// Factorizes `columns` (each of length `n`). Zero columns keep scale 1.
    pub fn new(columns: &[Vec<f64>]) -> Qr {
        let p = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        let mut cols: Vec<Vec<f64>> = columns.to_vec();
        let mut scale = vec![1.0; p];
        for (c, s) in cols.iter_mut().zip(scale.iter_mut()) {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                *s = norm;
                c.iter_mut().for_each(|v| *v /= norm);
            }
        }
        let mut rdiag = vec![0.0; p];
        for j in 0..p.min(n) {
            let (head, tail) = cols.split_at_mut(j + 1);
            let v = &mut head[j][j..];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                rdiag[j] = 0.0;
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv = v.iter().map(|x| x * x).sum::<f64>();
            if vtv > 0.0 {
                for c in tail.iter_mut() {
                    let seg = &mut c[j..];
                    let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
                    let f = 2.0 * dot / vtv;
                    seg.iter_mut().zip(v.iter()).for_each(|(s, a)| *s -= f * a);
                }
            }
            rdiag[j] = alpha;
        }
        Qr { n, cols, rdiag, scale }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Diagonal of `R` for the scaled design.
    pub fn rdiag(&self) -> &[f64] {
        &self.rdiag
    }

    /// First column index whose pivot is numerically zero.
    pub fn first_dependent(&self) -> Option<usize> {
        self.rdiag.iter().position(|d| d.abs() < RANK_TOL)
    }

    /// `R[i][j]` of the scaled design, `i <= j`.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[i]
        } else if i < j {
            self.cols[j][i]
        } else {
            0.0
        }
    }

    /// Overwrites `b` with `Q^T b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        for j in 0..self.cols.len().min(self.n) {
            if self.rdiag[j] == 0.0 {
                continue;
            }
            let v = &self.cols[j][j..];
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            if vtv == 0.0 {
                continue;
            }
            let seg = &mut b[j..];
            let dot: f64 = v.iter().zip(seg.iter()).map(|(a, c)| a * c).sum();
            let f = 2.0 * dot / vtv;
            seg.iter_mut().zip(v.iter()).for_each(|(s, a)| *s -= f * a);
        }
    }

    /// Solves `R[..k, ..k] x = qtb[..k]` for the scaled coefficients.
    pub fn solve_leading(&self, qtb: &[f64], k: usize) -> Vec<f64> {
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = qtb[i];
            for j in i + 1..k {
                acc -= self.r(i, j) * x[j];
            }
            x[i] = acc / self.rdiag[i];
        }
        x
    }

    /// Diagonal of `(R^T R)^{-1}` restricted to the leading `k` columns.
    pub fn inv_gram_diag(&self, k: usize) -> Vec<f64> {
        // Rows of R^{-1}; R^{-1} is upper triangular.
        let mut rinv = vec![vec![0.0; k]; k];
        for j in 0..k {
            rinv[j][j] = 1.0 / self.rdiag[j];
            for i in (0..j).rev() {
                let mut acc = 0.0;
                for m in i + 1..=j {
                    acc += self.r(i, m) * rinv[m][j];
                }
                rinv[i][j] = -acc / self.rdiag[i];
            }
        }
        rinv.iter().map(|row| row.iter().map(|v| v * v).sum()).collect()
    }
}
