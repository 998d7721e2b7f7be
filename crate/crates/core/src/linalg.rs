//! Small dense linear algebra on row-major `d × d` slices (`d ≤ 3`).
//!
//! Hot paths (matrix-vector products, 1×1 and 2×2 solves) are written out by hand;
//! spectral quantities and general inverses go through `nalgebra`.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::math::sqrt;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    sqrt(dot(v, v))
}

/// Euclidean distance between two points.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Hilbert–Schmidt (Frobenius) norm of a matrix or tensor stored flat.
#[inline]
pub fn hs_norm(m: &[f64]) -> f64 {
    norm(m)
}

/// `out = m v`.
#[inline]
pub fn mat_vec(m: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..d {
        out[i] = dot(&m[i * d..(i + 1) * d], &v[..d]);
    }
}

/// `out = mᵀ v`.
#[inline]
pub fn mat_t_vec(m: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for k in 0..d {
        let mut s = 0.0;
        for i in 0..d {
            s += m[i * d + k] * v[i];
        }
        out[k] = s;
    }
}

/// `out = a b`.
pub fn mat_mul(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// `out = σ σᵀ`.
pub fn gram(sigma: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += sigma[i * d + k] * sigma[j * d + k];
            }
            out[i * d + j] = s;
        }
    }
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = alloc::vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn to_dmatrix(m: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, &m[..d * d])
}

/// Inverse of a `d × d` matrix, `None` when singular.
pub fn inverse(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let scale = m[..d * d].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let det = determinant(m, d);
    if det.abs() <= 1e-14 * libm::pow(scale, d as f64) {
        return None;
    }
    let inv = to_dmatrix(m, d).try_inverse()?;
    let mut out = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = inv[(i, j)];
        }
    }
    Some(out)
}

pub fn determinant(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => to_dmatrix(m, d).determinant(),
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eigen_range(m: &[f64], d: usize) -> (f64, f64) {
    match d {
        1 => (m[0], m[0]),
        2 => {
            let (a, b, c) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            let mean = 0.5 * (a + c);
            let r = sqrt(0.25 * (a - c) * (a - c) + b * b);
            (mean - r, mean + r)
        }
        _ => {
            let mut s = to_dmatrix(m, d);
            let st = s.transpose();
            s = (s + st) * 0.5;
            let eig = s.symmetric_eigenvalues();
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    }
}

/// Smallest and largest singular value.
pub fn singular_range(m: &[f64], d: usize) -> (f64, f64) {
    let mut g = alloc::vec![0.0; d * d];
    // singular values of m are square roots of the eigenvalues of mᵀm
    let mut mt = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            mt[i * d + j] = m[j * d + i];
        }
    }
    gram(&mt, d, &mut g);
    let (lo, hi) = sym_eigen_range(&g, d);
    (sqrt(lo.max(0.0)), sqrt(hi.max(0.0)))
}

/// Solves `m x = rhs` for `d ≤ 3`. Returns `false` if `m` is numerically singular.
pub fn solve_small(m: &[f64], d: usize, rhs: &[f64], out: &mut [f64]) -> bool {
    match d {
        1 => {
            if m[0] == 0.0 {
                return false;
            }
            out[0] = rhs[0] / m[0];
            true
        }
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            if det == 0.0 || !det.is_finite() {
                return false;
            }
            out[0] = (m[3] * rhs[0] - m[1] * rhs[1]) / det;
            out[1] = (m[0] * rhs[1] - m[2] * rhs[0]) / det;
            true
        }
        _ => match inverse(m, d) {
            Some(inv) => {
                mat_vec(&inv, d, rhs, out);
                true
            }
            None => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_range_of_footnote_gram_matrix() {
        let sigma = [1.0, -1.0, -1.0, 1.0];
        let mut a = [0.0; 4];
        gram(&sigma, 2, &mut a);
        let (lo, hi) = sym_eigen_range(&a, 2);
        assert!(lo.abs() < 1e-15);
        assert!((hi - 4.0).abs() < 1e-14);
        assert!(inverse(&a, 2).is_none());
    }

    #[test]
    fn three_by_three_paths_agree_with_closed_forms() {
        let m = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.5];
        let (lo, hi) = sym_eigen_range(&m, 3);
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        let inv = inverse(&m, 3).unwrap();
        assert!((inv[8] - 2.0).abs() < 1e-12);
        let mut x = [0.0; 3];
        assert!(solve_small(&m, 3, &[2.0, 3.0, 1.0], &mut x));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_rotation_are_one() {
        let c = libm::cos(0.3);
        let s = libm::sin(0.3);
        let (lo, hi) = singular_range(&[c, -s, s, c], 2);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
}
