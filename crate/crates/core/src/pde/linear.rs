//! Sparse linear solvers: Thomas for tridiagonal systems, Jacobi-preconditioned BiCGSTAB
//! for general CSR matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds a matrix row by row; each row's entries may repeat columns (they are summed).
    pub fn from_rows(n: usize, mut row: impl FnMut(usize, &mut Vec<(usize, f64)>)) -> Self {
        let mut m = Csr { n, row_ptr: Vec::with_capacity(n + 1), cols: Vec::new(), vals: Vec::new() };
        m.row_ptr.push(0);
        let mut buf = Vec::new();
        for i in 0..n {
            buf.clear();
            row(i, &mut buf);
            buf.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(c, v) in buf.iter() {
                if last == Some(c) {
                    *m.vals.last_mut().expect("entry exists") += v;
                } else {
                    m.cols.push(c);
                    m.vals.push(v);
                    last = Some(c);
                }
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            out[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    /// Sub-, main and super-diagonal, if the matrix is tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let (mut lo, mut di, mut up) = (alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k];
                if c == i {
                    di[i] = self.vals[k];
                } else if c + 1 == i {
                    lo[i] = self.vals[k];
                } else if c == i + 1 {
                    up[i] = self.vals[k];
                } else {
                    return None;
                }
            }
        }
        Some((lo, di, up))
    }
}

/// Solves a tridiagonal system in place of `rhs`. `lo[0]` and `up[n−1]` are ignored.
pub fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
    let n = di.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = di[0];
    if beta == 0.0 {
        return Err(Error::Convergence("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = up[i - 1] / beta;
        beta = di[i] - lo[i] * scratch[i];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Convergence("zero pivot in tridiagonal solve".into()));
        }
        rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterativeStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned BiCGSTAB. `x` holds the initial guess and receives the solution.
pub fn bicgstab(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<IterativeStats> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(IterativeStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = alloc::vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = alloc::vec![0.0; n];
    let mut p = alloc::vec![0.0; n];
    let mut y = alloc::vec![0.0; n];
    let mut s = alloc::vec![0.0; n];
    let mut z = alloc::vec![0.0; n];
    let mut t = alloc::vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    if res <= tol {
        return Ok(IterativeStats { iterations: 0, relative_residual: res });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        a.mul(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            a.mul(x, &mut t);
            let rr: Vec<f64> = (0..n).map(|i| b[i] - t[i]).collect();
            return Ok(IterativeStats { iterations: it, relative_residual: norm(&rr) / bnorm });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        a.mul(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bnorm;
        if res <= tol {
            return Ok(IterativeStats { iterations: it, relative_residual: res });
        }
        if omega == 0.0 || !res.is_finite() {
            break;
        }
    }
    Err(Error::Convergence(alloc::format!(
        "BiCGSTAB stopped at relative residual {res:e} (tolerance {tol:e})"
    )))
}
