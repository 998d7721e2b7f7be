//! Uniform tensor grids on `[−L, L]^d` and space-time grid functions with multilinear
//! interpolation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::math::{floor, sq, sqrt};

/// Uniform grid with `M` nodes per axis on `[−L, L]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub dim: usize,
    pub m: usize,
    pub half_width: f64,
}

impl SpatialGrid {
    pub fn new(dim: usize, m: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return arg_err("grid dimension must be 1 or 2");
        }
        if m < 3 || m % 2 == 0 {
            return arg_err("nodes per axis M must be odd and at least 3");
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return arg_err("box half-width L must be positive");
        }
        Ok(SpatialGrid { dim, m, half_width })
    }

    /// Mesh width `2L / (M − 1)`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.m - 1) as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    /// Multi-index of a node (last axis fastest).
    pub fn index(&self, node: usize, out: &mut [usize]) {
        let mut rem = node;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.m;
            rem /= self.m;
        }
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn point(&self, node: usize, out: &mut [f64]) {
        let mut idx = [0usize; 2];
        self.index(node, &mut idx);
        for a in 0..self.dim {
            out[a] = self.coord(idx[a]);
        }
    }

    /// Reflected index for homogeneous Neumann ghost nodes.
    #[inline]
    pub fn reflect(&self, i: isize) -> usize {
        let last = (self.m - 1) as isize;
        if i < 0 {
            (-i) as usize
        } else if i > last {
            (2 * last - i) as usize
        } else {
            i as usize
        }
    }

    /// Whether every coordinate satisfies `|x_i| ≤ L − h`.
    pub fn is_interior(&self, x: &[f64]) -> bool {
        let lim = self.half_width - self.h() * (1.0 - 1e-12);
        x[..self.dim].iter().all(|v| v.abs() <= lim)
    }
}

/// A spatial grid together with a uniform time partition of `[t_start, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub space: SpatialGrid,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl SpaceTimeGrid {
    pub fn new(dim: usize, m: usize, half_width: f64, t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        let space = SpatialGrid::new(dim, m, half_width)?;
        if steps == 0 {
            return arg_err("time step count must be ≥ 1");
        }
        if !(t_end > t_start && t_start >= 0.0 && t_end.is_finite()) {
            return arg_err("time interval must satisfy 0 ≤ s < t < ∞");
        }
        Ok(SpaceTimeGrid { space, t_start, t_end, steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Same spatial grid on a different interval with the same step size (at least one step).
    pub fn with_interval(&self, t_start: f64, t_end: f64) -> Result<Self> {
        let steps = crate::math::ceil_div(t_end - t_start, self.dt());
        Self::new(self.space.dim, self.space.m, self.space.half_width, t_start, t_end, steps)
    }
}

/// Values of a `comps`-component function at every node of every time slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub space: SpatialGrid,
    /// Increasing slice times.
    pub times: Vec<f64>,
    pub comps: usize,
    /// Layout `[slice][node][component]`.
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(space: SpatialGrid, times: Vec<f64>, comps: usize) -> Self {
        let n = times.len() * space.n_nodes() * comps;
        GridFunction { space, times, comps, values: alloc::vec![0.0; n] }
    }

    /// Samples `f(t, x, out)` at every node and slice.
    pub fn from_fn(space: SpatialGrid, times: Vec<f64>, comps: usize, f: impl Fn(f64, &[f64], &mut [f64])) -> Self {
        let mut g = Self::zeros(space, times, comps);
        let mut x = [0.0; 2];
        let n = space.n_nodes();
        for k in 0..g.times.len() {
            let t = g.times[k];
            for node in 0..n {
                space.point(node, &mut x);
                let o = (k * n + node) * comps;
                f(t, &x[..space.dim], &mut g.values[o..o + comps]);
            }
        }
        g
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let len = self.space.n_nodes() * self.comps;
        &self.values[k * len..(k + 1) * len]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.space.n_nodes() * self.comps;
        &mut self.values[k * len..(k + 1) * len]
    }

    pub fn at_node(&self, k: usize, node: usize) -> &[f64] {
        let o = (k * self.space.n_nodes() + node) * self.comps;
        &self.values[o..o + self.comps]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Slice bracket `(k, w)` with `t ≈ (1 − w)·times[k] + w·times[k+1]`, clamped.
    fn time_bracket(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, 0.0);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (k, w)
    }

    fn eval_slice(&self, k: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let sp = &self.space;
        let h = sp.h();
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..sp.dim {
            let xc = x[a].clamp(-sp.half_width, sp.half_width);
            let s = (xc + sp.half_width) / h;
            let i = (floor(s) as usize).min(sp.m - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let n = sp.n_nodes();
        for corner in 0..(1usize << sp.dim) {
            let mut w = scale;
            let mut idx = [0usize; 2];
            for a in 0..sp.dim {
                let up = (corner >> a) & 1 == 1;
                idx[a] = base[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let o = (k * n + sp.node(&idx)) * self.comps;
            for c in 0..self.comps {
                out[c] += w * self.values[o + c];
            }
        }
    }

    /// Multilinear interpolation in space, linear in time; points outside the box are
    /// clamped to it and times outside the slices use the nearest slice.
    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[..self.comps].iter_mut().for_each(|v| *v = 0.0);
        let (k, w) = self.time_bracket(t);
        if w == 0.0 {
            self.eval_slice(k, x, 1.0, out);
        } else {
            self.eval_slice(k, x, 1.0 - w, out);
            self.eval_slice(k + 1, x, w, out);
        }
    }

    pub fn eval_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.comps];
        self.eval(t, x, &mut out);
        out
    }

    /// Central-difference nodal gradient: a grid function with `comps·d` components
    /// (row-major `∂_a u^c` at `c·d + a`). Boundary nodes use Neumann ghost reflection.
    pub fn nodal_gradient(&self) -> GridFunction {
        let sp = self.space;
        let d = sp.dim;
        let h = sp.h();
        let n = sp.n_nodes();
        let mut g = GridFunction::zeros(sp, self.times.clone(), self.comps * d);
        let mut idx = [0usize; 2];
        for k in 0..self.n_slices() {
            for node in 0..n {
                sp.index(node, &mut idx);
                for a in 0..d {
                    let mut ip = idx;
                    let mut im = idx;
                    ip[a] = sp.reflect(idx[a] as isize + 1);
                    im[a] = sp.reflect(idx[a] as isize - 1);
                    let up = self.at_node(k, sp.node(&ip));
                    let dn = self.at_node(k, sp.node(&im));
                    for c in 0..self.comps {
                        let v = (up[c] - dn[c]) / (2.0 * h);
                        g.values[((k * n + node) * self.comps + c) * d + a] = v;
                    }
                }
            }
        }
        g
    }

    /// Largest Hilbert–Schmidt norm of the nodal central-difference Jacobian.
    pub fn sup_gradient(&self) -> f64 {
        let g = self.nodal_gradient();
        g.values
            .chunks(g.comps)
            .map(|c| sqrt(c.iter().map(|v| v * v).sum()))
            .fold(0.0, f64::max)
    }

    /// Largest Hilbert–Schmidt norm of the nodal Hessian tensor over all slices.
    pub fn sup_hessian(&self) -> f64 {
        (0..self.n_slices()).map(|k| self.sup_hessian_slice(k)).fold(0.0, f64::max)
    }

    /// Largest Hilbert–Schmidt norm of the nodal Hessian tensor in one slice (second central
    /// differences, mixed terms from the four diagonal neighbours, Neumann reflection).
    pub fn sup_hessian_slice(&self, k: usize) -> f64 {
        let sp = self.space;
        let d = sp.dim;
        let h = sp.h();
        let mut idx = [0usize; 2];
        let mut best = 0.0f64;
        let shifted = |idx: [usize; 2], a: usize, da: isize, b: usize, db: isize| -> &[f64] {
            let mut j = idx;
            j[a] = sp.reflect(j[a] as isize + da);
            j[b] = sp.reflect(j[b] as isize + db);
            self.at_node(k, sp.node(&j))
        };
        for node in 0..sp.n_nodes() {
            sp.index(node, &mut idx);
            let centre = self.at_node(k, node);
            let mut total = 0.0;
            for c in 0..self.comps {
                for a in 0..d {
                    for b in 0..d {
                        let v = if a == b {
                            let p = shifted(idx, a, 1, a, 0)[c];
                            let m = shifted(idx, a, -1, a, 0)[c];
                            (p - 2.0 * centre[c] + m) / (h * h)
                        } else {
                            let pp = shifted(idx, a, 1, b, 1)[c];
                            let pm = shifted(idx, a, 1, b, -1)[c];
                            let mp = shifted(idx, a, -1, b, 1)[c];
                            let mm = shifted(idx, a, -1, b, -1)[c];
                            (pp - pm - mp + mm) / (4.0 * h * h)
                        };
                        total += v * v;
                    }
                }
            }
            best = best.max(sqrt(total));
        }
        best
    }

    /// A Lipschitz constant (in space, for every time) of the interpolant: per cell and axis
    /// the largest edge difference quotient, combined in Hilbert–Schmidt fashion.
    pub fn interpolant_lipschitz_bound(&self) -> f64 {
        let sp = self.space;
        let d = sp.dim;
        let h = sp.h();
        let m = sp.m;
        let mut best = 0.0f64;
        let cells = (m - 1).pow(d as u32);
        let mut edge_max = [0.0f64; 2 * 3];
        for k in 0..self.n_slices() {
            for cell in 0..cells {
                let mut base = [0usize; 2];
                let mut rem = cell;
                for a in (0..d).rev() {
                    base[a] = rem % (m - 1);
                    rem /= m - 1;
                }
                edge_max.iter_mut().for_each(|v| *v = 0.0);
                for corner in 0..(1usize << d) {
                    let mut lo = [0usize; 2];
                    for a in 0..d {
                        lo[a] = base[a] + ((corner >> a) & 1);
                    }
                    for a in 0..d {
                        if (corner >> a) & 1 == 1 {
                            continue;
                        }
                        let mut hi = lo;
                        hi[a] += 1;
                        let u0 = self.at_node(k, sp.node(&lo));
                        let u1 = self.at_node(k, sp.node(&hi));
                        for c in 0..self.comps {
                            let q = ((u1[c] - u0[c]) / h).abs();
                            let e = &mut edge_max[c * d + a];
                            *e = e.max(q);
                        }
                    }
                }
                let s: f64 = edge_max[..self.comps * d].iter().map(|v| sq(*v)).sum();
                best = best.max(sqrt(s));
            }
        }
        best
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Little-endian binary layout: `d: u64, M: u64, L: f64, n_slices: u64`, the slice times,
    /// then all values in `[slice][node][component]` order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * (self.times.len() + self.values.len()));
        out.extend_from_slice(&(self.space.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.space.m as u64).to_le_bytes());
        out.extend_from_slice(&self.space.half_width.to_le_bytes());
        out.extend_from_slice(&(self.times.len() as u64).to_le_bytes());
        for t in &self.times {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Argument(alloc::format!("grid function bytes: {m}"));
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * i..8 * i + 8)
                .map(|s| s.try_into().expect("eight bytes"))
                .ok_or_else(|| bad("truncated header"))
        };
        let dim = u64::from_le_bytes(word(0)?) as usize;
        let m = u64::from_le_bytes(word(1)?) as usize;
        let l = f64::from_le_bytes(word(2)?);
        let n_slices = u64::from_le_bytes(word(3)?) as usize;
        let space = SpatialGrid::new(dim, m, l)?;
        if bytes.len() % 8 != 0 || n_slices == 0 {
            return Err(bad("length is not a whole number of words"));
        }
        let words = bytes.len() / 8;
        let n_values = words
            .checked_sub(4 + n_slices)
            .ok_or_else(|| bad("truncated time table"))?;
        let per_comp = n_slices * space.n_nodes();
        if n_values == 0 || n_values % per_comp != 0 {
            return Err(bad("value count does not match the header"));
        }
        let times: Vec<f64> = (0..n_slices).map(|i| word(4 + i).map(f64::from_le_bytes)).collect::<Result<_>>()?;
        let values: Vec<f64> = (0..n_values)
            .map(|i| word(4 + n_slices + i).map(f64::from_le_bytes))
            .collect::<Result<_>>()?;
        Ok(GridFunction { space, times, comps: n_values / per_comp, values })
    }
}

/// Gradient (row-major `comps × d`) and Hessian (`comps × d × d`) of the interpolant at
/// `(t, x)` by central differences with the mesh width.
pub fn gradient_and_hessian(u: &GridFunction, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let sp = u.space;
    let d = sp.dim;
    if x.len() != d {
        return arg_err("point has the wrong dimension");
    }
    if !sp.is_interior(x) {
        return Err(Error::Domain(alloc::format!(
            "x = {x:?} needs |x_i| ≤ L − h = {}",
            sp.half_width - sp.h()
        )));
    }
    let h = sp.h();
    let c = u.comps;
    let at = |shift: [f64; 2]| {
        let mut p = [0.0; 2];
        for a in 0..d {
            p[a] = x[a] + shift[a];
        }
        u.eval_vec(t, &p[..d])
    };
    let centre = at([0.0; 2]);
    let mut grad = alloc::vec![0.0; c * d];
    let mut hess = alloc::vec![0.0; c * d * d];
    for a in 0..d {
        let mut e = [0.0; 2];
        e[a] = h;
        let up = at(e);
        e[a] = -h;
        let dn = at(e);
        for k in 0..c {
            grad[k * d + a] = (up[k] - dn[k]) / (2.0 * h);
            hess[(k * d + a) * d + a] = (up[k] - 2.0 * centre[k] + dn[k]) / (h * h);
        }
        for b in a + 1..d {
            let mut s = [0.0; 2];
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                s[a] = sa * h;
                s[b] = sb * h;
                let v = at(s);
                for k in 0..c {
                    hess[(k * d + a) * d + b] += sa * sb * v[k] / (4.0 * h * h);
                }
            }
            for k in 0..c {
                hess[(k * d + b) * d + a] = hess[(k * d + a) * d + b];
            }
        }
    }
    Ok((grad, hess))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> SpatialGrid {
        SpatialGrid::new(2, 21, 2.0).unwrap()
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let sp = grid2();
        let g = GridFunction::from_fn(sp, alloc::vec![0.0, 1.0], 1, |t, x, o| {
            o[0] = libm::sin(x[0]) * libm::cos(3.0 * x[1]) + t
        });
        let mut p = [0.0; 2];
        for node in [0, 17, 220, 440] {
            sp.point(node, &mut p);
            let v = g.eval_vec(1.0, &p);
            assert!((v[0] - g.at_node(1, node)[0]).abs() < 1e-14);
        }
        // linear in time between slices
        let mid = g.eval_vec(0.5, &[0.0, 0.0]);
        assert!((mid[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn linear_function_is_differenced_exactly() {
        let sp = grid2();
        let g = GridFunction::from_fn(sp, alloc::vec![0.0], 1, |_, x, o| o[0] = x[0]);
        let (grad, hess) = gradient_and_hessian(&g, 0.0, &[0.33, -0.71]).unwrap();
        assert!((grad[0] - 1.0).abs() < 1e-13 && grad[1].abs() < 1e-13);
        assert!(hess.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn quadratic_has_identity_hessian() {
        let sp = grid2();
        let g = GridFunction::from_fn(sp, alloc::vec![0.0], 1, |_, x, o| o[0] = 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let (_, hess) = gradient_and_hessian(&g, 0.0, &[0.37, 0.12]).unwrap();
        assert!((hess[0] - 1.0).abs() < 1e-9 && (hess[3] - 1.0).abs() < 1e-9);
        assert!(hess[1].abs() < 1e-9 && hess[1] == hess[2]);
    }

    #[test]
    fn zero_function_and_domain_error() {
        let g = GridFunction::zeros(grid2(), alloc::vec![0.0], 2);
        let (grad, hess) = gradient_and_hessian(&g, 0.0, &[0.0, 0.0]).unwrap();
        assert!(grad.iter().chain(&hess).all(|v| *v == 0.0));
        assert!(matches!(gradient_and_hessian(&g, 0.0, &[1.95, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn lipschitz_bound_dominates_difference_quotients() {
        let sp = SpatialGrid::new(1, 33, 2.0).unwrap();
        let g = GridFunction::from_fn(sp, alloc::vec![0.0], 1, |_, x, o| o[0] = 0.3 * libm::sin(2.0 * x[0]));
        let lip = g.interpolant_lipschitz_bound();
        for k in 0..200 {
            let a = -2.0 + k as f64 * 0.02;
            let b = a + 0.013;
            let q = (g.eval_vec(0.0, &[a])[0] - g.eval_vec(0.0, &[b])[0]).abs() / 0.013;
            assert!(q <= lip + 1e-12);
        }
        assert!(lip <= 0.6 + 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let sp = SpatialGrid::new(1, 5, 1.0).unwrap();
        let g = GridFunction::from_fn(sp, alloc::vec![0.0, 0.5], 2, |t, x, o| {
            o[0] = x[0] + t;
            o[1] = -x[0];
        });
        let bytes = g.to_le_bytes();
        assert_eq!(bytes.len(), 8 * (4 + 2 + 2 * 5 * 2));
        assert_eq!(GridFunction::from_le_bytes(&bytes).unwrap(), g);
        assert!(GridFunction::from_le_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(1, 4, 1.0).is_err());
        assert!(SpatialGrid::new(3, 5, 1.0).is_err());
        assert!(SpaceTimeGrid::new(1, 5, 1.0, 0.0, 1.0, 0).is_err());
        let sp = SpatialGrid::new(1, 5, 1.0).unwrap();
        assert_eq!(sp.h(), 0.5);
        assert_eq!(sp.reflect(-1), 1);
        assert_eq!(sp.reflect(5), 3);
    }
}
