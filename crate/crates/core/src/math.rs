//! Float intrinsics routed through `libm` so results are identical with and without `std`.

pub(crate) use libm::{cos, exp, expm1, floor, log, pow, sin, sqrt, tan, trunc};

/// Whether `x` is a whole number.
#[inline]
pub(crate) fn is_integer(x: f64) -> bool {
    trunc(x) == x
}

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}

/// Number of equal steps of length at most `dt` covering `len` (tolerating rounding).
pub(crate) fn ceil_div(len: f64, dt: f64) -> usize {
    let n = len / dt;
    let r = libm::round(n);
    let steps = if (n - r).abs() <= 1e-9 * n.max(1.0) { r } else { libm::ceil(n) };
    (steps as usize).max(1)
}
