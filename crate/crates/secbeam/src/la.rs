//! Small dense linear-algebra helpers shared across modules.

use crate::{C64, CMat, CVec};
use rand::Rng;
use rand_distr::StandardNormal;

/// Real part of `Tr(a b)`. Exact trace for Hermitian `a`, `b`.
pub(crate) fn tr_prod(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// `(a + a^H) / 2`, guarding against numerical drift off the Hermitian set.
pub(crate) fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// `v v^H` outer product.
pub(crate) fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Quadratic form `v^H a v` (real for Hermitian `a`).
pub(crate) fn quad_form(a: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// Circularly symmetric complex Gaussian scalar with unit variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Vector of i.i.d. unit-variance circular complex Gaussians.
pub(crate) fn complex_gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Matrix of i.i.d. unit-variance circular complex Gaussians.
pub(crate) fn complex_gaussian_mat<R: Rng + ?Sized>(rng: &mut R, nrows: usize, ncols: usize) -> CMat {
    CMat::from_fn(nrows, ncols, |_, _| complex_gaussian(rng))
}
