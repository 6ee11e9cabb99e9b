//! Real symmetric embedding of Hermitian matrices.
//!
//! A Hermitian `X` maps to the symmetric `[[Re X, -Im X], [Im X, Re X]]`.
//! Inner products double under the map: `<E(A), E(X)> = 2 Tr(A X)`, so
//! problem data carries a 1/2 compensation when lowered. The embedding is a
//! bijection onto the subspace of symmetric matrices commuting with the
//! symplectic form, and extraction averages the redundant halves.

use crate::{C64, CMat};
use nalgebra::DMatrix;

/// `[[Re A, -Im A], [Im A, Re A]]`, symmetric for Hermitian `A`.
pub fn embed_hermitian(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            out[(i, j)] = v.re;
            out[(n + i, n + j)] = v.re;
            out[(i, n + j)] = -v.im;
            out[(n + i, j)] = v.im;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`], averaging the two copies of each part.
pub fn extract_hermitian(y: &DMatrix<f64>) -> CMat {
    let n = y.nrows() / 2;
    debug_assert_eq!(y.nrows(), 2 * n);
    debug_assert_eq!(y.ncols(), 2 * n);
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(n + i, n + j)]);
        let im = 0.5 * (y[(n + i, j)] - y[(i, n + j)]);
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::{complex_gaussian_mat, hermitize, tr_prod};
    use crate::rng::StreamFactory;
    use approx::assert_relative_eq;

    fn random_hermitian(seed: u64, n: usize) -> CMat {
        let mut rng = StreamFactory::new(seed).stream("embed-test");
        hermitize(&complex_gaussian_mat(&mut rng, n, n))
    }

    #[test]
    fn identity_embeds_to_identity() {
        let x = CMat::identity(1, 1);
        let y = embed_hermitian(&x);
        assert_eq!(y, DMatrix::identity(2, 2));
        // Compensation: Tr(X) = 1 while Tr(E(X)) = 2.
        assert_relative_eq!(0.5 * y.trace(), x.trace().re);
    }

    #[test]
    fn round_trip_is_exact() {
        for n in [1, 2, 5] {
            let x = random_hermitian(n as u64, n);
            let back = extract_hermitian(&embed_hermitian(&x));
            assert!((&x - &back).norm() < 1e-14);
        }
    }

    #[test]
    fn trace_compensation() {
        let a = random_hermitian(10, 4);
        let x = random_hermitian(11, 4);
        let lhs = tr_prod(&a, &x);
        let rhs = 0.5 * (embed_hermitian(&a) * embed_hermitian(&x)).trace();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }
}
