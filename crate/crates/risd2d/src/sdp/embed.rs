//! Complex Hermitian <-> real symmetric embedding.
//!
//! A Hermitian `H = A + iB` (`A` symmetric, `B` antisymmetric) maps to
//!
//! ```text
//! T(H) = [ A  -B ]
//!        [ B   A ]
//! ```
//!
//! which is real symmetric, positive semidefinite exactly when `H` is, and
//! satisfies `Tr(T(A) T(B)) = 2 Tr(A B)` for Hermitian `A`, `B`. The inverse
//! map averages the two diagonal blocks and the two off-diagonal blocks,
//! which is a projection onto the embedded subspace that preserves traces
//! against embedded Hermitian matrices and preserves semidefiniteness.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real symmetric embedding `T(H)` of a Hermitian matrix.
pub fn embed_hermitian(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let re = h[(i, j)].re;
            let im = h[(i, j)].im;
            out[(i, j)] = re;
            out[(n + i, n + j)] = re;
            out[(i, n + j)] = -im;
            out[(n + i, j)] = im;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`] composed with the projection onto the
/// embedded subspace; the result is exactly Hermitian.
pub fn unembed_hermitian(y: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = y.nrows() / 2;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (y[(i, j)] + y[(n + i, n + j)]);
            let im = 0.5 * (y[(n + i, j)] - y[(i, n + j)]);
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    // Exact Hermitian symmetrization guards against rounding drift.
    let adj = out.adjoint();
    (out + adj).map(|c| c * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let adj = g.adjoint();
        (g + adj).map(|c| c * 0.5)
    }

    #[test]
    fn roundtrip_recovers_hermitian_matrix() {
        for n in [1, 2, 5, 9] {
            let h = random_hermitian(n, n as u64);
            let back = unembed_hermitian(&embed_hermitian(&h));
            assert_relative_eq!((&back - &h).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn embedded_trace_product_doubles_complex_trace() {
        let a = random_hermitian(6, 1);
        let b = random_hermitian(6, 2);
        let real = (embed_hermitian(&a) * embed_hermitian(&b)).trace();
        let complex = (&a * &b).trace();
        assert_relative_eq!(complex.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(real, 2.0 * complex.re, max_relative = 1e-12);
    }

    #[test]
    fn embedding_preserves_eigenvalue_sign() {
        // Gram matrix is PSD; its embedding must be PSD too.
        let g = random_hermitian(5, 3);
        let psd = &g * g.adjoint();
        let eigs = embed_hermitian(&psd).symmetric_eigen().eigenvalues;
        assert!(eigs.iter().all(|&e| e > -1e-12));
    }

    #[test]
    fn projection_part_of_unembed_preserves_embedded_traces() {
        // For arbitrary symmetric Y (not necessarily structured), trace
        // against an embedded Hermitian A must survive the projection:
        // Tr(T(A) Y) = 2 Tr(A unembed(Y)).
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = DMatrix::from_fn(8, 8, |_, _| rng.random::<f64>() - 0.5);
        let y = (&raw + raw.transpose()).map(|v| v * 0.5);
        let a = random_hermitian(4, 5);
        let lhs = (embed_hermitian(&a) * &y).trace();
        let rhs = (&a * unembed_hermitian(&y)).trace();
        assert_relative_eq!(lhs, 2.0 * rhs.re, max_relative = 1e-12);
        assert_relative_eq!(rhs.im, 0.0, epsilon = 1e-12);
    }
}
