//! Dense linear algebra kernels shared by every module.

mod lu;
mod mat;
mod qr;

pub use lu::{Lu, ZeroPivot};
pub use mat::{dot_c, gemm, norm2, rel_diff, Mat};
pub use qr::{pivoted_qr, triangular_projection, PivotedQr, Truncation};

use crate::scalar::Scalar;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense matrix with independent standard normal entries.
pub fn gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, nrows: usize, ncols: usize) -> Mat<T> {
    Mat::from_fn(nrows, ncols, |_, _| T::from_f64(rng.sample::<f64, _>(StandardNormal)))
}

/// Power-iteration estimate of the spectral norm of an operator given by its
/// action and adjoint action.
pub fn spectral_norm_estimate<T: Scalar>(
    n: usize,
    apply: impl Fn(&[T]) -> Vec<T>,
    apply_adj: impl Fn(&[T]) -> Vec<T>,
    iters: usize,
    seed: u64,
) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<T> = (0..n).map(|_| T::from_f64(rng.sample::<f64, _>(StandardNormal))).collect();
    let mut est = 0.0;
    for _ in 0..iters {
        let nx = norm2(&x);
        if nx == 0.0 {
            return 0.0;
        }
        let inv = crate::scalar::real_from_f64(1.0 / nx);
        x.iter_mut().for_each(|v| *v = v.scale(inv));
        let y = apply(&x);
        est = norm2(&y);
        x = apply_adj(&y);
    }
    est
}
