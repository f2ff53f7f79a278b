//! Column-pivoted Householder QR, truncated on the fly.

use crate::linalg::Mat;
use crate::scalar::{real_to_f64, Scalar};

/// Column norms are recomputed from scratch at this stride.
const RENORM_EVERY: usize = 32;

/// When to stop the pivoted factorization.
#[derive(Clone, Copy, Debug)]
pub enum Truncation {
    /// Stop at the first pivot with `|r_kk| < tol * |r_00|`.
    Relative(f64),
    /// Stop after exactly this many steps (capped by `min(m, n)`).
    Rank(usize),
}

/// Leading `k` rows of the R factor of `A Π = Q R`.
#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    /// `k x n` upper-trapezoidal block, columns in pivot order.
    pub r: Mat<T>,
    /// `perm[j]` is the original index of pivot-order column `j`.
    pub perm: Vec<usize>,
    pub rank: usize,
    /// Magnitude of the leading pivot `|r_00|`.
    pub lead: f64,
    /// Largest trailing column norm after truncation.
    pub tail: f64,
}

pub fn pivoted_qr<T: Scalar>(a: &Mat<T>, trunc: Truncation) -> PivotedQr<T> {
    let (m, n) = a.shape();
    let kmax = m.min(n);
    let limit = match trunc {
        Truncation::Rank(k) => k.min(kmax),
        Truncation::Relative(_) => kmax,
    };
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| sq_norm(w.col(j))).collect();
    let mut ref_norms = norms.clone();
    let mut v = vec![T::zero(); m];
    let mut lead = 0.0;
    let mut rank = 0;

    for k in 0..limit {
        if k > 0 && k % RENORM_EVERY == 0 {
            for j in k..n {
                norms[j] = sq_norm(&w.col(j)[k..]);
                ref_norms[j] = norms[j];
            }
        }
        // Pivot: largest remaining norm, lowest index on ties.
        let mut p = k;
        for j in k + 1..n {
            if norms[j] > norms[p] {
                p = j;
            }
        }
        if p != k {
            w.swap_cols(k, p);
            perm.swap(k, p);
            norms.swap(k, p);
            ref_norms.swap(k, p);
        }
        let pivot = norms[k].max(0.0).sqrt();
        if k == 0 {
            lead = pivot;
        }
        let stop = match trunc {
            Truncation::Relative(tol) => pivot == 0.0 || pivot < tol * lead,
            Truncation::Rank(_) => false,
        };
        if stop {
            break;
        }

        // Householder reflector zeroing w[k+1.., k].
        let col = w.col_mut(k);
        let xnorm = sq_norm(&col[k..]).sqrt();
        if xnorm == 0.0 {
            // Only reachable in fixed-rank mode on a rank-deficient input.
            rank = k + 1;
            norms[k] = 0.0;
            continue;
        }
        let x0 = col[k];
        let ax0 = real_to_f64(x0.abs());
        let phase = if ax0 == 0.0 {
            T::one()
        } else {
            x0.scale(crate::scalar::real_from_f64(1.0 / ax0))
        };
        let beta = -phase.scale(crate::scalar::real_from_f64(xnorm));
        v[k..].copy_from_slice(&col[k..]);
        v[k] -= beta;
        let vnorm2 = sq_norm(&v[k..]);
        let tau = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
        col[k] = beta;
        col[k + 1..].fill(T::zero());

        let tau_t = T::from_f64(tau);
        for j in k + 1..n {
            let cj = w.col_mut(j);
            let s: T = v[k..].iter().zip(&cj[k..]).map(|(&vi, &ai)| vi.conj() * ai).sum();
            let f = tau_t * s;
            if f != T::zero() {
                for (ai, &vi) in cj[k..].iter_mut().zip(&v[k..]) {
                    *ai -= f * vi;
                }
            }
            // Downdate the remaining norm; recompute when cancellation bites.
            let rkj = real_to_f64(cj[k].abs_sqr());
            norms[j] -= rkj;
            if norms[j] <= 1e-8 * ref_norms[j] {
                norms[j] = sq_norm(&cj[k + 1..]);
                ref_norms[j] = norms[j];
            }
        }
        rank = k + 1;
    }

    let tail = norms[rank..].iter().fold(0.0f64, |acc, &x| acc.max(x.max(0.0))).sqrt();
    let r = Mat::from_fn(rank, n, |i, j| if i <= j { w[(i, j)] } else { T::zero() });
    PivotedQr {
        r,
        perm,
        rank,
        lead,
        tail,
    }
}

fn sq_norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| real_to_f64(v.abs_sqr())).sum()
}

/// Solves `R11 X = R12` by back-substitution, where `R11` is the leading
/// `k x k` triangle of `r` and `R12` its trailing columns.
pub fn triangular_projection<T: Scalar>(r: &Mat<T>) -> Mat<T> {
    let k = r.nrows();
    let n = r.ncols();
    let mut x = r.submatrix(0, k, k, n - k);
    for c in 0..n - k {
        let col = x.col_mut(c);
        for i in (0..k).rev() {
            let s: T = (i + 1..k).map(|j| r[(i, j)] * col[j]).sum();
            col[i] = (col[i] - s) / r[(i, i)];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_example() {
        // Column norms sqrt(5) and sqrt(20): the second column pivots first.
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let qr = pivoted_qr(&a, Truncation::Relative(1e-12));
        assert_eq!(qr.rank, 1);
        assert_eq!(qr.perm[0], 1);
        assert!((qr.lead - 20f64.sqrt()).abs() < 1e-14);
        let t = triangular_projection(&qr.r);
        assert!((t[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fixed_rank_reconstructs_full_matrix() {
        let a = Mat::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 3.0 } else { 0.0 });
        let qr = pivoted_qr(&a, Truncation::Rank(4));
        assert_eq!(qr.rank, 4);
        // |R| columns carry the same norms as the permuted input columns.
        for j in 0..4 {
            let rn: f64 = qr.r.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            let an: f64 = a.col(qr.perm[j]).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((rn - an).abs() < 1e-12);
        }
    }
}
