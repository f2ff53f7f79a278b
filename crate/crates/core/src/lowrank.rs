//! Interpolative decompositions.
//!
//! A column ID writes `A ≈ A[:, skel] * P` where `P` contains the identity on
//! the skeleton columns. Two constructions are provided: a deterministic one
//! from a truncated column-pivoted QR of `A`, and a randomized one that runs
//! the same pivoted QR on a Gaussian sketch `Ω A`. Row IDs are column IDs of
//! the transpose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::linalg::{gaussian, norm2, pivoted_qr, triangular_projection, Mat, PivotedQr, Truncation};
use crate::scalar::{real_to_f64, Scalar};

/// Number of random probe vectors in the a-posteriori check.
const PROBES: usize = 5;
/// The randomized result is rejected when its probed error exceeds this
/// multiple of `eps * ||A||`.
const PROBE_SLACK: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct InterpDecomp<T> {
    /// Skeleton indices, in pivot order.
    pub skel: Vec<usize>,
    /// `k x n` projection; its `skel` columns form the identity.
    pub proj: Mat<T>,
    /// Estimated `||A - A[:, skel] P|| / ||A||`.
    pub achieved_error: f64,
}

impl<T: Scalar> InterpDecomp<T> {
    pub fn rank(&self) -> usize {
        self.skel.len()
    }

    pub fn ncols(&self) -> usize {
        self.proj.ncols()
    }

    pub fn max_proj(&self) -> f64 {
        self.proj.max_abs()
    }

    /// `A[:, skel] * P` for the matrix the ID was computed from.
    pub fn reconstruct(&self, a: &Mat<T>) -> Mat<T> {
        a.select_cols(&self.skel).matmul(&self.proj)
    }

    /// `P^T * A[skel, :]` when this is a row ID of `a`.
    pub fn reconstruct_rows(&self, a: &Mat<T>) -> Mat<T> {
        self.proj.transpose().matmul(&a.select_rows(&self.skel))
    }

    fn from_qr(qr: &PivotedQr<T>, n: usize) -> Self {
        let k = qr.rank;
        let t = triangular_projection(&qr.r);
        let mut proj = Mat::zeros(k, n);
        for j in 0..k {
            proj[(j, qr.perm[j])] = T::one();
        }
        for j in 0..n - k {
            let dst = qr.perm[k + j];
            proj.col_mut(dst).copy_from_slice(t.col(j));
        }
        let achieved_error = if qr.lead == 0.0 { 0.0 } else { qr.tail / qr.lead };
        let id = Self {
            skel: qr.perm[..k].to_vec(),
            proj,
            achieved_error,
        };
        let pmax = id.max_proj();
        if pmax > 2.0 {
            log::warn!("interpolation matrix entry {pmax:.3} exceeds 2 (rank {k}, {n} columns)");
        }
        id
    }
}

/// How an ID is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdMethod {
    Deterministic,
    Randomized { oversampling: usize, seed: u64 },
}

impl Default for IdMethod {
    fn default() -> Self {
        IdMethod::Randomized {
            oversampling: 10,
            seed: 0,
        }
    }
}

/// Precision or rank target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdTarget {
    Precision(f64),
    Rank(usize),
}

fn check_input<T: Scalar>(a: &Mat<T>, eps: Option<f64>) -> Result<()> {
    if let Some(eps) = eps {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("ID precision must lie in (0, 1), got {eps}"));
        }
    }
    if !a.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    Ok(())
}

/// Column ID to relative precision `eps` via pivoted QR of `a`.
pub fn id_fixed_precision<T: Scalar>(a: &Mat<T>, eps: f64) -> Result<InterpDecomp<T>> {
    check_input(a, Some(eps))?;
    Ok(deterministic(a, Truncation::Relative(eps)))
}

/// Column ID of exactly rank `min(k, m, n)`.
pub fn id_fixed_rank<T: Scalar>(a: &Mat<T>, k: usize) -> Result<InterpDecomp<T>> {
    check_input(a, None)?;
    Ok(deterministic(a, Truncation::Rank(k)))
}

/// Randomized column ID to relative precision `eps`.
pub fn id_randomized<T: Scalar>(a: &Mat<T>, eps: f64, oversampling: usize, seed: u64) -> Result<InterpDecomp<T>> {
    id_with(a, IdTarget::Precision(eps), IdMethod::Randomized { oversampling, seed })
}

/// Row ID: `A ≈ P^T A[skel, :]`, `skel` indexing rows.
pub fn id_rows<T: Scalar>(a: &Mat<T>, eps: f64) -> Result<InterpDecomp<T>> {
    id_fixed_precision(&a.transpose(), eps)
}

/// Column ID with an explicit target and method.
pub fn id_with<T: Scalar>(a: &Mat<T>, target: IdTarget, method: IdMethod) -> Result<InterpDecomp<T>> {
    let eps = match target {
        IdTarget::Precision(e) => Some(e),
        IdTarget::Rank(_) => None,
    };
    check_input(a, eps)?;
    let trunc = match target {
        IdTarget::Precision(e) => Truncation::Relative(e),
        IdTarget::Rank(k) => Truncation::Rank(k),
    };
    match method {
        IdMethod::Deterministic => Ok(deterministic(a, trunc)),
        IdMethod::Randomized { oversampling, seed } => {
            if oversampling < 4 {
                return invalid(format!("oversampling must be at least 4, got {oversampling}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(randomized(a, trunc, oversampling, &mut rng))
        }
    }
}

fn deterministic<T: Scalar>(a: &Mat<T>, trunc: Truncation) -> InterpDecomp<T> {
    let qr = pivoted_qr(a, trunc);
    InterpDecomp::from_qr(&qr, a.ncols())
}

fn randomized<T: Scalar>(a: &Mat<T>, trunc: Truncation, p: usize, rng: &mut ChaCha8Rng) -> InterpDecomp<T> {
    let (m, n) = a.shape();
    let mut l = match trunc {
        Truncation::Relative(_) => 2 * p,
        Truncation::Rank(k) => k.min(n) + p,
    };
    loop {
        // Sketching cannot beat factoring `a` itself once it has this few rows.
        if l >= m || l >= n {
            return deterministic(a, trunc);
        }
        let omega: Mat<T> = gaussian(rng, l, m);
        let y = omega.matmul(a);
        let qr = pivoted_qr(&y, trunc);
        if let Truncation::Relative(_) = trunc {
            if qr.rank + p > l {
                l *= 2;
                continue;
            }
        }
        let mut id = InterpDecomp::from_qr(&qr, n);
        if let Truncation::Relative(eps) = trunc {
            match probe_error(a, &id, rng) {
                Some((err, anorm)) if err <= PROBE_SLACK * eps * anorm => {
                    id.achieved_error = if anorm == 0.0 { 0.0 } else { err / anorm };
                }
                _ => return deterministic(a, trunc),
            }
        }
        return id;
    }
}

/// Largest probed `||(A - BP) g|| / ||g||` and `||A g|| / ||g||`.
fn probe_error<T: Scalar>(a: &Mat<T>, id: &InterpDecomp<T>, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let g: Mat<T> = gaussian(rng, a.ncols(), PROBES);
    let ag = a.matmul(&g);
    let bpg = a.select_cols(&id.skel).matmul(&id.proj.matmul(&g));
    let mut err: f64 = 0.0;
    let mut anorm: f64 = 0.0;
    for j in 0..PROBES {
        let gn = norm2(g.col(j));
        if gn == 0.0 {
            continue;
        }
        let d: f64 = ag
            .col(j)
            .iter()
            .zip(bpg.col(j))
            .map(|(&x, &y)| real_to_f64((x - y).abs_sqr()))
            .sum::<f64>()
            .sqrt();
        err = err.max(d / gn);
        anorm = anorm.max(norm2(ag.col(j)) / gn);
    }
    if err.is_finite() {
        Some((err, anorm))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Mat<f64> = gaussian(&mut rng, m, k);
        let y: Mat<f64> = gaussian(&mut rng, k, n);
        x.matmul(&y)
    }

    fn assert_identity_on_skel(id: &InterpDecomp<f64>) {
        for (r, &s) in id.skel.iter().enumerate() {
            for i in 0..id.rank() {
                let want = if i == r { 1.0 } else { 0.0 };
                assert_eq!(id.proj[(i, s)], want);
            }
        }
    }

    #[test]
    fn identity_keeps_everything() {
        let id = id_fixed_precision(&Mat::<f64>::identity(3), 1e-9).unwrap();
        assert_eq!(id.rank(), 3);
        let mut skel = id.skel.clone();
        skel.sort_unstable();
        assert_eq!(skel, vec![0, 1, 2]);
        assert_eq!(id.proj, Mat::identity(3));
    }

    #[test]
    fn rank_one_two_by_two() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let id = id_fixed_precision(&a, 1e-12).unwrap();
        assert_eq!(id.skel, vec![1]);
        assert_eq!(id.proj.shape(), (1, 2));
        assert!((id.proj[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(id.proj[(0, 1)], 1.0);

        let rid = id_rows(&a, 1e-12).unwrap();
        assert_eq!(rid.rank(), 1);
        assert!(rid.reconstruct_rows(&a).sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn rank_three_product() {
        let a = low_rank(40, 60, 3, 11);
        for id in [
            id_fixed_precision(&a, 1e-10).unwrap(),
            id_randomized(&a, 1e-10, 10, 0).unwrap(),
        ] {
            assert_eq!(id.rank(), 3);
            let err = id.reconstruct(&a).sub(&a).norm_fro() / a.norm_fro();
            assert!(err <= 1e-8, "{err}");
            assert_identity_on_skel(&id);
        }
        let rid = id_rows(&a, 1e-10).unwrap();
        assert_eq!(rid.rank(), 3);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let a = Mat::<f64>::zeros(10, 10);
        let id = id_randomized(&a, 1e-6, 10, 0).unwrap();
        assert_eq!(id.rank(), 0);
        assert!(id.skel.is_empty());
        assert_eq!(id.proj.shape(), (0, 10));
        assert_eq!(id_fixed_precision(&a, 1e-6).unwrap().rank(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = Mat::from_rows(&[vec![1.0, f64::NAN]]);
        assert!(id_fixed_precision(&a, 1e-3).is_err());
        assert!(id_fixed_precision(&Mat::<f64>::identity(2), 1.5).is_err());
        assert!(id_randomized(&Mat::<f64>::identity(2), 1e-3, 2, 0).is_err());
    }

    #[test]
    fn randomized_matches_deterministic_error() {
        // Geometrically decaying spectrum.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 120;
        let u: Mat<f64> = gaussian(&mut rng, 150, n);
        let mut v: Mat<f64> = gaussian(&mut rng, n, n);
        for i in 0..n {
            let s = 0.7f64.powi(i as i32);
            for j in 0..n {
                v[(i, j)] *= s;
            }
        }
        let a = u.matmul(&v);
        let det = id_fixed_precision(&a, 1e-9).unwrap();
        let ran = id_randomized(&a, 1e-9, 10, 5).unwrap();
        let e_det = det.reconstruct(&a).sub(&a).norm_fro();
        let e_ran = ran.reconstruct(&a).sub(&a).norm_fro();
        assert!(e_ran <= 10.0 * e_det && e_det <= 10.0 * e_ran, "{e_det} vs {e_ran}");
        let _ = rng.random::<u8>();
    }

    #[test]
    fn complex_id() {
        use num_complex::Complex64;
        let a = Mat::from_fn(30, 20, |i, j| {
            let z = Complex64::new(i as f64 * 0.1, 1.0);
            let w = Complex64::new(1.0, j as f64 * 0.2);
            (z * w).exp() / (z + w + Complex64::new(5.0, 0.0))
        });
        let id = id_randomized(&a, 1e-10, 8, 1).unwrap();
        let err = id.reconstruct(&a).sub(&a).norm_fro() / a.norm_fro();
        assert!(err < 1e-8, "{err}");
    }
}
