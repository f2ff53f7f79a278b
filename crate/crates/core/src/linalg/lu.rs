//! Dense LU factorization with partial pivoting.

use crate::linalg::Mat;
use crate::scalar::{real_to_f64, Scalar};

const PANEL: usize = 48;

/// `P A = L U` with unit-lower `L`, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Mat<T>,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    anorm1: f64,
}

/// Zero pivot hit at the given elimination step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroPivot(pub usize);

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Result<Self, ZeroPivot> {
        Self::factor_owned(a.clone())
    }

    pub fn factor_owned(mut a: Mat<T>) -> Result<Self, ZeroPivot> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let anorm1 = (0..n)
            .map(|j| a.col(j).iter().map(|v| real_to_f64(v.abs())).sum::<f64>())
            .fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();

        let mut k0 = 0;
        while k0 < n {
            let nb = PANEL.min(n - k0);
            // Unblocked factorization of the panel columns k0..k0+nb.
            for j in k0..k0 + nb {
                let (p, pmax) = a.col(j)[j..]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i + j, real_to_f64(v.abs())))
                    .fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if pmax == 0.0 || !pmax.is_finite() {
                    return Err(ZeroPivot(j));
                }
                if p != j {
                    perm.swap(p, j);
                    for c in 0..n {
                        a.as_mut_slice().swap(p + c * n, j + c * n);
                    }
                }
                let inv = T::one() / a[(j, j)];
                for v in &mut a.col_mut(j)[j + 1..] {
                    *v *= inv;
                }
                for c in j + 1..k0 + nb {
                    let f = a[(j, c)];
                    if f == T::zero() {
                        continue;
                    }
                    let (lcol, ccol) = a.two_cols_mut(j, c);
                    for i in j + 1..n {
                        ccol[i] -= lcol[i] * f;
                    }
                }
            }
            let k1 = k0 + nb;
            if k1 < n {
                // U12 <- L11^{-1} A12
                for c in k1..n {
                    for j in k0..k1 {
                        let f = a[(j, c)];
                        if f == T::zero() {
                            continue;
                        }
                        let (lcol, ccol) = a.two_cols_mut(j, c);
                        for i in j + 1..k1 {
                            ccol[i] -= lcol[i] * f;
                        }
                    }
                }
                // A22 <- A22 - L21 U12
                let m = n - k1;
                let ptr = a.as_mut_slice().as_mut_ptr();
                // SAFETY: L21 (rows k1.., cols k0..k1), U12 (rows k0..k1, cols k1..)
                // and A22 (rows k1.., cols k1..) are disjoint regions of `a`.
                unsafe {
                    T::gemm_raw(
                        m,
                        nb,
                        m,
                        -T::one(),
                        ptr.add(k1 + k0 * n),
                        1,
                        n as isize,
                        ptr.add(k0 + k1 * n),
                        1,
                        n as isize,
                        T::one(),
                        ptr.add(k1 + k1 * n),
                        1,
                        n as isize,
                    );
                }
            }
            k0 = k1;
        }
        Ok(Self { lu: a, perm, anorm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Packed factors (unit-lower `L` below the diagonal, `U` on and above).
    pub fn packed(&self) -> &Mat<T> {
        &self.lu
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Reassembles from packed parts, as read back from a container.
    pub fn from_parts(lu: Mat<T>, perm: Vec<usize>, anorm1: f64) -> Self {
        Self { lu, perm, anorm1 }
    }

    pub fn anorm1(&self) -> f64 {
        self.anorm1
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != T::zero() {
                for (xi, &l) in x[j + 1..].iter_mut().zip(&self.lu.col(j)[j + 1..]) {
                    *xi -= l * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj != T::zero() {
                for (xi, &u) in x[..j].iter_mut().zip(&self.lu.col(j)[..j]) {
                    *xi -= u * xj;
                }
            }
        }
        b.copy_from_slice(&x);
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Mat<T>) -> Mat<T> {
        let mut x = b.clone();
        for j in 0..x.ncols() {
            self.solve_in_place(x.col_mut(j));
        }
        x
    }

    /// Solves `A^T x = b` (plain transpose), or `A^H x = b` when `conj` is set.
    pub fn solve_transpose_in_place(&self, b: &mut [T], conj: bool) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let cj = |v: T| if conj { v.conj() } else { v };
        // U^T w = b
        for j in 0..n {
            let s: T = self.lu.col(j)[..j].iter().zip(&b[..j]).map(|(&u, &w)| cj(u) * w).sum();
            b[j] = (b[j] - s) / cj(self.lu[(j, j)]);
        }
        // L^T v = w
        for j in (0..n).rev() {
            let s: T = self.lu.col(j)[j + 1..]
                .iter()
                .zip(&b[j + 1..])
                .map(|(&l, &w)| cj(l) * w)
                .sum();
            b[j] -= s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = b[i];
        }
        b.copy_from_slice(&x);
    }

    /// `A^{-1}` explicitly.
    pub fn inverse(&self) -> Mat<T> {
        self.solve_mat(&Mat::identity(self.dim()))
    }

    pub fn det(&self) -> T {
        let n = self.dim();
        let mut d = T::one();
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        // Sign of the permutation.
        let mut seen = vec![false; n];
        let mut odd = false;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                odd = !odd;
            }
        }
        if odd {
            -d
        } else {
            d
        }
    }

    /// Reciprocal 1-norm condition estimate (Hager–Higham).
    pub fn rcond(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        if self.anorm1 == 0.0 {
            return 0.0;
        }
        let mut x = vec![T::from_f64(1.0 / n as f64); n];
        let mut est = 0.0;
        for iter in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            let new_est: f64 = y.iter().map(|v| real_to_f64(v.abs())).sum();
            if iter > 0 && new_est <= est {
                break;
            }
            est = new_est;
            let mut z: Vec<T> = y
                .iter()
                .map(|&v| {
                    let a = real_to_f64(v.abs());
                    if a == 0.0 {
                        T::one()
                    } else {
                        v.scale(crate::scalar::real_from_f64(1.0 / a))
                    }
                })
                .collect();
            self.solve_transpose_in_place(&mut z, true);
            let (jmax, zmax) = z
                .iter()
                .map(|v| real_to_f64(v.abs()))
                .enumerate()
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(&a, &b)| real_to_f64((a.conj() * b).re())).sum();
            if iter > 0 && zmax <= ztx {
                break;
            }
            x = vec![T::zero(); n];
            x[jmax] = T::one();
        }
        if est == 0.0 || !est.is_finite() {
            0.0
        } else {
            1.0 / (self.anorm1 * est)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn random_mat(n: usize, seed: u64) -> Mat<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn solves_blocked_sizes() {
        for &n in &[1usize, 3, 47, 48, 49, 130] {
            let a = random_mat(n, n as u64);
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let b = a.matvec(&x);
            let lu = Lu::factor(&a).unwrap();
            let got = lu.solve(&b);
            let err = crate::linalg::rel_diff(&got, &x);
            assert!(err < 1e-10, "n={n} err={err}");
            let mut bt = a.matvec_t(&x);
            lu.solve_transpose_in_place(&mut bt, false);
            assert!(crate::linalg::rel_diff(&bt, &x) < 1e-10);
        }
    }

    #[test]
    fn complex_adjoint_solve() {
        let n = 20;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = Mat::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let b = a.adjoint().matvec(&x);
        let lu = Lu::factor(&a).unwrap();
        let mut y = b.clone();
        lu.solve_transpose_in_place(&mut y, true);
        assert!(crate::linalg::rel_diff(&y, &x) < 1e-10);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(Lu::factor(&a).unwrap_err(), ZeroPivot(1));
    }

    #[test]
    fn rcond_of_diagonal() {
        let a = Mat::diag(&[1.0, 1e-3, 10.0]);
        let rc = Lu::factor(&a).unwrap().rcond();
        assert!((rc - 1e-4).abs() < 1e-12, "{rc}");
        let lu = Lu::factor(&Mat::from_rows(&[vec![0.0, 2.0], vec![3.0, 0.0]])).unwrap();
        assert!((lu.det() + 6.0).abs() < 1e-14);
    }
}
