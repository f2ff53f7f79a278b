use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{real_to_f64, Scalar};

/// Dense column-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Wraps column-major data. Panics if the length does not match.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "column-major buffer has wrong length");
        Self { nrows, ncols, data }
    }

    /// Builds from row-major nested rows; handy in tests.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Two distinct columns, mutably.
    pub fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a != b);
        let m = self.nrows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * m);
            (&mut lo[a * m..(a + 1) * m], &mut hi[..m])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * m);
            (&mut hi[..m], &mut lo[b * m..(b + 1) * m])
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            let (x, y) = self.two_cols_mut(a, b);
            x.swap_with_slice(y);
        }
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    /// Plain (non-conjugating) transpose.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.ncols, |i, j| self[(rows[i], j)])
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Self::from_col_major(self.nrows, cols.len(), data)
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Writes `block` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Mat<T>) {
        for j in 0..block.ncols {
            let dst = &mut self.col_mut(c0 + j)[r0..r0 + block.nrows];
            dst.copy_from_slice(block.col(j));
        }
    }

    pub fn add_block(&mut self, r0: usize, c0: usize, block: &Mat<T>) {
        for j in 0..block.ncols {
            let src = block.col(j);
            let dst = &mut self.col_mut(c0 + j)[r0..r0 + block.nrows];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn fill_block(&mut self, r0: usize, c0: usize, nr: usize, nc: usize, v: T) {
        for j in c0..c0 + nc {
            self.col_mut(j)[r0..r0 + nr].fill(v);
        }
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Mat<T>) -> Self {
        assert_eq!(self.ncols, other.ncols, "vstack column mismatch");
        let mut out = Self::zeros(self.nrows + other.nrows, self.ncols);
        out.set_block(0, 0, self);
        out.set_block(self.nrows, 0, other);
        out
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Mat<T>) -> Self {
        assert_eq!(self.nrows, other.nrows, "hstack row mismatch");
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Self::from_col_major(self.nrows, self.ncols + other.ncols, data)
    }

    pub fn scale_mut(&mut self, a: T) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn add_diag(&mut self, a: T) {
        for i in 0..self.nrows.min(self.ncols) {
            self[(i, i)] += a;
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self::from_col_major(self.nrows, self.ncols, data)
    }

    pub fn add(&self, other: &Mat<T>) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self::from_col_major(self.nrows, self.ncols, data)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data
            .iter()
            .map(|v| real_to_f64(v.abs_sqr()))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| real_to_f64(v.abs())).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        let mut out = Mat::zeros(self.nrows, other.ncols);
        gemm(T::one(), self, other, T::zero(), &mut out);
        out
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.gemv_acc(T::one(), x, &mut y);
        y
    }

    /// `y += alpha * self * x`.
    pub fn gemv_acc(&self, alpha: T, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "gemv: x length");
        assert_eq!(y.len(), self.nrows, "gemv: y length");
        for (j, &xj) in x.iter().enumerate() {
            let a = alpha * xj;
            if a == T::zero() {
                continue;
            }
            for (yi, &m) in y.iter_mut().zip(self.col(j)) {
                *yi += a * m;
            }
        }
    }

    /// `y = self^T * x` (plain transpose).
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows, "gemv_t: x length");
        (0..self.ncols)
            .map(|j| self.col(j).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Converts into a different scalar field through `f64` parts.
    pub fn cast<U: Scalar>(&self) -> Mat<U> {
        let data = self
            .data
            .iter()
            .map(|v| {
                let (re, im) = v.to_parts();
                U::from_parts(re, im)
            })
            .collect();
        Mat::from_col_major(self.nrows, self.ncols, data)
    }
}

/// `c <- alpha * a * b + beta * c`.
pub fn gemm<T: Scalar>(alpha: T, a: &Mat<T>, b: &Mat<T>, beta: T, c: &mut Mat<T>) {
    assert_eq!(a.ncols, b.nrows, "gemm inner dimension");
    assert_eq!(c.nrows, a.nrows, "gemm output rows");
    assert_eq!(c.ncols, b.ncols, "gemm output cols");
    let (m, k, n) = (a.nrows, a.ncols, b.ncols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.scale_mut(beta);
        return;
    }
    // SAFETY: all three buffers are column-major with the shapes checked above,
    // and `c` is uniquely borrowed.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            1,
            m as isize,
            b.data.as_ptr(),
            1,
            k as isize,
            beta,
            c.data.as_mut_ptr(),
            1,
            m as isize,
        );
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i + j * self.nrows]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i + j * self.nrows]
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows.min(8) {
            let row: Vec<String> = (0..self.ncols.min(8)).map(|j| format!("{:?}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Euclidean norm of a vector.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| real_to_f64(v.abs_sqr())).sum::<f64>().sqrt()
}

/// `||a - b|| / ||b||`, or the absolute difference when `b` vanishes.
pub fn rel_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| real_to_f64((x - y).abs_sqr()))
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb == 0.0 {
        diff
    } else {
        diff / nb
    }
}

/// Conjugated inner product `sum conj(a_i) b_i`.
pub fn dot_c<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}
