//! Multilevel recursive skeletonization.
//!
//! A compressed matrix is stored in telescoping form
//!
//! ```text
//! A ≈ D1 + L1 (D2 + L2 ( … (Dλ + Lλ S Rλ) … ) R2) R1
//! ```
//!
//! where level `l` is block diagonal over the level-`l` tree nodes. Level 1
//! is the finest. Row and column skeletons of the level-`l` blocks become the
//! index sets of the level-`l+1` blocks.

mod compress;
mod operator;
mod proxy;

pub use compress::{compress, CompressOptions, Mode};
pub use operator::{KernelMatrix, KernelOperator};
pub(crate) use operator::{mean_weight, proxy_sources_for, proxy_targets_for};
pub use proxy::{proxy_points, ProxyConfig};

use crate::error::{invalid, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// One diagonal block of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    /// Tree node id.
    pub node: usize,
    /// Active row indices (original numbering), in level order.
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Row skeletons, a subset of `rows`, in the order used by the next level.
    pub row_skel: Vec<usize>,
    pub col_skel: Vec<usize>,
    /// Diagonal block `A(rows, cols)` with the children's diagonal blocks
    /// removed. Empty (0 x 0) when identically zero.
    pub d: Mat<T>,
    /// `rows x k` row interpolation matrix.
    pub l: Mat<T>,
    /// `k x cols` column interpolation matrix.
    pub r: Mat<T>,
    /// No compression at this level: `L = R = I` and every index survives.
    pub pass: bool,
}

impl<T: Scalar> Block<T> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn k_rows(&self) -> usize {
        self.row_skel.len()
    }

    pub fn k_cols(&self) -> usize {
        self.col_skel.len()
    }

    /// `L` as a dense matrix, identity for pass-through blocks.
    pub fn l_dense(&self) -> Mat<T> {
        if self.pass {
            Mat::identity(self.n_rows())
        } else {
            self.l.clone()
        }
    }

    pub fn r_dense(&self) -> Mat<T> {
        if self.pass {
            Mat::identity(self.n_cols())
        } else {
            self.r.clone()
        }
    }

    pub fn d_dense(&self) -> Mat<T> {
        if self.d.is_empty() {
            Mat::zeros(self.n_rows(), self.n_cols())
        } else {
            self.d.clone()
        }
    }

    fn entries(&self) -> usize {
        self.d.as_slice().len() + self.l.as_slice().len() + self.r.as_slice().len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level<T> {
    pub blocks: Vec<Block<T>>,
}

impl<T: Scalar> Level<T> {
    pub fn total_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.n_rows()).sum()
    }

    pub fn total_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.n_cols()).sum()
    }

    /// Total row skeletons `K_r` at this level.
    pub fn k_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.k_rows()).sum()
    }

    pub fn k_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.k_cols()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedMatrix<T> {
    pub(crate) n: usize,
    pub(crate) eps: f64,
    /// Original indices in level-1 order (tree order).
    pub(crate) order: Vec<usize>,
    pub(crate) levels: Vec<Level<T>>,
    pub(crate) top_rows: Vec<usize>,
    pub(crate) top_cols: Vec<usize>,
    pub(crate) s: Mat<T>,
}

impl<T: Scalar> CompressedMatrix<T> {
    /// Assembles from parts, checking that consecutive levels conform.
    pub fn from_parts(
        n: usize,
        eps: f64,
        order: Vec<usize>,
        levels: Vec<Level<T>>,
        top_rows: Vec<usize>,
        top_cols: Vec<usize>,
        s: Mat<T>,
    ) -> Result<Self> {
        let cm = Self {
            n,
            eps,
            order,
            levels,
            top_rows,
            top_cols,
            s,
        };
        cm.check()?;
        Ok(cm)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of compression levels λ.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Level<T> {
        &self.levels[l - 1]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Top-level skeleton matrix.
    pub fn s(&self) -> &Mat<T> {
        &self.s
    }

    pub fn top_rows(&self) -> &[usize] {
        &self.top_rows
    }

    pub fn top_cols(&self) -> &[usize] {
        &self.top_cols
    }

    /// Row skeleton count of the top level.
    pub fn k_rows(&self) -> usize {
        self.top_rows.len()
    }

    pub fn k_cols(&self) -> usize {
        self.top_cols.len()
    }

    /// Number of stored scalars.
    pub fn storage_entries(&self) -> usize {
        self.levels.iter().flat_map(|l| &l.blocks).map(|b| b.entries()).sum::<usize>() + self.s.as_slice().len()
    }

    /// Validates dimensions and the level conformance rule: the skeletons of
    /// level `l` are exactly the indices of level `l + 1`, in order.
    pub fn check(&self) -> Result<()> {
        let mut expect_rows = self.order.clone();
        let mut expect_cols = self.order.clone();
        if self.order.len() != self.n {
            return invalid("order length differs from matrix size");
        }
        for (li, level) in self.levels.iter().enumerate() {
            let rows: Vec<usize> = level.blocks.iter().flat_map(|b| b.rows.iter().copied()).collect();
            let cols: Vec<usize> = level.blocks.iter().flat_map(|b| b.cols.iter().copied()).collect();
            if rows != expect_rows || cols != expect_cols {
                return invalid(format!("level {} indices do not match the previous skeletons", li + 1));
            }
            for (bi, b) in level.blocks.iter().enumerate() {
                let (nr, nc, kr, kc) = (b.n_rows(), b.n_cols(), b.k_rows(), b.k_cols());
                let d_ok = b.d.is_empty() || b.d.shape() == (nr, nc);
                let lr_ok = if b.pass {
                    b.row_skel == b.rows && b.col_skel == b.cols
                } else {
                    b.l.shape() == (nr, kr) && b.r.shape() == (kc, nc)
                };
                if !d_ok || !lr_ok || kr > nr || kc > nc {
                    return invalid(format!("level {} block {bi} has inconsistent shapes", li + 1));
                }
            }
            expect_rows = level.blocks.iter().flat_map(|b| b.row_skel.iter().copied()).collect();
            expect_cols = level.blocks.iter().flat_map(|b| b.col_skel.iter().copied()).collect();
        }
        if self.top_rows != expect_rows || self.top_cols != expect_cols {
            return invalid("top-level indices do not match the last skeletons");
        }
        if self.s.shape() != (self.top_rows.len(), self.top_cols.len()) {
            return invalid("top-level matrix has the wrong shape");
        }
        Ok(())
    }

    /// Fast matvec `Ã x` through the telescoping form.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return invalid(format!("vector length {} differs from matrix size {}", x.len(), self.n));
        }
        let mut v: Vec<T> = self.order.iter().map(|&i| x[i]).collect();
        let mut diag_parts = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let mut yd = vec![T::zero(); level.total_rows()];
            let mut next = Vec::with_capacity(level.k_cols());
            let (mut ic, mut ir) = (0, 0);
            for b in &level.blocks {
                let xb = &v[ic..ic + b.n_cols()];
                if !b.d.is_empty() {
                    b.d.gemv_acc(T::one(), xb, &mut yd[ir..ir + b.n_rows()]);
                }
                if b.pass {
                    next.extend_from_slice(xb);
                } else {
                    next.extend(b.r.matvec(xb));
                }
                ic += b.n_cols();
                ir += b.n_rows();
            }
            diag_parts.push(yd);
            v = next;
        }
        let mut w = self.s.matvec(&v);
        for (level, mut u) in self.levels.iter().zip(diag_parts).rev() {
            let (mut ik, mut ir) = (0, 0);
            for b in &level.blocks {
                let wb = &w[ik..ik + b.k_rows()];
                let ub = &mut u[ir..ir + b.n_rows()];
                if b.pass {
                    for (a, &c) in ub.iter_mut().zip(wb) {
                        *a += c;
                    }
                } else {
                    b.l.gemv_acc(T::one(), wb, ub);
                }
                ik += b.k_rows();
                ir += b.n_rows();
            }
            w = u;
        }
        let mut out = vec![T::zero(); self.n];
        for (t, &i) in self.order.iter().enumerate() {
            out[i] = w[t];
        }
        Ok(out)
    }

    /// Expands the representation into a dense matrix (for testing).
    pub fn to_dense(&self) -> Mat<T> {
        let mut cols = Vec::with_capacity(self.n);
        let mut e = vec![T::zero(); self.n];
        for j in 0..self.n {
            e[j] = T::one();
            cols.extend(self.apply(&e).expect("length matches"));
            e[j] = T::zero();
        }
        Mat::from_col_major(self.n, self.n, cols)
    }
}

/// Sets the diagonal sub-blocks given by consecutive `(rows, cols)` sizes to zero.
pub(crate) fn zero_diagonal_blocks<T: Scalar>(m: &mut Mat<T>, sizes: impl IntoIterator<Item = (usize, usize)>) {
    let (mut r0, mut c0) = (0, 0);
    for (nr, nc) in sizes {
        m.fill_block(r0, c0, nr, nc, T::zero());
        r0 += nr;
        c0 += nc;
    }
}
