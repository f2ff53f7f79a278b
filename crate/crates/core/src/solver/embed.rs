use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::scalar::Scalar;
use crate::skel::{Block, CompressedMatrix};

/// Largest embedding the dense oracle will factor.
pub const DENSE_EMBEDDING_LIMIT: usize = 12000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    D,
    L,
    R,
    /// `-I` coupling of an auxiliary variable to its own equation.
    Coupling,
    S,
}

/// A labeled run of entries in the triplet arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingBlock {
    pub kind: BlockKind,
    /// Level the block belongs to (`λ + 1` for S).
    pub level: usize,
    pub range: std::ops::Range<usize>,
}

/// The square sparse system
///
/// ```text
/// [ D1 L1                  ] [x ]   [b]
/// [ R1    -I               ] [y1]   [0]
/// [   -I     D2 L2         ] [z1] = [0]
/// [          R2    -I      ] [y2]   [0]
/// [            -I  S ...   ] [z2]   [0]
/// ```
///
/// Variables are ordered `[x, y1, z1, …, yλ, zλ]` with `x` in the original
/// numbering; equations are ordered `[b, z-eq1, y-eq1, …]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEmbedding<T> {
    pub(crate) n: usize,
    pub(crate) dim: usize,
    pub(crate) rows: Vec<usize>,
    pub(crate) cols: Vec<usize>,
    pub(crate) vals: Vec<T>,
    pub(crate) blocks: Vec<EmbeddingBlock>,
}

struct Builder<T> {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    blocks: Vec<EmbeddingBlock>,
}

impl<T: Scalar> Builder<T> {
    fn push(&mut self, i: usize, j: usize, v: T) {
        if v != T::zero() {
            self.rows.push(i);
            self.cols.push(j);
            self.vals.push(v);
        }
    }

    fn begin(&mut self) -> usize {
        self.vals.len()
    }

    fn end(&mut self, kind: BlockKind, level: usize, start: usize) {
        if self.vals.len() > start {
            self.blocks.push(EmbeddingBlock {
                kind,
                level,
                range: start..self.vals.len(),
            });
        }
    }

    /// Dense block `m` at rows `ri(a)`, columns `cj(b)`.
    fn dense(&mut self, m: &Mat<T>, ri: impl Fn(usize) -> usize, cj: impl Fn(usize) -> usize) {
        for b in 0..m.ncols() {
            let col = m.col(b);
            for (a, &v) in col.iter().enumerate() {
                self.push(ri(a), cj(b), v);
            }
        }
    }
}

/// Builds the multilevel sparse embedding of `cm`.
pub fn assemble_embedding<T: Scalar>(cm: &CompressedMatrix<T>) -> SparseEmbedding<T> {
    let n = cm.size();
    let order = cm.order();
    let nl = cm.num_levels();
    // Offsets of y_l / z_l columns and of z-eq_l / y-eq_l rows.
    let mut y_off = Vec::with_capacity(nl);
    let mut z_off = Vec::with_capacity(nl);
    let mut zeq_off = Vec::with_capacity(nl);
    let mut yeq_off = Vec::with_capacity(nl);
    let (mut c, mut r) = (n, n);
    for level in cm.levels() {
        let (kr, kc) = (level.k_rows(), level.k_cols());
        y_off.push(c);
        z_off.push(c + kr);
        c += kr + kc;
        zeq_off.push(r);
        yeq_off.push(r + kc);
        r += kc + kr;
    }
    debug_assert_eq!(r, c);
    let mut bld = Builder {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
        blocks: Vec::new(),
    };
    let one = T::one();

    for (li, level) in cm.levels().iter().enumerate() {
        let l = li + 1;
        // Row/column maps into the global system for this level's D, L, R.
        // Rows of D_l and L_l: b-rows (l = 1) or y-eq_{l-1}.
        // Columns of D_l and R_l: x (l = 1) or z_{l-1}.
        let row_of = |t: usize| if l == 1 { order[t] } else { yeq_off[li - 1] + t };
        let col_of = |t: usize| if l == 1 { order[t] } else { z_off[li - 1] + t };

        let start = bld.begin();
        let (mut ir, mut ic) = (0, 0);
        for b in &level.blocks {
            if !b.d.is_empty() {
                bld.dense(&b.d, |a| row_of(ir + a), |j| col_of(ic + j));
            }
            ir += b.n_rows();
            ic += b.n_cols();
        }
        bld.end(BlockKind::D, l, start);

        // L_l: rows as D, columns y_l.
        let start = bld.begin();
        let (mut ir, mut ik) = (0, 0);
        for b in &level.blocks {
            if b.pass {
                for a in 0..b.n_rows() {
                    bld.push(row_of(ir + a), y_off[li] + ik + a, one);
                }
            } else {
                bld.dense(&b.l, |a| row_of(ir + a), |j| y_off[li] + ik + j);
            }
            ir += b.n_rows();
            ik += b.k_rows();
        }
        bld.end(BlockKind::L, l, start);

        // R_l: rows z-eq_l, columns as D.
        let start = bld.begin();
        let (mut ic, mut ik) = (0, 0);
        for b in &level.blocks {
            if b.pass {
                for j in 0..b.n_cols() {
                    bld.push(zeq_off[li] + ik + j, col_of(ic + j), one);
                }
            } else {
                bld.dense(&b.r, |a| zeq_off[li] + ik + a, |j| col_of(ic + j));
            }
            ic += b.n_cols();
            ik += b.k_cols();
        }
        bld.end(BlockKind::R, l, start);

        // -z_l in z-eq_l, -y_l in y-eq_l.
        let start = bld.begin();
        for t in 0..level.k_cols() {
            bld.push(zeq_off[li] + t, z_off[li] + t, -one);
        }
        for t in 0..level.k_rows() {
            bld.push(yeq_off[li] + t, y_off[li] + t, -one);
        }
        bld.end(BlockKind::Coupling, l, start);
    }

    let start = bld.begin();
    if nl == 0 {
        bld.dense(cm.s(), |a| order[a], |j| order[j]);
    } else {
        bld.dense(cm.s(), |a| yeq_off[nl - 1] + a, |j| z_off[nl - 1] + j);
    }
    bld.end(BlockKind::S, nl + 1, start);

    SparseEmbedding {
        n,
        dim: r,
        rows: bld.rows,
        cols: bld.cols,
        vals: bld.vals,
        blocks: bld.blocks,
    }
}

impl<T: Scalar> SparseEmbedding<T> {
    /// Builds an embedding from raw triplets (no block labels).
    pub fn from_triplets(n: usize, dim: usize, rows: Vec<usize>, cols: Vec<usize>, vals: Vec<T>) -> Result<Self> {
        if rows.len() != vals.len() || cols.len() != vals.len() {
            return Err(Error::InvalidInput("triplet arrays differ in length".into()));
        }
        if n > dim || rows.iter().chain(&cols).any(|&i| i >= dim) {
            return Err(Error::InvalidInput("triplet index out of range".into()));
        }
        Ok(Self {
            n,
            dim,
            rows,
            cols,
            vals,
            blocks: Vec::new(),
        })
    }

    /// Size `N` of the original system.
    pub fn original_size(&self) -> usize {
        self.n
    }

    /// Size `M` of the embedded system.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.rows.iter().zip(&self.cols).zip(&self.vals).map(|((&i, &j), &v)| (i, j, v))
    }

    pub fn blocks(&self) -> &[EmbeddingBlock] {
        &self.blocks
    }

    /// Right-hand side `[b, 0, …, 0]`.
    pub fn rhs(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::InvalidInput(format!("rhs length {} differs from {}", b.len(), self.n)));
        }
        let mut v = vec![T::zero(); self.dim];
        v[..self.n].copy_from_slice(b);
        Ok(v)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim {
            return Err(Error::InvalidInput(format!("vector length {} differs from {}", v.len(), self.dim)));
        }
        let mut out = vec![T::zero(); self.dim];
        for (i, j, a) in self.triplets() {
            out[i] += a * v[j];
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Result<Mat<T>> {
        if self.dim > DENSE_EMBEDDING_LIMIT {
            return Err(Error::RefusedTooLarge(format!(
                "dense embedding of size {} exceeds {DENSE_EMBEDDING_LIMIT}",
                self.dim
            )));
        }
        let mut m = Mat::zeros(self.dim, self.dim);
        for (i, j, a) in self.triplets() {
            m[(i, j)] += a;
        }
        Ok(m)
    }

    /// Solves the embedded system densely and returns the `x` part.
    pub fn solve_dense(&self, b: &[T]) -> Result<Vec<T>> {
        let rhs = self.rhs(b)?;
        let lu = Lu::factor_owned(self.to_dense()?).map_err(|_| Error::SingularBlock {
            what: "embedding",
            level: 0,
            node: 0,
        })?;
        let mut v = lu.solve(&rhs);
        v.truncate(self.n);
        Ok(v)
    }

    /// Fills in the auxiliary variables for a given `x` by running the
    /// coupling rows forward: `z_l = R_l z_{l-1}`, then `y_l` from the top down.
    pub fn lift(cm: &CompressedMatrix<T>, x: &[T]) -> Result<Vec<T>> {
        if x.len() != cm.size() {
            return Err(Error::InvalidInput(format!("vector length {} differs from {}", x.len(), cm.size())));
        }
        let mut zs: Vec<Vec<T>> = Vec::with_capacity(cm.num_levels());
        let mut v: Vec<T> = cm.order().iter().map(|&i| x[i]).collect();
        for level in cm.levels() {
            let mut next = Vec::with_capacity(level.k_cols());
            let mut ic = 0;
            for b in &level.blocks {
                let xb = &v[ic..ic + b.n_cols()];
                if b.pass {
                    next.extend_from_slice(xb);
                } else {
                    next.extend(b.r.matvec(xb));
                }
                ic += b.n_cols();
            }
            zs.push(next.clone());
            v = next;
        }
        let nl = cm.num_levels();
        let mut ys: Vec<Vec<T>> = vec![Vec::new(); nl];
        if nl > 0 {
            ys[nl - 1] = cm.s().matvec(&zs[nl - 1]);
            for li in (0..nl - 1).rev() {
                // y_l = D_{l+1} z_l + L_{l+1} y_{l+1}
                let level = &cm.levels()[li + 1];
                let mut y = vec![T::zero(); level.total_rows()];
                let (mut ir, mut ic, mut ik) = (0, 0, 0);
                for b in &level.blocks {
                    apply_dl(b, &zs[li][ic..ic + b.n_cols()], &ys[li + 1][ik..ik + b.k_rows()], &mut y[ir..ir + b.n_rows()]);
                    ir += b.n_rows();
                    ic += b.n_cols();
                    ik += b.k_rows();
                }
                ys[li] = y;
            }
        }
        let mut out = x.to_vec();
        for (y, z) in ys.into_iter().zip(zs) {
            out.extend(y);
            out.extend(z);
        }
        Ok(out)
    }
}

fn apply_dl<T: Scalar>(b: &Block<T>, z: &[T], y: &[T], out: &mut [T]) {
    if !b.d.is_empty() {
        b.d.gemv_acc(T::one(), z, out);
    }
    if b.pass {
        for (o, &v) in out.iter_mut().zip(y) {
            *o += v;
        }
    } else {
        b.l.gemv_acc(T::one(), y, out);
    }
}

/// Dense fallback: assemble the embedding and solve it directly.
pub fn solve_via_embedding_dense<T: Scalar>(cm: &CompressedMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    assemble_embedding(cm).solve_dense(b)
}
