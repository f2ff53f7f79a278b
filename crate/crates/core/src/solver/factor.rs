use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Lu, Mat};
use crate::scalar::Scalar;
use crate::skel::{Block, CompressedMatrix};

/// Blocks with a reciprocal condition estimate below this get a warning.
pub const RCOND_WARN: f64 = 1e-14;

/// Inverse factors of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseBlock<T> {
    pub node: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub k_rows: usize,
    pub k_cols: usize,
    /// `n_cols x n_rows`; empty when zero.
    pub dd: Mat<T>,
    /// `n_cols x k_cols`.
    pub ll: Mat<T>,
    /// `k_rows x n_rows`.
    pub rr: Mat<T>,
    pub pass: bool,
}

/// Telescoping inverse
/// `A⁻¹ ≈ 𝒟1 + ℒ1 (𝒟2 + ℒ2 ( … 𝒮⁻¹ … ) ℛ2) ℛ1`.
#[derive(Clone, Debug)]
pub struct FactoredInverse<T> {
    pub(crate) n: usize,
    pub(crate) eps: f64,
    pub(crate) order: Vec<usize>,
    pub(crate) levels: Vec<Vec<InverseBlock<T>>>,
    pub(crate) top: Lu<T>,
    pub(crate) warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FactorOptions {
    /// Added to the diagonal of every finest-level block (or of the whole
    /// matrix when there are no levels).
    pub regularize: Option<f64>,
}

/// Factored block with its Λ and any warnings.
type BlockOutput<T> = (InverseBlock<T>, Mat<T>, Vec<String>);

pub fn factor<T: Scalar>(cm: &CompressedMatrix<T>) -> Result<FactoredInverse<T>> {
    factor_with(cm, &FactorOptions::default())
}

pub fn factor_with<T: Scalar>(cm: &CompressedMatrix<T>, opts: &FactorOptions) -> Result<FactoredInverse<T>> {
    if let Some(d) = opts.regularize {
        if !d.is_finite() {
            return invalid(format!("regularization must be finite, got {d}"));
        }
    }
    let shift = opts.regularize.map(T::from_f64);
    let mut levels = Vec::with_capacity(cm.num_levels());
    let mut warnings = Vec::new();
    // Λ of each block of the previous level, in block order.
    let mut lambdas: Vec<Mat<T>> = Vec::new();

    for (li, level) in cm.levels().iter().enumerate() {
        let l = li + 1;
        let groups = child_groups(&level.blocks, &lambdas);
        let results: Vec<Result<BlockOutput<T>>> = level
            .blocks
            .par_iter()
            .zip(groups.par_iter())
            .map(|(b, kids)| {
                let mut dhat = b.d_dense();
                let (mut r0, mut c0) = (0, 0);
                for &k in kids {
                    let lam = &lambdas[k];
                    dhat.add_block(r0, c0, lam);
                    r0 += lam.nrows();
                    c0 += lam.ncols();
                }
                if l == 1 {
                    if let Some(s) = shift {
                        dhat.add_diag(s);
                    }
                }
                factor_block(b, dhat, l)
            })
            .collect();
        let mut blocks = Vec::with_capacity(results.len());
        lambdas = Vec::with_capacity(results.len());
        for r in results {
            let (ib, lam, w) = r?;
            blocks.push(ib);
            lambdas.push(lam);
            warnings.extend(w);
        }
        levels.push(blocks);
    }

    let mut top = cm.s().clone();
    let (mut r0, mut c0) = (0, 0);
    for lam in &lambdas {
        top.add_block(r0, c0, lam);
        r0 += lam.nrows();
        c0 += lam.ncols();
    }
    if cm.num_levels() == 0 {
        if let Some(s) = shift {
            top.add_diag(s);
        }
    }
    if top.nrows() != top.ncols() {
        return invalid("top-level skeleton matrix is not square");
    }
    let top_level = cm.num_levels() + 1;
    let top = Lu::factor_owned(top).map_err(|_| Error::SingularBlock {
        what: "top-level",
        level: top_level,
        node: 0,
    })?;
    let rc = top.rcond();
    if rc < RCOND_WARN {
        warnings.push(format!("top-level block (level {top_level}) has rcond {rc:.2e}"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FactoredInverse {
        n: cm.size(),
        eps: cm.eps(),
        order: cm.order().to_vec(),
        levels,
        top,
        warnings,
    })
}

/// For each block, the positions of the previous-level blocks whose
/// skeletons it collects. Children are consecutive, so they are found by
/// consuming skeleton counts in order.
fn child_groups<T: Scalar>(blocks: &[Block<T>], prev: &[Mat<T>]) -> Vec<Vec<usize>> {
    if prev.is_empty() {
        return vec![Vec::new(); blocks.len()];
    }
    let mut p = 0;
    blocks
        .iter()
        .map(|b| {
            let mut acc = 0;
            let mut kids = Vec::new();
            while acc < b.n_rows() && p < prev.len() {
                acc += prev[p].nrows();
                kids.push(p);
                p += 1;
            }
            kids
        })
        .collect()
}

type BlockOut<T> = (InverseBlock<T>, Mat<T>, Vec<String>);

fn factor_block<T: Scalar>(b: &Block<T>, dhat: Mat<T>, level: usize) -> Result<BlockOut<T>> {
    let mut warnings = Vec::new();
    let base = InverseBlock {
        node: b.node,
        n_rows: b.n_rows(),
        n_cols: b.n_cols(),
        k_rows: b.k_rows(),
        k_cols: b.k_cols(),
        dd: Mat::zeros(0, 0),
        ll: Mat::zeros(0, 0),
        rr: Mat::zeros(0, 0),
        pass: b.pass,
    };
    if b.pass {
        // L = R = I: the whole block moves up as Λ = D̂.
        return Ok((base, dhat, warnings));
    }
    let singular = |what| Error::SingularBlock {
        what,
        level,
        node: b.node,
    };
    let lu = Lu::factor_owned(dhat).map_err(|_| singular("diagonal"))?;
    let rc = lu.rcond();
    if rc < RCOND_WARN {
        warnings.push(format!("diagonal block at level {level}, node {} has rcond {rc:.2e}", b.node));
    }
    let dinv = lu.inverse();
    let (kr, kc) = (b.k_rows(), b.k_cols());
    if kr != kc {
        return invalid(format!(
            "block at level {level}, node {} has {kr} row and {kc} column skeletons",
            b.node
        ));
    }
    if kr == 0 && kc == 0 {
        return Ok((
            InverseBlock {
                dd: dinv,
                ll: Mat::zeros(b.n_cols(), 0),
                rr: Mat::zeros(0, b.n_rows()),
                ..base
            },
            Mat::zeros(0, 0),
            warnings,
        ));
    }
    // X = D̂⁻¹ L, Y = R D̂⁻¹
    let x = dinv.matmul(&b.l);
    let y = b.r.matmul(&dinv);
    let rx = b.r.matmul(&x);
    let lu2 = Lu::factor_owned(rx).map_err(|_| singular("skeleton"))?;
    let rc = lu2.rcond();
    if rc < RCOND_WARN {
        warnings.push(format!("skeleton block at level {level}, node {} has rcond {rc:.2e}", b.node));
    }
    let lambda = lu2.inverse();
    let ll = x.matmul(&lambda);
    let rr = lambda.matmul(&y);
    let mut dd = dinv;
    crate::linalg::gemm(-T::one(), &ll, &y, T::one(), &mut dd);
    Ok((InverseBlock { dd, ll, rr, ..base }, lambda, warnings))
}

impl<T: Scalar> FactoredInverse<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Tolerance of the compression this inverse came from.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Validates block shapes and level conformance.
    pub fn check(&self) -> Result<()> {
        if self.order.len() != self.n {
            return invalid("order length differs from matrix size");
        }
        let (mut rows, mut cols) = (self.n, self.n);
        for (li, blocks) in self.levels.iter().enumerate() {
            let nr: usize = blocks.iter().map(|b| b.n_rows).sum();
            let nc: usize = blocks.iter().map(|b| b.n_cols).sum();
            if nr != rows || nc != cols {
                return invalid(format!("level {} does not conform to the level below", li + 1));
            }
            for b in blocks {
                let ok = if b.pass {
                    b.k_rows == b.n_rows && b.k_cols == b.n_cols
                } else {
                    (b.dd.is_empty() || b.dd.shape() == (b.n_cols, b.n_rows))
                        && b.ll.shape() == (b.n_cols, b.k_cols)
                        && b.rr.shape() == (b.k_rows, b.n_rows)
                };
                if !ok {
                    return invalid(format!("level {} node {} has inconsistent shapes", li + 1, b.node));
                }
            }
            rows = blocks.iter().map(|b| b.k_rows).sum();
            cols = blocks.iter().map(|b| b.k_cols).sum();
        }
        if rows != cols || self.top.dim() != rows {
            return invalid("top-level factor has the wrong size");
        }
        Ok(())
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn levels(&self) -> &[Vec<InverseBlock<T>>] {
        &self.levels
    }

    pub fn top(&self) -> &Lu<T> {
        &self.top
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn storage_entries(&self) -> usize {
        let blocks: usize = self
            .levels
            .iter()
            .flatten()
            .map(|b| b.dd.as_slice().len() + b.ll.as_slice().len() + b.rr.as_slice().len())
            .sum();
        blocks + self.top.packed().as_slice().len()
    }

    /// `x = Ã⁻¹ b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return invalid(format!("right-hand side length {} differs from {}", b.len(), self.n));
        }
        let mut v: Vec<T> = self.order.iter().map(|&i| b[i]).collect();
        let mut diag_parts = Vec::with_capacity(self.levels.len());
        for blocks in &self.levels {
            let total_out: usize = blocks.iter().map(|b| b.n_cols).sum();
            let mut yd = vec![T::zero(); total_out];
            let mut next = Vec::new();
            let (mut ir, mut ic) = (0, 0);
            for b in blocks {
                let vb = &v[ir..ir + b.n_rows];
                if !b.dd.is_empty() {
                    b.dd.gemv_acc(T::one(), vb, &mut yd[ic..ic + b.n_cols]);
                }
                if b.pass {
                    next.extend_from_slice(vb);
                } else {
                    next.extend(b.rr.matvec(vb));
                }
                ir += b.n_rows;
                ic += b.n_cols;
            }
            diag_parts.push(yd);
            v = next;
        }
        self.top.solve_in_place(&mut v);
        let mut w = v;
        for (blocks, mut u) in self.levels.iter().zip(diag_parts).rev() {
            let (mut ik, mut ic) = (0, 0);
            for b in blocks {
                let wb = &w[ik..ik + b.k_cols];
                let ub = &mut u[ic..ic + b.n_cols];
                if b.pass {
                    for (a, &c) in ub.iter_mut().zip(wb) {
                        *a += c;
                    }
                } else {
                    b.ll.gemv_acc(T::one(), wb, ub);
                }
                ik += b.k_cols;
                ic += b.n_cols;
            }
            w = u;
        }
        let mut out = vec![T::zero(); self.n];
        for (t, &i) in self.order.iter().enumerate() {
            out[i] = w[t];
        }
        Ok(out)
    }
}
