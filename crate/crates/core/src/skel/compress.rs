use std::collections::HashMap;

use rayon::prelude::*;

use super::{proxy_points, zero_diagonal_blocks, Block, CompressedMatrix, KernelMatrix, Level, ProxyConfig};
use crate::error::{invalid, Error, Result};
use crate::geom::OrthTree;
use crate::linalg::Mat;
use crate::lowrank::{id_with, IdMethod, IdTarget, InterpDecomp};
use crate::scalar::Scalar;

/// Above this size global-mode compression is refused unless overridden.
pub const GLOBAL_MODE_LIMIT: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Compress against near interactions plus a proxy surface.
    #[default]
    Proxy,
    /// Compress against the full off-diagonal block row and column.
    Global,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proxy" => Ok(Mode::Proxy),
            "global" => Ok(Mode::Global),
            other => invalid(format!("unknown compression mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressOptions {
    pub eps: f64,
    pub proxy: ProxyConfig,
    pub mode: Mode,
    /// ID construction; `None` uses pivoted QR in proxy mode and randomized
    /// sampling in global mode.
    pub id: Option<IdMethod>,
    pub seed: u64,
    pub allow_large_global: bool,
}

impl CompressOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            proxy: ProxyConfig::default(),
            mode: Mode::Proxy,
            id: None,
            seed: 0,
            allow_large_global: false,
        }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn proxy(mut self, proxy: ProxyConfig) -> Self {
        self.proxy = proxy;
        self
    }

    pub fn id_method(mut self, id: IdMethod) -> Self {
        self.id = Some(id);
        self
    }

    fn method_for(&self, level: usize, node: usize) -> IdMethod {
        let m = self.id.unwrap_or(match self.mode {
            Mode::Proxy => IdMethod::Deterministic,
            Mode::Global => IdMethod::Randomized {
                oversampling: 10,
                seed: self.seed,
            },
        });
        match m {
            IdMethod::Randomized { oversampling, seed } => IdMethod::Randomized {
                oversampling,
                seed: block_seed(seed, level, node),
            },
            d => d,
        }
    }
}

fn block_seed(seed: u64, level: usize, node: usize) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [level as u64, node as u64] {
        h = (h ^ v).wrapping_mul(0x0100_0000_01b3).rotate_left(29);
    }
    h
}

/// Geometry of one block at the current level.
struct Slot {
    node: usize,
    center: [f64; 3],
    half: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Sizes of the children's skeleton sets, for zeroing their diagonal blocks.
    child_sizes: Vec<(usize, usize)>,
}

pub fn compress<T, M>(mat: &M, tree: &OrthTree, opts: &CompressOptions) -> Result<CompressedMatrix<T>>
where
    T: Scalar,
    M: KernelMatrix<T> + ?Sized,
{
    let eps = opts.eps;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    let n = mat.size();
    if tree.num_points() != n || mat.points().dim() != tree.dim() {
        return invalid("tree does not match the matrix");
    }
    opts.proxy.validate(tree.dim())?;
    if opts.mode == Mode::Global && n > GLOBAL_MODE_LIMIT && !opts.allow_large_global {
        return Err(Error::RefusedTooLarge(format!(
            "global-mode compression of N = {n} exceeds {GLOBAL_MODE_LIMIT}"
        )));
    }

    let lambda = tree.max_depth();
    let order = tree.perm().to_vec();
    let mut levels: Vec<Level<T>> = Vec::with_capacity(lambda);
    let mut prev_pos: HashMap<usize, usize> = HashMap::new();

    for l in 1..=lambda {
        let target_depth = tree.depth() - l;
        let nodes = tree.level(l);
        let slots: Vec<Slot> = nodes
            .iter()
            .map(|&id| {
                let nd = tree.node(id);
                let (rows, cols, child_sizes) = if l == 1 {
                    let idx = tree.indices(id).to_vec();
                    (idx.clone(), idx, Vec::new())
                } else {
                    let kids: Vec<usize> = if !nd.is_leaf() && nd.depth == target_depth {
                        nd.children.clone()
                    } else {
                        vec![id]
                    };
                    let prev = &levels[l - 2].blocks;
                    let mut rows = Vec::new();
                    let mut cols = Vec::new();
                    let mut sizes = Vec::new();
                    for k in kids {
                        let b = &prev[prev_pos[&k]];
                        rows.extend_from_slice(&b.row_skel);
                        cols.extend_from_slice(&b.col_skel);
                        sizes.push((b.k_rows(), b.k_cols()));
                    }
                    (rows, cols, sizes)
                };
                Slot {
                    node: id,
                    center: nd.center,
                    half: nd.half,
                    rows,
                    cols,
                    child_sizes,
                }
            })
            .collect();

        let blocks: Vec<Block<T>> = (0..slots.len())
            .into_par_iter()
            .map(|b| compress_block(mat, tree.dim(), opts, l, &slots, b))
            .collect::<Result<_>>()?;
        prev_pos = blocks.iter().enumerate().map(|(i, b)| (b.node, i)).collect();
        levels.push(Level { blocks });
    }

    let (top_rows, top_cols, s) = match levels.last() {
        None => {
            let s = mat.entries(&order, &order);
            (order.clone(), order.clone(), s)
        }
        Some(last) => {
            let rows: Vec<usize> = last.blocks.iter().flat_map(|b| b.row_skel.iter().copied()).collect();
            let cols: Vec<usize> = last.blocks.iter().flat_map(|b| b.col_skel.iter().copied()).collect();
            let mut s = mat.entries(&rows, &cols);
            zero_diagonal_blocks(&mut s, last.blocks.iter().map(|b| (b.k_rows(), b.k_cols())));
            (rows, cols, s)
        }
    };
    log::debug!(
        "compressed N = {n} over {lambda} levels, top skeletons {} x {}",
        top_rows.len(),
        top_cols.len()
    );
    CompressedMatrix::from_parts(n, eps, order, levels, top_rows, top_cols, s)
}

fn compress_block<T, M>(mat: &M, dim: usize, opts: &CompressOptions, l: usize, slots: &[Slot], b: usize) -> Result<Block<T>>
where
    T: Scalar,
    M: KernelMatrix<T> + ?Sized,
{
    let slot = &slots[b];
    let (nr, nc) = (slot.rows.len(), slot.cols.len());
    let mut d = mat.entries(&slot.rows, &slot.cols);
    if l > 1 {
        zero_diagonal_blocks(&mut d, slot.child_sizes.iter().copied());
    }
    let d = if d.max_abs() == 0.0 { Mat::zeros(0, 0) } else { d };
    let pass = |d: Mat<T>| Block {
        node: slot.node,
        rows: slot.rows.clone(),
        cols: slot.cols.clone(),
        row_skel: slot.rows.clone(),
        col_skel: slot.cols.clone(),
        d,
        l: Mat::zeros(0, 0),
        r: Mat::zeros(0, 0),
        pass: true,
    };
    // A block that merely relays a single child has nothing new to compress.
    if l > 1 && slot.child_sizes.len() == 1 {
        return Ok(pass(d));
    }

    let (near_rows, near_cols, row_extra, col_extra) = match opts.mode {
        Mode::Global => {
            let others = |f: fn(&Slot) -> &Vec<usize>| -> Vec<usize> {
                slots
                    .iter()
                    .enumerate()
                    .filter(|&(o, _)| o != b)
                    .flat_map(|(_, s)| f(s).iter().copied())
                    .collect()
            };
            (others(|s| &s.rows), others(|s| &s.cols), None, None)
        }
        Mode::Proxy => {
            let pts = mat.points();
            let radius = opts.proxy.radius(slot.half, dim);
            let reach = radius.max(slot.half * (dim as f64).sqrt() + mat.correction_reach());
            let c = &slot.center[..dim];
            let inside = |i: &usize| -> bool {
                let p = pts.point(*i);
                p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < reach * reach
            };
            let mut near_rows = Vec::new();
            let mut near_cols = Vec::new();
            for (o, s) in slots.iter().enumerate() {
                if o == b || box_distance(c, &s.center[..dim], s.half) >= reach {
                    continue;
                }
                near_rows.extend(s.rows.iter().filter(|i| inside(i)));
                near_cols.extend(s.cols.iter().filter(|i| inside(i)));
            }
            let proxy = proxy_points(c, slot.half, &opts.proxy, dim, mat.wavenumber());
            let scale = mat.weight_scale(&slot.cols);
            let rx = mat.proxy_sources(&slot.rows, &proxy, scale);
            let cx = mat.proxy_targets(&proxy, &slot.cols);
            (near_rows, near_cols, Some(rx), Some(cx))
        }
    };

    // Row space: columns of [A(rows, near) | proxy] interpolated from skeleton rows.
    let mut row_mat = mat.entries(&slot.rows, &near_cols);
    if let Some(rx) = row_extra {
        row_mat = row_mat.hstack(&rx);
    }
    let mut col_mat = mat.entries(&near_rows, &slot.cols);
    if let Some(cx) = col_extra {
        col_mat = col_mat.vstack(&cx);
    }
    let row_t = row_mat.transpose();
    let method = opts.method_for(l, slot.node);
    let target = IdTarget::Precision(opts.eps);
    let mut rid = id_with(&row_t, target, method)?;
    let mut cid = id_with(&col_mat, target, method)?;

    // Square skeleton blocks keep the inverse well defined.
    let k = rid.rank().max(cid.rank());
    if k >= nr.min(nc) {
        return Ok(pass(d));
    }
    if rid.rank() < k {
        rid = refit(&row_t, k, method, rid)?;
    }
    if cid.rank() < k {
        cid = refit(&col_mat, k, method, cid)?;
    }
    Ok(Block {
        node: slot.node,
        row_skel: rid.skel.iter().map(|&i| slot.rows[i]).collect(),
        col_skel: cid.skel.iter().map(|&j| slot.cols[j]).collect(),
        rows: slot.rows.clone(),
        cols: slot.cols.clone(),
        d,
        l: rid.proj.transpose(),
        r: cid.proj,
        pass: false,
    })
}

fn refit<T: Scalar>(a: &Mat<T>, k: usize, method: IdMethod, fallback: InterpDecomp<T>) -> Result<InterpDecomp<T>> {
    let id = id_with(a, IdTarget::Rank(k), method)?;
    // A matrix with fewer than k nonzero columns cannot give rank k; the
    // lower-rank ID is exact there, so pad it with unused indices.
    if id.rank() == k && id.proj.is_finite() {
        return Ok(id);
    }
    Ok(pad_rank(fallback, k))
}

fn pad_rank<T: Scalar>(mut id: InterpDecomp<T>, k: usize) -> InterpDecomp<T> {
    let n = id.ncols();
    let extra: Vec<usize> = (0..n).filter(|j| !id.skel.contains(j)).take(k - id.rank()).collect();
    let old = id.rank();
    let mut proj = Mat::zeros(k, n);
    proj.set_block(0, 0, &id.proj);
    for (r, &j) in extra.iter().enumerate() {
        for i in 0..old {
            proj[(i, j)] = T::zero();
        }
        proj[(old + r, j)] = T::one();
    }
    id.skel.extend(extra);
    id.proj = proj;
    id
}

/// Distance from `p` to the closed box `center ± half`.
fn box_distance(p: &[f64], center: &[f64], half: f64) -> f64 {
    p.iter()
        .zip(center)
        .map(|(a, c)| {
            let t = ((a - c).abs() - half).max(0.0);
            t * t
        })
        .sum::<f64>()
        .sqrt()
}
