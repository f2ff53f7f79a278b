//! Binary container for compressed matrices and factored inverses.
//!
//! Little endian throughout.
//!
//! ```text
//! header   magic "SKRS", u32 version (1), u8 kind (1 compressed, 2 factored),
//!          u8 field tag (1 f32, 2 f64, 3 c32, 4 c64), u16 zero,
//!          u64 N, u32 λ, f64 eps
//! order    N × u32
//! level    u32 block count, then per block:
//!            u32 node, u8 pass, u32 n_rows, n_cols, k_rows, k_cols,
//!            compressed: rows, cols, row_skel, col_skel (u32 each), D, L, R
//!            factored:   𝒟, ℒ, ℛ
//! top      compressed: u32 count + top_rows, u32 count + top_cols, S
//!          factored:   packed LU, u32 dim + perm, f64 ‖·‖₁,
//!                      u32 count + warnings (u32 length + UTF-8)
//! matrix   u32 rows, u32 cols, values column-major
//! ```
//!
//! Values are stored at their native width; complex values as (re, im).

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::scalar::Scalar;
use crate::skel::{Block, CompressedMatrix, Level};
use crate::solver::{FactoredInverse, InverseBlock};

const MAGIC: &[u8; 4] = b"SKRS";
const VERSION: u32 = 1;
const KIND_COMPRESSED: u8 = 1;
const KIND_FACTORED: u8 = 2;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn single_precision<T: Scalar>() -> bool {
    T::TAG == 1 || T::TAG == 3
}

struct Header {
    n: usize,
    levels: usize,
    eps: f64,
}

fn write_header<T: Scalar, W: Write>(w: &mut W, kind: u8, h: &Header) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u8(kind)?;
    w.write_u8(T::TAG)?;
    w.write_u16::<LE>(0)?;
    w.write_u64::<LE>(h.n as u64)?;
    w.write_u32::<LE>(h.levels as u32)?;
    w.write_f64::<LE>(h.eps)?;
    Ok(())
}

fn read_header<T: Scalar, R: Read>(r: &mut R, kind: u8) -> Result<Header> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fmt_err("not a skelkit container"));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(fmt_err(format!("unsupported container version {version}")));
    }
    let k = r.read_u8()?;
    if k != kind {
        return Err(fmt_err(format!("container holds kind {k}, expected {kind}")));
    }
    let tag = r.read_u8()?;
    if tag != T::TAG {
        return Err(fmt_err(format!("container field tag {tag} does not match requested {}", T::TAG)));
    }
    r.read_u16::<LE>()?;
    let n = r.read_u64::<LE>()? as usize;
    let levels = r.read_u32::<LE>()? as usize;
    let eps = r.read_f64::<LE>()?;
    Ok(Header { n, levels, eps })
}

fn write_len<W: Write>(w: &mut W, n: usize) -> Result<()> {
    let v = u32::try_from(n).map_err(|_| Error::InvalidInput(format!("length {n} does not fit the container")))?;
    w.write_u32::<LE>(v)?;
    Ok(())
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    Ok(r.read_u32::<LE>()? as usize)
}

fn write_idx<W: Write>(w: &mut W, idx: &[usize]) -> Result<()> {
    for &i in idx {
        write_len(w, i)?;
    }
    Ok(())
}

fn read_idx<R: Read>(r: &mut R, n: usize) -> Result<Vec<usize>> {
    // Capacity is capped so a corrupt length cannot force a huge allocation.
    let mut v = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        v.push(read_len(r)?);
    }
    Ok(v)
}

fn write_counted_idx<W: Write>(w: &mut W, idx: &[usize]) -> Result<()> {
    write_len(w, idx.len())?;
    write_idx(w, idx)
}

fn read_counted_idx<R: Read>(r: &mut R) -> Result<Vec<usize>> {
    let n = read_len(r)?;
    read_idx(r, n)
}

fn write_mat<T: Scalar, W: Write>(w: &mut W, m: &Mat<T>) -> Result<()> {
    write_len(w, m.nrows())?;
    write_len(w, m.ncols())?;
    for &v in m.as_slice() {
        let (re, im) = v.to_parts();
        if single_precision::<T>() {
            w.write_f32::<LE>(re as f32)?;
            if T::IS_COMPLEX {
                w.write_f32::<LE>(im as f32)?;
            }
        } else {
            w.write_f64::<LE>(re)?;
            if T::IS_COMPLEX {
                w.write_f64::<LE>(im)?;
            }
        }
    }
    Ok(())
}

fn read_mat<T: Scalar, R: Read>(r: &mut R) -> Result<Mat<T>> {
    let (m, n) = (read_len(r)?, read_len(r)?);
    let count = m.checked_mul(n).ok_or_else(|| fmt_err("matrix size overflows"))?;
    let mut vals = Vec::with_capacity(count.min(1 << 22));
    for _ in 0..count {
        let (re, im) = if single_precision::<T>() {
            let re = r.read_f32::<LE>()? as f64;
            let im = if T::IS_COMPLEX { r.read_f32::<LE>()? as f64 } else { 0.0 };
            (re, im)
        } else {
            let re = r.read_f64::<LE>()?;
            let im = if T::IS_COMPLEX { r.read_f64::<LE>()? } else { 0.0 };
            (re, im)
        };
        vals.push(T::from_parts(re, im));
    }
    Ok(Mat::from_col_major(m, n, vals))
}

struct BlockHead {
    node: usize,
    pass: bool,
    dims: [usize; 4],
}

fn write_block_head<W: Write>(w: &mut W, h: BlockHead) -> Result<()> {
    write_len(w, h.node)?;
    w.write_u8(h.pass as u8)?;
    for d in h.dims {
        write_len(w, d)?;
    }
    Ok(())
}

fn read_block_head<R: Read>(r: &mut R) -> Result<BlockHead> {
    let node = read_len(r)?;
    let pass = match r.read_u8()? {
        0 => false,
        1 => true,
        p => return Err(fmt_err(format!("bad pass flag {p}"))),
    };
    let mut dims = [0; 4];
    for d in &mut dims {
        *d = read_len(r)?;
    }
    Ok(BlockHead { node, pass, dims })
}

impl<T: Scalar> CompressedMatrix<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let w = &mut w;
        write_header::<T, _>(
            w,
            KIND_COMPRESSED,
            &Header {
                n: self.n,
                levels: self.levels.len(),
                eps: self.eps,
            },
        )?;
        write_idx(w, &self.order)?;
        for level in &self.levels {
            write_len(w, level.blocks.len())?;
            for b in &level.blocks {
                write_block_head(
                    w,
                    BlockHead {
                        node: b.node,
                        pass: b.pass,
                        dims: [b.n_rows(), b.n_cols(), b.k_rows(), b.k_cols()],
                    },
                )?;
                write_idx(w, &b.rows)?;
                write_idx(w, &b.cols)?;
                write_idx(w, &b.row_skel)?;
                write_idx(w, &b.col_skel)?;
                write_mat(w, &b.d)?;
                write_mat(w, &b.l)?;
                write_mat(w, &b.r)?;
            }
        }
        write_counted_idx(w, &self.top_rows)?;
        write_counted_idx(w, &self.top_cols)?;
        write_mat(w, &self.s)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let r = &mut r;
        let h = read_header::<T, _>(r, KIND_COMPRESSED)?;
        let order = read_idx(r, h.n)?;
        let mut levels = Vec::with_capacity(h.levels.min(64));
        for _ in 0..h.levels {
            let nb = read_len(r)?;
            let mut blocks = Vec::with_capacity(nb.min(1 << 16));
            for _ in 0..nb {
                let bh = read_block_head(r)?;
                let [nr, nc, kr, kc] = bh.dims;
                blocks.push(Block {
                    node: bh.node,
                    pass: bh.pass,
                    rows: read_idx(r, nr)?,
                    cols: read_idx(r, nc)?,
                    row_skel: read_idx(r, kr)?,
                    col_skel: read_idx(r, kc)?,
                    d: read_mat(r)?,
                    l: read_mat(r)?,
                    r: read_mat(r)?,
                });
            }
            levels.push(Level { blocks });
        }
        let top_rows = read_counted_idx(r)?;
        let top_cols = read_counted_idx(r)?;
        let s = read_mat(r)?;
        CompressedMatrix::from_parts(h.n, h.eps, order, levels, top_rows, top_cols, s)
            .map_err(|e| fmt_err(format!("inconsistent container: {e}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory cannot fail");
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    /// Serialized size in megabytes (10⁶ bytes).
    pub fn storage_mb(&self) -> f64 {
        self.to_bytes().len() as f64 / 1e6
    }
}

impl<T: Scalar> FactoredInverse<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let w = &mut w;
        write_header::<T, _>(
            w,
            KIND_FACTORED,
            &Header {
                n: self.n,
                levels: self.levels.len(),
                eps: self.eps,
            },
        )?;
        write_idx(w, &self.order)?;
        for blocks in &self.levels {
            write_len(w, blocks.len())?;
            for b in blocks {
                write_block_head(
                    w,
                    BlockHead {
                        node: b.node,
                        pass: b.pass,
                        dims: [b.n_rows, b.n_cols, b.k_rows, b.k_cols],
                    },
                )?;
                write_mat(w, &b.dd)?;
                write_mat(w, &b.ll)?;
                write_mat(w, &b.rr)?;
            }
        }
        write_mat(w, self.top.packed())?;
        write_counted_idx(w, self.top.perm())?;
        w.write_f64::<LE>(self.top.anorm1())?;
        write_len(w, self.warnings.len())?;
        for s in &self.warnings {
            write_len(w, s.len())?;
            w.write_all(s.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let r = &mut r;
        let h = read_header::<T, _>(r, KIND_FACTORED)?;
        let order = read_idx(r, h.n)?;
        let mut levels = Vec::with_capacity(h.levels.min(64));
        for _ in 0..h.levels {
            let nb = read_len(r)?;
            let mut blocks = Vec::with_capacity(nb.min(1 << 16));
            for _ in 0..nb {
                let bh = read_block_head(r)?;
                let [n_rows, n_cols, k_rows, k_cols] = bh.dims;
                blocks.push(InverseBlock {
                    node: bh.node,
                    pass: bh.pass,
                    n_rows,
                    n_cols,
                    k_rows,
                    k_cols,
                    dd: read_mat(r)?,
                    ll: read_mat(r)?,
                    rr: read_mat(r)?,
                });
            }
            levels.push(blocks);
        }
        let packed: Mat<T> = read_mat(r)?;
        let perm = read_counted_idx(r)?;
        let anorm1 = r.read_f64::<LE>()?;
        if packed.nrows() != packed.ncols() || perm.len() != packed.nrows() || perm.iter().any(|&p| p >= perm.len()) {
            return Err(fmt_err("inconsistent top-level factors"));
        }
        let nw = read_len(r)?;
        let mut warnings = Vec::with_capacity(nw.min(1024));
        for _ in 0..nw {
            let len = read_len(r)?;
            let mut buf = Vec::with_capacity(len.min(1 << 16));
            r.take(len as u64).read_to_end(&mut buf)?;
            if buf.len() != len {
                return Err(fmt_err("truncated warning text"));
            }
            warnings.push(String::from_utf8(buf).map_err(|e| fmt_err(e.to_string()))?);
        }
        let fi = FactoredInverse {
            n: h.n,
            eps: h.eps,
            order,
            levels,
            top: Lu::from_parts(packed, perm, anorm1),
            warnings,
        };
        fi.check().map_err(|e| fmt_err(format!("inconsistent container: {e}")))?;
        Ok(fi)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory cannot fail");
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}
