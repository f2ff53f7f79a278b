//! Matrix Market coordinate files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::embed::SparseEmbedding;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SIZE_TAG: &str = "% skelkit original-size";

/// Writes `se` as a general coordinate matrix, entries sorted by column then
/// row, values with 17 significant digits.
pub fn write_matrix_market<T: Scalar, W: Write>(se: &SparseEmbedding<T>, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let field = if T::IS_COMPLEX { "complex" } else { "real" };
    writeln!(w, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(w, "{SIZE_TAG} {}", se.original_size())?;
    writeln!(w, "{} {} {}", se.dim(), se.dim(), se.nnz())?;
    let mut idx: Vec<usize> = (0..se.nnz()).collect();
    idx.sort_by_key(|&t| (se.cols[t], se.rows[t]));
    for t in idx {
        let (re, im) = se.vals[t].to_parts();
        if T::IS_COMPLEX {
            writeln!(w, "{} {} {:.16e} {:.16e}", se.rows[t] + 1, se.cols[t] + 1, re, im)?;
        } else {
            writeln!(w, "{} {} {:.16e}", se.rows[t] + 1, se.cols[t] + 1, re)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_matrix_market<T: Scalar>(se: &SparseEmbedding<T>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(se, File::create(path)?)
}

/// Reads a general coordinate matrix. Real files may be read into complex
/// scalars; the reverse is an error.
pub fn read_matrix_market<T: Scalar, R: BufRead>(input: R) -> Result<SparseEmbedding<T>> {
    let bad = |msg: String| Error::Format(msg);
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(bad(format!("unsupported header: {header}")));
    }
    let complex = match h[3].as_str() {
        "real" | "integer" => false,
        "complex" => true,
        other => return Err(bad(format!("unsupported field {other}"))),
    };
    if h[4] != "general" {
        return Err(bad(format!("unsupported symmetry {}", h[4])));
    }
    if complex && !T::IS_COMPLEX {
        return Err(bad("complex file read into a real matrix".into()));
    }
    let mut orig = None;
    let mut size = None;
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix(SIZE_TAG) {
            orig = Some(rest.trim().parse::<usize>().map_err(|e| bad(format!("bad size tag: {e}")))?);
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("bad integer {s:?}: {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("bad number {s:?}: {e}")));
        match size {
            None => {
                if f.len() != 3 {
                    return Err(bad(format!("bad size line: {t}")));
                }
                let (m, n, nnz) = (int(f[0])?, int(f[1])?, int(f[2])?);
                if m != n {
                    return Err(bad(format!("matrix is {m} x {n}, not square")));
                }
                size = Some((m, nnz));
                rows.reserve(nnz);
                cols.reserve(nnz);
                vals.reserve(nnz);
            }
            Some((m, _)) => {
                let want = if complex { 4 } else { 3 };
                if f.len() != want {
                    return Err(bad(format!("bad entry line: {t}")));
                }
                let (i, j) = (int(f[0])?, int(f[1])?);
                if i == 0 || j == 0 || i > m || j > m {
                    return Err(bad(format!("entry ({i}, {j}) out of range")));
                }
                let im = if complex { num(f[3])? } else { 0.0 };
                rows.push(i - 1);
                cols.push(j - 1);
                vals.push(T::from_parts(num(f[2])?, im));
            }
        }
    }
    let (m, nnz) = size.ok_or_else(|| bad("missing size line".into()))?;
    if vals.len() != nnz {
        return Err(bad(format!("expected {nnz} entries, found {}", vals.len())));
    }
    SparseEmbedding::from_triplets(orig.unwrap_or(m), m, rows, cols, vals)
}

pub fn import_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<SparseEmbedding<T>> {
    read_matrix_market(BufReader::new(File::open(path)?))
}
