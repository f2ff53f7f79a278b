//! Point-set file formats.
//!
//! Text: one point per line, whitespace separated, `#` starts a comment.
//! The column count selects the layout: 2 or 3 columns are bare 2D or 3D
//! coordinates, 4 or 6 columns append a unit normal.
//!
//! Binary (little endian): magic `SKPT`, u32 version (1), u32 dim, u64 N,
//! u32 flags (bit 0 normals, bit 1 weights, bit 2 curvature), then N·dim
//! f64 coordinates, followed by the flagged arrays in that order.

use std::io::{BufRead, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::PointSet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SKPT";
const VERSION: u32 = 1;

pub fn read_text<R: BufRead>(reader: R) -> Result<PointSet> {
    let mut cols = None;
    let mut vals = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Format(format!(
                    "line {}: {} columns, expected {c}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        vals.extend(row);
    }
    let cols = cols.ok_or_else(|| Error::Format("no points in input".into()))?;
    let (dim, has_normals) = match cols {
        2 => (2, false),
        3 => (3, false),
        4 => (2, true),
        6 => (3, true),
        c => return Err(Error::Format(format!("unsupported column count {c}"))),
    };
    let mut coords = Vec::with_capacity(vals.len() / cols * dim);
    let mut normals = Vec::new();
    for row in vals.chunks(cols) {
        coords.extend_from_slice(&row[..dim]);
        if has_normals {
            normals.extend_from_slice(&row[dim..]);
        }
    }
    let ps = PointSet::new(dim, coords)?;
    if has_normals {
        ps.with_normals(normals)
    } else {
        Ok(ps)
    }
}

pub fn write_text<W: Write>(ps: &PointSet, mut w: W) -> Result<()> {
    for i in 0..ps.len() {
        let mut fields: Vec<String> = ps.point(i).iter().map(|v| format!("{v:.17e}")).collect();
        if let Some(nu) = ps.normal(i) {
            fields.extend(nu.iter().map(|v| format!("{v:.17e}")));
        }
        writeln!(w, "{}", fields.join(" "))?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(ps: &PointSet, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(ps.dim() as u32)?;
    w.write_u64::<LittleEndian>(ps.len() as u64)?;
    let flags = ps.normals().is_some() as u32 | (ps.weights().is_some() as u32) << 1 | (ps.curvatures().is_some() as u32) << 2;
    w.write_u32::<LittleEndian>(flags)?;
    let arrays = [Some(ps.coords()), ps.normals(), ps.weights(), ps.curvatures()];
    for arr in arrays.into_iter().flatten() {
        for &v in arr {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<PointSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a point-set file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported point-set version {version}")));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let flags = r.read_u32::<LittleEndian>()?;
    if !(dim == 2 || dim == 3) || n == 0 || n > (1 << 40) {
        return Err(Error::Format(format!("bad header: dim {dim}, {n} points")));
    }
    let mut read = |len: usize| -> Result<Vec<f64>> {
        let mut v = vec![0.0; len];
        r.read_f64_into::<LittleEndian>(&mut v)?;
        Ok(v)
    };
    let mut ps = PointSet::new(dim, read(n * dim)?)?;
    if flags & 1 != 0 {
        ps = ps.with_normals(read(n * dim)?)?;
    }
    if flags & 2 != 0 {
        ps = ps.with_weights(read(n)?)?;
    }
    if flags & 4 != 0 {
        ps = ps.with_curvature(read(n)?)?;
    }
    Ok(ps)
}
