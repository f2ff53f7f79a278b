use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::geom::PointSet;
use crate::kernels::{Equation, KernelEval, KernelSpec, Layer};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// A square matrix indexed by points, with the side information the
/// compressor needs: entry access and proxy-surface interactions.
pub trait KernelMatrix<T: Scalar>: Sync {
    fn size(&self) -> usize;

    /// Point `i` carries row `i` and column `i`.
    fn points(&self) -> &PointSet;

    fn entries(&self, rows: &[usize], cols: &[usize]) -> Mat<T>;

    /// Field at the `rows` targets due to unit sources on `proxy`, in a form
    /// whose column span contains every far-field block row.
    fn proxy_sources(&self, rows: &[usize], proxy: &PointSet, scale: f64) -> Mat<T>;

    /// Field on `proxy` due to the `cols` sources, whose row span contains
    /// every far-field block column.
    fn proxy_targets(&self, proxy: &PointSet, cols: &[usize]) -> Mat<T>;

    fn wavenumber(&self) -> f64 {
        0.0
    }

    /// Largest distance over which entries deviate from the plain kernel
    /// (quadrature corrections). Such pairs are always treated as near.
    fn correction_reach(&self) -> f64 {
        0.0
    }

    /// Typical magnitude of a column weight, used to balance proxy blocks.
    fn weight_scale(&self, cols: &[usize]) -> f64 {
        let _ = cols;
        1.0
    }
}

/// Kernel matrix `A_ij = G(x_i, x_j) w_j` plus a multiple of the identity.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    points: PointSet,
    ev: KernelEval,
    identity: Complex64,
}

impl KernelOperator {
    pub fn new(spec: KernelSpec, points: PointSet) -> Result<Self> {
        spec.validate()?;
        if points.dim() != spec.dim {
            return invalid(format!("{}D kernel on {}D points", spec.dim, points.dim()));
        }
        if spec.layer != Layer::Single && !points.has_normals() {
            return invalid("double-layer kernels need normals");
        }
        let scale = points.diameter();
        Ok(Self {
            ev: KernelEval::new(spec, if scale > 0.0 { scale } else { 1.0 }),
            points,
            identity: Complex64::new(0.0, 0.0),
        })
    }

    /// Adds `c * I`.
    pub fn with_identity(mut self, c: Complex64) -> Self {
        self.identity = c;
        self
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.ev.spec
    }

    pub fn eval(&self) -> &KernelEval {
        &self.ev
    }

    pub fn identity(&self) -> Complex64 {
        self.identity
    }

    /// The whole matrix, densely.
    pub fn dense<T: Scalar>(&self) -> Mat<T> {
        let all: Vec<usize> = (0..self.points.len()).collect();
        KernelMatrix::<T>::entries(self, &all, &all)
    }
}

/// Proxy interactions shared by all kernel-based matrices.
pub(crate) fn proxy_sources_for<T: Scalar>(
    spec: &KernelSpec,
    pts: &PointSet,
    rows: &[usize],
    proxy: &PointSet,
    scale: f64,
) -> Mat<T> {
    // Single-layer proxy charges, differentiated on the target side when the
    // system kernel is.
    let layer = if spec.layer == Layer::DoubleAdjoint {
        Layer::DoubleAdjoint
    } else {
        Layer::Single
    };
    let ps = spec.with_layer(layer);
    let extra = needs_constant(spec) as usize;
    let np = proxy.len();
    let mut m = Mat::zeros(rows.len(), np + extra);
    for k in 0..np {
        let z = proxy.point(k);
        let col = m.col_mut(k);
        for (a, &i) in rows.iter().enumerate() {
            let v = ps.value(pts.point(i), pts.normal(i), z, None) * scale;
            col[a] = T::from_parts(v.re, v.im);
        }
    }
    if extra == 1 {
        m.col_mut(np).fill(T::from_f64(scale));
    }
    m
}

pub(crate) fn proxy_targets_for<T: Scalar>(spec: &KernelSpec, pts: &PointSet, proxy: &PointSet, cols: &[usize]) -> Mat<T> {
    let layer = if spec.layer == Layer::Double {
        Layer::Double
    } else {
        Layer::Single
    };
    let ps = spec.with_layer(layer);
    let extra = needs_constant(spec) as usize;
    let np = proxy.len();
    let mut m = Mat::zeros(np + extra, cols.len());
    for (b, &j) in cols.iter().enumerate() {
        let y = pts.point(j);
        let w = pts.weight(j).unwrap_or(1.0);
        let col = m.col_mut(b);
        for k in 0..np {
            let v = ps.value(proxy.point(k), None, y, pts.normal(j)) * w;
            col[k] = T::from_parts(v.re, v.im);
        }
        if extra == 1 {
            col[np] = if layer == Layer::Single { T::from_f64(w) } else { T::zero() };
        }
    }
    m
}

/// The 2D logarithmic single layer cannot reproduce constants when the proxy
/// circle has unit capacity, so an explicit constant mode is appended.
fn needs_constant(spec: &KernelSpec) -> bool {
    spec.equation == Equation::Laplace && spec.dim == 2
}

pub(crate) fn mean_weight(pts: &PointSet, cols: &[usize]) -> f64 {
    match pts.weights() {
        Some(w) if !cols.is_empty() => cols.iter().map(|&j| w[j].abs()).sum::<f64>() / cols.len() as f64,
        _ => 1.0,
    }
}

impl<T: Scalar> KernelMatrix<T> for KernelOperator {
    fn size(&self) -> usize {
        self.points.len()
    }

    fn points(&self) -> &PointSet {
        &self.points
    }

    fn entries(&self, rows: &[usize], cols: &[usize]) -> Mat<T> {
        let mut m: Mat<T> = self.ev.block(&self.points, rows, &self.points, cols);
        if self.identity != Complex64::new(0.0, 0.0) {
            let c = T::from_parts(self.identity.re, self.identity.im);
            for (b, &j) in cols.iter().enumerate() {
                for (a, &i) in rows.iter().enumerate() {
                    if i == j {
                        m[(a, b)] += c;
                    }
                }
            }
        }
        m
    }

    fn proxy_sources(&self, rows: &[usize], proxy: &PointSet, scale: f64) -> Mat<T> {
        proxy_sources_for(&self.ev.spec, &self.points, rows, proxy, scale)
    }

    fn proxy_targets(&self, proxy: &PointSet, cols: &[usize]) -> Mat<T> {
        proxy_targets_for(&self.ev.spec, &self.points, proxy, cols)
    }

    fn wavenumber(&self) -> f64 {
        self.ev.spec.wavenumber
    }

    fn weight_scale(&self, cols: &[usize]) -> f64 {
        mean_weight(&self.points, cols)
    }
}
