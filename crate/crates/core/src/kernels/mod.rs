//! Laplace and Helmholtz Green's functions in 2D and 3D.
//!
//! | kernel          | G(x, y)                  |
//! |-----------------|--------------------------|
//! | Laplace 2D      | -log(r) / (2π)           |
//! | Laplace 3D      | 1 / (4π r)               |
//! | Helmholtz 2D    | (i/4) H0(k r)            |
//! | Helmholtz 3D    | exp(i k r) / (4π r)      |
//!
//! with `r = |x - y|`. The double layer differentiates along the source
//! normal, the adjoint double layer along the target normal.

pub mod bessel;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use bessel::{bessel_h0, bessel_h1, bessel_jy01};

use crate::error::{invalid, Result};
use crate::geom::PointSet;
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Distances below this multiple of the geometry scale count as coincident.
pub const COINCIDENCE_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    Laplace,
    Helmholtz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Single,
    /// `∂G/∂ν_y`, normals taken from the sources.
    Double,
    /// `∂G/∂ν_x`, normals taken from the targets.
    DoubleAdjoint,
}

/// Value assigned to coincident target/source pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SelfInteraction {
    #[default]
    Zero,
    /// Smooth diagonal limit `-κ/(4π)` of the 2D Laplace double layers,
    /// with `κ` the curvature carried by the point set. Other kernels have no
    /// finite limit and get zero.
    CurvatureLimit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub equation: Equation,
    pub dim: usize,
    pub layer: Layer,
    pub wavenumber: f64,
    pub self_interaction: SelfInteraction,
}

impl KernelSpec {
    pub fn laplace(dim: usize, layer: Layer) -> Self {
        Self {
            equation: Equation::Laplace,
            dim,
            layer,
            wavenumber: 0.0,
            self_interaction: SelfInteraction::Zero,
        }
    }

    pub fn helmholtz(dim: usize, layer: Layer, k: f64) -> Self {
        Self {
            equation: Equation::Helmholtz,
            dim,
            layer,
            wavenumber: k,
            self_interaction: SelfInteraction::Zero,
        }
    }

    pub fn with_self_interaction(mut self, s: SelfInteraction) -> Self {
        self.self_interaction = s;
        self
    }

    pub fn with_layer(mut self, layer: Layer) -> Self {
        self.layer = layer;
        self
    }

    pub fn is_complex(&self) -> bool {
        self.equation == Equation::Helmholtz
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return invalid(format!("kernel dimension must be 2 or 3, got {}", self.dim));
        }
        match self.equation {
            Equation::Laplace if self.wavenumber != 0.0 => invalid("Laplace kernels take wavenumber 0"),
            Equation::Helmholtz if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) => {
                invalid(format!("Helmholtz wavenumber must be positive, got {}", self.wavenumber))
            }
            _ => Ok(()),
        }
    }

    /// Parses names like `laplace2d` or `helmholtz3d`.
    pub fn parse(name: &str, k: f64) -> Result<Self> {
        let spec = match name.to_ascii_lowercase().as_str() {
            "laplace2d" => Self::laplace(2, Layer::Single),
            "laplace3d" => Self::laplace(3, Layer::Single),
            "helmholtz2d" => Self::helmholtz(2, Layer::Single, k),
            "helmholtz3d" => Self::helmholtz(3, Layer::Single, k),
            other => return invalid(format!("unknown kernel {other:?}")),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `G` and `dG/dr` at distance `r > 0`, as complex numbers.
    #[inline]
    pub fn radial(&self, r: f64) -> (Complex64, Complex64) {
        let k = self.wavenumber;
        match (self.equation, self.dim) {
            (Equation::Laplace, 2) => (
                Complex64::new(-r.ln() / (2.0 * PI), 0.0),
                Complex64::new(-1.0 / (2.0 * PI * r), 0.0),
            ),
            (Equation::Laplace, _) => (
                Complex64::new(1.0 / (4.0 * PI * r), 0.0),
                Complex64::new(-1.0 / (4.0 * PI * r * r), 0.0),
            ),
            (Equation::Helmholtz, 2) => {
                let [j0, y0, j1, y1] = bessel_jy01(k * r);
                // (i/4) H0 and -(i/4) k H1
                (
                    Complex64::new(-0.25 * y0, 0.25 * j0),
                    Complex64::new(0.25 * k * y1, -0.25 * k * j1),
                )
            }
            (Equation::Helmholtz, _) => {
                let e = Complex64::from_polar(1.0, k * r) / (4.0 * PI * r);
                (e, e * Complex64::new(-1.0 / r, k))
            }
        }
    }

    /// Kernel value between target `x` and source `y`, ignoring weights and
    /// the coincidence rule. Panics if a needed normal is missing.
    #[inline]
    pub fn value(&self, x: &[f64], nx: Option<&[f64]>, y: &[f64], ny: Option<&[f64]>) -> Complex64 {
        let d = self.dim;
        let mut r2 = 0.0;
        for a in 0..d {
            let t = x[a] - y[a];
            r2 += t * t;
        }
        let r = r2.sqrt();
        match self.layer {
            Layer::Single => self.radial(r).0,
            Layer::Double => {
                let nu = ny.expect("double layer needs source normals");
                let dot: f64 = (0..d).map(|a| (y[a] - x[a]) * nu[a]).sum();
                self.radial(r).1 * (dot / r)
            }
            Layer::DoubleAdjoint => {
                let nu = nx.expect("adjoint double layer needs target normals");
                let dot: f64 = (0..d).map(|a| (x[a] - y[a]) * nu[a]).sum();
                self.radial(r).1 * (dot / r)
            }
        }
    }

    /// Value used when target and source coincide.
    pub fn coincident_value(&self, curvature: Option<f64>) -> Complex64 {
        match (self.self_interaction, self.equation, self.dim, self.layer) {
            (SelfInteraction::CurvatureLimit, Equation::Laplace, 2, Layer::Double | Layer::DoubleAdjoint) => {
                Complex64::new(-curvature.unwrap_or(0.0) / (4.0 * PI), 0.0)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// Kernel evaluator with a fixed coincidence distance.
#[derive(Clone, Copy, Debug)]
pub struct KernelEval {
    pub spec: KernelSpec,
    floor2: f64,
}

impl KernelEval {
    pub fn new(spec: KernelSpec, scale: f64) -> Self {
        let floor = COINCIDENCE_FLOOR * scale;
        Self {
            spec,
            floor2: floor * floor,
        }
    }

    /// Weighted entry for target `i` of `tp` and source `j` of `sp`.
    #[inline]
    pub fn entry(&self, tp: &PointSet, i: usize, sp: &PointSet, j: usize) -> Complex64 {
        let x = tp.point(i);
        let y = sp.point(j);
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let v = if r2 < self.floor2 {
            self.spec.coincident_value(sp.curvature(j).or(tp.curvature(i)))
        } else {
            self.spec.value(x, tp.normal(i), y, sp.normal(j))
        };
        match sp.weight(j) {
            Some(w) => v * w,
            None => v,
        }
    }

    /// Dense block `[entry(rows[a], cols[b])]` over index lists.
    pub fn block<T: Scalar>(&self, tp: &PointSet, rows: &[usize], sp: &PointSet, cols: &[usize]) -> Mat<T> {
        let mut m = Mat::zeros(rows.len(), cols.len());
        for (b, &j) in cols.iter().enumerate() {
            let col = m.col_mut(b);
            for (a, &i) in rows.iter().enumerate() {
                let v = self.entry(tp, i, sp, j);
                col[a] = T::from_parts(v.re, v.im);
            }
        }
        m
    }
}

fn check_compat<T: Scalar>(spec: &KernelSpec, targets: &PointSet, sources: &PointSet) -> Result<()> {
    spec.validate()?;
    if targets.dim() != spec.dim || sources.dim() != spec.dim {
        return invalid(format!(
            "kernel is {}D but points are {}D/{}D",
            spec.dim,
            targets.dim(),
            sources.dim()
        ));
    }
    if spec.is_complex() && !T::IS_COMPLEX {
        return invalid("Helmholtz kernels need a complex scalar type");
    }
    match spec.layer {
        Layer::Double if !sources.has_normals() => invalid("double layer needs source normals"),
        Layer::DoubleAdjoint if !targets.has_normals() => invalid("adjoint double layer needs target normals"),
        _ => Ok(()),
    }
}

/// Dense kernel block between all targets and all sources. Columns are scaled
/// by source weights when present. The coincidence distance is relative to
/// the joint bounding box.
pub fn eval_block<T: Scalar>(spec: &KernelSpec, targets: &PointSet, sources: &PointSet) -> Result<Mat<T>> {
    check_compat::<T>(spec, targets, sources)?;
    let (tl, th) = targets.bounds();
    let (sl, sh) = sources.bounds();
    let scale = (0..spec.dim)
        .map(|a| th[a].max(sh[a]) - tl[a].min(sl[a]))
        .fold(0.0, f64::max);
    let ev = KernelEval::new(*spec, if scale > 0.0 { scale } else { 1.0 });
    let rows: Vec<usize> = (0..targets.len()).collect();
    let cols: Vec<usize> = (0..sources.len()).collect();
    Ok(ev.block(targets, &rows, sources, &cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    fn ps(dim: usize, pts: &[f64]) -> PointSet {
        PointSet::new(dim, pts.to_vec()).unwrap()
    }

    #[test]
    fn point_values() {
        let l3 = KernelSpec::laplace(3, Layer::Single);
        let m: Mat<f64> = eval_block(&l3, &ps(3, &[0.0, 0.0, 0.0]), &ps(3, &[2.0, 0.0, 0.0])).unwrap();
        assert!((m[(0, 0)] - 1.0 / (8.0 * PI)).abs() < 1e-17);

        let l2 = KernelSpec::laplace(2, Layer::Single);
        let m: Mat<f64> = eval_block(&l2, &ps(2, &[0.0, 0.0]), &ps(2, &[0.6, 0.8])).unwrap();
        assert_eq!(m[(0, 0)], 0.0);

        let h2 = KernelSpec::helmholtz(2, Layer::Single, 1.0);
        let m: Mat<Complex64> = eval_block(&h2, &ps(2, &[0.0, 0.0]), &ps(2, &[1.0, 0.0])).unwrap();
        let want = Complex64::new(-0.022_064_241_053_919_24, 0.191_299_421_639_491_65);
        assert!((m[(0, 0)] - want).norm() < 1e-15, "{}", m[(0, 0)]);
    }

    #[test]
    fn double_layer_on_circle_is_constant() {
        let c = shapes::circle(32);
        let x = ps(2, &[1.0, 0.0]);
        let spec = KernelSpec::laplace(2, Layer::Double);
        let src = PointSet::new(2, c.coords().to_vec())
            .unwrap()
            .with_normals(c.normals().unwrap().to_vec())
            .unwrap();
        let m: Mat<f64> = eval_block(&spec, &x, &src).unwrap();
        for j in 1..32 {
            assert!((m[(0, j)] + 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
        // Coincident pair: zero by default, curvature limit on request.
        assert_eq!(m[(0, 0)], 0.0);
        let with_curv = src.with_curvature(vec![1.0; 32]).unwrap();
        let spec = spec.with_self_interaction(SelfInteraction::CurvatureLimit);
        let m: Mat<f64> = eval_block(&spec, &x, &with_curv).unwrap();
        assert!((m[(0, 0)] + 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn weights_scale_columns() {
        let spec = KernelSpec::laplace(2, Layer::Single);
        let t = ps(2, &[0.0, 0.0]);
        let s = ps(2, &[2.0, 0.0, 0.0, 3.0]);
        let a: Mat<f64> = eval_block(&spec, &t, &s).unwrap();
        let b: Mat<f64> = eval_block(&spec, &t, &s.clone().with_weights(vec![0.5, 2.0]).unwrap()).unwrap();
        assert!((b[(0, 0)] - 0.5 * a[(0, 0)]).abs() < 1e-16);
        assert!((b[(0, 1)] - 2.0 * a[(0, 1)]).abs() < 1e-16);
    }

    #[test]
    fn errors() {
        let spec = KernelSpec::laplace(3, Layer::Single);
        let p2 = ps(2, &[0.0, 0.0]);
        assert!(eval_block::<f64>(&spec, &p2, &p2).is_err());
        let dbl = KernelSpec::laplace(2, Layer::Double);
        assert!(eval_block::<f64>(&dbl, &p2, &p2).is_err());
        let h = KernelSpec::helmholtz(2, Layer::Single, 1.0);
        assert!(eval_block::<f64>(&h, &p2, &p2).is_err());
        assert!(KernelSpec::helmholtz(2, Layer::Single, 0.0).validate().is_err());
        assert!(KernelSpec::parse("stokes", 0.0).is_err());
    }

    #[test]
    fn adjoint_double_layer_is_transpose() {
        let c = shapes::circle(16);
        for spec in [KernelSpec::laplace(2, Layer::Double), KernelSpec::helmholtz(2, Layer::Double, 3.0)] {
            let a: Mat<Complex64> = eval_block(&spec, &c, &c).unwrap();
            let b: Mat<Complex64> = eval_block(&spec.with_layer(Layer::DoubleAdjoint), &c, &c).unwrap();
            // Weights are uniform on the circle, so K'ᵀ = K.
            assert!(a.sub(&b.transpose()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn helmholtz_3d_radial_derivative() {
        let spec = KernelSpec::helmholtz(3, Layer::Single, 2.5);
        let r = 0.7;
        let h = 1e-6;
        let (_, d) = spec.radial(r);
        let fd = (spec.radial(r + h).0 - spec.radial(r - h).0) / (2.0 * h);
        assert!((d - fd).norm() < 1e-8);
        let spec = KernelSpec::helmholtz(2, Layer::Single, 2.5);
        let (_, d) = spec.radial(r);
        let fd = (spec.radial(r + h).0 - spec.radial(r - h).0) / (2.0 * h);
        assert!((d - fd).norm() < 1e-8);
    }
}
