//! Second-kind boundary integral equations on closed planar curves.
//!
//! The interior Dirichlet problem is posed as `-σ/2 + Dσ = f` with `D` the
//! double layer `∂G/∂ν_y`. The exterior sound-hard scattering problem uses a
//! single-layer representation and the Neumann trace `-σ/2 + K'σ = -∂u_i/∂ν`,
//! with `K'` the adjoint double layer `∂G/∂ν_x`.

mod curve;

pub use curve::{Curve2D, Parametrization};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geom::{build_tree, PointSet};
use crate::kernels::{Equation, KernelEval, KernelSpec, Layer, SelfInteraction};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::skel::{compress, mean_weight, proxy_sources_for, proxy_targets_for, CompressOptions, KernelMatrix};
use crate::solver::{factor, FactoredInverse};

/// Tenth-order corrections for a logarithmic singularity at the origin of
/// the periodic trapezoid rule: the weight of the node `l` steps away on
/// either side is multiplied by `1 + γ_l`, and the singular node is dropped.
/// Values from the log-singular table of Kapur and Rokhlin (SIAM J. Numer.
/// Anal. 34, 1997).
pub const KAPUR_ROKHLIN_10: [f64; 10] = [
    7.832_432_020_568_779,
    -45.651_616_703_747_486,
    145.216_884_635_467_76,
    -290.134_830_288_637_9,
    387.086_216_257_99,
    -352.382_138_357_068,
    217.242_154_751_934_25,
    -87.077_960_873_829_9,
    20.535_842_660_726_346,
    -2.166_984_103_403_822_8,
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Quadrature {
    /// Plain trapezoid rule with the smooth diagonal limit. Only suitable for
    /// kernels that are smooth on the curve (2D Laplace double layers).
    #[default]
    PlainTrapezoid,
    KapurRokhlin10,
}

impl Quadrature {
    fn corrections(self) -> &'static [f64] {
        match self {
            Quadrature::PlainTrapezoid => &[],
            Quadrature::KapurRokhlin10 => &KAPUR_ROKHLIN_10,
        }
    }
}

/// Nyström discretization `A = c·I + K` of a layer potential on one or more
/// closed curves, with `K_ij = G'(x_i, x_j)·w_j` plus local quadrature
/// corrections.
#[derive(Clone, Debug)]
pub struct BieSystem {
    curves: Vec<Curve2D>,
    offsets: Vec<usize>,
    curve_of: Vec<usize>,
    points: PointSet,
    ev: KernelEval,
    identity: f64,
    quad: Quadrature,
    reach: f64,
}

impl BieSystem {
    pub fn new(curves: Vec<Curve2D>, spec: KernelSpec, identity: f64, quad: Quadrature) -> Result<Self> {
        spec.validate()?;
        if spec.dim != 2 {
            return invalid("boundary integral systems are planar");
        }
        if curves.is_empty() {
            return invalid("no curves given");
        }
        if !identity.is_finite() {
            return invalid("identity coefficient must be finite");
        }
        let m = quad.corrections().len();
        if let Some(c) = curves.iter().find(|c| c.len() <= 2 * m + 1) {
            return invalid(format!("quadrature corrections need more than {} nodes per curve, got {}", 2 * m + 1, c.len()));
        }
        let self_interaction = match quad {
            Quadrature::PlainTrapezoid => SelfInteraction::CurvatureLimit,
            Quadrature::KapurRokhlin10 => SelfInteraction::Zero,
        };
        let spec = spec.with_self_interaction(self_interaction);
        let mut offsets = vec![0];
        let mut curve_of = Vec::new();
        let (mut c, mut nu, mut w, mut k) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut reach: f64 = 0.0;
        for (ci, curve) in curves.iter().enumerate() {
            let p = curve.points();
            c.extend_from_slice(p.coords());
            nu.extend_from_slice(p.normals().expect("curves carry normals"));
            w.extend_from_slice(p.weights().expect("curves carry weights"));
            k.extend_from_slice(p.curvatures().expect("curves carry curvature"));
            curve_of.extend(std::iter::repeat_n(ci, curve.len()));
            offsets.push(offsets[ci] + curve.len());
            let n = curve.len();
            for i in 0..n {
                for d in 1..=m {
                    reach = reach.max(curve::dist(curve.node(i), curve.node((i + d) % n)));
                }
            }
        }
        let points = PointSet::new(2, c)?.with_normals(nu)?.with_weights(w)?.with_curvature(k)?;
        let scale = points.diameter();
        Ok(Self {
            curves,
            offsets,
            curve_of,
            ev: KernelEval::new(spec, scale),
            points,
            identity,
            quad,
            reach,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.ev.spec
    }

    pub fn curves(&self) -> &[Curve2D] {
        &self.curves
    }

    /// Start index of each curve's unknowns, followed by the total.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad
    }

    pub fn identity(&self) -> f64 {
        self.identity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let mut v = self.ev.entry(&self.points, i, &self.points, j);
        if i == j {
            return v + self.identity;
        }
        let c = self.curve_of[i];
        let gam = self.quad.corrections();
        if !gam.is_empty() && c == self.curve_of[j] {
            let n = self.curves[c].len();
            let d = (i as isize - j as isize).unsigned_abs();
            let d = d.min(n - d);
            if d <= gam.len() {
                v *= 1.0 + gam[d - 1];
            }
        }
        v
    }

    pub fn dense<T: Scalar>(&self) -> Mat<T> {
        let all: Vec<usize> = (0..self.len()).collect();
        KernelMatrix::<T>::entries(self, &all, &all)
    }

    /// The diagonal block of curve `c` as a system of its own.
    pub fn curve_system(&self, c: usize) -> Result<BieSystem> {
        let curve = self
            .curves
            .get(c)
            .ok_or_else(|| Error::InvalidInput(format!("no curve {c}")))?
            .clone();
        BieSystem::new(vec![curve], self.ev.spec, self.identity, self.quad)
    }

    /// Single-layer field `Σ_j G(x, y_j) w_j σ_j` at off-curve points.
    pub fn eval_single_layer<T: Scalar>(&self, density: &[T], targets: &[[f64; 2]]) -> Result<Vec<T>> {
        if density.len() != self.len() {
            return invalid(format!("density length {} differs from {}", density.len(), self.len()));
        }
        let g = self.ev.spec.with_layer(Layer::Single);
        evaluate(&g, &self.points, density, targets)
    }

    /// Right-hand side `-∂u_i/∂ν` for the plane wave `u_i = exp(i k x₂)`.
    pub fn plane_wave_neumann_rhs(&self) -> Vec<Complex64> {
        let k = self.ev.spec.wavenumber;
        (0..self.len())
            .map(|i| {
                let x2 = self.points.point(i)[1];
                let n2 = self.points.normal(i).expect("curves carry normals")[1];
                -Complex64::new(0.0, k * n2) * Complex64::from_polar(1.0, k * x2)
            })
            .collect()
    }

    /// Compresses and factors each curve's diagonal block.
    pub fn precond_blocks(&self, opts: &CompressOptions, leaf_size: usize) -> Result<BlockPreconditioner> {
        let inverses = (0..self.curves.len())
            .map(|c| {
                let sys = self.curve_system(c)?;
                let tree = build_tree(&sys.points, leaf_size)?;
                let cm = compress::<Complex64, _>(&sys, &tree, opts)?;
                factor(&cm)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockPreconditioner {
            offsets: self.offsets.clone(),
            inverses,
        })
    }
}

impl<T: Scalar> KernelMatrix<T> for BieSystem {
    fn size(&self) -> usize {
        self.len()
    }

    fn points(&self) -> &PointSet {
        &self.points
    }

    fn entries(&self, rows: &[usize], cols: &[usize]) -> Mat<T> {
        let mut m = Mat::zeros(rows.len(), cols.len());
        for (b, &j) in cols.iter().enumerate() {
            let col = m.col_mut(b);
            for (a, &i) in rows.iter().enumerate() {
                let v = self.entry(i, j);
                col[a] = T::from_parts(v.re, v.im);
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

    fn correction_reach(&self) -> f64 {
        self.reach
    }

    fn weight_scale(&self, cols: &[usize]) -> f64 {
        mean_weight(&self.points, cols)
    }
}

/// Block-diagonal preconditioner built from per-curve factored inverses.
#[derive(Clone, Debug)]
pub struct BlockPreconditioner {
    offsets: Vec<usize>,
    inverses: Vec<FactoredInverse<Complex64>>,
}

impl BlockPreconditioner {
    pub fn inverses(&self) -> &[FactoredInverse<Complex64>] {
        &self.inverses
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = *self.offsets.last().expect("offsets are nonempty");
        if v.len() != n {
            return invalid(format!("vector length {} differs from {n}", v.len()));
        }
        let mut out = Vec::with_capacity(n);
        for (c, fi) in self.inverses.iter().enumerate() {
            out.extend(fi.solve(&v[self.offsets[c]..self.offsets[c + 1]])?);
        }
        Ok(out)
    }
}

/// Interior Dirichlet system `-σ/2 + Dσ = f`.
///
/// Helmholtz kernels need the corrected rule; the Laplace double layer is
/// smooth and works with either.
pub fn discretize_dirichlet(curve: &Curve2D, spec: &KernelSpec, quad: Quadrature) -> Result<BieSystem> {
    if spec.equation == Equation::Helmholtz && quad == Quadrature::PlainTrapezoid {
        return invalid("the Helmholtz double layer is log-singular; use the corrected quadrature");
    }
    BieSystem::new(vec![curve.clone()], spec.with_layer(Layer::Double), -0.5, quad)
}

/// Boundary values `strength·G(x_i, s)` of a point source outside the curve.
pub fn point_source_data<T: Scalar>(curve: &Curve2D, source: [f64; 2], strength: f64, spec: &KernelSpec) -> Result<Vec<T>> {
    spec.validate()?;
    check_field::<T>(spec)?;
    if spec.dim != 2 {
        return invalid("point sources for curves are planar");
    }
    if curve.contains(source) || curve.node_distance(source) == 0.0 {
        return invalid(format!("source {source:?} is not outside the curve"));
    }
    let g = spec.with_layer(Layer::Single);
    Ok((0..curve.len())
        .map(|i| {
            let v = g.value(&curve.node(i), None, &source, None) * strength;
            T::from_parts(v.re, v.im)
        })
        .collect())
}

/// Target closer to the curve than the quadrature resolves.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyWarning {
    pub target: usize,
    pub distance: f64,
    pub spacing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldEval<T> {
    pub values: Vec<T>,
    pub warnings: Vec<AccuracyWarning>,
}

/// Double-layer potential `u(x) = Σ_j ∂G/∂ν_y(x, y_j) w_j σ_j` at interior
/// targets. Targets within two node spacings of the curve are evaluated but
/// flagged.
pub fn eval_interior<T: Scalar>(
    curve: &Curve2D,
    density: &[T],
    spec: &KernelSpec,
    targets: &[[f64; 2]],
) -> Result<FieldEval<T>> {
    spec.validate()?;
    if density.len() != curve.len() {
        return invalid(format!("density length {} differs from {}", density.len(), curve.len()));
    }
    let spacing = curve.max_spacing();
    let mut warnings = Vec::new();
    for (t, &x) in targets.iter().enumerate() {
        if !curve.contains(x) {
            return invalid(format!("target {t} at {x:?} is not inside the curve"));
        }
        let distance = curve.node_distance(x);
        if distance < 2.0 * spacing {
            warnings.push(AccuracyWarning { target: t, distance, spacing });
        }
    }
    let values = evaluate(&spec.with_layer(Layer::Double), curve.points(), density, targets)?;
    Ok(FieldEval { values, warnings })
}

fn check_field<T: Scalar>(spec: &KernelSpec) -> Result<()> {
    if spec.is_complex() && !T::IS_COMPLEX {
        return invalid("complex kernel requested with a real scalar type");
    }
    Ok(())
}

fn evaluate<T: Scalar>(spec: &KernelSpec, pts: &PointSet, density: &[T], targets: &[[f64; 2]]) -> Result<Vec<T>> {
    check_field::<T>(spec)?;
    Ok(targets
        .par_iter()
        .map(|x| {
            let mut acc = T::zero();
            for (j, &s) in density.iter().enumerate() {
                let v = spec.value(x, None, pts.point(j), pts.normal(j)) * pts.weight(j).unwrap_or(1.0);
                acc += T::from_parts(v.re, v.im) * s;
            }
            acc
        })
        .collect())
}

/// Sound-hard multiple scattering system for disjoint curves at wavenumber `k`.
pub fn scattering_system(scatterers: &[Curve2D], k: f64) -> Result<BieSystem> {
    for (a, ca) in scatterers.iter().enumerate() {
        for cb in &scatterers[a + 1..] {
            let ([alo, ahi], [blo, bhi]) = (ca.bounding_box(), cb.bounding_box());
            let boxes_meet = alo[0] <= bhi[0] && blo[0] <= ahi[0] && alo[1] <= bhi[1] && blo[1] <= ahi[1];
            if !boxes_meet {
                continue;
            }
            let inside = |p: &Curve2D, q: &Curve2D| (0..q.len()).any(|i| p.contains(q.node(i)));
            if inside(ca, cb) || inside(cb, ca) {
                return invalid("scatterers overlap");
            }
        }
    }
    BieSystem::new(
        scatterers.to_vec(),
        KernelSpec::helmholtz(2, Layer::DoubleAdjoint, k),
        -0.5,
        Quadrature::KapurRokhlin10,
    )
}
