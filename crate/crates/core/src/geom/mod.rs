//! Point sets and the adaptive orthtree.

mod io;
mod tree;

pub use io::{read_binary, read_text, write_binary, write_text};
pub use tree::{build_tree, Node, OrthTree, MAX_TREE_DEPTH};

use crate::error::{invalid, Result};

/// Points in 2D or 3D with optional normals, quadrature weights and curvature.
///
/// Coordinates are stored row-major, `dim` values per point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    normals: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    curvature: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return invalid(format!("dimension must be 2 or 3, got {dim}"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return invalid(format!("{} coordinates do not form a nonempty {dim}D point set", coords.len()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return invalid(format!("non-finite coordinate at point {}", i / dim));
        }
        Ok(Self {
            dim,
            coords,
            normals: None,
            weights: None,
            curvature: None,
        })
    }

    /// Builds from a list of points, each a slice of length `dim`.
    pub fn from_points(dim: usize, points: &[impl AsRef<[f64]>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return invalid(format!("point {i} has {} coordinates, expected {dim}", p.len()));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn with_normals(mut self, normals: Vec<f64>) -> Result<Self> {
        if normals.len() != self.coords.len() {
            return invalid("normals must have one row per point");
        }
        for (i, nu) in normals.chunks(self.dim).enumerate() {
            let len = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !((len - 1.0).abs() <= 1e-12) {
                return invalid(format!("normal {i} has length {len}, expected 1"));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return invalid("weights must have one entry per point");
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return invalid("non-finite quadrature weight");
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Signed curvature per point, used by the curvature-limit diagonal.
    pub fn with_curvature(mut self, curvature: Vec<f64>) -> Result<Self> {
        if curvature.len() != self.len() {
            return invalid("curvature must have one entry per point");
        }
        self.curvature = Some(curvature);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normal(&self, i: usize) -> Option<&[f64]> {
        self.normals.as_ref().map(|n| &n[i * self.dim..(i + 1) * self.dim])
    }

    pub fn weight(&self, i: usize) -> Option<f64> {
        self.weights.as_ref().map(|w| w[i])
    }

    pub fn curvature(&self, i: usize) -> Option<f64> {
        self.curvature.as_ref().map(|c| c[i])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn normals(&self) -> Option<&[f64]> {
        self.normals.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn curvatures(&self) -> Option<&[f64]> {
        self.curvature.as_deref()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// The points at `idx`, in that order, with all attributes.
    pub fn select(&self, idx: &[usize]) -> PointSet {
        let d = self.dim;
        let pick = |v: &Vec<f64>, w: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(idx.len() * w);
            for &i in idx {
                out.extend_from_slice(&v[i * w..(i + 1) * w]);
            }
            out
        };
        PointSet {
            dim: d,
            coords: pick(&self.coords, d),
            normals: self.normals.as_ref().map(|n| pick(n, d)),
            weights: self.weights.as_ref().map(|w| pick(w, 1)),
            curvature: self.curvature.as_ref().map(|c| pick(c, 1)),
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.coords.chunks(d) {
            for a in 0..d {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    /// Largest extent of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

/// Deterministic point clouds used by tests, benchmarks and the CLI.
pub mod shapes {
    use super::PointSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// `n` equispaced points on the unit circle, with outward normals and
    /// arclength weights.
    pub fn circle(n: usize) -> PointSet {
        let mut c = Vec::with_capacity(2 * n);
        let mut nu = Vec::with_capacity(2 * n);
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let (s, co) = t.sin_cos();
            c.extend_from_slice(&[co, s]);
            nu.extend_from_slice(&[co, s]);
        }
        PointSet::new(2, c)
            .and_then(|p| p.with_normals(nu))
            .and_then(|p| p.with_weights(vec![2.0 * PI / n as f64; n]))
            .and_then(|p| p.with_curvature(vec![1.0; n]))
            .expect("circle is valid")
    }

    /// `n` uniform random points in the unit square `[0, 1]^2`.
    pub fn square(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        PointSet::new(2, c).expect("square is valid")
    }

    /// `n` uniform random points in the unit cube `[0, 1]^3`.
    pub fn cube(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..3 * n).map(|_| rng.random::<f64>()).collect();
        PointSet::new(3, c).expect("cube is valid")
    }

    /// `n` points on the unit sphere along a Fibonacci spiral, with outward
    /// normals and equal area weights.
    pub fn sphere(n: usize) -> PointSet {
        let pts = fibonacci_sphere(n);
        let w = 4.0 * PI / n as f64;
        PointSet::new(3, pts.clone())
            .and_then(|p| p.with_normals(pts))
            .and_then(|p| p.with_weights(vec![w; n]))
            .expect("sphere is valid")
    }

    /// Unit vectors on a spherical Fibonacci spiral, row-major.
    pub fn fibonacci_sphere(n: usize) -> Vec<f64> {
        let golden = PI * (3.0 - 5f64.sqrt());
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            let (x, y) = (r * c, r * s);
            let len = (x * x + y * y + z * z).sqrt();
            out.extend_from_slice(&[x / len, y / len, z / len]);
        }
        out
    }
}
