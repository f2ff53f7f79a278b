use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geom::PointSet;

/// A closed smooth planar curve sampled at `N` parameter-equispaced nodes,
/// counterclockwise, with outward normals.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve2D {
    points: PointSet,
}

/// Position, first and second derivative at parameter `t ∈ [0, 2π)`.
pub type Parametrization<'a> = &'a dyn Fn(f64) -> ([f64; 2], [f64; 2], [f64; 2]);

impl Curve2D {
    /// Samples `x(t)` at `t_i = 2πi/N`. Normals, signed curvature and
    /// trapezoid weights `|x'(t_i)|·2π/N` come from the derivatives.
    pub fn from_parametrization(n: usize, x: Parametrization<'_>) -> Result<Self> {
        if n < 3 {
            return invalid(format!("a closed curve needs at least 3 nodes, got {n}"));
        }
        let h = 2.0 * PI / n as f64;
        let mut c = Vec::with_capacity(2 * n);
        let mut nu = Vec::with_capacity(2 * n);
        let mut w = Vec::with_capacity(n);
        let mut kappa = Vec::with_capacity(n);
        for i in 0..n {
            let (p, d1, d2) = x(h * i as f64);
            let speed = d1[0].hypot(d1[1]);
            if !(speed > 0.0 && speed.is_finite()) {
                return invalid(format!("parametrization is singular at node {i}"));
            }
            c.extend_from_slice(&p);
            nu.extend_from_slice(&[d1[1] / speed, -d1[0] / speed]);
            w.push(speed * h);
            kappa.push((d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3));
        }
        let points = PointSet::new(2, c)?
            .with_normals(nu)?
            .with_weights(w)?
            .with_curvature(kappa)?;
        let curve = Self { points };
        if curve.signed_area() <= 0.0 {
            return invalid("curve must be traversed counterclockwise");
        }
        Ok(curve)
    }

    /// Ellipse with semi-axes `a` (along x) and `b`.
    pub fn ellipse(a: f64, b: f64, center: [f64; 2], n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return invalid(format!("ellipse semi-axes must be positive, got {a} and {b}"));
        }
        Self::from_parametrization(n, &|t: f64| {
            let (s, co) = t.sin_cos();
            (
                [center[0] + a * co, center[1] + b * s],
                [-a * s, b * co],
                [-a * co, -b * s],
            )
        })
    }

    pub fn circle(radius: f64, center: [f64; 2], n: usize) -> Result<Self> {
        Self::ellipse(radius, radius, center, n)
    }

    /// Three-lobed radial curve `r(θ) = scale·(2 + cos 3(θ − θ0))/6`.
    pub fn trefoil(center: [f64; 2], scale: f64, rotation: f64, n: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return invalid(format!("trefoil scale must be positive, got {scale}"));
        }
        Self::from_parametrization(n, &|t: f64| {
            let u = 3.0 * (t - rotation);
            let r = scale * (2.0 + u.cos()) / 6.0;
            let r1 = -scale * u.sin() / 2.0;
            let r2 = -1.5 * scale * u.cos();
            let (s, co) = t.sin_cos();
            (
                [center[0] + r * co, center[1] + r * s],
                [r1 * co - r * s, r1 * s + r * co],
                [(r2 - r) * co - 2.0 * r1 * s, (r2 - r) * s + 2.0 * r1 * co],
            )
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodes with normals, weights and curvature.
    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        let p = self.points.point(i);
        [p[0], p[1]]
    }

    pub fn normal(&self, i: usize) -> [f64; 2] {
        let p = self.points.normal(i).expect("curves carry normals");
        [p[0], p[1]]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.points.weight(i).expect("curves carry weights")
    }

    pub fn curvature(&self, i: usize) -> f64 {
        self.points.curvature(i).expect("curves carry curvature")
    }

    /// Trapezoid approximation of the perimeter.
    pub fn length(&self) -> f64 {
        (0..self.len()).map(|i| self.weight(i)).sum()
    }

    /// Largest distance between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| dist(self.node(i), self.node((i + 1) % n))).fold(0.0, f64::max)
    }

    /// Shoelace area of the node polygon.
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (self.node(i), self.node((i + 1) % n));
                p[0] * q[1] - p[1] * q[0]
            })
            .sum::<f64>()
    }

    /// Winding number of the node polygon around `x` (0 outside, 1 inside).
    pub fn winding_number(&self, x: [f64; 2]) -> i64 {
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            let (p, q) = (self.node(i), self.node((i + 1) % n));
            let a = (p[1] - x[1]).atan2(p[0] - x[0]);
            let b = (q[1] - x[1]).atan2(q[0] - x[0]);
            let mut d = b - a;
            if d > PI {
                d -= 2.0 * PI;
            } else if d < -PI {
                d += 2.0 * PI;
            }
            total += d;
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.winding_number(x) != 0
    }

    /// Distance from `x` to the nearest node.
    pub fn node_distance(&self, x: [f64; 2]) -> f64 {
        (0..self.len()).map(|i| dist(x, self.node(i))).fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box of the nodes, `[min, max]`.
    pub fn bounding_box(&self) -> [[f64; 2]; 2] {
        let (lo, hi) = self.points.bounds();
        [[lo[0], lo[1]], [hi[0], hi[1]]]
    }

    pub fn diameter(&self) -> f64 {
        self.points.diameter()
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
