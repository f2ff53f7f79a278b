use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geom::{shapes::fibonacci_sphere, PointSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxyConfig {
    /// Points per proxy surface; `None` picks a default from the dimension and
    /// wavenumber.
    pub n_proxy: Option<usize>,
    /// Multiplier on the circumradius of the 3^d neighbor supercell.
    pub radius_factor: f64,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self {
            n_proxy: None,
            radius_factor: 1.0,
        }
    }
}

impl ProxyConfig {
    pub fn with_points(n: usize) -> Self {
        Self {
            n_proxy: Some(n),
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let min = if dim == 2 { 8 } else { 32 };
        if let Some(n) = self.n_proxy {
            if n < min {
                return invalid(format!("need at least {min} proxy points in {dim}D, got {n}"));
            }
        }
        if !(self.radius_factor > 0.0 && self.radius_factor.is_finite()) {
            return invalid(format!("proxy radius factor must be positive, got {}", self.radius_factor));
        }
        Ok(())
    }

    pub fn radius(&self, half: f64, dim: usize) -> f64 {
        self.radius_factor * 3.0 * half * (dim as f64).sqrt()
    }

    /// Point count for a box, adding Nyquist-rate sampling for oscillatory
    /// kernels.
    pub fn count(&self, half: f64, dim: usize, wavenumber: f64) -> usize {
        match self.n_proxy {
            Some(n) => n,
            None => {
                let base = if dim == 2 { 64 } else { 512 };
                let r = self.radius(half, dim);
                base + (4.0 * wavenumber * r).ceil() as usize
            }
        }
    }
}

/// Proxy surface around a box: equispaced on a circle in 2D starting at angle
/// 0, a Fibonacci spiral on a sphere in 3D.
pub fn proxy_points(center: &[f64], half: f64, config: &ProxyConfig, dim: usize, wavenumber: f64) -> PointSet {
    let n = config.count(half, dim, wavenumber);
    let r = config.radius(half, dim);
    let mut c = Vec::with_capacity(n * dim);
    if dim == 2 {
        for j in 0..n {
            let (s, co) = (2.0 * PI * j as f64 / n as f64).sin_cos();
            c.extend_from_slice(&[center[0] + r * co, center[1] + r * s]);
        }
    } else {
        for u in fibonacci_sphere(n).chunks(3) {
            c.extend_from_slice(&[center[0] + r * u[0], center[1] + r * u[1], center[2] + r * u[2]]);
        }
    }
    PointSet::new(dim, c).expect("proxy points are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_points_on_unit_box() {
        let p = proxy_points(&[0.0, 0.0], 0.5, &ProxyConfig::with_points(8), 2, 0.0);
        assert_eq!(p.len(), 8);
        let r = 1.5 * 2f64.sqrt();
        let p4 = ProxyConfig {
            n_proxy: Some(4),
            radius_factor: 1.0,
        };
        let q = proxy_points(&[0.0, 0.0], 0.5, &p4, 2, 0.0);
        let want = [[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]];
        for (i, w) in want.iter().enumerate() {
            assert!((q.point(i)[0] - w[0]).abs() < 1e-15 && (q.point(i)[1] - w[1]).abs() < 1e-15);
        }
        assert!(p4.validate(2).is_err());
    }

    #[test]
    fn equidistant_from_center() {
        let c = [0.3, -0.2, 1.0];
        for dim in [2, 3] {
            let cfg = ProxyConfig::default();
            let p = proxy_points(&c[..dim], 0.25, &cfg, dim, 3.0);
            let r = cfg.radius(0.25, dim);
            for i in 0..p.len() {
                let d: f64 = p.point(i).iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                assert!((d - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_counts() {
        let cfg = ProxyConfig::default();
        assert_eq!(cfg.count(0.5, 2, 0.0), 64);
        assert_eq!(cfg.count(0.5, 3, 0.0), 512);
        let r = cfg.radius(0.5, 2);
        assert_eq!(cfg.count(0.5, 2, 10.0), 64 + (40.0 * r).ceil() as usize);
    }
}
