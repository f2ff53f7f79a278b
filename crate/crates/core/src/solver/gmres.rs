use crate::error::Error;
use crate::linalg::{dot_c, norm2};
use crate::scalar::{real_to_f64, Scalar};

/// Second-pass orthogonalization kicks in when a leftover projection exceeds
/// this fraction of the vector norm.
const REORTH_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GmresOutput<T> {
    pub x: Vec<T>,
    /// Operator applications performed.
    pub iterations: usize,
    /// True relative residual `‖b − A x‖ / ‖b‖`.
    pub residual: f64,
    /// Estimated relative residual after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug)]
pub enum GmresError<T> {
    Invalid(Error),
    NotConverged {
        best: Vec<T>,
        iterations: usize,
        residual: f64,
    },
}

impl<T> From<GmresError<T>> for Error {
    fn from(e: GmresError<T>) -> Self {
        match e {
            GmresError::Invalid(e) => e,
            GmresError::NotConverged {
                iterations, residual, ..
            } => Error::NotConverged { iterations, residual },
        }
    }
}

impl<T> std::fmt::Display for GmresError<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GmresError::Invalid(e) => write!(f, "{e}"),
            GmresError::NotConverged {
                iterations, residual, ..
            } => write!(f, "GMRES did not converge after {iterations} iterations (residual {residual:.3e})"),
        }
    }
}

impl<T: std::fmt::Debug> std::error::Error for GmresError<T> {}

/// Full (unrestarted) GMRES with right preconditioning `A M⁻¹ u = b`,
/// `x = M⁻¹ u`, starting from zero.
///
/// Stops at the first iterate whose estimated relative residual is at most
/// `tol`.
pub fn gmres<T, A, P>(
    apply: A,
    b: &[T],
    tol: f64,
    max_iter: usize,
    precond: Option<P>,
) -> std::result::Result<GmresOutput<T>, GmresError<T>>
where
    T: Scalar,
    A: Fn(&[T]) -> Vec<T>,
    P: Fn(&[T]) -> Vec<T>,
{
    let invalid = |m: String| GmresError::Invalid(Error::InvalidInput(m));
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(GmresOutput {
            x: vec![T::zero(); n],
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
        });
    }
    let check = |v: Vec<T>, what: &str| {
        if v.len() == n {
            Ok(v)
        } else {
            Err(invalid(format!("{what} returned length {} for size {n}", v.len())))
        }
    };
    let precond_apply = |v: &[T]| match &precond {
        Some(p) => check(p(v), "preconditioner"),
        None => Ok(v.to_vec()),
    };

    let inv_b = T::from_f64(1.0 / bnorm);
    let mut basis: Vec<Vec<T>> = vec![b.iter().map(|&v| v * inv_b).collect()];
    // Columns of the rotated Hessenberg matrix (upper triangular part).
    let mut hcols: Vec<Vec<T>> = Vec::new();
    let mut rot: Vec<(T, T)> = Vec::new();
    let mut g = vec![T::from_f64(bnorm)];
    let mut history = Vec::new();
    let max_iter = max_iter.min(n.max(1));
    let mut converged = false;

    for k in 0..max_iter {
        let mut w = check(apply(&precond_apply(&basis[k])?), "operator")?;
        let mut h = vec![T::zero(); k + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot_c(v, &w);
            axpy(-c, v, &mut w);
            h[i] = c;
        }
        let wn = norm2(&w);
        let mut second = Vec::with_capacity(basis.len());
        let mut worst = 0.0f64;
        for v in &basis {
            let c = dot_c(v, &w);
            worst = worst.max(real_to_f64(c.abs()));
            second.push(c);
        }
        if worst > REORTH_THRESHOLD * wn {
            for (i, (v, c)) in basis.iter().zip(second).enumerate() {
                axpy(-c, v, &mut w);
                h[i] += c;
            }
        }
        let wn = norm2(&w);
        h[k + 1] = T::from_f64(wn);

        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = c * a + s * bb;
            h[i + 1] = -s.conj() * a + c * bb;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        h[k] = c * h[k] + s * h[k + 1];
        h[k + 1] = T::zero();
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s.conj() * gk);
        rot.push((c, s));
        h.truncate(k + 1);
        hcols.push(h);

        let est = real_to_f64(g[k + 1].abs()) / bnorm;
        history.push(est);
        if est <= tol || wn == 0.0 {
            converged = true;
            break;
        }
        let inv = T::from_f64(1.0 / wn);
        w.iter_mut().for_each(|v| *v *= inv);
        basis.push(w);
    }

    let m = hcols.len();
    // Back substitution on the triangular system.
    let mut yv = g[..m].to_vec();
    for j in (0..m).rev() {
        let d = hcols[j][j];
        if d == T::zero() {
            yv[j] = T::zero();
            continue;
        }
        yv[j] /= d;
        let yj = yv[j];
        for i in 0..j {
            yv[i] -= hcols[j][i] * yj;
        }
    }
    let mut u = vec![T::zero(); n];
    for (v, &c) in basis.iter().zip(&yv) {
        axpy(c, v, &mut u);
    }
    let x = precond_apply(&u)?;
    let ax = check(apply(&x), "operator")?;
    let r: Vec<T> = b.iter().zip(&ax).map(|(&p, &q)| p - q).collect();
    let residual = norm2(&r) / bnorm;
    if converged {
        Ok(GmresOutput {
            x,
            iterations: m,
            residual,
            history,
        })
    } else {
        Err(GmresError::NotConverged {
            best: x,
            iterations: m,
            residual,
        })
    }
}

fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Rotation `[c s; -s̄ c]` with real `c` that zeroes `b` below `a`.
fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    let (aa, ba) = (real_to_f64(a.abs()), real_to_f64(b.abs()));
    if ba == 0.0 {
        return (T::one(), T::zero());
    }
    if aa == 0.0 {
        return (T::zero(), T::one());
    }
    let r = aa.hypot(ba);
    let c = T::from_f64(aa / r);
    let s = a * b.conj() * T::from_f64(1.0 / (aa * r));
    (c, s)
}
