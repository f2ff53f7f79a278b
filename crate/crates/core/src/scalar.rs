//! Scalar field abstraction.
//!
//! All dense linear algebra in the crate is written once against [`Scalar`],
//! which covers `f32`, `f64`, `Complex<f32>` and `Complex<f64>`. Geometry and
//! kernel arithmetic always run in `f64`; results are narrowed into the target
//! field with [`Scalar::from_parts`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Field over which matrices are stored and factored.
pub trait Scalar:
    Copy + Send + Sync + Debug + Display + PartialEq + NumAssign + std::ops::Neg<Output = Self> + Sum + 'static
{
    /// Underlying real type.
    type Real: RealScalar;

    const IS_COMPLEX: bool;
    /// One-byte tag used by the binary containers.
    const TAG: u8;

    fn from_real(r: Self::Real) -> Self;
    /// Builds a value from `f64` parts; real fields drop the imaginary part.
    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn conj(self) -> Self;
    fn abs(self) -> Self::Real;
    fn abs_sqr(self) -> Self::Real;
    fn is_finite(self) -> bool;

    fn from_f64(x: f64) -> Self {
        Self::from_parts(x, 0.0)
    }

    fn to_parts(self) -> (f64, f64) {
        (
            self.re().to_f64().unwrap_or(f64::NAN),
            self.im().to_f64().unwrap_or(f64::NAN),
        )
    }

    fn scale(self, r: Self::Real) -> Self {
        self * Self::from_real(r)
    }

    /// `c <- alpha * a * b + beta * c` on column-major storage.
    ///
    /// # Safety
    /// Same contract as `matrixmultiply::dgemm`: the pointers and strides must
    /// describe valid, non-overlapping (for `c`) matrices of the given shape.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

/// Real scalar types.
pub trait RealScalar: Scalar<Real = Self> + Float + FloatConst + FromPrimitive + ToPrimitive + PartialOrd {
    /// Machine epsilon as `f64`.
    fn eps_f64() -> f64 {
        Self::epsilon().to_f64().unwrap_or(f64::EPSILON)
    }
}

macro_rules! impl_real {
    ($t:ty, $tag:expr, $gemm:path) => {
        impl Scalar for $t {
            type Real = $t;
            const IS_COMPLEX: bool = false;
            const TAG: u8 = $tag;

            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn from_parts(re: f64, _im: f64) -> Self {
                re as $t
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn abs(self) -> $t {
                <$t>::abs(self)
            }
            #[inline]
            fn abs_sqr(self) -> $t {
                self * self
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }

            unsafe fn gemm_raw(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: *const Self,
                rsa: isize,
                csa: isize,
                b: *const Self,
                rsb: isize,
                csb: isize,
                beta: Self,
                c: *mut Self,
                rsc: isize,
                csc: isize,
            ) {
                $gemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
            }
        }

        impl RealScalar for $t {}
    };
}

impl_real!(f32, 1, matrixmultiply::sgemm);
impl_real!(f64, 2, matrixmultiply::dgemm);

macro_rules! impl_complex {
    ($r:ty, $tag:expr, $gemm:path) => {
        impl Scalar for Complex<$r> {
            type Real = $r;
            const IS_COMPLEX: bool = true;
            const TAG: u8 = $tag;

            #[inline]
            fn from_real(r: $r) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn from_parts(re: f64, im: f64) -> Self {
                Complex::new(re as $r, im as $r)
            }
            #[inline]
            fn re(self) -> $r {
                self.re
            }
            #[inline]
            fn im(self) -> $r {
                self.im
            }
            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn abs(self) -> $r {
                self.norm()
            }
            #[inline]
            fn abs_sqr(self) -> $r {
                self.norm_sqr()
            }
            #[inline]
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
            #[inline]
            fn scale(self, r: $r) -> Self {
                Complex::new(self.re * r, self.im * r)
            }

            unsafe fn gemm_raw(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: *const Self,
                rsa: isize,
                csa: isize,
                b: *const Self,
                rsb: isize,
                csb: isize,
                beta: Self,
                c: *mut Self,
                rsc: isize,
                csc: isize,
            ) {
                // Complex<T> is repr(C) {re, im}, the layout matrixmultiply expects.
                $gemm(
                    matrixmultiply::CGemmOption::Standard,
                    matrixmultiply::CGemmOption::Standard,
                    m,
                    k,
                    n,
                    [alpha.re, alpha.im],
                    a as *const [$r; 2],
                    rsa,
                    csa,
                    b as *const [$r; 2],
                    rsb,
                    csb,
                    [beta.re, beta.im],
                    c as *mut [$r; 2],
                    rsc,
                    csc,
                )
            }
        }
    };
}

impl_complex!(f32, 3, matrixmultiply::cgemm);
impl_complex!(f64, 4, matrixmultiply::zgemm);

/// Converts a real-typed value to `f64`.
#[inline]
pub fn real_to_f64<R: RealScalar>(r: R) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Converts an `f64` into a real type.
#[inline]
pub fn real_from_f64<R: RealScalar>(x: f64) -> R {
    <R as FromPrimitive>::from_f64(x).unwrap_or_else(R::nan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn real_fields_drop_imaginary_part() {
        assert_eq!(<f64 as Scalar>::from_parts(1.5, 2.0), 1.5);
        assert_eq!(<f32 as Scalar>::from_parts(-0.25, 9.0), -0.25f32);
        let z = Complex64::from_parts(1.0, -2.0);
        assert_eq!(z.conj(), Complex64::new(1.0, 2.0));
        assert_eq!(z.abs_sqr(), 5.0);
    }

    #[test]
    fn complex_gemm_matches_naive() {
        let a = [Complex64::new(1.0, 2.0), Complex64::new(0.5, -1.0)]; // 2x1
        let b = [Complex64::new(3.0, -1.0), Complex64::new(0.0, 1.0)]; // 1x2
        let mut c = [Complex64::new(0.0, 0.0); 4];
        unsafe {
            Complex64::gemm_raw(
                2,
                1,
                2,
                Complex64::new(1.0, 0.0),
                a.as_ptr(),
                1,
                2,
                b.as_ptr(),
                1,
                1,
                Complex64::new(0.0, 0.0),
                c.as_mut_ptr(),
                1,
                2,
            );
        }
        for j in 0..2 {
            for i in 0..2 {
                assert!((c[i + 2 * j] - a[i] * b[j]).norm() < 1e-15);
            }
        }
    }
}
