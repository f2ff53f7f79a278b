//! Bessel functions of the first and second kind, orders 0 and 1, for
//! positive real arguments.
//!
//! Small arguments use Miller's backward recurrence normalised by the
//! Neumann sum `J0 + 2 Σ J2k = 1`, with `Y0` and `Y1` built from the same
//! sequence. Large arguments use the Hankel asymptotic expansion.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{invalid, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Above this argument the asymptotic series converges to full precision.
const ASYMPTOTIC_FROM: f64 = 25.0;

/// `[J0(z), Y0(z), J1(z), Y1(z)]` for `z > 0`.
pub fn bessel_jy01(z: f64) -> [f64; 4] {
    debug_assert!(z > 0.0);
    if z >= ASYMPTOTIC_FROM {
        asymptotic(z)
    } else {
        miller(z)
    }
}

/// `H0(z) = J0(z) + i Y0(z)`, the order-zero Hankel function of the first kind.
pub fn bessel_h0(z: f64) -> Result<Complex64> {
    check(z)?;
    let [j0, y0, _, _] = bessel_jy01(z);
    Ok(Complex64::new(j0, y0))
}

/// `H1(z) = J1(z) + i Y1(z)`.
pub fn bessel_h1(z: f64) -> Result<Complex64> {
    check(z)?;
    let [_, _, j1, y1] = bessel_jy01(z);
    Ok(Complex64::new(j1, y1))
}

fn check(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return invalid(format!("Hankel functions need a positive finite argument, got {z}"));
    }
    Ok(())
}

fn miller(z: f64) -> [f64; 4] {
    // Start well past the turning point so J_nstart is negligible.
    let nstart = 2 * ((z + 12.0 * z.sqrt().max(1.0) + 20.0) as usize / 2 + 1);
    let mut j = vec![0.0f64; nstart + 2];
    j[nstart] = 1e-30;
    for n in (1..=nstart).rev() {
        j[n - 1] = 2.0 * n as f64 / z * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in &mut j[n - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    let mut s0 = 0.0; // Σ (-1)^k J2k / k
    let mut s1 = 0.0; // Σ (-1)^k (J2k-1 - J2k+1) / k
    let mut k = 1;
    while 2 * k <= nstart {
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        norm += 2.0 * j[2 * k];
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let j0 = j[0] / norm;
    let j1 = j[1] / norm;
    let s0 = s0 / norm;
    let s1 = s1 / norm;
    let lg = (0.5 * z).ln() + EULER_GAMMA;
    let y0 = 2.0 / PI * (lg * j0 - 2.0 * s0);
    let y1 = 2.0 / PI * (-j0 / z + lg * j1 + s1);
    [j0, y0, j1, y1]
}

fn asymptotic(z: f64) -> [f64; 4] {
    let (p0, q0) = pq(0.0, z);
    let (p1, q1) = pq(1.0, z);
    let (s, c) = z.sin_cos();
    // cos/sin of z - pi/4 and z - 3pi/4, with z kept exact.
    let (c0, s0) = ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2);
    let (c1, s1) = ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2);
    let amp = (2.0 / (PI * z)).sqrt();
    [
        amp * (p0 * c0 - q0 * s0),
        amp * (p0 * s0 + q0 * c0),
        amp * (p1 * c1 - q1 * s1),
        amp * (p1 * s1 + q1 * c1),
    ]
}

/// Hankel's `P` and `Q` series for order `nu`, summed until the terms stop
/// decreasing or fall below roundoff.
fn pq(nu: f64, z: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        // a_k z^-k enters Q for odd k and P for even k, with alternating signs.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference values from 30-digit multiprecision evaluation.
    const TABLE: [(f64, [f64; 4]); 7] = [
        (1.0, [0.765_197_686_557_966_6, 0.088_256_964_215_676_96, 0.440_050_585_744_933_5, -0.781_212_821_300_288_7]),
        (10.0, [-0.245_935_764_451_348_35, 0.055_671_167_283_599_395, 0.043_472_746_168_861_44, 0.249_015_424_206_953_88]),
        (0.01, [0.999_975_000_156_249_5, -3.005_455_637_083_646, 0.004_999_937_500_260_416, -63.678_596_282_060_65]),
        (5.5, [-0.006_843_869_417_819_197, -0.339_480_592_881_911, -0.341_438_215_429_043_35, -0.023_758_238_956_389_618]),
        (20.0, [0.167_024_664_340_583_16, 0.062_640_596_809_383_83, 0.066_833_124_175_850_05, -0.165_511_614_362_521_3]),
        (100.0, [0.019_985_850_304_223_122, -0.077_244_313_365_083_15, -0.077_145_352_014_112_16, -0.020_372_312_002_759_792]),
        (700.0, [-0.006_288_272_465_068_767, 0.029_494_308_180_893_82, 0.029_489_824_084_030_333, 0.006_309_341_421_452_56]),
    ];

    #[test]
    fn matches_reference_table() {
        for &(z, want) in &TABLE {
            let got = bessel_jy01(z);
            let h0 = (want[0].hypot(want[1]), Complex64::new(got[0] - want[0], got[1] - want[1]).norm());
            let h1 = (want[2].hypot(want[3]), Complex64::new(got[2] - want[2], got[3] - want[3]).norm());
            assert!(h0.1 <= 1e-13 * h0.0, "H0({z}): {got:?} vs {want:?}");
            assert!(h1.1 <= 1e-13 * h1.0, "H1({z}): {got:?} vs {want:?}");
        }
    }

    #[test]
    fn small_argument_limits() {
        let z = 1e-6;
        let [j0, y0, _, _] = bessel_jy01(z);
        assert!((j0 - 1.0).abs() < 1e-12);
        let lead = 2.0 / PI * ((z / 2.0).ln() + EULER_GAMMA);
        assert!((y0 - lead).abs() < 1e-10 * lead.abs());
    }

    #[test]
    fn wronskian_across_the_switch() {
        // J1 Y0 - J0 Y1 = 2 / (pi z)
        for i in 1..400 {
            let z = 0.1 * i as f64;
            let [j0, y0, j1, y1] = bessel_jy01(z);
            let w = j1 * y0 - j0 * y1;
            assert!((w * PI * z / 2.0 - 1.0).abs() < 1e-12, "z={z} w={w}");
        }
    }

    #[test]
    fn large_argument_matches_leading_asymptotics() {
        let z = 10.0;
        let h = bessel_h0(z).unwrap();
        let lead = Complex64::from_polar((2.0 / (PI * z)).sqrt(), z - PI / 4.0);
        // The leading term alone is off by about 1/(8z); one correction
        // term brings it well inside 1e-2.
        let dev = (h - lead).norm() / h.norm();
        assert!((dev - 0.0124558).abs() < 1e-6, "{dev}");
        let corrected = lead * Complex64::new(1.0, -1.0 / (8.0 * z));
        assert!((h - corrected).norm() < 1e-3 * h.norm());
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_h0(0.0).is_err());
        assert!(bessel_h0(-1.0).is_err());
        assert!(bessel_h1(f64::NAN).is_err());
    }
}
