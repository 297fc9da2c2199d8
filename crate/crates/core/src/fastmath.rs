//! Scalar sine/cosine tuned for the activation hot loops.
//!
//! Training evaluates tens of millions of sines per run; the libm calls
//! dominate once the matrix kernels are blocked. This is the classic
//! Cody-Waite reduction (three-part pi/2) with the fdlibm minimax kernels,
//! accurate to a couple of ulps for `|x| <= 1e6` and falling back to the
//! standard library beyond that. Deterministic: pure arithmetic, same
//! result on every call.

const FRAC_2_PI: f64 = 0.636_619_772_367_581_4;
// pi/2 split so k * PIO2_1 is exact for |k| < 2^20 (PIO2_1 has 33
// significant bits); PIO2_1T carries the remainder to ~1e-27.
const PIO2_1: f64 = 1.570_796_326_734_125_6e0;
const PIO2_1T: f64 = 6.077_100_506_506_192e-11;

const S1: f64 = -1.666_666_666_666_663_2e-1;
const S2: f64 = 8.333_333_333_322_489e-3;
const S3: f64 = -1.984_126_982_985_795e-4;
const S4: f64 = 2.755_731_370_707_007_7e-6;
const S5: f64 = -2.505_076_025_340_686_4e-8;
const S6: f64 = 1.589_690_995_211_55e-10;

const C1: f64 = 4.166_666_666_666_660_2e-2;
const C2: f64 = -1.388_888_888_887_411e-3;
const C3: f64 = 2.480_158_728_947_673e-5;
const C4: f64 = -2.755_731_435_139_066_4e-7;
const C5: f64 = 2.087_572_321_298_175e-9;
const C6: f64 = -1.135_964_755_778_819_5e-11;

/// Sine and cosine of `x` from one argument reduction. The polynomial
/// pairs run in Estrin form (independent fma chains) and the quadrant
/// fix-up is branch-free, so the data-dependent quadrant costs no
/// mispredictions.
#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    if !(x.abs() <= 1.0e6) {
        return x.sin_cos();
    }
    let k = (x * FRAC_2_PI).round();
    let r = x - k * PIO2_1;
    let y = r - k * PIO2_1T;

    let z = y * y;
    let z2 = z * z;
    let z4 = z2 * z2;
    let ps = z.mul_add(S2, S1) + z2 * z.mul_add(S4, S3) + z4 * z.mul_add(S6, S5);
    let s = y + y * z * ps;
    let pc = z.mul_add(C2, C1) + z2 * z.mul_add(C4, C3) + z4 * z.mul_add(C6, C5);
    let c = 1.0 - 0.5 * z + z2 * pc;

    let n = (k as i64) & 3;
    let (a, b) = if n & 1 == 0 { (s, c) } else { (c, s) };
    let sin_sign = if n & 2 == 0 { 1.0 } else { -1.0 };
    let cos_sign = if (n + 1) & 2 == 0 { 1.0 } else { -1.0 };
    (sin_sign * a, cos_sign * b)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    sin_cos(x).0
}

#[inline]
pub fn cos(x: f64) -> f64 {
    sin_cos(x).1
}
