//! Branch-free `e^x` for `x ≤ 0` and `ln x` for normal `x > 0`, written so
//! the design-search kernels auto-vectorize. Both stay within a few ulp of
//! the `f64` methods.

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
// 1.5 · 2^52: adding it rounds to an integer held in the low mantissa bits
const ROUNDER: f64 = 6_755_399_441_055_744.0;

#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    let x = x.max(-700.0);
    let shifted = x * LOG2E + ROUNDER;
    let n = shifted - ROUNDER;
    let r = (x - n * LN2_HI) - n * LN2_LO;
    // Taylor series to r^13; |r| ≤ ln2/2 keeps the truncation below 1e-17
    let mut p = 1.0 / 6_227_020_800.0;
    p = p * r + 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let exponent = (shifted.to_bits().wrapping_add(1023)) << 52;
    p * f64::from_bits(exponent)
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const MANTISSA: u64 = (1 << 52) - 1;
// 2^52 as bits; OR-ing a small integer into the mantissa and subtracting
// 2^52 converts it to f64 without an integer conversion instruction
const TWO52_BITS: u64 = 0x4330_0000_0000_0000;
const TWO52: f64 = 4_503_599_627_370_496.0;

/// `ln x` for positive normal `x`; other inputs give unspecified results.
#[inline(always)]
pub(crate) fn ln_positive(x: f64) -> f64 {
    let bits = x.to_bits();
    let biased = f64::from_bits(TWO52_BITS | (bits >> 52)) - TWO52;
    let m = f64::from_bits((bits & MANTISSA) | (1023 << 52));
    let big = m > SQRT_2;
    let m = if big { 0.5 * m } else { m };
    let k = biased - 1023.0 + if big { 1.0 } else { 0.0 };
    // ln m = 2 atanh(s); |s| ≤ 0.172 so twelve odd terms reach 1e-18
    let f = m - 1.0;
    let s = f / (2.0 + f);
    let z = s * s;
    let mut p = 1.0 / 23.0;
    p = p * z + 1.0 / 21.0;
    p = p * z + 1.0 / 19.0;
    p = p * z + 1.0 / 17.0;
    p = p * z + 1.0 / 15.0;
    p = p * z + 1.0 / 13.0;
    p = p * z + 1.0 / 11.0;
    p = p * z + 1.0 / 9.0;
    p = p * z + 1.0 / 7.0;
    p = p * z + 1.0 / 5.0;
    p = p * z + 1.0 / 3.0;
    let tail = 2.0 * s * z * p;
    k * LN2_HI + ((2.0 * s + tail) + k * LN2_LO)
}
