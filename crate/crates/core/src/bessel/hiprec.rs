//! Extended-precision evaluation of the normalized kernel by its power
//! series, in binary fixed point on big integers.
//!
//! `j_α(x) = Σ (-1)^n (x²/4)^n / (n! (α+1)_n)` involves only rational
//! operations on `x²/4` and `α`, both of which are exact dyadic rationals
//! when taken from `f64`. Every term is carried with `P` fractional bits,
//! where `P` grows with `x` so that the cancellation between terms of size
//! `~e^x` still leaves well over 100 significant bits in the sum.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Decompose a finite `f64` into `mantissa * 2^exponent`.
fn dyadic(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mant), exp)
}

fn shift(v: BigInt, by: i64) -> BigInt {
    if by >= 0 {
        v << (by as usize)
    } else {
        v >> ((-by) as usize)
    }
}

/// Convert a fixed-point value with `frac_bits` fractional bits to `f64`.
fn fixed_to_f64(v: &BigInt, frac_bits: i64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (v.abs() >> (drop as usize)).to_u64().unwrap_or(u64::MAX) as f64;
    let mag = top * 2f64.powi((drop - frac_bits) as i32);
    if v.sign() == Sign::Minus {
        -mag
    } else {
        mag
    }
}

/// `j_α(x)` to full double precision for `α > -1` and `0 ≤ x ≤ ~2000`.
pub fn j_reference(alpha: f64, x: f64) -> f64 {
    assert!(alpha > -1.0 && x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return 1.0;
    }
    let frac_bits: i64 = 160 + (1.5 * x).ceil() as i64;

    // z = x²/4 as a fixed-point integer
    let (mx, ex) = dyadic(x);
    let z = shift(&mx * &mx, 2 * ex - 2 + frac_bits);

    // α = a / 2^k exactly
    let (ma, ea) = dyadic(alpha);
    let (a_num, k) = if ea >= 0 {
        (shift(ma, ea), 0i64)
    } else {
        (ma, -ea)
    };
    let two_k = BigInt::one() << (k as usize);

    let mut term = BigInt::one() << (frac_bits as usize);
    let mut sum = term.clone();
    let mut n: u64 = 0;
    loop {
        n += 1;
        let nb = BigInt::from(n);
        // (n + α) 2^k = n 2^k + a
        let shifted = &nb * &two_k + &a_num;
        let denom = (&nb * shifted) << (frac_bits as usize);
        term = -(&term * &z * &two_k) / denom;
        if term.is_zero() {
            break;
        }
        sum += &term;
        if n > 1_000_000 {
            break;
        }
    }
    fixed_to_f64(&sum, frac_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        for &x in &[0.1f64, 1.0, 2.0, 7.5, 31.4, 120.0, 200.0] {
            let half = x.sin() / x;
            assert!((j_reference(0.5, x) - half).abs() < 1e-15, "x={x}");
            let three_half = 3.0 * (x.sin() - x * x.cos()) / (x * x * x);
            // the closed form loses about x^{-2} ulps to cancellation
            let tol = 1e-15 * f64::max(1.0, 1.0 / (x * x));
            assert!((j_reference(1.5, x) - three_half).abs() < tol, "x={x}");
        }
        assert_eq!(j_reference(0.7, 0.0), 1.0);
        assert!((j_reference(-0.5, 3.0) - 3f64.cos()).abs() < 1e-15);
    }
}
