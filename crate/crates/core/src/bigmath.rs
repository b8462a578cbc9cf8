//! Helpers for class multiplicities, which overflow `u64` long before the
//! block lengths of interest (`C(1000, 500)` has ~300 decimal digits).

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// `log2(x)`, `-inf` for zero.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits") as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits");
    (top as f64).log2() + shift as f64
}

/// Nearest `f64` to `x`, `inf` when out of range.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `floor(2^y)`, treating values within 1e-9 (relative) below an integer as that integer.
pub fn floor_pow2(y: f64) -> BigUint {
    if y.is_nan() || y < 0.0 {
        return if y == 0.0 { BigUint::one() } else { BigUint::zero() };
    }
    if y < 52.0 {
        let v = y.exp2();
        let r = v.round();
        let f = if (r - v).abs() <= 1e-9 * v.max(1.0) {
            r
        } else {
            v.floor()
        };
        return BigUint::from(f as u64);
    }
    let whole = y.floor();
    let frac = y - whole;
    if frac < 1e-12 || 1.0 - frac < 1e-12 {
        let e = if frac < 0.5 { whole } else { whole + 1.0 };
        return BigUint::one() << (e as u64);
    }
    let mantissa = (frac.exp2() * (1u64 << 52) as f64).floor() as u64;
    BigUint::from(mantissa) << (whole as u64 - 52)
}

/// `ceil(2^y)` for the counts used when a class is only partially consumed.
pub fn ceil_from_log2(y: f64) -> BigUint {
    if y < 52.0 {
        return BigUint::from(y.exp2().ceil() as u64);
    }
    floor_pow2(y) + BigUint::one()
}

/// Table of `k!` for `k <= n`.
pub fn factorials(n: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigUint::one());
    for k in 1..=n {
        let next = &out[k - 1] * BigUint::from(k);
        out.push(next);
    }
    out
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Determinant of a small integer matrix (Bareiss fraction-free elimination).
pub fn det_i128(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_of_large_powers() {
        let x = BigUint::one() << 300u32;
        assert!((log2_big(&x) - 300.0).abs() < 1e-12);
        assert_eq!(log2_big(&BigUint::zero()), f64::NEG_INFINITY);
        assert!((log2_big(&BigUint::from(12u32)) - 12f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn floor_pow2_small_and_large() {
        assert_eq!(floor_pow2(1.5), BigUint::from(2u32));
        assert_eq!(floor_pow2(2.5), BigUint::from(5u32));
        assert_eq!(floor_pow2(10.0), BigUint::from(1024u32));
        assert_eq!(floor_pow2(100.0), BigUint::one() << 100u32);
        assert_eq!(floor_pow2(-0.5), BigUint::zero());
        assert_eq!(floor_pow2(0.0), BigUint::one());
        // log2(27) * 1 must not round down to 26
        assert_eq!(floor_pow2(3.0 * 3f64.log2()), BigUint::from(27u32));
    }

    #[test]
    fn binomials_and_determinants() {
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(binomial(4, 5), BigUint::zero());
        assert_eq!(factorials(5)[5], BigUint::from(120u32));
        assert_eq!(det_i128(vec![vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(det_i128(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(det_i128(vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]), 4);
    }
}
