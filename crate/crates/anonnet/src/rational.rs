//! Certified rational enclosures for the few transcendental quantities the
//! parameter derivations need (natural logarithms, fractional powers).
//!
//! Everything here returns exact `BigRational` bounds: a pair `(lo, hi)` with
//! `lo <= f(x) <= hi`. Callers pick the conservative side, so a derived
//! parameter is always at least as large as the true requirement. No floating
//! point is involved anywhere.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_u(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn big(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Smallest integer `>= r`.
pub fn ceil_int(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

/// Largest integer `<= r`.
pub fn floor_int(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// `ceil(r)` as u64. Panics if negative or out of range (desk-scale parameters
/// never are; the panic would indicate a derivation bug, not bad input).
pub fn ceil_u64(r: &BigRational) -> u64 {
    let c = ceil_int(r);
    assert!(!c.is_negative(), "ceiling of negative quantity requested");
    let (_, digits) = c.to_u64_digits();
    match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => panic!("parameter does not fit in u64: {c}"),
    }
}

/// An exact enclosure `lo <= value <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Enclosure {
    pub fn point(v: BigRational) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn scale(&self, f: &BigRational) -> Enclosure {
        assert!(!f.is_negative());
        Enclosure { lo: &self.lo * f, hi: &self.hi * f }
    }

    pub fn width_below(&self, eps: &BigRational) -> bool {
        &self.hi - &self.lo < *eps
    }
}

/// Enclosure of `ln y` for `y` in `[1, 2]`, via the atanh series
/// `ln y = 2 * sum z^(2j+1)/(2j+1)` with `z = (y-1)/(y+1)` in `[0, 1/3]`.
/// The tail after `j = k` is between 0 and `2 z^(2k+3) / ((2k+3)(1 - z^2))`.
fn ln_reduced(y: &BigRational, eps: &BigRational) -> Enclosure {
    let one = BigRational::one();
    assert!(*y >= one && *y <= rat(2, 1));
    if y.is_one() {
        return Enclosure::point(BigRational::zero());
    }
    let z = (y - &one) / (y + &one);
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = BigRational::zero();
    let mut j: u32 = 0;
    loop {
        sum += &term / big(2 * u64::from(j) + 1);
        j += 1;
        term *= &z2;
        // tail bound for the next term onward
        let tail = &term * rat(2, 1) / (big(2 * u64::from(j) + 1) * (&one - &z2));
        if &tail * rat(2, 1) < *eps {
            let lo = &sum * rat(2, 1);
            let hi = &lo + &tail * rat(2, 1);
            return Enclosure { lo, hi };
        }
        assert!(j < 10_000, "ln series failed to converge");
    }
}

/// Enclosure of `ln x` for any positive rational `x`, to absolute width
/// below roughly `2^-precision_bits`.
pub fn ln_enclosure(x: &BigRational, precision_bits: u32) -> Enclosure {
    assert!(x.is_positive(), "ln of non-positive rational");
    let one = BigRational::one();
    if *x < one {
        return ln_enclosure(&(&one / x), precision_bits).neg();
    }
    let eps = BigRational::new(BigInt::one(), BigInt::from(2u8).pow(precision_bits));
    // Scale x into [1, 2] by halving; ln x = m ln 2 + ln y.
    let mut y = x.clone();
    let mut m: u32 = 0;
    let two = rat(2, 1);
    while y > two {
        y /= &two;
        m += 1;
    }
    let ln_y = ln_reduced(&y, &eps);
    if m == 0 {
        return ln_y;
    }
    let ln2 = ln_reduced(&two, &(eps / big(2 * u64::from(m))));
    ln_y.add(&ln2.scale(&big(u64::from(m))))
}

/// Enclosure of `ln(a) / ln(b)` for rationals `a > 0`, `b > 1`.
pub fn log_ratio_enclosure(a: &BigRational, b: &BigRational, precision_bits: u32) -> Enclosure {
    assert!(*b > BigRational::one());
    let la = ln_enclosure(a, precision_bits);
    let lb = ln_enclosure(b, precision_bits);
    assert!(lb.lo.is_positive());
    if la.lo.is_negative() {
        // a < 1: numerator enclosure straddles or sits below zero.
        Enclosure { lo: &la.lo / &lb.lo, hi: &la.hi / &lb.lo }
    } else {
        Enclosure { lo: &la.lo / &lb.hi, hi: &la.hi / &lb.lo }
    }
}

/// Exact `base^exp` for a non-negative integer base.
pub fn upow(base: u64, exp: u32) -> BigUint {
    BigUint::from(base).pow(exp)
}

/// Smallest integer `q` with `q^den >= k^num`, i.e. `ceil(k^(num/den))`
/// computed purely with integer powering.
pub fn int_ceil_pow(k: u64, num: u32, den: u32) -> BigUint {
    assert!(k >= 1 && den >= 1);
    let target = upow(k, num);
    // Binary search over q in [1, k^ceil(num/den)].
    let mut hi = BigUint::from(1u8);
    while hi.pow(den) < target {
        hi = &hi * 2u8;
    }
    let mut lo = BigUint::one();
    while &lo + 1u8 < hi {
        let mid = (&lo + &hi) / 2u8;
        if mid.pow(den) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if lo.pow(den) >= target {
        lo
    } else {
        hi
    }
}

/// Smallest integer exponent `e` with `k^e > bound` (strict).
pub fn min_exp_exceeding(k: u64, bound: &BigUint) -> u32 {
    assert!(k >= 2);
    let mut e = 0u32;
    let mut p = BigUint::one();
    while p <= *bound {
        e += 1;
        p *= k;
        assert!(e < 4096, "exponent search diverged");
    }
    e
}

/// Smallest integer exponent `e` with `k^e >= bound`.
pub fn min_exp_at_least(k: u64, bound: &BigRational) -> u32 {
    assert!(k >= 2);
    let mut e = 0u32;
    let mut p = BigRational::one();
    while p < *bound {
        e += 1;
        p *= big(k);
        assert!(e < 4096, "exponent search diverged");
    }
    e
}

/// Smallest integer exponent `e` with `k^e > bound` (strict, rational bound).
pub fn min_exp_above(k: u64, bound: &BigRational) -> u32 {
    assert!(k >= 2);
    let mut e = 0u32;
    let mut p = BigRational::one();
    while p <= *bound {
        e += 1;
        p *= big(k);
        assert!(e < 4096, "exponent search diverged");
    }
    e
}

/// Certified lower bound on `k^(num/den)`: the floor of the den-th root at
/// `precision_bits` fractional bits, so the error is below `2^-precision_bits`.
pub fn pow_rational_lower(k: u64, num: u32, den: u32, precision_bits: u32) -> BigRational {
    assert!(k >= 1 && den >= 1);
    let scaled = upow(k, num) << (precision_bits as u64 * den as u64);
    let root = scaled.nth_root(den);
    BigRational::new(
        BigInt::from(root),
        BigInt::from(BigUint::one() << precision_bits as u64),
    )
}

pub fn biguint_to_rational(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln2_enclosure_brackets_known_digits() {
        let e = ln_enclosure(&rat(2, 1), 40);
        // 0.693147180559945 < ln 2 < 0.693147180559946
        assert!(e.lo < rat(693147180559946, 1_000_000_000_000_000));
        assert!(e.hi > rat(693147180559945, 1_000_000_000_000_000));
        assert!(e.width_below(&BigRational::new(BigInt::one(), BigInt::from(2u8).pow(39))));
    }

    #[test]
    fn ln_of_one_is_zero() {
        let e = ln_enclosure(&rat(1, 1), 30);
        assert!(e.lo.is_zero() && e.hi.is_zero());
    }

    #[test]
    fn ln_below_one_is_negative() {
        let e = ln_enclosure(&rat(1, 3), 30);
        assert!(e.hi.is_negative());
        // ln(1/3) = -1.0986...
        assert!(e.lo > rat(-10987, 10000));
        assert!(e.hi < rat(-10986, 10000));
    }

    #[test]
    fn ln_eight_is_three_ln_two() {
        let e8 = ln_enclosure(&rat(8, 1), 40);
        let e2 = ln_enclosure(&rat(2, 1), 45);
        assert!(e8.lo <= &e2.hi * rat(3, 1));
        assert!(e8.hi >= &e2.lo * rat(3, 1));
    }

    #[test]
    fn int_ceil_pow_exact_and_fractional() {
        assert_eq!(int_ceil_pow(4, 2, 1), BigUint::from(16u8));
        // 2^(3/2) = 2.828..., ceiling 3
        assert_eq!(int_ceil_pow(2, 3, 2), BigUint::from(3u8));
        // 8^(2/3) = 4 exactly
        assert_eq!(int_ceil_pow(8, 2, 3), BigUint::from(4u8));
    }

    #[test]
    fn min_exponents() {
        // smallest e with 2^e > 7 is 3
        assert_eq!(min_exp_exceeding(2, &BigUint::from(7u8)), 3);
        // smallest e with 2^e > 8 is 4
        assert_eq!(min_exp_exceeding(2, &BigUint::from(8u8)), 4);
        // smallest e with 6^e >= 31176 is 6 (6^5 = 7776, 6^6 = 46656)
        assert_eq!(min_exp_at_least(6, &rat(31176, 1)), 6);
    }

    #[test]
    fn log_ratio_brackets() {
        // log_4(62) = 2.977...
        let e = log_ratio_enclosure(&rat(62, 1), &rat(4, 1), 40);
        assert!(e.lo > rat(297, 100));
        assert!(e.hi < rat(298, 100));
    }
}
