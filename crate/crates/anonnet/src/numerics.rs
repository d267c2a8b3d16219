//! Fixed-point potential arithmetic over the scale `d^c`.
//!
//! Potentials are nonnegative integers interpreted against the denominator
//! `d^c`. A node shares `floor(num / d)` with each neighbor and keeps the
//! remainder, so one update is `num + sum(received) - degree * floor(num/d)`.
//! All operations are exact; nothing here ever rounds silently.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::upow;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumericsError {
    #[error("degree {degree} needs share denominator above {}, have {d}", 2 * degree)]
    DegreeOverflow { degree: usize, d: u64 },
    #[error("update drove a potential negative at denominator {d}")]
    Underflow { d: u64 },
}

/// Common denominator `d` and exponent `c` fixing the scale `d^c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointParams {
    pub d: u64,
    pub c: u32,
}

impl FixedPointParams {
    pub fn new(d: u64, c: u32) -> Self {
        assert!(d >= 2, "share denominator must be at least 2");
        assert!(c >= 1, "scale exponent must be positive");
        FixedPointParams { d, c }
    }

    pub fn scale(&self) -> BigUint {
        upow(self.d, self.c)
    }
}

/// A fixed-point value `num / d^c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Potential {
    num: BigUint,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { num: BigUint::zero() }
    }

    pub fn from_numerator(num: BigUint) -> Self {
        Potential { num }
    }

    /// The integer `value` expressed at scale `d^c`.
    pub fn from_integer(value: u64, params: FixedPointParams) -> Self {
        Potential { num: BigUint::from(value) * params.scale() }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn into_numerator(self) -> BigUint {
        self.num
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn bit_len(&self) -> u64 {
        self.num.bits()
    }

    pub fn add(&self, other: &Potential) -> Potential {
        Potential { num: &self.num + &other.num }
    }

    /// Exact value as a rational number.
    pub fn value(&self, params: FixedPointParams) -> BigRational {
        BigRational::new(
            BigInt::from(self.num.clone()),
            BigInt::from(params.scale()),
        )
    }

    /// Renders the exact value as `num/d^c`.
    pub fn exact_string(&self, params: FixedPointParams) -> String {
        format!("{}/{}^{}", self.num, params.d, params.c)
    }

    /// Half-up rounding of `value * factor` to an integer.
    pub fn rounded_times(&self, factor: u64, params: FixedPointParams) -> BigUint {
        let scale = params.scale();
        (&self.num * (2u32 * BigUint::from(factor)) + &scale) / (scale * 2u32)
    }
}

/// The numerator a node hands to each neighbor: `floor(num / d)`, still read
/// at scale `d^c`.
pub fn truncate_share(pot: &Potential, params: FixedPointParams) -> Potential {
    Potential { num: &pot.num / params.d }
}

/// One truncated averaging step for a node that received `received` shares
/// from `received.len()` neighbors. Requires the degree to stay below `d/2`,
/// which also guarantees the result is nonnegative.
pub fn potential_update(
    current: &Potential,
    received: &[Potential],
    params: FixedPointParams,
) -> Result<Potential, NumericsError> {
    let degree = received.len();
    if 2 * degree as u64 >= params.d {
        return Err(NumericsError::DegreeOverflow { degree, d: params.d });
    }
    potential_update_unguarded(current, received, params)
}

/// Same update without the degree guard; fails only if the kept remainder
/// would actually go negative. Analysis code uses this to probe denominators
/// right at the stability boundary.
pub fn potential_update_unguarded(
    current: &Potential,
    received: &[Potential],
    params: FixedPointParams,
) -> Result<Potential, NumericsError> {
    let degree = received.len();
    let sent = truncate_share(current, params).num * BigUint::from(degree as u64);
    if sent > current.num {
        return Err(NumericsError::Underflow { d: params.d });
    }
    let mut num = &current.num - sent;
    for share in received {
        num += &share.num;
    }
    Ok(Potential { num })
}

/// Maximum entry of a potential vector, by exact comparison.
pub fn max_potential(pots: &[Potential]) -> &Potential {
    pots.iter().max().expect("nonempty vector")
}

/// Sum of a potential vector's numerators.
pub fn total_numerator(pots: &[Potential]) -> BigUint {
    pots.iter().fold(BigUint::zero(), |acc, p| acc + &p.num)
}

/// Checks that two snapshots of the same closed system carry equal mass.
pub fn mass_conserved(before: &[Potential], after: &[Potential]) -> bool {
    total_numerator(before) == total_numerator(after)
}

impl From<u64> for Potential {
    fn from(raw: u64) -> Self {
        Potential { num: BigUint::from(raw) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    const P22: FixedPointParams = FixedPointParams { d: 2, c: 2 };
    const P42: FixedPointParams = FixedPointParams { d: 4, c: 2 };

    #[test]
    fn truncated_share_drops_remainder() {
        // Value 1 at scale 2^2 is numerator 4; a share is floor(4/2) = 2.
        let pot = Potential::from_integer(1, P22);
        let share = truncate_share(&pot, P22);
        assert_eq!(share.value(P22), rat(1, 2));

        // Value 3/4 is numerator 3; floor(3/2) = 1, so the share is 1/4.
        let pot = Potential::from_numerator(BigUint::from(3u32));
        let share = truncate_share(&pot, P22);
        assert_eq!(share.value(P22), rat(1, 4));
    }

    #[test]
    fn single_update_on_a_pair() {
        // Nodes start at (1, 0) on one edge with d = 4, c = 2.
        let a = Potential::from_integer(1, P42);
        let b = Potential::zero();
        let share_a = truncate_share(&a, P42);
        let share_b = truncate_share(&b, P42);
        let a2 = potential_update(&a, &[share_b], P42).unwrap();
        let b2 = potential_update(&b, &[share_a], P42).unwrap();
        assert_eq!(a2.value(P42), rat(3, 4));
        assert_eq!(b2.value(P42), rat(1, 4));
        assert!(mass_conserved(&[a, b], &[a2, b2]));
    }

    #[test]
    fn degree_guard_rejects_half_of_d() {
        let pot = Potential::from_integer(1, P42);
        let shares = vec![Potential::zero(), Potential::zero()];
        assert_eq!(
            potential_update(&pot, &shares, P42),
            Err(NumericsError::DegreeOverflow { degree: 2, d: 4 })
        );
        // The unguarded update still works at this degree.
        assert!(potential_update_unguarded(&pot, &shares, P42).is_ok());
    }

    #[test]
    fn rounding_to_nearest_integer() {
        // 7/16 * 2 = 7/8 rounds to 1; 3/16 * 2 = 3/8 rounds to 0.
        let pot = Potential::from_numerator(BigUint::from(7u32));
        assert_eq!(pot.rounded_times(2, P42), BigUint::from(1u32));
        let pot = Potential::from_numerator(BigUint::from(3u32));
        assert_eq!(pot.rounded_times(2, P42), BigUint::from(0u32));
        // Exact halves round up: 4/16 * 2 = 1/2 -> 1.
        let pot = Potential::from_numerator(BigUint::from(4u32));
        assert_eq!(pot.rounded_times(2, P42), BigUint::from(1u32));
    }

    #[test]
    fn exact_string_shows_scale() {
        let pot = Potential::from_numerator(BigUint::from(12u32));
        assert_eq!(pot.exact_string(P42), "12/4^2");
    }
}
