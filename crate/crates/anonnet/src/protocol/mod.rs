//! Protocol implementations: size estimation, multiplicity counting, and
//! all-to-all emulation, plus the message codec they share.
//!
//! Messages carry a 4-bit type tag. Potentials travel as their truncated
//! share numerator (the scale is implied by the epoch parameters), statuses
//! as 2 bits, flags as 1 bit. Widths are counted exactly, bit by bit, so
//! the congestion audit measures what the model charges for.

pub mod a2a;
pub mod multiplicity;
pub mod rmc;

use num::bigint::BigUint;
use num::rational::BigRational;

use crate::graph::GraphError;
use crate::params::ExpansionInfo;
use crate::rational::rat_u;
use crate::schedule::{Schedule, WindowOracle};

/// Node status, encoded in 2 bits on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Probing = 0,
    Low = 1,
    High = 2,
    Done = 3,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Probing => "probing",
            Status::Low => "low",
            Status::High => "high",
            Status::Done => "done",
        }
    }

    pub fn is_probing(self) -> bool {
        self == Status::Probing
    }
}

/// Wire message. Ordering gives the anonymous multiset a canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Message {
    /// Truncated potential share plus sender status (estimation rounds).
    Share { num: BigUint, status: Status },
    /// Status alone (dissemination rounds).
    Notice { status: Status },
    /// One-bit flag (flood rounds).
    Flag { value: bool },
    /// Truncated potential share alone (counting rounds).
    Mass { num: BigUint },
}

impl Message {
    /// Exact serialized width: 4 tag bits plus the payload.
    pub fn bit_width(&self) -> u32 {
        4 + match self {
            Message::Share { num, .. } => 2 + num.bits() as u32,
            Message::Notice { .. } => 2,
            Message::Flag { .. } => 1,
            Message::Mass { num } => num.bits() as u32,
        }
    }

    /// Compact human-readable form for traces.
    pub fn render(&self) -> String {
        match self {
            Message::Share { num, status } => format!("P:{}:{}", num, status.name()),
            Message::Notice { status } => format!("S:{}", status.name()),
            Message::Flag { value } => format!("F:{}", u8::from(*value)),
            Message::Mass { num } => format!("M:{}", num),
        }
    }
}

/// `ceil(log2 x)` for positive `x`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    if x == 1 {
        0
    } else {
        u64::BITS - (x - 1).leading_zeros()
    }
}

/// Per-epoch message width bound: tag and bookkeeping slack around a
/// potential of at most `c log2 d` payload bits.
pub fn congestion_bound(ell: u64, c: u32, d: u64) -> u32 {
    4 + ceil_log2(ell.max(1)) + c * ceil_log2(d) + 8
}

/// How protocol parameter derivation learns about schedule expansion.
#[derive(Debug, Clone)]
pub enum ExpansionMode {
    /// Exact per-window quantities from the subset-enumeration oracles.
    Exact,
    /// A trusted isoperimetric lower bound; conductance falls back.
    HintIsoperimetric(BigRational),
    /// Nothing known: size-based fallbacks only.
    Unknown,
}

impl ExpansionMode {
    /// Resolves the mode against a concrete schedule and share denominator.
    pub fn info(
        &self,
        schedule: &Schedule,
        t: u32,
        d: u64,
    ) -> Result<ExpansionInfo, GraphError> {
        match self {
            ExpansionMode::Exact => {
                let oracle = WindowOracle::new(schedule, t);
                let i_min = oracle.i_min()?;
                // Share matrices exist only for d >= 2 * max degree; below
                // that the conductance at this denominator is undefined and
                // the isoperimetric route carries the bound instead.
                if d >= 2 * schedule.max_degree() as u64 {
                    Ok(ExpansionInfo::exact(oracle.phi_min(d)?, i_min))
                } else {
                    Ok(ExpansionInfo::from_i_min(i_min))
                }
            }
            ExpansionMode::HintIsoperimetric(i) => Ok(ExpansionInfo::from_i_min(i.clone())),
            ExpansionMode::Unknown => Ok(ExpansionInfo::unknown()),
        }
    }

    /// Isoperimetric bound used for flood-length budgeting: the exact
    /// oracle value, the hint, or the `2/n` fallback.
    pub fn i_min_for(&self, schedule: &Schedule, t: u32, n: u64) -> Result<BigRational, GraphError> {
        match self {
            ExpansionMode::Exact => WindowOracle::new(schedule, t).i_min(),
            ExpansionMode::HintIsoperimetric(i) => Ok(i.clone()),
            ExpansionMode::Unknown => Ok(rat_u(2, n)),
        }
    }
}

/// Scale-down divisors for exploratory runs; never used for correctness
/// claims.
#[derive(Debug, Clone, Copy)]
pub struct Reduction {
    pub p_div: u64,
    pub r_div: u64,
    pub c_div: u32,
}

impl Reduction {
    pub const NONE: Reduction = Reduction { p_div: 1, r_div: 1, c_div: 1 };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_are_exact() {
        assert_eq!(Message::Notice { status: Status::Done }.bit_width(), 6);
        assert_eq!(Message::Flag { value: true }.bit_width(), 5);
        assert_eq!(Message::Mass { num: BigUint::from(0u32) }.bit_width(), 4);
        assert_eq!(Message::Mass { num: BigUint::from(5u32) }.bit_width(), 7);
        let m = Message::Share { num: BigUint::from(12u32), status: Status::Probing };
        assert_eq!(m.bit_width(), 4 + 2 + 4);
    }

    #[test]
    fn message_order_ignores_sender() {
        let a = Message::Flag { value: false };
        let b = Message::Flag { value: true };
        assert!(a < b);
    }

    #[test]
    fn log_ceiling() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1024), 10);
    }

    #[test]
    fn bound_matches_formula() {
        assert_eq!(congestion_bound(1, 66, 8), 4 + 0 + 66 * 3 + 8);
        assert_eq!(congestion_bound(3, 10, 32), 4 + 2 + 50 + 8);
    }

    #[test]
    fn status_renders_by_name() {
        assert_eq!(Status::Low.name(), "low");
        assert_eq!(Message::Notice { status: Status::High }.render(), "S:high");
    }
}
