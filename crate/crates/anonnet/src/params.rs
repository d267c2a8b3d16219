//! Derivation of protocol parameters from the running size estimate, the
//! connectivity window, and whatever expansion information is available.
//!
//! Every inequality is resolved exactly: integer exponents by integer-power
//! comparison, real-valued bounds by certified rational enclosures rounded
//! in the safe direction. Nothing is derived through floating point.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::FixedPointParams;
use crate::rational::{
    big, biguint_to_rational, ceil_u64, int_ceil_pow, ln_enclosure, log_ratio_enclosure,
    min_exp_above, min_exp_at_least, min_exp_exceeding, pow_rational_lower, rat_u, upow,
};

/// Fractional-bit budget for certified enclosures. Far more than needed for
/// the integer ceilings taken from them.
const ENCLOSURE_BITS: u32 = 96;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("sharpness exponent must be positive")]
    NonPositiveEpsilon,
    #[error("estimate k = {k} must exceed the supervisor count {ell}")]
    EstimateBelowSupervisors { k: u64, ell: u64 },
    #[error("derived {what} exceeds the 64-bit range")]
    Overflow { what: &'static str },
    #[error("{which} bound must be positive")]
    NonPositiveExpansion { which: &'static str },
    #[error("violated inequality k^epsilon > 1: epsilon too small for k = {k}")]
    EpsilonTooSmall { k: u64 },
}

/// Exact positive rational sharpness exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Epsilon {
    pub num: u32,
    pub den: u32,
}

impl Epsilon {
    pub fn new(num: u32, den: u32) -> Result<Self, ParamError> {
        if num == 0 || den == 0 {
            return Err(ParamError::NonPositiveEpsilon);
        }
        Ok(Epsilon { num, den })
    }

    pub fn integer(v: u32) -> Self {
        Epsilon::new(v, 1).expect("positive integer")
    }

    pub fn as_rational(&self) -> BigRational {
        rat_u(self.num as u64, self.den as u64)
    }
}

impl std::fmt::Display for Epsilon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Epsilon {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (
                n.trim().parse().map_err(|e| format!("{e}"))?,
                d.trim().parse().map_err(|e| format!("{e}"))?,
            ),
            None => (s.trim().parse().map_err(|e| format!("{e}"))?, 1),
        };
        Epsilon::new(num, den).map_err(|e| e.to_string())
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = Epsilon;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a positive rational like \"1\" or \"3/2\", or a positive integer")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Epsilon, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Epsilon, E> {
                let num = u32::try_from(v).map_err(E::custom)?;
                Epsilon::new(num, 1).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Epsilon, E> {
                let num = u32::try_from(v).map_err(E::custom)?;
                Epsilon::new(num, 1).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// What is known about the schedule's expansion, in decreasing order of
/// strength: exact window conductance, a window-union isoperimetric lower
/// bound, or nothing.
#[derive(Debug, Clone, Default)]
pub struct ExpansionInfo {
    pub phi_min: Option<BigRational>,
    pub i_min: Option<BigRational>,
}

impl ExpansionInfo {
    pub fn exact(phi_min: BigRational, i_min: BigRational) -> Self {
        ExpansionInfo { phi_min: Some(phi_min), i_min: Some(i_min) }
    }

    pub fn from_i_min(i_min: BigRational) -> Self {
        ExpansionInfo { phi_min: None, i_min: Some(i_min) }
    }

    pub fn unknown() -> Self {
        ExpansionInfo::default()
    }

    /// Effective `(phi, i)` pair: a missing isoperimetric bound falls back
    /// to `2/k_sub` (the size substitute standing in for the unknown `n`),
    /// and a missing conductance falls back to `i / d^t`.
    pub fn resolve(
        &self,
        k_sub: u64,
        d: u64,
        t: u32,
    ) -> Result<(BigRational, BigRational), ParamError> {
        let i_eff = match &self.i_min {
            Some(i) => i.clone(),
            None => rat_u(2, k_sub),
        };
        if i_eff <= BigRational::zero() {
            return Err(ParamError::NonPositiveExpansion { which: "isoperimetric" });
        }
        let phi_eff = match &self.phi_min {
            Some(p) => p.clone(),
            None => &i_eff / biguint_to_rational(&upow(d, t)),
        };
        if phi_eff <= BigRational::zero() {
            return Err(ParamError::NonPositiveExpansion { which: "conductance" });
        }
        Ok((phi_eff, i_eff))
    }
}

/// Full parameter set for one size-estimation epoch at estimate `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmcEpochParams {
    pub k: u64,
    pub ell: u64,
    pub t: u32,
    /// `ceil(k^(1+epsilon))`; the degree-alarm threshold is `q` itself.
    pub q: u64,
    /// Share denominator `2q`.
    pub d: u64,
    /// Scale exponent: potentials live at denominator `d^c`.
    pub c: u32,
    /// Phases per epoch.
    pub p: u64,
    /// Mixing blocks per phase.
    pub b: u64,
    /// Rounds per phase, `t * b`.
    pub r: u64,
    /// Phase-one alarm threshold `ell * (1 - ell/q)`.
    pub tau: BigRational,
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
    pub delta: u32,
    /// Accepting accumulator range `(k-ell) * (1 -+ k^-gamma)`.
    pub accept_lo: BigRational,
    pub accept_hi: BigRational,
}

impl RmcEpochParams {
    pub fn fixed_point(&self) -> FixedPointParams {
        FixedPointParams::new(self.d, self.c)
    }

    /// Rounds one full epoch takes: `p` phases of `r` rounds plus `d`
    /// dissemination rounds.
    pub fn epoch_rounds(&self) -> u64 {
        self.p
            .checked_mul(self.r)
            .and_then(|pr| pr.checked_add(self.d))
            .expect("epoch length fits in 64 bits")
    }

    /// Divides the phase count, block count, and scale exponent for
    /// exploratory runs. Never used for correctness claims.
    pub fn scaled_down(mut self, p_div: u64, r_div: u64, c_div: u32) -> Self {
        self.p = (self.p / p_div.max(1)).max(1);
        self.b = (self.b / r_div.max(1)).max(1);
        self.r = self.t as u64 * self.b;
        self.c = (self.c / c_div.max(1)).max(2);
        self
    }
}

/// Certified lower bound on `log_k(k^eps - 1)`, the quantity the scale and
/// block bounds subtract.
fn log_k_pow_minus_one_lower(
    k: u64,
    eps: Epsilon,
) -> Result<BigRational, ParamError> {
    let x_lo = if eps.den == 1 {
        biguint_to_rational(&upow(k, eps.num)) - BigRational::one()
    } else {
        pow_rational_lower(k, eps.num, eps.den, ENCLOSURE_BITS) - BigRational::one()
    };
    if x_lo <= BigRational::zero() {
        return Err(ParamError::EpsilonTooSmall { k });
    }
    Ok(log_ratio_enclosure(&x_lo, &big(k), ENCLOSURE_BITS).lo)
}

/// The degree threshold `q = ceil(k^(1+eps))` and share denominator
/// `d = 2q` an epoch at estimate `k` uses.
pub fn share_denominator(k: u64, eps: Epsilon) -> Result<(u64, u64), ParamError> {
    let q_big = int_ceil_pow(k, eps.num + eps.den, eps.den);
    let q: u64 = q_big
        .try_into()
        .map_err(|_| ParamError::Overflow { what: "degree threshold q" })?;
    let d = q.checked_mul(2).ok_or(ParamError::Overflow { what: "share denominator d" })?;
    Ok((q, d))
}

pub fn derive_rmc_params(
    k: u64,
    ell: u64,
    t: u32,
    eps: Epsilon,
    expansion: &ExpansionInfo,
) -> Result<RmcEpochParams, ParamError> {
    assert!(t >= 1, "connectivity window must be positive");
    if ell == 0 || k <= ell {
        return Err(ParamError::EstimateBelowSupervisors { k, ell });
    }
    let (q, d) = share_denominator(k, eps)?;

    // gamma is the smallest exponent with k^gamma strictly above d - 1,
    // which keeps the accepting range's half-width below 1/(d-1).
    let gamma = min_exp_exceeding(k, &BigUint::from(d - 1));
    let k_gamma = upow(k, gamma);
    // By the gamma choice k^gamma + 1 - d >= 1, so delta's bound is finite.
    let delta_den = &k_gamma + BigUint::one() - BigUint::from(d);
    let delta_bound = BigRational::new(
        BigInt::from(BigUint::from(d) * &k_gamma),
        BigInt::from(delta_den),
    );
    let delta = min_exp_above(k, &delta_bound);

    let alpha = min_exp_at_least(k, &(big(3) * biguint_to_rational(&upow(k, 1 + gamma))))
        .max(min_exp_at_least(k, &big(3 * t as u64)));
    let k_delta = upow(k, delta);
    let beta_bound = (BigUint::from(d) * (&k_delta * 2u32 + BigUint::one()))
        .max(BigUint::from(3 * t as u64));
    let beta = min_exp_at_least(k, &biguint_to_rational(&beta_bound));

    let tau = rat_u(ell, 1) * (BigRational::one() - rat_u(ell, q));

    // Scale exponent: the epsilon-dependent branch needs an upper bound on
    // 5 + alpha + 2*eps - 2*log_k(k^eps - 1).
    let two_log_lo = big(2) * log_k_pow_minus_one_lower(k, eps)?;
    let two_eps = big(2) * eps.as_rational();
    let c_branch = big(5) + big(alpha as u64) + &two_eps - &two_log_lo;
    let c_extra = (5 * beta as u64).max(ceil_u64(&c_branch));
    let c: u32 = (2 * t as u64 + 4 + c_extra)
        .try_into()
        .map_err(|_| ParamError::Overflow { what: "scale exponent c" })?;

    // Phase count, rounded up from a certified upper bound on
    // (2 ln k / ell) * max{gamma/(1/k + 1/k^alpha), delta/(1/d + 1/k^beta)}.
    let k_alpha = upow(k, alpha);
    let k_beta = upow(k, beta);
    let pick_gamma = BigRational::new(
        BigInt::from(BigUint::from(gamma) * &k_alpha),
        BigInt::from(&k_alpha / k + BigUint::one()),
    );
    let pick_delta = BigRational::new(
        BigInt::from(BigUint::from(delta) * BigUint::from(d) * &k_beta),
        BigInt::from(&k_beta + BigUint::from(d)),
    );
    let ln_k_hi = ln_enclosure(&big(k), ENCLOSURE_BITS).hi;
    let p_bound = big(2) / big(ell) * &ln_k_hi * pick_gamma.max(pick_delta);
    let p = ceil_u64(&p_bound).max(1);

    // Blocks per phase: the smallest count satisfying every per-phase
    // hypothesis the epoch argument consumes. Each hypothesis has the shape
    // multiplier * ln k / min{phi^2, ln(1 + i)}.
    let (phi_eff, i_eff) = expansion.resolve(k, d, t)?;
    let b_branch = big(5) + &two_eps - &two_log_lo;
    let multiplier = big((4 * alpha.max(beta)) as u64).max(b_branch);
    let phi_sq = &phi_eff * &phi_eff;
    let ln_one_plus_i_lo = ln_enclosure(&(BigRational::one() + &i_eff), ENCLOSURE_BITS).lo;
    let denom = phi_sq.min(ln_one_plus_i_lo);
    if denom <= BigRational::zero() {
        return Err(ParamError::NonPositiveExpansion { which: "mixing rate" });
    }
    let b = ceil_u64(&(multiplier * &ln_k_hi / denom)).max(1);
    let r = (t as u64)
        .checked_mul(b)
        .ok_or(ParamError::Overflow { what: "rounds per phase r" })?;

    let k_minus_ell = big(k - ell);
    let half_width = BigRational::new(BigInt::one(), BigInt::from(k_gamma));
    let accept_lo = &k_minus_ell * (BigRational::one() - &half_width);
    let accept_hi = &k_minus_ell * (BigRational::one() + &half_width);

    Ok(RmcEpochParams {
        k,
        ell,
        t,
        q,
        d,
        c,
        p,
        b,
        r,
        tau,
        alpha,
        beta,
        gamma,
        delta,
        accept_lo,
        accept_hi,
    })
}

/// Parameter set for one multiplicity count over a known system size.
#[derive(Debug, Clone)]
pub struct MultParams {
    pub n: u64,
    pub t: u32,
    /// Share denominator `2n`.
    pub d: u64,
    pub c: u32,
    pub alpha: u32,
    pub b: u64,
    /// Total gossip rounds, `t * b`.
    pub rounds: u64,
}

impl MultParams {
    pub fn fixed_point(&self) -> FixedPointParams {
        FixedPointParams::new(self.d, self.c)
    }

    pub fn scaled_down(mut self, r_div: u64, c_div: u32) -> Self {
        self.b = (self.b / r_div.max(1)).max(1);
        self.rounds = self.t as u64 * self.b;
        self.c = (self.c / c_div.max(1)).max(2);
        self
    }
}

pub fn derive_mult_params(
    n: u64,
    t: u32,
    expansion: &ExpansionInfo,
) -> Result<MultParams, ParamError> {
    assert!(t >= 1, "connectivity window must be positive");
    assert!(n >= 2, "multiplicity counting needs at least two nodes");
    let d = n.checked_mul(2).ok_or(ParamError::Overflow { what: "share denominator d" })?;
    let alpha = min_exp_at_least(n, &big(3 * t as u64)).max(3);
    let c = 5 * alpha + 2 * t + 4;
    // A missing conductance bound falls back to 2/(n * d^t), which holds for
    // any share matrix whose nonzero entries are at least 1/d.
    let phi_eff = match &expansion.phi_min {
        Some(p) => p.clone(),
        None => big(2) / (big(n) * biguint_to_rational(&upow(d, t))),
    };
    if phi_eff <= BigRational::zero() {
        return Err(ParamError::NonPositiveExpansion { which: "conductance" });
    }
    let ln_n_hi = ln_enclosure(&big(n), ENCLOSURE_BITS).hi;
    let b = ceil_u64(&(big(4 * alpha as u64) * ln_n_hi / (&phi_eff * &phi_eff))).max(1);
    let rounds = (t as u64)
        .checked_mul(b)
        .ok_or(ParamError::Overflow { what: "gossip rounds" })?;
    Ok(MultParams { n, t, d, c, alpha, b, rounds })
}

/// Rounds of single-hop flooding sufficient to cover `n` nodes on a
/// `t`-connected schedule whose window unions expand by at least `i_min`:
/// `ceil(t * ln n / ln(1 + i_min))`, computed exactly as the least `r`
/// with `(1 + i_min)^r >= n^t`.
pub fn flood_round_bound(n: u64, i_min: &BigRational, t: u32) -> Result<u64, ParamError> {
    assert!(n >= 2);
    if *i_min <= BigRational::zero() {
        return Err(ParamError::NonPositiveExpansion { which: "isoperimetric" });
    }
    let target = biguint_to_rational(&upow(n, t));
    let base = BigRational::one() + i_min;
    let mut r = 0u64;
    let mut acc = BigRational::one();
    while acc < target {
        acc *= &base;
        r += 1;
        if r > 1 << 32 {
            return Err(ParamError::Overflow { what: "flooding rounds" });
        }
    }
    Ok(r.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn eps1() -> Epsilon {
        Epsilon::integer(1)
    }

    #[test]
    fn smallest_estimate_parameters() {
        // k = 2, ell = 1, window 1, exact expansion of the two-clique at
        // share denominator 8: conductance 1/8, isoperimetric number 1.
        let exp = ExpansionInfo::exact(rat(1, 8), rat(1, 1));
        let p = derive_rmc_params(2, 1, 1, eps1(), &exp).unwrap();
        assert_eq!(p.q, 4);
        assert_eq!(p.d, 8);
        assert_eq!(p.gamma, 3);
        assert_eq!(p.delta, 7);
        assert_eq!(p.alpha, 6);
        assert_eq!(p.beta, 12);
        assert_eq!(p.tau, rat(3, 4));
        assert_eq!(p.c, 66);
        assert_eq!(p.p, 78);
        // max{4*6, 4*12, 7} = 48 multiplier against min{1/64, ln 2} = 1/64.
        assert_eq!(p.b, 2130);
        assert_eq!(p.r, 2130);
        assert_eq!(p.accept_lo, rat(7, 8));
        assert_eq!(p.accept_hi, rat(9, 8));
    }

    #[test]
    fn estimate_four_parameters() {
        let exp = ExpansionInfo::exact(rat(1, 32), rat(1, 1));
        let p = derive_rmc_params(4, 1, 1, eps1(), &exp).unwrap();
        assert_eq!(p.d, 32);
        assert_eq!(p.gamma, 3);
        assert_eq!(p.delta, 3);
        assert_eq!(p.alpha, 5);
        assert_eq!(p.beta, 7);
        assert_eq!(p.p, 266);
        assert_eq!(p.tau, rat(15, 16));
    }

    #[test]
    fn estimate_eight_parameters() {
        let exp = ExpansionInfo::exact(rat(1, 128), rat(1, 1));
        let p = derive_rmc_params(8, 1, 2, eps1(), &exp).unwrap();
        assert_eq!(p.d, 128);
        assert_eq!(p.gamma, 3);
        assert_eq!(p.delta, 3);
        assert_eq!(p.alpha, 5);
        assert_eq!(p.beta, 6);
        // 2T + 4 + max{5*6, ceil(12 - 2 log_8 7)} = 8 + 30.
        assert_eq!(p.c, 38);
    }

    #[test]
    fn unknown_expansion_falls_back() {
        let p = derive_rmc_params(4, 1, 1, eps1(), &ExpansionInfo::unknown()).unwrap();
        // i falls back to 2/k = 1/2, phi to i/d = 1/64; the mixing rate is
        // then min{1/4096, ln(3/2)} = 1/4096.
        let q = derive_rmc_params(
            4,
            1,
            1,
            eps1(),
            &ExpansionInfo::exact(rat(1, 64), rat(1, 2)),
        )
        .unwrap();
        assert_eq!(p.b, q.b);
    }

    #[test]
    fn too_few_nodes_for_supervisors() {
        assert_eq!(
            derive_rmc_params(2, 2, 1, eps1(), &ExpansionInfo::unknown()),
            Err(ParamError::EstimateBelowSupervisors { k: 2, ell: 2 })
        );
    }

    #[test]
    fn multiplicity_parameters_for_a_pair() {
        let exp = ExpansionInfo::exact(rat(1, 4), rat(1, 1));
        let m = derive_mult_params(2, 1, &exp).unwrap();
        assert_eq!(m.d, 4);
        assert_eq!(m.alpha, 3);
        assert_eq!(m.c, 21);
        // ceil(12 * ln 2 * 16) = ceil(133.08...).
        assert_eq!(m.b, 134);
        assert_eq!(m.rounds, 134);
    }

    #[test]
    fn flooding_round_bound() {
        // ln 4 / ln(3/2) = 3.419..., so one window needs 4 rounds.
        assert_eq!(flood_round_bound(4, &rat(1, 2), 1).unwrap(), 4);
        assert_eq!(flood_round_bound(4, &rat(1, 2), 2).unwrap(), 7);
        assert_eq!(flood_round_bound(2, &rat(1, 1), 1).unwrap(), 1);
    }

    #[test]
    fn fractional_sharpness_is_supported() {
        let eps = Epsilon::new(1, 2).unwrap();
        let p = derive_rmc_params(4, 1, 1, eps, &ExpansionInfo::unknown()).unwrap();
        // q = ceil(4^1.5) = 8.
        assert_eq!(p.q, 8);
        assert_eq!(p.d, 16);
        assert!(p.c >= 2);
    }

    #[test]
    fn epsilon_parsing() {
        assert_eq!("1".parse::<Epsilon>().unwrap(), Epsilon::integer(1));
        assert_eq!("3/2".parse::<Epsilon>().unwrap(), Epsilon::new(3, 2).unwrap());
        assert!("0".parse::<Epsilon>().is_err());
        assert_eq!(Epsilon::new(3, 2).unwrap().to_string(), "3/2");
    }

    #[test]
    fn reduced_scaling_clamps() {
        let exp = ExpansionInfo::exact(rat(1, 8), rat(1, 1));
        let p = derive_rmc_params(2, 1, 1, eps1(), &exp).unwrap();
        let red = p.clone().scaled_down(10, 100, 3);
        assert_eq!(red.p, 7);
        assert_eq!(red.b, 21);
        assert_eq!(red.r, 21);
        assert_eq!(red.c, 22);
        let tiny = p.scaled_down(u64::MAX, u64::MAX, u32::MAX);
        assert_eq!((tiny.p, tiny.b, tiny.c), (1, 1, 2));
    }
}
