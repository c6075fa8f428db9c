//! Search for auxiliary primes q that are inert in an imaginary quadratic
//! field K with `p | q+1` and `p` not dividing `a_q`.
//!
//! Such primes exist in abundance for large p (a Chebotarev/Serre argument);
//! this module finds the smallest one below a bound and re-verifies each of
//! the three conditions independently, with the numeric witnesses recorded.

use crate::curve::{CurveError, CurveQ};
use crate::exact::{is_prime, kronecker, Int, QuadField};
use crate::hecke::ApTable;
use crate::witness::cm_discriminant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum PrimeSearchError {
    #[error("no prime q <= {0} satisfies all conditions; raise the bound (existence is only guaranteed for large p)")]
    SearchExhausted(u64),
    #[error("p = {0} must be odd and coprime to the conductor {1}")]
    BadP(u64, u64),
    #[error("field must be imaginary quadratic")]
    NotImaginary,
    #[error("CM curve: p = {0} is not inert in the CM field (disc {1})")]
    CMConditionFailed(u64, i64),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Witnesses for the three conditions at a candidate q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionChecks {
    pub kronecker_dk_q: i32,
    pub q_plus_1_mod_p: u64,
    pub a_q: i64,
    pub a_q_mod_p: u64,
    pub inert: bool,
    pub p_divides_q_plus_1: bool,
    pub p_coprime_a_q: bool,
}

impl ConditionChecks {
    pub fn all_pass(&self) -> bool {
        self.inert && self.p_divides_q_plus_1 && self.p_coprime_a_q
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSearchResult {
    pub q: u64,
    pub checks: ConditionChecks,
}

/// Evaluates the three conditions at a given prime q (q coprime to N*disc).
pub fn verify_conditions(
    table: &mut ApTable,
    field: &QuadField,
    p: u64,
    q: u64,
) -> Result<ConditionChecks, PrimeSearchError> {
    let kron = kronecker(field.fund_disc(), &Int::from(q));
    let a_q = table.ap_on_demand(q)?;
    let a_q_mod_p = (a_q.rem_euclid(p as i64)) as u64;
    Ok(ConditionChecks {
        kronecker_dk_q: kron,
        q_plus_1_mod_p: (q + 1) % p,
        a_q,
        a_q_mod_p,
        inert: kron == -1,
        p_divides_q_plus_1: (q + 1).is_multiple_of(p),
        p_coprime_a_q: a_q_mod_p != 0,
    })
}

/// Smallest prime `q <= bound` with q inert in the field, `p | q+1`,
/// `p` not dividing `a_q`, and q coprime to N*disc. Deterministic.
///
/// For a CM curve, p must additionally be inert in the CM field.
pub fn find_q(
    curve: &CurveQ,
    field: &QuadField,
    p: u64,
    bound: u64,
) -> Result<PrimeSearchResult, PrimeSearchError> {
    if p < 3 || !is_prime(&Int::from(p)) || curve.conductor.is_multiple_of(p) {
        return Err(PrimeSearchError::BadP(p, curve.conductor));
    }
    if !field.is_imaginary() {
        return Err(PrimeSearchError::NotImaginary);
    }
    if let Some(cm_disc) = cm_discriminant(curve) {
        if kronecker(&Int::from(cm_disc), &Int::from(p)) != -1 {
            return Err(PrimeSearchError::CMConditionFailed(p, cm_disc));
        }
    }
    let mut table = ApTable::new(curve.clone(), std::collections::BTreeMap::new())?;
    // q = -1 mod p is necessary; walk that progression only
    let mut q = p - 1;
    while q <= bound {
        if q > 2
            && is_prime(&Int::from(q))
            && !curve.disc.is_divisible(&Int::from(q))
            && !curve.conductor.is_multiple_of(q)
        {
            let checks = verify_conditions(&mut table, field, p, q)?;
            debug_assert!(checks.p_divides_q_plus_1);
            if checks.all_pass() {
                return Ok(PrimeSearchResult { q, checks });
            }
        }
        q += p;
    }
    Err(PrimeSearchError::SearchExhausted(bound))
}
