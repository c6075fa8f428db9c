//! The integrality obstruction for the recurrence `p c_{n+1} = a_p c_n - c_{n-1}`.
//!
//! With `|a_p| < 2 sqrt(p)` the characteristic roots of
//! `x^2 - (a_p/p) x + 1/p` have p-adic valuations {0, -1} (or {-1/2, -1/2}
//! in the supersingular case), so any sequence with `c_0 != 0` is eventually
//! dominated by the negative-valuation root and must leave Z — unless it
//! hits the all-zero tail `(c_k, c_{k+1}) = (0, 0)`. Terms are iterated as
//! exact rationals and valuations tracked directly.

use crate::exact::{val_p, Int, Rat};
use rug::ops::CompleteRound;
use rug::{Complex, Float};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum RecurrenceError {
    #[error("seed c0 must be nonzero")]
    ZeroSeed,
    #[error("a_p = {0} violates the Hasse bound |a_p| < 2 sqrt({1})")]
    HasseViolation(i64, u64),
}

fn check_hasse(a_p: i64, p: u64) -> Result<(), RecurrenceError> {
    if (a_p as i128) * (a_p as i128) >= 4 * p as i128 {
        return Err(RecurrenceError::HasseViolation(a_p, p));
    }
    Ok(())
}

/// Exact trajectory of the recurrence with its valuation profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceState {
    pub p: u64,
    pub a_p: i64,
    pub seq: Vec<Rat>,
    /// v_p(c_i); `None` marks v_p(0) = +infinity
    pub vals: Vec<Option<i64>>,
}

/// Iterates `c_{n+1} = (a_p c_n - c_{n-1}) / p` exactly for `steps` steps.
pub fn generate(
    c0: i64,
    c1: i64,
    a_p: i64,
    p: u64,
    steps: usize,
) -> Result<RecurrenceState, RecurrenceError> {
    if c0 == 0 {
        return Err(RecurrenceError::ZeroSeed);
    }
    check_hasse(a_p, p)?;
    let mut seq = vec![Rat::from(c0), Rat::from(c1)];
    while seq.len() < steps + 1 {
        let n = seq.len();
        let next = (Rat::from(a_p) * &seq[n - 1] - &seq[n - 2]) / Rat::from(p);
        seq.push(next);
    }
    seq.truncate(steps + 1);
    let vals = seq.iter().map(|c| val_p(c, p)).collect();
    Ok(RecurrenceState { p, a_p, seq, vals })
}

pub fn valuation_profile(state: &RecurrenceState) -> Vec<Option<i64>> {
    state.seq.iter().map(|c| val_p(c, state.p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonIntegralOutcome {
    /// smallest n with c_n not an integer
    Index(usize),
    /// `(c_k, c_{k+1}) = (0, 0)` at this k; all later terms vanish
    AllZeroTail(usize),
    /// every term up to the bound stayed integral: a candidate violating the
    /// obstruction, surfaced for manual inspection
    BoundExhausted,
}

/// Finds the first non-integral term (or the all-zero tail) within `bound`
/// steps.
pub fn first_nonintegral(
    c0: i64,
    c1: i64,
    a_p: i64,
    p: u64,
    bound: usize,
) -> Result<NonIntegralOutcome, RecurrenceError> {
    if c0 == 0 {
        return Err(RecurrenceError::ZeroSeed);
    }
    check_hasse(a_p, p)?;
    let mut prev = Rat::from(c0);
    let mut cur = Rat::from(c1);
    if cur.denom() != &Int::from(1) {
        unreachable!("integer seed");
    }
    for n in 2..=bound {
        if prev.cmp0() == std::cmp::Ordering::Equal && cur.cmp0() == std::cmp::Ordering::Equal {
            return Ok(NonIntegralOutcome::AllZeroTail(n - 2));
        }
        let next = (Rat::from(a_p) * &cur - &prev) / Rat::from(p);
        if next.denom() != &Int::from(1) {
            return Ok(NonIntegralOutcome::Index(n));
        }
        prev = cur;
        cur = next;
    }
    if prev.cmp0() == std::cmp::Ordering::Equal && cur.cmp0() == std::cmp::Ordering::Equal {
        return Ok(NonIntegralOutcome::AllZeroTail(bound - 1));
    }
    Ok(NonIntegralOutcome::BoundExhausted)
}

/// Characteristic roots of `x^2 - (a_p/p) x + 1/p` with their p-adic
/// valuations from the Newton polygon of `p x^2 - a_p x + 1`.
#[derive(Debug, Clone)]
pub struct CharRoots {
    pub alpha: Complex,
    pub beta: Complex,
    pub v_alpha: Rat,
    pub v_beta: Rat,
    /// p | a_p; valuations are {-1/2, -1/2} and the ordinary descent
    /// argument does not apply
    pub supersingular: bool,
}

pub fn char_roots(a_p: i64, p: u64, precision: u32) -> Result<CharRoots, RecurrenceError> {
    check_hasse(a_p, p)?;
    // |a_p| < 2 sqrt(p) makes the discriminant strictly negative, so the
    // roots are non-real complex conjugates — in particular irrational
    let disc = (a_p as i128) * (a_p as i128) - 4 * p as i128;
    assert!(disc < 0, "Hasse bound forces complex conjugate roots");
    let half = Float::with_val(precision, a_p) / Float::with_val(precision, 2 * p);
    let im = Float::with_val(precision, -disc).sqrt() / Float::with_val(precision, 2 * p);
    let alpha = Complex::with_val(precision, (half.clone(), im.clone()));
    let beta = Complex::with_val(precision, (half, -im));
    let (v_alpha, v_beta) = if a_p % p as i64 != 0 {
        // Newton polygon vertices (0,0), (1,0), (2,1): slopes 0 and -1
        (Rat::from(-1), Rat::from(0))
    } else {
        // single segment from (0,0) to (2,1): both valuations -1/2
        (Rat::from((-1, 2)), Rat::from((-1, 2)))
    };
    // Vieta sanity on the numeric roots
    let sum = (&alpha + &beta).complete((precision, precision));
    let prod = (&alpha * &beta).complete((precision, precision));
    let tol = Float::with_val(precision, 1e-10);
    debug_assert!(
        (sum - Complex::with_val(precision, Rat::from((a_p, p as i64))))
            .abs()
            .real()
            < &tol
    );
    debug_assert!(
        (prod - Complex::with_val(precision, Rat::from((1, p as i64))))
            .abs()
            .real()
            < &tol
    );
    Ok(CharRoots {
        alpha,
        beta,
        v_alpha,
        v_beta,
        supersingular: a_p % p as i64 == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_examples() {
        let s = generate(1, 0, -2, 5, 4).unwrap();
        assert_eq!(s.seq[2], Rat::from((-1, 5)));
        let s2 = generate(1, 1, 1, 2, 4).unwrap();
        assert_eq!(s2.seq[2], Rat::from(0));
        assert_eq!(s2.seq[3], Rat::from((-1, 2)));
        // defining identity re-verified at every index
        for s in [&s, &s2] {
            for i in 1..s.seq.len() - 1 {
                let lhs = Rat::from(s.p) * &s.seq[i + 1];
                let rhs = Rat::from(s.a_p) * &s.seq[i] - &s.seq[i - 1];
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn generate_rejections() {
        assert_eq!(generate(0, 1, 1, 5, 3), Err(RecurrenceError::ZeroSeed));
        assert_eq!(
            generate(1, 1, 5, 5, 3),
            Err(RecurrenceError::HasseViolation(5, 5))
        );
    }

    #[test]
    fn first_nonintegral_examples() {
        assert_eq!(
            first_nonintegral(1, 0, -2, 5, 50).unwrap(),
            NonIntegralOutcome::Index(2)
        );
        assert_eq!(
            first_nonintegral(1, 1, 1, 2, 50).unwrap(),
            NonIntegralOutcome::Index(3)
        );
        assert_eq!(
            first_nonintegral(0, 1, 1, 2, 50),
            Err(RecurrenceError::ZeroSeed)
        );
    }

    #[test]
    fn valuation_profile_examples() {
        let s = generate(1, 0, -2, 5, 6).unwrap();
        let v = valuation_profile(&s);
        assert_eq!(v[0], Some(0));
        assert_eq!(v[1], None); // v_p(0) = +infinity
        assert_eq!(v[2], Some(-1));
    }

    #[test]
    fn negative_valuations_descend_by_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // ordinary pairs (p, a_p) with p not dividing a_p
        let table = [(3u64, -3i64), (5, -2), (7, -1), (11, -5), (13, -2)];
        for _ in 0..100 {
            let (p, a_p) = table[rng.gen_range(0..table.len())];
            if a_p % p as i64 == 0 {
                continue;
            }
            let c0 = loop {
                let v = rng.gen_range(-100i64..=100);
                if v != 0 {
                    break v;
                }
            };
            let c1 = rng.gen_range(-100i64..=100);
            let s = generate(c0, c1, a_p, p, 30).unwrap();
            let v = valuation_profile(&s);
            let mut seen_negative = false;
            for i in 0..v.len() - 1 {
                if let Some(vi) = v[i] {
                    if vi < 0 {
                        seen_negative = true;
                        assert_eq!(v[i + 1], Some(vi - 1), "p={p} a_p={a_p} c0={c0} c1={c1}");
                    }
                }
            }
            let _ = seen_negative;
        }
    }

    #[test]
    fn char_roots_examples() {
        let r = char_roots(-2, 5, 64).unwrap();
        assert_eq!(r.v_alpha, Rat::from(-1));
        assert_eq!(r.v_beta, Rat::from(0));
        assert!(!r.supersingular);
        let prod = (&r.alpha * &r.beta).complete((64, 64));
        let err = (prod - Complex::with_val(64, Rat::from((1, 5)))).abs();
        assert!(err.real().to_f64() < 1e-12);

        let ss = char_roots(5, 7, 64).unwrap();
        assert!(!ss.supersingular);
        let ss2 = char_roots(7, 13, 64).unwrap();
        assert!(!ss2.supersingular);
        let ss3 = char_roots(5, 5, 64);
        assert!(ss3.is_err()); // 25 >= 20 violates Hasse
        let ss4 = char_roots(3, 3, 64).unwrap();
        assert!(ss4.supersingular);
        assert_eq!(ss4.v_alpha, Rat::from((-1, 2)));
    }
}
