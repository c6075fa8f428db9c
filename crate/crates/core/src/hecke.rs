//! Hecke eigenvalue tables: a_p by counting, catalog overrides for primes
//! where this model has bad reduction, the multiplicative a_n recursion,
//! and the CSV cache format (`p,ap`, ascending).

use crate::curve::{count_ap, CurveError, CurveQ};
use crate::exact::{factorize_u64, primes_up_to, Int};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// a_p values for one curve. `entries` are counted on the model at good
/// primes; `overrides` are catalog-supplied for primes dividing the model
/// discriminant, where counting is impossible.
#[derive(Debug, Clone)]
pub struct ApTable {
    pub curve: CurveQ,
    entries: BTreeMap<u64, i64>,
    overrides: BTreeMap<u64, i64>,
}

impl ApTable {
    pub fn new(curve: CurveQ, overrides: BTreeMap<u64, i64>) -> Result<Self, CurveError> {
        for (&p, &ap) in &overrides {
            if !curve.disc.is_divisible(&Int::from(p)) {
                return Err(CurveError::BadOverridePrime(p));
            }
            if (ap as i128) * (ap as i128) >= 4 * p as i128 {
                return Err(CurveError::HasseViolation(p, ap));
            }
        }
        Ok(ApTable {
            curve,
            entries: BTreeMap::new(),
            overrides,
        })
    }

    /// Counts a_p for every good prime `p <= max_p` not already present.
    pub fn extend_to(&mut self, max_p: u64) -> Result<(), CurveError> {
        for p in primes_up_to(max_p) {
            if p < 3 || self.curve.disc.is_divisible(&Int::from(p)) {
                continue;
            }
            if self.entries.contains_key(&p) {
                continue;
            }
            let ap = count_ap(&self.curve, p)?;
            self.entries.insert(p, ap);
        }
        Ok(())
    }

    /// Override first, then counted entries.
    pub fn ap(&self, p: u64) -> Result<i64, CurveError> {
        if let Some(&v) = self.overrides.get(&p) {
            return Ok(v);
        }
        self.entries
            .get(&p)
            .copied()
            .ok_or(CurveError::MissingPrime(p))
    }

    /// Like [`ap`](Self::ap), but counts and caches a missing good prime
    /// instead of erroring.
    pub fn ap_on_demand(&mut self, p: u64) -> Result<i64, CurveError> {
        if let Some(&v) = self.overrides.get(&p) {
            return Ok(v);
        }
        if let Some(&v) = self.entries.get(&p) {
            return Ok(v);
        }
        let ap = count_ap(&self.curve, p)?;
        self.entries.insert(p, ap);
        Ok(ap)
    }

    pub fn counted(&self) -> &BTreeMap<u64, i64> {
        &self.entries
    }

    pub fn overrides(&self) -> &BTreeMap<u64, i64> {
        &self.overrides
    }

    /// Like [`an`](Self::an), counting any missing good prime on demand.
    pub fn an_on_demand(&mut self, n: u64) -> Result<i64, CurveError> {
        for (p, _) in factorize_u64(n) {
            self.ap_on_demand(p)?;
        }
        self.an(n)
    }

    /// a_n by multiplicativity and the prime-power recursion:
    /// `a_{p^{k+1}} = a_p a_{p^k} - p a_{p^{k-1}}` at good p,
    /// `a_{p^k} = a_p^k` at p | N.
    pub fn an(&self, n: u64) -> Result<i64, CurveError> {
        assert!(n >= 1, "a_n defined for n >= 1");
        let mut result: i64 = 1;
        for (p, e) in factorize_u64(n) {
            let ap = self.ap(p)?;
            let val = if self.curve.conductor.is_multiple_of(p) {
                ap.checked_pow(e).expect("a_p^k overflow")
            } else {
                let mut prev: i64 = 1;
                let mut cur = ap;
                for _ in 1..e {
                    let next = ap * cur - p as i64 * prev;
                    prev = cur;
                    cur = next;
                }
                cur
            };
            result *= val;
        }
        Ok(result)
    }

    /// Counted entries as `p,ap` CSV (overrides are catalog data and are
    /// not persisted).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,ap\n");
        for (p, ap) in &self.entries {
            writeln!(s, "{p},{ap}").unwrap();
        }
        s
    }

    /// Loads a cache and merges it: a conflict with already-present values
    /// is an error, never silently resolved.
    pub fn merge_csv(&mut self, text: &str) -> Result<(), CurveError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("p,ap") => {}
            other => {
                return Err(CurveError::BadCache(format!(
                    "expected header 'p,ap', got {other:?}"
                )))
            }
        }
        let mut last_p = 0u64;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (ps, aps) = line
                .split_once(',')
                .ok_or_else(|| CurveError::BadCache(format!("bad row {line:?}")))?;
            let p: u64 = ps
                .parse()
                .map_err(|_| CurveError::BadCache(format!("bad prime {ps:?}")))?;
            let ap: i64 = aps
                .parse()
                .map_err(|_| CurveError::BadCache(format!("bad a_p {aps:?}")))?;
            if p <= last_p {
                return Err(CurveError::BadCache("rows must be ascending in p".into()));
            }
            last_p = p;
            if let Some(&existing) = self.entries.get(&p) {
                if existing != ap {
                    return Err(CurveError::CacheMismatch(p, ap, existing));
                }
            }
            if (ap as i128) * (ap as i128) >= 4 * p as i128 {
                return Err(CurveError::HasseViolation(p, ap));
            }
            self.entries.insert(p, ap);
        }
        Ok(())
    }
}
