//! Exact arbitrary-precision integers, rationals and quadratic-field elements.
//!
//! Everything here is pure and immutable. Rationals are always stored in
//! lowest terms with positive denominator (the `rug::Rational` canonical
//! form), so equality is structural and serialized values are deterministic.

use rug::integer::IsPrime;
use rug::ops::{Pow, RemRounding};
use rug::{Integer, Rational};
use thiserror::Error;

pub type Int = Integer;
pub type Rat = Rational;

/// Default trial-division bound for `squarefree_kernel`.
pub const DEFAULT_FACTOR_BOUND: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ExactError {
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("cofactor {0} not resolved by trial division up to {1}")]
    FactorizationIncomplete(Int, u64),
    #[error("elements belong to different quadratic fields")]
    FieldMismatch,
    #[error("field generator must be squarefree and not in {{0, 1}}, got {0}")]
    BadFieldGenerator(Int),
}

/// Probabilistic primality at a certainty level far beyond desk-scale inputs.
pub fn is_prime(n: &Int) -> bool {
    n.is_probably_prime(40) != IsPrime::No
}

/// `true` iff `n = k^2` for some integer `k >= 0`.
pub fn is_perfect_square(n: &Int) -> bool {
    *n >= 0 && n.is_perfect_square()
}

/// Writes `n = s^2 * d` with `d` squarefree and `sign(d) = sign(n)`.
///
/// Trial division up to `bound`, then a perfect-power / primality check on
/// the cofactor. A cofactor that resists both is reported as
/// `FactorizationIncomplete` rather than guessed at.
pub fn squarefree_kernel_bounded(n: &Int, bound: u64) -> Result<(Int, Int), ExactError> {
    if n.is_zero() {
        return Err(ExactError::ZeroInput);
    }
    let negative = *n < 0;
    let mut rem = n.clone().abs();
    let mut s = Int::from(1);
    let mut d = Int::from(1);

    let strip = |rem: &mut Int, f: u64, s: &mut Int, d: &mut Int| {
        let mut e = 0u32;
        let fi = Int::from(f);
        while rem.is_divisible(&fi) {
            *rem /= &fi;
            e += 1;
        }
        if e > 0 {
            if e >= 2 {
                *s *= fi.clone().pow(e / 2);
            }
            if e % 2 == 1 {
                *d *= fi;
            }
        }
    };

    strip(&mut rem, 2, &mut s, &mut d);
    let mut f: u64 = 3;
    while f <= bound {
        let fsq = Int::from(f) * Int::from(f);
        if fsq > rem {
            break;
        }
        strip(&mut rem, f, &mut s, &mut d);
        f += 2;
    }

    if rem != 1 {
        if is_perfect_square(&rem) {
            s *= rem.sqrt();
        } else if is_prime(&rem) {
            d *= &rem;
        } else if let Some((base, k)) = perfect_power(&rem) {
            if is_prime(&base) {
                if k / 2 >= 1 {
                    s *= base.clone().pow(k / 2);
                }
                if k % 2 == 1 {
                    d *= base;
                }
            } else {
                return Err(ExactError::FactorizationIncomplete(rem, bound));
            }
        } else {
            return Err(ExactError::FactorizationIncomplete(rem, bound));
        }
    }

    if negative {
        d = -d;
    }
    Ok((s, d))
}

pub fn squarefree_kernel(n: &Int) -> Result<(Int, Int), ExactError> {
    squarefree_kernel_bounded(n, DEFAULT_FACTOR_BOUND)
}

/// Largest `(base, k)` with `n = base^k`, `k >= 2`, if any.
fn perfect_power(n: &Int) -> Option<(Int, u32)> {
    let bits = n.significant_bits();
    for k in (2..=bits).rev() {
        let root = n.clone().root(k);
        if root.clone().pow(k) == *n {
            return Some((root, k));
        }
    }
    None
}

/// Kronecker symbol `(a|n)` over its full domain.
pub fn kronecker(a: &Int, n: &Int) -> i32 {
    if n.is_zero() {
        return if a.clone().abs() == 1 { 1 } else { 0 };
    }
    let mut a = a.clone();
    let mut n = n.clone();
    let mut result: i32 = 1;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // factor (a|2) out of even n
    if n.is_even() {
        if a.is_even() {
            return 0;
        }
        let a8 = a.clone().rem_euc(Int::from(8)).to_u32().unwrap();
        let flip = a8 == 3 || a8 == 5;
        while n.is_even() {
            n /= 2;
            if flip {
                result = -result;
            }
        }
    }
    if n == 1 {
        return result;
    }
    // Jacobi loop for odd n > 1
    a = a.rem_euc(n.clone());
    while a != 0 {
        while a.is_even() {
            a /= 2;
            let n8 = n.clone().rem_euc(Int::from(8)).to_u32().unwrap();
            if n8 == 3 || n8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.clone().rem_euc(Int::from(4)) == 3 && n.clone().rem_euc(Int::from(4)) == 3 {
            result = -result;
        }
        a = a.rem_euc(n.clone());
    }
    if n == 1 {
        result
    } else {
        0
    }
}

pub fn kronecker_i64(a: i64, n: i64) -> i32 {
    kronecker(&Int::from(a), &Int::from(n))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if sieve[p] {
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// Distinct prime factors by trial division (intended for conductors and
/// other small inputs).
pub fn prime_factors_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Prime factorization `p -> e` by trial division.
pub fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            let mut e = 0;
            while n.is_multiple_of(f) {
                n /= f;
                e += 1;
            }
            out.push((f, e));
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// p-adic valuation of a rational; `None` encodes `v_p(0) = +infinity`.
pub fn val_p(r: &Rat, p: u64) -> Option<i64> {
    if r.cmp0() == std::cmp::Ordering::Equal {
        return None;
    }
    let p = Int::from(p);
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    let vnum = num.remove_factor_mut(&p) as i64;
    let vden = den.remove_factor_mut(&p) as i64;
    Some(vnum - vden)
}

/// The field `Q(sqrt(d))` for squarefree `d != 0, 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadField {
    d: Int,
    fund_disc: Int,
}

impl QuadField {
    pub fn new(d: Int) -> Result<Self, ExactError> {
        if d == 0 || d == 1 {
            return Err(ExactError::BadFieldGenerator(d));
        }
        let (s, _) = squarefree_kernel(&d)?;
        if s != 1 {
            return Err(ExactError::BadFieldGenerator(d));
        }
        let fund_disc = if d.clone().rem_euc(Int::from(4)) == 1 {
            d.clone()
        } else {
            d.clone() * 4
        };
        Ok(QuadField { d, fund_disc })
    }

    pub fn from_i64(d: i64) -> Result<Self, ExactError> {
        Self::new(Int::from(d))
    }

    pub fn d(&self) -> &Int {
        &self.d
    }

    pub fn fund_disc(&self) -> &Int {
        &self.fund_disc
    }

    pub fn is_imaginary(&self) -> bool {
        self.d < 0
    }

    /// The element `a + b*sqrt(d)`.
    pub fn elem(&self, a: Rat, b: Rat) -> QuadElem {
        QuadElem {
            field: self.clone(),
            a,
            b,
        }
    }

    pub fn from_rat(&self, a: Rat) -> QuadElem {
        self.elem(a, Rat::new())
    }
}

/// `a + b*sqrt(d)` with exact rational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadElem {
    field: QuadField,
    a: Rat,
    b: Rat,
}

impl QuadElem {
    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn rational_part(&self) -> &Rat {
        &self.a
    }

    pub fn surd_part(&self) -> &Rat {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.cmp0() == std::cmp::Ordering::Equal && self.b.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn is_rational(&self) -> bool {
        self.b.cmp0() == std::cmp::Ordering::Equal
    }

    fn check_field(&self, other: &QuadElem) -> Result<(), ExactError> {
        if self.field != other.field {
            return Err(ExactError::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &QuadElem) -> Result<QuadElem, ExactError> {
        self.check_field(other)?;
        Ok(self
            .field
            .elem(self.a.clone() + &other.a, self.b.clone() + &other.b))
    }

    pub fn sub(&self, other: &QuadElem) -> Result<QuadElem, ExactError> {
        self.check_field(other)?;
        Ok(self
            .field
            .elem(self.a.clone() - &other.a, self.b.clone() - &other.b))
    }

    pub fn mul(&self, other: &QuadElem) -> Result<QuadElem, ExactError> {
        self.check_field(other)?;
        let d = Rat::from(self.field.d.clone());
        let a = self.a.clone() * &other.a + self.b.clone() * &other.b * &d;
        let b = self.a.clone() * &other.b + self.b.clone() * &other.a;
        Ok(self.field.elem(a, b))
    }

    pub fn neg(&self) -> QuadElem {
        self.field.elem(-self.a.clone(), -self.b.clone())
    }

    /// `a - b*sqrt(d)`; the nontrivial automorphism of the field.
    pub fn conj(&self) -> QuadElem {
        self.field.elem(self.a.clone(), -self.b.clone())
    }

    /// `a^2 - d b^2`, a rational.
    pub fn norm(&self) -> Rat {
        let d = Rat::from(self.field.d.clone());
        self.a.clone() * &self.a - self.b.clone() * &self.b * d
    }

    pub fn inv(&self) -> Option<QuadElem> {
        let n = self.norm();
        if n.cmp0() == std::cmp::Ordering::Equal {
            return None;
        }
        let c = self.conj();
        Some(self.field.elem(c.a / &n, c.b / n))
    }

    pub fn div(&self, other: &QuadElem) -> Result<Option<QuadElem>, ExactError> {
        self.check_field(other)?;
        match other.inv() {
            None => Ok(None),
            Some(inv) => Ok(Some(self.mul(&inv)?)),
        }
    }
}

/// Conjugation as a free function, mirroring the library surface.
pub fn quad_conj(x: &QuadElem) -> QuadElem {
    x.conj()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> Int {
        Int::from(n)
    }

    #[test]
    fn squarefree_kernel_examples() {
        assert_eq!(squarefree_kernel(&int(1)).unwrap(), (int(1), int(1)));
        assert_eq!(squarefree_kernel(&int(-8)).unwrap(), (int(2), int(-2)));
        assert_eq!(squarefree_kernel(&int(360)).unwrap(), (int(6), int(10)));
        assert!(matches!(
            squarefree_kernel(&int(0)),
            Err(ExactError::ZeroInput)
        ));
    }

    #[test]
    fn squarefree_kernel_reconstructs() {
        for n in -1000i64..1000 {
            if n == 0 {
                continue;
            }
            let (s, d) = squarefree_kernel(&int(n)).unwrap();
            assert_eq!(s.clone() * &s * &d, int(n), "n = {n}");
            assert!((d < 0) == (n < 0));
            let (s2, _) = squarefree_kernel(&d).unwrap();
            assert_eq!(s2, 1, "kernel of {n} not squarefree");
        }
    }

    #[test]
    fn squarefree_kernel_incomplete_cofactor() {
        // 1000003 * 1000033 with forced tiny bound: unresolvable semiprime
        let n = int(1_000_003) * int(1_000_033);
        assert!(matches!(
            squarefree_kernel_bounded(&n, 100),
            Err(ExactError::FactorizationIncomplete(_, 100))
        ));
        // square of a large prime resolves via the perfect-square check
        let sq = int(1_000_003) * int(1_000_003);
        assert_eq!(
            squarefree_kernel_bounded(&sq, 100).unwrap(),
            (int(1_000_003), int(1))
        );
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_i64(1, 5), 1);
        assert_eq!(kronecker_i64(-4, 7), -1);
        assert_eq!(kronecker_i64(-7, 37), 1);
        assert_eq!(kronecker_i64(0, 1), 1);
        assert_eq!(kronecker_i64(5, 0), 0);
        assert_eq!(kronecker_i64(-1, 0), 1);
    }

    #[test]
    fn kronecker_matches_legendre_exhaustively() {
        // against explicit quadratic-residue sets for odd primes < 200
        for &p in primes_up_to(200).iter().filter(|&&p| p > 2) {
            let mut squares = vec![false; p as usize];
            for x in 0..p {
                squares[((x * x) % p) as usize] = true;
            }
            for a in -(p as i64)..(2 * p as i64) {
                let r = a.rem_euclid(p as i64) as usize;
                let expect = if r == 0 {
                    0
                } else if squares[r] {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker_i64(a, p as i64), expect, "a={a}, p={p}");
            }
        }
    }

    #[test]
    fn kronecker_multiplicative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a: i64 = rng.gen_range(-300..300);
            let b: i64 = rng.gen_range(-300..300);
            let n: i64 = rng.gen_range(-300..300);
            assert_eq!(
                kronecker_i64(a, n) * kronecker_i64(b, n),
                kronecker_i64(a * b, n),
                "a={a} b={b} n={n}"
            );
        }
    }

    #[test]
    fn kronecker_agrees_with_gmp() {
        for a in -60i64..60 {
            for n in -60i64..60 {
                assert_eq!(
                    kronecker_i64(a, n),
                    Int::from(a).kronecker(&Int::from(n)),
                    "a={a} n={n}"
                );
            }
        }
    }

    #[test]
    fn perfect_square_examples() {
        assert!(is_perfect_square(&int(0)));
        assert!(is_perfect_square(&int(49)));
        assert!(!is_perfect_square(&int(-4)));
        assert!(!is_perfect_square(&int(48)));
    }

    #[test]
    fn quad_conj_examples() {
        let f = QuadField::from_i64(-7).unwrap();
        let x = f.elem(Rat::from(3), Rat::from(2));
        let c = quad_conj(&x);
        assert_eq!(c.rational_part(), &Rat::from(3));
        assert_eq!(c.surd_part(), &Rat::from(-2));
        assert_eq!(quad_conj(&c), x);
        let r = f.from_rat(Rat::from(5));
        assert_eq!(quad_conj(&r), r);
    }

    #[test]
    fn quad_field_rejects_bad_generators() {
        assert!(QuadField::from_i64(0).is_err());
        assert!(QuadField::from_i64(1).is_err());
        assert!(QuadField::from_i64(12).is_err());
        assert_eq!(QuadField::from_i64(-7).unwrap().fund_disc(), &int(-7));
        assert_eq!(QuadField::from_i64(-1).unwrap().fund_disc(), &int(-4));
        assert_eq!(QuadField::from_i64(5).unwrap().fund_disc(), &int(5));
    }

    #[test]
    fn norm_multiplicative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = QuadField::from_i64(-7).unwrap();
        for _ in 0..200 {
            let e1 = f.elem(
                Rat::from((rng.gen_range(-20i64..20), rng.gen_range(1i64..9))),
                Rat::from((rng.gen_range(-20i64..20), rng.gen_range(1i64..9))),
            );
            let e2 = f.elem(
                Rat::from((rng.gen_range(-20i64..20), rng.gen_range(1i64..9))),
                Rat::from((rng.gen_range(-20i64..20), rng.gen_range(1i64..9))),
            );
            let lhs = e1.mul(&e2).unwrap().norm();
            let rhs = e1.norm() * e2.norm();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn field_mismatch_is_detected() {
        let f1 = QuadField::from_i64(-7).unwrap();
        let f2 = QuadField::from_i64(-11).unwrap();
        let x = f1.from_rat(Rat::from(1));
        let y = f2.from_rat(Rat::from(1));
        assert_eq!(x.add(&y), Err(ExactError::FieldMismatch));
    }

    #[test]
    fn val_p_on_rationals() {
        assert_eq!(val_p(&Rat::from((8, 3)), 2), Some(3));
        assert_eq!(val_p(&Rat::from((3, 8)), 2), Some(-3));
        assert_eq!(val_p(&Rat::new(), 5), None);
        assert_eq!(val_p(&Rat::from(7), 5), Some(0));
    }
}
