//! Short-Weierstrass curves over Q, the chord-tangent group law over any
//! coefficient field of characteristic != 2,3, naive point counting mod p,
//! and non-torsion certificates for points over quadratic fields.

use crate::exact::{is_prime, prime_factors_u64, ExactError, Int, QuadElem, QuadField, Rat};
use rug::ops::{Pow, RemRounding};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CurveError {
    #[error("discriminant vanishes: the curve y^2 = x^3 + {0}x + {1} is singular")]
    SingularCurve(Int, Int),
    #[error("conductor {0} has prime factor {1} not dividing the discriminant")]
    ConductorMismatch(u64, u64),
    #[error("points lie over different fields")]
    FieldMismatch,
    #[error("prime {0} is unusable for counting on this model (p < 3 or p | disc)")]
    BadReductionPrime(u64),
    #[error("a_p for prime {0} is not in the table")]
    MissingPrime(u64),
    #[error("override for prime {0}: {1} violates the Hasse bound")]
    HasseViolation(u64, i64),
    #[error("override prime {0} does not divide the model discriminant")]
    BadOverridePrime(u64),
    #[error("a_p cache conflict at p = {0}: file has {1}, recomputed {2}")]
    CacheMismatch(u64, i64, i64),
    #[error("malformed a_p cache: {0}")]
    BadCache(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// `y^2 = x^3 + a x + b` with integer coefficients and catalog-supplied
/// conductor. The conductor is validated against the model discriminant,
/// not computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveQ {
    pub a: Int,
    pub b: Int,
    pub disc: Int,
    pub conductor: u64,
    pub label: String,
}

impl CurveQ {
    pub fn new(a: Int, b: Int, conductor: u64, label: &str) -> Result<Self, CurveError> {
        let disc: Int =
            Int::from(-16) * (Int::from(4) * a.clone().pow(3) + Int::from(27) * b.clone().pow(2));
        if disc.is_zero() {
            return Err(CurveError::SingularCurve(a, b));
        }
        for p in prime_factors_u64(conductor) {
            if !disc.is_divisible(&Int::from(p)) {
                return Err(CurveError::ConductorMismatch(conductor, p));
            }
        }
        Ok(CurveQ {
            a,
            b,
            disc,
            conductor,
            label: label.to_string(),
        })
    }

    pub fn from_i64(a: i64, b: i64, conductor: u64, label: &str) -> Result<Self, CurveError> {
        Self::new(Int::from(a), Int::from(b), conductor, label)
    }

    /// `j = 1728 * 4a^3 / (4a^3 + 27b^2)` as an exact rational.
    pub fn j_invariant(&self) -> Rat {
        let four_a3 = Int::from(4) * self.a.clone().pow(3);
        let den = four_a3.clone() + Int::from(27) * self.b.clone().pow(2);
        Rat::from((Int::from(1728) * four_a3, den))
    }
}

/// Coefficient-field abstraction for the group law. Implementations exist
/// for exact rationals, quadratic-field elements, prime fields and
/// fixed-precision complex numbers.
pub trait CoeffField: Clone {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn eq_elem(&self, other: &Self) -> bool;
    /// Same underlying field (modulus / generator / precision)?
    fn same_field(&self, other: &Self) -> bool;
    /// `k * 1` in the field carried by `self`.
    fn small(&self, k: i64) -> Self;
}

impl CoeffField for Rat {
    fn add(&self, other: &Self) -> Self {
        self.clone() + other
    }
    fn sub(&self, other: &Self) -> Self {
        self.clone() - other
    }
    fn mul(&self, other: &Self) -> Self {
        self.clone() * other
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn inv(&self) -> Option<Self> {
        if self.cmp0() == std::cmp::Ordering::Equal {
            None
        } else {
            Some(Rat::from(1) / self.clone())
        }
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn eq_elem(&self, other: &Self) -> bool {
        self == other
    }
    fn same_field(&self, _other: &Self) -> bool {
        true
    }
    fn small(&self, k: i64) -> Self {
        Rat::from(k)
    }
}

impl CoeffField for QuadElem {
    fn add(&self, other: &Self) -> Self {
        QuadElem::add(self, other).expect("field checked")
    }
    fn sub(&self, other: &Self) -> Self {
        QuadElem::sub(self, other).expect("field checked")
    }
    fn mul(&self, other: &Self) -> Self {
        QuadElem::mul(self, other).expect("field checked")
    }
    fn neg(&self) -> Self {
        QuadElem::neg(self)
    }
    fn inv(&self) -> Option<Self> {
        QuadElem::inv(self)
    }
    fn is_zero(&self) -> bool {
        QuadElem::is_zero(self)
    }
    fn eq_elem(&self, other: &Self) -> bool {
        self == other
    }
    fn same_field(&self, other: &Self) -> bool {
        self.field() == other.field()
    }
    fn small(&self, k: i64) -> Self {
        self.field().from_rat(Rat::from(k))
    }
}

/// Element of F_p (p odd prime > 3 for group-law use).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpElem {
    pub p: u64,
    pub v: u64,
}

impl FpElem {
    pub fn new(p: u64, v: i64) -> Self {
        FpElem {
            p,
            v: v.rem_euclid(p as i64) as u64,
        }
    }
}

impl CoeffField for FpElem {
    fn add(&self, other: &Self) -> Self {
        FpElem {
            p: self.p,
            v: (self.v + other.v) % self.p,
        }
    }
    fn sub(&self, other: &Self) -> Self {
        FpElem {
            p: self.p,
            v: (self.v + self.p - other.v) % self.p,
        }
    }
    fn mul(&self, other: &Self) -> Self {
        FpElem {
            p: self.p,
            v: ((self.v as u128 * other.v as u128) % self.p as u128) as u64,
        }
    }
    fn neg(&self) -> Self {
        FpElem {
            p: self.p,
            v: (self.p - self.v) % self.p,
        }
    }
    fn inv(&self) -> Option<Self> {
        if self.v == 0 {
            return None;
        }
        // extended Euclid
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (self.p as i128, self.v as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        debug_assert_eq!(r, 1);
        Some(FpElem {
            p: self.p,
            v: t.rem_euclid(self.p as i128) as u64,
        })
    }
    fn is_zero(&self) -> bool {
        self.v == 0
    }
    fn eq_elem(&self, other: &Self) -> bool {
        self == other
    }
    fn same_field(&self, other: &Self) -> bool {
        self.p == other.p
    }
    fn small(&self, k: i64) -> Self {
        FpElem::new(self.p, k)
    }
}

/// Point on `y^2 = x^3 + a x + b` over a coefficient field `F`.
#[derive(Debug, Clone, PartialEq)]
pub enum Point<F> {
    Infinity,
    Affine(F, F),
}

impl<F> Point<F> {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

/// Curve with coefficients embedded in a specific field.
#[derive(Debug, Clone)]
pub struct EllipticCurve<F> {
    pub a: F,
    pub b: F,
}

impl<F: CoeffField> EllipticCurve<F> {
    pub fn on_curve(&self, pt: &Point<F>) -> bool {
        match pt {
            Point::Infinity => true,
            Point::Affine(x, y) => {
                let lhs = y.mul(y);
                let rhs = x.mul(x).mul(x).add(&self.a.mul(x)).add(&self.b);
                lhs.eq_elem(&rhs)
            }
        }
    }

    pub fn neg(&self, pt: &Point<F>) -> Point<F> {
        match pt {
            Point::Infinity => Point::Infinity,
            Point::Affine(x, y) => Point::Affine(x.clone(), y.neg()),
        }
    }

    /// Chord-tangent addition. `FieldMismatch` if the two points live over
    /// different fields.
    pub fn add(&self, p: &Point<F>, q: &Point<F>) -> Result<Point<F>, CurveError> {
        match (p, q) {
            (Point::Infinity, _) => Ok(q.clone()),
            (_, Point::Infinity) => Ok(p.clone()),
            (Point::Affine(x1, y1), Point::Affine(x2, y2)) => {
                if !x1.same_field(x2) {
                    return Err(CurveError::FieldMismatch);
                }
                let lambda = if x1.eq_elem(x2) {
                    if y1.eq_elem(&y2.neg()) {
                        return Ok(Point::Infinity);
                    }
                    // tangent: (3x^2 + a) / (2y)
                    let num = x1.mul(x1).mul(&x1.small(3)).add(&self.a);
                    let den = y1.mul(&y1.small(2));
                    num.mul(&den.inv().ok_or(CurveError::FieldMismatch)?)
                } else {
                    let num = y2.sub(y1);
                    let den = x2.sub(x1);
                    num.mul(&den.inv().expect("x1 != x2"))
                };
                let x3 = lambda.mul(&lambda).sub(x1).sub(x2);
                let y3 = lambda.mul(&x1.sub(&x3)).sub(y1);
                Ok(Point::Affine(x3, y3))
            }
        }
    }

    /// `n * P` by double-and-add; negative `n` negates the result.
    pub fn scalar_mul(&self, n: i64, p: &Point<F>) -> Result<Point<F>, CurveError> {
        let (mut k, negate) = if n < 0 {
            (-(n as i128), true)
        } else {
            (n as i128, false)
        };
        let mut acc = Point::Infinity;
        let mut base = p.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &base)?;
            }
            k >>= 1;
            if k > 0 {
                base = self.add(&base, &base)?;
            }
        }
        Ok(if negate { self.neg(&acc) } else { acc })
    }
}

impl CurveQ {
    pub fn over_rationals(&self) -> EllipticCurve<Rat> {
        EllipticCurve {
            a: Rat::from(self.a.clone()),
            b: Rat::from(self.b.clone()),
        }
    }

    pub fn over_quad(&self, field: &QuadField) -> EllipticCurve<QuadElem> {
        EllipticCurve {
            a: field.from_rat(Rat::from(self.a.clone())),
            b: field.from_rat(Rat::from(self.b.clone())),
        }
    }

    pub fn over_fp(&self, p: u64) -> Result<EllipticCurve<FpElem>, CurveError> {
        if p <= 3 || self.disc.is_divisible(&Int::from(p)) {
            return Err(CurveError::BadReductionPrime(p));
        }
        let a = self.a.clone().rem_euc(Int::from(p)).to_i64().unwrap();
        let b = self.b.clone().rem_euc(Int::from(p)).to_i64().unwrap();
        Ok(EllipticCurve {
            a: FpElem::new(p, a),
            b: FpElem::new(p, b),
        })
    }
}

/// `a_p = p + 1 - #E(F_p)` by the quadratic-character sum, for odd `p` of
/// good reduction on this model. O(p) time, intended for p < 10^5.
pub fn count_ap(curve: &CurveQ, p: u64) -> Result<i64, CurveError> {
    if p < 3 || !is_prime(&Int::from(p)) || curve.disc.is_divisible(&Int::from(p)) {
        return Err(CurveError::BadReductionPrime(p));
    }
    let a = curve.a.clone().rem_euc(Int::from(p)).to_u64().unwrap();
    let b = curve.b.clone().rem_euc(Int::from(p)).to_u64().unwrap();
    let mut square = vec![false; p as usize];
    for x in 0..p {
        square[((x as u128 * x as u128) % p as u128) as usize] = true;
    }
    let mut sum: i64 = 0;
    for x in 0..p as u128 {
        let v = ((x * x % p as u128) * x + a as u128 * x + b as u128) % p as u128;
        if v != 0 {
            sum += if square[v as usize] { 1 } else { -1 };
        }
    }
    let ap = -sum;
    debug_assert!(ap * ap < 4 * p as i64, "Hasse bound violated at p = {p}");
    Ok(ap)
}

/// A point of `E` with coordinates in a quadratic field (or Q embedded in
/// one), stored exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPoint {
    pub curve: CurveQ,
    pub coords: Option<(QuadElem, QuadElem)>,
}

impl QuadraticPoint {
    pub fn infinity(curve: &CurveQ) -> Self {
        QuadraticPoint {
            curve: curve.clone(),
            coords: None,
        }
    }

    pub fn new(curve: &CurveQ, x: QuadElem, y: QuadElem) -> Result<Self, CurveError> {
        if !x.same_field(&y) {
            return Err(CurveError::FieldMismatch);
        }
        let pt = QuadraticPoint {
            curve: curve.clone(),
            coords: Some((x, y)),
        };
        Ok(pt)
    }

    pub fn is_infinity(&self) -> bool {
        self.coords.is_none()
    }

    /// Exact check of `y^2 = x^3 + a x + b`.
    pub fn on_curve(&self) -> bool {
        match &self.coords {
            None => true,
            Some((x, y)) => self
                .curve
                .over_quad(x.field())
                .on_curve(&Point::Affine(x.clone(), y.clone())),
        }
    }

    /// Applies the field conjugation to both coordinates.
    pub fn galois_conj(&self) -> QuadraticPoint {
        QuadraticPoint {
            curve: self.curve.clone(),
            coords: self.coords.as_ref().map(|(x, y)| (x.conj(), y.conj())),
        }
    }

    pub fn neg(&self) -> QuadraticPoint {
        QuadraticPoint {
            curve: self.curve.clone(),
            coords: self.coords.as_ref().map(|(x, y)| (x.clone(), y.neg())),
        }
    }

    fn as_point(&self) -> Point<QuadElem> {
        match &self.coords {
            None => Point::Infinity,
            Some((x, y)) => Point::Affine(x.clone(), y.clone()),
        }
    }
}

/// Largest torsion order possible over a quadratic field. External fact
/// (Kenku-Momose, Kamienny); recorded in every certificate.
pub const QUADRATIC_TORSION_BOUND: u32 = 18;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TorsionOutcome {
    /// `n * P != O` for all `n = 1..=18`, so P is non-torsion over any
    /// quadratic field.
    NonTorsion(NonTorsionCertificate),
    Torsion {
        order: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonTorsionCertificate {
    pub multiples_checked: u32,
    pub basis: String,
}

/// Computes `n * P` exactly for `n = 1..=18` and classifies P.
///
/// The point must not be the identity (precondition).
pub fn nontorsion_certificate(point: &QuadraticPoint) -> Result<TorsionOutcome, CurveError> {
    assert!(!point.is_infinity(), "precondition: P != O");
    let (x, _) = point.coords.as_ref().unwrap();
    let ec = point.curve.over_quad(x.field());
    let base = point.as_point();
    let mut acc = base.clone();
    for n in 1..=QUADRATIC_TORSION_BOUND {
        if n > 1 {
            acc = ec.add(&acc, &base)?;
        }
        if acc.is_infinity() {
            return Ok(TorsionOutcome::Torsion { order: n });
        }
    }
    Ok(TorsionOutcome::NonTorsion(NonTorsionCertificate {
        multiples_checked: QUADRATIC_TORSION_BOUND,
        basis: format!(
            "nP != O for n = 1..={QUADRATIC_TORSION_BOUND}, exact arithmetic; torsion over \
             quadratic fields is bounded by {QUADRATIC_TORSION_BOUND} (Kenku-Momose, Kamienny)"
        ),
    }))
}

/// Exhaustive search for rational points of small naive height: candidates
/// `x = u / e^2` with `|u| <= num_bound`, `1 <= e <= den_bound`, keeping
/// those where `x^3 + ax + b` is a rational square. Independent of everything
/// analytic; used as an oracle for generators of rank-one curves.
pub fn small_rational_points(curve: &CurveQ, num_bound: i64, den_bound: i64) -> Vec<(Rat, Rat)> {
    let mut out = Vec::new();
    for e in 1..=den_bound {
        for u in -num_bound..=num_bound {
            if e > 1 && num_gcd(u, e) != 1 {
                continue;
            }
            let x = Rat::from((u, e * e));
            let rhs: Rat =
                x.clone().pow(3) + Rat::from(curve.a.clone()) * &x + Rat::from(curve.b.clone());
            if rhs.cmp0() == std::cmp::Ordering::Less {
                continue;
            }
            let num_sq = rhs.numer().clone();
            let den_sq = rhs.denom().clone();
            if num_sq.is_perfect_square() && den_sq.is_perfect_square() {
                let y = Rat::from((num_sq.sqrt(), den_sq.sqrt()));
                if y.cmp0() != std::cmp::Ordering::Equal {
                    out.push((x.clone(), y.clone()));
                    out.push((x, -y));
                } else {
                    out.push((x, y));
                }
            }
        }
    }
    out
}

fn num_gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_37a() -> CurveQ {
        CurveQ::from_i64(-16, 16, 37, "37a-short").unwrap()
    }

    fn rat_pt(x: i64, y: i64) -> Point<Rat> {
        Point::Affine(Rat::from(x), Rat::from(y))
    }

    #[test]
    fn curve_validation() {
        assert!(CurveQ::from_i64(0, 0, 1, "sing").is_err());
        // conductor with a prime not dividing disc
        assert!(matches!(
            CurveQ::from_i64(-16, 16, 5, "bad"),
            Err(CurveError::ConductorMismatch(5, 5))
        ));
        let c = curve_37a();
        assert_eq!(c.disc, Int::from(151552));
    }

    #[test]
    fn group_law_examples() {
        let ec = curve_37a().over_rationals();
        let p = rat_pt(0, 4);
        // identity
        assert_eq!(ec.add(&p, &Point::Infinity).unwrap(), p);
        // inverse pair
        assert_eq!(ec.add(&p, &rat_pt(0, -4)).unwrap(), Point::Infinity);
        // doubling: tangent slope -2 gives (4, 4)
        assert_eq!(ec.add(&p, &p).unwrap(), rat_pt(4, 4));
        assert!(ec.on_curve(&rat_pt(4, 4)));
    }

    #[test]
    fn scalar_mul_basics() {
        let ec = curve_37a().over_rationals();
        let p = rat_pt(0, 4);
        assert_eq!(ec.scalar_mul(0, &p).unwrap(), Point::Infinity);
        assert_eq!(ec.scalar_mul(1, &p).unwrap(), p);
        let m5 = ec.scalar_mul(5, &p).unwrap();
        let m3 = ec.scalar_mul(3, &p).unwrap();
        let m2 = ec.scalar_mul(2, &p).unwrap();
        assert_eq!(ec.add(&m3, &m2).unwrap(), m5);
        assert_eq!(
            ec.scalar_mul(-3, &p).unwrap(),
            ec.neg(&ec.scalar_mul(3, &p).unwrap())
        );
    }

    #[test]
    fn group_law_associative_on_random_multiples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ec = curve_37a().over_rationals();
        let g = rat_pt(0, 4);
        for _ in 0..100 {
            let (i, j, k) = (
                rng.gen_range(-6i64..7),
                rng.gen_range(-6i64..7),
                rng.gen_range(-6i64..7),
            );
            let p = ec.scalar_mul(i, &g).unwrap();
            let q = ec.scalar_mul(j, &g).unwrap();
            let r = ec.scalar_mul(k, &g).unwrap();
            let lhs = ec.add(&ec.add(&p, &q).unwrap(), &r).unwrap();
            let rhs = ec.add(&p, &ec.add(&q, &r).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "i={i} j={j} k={k}");
        }
    }

    /// Fully independent brute-force count over F_p^2.
    fn brute_count(curve: &CurveQ, p: u64) -> i64 {
        let a = curve.a.clone().rem_euc(Int::from(p)).to_u64().unwrap() as u128;
        let b = curve.b.clone().rem_euc(Int::from(p)).to_u64().unwrap() as u128;
        let p = p as u128;
        let mut count: u64 = 1; // point at infinity
        for x in 0..p {
            let rhs = (x * x % p * x + a * x + b) % p;
            for y in 0..p {
                if y * y % p == rhs {
                    count += 1;
                }
            }
        }
        p as i64 + 1 - count as i64
    }

    #[test]
    fn count_ap_examples() {
        let c = curve_37a();
        assert_eq!(count_ap(&c, 3).unwrap(), -3);
        assert_eq!(count_ap(&c, 5).unwrap(), -2);
        assert!(matches!(
            count_ap(&c, 2),
            Err(CurveError::BadReductionPrime(2))
        ));
        assert!(matches!(
            count_ap(&c, 37),
            Err(CurveError::BadReductionPrime(37))
        ));
    }

    #[test]
    fn count_ap_matches_brute_force_small() {
        let c = curve_37a();
        for p in crate::exact::primes_up_to(100) {
            if p < 3 || c.disc.is_divisible(&Int::from(p)) {
                continue;
            }
            let ap = count_ap(&c, p).unwrap();
            assert_eq!(ap, brute_count(&c, p), "p = {p}");
            assert!(ap * ap < 4 * p as i64, "Hasse at p = {p}");
        }
    }

    #[test]
    fn quadratic_point_on_curve_and_conj() {
        let c = curve_37a();
        let f = QuadField::from_i64(-2).unwrap();
        // x = 2, rhs = 8 - 32 + 16 = -8 = (2 sqrt(-2))^2
        let x = f.from_rat(Rat::from(2));
        let y = f.elem(Rat::new(), Rat::from(2));
        let pt = QuadraticPoint::new(&c, x, y).unwrap();
        assert!(pt.on_curve());
        assert_eq!(pt.galois_conj(), pt.neg());
    }

    #[test]
    fn nontorsion_certificate_examples() {
        let c = curve_37a();
        let f = QuadField::from_i64(-1).unwrap();
        let p =
            QuadraticPoint::new(&c, f.from_rat(Rat::from(0)), f.from_rat(Rat::from(4))).unwrap();
        match nontorsion_certificate(&p).unwrap() {
            TorsionOutcome::NonTorsion(cert) => {
                assert_eq!(cert.multiples_checked, 18);
            }
            TorsionOutcome::Torsion { order } => panic!("unexpected torsion of order {order}"),
        }

        // 2-torsion: y = 0 at a rational root of x^3 - x
        let c2 = CurveQ::from_i64(-1, 0, 32, "tors").unwrap();
        let p2 =
            QuadraticPoint::new(&c2, f.from_rat(Rat::from(1)), f.from_rat(Rat::from(0))).unwrap();
        assert_eq!(
            nontorsion_certificate(&p2).unwrap(),
            TorsionOutcome::Torsion { order: 2 }
        );
    }

    #[test]
    fn small_point_search_finds_generator() {
        let c = curve_37a();
        let pts = small_rational_points(&c, 20, 3);
        assert!(pts.iter().any(|(x, y)| *x == 0 && *y == 4));
    }

    #[test]
    fn fp_group_law_order_divides() {
        // group order over F_5 is 8 = 5 + 1 - a_5 with a_5 = -2
        let c = curve_37a();
        let ec = c.over_fp(5).unwrap();
        let p = Point::Affine(FpElem::new(5, 1), FpElem::new(5, 1));
        assert!(ec.on_curve(&p));
        assert!(ec.scalar_mul(8, &p).unwrap().is_infinity());
    }
}
