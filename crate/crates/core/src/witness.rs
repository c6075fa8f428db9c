//! Families of explicit non-torsion quadratic points.
//!
//! For `E: y^2 = x^3 + ax + b` of conductor N set `M = 4 prod_{p|N} p` and
//! `f(m) = (1+Mm)^3 + a M^4 (1+Mm) + b M^6`. Whenever `f(m) = s^2 d < 0`
//! with d squarefree, the point
//! `P_m = ((1+Mm)/M^2, (s/M^3) sqrt(d))` lies on E over `Q(sqrt(d))`, and
//! the construction forces every prime dividing N to split in that field.
//! Members with pairwise distinct kernels d generate independent points over
//! the compositum, since the field conjugation sends each `P_m` to `-P_m`.

use crate::curve::{
    nontorsion_certificate, CurveError, CurveQ, NonTorsionCertificate, QuadraticPoint,
    TorsionOutcome,
};
use crate::exact::{
    is_perfect_square, kronecker, prime_factors_u64, squarefree_kernel, ExactError, Int, QuadField,
    Rat,
};
use rug::ops::{Pow, RemRounding};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum WitnessError {
    #[error("f(m) = {0} is non-negative; no imaginary field arises")]
    NonNegativeF(Int),
    #[error("f(m) = {0} is a perfect square; y^2 - f(m) is reducible")]
    SquareF(Int),
    #[error("search exhausted after {0} candidates with only {1} members found")]
    SearchExhausted(u64, usize),
    #[error("independence check failed for member m = {m}: {clause}")]
    CheckFailed { m: Int, clause: String },
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Curve together with the modulus M of its witness family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessConfig {
    pub curve: CurveQ,
    pub m_mod: Int,
}

/// M = 4 * prod of the distinct primes dividing N.
pub fn build_config(curve: &CurveQ) -> WitnessConfig {
    let mut m_mod = Int::from(4);
    for p in prime_factors_u64(curve.conductor) {
        m_mod *= p;
    }
    WitnessConfig {
        curve: curve.clone(),
        m_mod,
    }
}

/// f(m) = (1+Mm)^3 + a M^4 (1+Mm) + b M^6, exactly.
pub fn eval_f(config: &WitnessConfig, m: &Int) -> Int {
    let mm = &config.m_mod;
    let t = Int::from(1) + Int::from(mm * m);
    let m4 = mm.clone().pow(4);
    let m6 = mm.clone().pow(6);
    t.clone().pow(3) + &config.curve.a * m4 * &t + &config.curve.b * m6
}

/// One accepted family member.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPoint {
    pub m: Int,
    pub f_m: Int,
    /// f_m = s^2 * d with d < 0 squarefree
    pub s: Int,
    pub d: Int,
    pub field: QuadField,
    pub point: QuadraticPoint,
    pub certificate: NonTorsionCertificate,
}

/// Builds `P_m` from an `m` with `f(m) < 0` and non-square, including the
/// non-torsion certificate. Exact on-curve membership is asserted.
pub fn make_point(config: &WitnessConfig, m: &Int) -> Result<WitnessPoint, WitnessError> {
    let f_m = eval_f(config, m);
    if f_m >= 0 {
        return Err(WitnessError::NonNegativeF(f_m));
    }
    if is_perfect_square(&f_m) {
        return Err(WitnessError::SquareF(f_m));
    }
    let (s, d) = squarefree_kernel(&f_m)?;
    debug_assert!(d < 0);
    let field = QuadField::new(d.clone())?;
    let mm = &config.m_mod;
    let t = Int::from(1) + Int::from(mm * m);
    let x = field.from_rat(Rat::from((t, mm.clone().square())));
    let y = field.elem(Rat::new(), Rat::from((s.clone(), mm.clone().pow(3))));
    let point = QuadraticPoint::new(&config.curve, x, y)?;
    assert!(
        point.on_curve(),
        "P_m must satisfy the curve equation exactly"
    );
    let certificate = match nontorsion_certificate(&point)? {
        TorsionOutcome::NonTorsion(c) => c,
        TorsionOutcome::Torsion { order } => {
            return Err(WitnessError::CheckFailed {
                m: m.clone(),
                clause: format!("point is torsion of order {order}"),
            })
        }
    };
    Ok(WitnessPoint {
        m: m.clone(),
        f_m,
        s,
        d,
        field,
        point,
        certificate,
    })
}

/// True iff every odd prime dividing N splits in the field, and additionally
/// fund_disc = 1 mod 8 when N is even (so 2 splits too).
pub fn check_split(curve: &CurveQ, field: &QuadField) -> bool {
    for p in prime_factors_u64(curve.conductor) {
        if p == 2 {
            if field.fund_disc().clone().rem_euc(Int::from(8)) != 1 {
                return false;
            }
        } else if kronecker(field.fund_disc(), &Int::from(p)) != 1 {
            return false;
        }
    }
    true
}

/// The thirteen rational CM j-invariants and their field discriminants.
const CM_J_TABLE: [(i64, i128); 13] = [
    (-3, 0),
    (-4, 1728),
    (-7, -3375),
    (-8, 8000),
    (-11, -32768),
    (-12, 54000),
    (-16, 287496),
    (-19, -884736),
    (-27, -12288000),
    (-28, 16581375),
    (-43, -884736000),
    (-67, -147197952000),
    (-163, -262537412640768000),
];

/// CM discriminant of the curve, if it has complex multiplication, detected
/// through its j-invariant.
pub fn cm_discriminant(curve: &CurveQ) -> Option<i64> {
    let j = curve.j_invariant();
    if j.denom() != &Int::from(1) {
        return None;
    }
    for (disc, jv) in CM_J_TABLE {
        if *j.numer() == jv {
            return Some(disc);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFamily {
    pub config: WitnessConfig,
    pub members: Vec<WitnessPoint>,
    /// m values skipped because the squarefree kernel could not be resolved
    /// within the factoring bound.
    pub skipped: Vec<Int>,
}

/// Scans m downward from just below the real-root threshold, accepting
/// members until `k` are found. Deterministic; candidates whose f(m) resists
/// factoring within the bound are recorded in `skipped`, never silently
/// dropped. Fails with `SearchExhausted` after `max_candidates` trials.
pub fn scan_family(
    curve: &CurveQ,
    k: usize,
    max_candidates: u64,
) -> Result<WitnessFamily, WitnessError> {
    assert!(k >= 1);
    let config = build_config(curve);
    let mut m = scan_start(&config);
    let cm_fund = cm_discriminant(curve).map(|disc| {
        // reduce the CM discriminant to its field's fundamental discriminant
        let d = if disc % 4 == 0 { disc / 4 } else { disc };
        QuadField::from_i64(d).unwrap().fund_disc().clone()
    });

    let mut members: Vec<WitnessPoint> = Vec::new();
    let mut skipped = Vec::new();
    let mut tried = 0u64;
    while members.len() < k {
        if tried >= max_candidates {
            return Err(WitnessError::SearchExhausted(max_candidates, members.len()));
        }
        tried += 1;
        let cand = m.clone();
        m -= 1;

        let f_m = eval_f(&config, &cand);
        if f_m >= 0 || is_perfect_square(&f_m) {
            continue;
        }
        let wp = match make_point(&config, &cand) {
            Ok(wp) => wp,
            Err(WitnessError::Exact(ExactError::FactorizationIncomplete(_, _))) => {
                skipped.push(cand);
                continue;
            }
            Err(WitnessError::CheckFailed { .. }) => continue, // torsion member
            Err(e) => return Err(e),
        };
        if members.iter().any(|w| w.d == wp.d) {
            continue;
        }
        if let Some(cm) = &cm_fund {
            if wp.field.fund_disc() == cm {
                continue;
            }
        }
        // split behavior is forced by the congruences f(m) = 1 mod p;
        // asserted rather than assumed
        assert!(
            check_split(curve, &wp.field),
            "split check must hold by construction"
        );
        // discriminant coprime to N
        let g = wp
            .field
            .fund_disc()
            .clone()
            .gcd(&Int::from(curve.conductor));
        assert_eq!(g, 1, "fundamental discriminant must be prime to N");
        members.push(wp);
    }
    Ok(WitnessFamily {
        config,
        members,
        skipped,
    })
}

/// Largest m with `1 + Mm` below the least real root of
/// `t^3 + a M^4 t + b M^6` (so f(m) < 0 for all subsequent candidates).
/// The root is located in floating point; each candidate's sign is still
/// confirmed exactly during the scan.
fn scan_start(config: &WitnessConfig) -> Int {
    let mm = config.m_mod.to_f64();
    let p = config.curve.a.to_f64() * mm.powi(4);
    let q = config.curve.b.to_f64() * mm.powi(6);
    let root = smallest_real_root(p, q);
    Int::from_f64(((root - 1.0) / mm).floor()).unwrap()
}

/// Least real root of `t^3 + p t + q` (Cardano / trigonometric form).
fn smallest_real_root(p: f64, q: f64) -> f64 {
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    if disc > 0.0 {
        // three real roots
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = (3.0 * q / (p * r)).acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .fold(f64::INFINITY, f64::min)
    } else {
        // one real root
        let half_q = q / 2.0;
        let rad = (half_q * half_q + p * p * p / 27.0).sqrt();
        let cbrt = |x: f64| x.signum() * x.abs().cbrt();
        cbrt(-half_q + rad) + cbrt(-half_q - rad)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceReport {
    pub rank_lower_bound: usize,
    pub kernels: Vec<Int>,
    pub statement: String,
}

/// Re-verifies the family member by member: non-torsion, pairwise distinct
/// kernels, and conj(P) = -P; on success reports rank >= k over the
/// compositum of the member fields.
pub fn independence_certificate(
    family: &WitnessFamily,
) -> Result<IndependenceReport, WitnessError> {
    assert!(!family.members.is_empty(), "family must be non-empty");
    let mut kernels: Vec<Int> = Vec::new();
    for w in &family.members {
        match nontorsion_certificate(&w.point)? {
            TorsionOutcome::NonTorsion(_) => {}
            TorsionOutcome::Torsion { order } => {
                return Err(WitnessError::CheckFailed {
                    m: w.m.clone(),
                    clause: format!("non-torsion clause (i): order {order}"),
                })
            }
        }
        if kernels.contains(&w.d) {
            return Err(WitnessError::CheckFailed {
                m: w.m.clone(),
                clause: format!("distinct-kernel clause (ii): d = {} repeated", w.d),
            });
        }
        let conj = w.point.galois_conj();
        if conj != w.point.neg() {
            return Err(WitnessError::CheckFailed {
                m: w.m.clone(),
                clause: "conjugation clause (iii): conj(P) != -P".into(),
            });
        }
        kernels.push(w.d.clone());
    }
    let k = family.members.len();
    Ok(IndependenceReport {
        rank_lower_bound: k,
        kernels,
        statement: format!(
            "each P_m is non-torsion, the kernels d are pairwise distinct (so the fields \
             Q(sqrt d) are linearly disjoint), and conj(P_m) = -P_m; a vanishing integer \
             combination sum a_i P_{{m_i}} = O would give 2 a_i P_{{m_i}} = O per member, \
             contradicting non-torsion, hence rank over the compositum >= {k}"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_37a() -> CurveQ {
        CurveQ::from_i64(-16, 16, 37, "37a-short").unwrap()
    }

    fn curve_cm() -> CurveQ {
        CurveQ::from_i64(0, 16, 27, "27a-cm").unwrap()
    }

    #[test]
    fn build_config_examples() {
        assert_eq!(build_config(&curve_37a()).m_mod, 148);
        let c15 = CurveQ::from_i64(-7, 6, 10, "10-like").unwrap(); // disc = 6400 = 2^8 5^2
        assert_eq!(build_config(&c15).m_mod, 40);
        let c32 = CurveQ::from_i64(-1, 0, 32, "32-like").unwrap();
        assert_eq!(build_config(&c32).m_mod, 8);
    }

    #[test]
    fn eval_f_examples() {
        // synthetic config with M = 4, a = 0, b = 1
        let curve = CurveQ::from_i64(0, 1, 1, "syn").unwrap();
        let config = WitnessConfig {
            curve,
            m_mod: Int::from(4),
        };
        assert_eq!(eval_f(&config, &Int::from(0)), 4097);
        assert_eq!(eval_f(&config, &Int::from(-1)), 4069);
    }

    #[test]
    fn congruences_hold_on_random_m() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for curve in [
            curve_37a(),
            curve_cm(),
            CurveQ::from_i64(-1, 0, 32, "32-like").unwrap(),
        ] {
            let config = build_config(&curve);
            for _ in 0..200 {
                let m = Int::from(rng.gen_range(-1_000_000i64..=1_000_000));
                let f = eval_f(&config, &m);
                for p in prime_factors_u64(curve.conductor) {
                    if p == 2 {
                        assert_eq!(f.clone().rem_euc(Int::from(8)), 1);
                    } else {
                        assert_eq!(f.clone().rem_euc(Int::from(p)), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn check_split_examples() {
        let c37 = curve_37a();
        assert!(check_split(&c37, &QuadField::from_i64(-7).unwrap()));
        assert!(check_split(&c37, &QuadField::from_i64(-1).unwrap()));
        let c7 = CurveQ::from_i64(-3, 2, 7, "7-like");
        if let Ok(c7) = c7 {
            assert!(!check_split(&c7, &QuadField::from_i64(-1).unwrap()));
        }
    }

    #[test]
    fn cm_table_examples() {
        assert_eq!(cm_discriminant(&curve_cm()), Some(-3));
        let j1728 = CurveQ::from_i64(-1, 0, 32, "j1728").unwrap();
        assert_eq!(cm_discriminant(&j1728), Some(-4));
        assert_eq!(cm_discriminant(&curve_37a()), None);
    }

    #[test]
    fn scan_family_37a() {
        let fam = scan_family(&curve_37a(), 3, 10_000).unwrap();
        assert_eq!(fam.members.len(), 3);
        let mut ds: Vec<_> = fam.members.iter().map(|w| w.d.clone()).collect();
        ds.dedup();
        assert_eq!(ds.len(), 3);
        for w in &fam.members {
            assert!(w.point.on_curve());
            assert!(w.f_m < 0);
            assert_eq!(w.f_m, w.s.clone().square() * &w.d);
            assert!(check_split(&curve_37a(), &w.field));
        }
        let rep = independence_certificate(&fam).unwrap();
        assert_eq!(rep.rank_lower_bound, 3);
    }

    #[test]
    fn scan_family_cm_excludes_cm_kernel() {
        let fam = scan_family(&curve_cm(), 3, 10_000).unwrap();
        for w in &fam.members {
            assert_ne!(w.field.fund_disc().clone(), -3);
        }
    }

    #[test]
    fn scan_exhaustion() {
        match scan_family(&curve_37a(), 50, 3) {
            Err(WitnessError::SearchExhausted(3, _)) => {}
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_kernel_rejected_by_certificate() {
        let fam = scan_family(&curve_37a(), 2, 10_000).unwrap();
        let mut bad = fam.clone();
        bad.members[1] = bad.members[0].clone();
        match independence_certificate(&bad) {
            Err(WitnessError::CheckFailed { clause, .. }) => {
                assert!(clause.contains("clause (ii)"), "{clause}")
            }
            other => panic!("expected duplicate-kernel failure, got {other:?}"),
        }
    }
}
