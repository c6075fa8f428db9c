//! Heegner points via the modular parametrization, with numeric
//! verification of the norm-compatibility (trace) relations.
//!
//! Pipeline: the period lattice of `y^2 = x^3 + ax + b` is computed by the
//! (complex) arithmetic-geometric mean from the roots of the cubic; CM
//! points tau on X_0(N) come from oriented binary quadratic forms [A,B,C]
//! with N | A and a fixed square root B0 of the discriminant mod 4N; the
//! modular parametrization z = sum a_n/n q^n maps them into C/Lambda; the
//! Weierstrass p-function (q-series) maps back to curve coordinates, and
//! real trace values are recognized as exact rationals by continued
//! fractions. All tolerances and precisions are explicit.

use crate::classfield::{heegner_hypothesis, reduced_forms, FormClass};
use crate::curve::{CurveError, CurveQ};
use crate::exact::{kronecker, Int, QuadField, Rat};
use crate::hecke::ApTable;
use rug::ops::{CompleteRound, Pow};
use rug::{Complex, Float};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeegnerError {
    #[error("requested precision could not be reached: {0}")]
    PrecisionUnreachable(String),
    #[error("no square root of {0} exists mod {1} (Heegner hypothesis fails)")]
    NoSquareRoot(i64, u64),
    #[error("no oriented level-{0} representative found for class {1:?} within the search bound")]
    SearchExhausted(u64, FormClass),
    #[error("prime {0} is not inert in the field of discriminant {1}")]
    NotInert(u64, i64),
    #[error("rational recognition failed: {0}")]
    RecognitionFailed(String),
    #[error("class number of discriminant {0} is {1}, not 1")]
    ClassNumberNotOne(i64, u64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("{0}")]
    Precondition(String),
}

/// Bits for a requested number of decimal digits, with guard bits.
fn bits_for(digits: u32) -> u32 {
    (digits as f64 * 3.322).ceil() as u32 + 64
}

/// Complex arithmetic-geometric mean with the optimal branch choice
/// `|a' - b'| <= |a' + b'|` at every step.
fn cagm(x: &Complex, y: &Complex, prec: u32) -> Complex {
    let mut a = x.clone();
    let mut b = y.clone();
    let eps = Float::with_val(prec, 2).pow(-(prec as i32) + 8);
    for _ in 0..prec {
        let diff = a.clone() - &b;
        let scale = a.clone().abs().into_real_imag().0;
        if *diff.abs().real() <= eps.clone() * scale {
            break;
        }
        let a2 = (a.clone() + &b) / 2u32;
        let mut b2 = (a.clone() * &b).sqrt();
        let d_minus = (a2.clone() - &b2).abs();
        let d_plus = (a2.clone() + &b2).abs();
        if d_minus.real() > d_plus.real() {
            b2 = -b2;
        }
        a = a2;
        b = b2;
    }
    a
}

/// Roots of `x^3 + a x + b`, refined by Newton iteration at working
/// precision from double-precision seeds. Ordered so that `e1` is real
/// (the largest real root), and for one real root `Im(e2) > 0 > Im(e3)`.
fn cubic_roots(a: &Int, b: &Int, prec: u32) -> (Complex, Complex, Complex) {
    let af = Float::with_val(prec, a);
    let bf = Float::with_val(prec, b);
    let newton = |seed: Complex| -> Complex {
        let mut x = seed;
        for _ in 0..200 {
            let fx = x.clone().pow(3)
                + Complex::with_val(prec, (&af, Float::new(prec))) * &x
                + Complex::with_val(prec, (&bf, Float::new(prec)));
            let dfx = Complex::with_val(prec, 3) * x.clone().square()
                + Complex::with_val(prec, (&af, Float::new(prec)));
            let step: Complex = fx / dfx;
            let done = *step.clone().abs().real()
                < Float::with_val(prec, 2).pow(-(prec as i32) + 6)
                    * (x.clone().abs().real().clone() + Float::with_val(prec, 1));
            x -= step;
            if done {
                break;
            }
        }
        x
    };
    let a64 = a.to_f64();
    let b64 = b.to_f64();
    // disc of t^3 + pt + q
    let disc = -4.0 * a64.powi(3) - 27.0 * b64 * b64;
    if disc > 0.0 {
        // three real roots (trigonometric form)
        let r = 2.0 * (-a64 / 3.0).sqrt();
        let phi = (3.0 * b64 / (a64 * r)).acos() / 3.0;
        let mut es: Vec<f64> = (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect();
        es.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let refine = |v: f64| newton(Complex::with_val(prec, (v, 0.0)));
        (refine(es[0]), refine(es[1]), refine(es[2]))
    } else {
        // one real root via Cardano, complex pair by deflation
        let half_q = b64 / 2.0;
        let rad = (half_q * half_q + a64.powi(3) / 27.0).sqrt();
        let cbrt = |x: f64| x.signum() * x.abs().cbrt();
        let e1_seed = cbrt(-half_q + rad) + cbrt(-half_q - rad);
        let e1 = newton(Complex::with_val(prec, (e1_seed, 0.0)));
        // x^3 + ax + b = (x - e1)(x^2 + e1 x + (e1^2 + a))
        let e1r = e1.real().clone();
        let half = -e1r.clone() / 2u32;
        let im =
            (Float::with_val(prec, 3) * e1r.square() / 4u32 + Float::with_val(prec, &af)).sqrt();
        let e2 = newton(Complex::with_val(prec, (half.clone(), im.clone())));
        let e3 = newton(Complex::with_val(prec, (half, -im)));
        (e1, e2, e3)
    }
}

/// Period lattice of `y^2 = x^3 + ax + b` with `omega1` real (for real
/// coefficients) and `Im(omega2/omega1) > 0`.
#[derive(Debug, Clone)]
pub struct PeriodLattice {
    pub omega1: Complex,
    pub omega2: Complex,
    pub prec: u32,
}

impl PeriodLattice {
    /// Real coordinates of z in the basis (omega1, omega2).
    pub fn coords(&self, z: &Complex) -> (Float, Float) {
        let prec = self.prec;
        let (w1r, w1i) = (self.omega1.real(), self.omega1.imag());
        let (w2r, w2i) = (self.omega2.real(), self.omega2.imag());
        let den = (w1r * w2i).complete(prec) - (w2r * w1i).complete(prec);
        let s = ((z.real() * w2i).complete(prec) - (z.imag() * w2r).complete(prec)) / &den;
        let t = ((w1r * z.imag()).complete(prec) - (w1i * z.real()).complete(prec)) / &den;
        (s, t)
    }

    /// Canonical representative with both coordinates in [-1/2, 1/2).
    pub fn reduce(&self, z: &Complex) -> Complex {
        let (s, t) = self.coords(z);
        let s = s.clone() - (s + Float::with_val(self.prec, 0.5)).floor();
        let t = t.clone() - (t + Float::with_val(self.prec, 0.5)).floor();
        Complex::with_val(self.prec, (&s, Float::new(self.prec))) * &self.omega1
            + Complex::with_val(self.prec, (&t, Float::new(self.prec))) * &self.omega2
    }

    /// Distance from z to the nearest lattice point (falls back over the
    /// reduced representative's neighbors, covering skew bases).
    pub fn dist(&self, z: &Complex) -> Float {
        let zr = self.reduce(z);
        let mut best = zr.clone().abs().into_real_imag().0;
        for ds in [-1i32, 0, 1] {
            for dt in [-1i32, 0, 1] {
                let cand = zr.clone()
                    + self.omega1.clone() * Complex::with_val(self.prec, ds)
                    + self.omega2.clone() * Complex::with_val(self.prec, dt);
                let d = cand.abs().into_real_imag().0;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }
}

/// Periods by AGM: `omega1 = pi / agm(sqrt(e1-e3), sqrt(e1-e2))`,
/// `omega2 = pi i / agm(sqrt(e1-e3), sqrt(e2-e3))`; the defining check
/// `g2(Lambda) = -4a`, `g3(Lambda) = -4b` is re-verified via Eisenstein
/// q-series and enforced within tolerance.
pub fn period_lattice(curve: &CurveQ, digits: u32) -> Result<PeriodLattice, HeegnerError> {
    let prec = bits_for(digits);
    let (e1, e2, e3) = cubic_roots(&curve.a, &curve.b, prec);
    let s13 = (e1.clone() - &e3).sqrt();
    let s12 = (e1.clone() - &e2).sqrt();
    let s23 = (e2.clone() - &e3).sqrt();
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let omega1 = Complex::with_val(prec, (&pi, Float::new(prec))) / cagm(&s13, &s12, prec);
    let mut omega2 = Complex::with_val(prec, (Float::new(prec), pi)) / cagm(&s13, &s23, prec);
    let tau = omega2.clone() / &omega1;
    if tau.imag().is_sign_negative() {
        omega2 = -omega2;
    }
    let lattice = PeriodLattice {
        omega1,
        omega2,
        prec,
    };
    // defining identity as a numerical invariant
    let (g2, g3) = eisenstein_invariants(&lattice);
    let tol = Float::with_val(prec, 10).pow(-(digits as i32) + 5);
    let scale = Float::with_val(prec, 1) + curve.a.to_f64().abs() + curve.b.to_f64().abs();
    let r2 = (g2 + Complex::with_val(prec, 4) * Complex::with_val(prec, &curve.a))
        .abs()
        .into_real_imag()
        .0;
    let r3 = (g3 + Complex::with_val(prec, 4) * Complex::with_val(prec, &curve.b))
        .abs()
        .into_real_imag()
        .0;
    if r2 > tol.clone() * &scale || r3 > tol * &scale {
        return Err(HeegnerError::PrecisionUnreachable(format!(
            "g2/g3 reconstruction residuals {r2:.3e}, {r3:.3e} at {digits} digits"
        )));
    }
    Ok(lattice)
}

/// g2, g3 of the lattice from the Eisenstein series E4, E6 in q.
fn eisenstein_invariants(lat: &PeriodLattice) -> (Complex, Complex) {
    let prec = lat.prec;
    let tau = lat.omega2.clone() / &lat.omega1;
    let q = exp_2pi_i(&tau, prec);
    let mut e4 = Complex::with_val(prec, 1);
    let mut e6 = Complex::with_val(prec, 1);
    let mut qn = Complex::with_val(prec, 1);
    let qabs = q.clone().abs().into_real_imag().0;
    let eps = Float::with_val(prec, 2).pow(-(prec as i32));
    for n in 1u32..10_000 {
        qn *= &q;
        let t = qn.clone() / (Complex::with_val(prec, 1) - &qn);
        e4 += t.clone() * Complex::with_val(prec, 240u64 * (n as u64).pow(3));
        e6 -= t * Complex::with_val(prec, 504u64 * (n as u64).pow(5));
        if qabs.clone().pow(n + 1) * Float::with_val(prec, n + 1).pow(6) < eps {
            break;
        }
    }
    let two_pi_over_w1 = Complex::with_val(
        prec,
        (
            Float::with_val(prec, rug::float::Constant::Pi) * 2u32,
            Float::new(prec),
        ),
    ) / &lat.omega1;
    let g2 = two_pi_over_w1.clone().pow(4) * e4 / Complex::with_val(prec, 12);
    let g3 = two_pi_over_w1.pow(6) * e6 / Complex::with_val(prec, 216);
    (g2, g3)
}

fn exp_2pi_i(tau: &Complex, prec: u32) -> Complex {
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    (Complex::with_val(prec, (Float::new(prec), two_pi)) * tau).exp()
}

/// Oriented level form: [A, B, C] with N | A, disc = B^2 - 4AC, and B in a
/// fixed residue class mod 2N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeegnerForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub disc: i64,
    pub level: u64,
}

impl HeegnerForm {
    pub fn tau(&self, prec: u32) -> Complex {
        let rt =
            Complex::with_val(prec, (Float::with_val(prec, self.disc), Float::new(prec))).sqrt();
        (Complex::with_val(prec, -self.b) + rt) / Complex::with_val(prec, 2 * self.a)
    }
}

/// Smallest B0 >= 0 with B0^2 = disc mod 4N and B0 = disc mod 2.
pub fn sqrt_mod_4n(disc: i64, n: u64) -> Result<i64, HeegnerError> {
    let m = 4 * n as i64;
    for b0 in 0..2 * n as i64 {
        if (b0 * b0 - disc).rem_euclid(m) == 0 {
            return Ok(b0);
        }
    }
    Err(HeegnerError::NoSquareRoot(disc, n))
}

/// One oriented representative with N | A (minimal A) per form class of
/// the discriminant: B runs through `beta mod 2N` outward, each value
/// factored as 4N·A/N·C, classes identified by reduction.
pub fn heegner_taus(n: u64, disc: i64, beta: i64) -> Result<Vec<HeegnerForm>, HeegnerError> {
    let classes = reduced_forms(disc).map_err(|e| HeegnerError::Precondition(e.to_string()))?;
    let want = classes.len();
    let mut reps: Vec<Option<HeegnerForm>> = vec![None; want];
    let mut found = 0usize;
    let two_n = 2 * n as i64;
    let b_limit = 4000i64; // multiples of 2N away from beta
    for w in 0..b_limit {
        for bv in if w == 0 {
            vec![beta]
        } else {
            vec![beta + two_n * w, beta - two_n * w]
        } {
            let m4 = bv * bv - disc;
            if m4 <= 0 || m4 % (4 * n as i64) != 0 {
                continue;
            }
            let m = m4 / (4 * n as i64);
            let mut d = 1i64;
            while d * d <= m {
                if m % d == 0 {
                    for (aa, cc) in [(n as i64 * d, m / d), (n as i64 * (m / d), d)] {
                        let g = gcd3(aa, bv, cc);
                        if g != 1 {
                            continue;
                        }
                        let cl = FormClass {
                            a: aa,
                            b: bv,
                            c: cc,
                        }
                        .reduce();
                        let idx = classes.iter().position(|&c| c == cl).unwrap();
                        let cand = HeegnerForm {
                            a: aa,
                            b: bv,
                            c: cc,
                            disc,
                            level: n,
                        };
                        match &reps[idx] {
                            Some(prev) if prev.a <= cand.a => {}
                            Some(_) => reps[idx] = Some(cand),
                            None => {
                                reps[idx] = Some(cand);
                                found += 1;
                            }
                        }
                    }
                }
                d += 1;
            }
        }
        // keep scanning a little past the first full cover so that each
        // class settles on a small-A representative
        if found == want && w > 40 {
            break;
        }
    }
    if found < want {
        let missing = classes
            .iter()
            .enumerate()
            .find(|(i, _)| reps[*i].is_none())
            .unwrap()
            .1;
        return Err(HeegnerError::SearchExhausted(n, *missing));
    }
    Ok(reps.into_iter().map(Option::unwrap).collect())
}

fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    fn g(mut a: i64, mut b: i64) -> i64 {
        a = a.abs();
        b = b.abs();
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    g(g(a, b), c)
}

/// `z(tau) = sum_{n <= T} (a_n / n) q^n` with T from the exact tail bound
/// `sum_{n > T} n e^{-2 pi n Im tau} < tol` (|a_n| <= n by Hasse).
pub fn modular_param(
    table: &mut ApTable,
    tau: &Complex,
    tol: f64,
    prec: u32,
) -> Result<Complex, HeegnerError> {
    let im = tau.imag().to_f64();
    if im <= 0.0 {
        return Err(HeegnerError::Precondition("Im tau must be positive".into()));
    }
    let t_terms = tail_terms(im, tol);
    let q = exp_2pi_i(tau, prec);
    let mut qn = Complex::with_val(prec, 1);
    let mut z = Complex::new(prec);
    for n in 1..=t_terms {
        qn *= &q;
        let an = table.an_on_demand(n)?;
        if an != 0 {
            z += qn.clone() * Complex::with_val(prec, Rat::from((an, n as i64)));
        }
    }
    Ok(z)
}

/// Smallest T with `x^{T+1} ((T+1) - T x) / (1-x)^2 < tol`, `x = e^{-2 pi Im tau}`
/// (closed form of the tail sum of n x^n).
pub fn tail_terms(im_tau: f64, tol: f64) -> u64 {
    let x = (-2.0 * std::f64::consts::PI * im_tau).exp();
    let mut t = 4u64;
    loop {
        let tf = t as f64;
        let tail = x.powf(tf + 1.0) * ((tf + 1.0) - tf * x) / (1.0 - x).powi(2);
        if tail < tol {
            return t;
        }
        t = t * 3 / 2 + 1;
        assert!(t < 100_000_000, "tail bound did not converge");
    }
}

/// Weierstrass p and p' by q-series; z is reduced into the fundamental
/// parallelogram first so both series converge geometrically.
pub fn weierstrass_p(lat: &PeriodLattice, z: &Complex) -> (Complex, Complex) {
    let prec = lat.prec;
    let zr = lat.reduce(z);
    let tau = lat.omega2.clone() / &lat.omega1;
    let q = exp_2pi_i(&tau, prec);
    let u = exp_2pi_i(&(zr / &lat.omega1), prec);
    let one = Complex::with_val(prec, 1);
    let mut s =
        Complex::with_val(prec, Rat::from((1, 12))) + u.clone() / (one.clone() - &u).square();
    let mut sp = u.clone() * (one.clone() + &u) / (one.clone() - &u).pow(3);
    let qabs = q.clone().abs().into_real_imag().0.to_f64();
    let uabs = u.clone().abs().into_real_imag().0.to_f64();
    // |q^n u^{\pm 1}| <= |q|^{n(1/2)} after reduction; geometric tail
    let terms = {
        let worst = qabs / uabs.min(1.0 / uabs).min(1.0);
        let eps = 2f64.powi(-(prec as i32));
        (eps.ln() / worst.ln()).ceil() as u32 + 8
    };
    let mut qn = Complex::with_val(prec, 1);
    for _ in 1..=terms {
        qn *= &q;
        let qu = qn.clone() * &u;
        let qiu = qn.clone() / &u;
        s += qu.clone() / (one.clone() - &qu).square();
        s += qiu.clone() / (one.clone() - &qiu).square();
        s -= qn.clone() / (one.clone() - &qn).square() * Complex::with_val(prec, 2);
        sp += qu.clone() * (one.clone() + &qu) / (one.clone() - &qu).pow(3);
        sp -= qiu.clone() * (one.clone() + &qiu) / (one.clone() - &qiu).pow(3);
    }
    let factor = Complex::with_val(
        prec,
        (
            Float::new(prec),
            Float::with_val(prec, rug::float::Constant::Pi) * 2u32,
        ),
    ) / &lat.omega1;
    let p = factor.clone().square() * s;
    let pprime = factor.pow(3) * sp;
    (p, pprime)
}

/// Point of E(C) as coordinates, or O for lattice points.
#[derive(Debug, Clone)]
pub enum ComplexPoint {
    Infinity,
    Affine(Complex, Complex),
}

/// `z mod Lambda -> (p(z), p'(z)/2)`; near-lattice z maps to O.
pub fn elliptic_exp(lat: &PeriodLattice, z: &Complex) -> ComplexPoint {
    let near = lat.dist(z).to_f64();
    let scale = lat.omega1.clone().abs().into_real_imag().0.to_f64();
    if near < 1e-20 * scale {
        return ComplexPoint::Infinity;
    }
    let (p, pp) = weierstrass_p(lat, z);
    ComplexPoint::Affine(p, pp / Complex::with_val(lat.prec, 2))
}

/// Continued-fraction rational recognition of a real number with bounded
/// denominator and a hard error tolerance.
pub fn recognize_rational(x: &Float, max_den: &Int, tol: f64) -> Option<Rat> {
    let prec = x.prec();
    let mut approx = x.clone();
    let (mut p0, mut q0) = (Int::from(1), Int::from(0));
    let (mut p1, mut q1) = (approx.clone().floor().to_integer()?, Int::from(1));
    let mut frac = approx.clone() - approx.clone().floor();
    for _ in 0..prec {
        let cand = Rat::from((p1.clone(), q1.clone()));
        let err = (x.clone() - Float::with_val(prec, &cand)).abs();
        if err < tol {
            return Some(cand);
        }
        if frac.clone().abs() < Float::with_val(prec, 2).pow(-(prec as i32) + 16) {
            break;
        }
        approx = Float::with_val(prec, 1) / frac;
        let a = approx.clone().floor().to_integer()?;
        let p2 = a.clone() * &p1 + &p0;
        let q2 = a.clone() * &q1 + &q0;
        if q2 > *max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        frac = approx.clone() - a;
    }
    let cand = Rat::from((p1, q1));
    let err = (x.clone() - Float::with_val(prec, &cand)).abs();
    (err < tol).then_some(cand)
}

/// Result of recognizing the K-trace of the conductor-1 Heegner point.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub x: Rat,
    pub y: Rat,
    /// max coordinate residual before recognition
    pub residual: f64,
    pub digits: u32,
}

/// Computes the conductor-1 Heegner point for the field of discriminant
/// `d_k`, takes its trace to the real locus (`2 Re z` since h(D_K) = 1),
/// maps it back to the curve, and recognizes the coordinates as exact
/// rationals. The recognized point is re-checked on the curve exactly.
pub fn heegner_trace_to_rational(
    table: &mut ApTable,
    d_k: i64,
    digits: u32,
) -> Result<TracePoint, HeegnerError> {
    let curve = table.curve.clone();
    let field = field_of_disc(d_k)?;
    if !heegner_hypothesis(&field, curve.conductor)
        .map_err(|e| HeegnerError::Precondition(e.to_string()))?
    {
        return Err(HeegnerError::Precondition(format!(
            "Heegner hypothesis fails for D_K = {d_k}, N = {}",
            curve.conductor
        )));
    }
    let h = reduced_forms(d_k)
        .map_err(|e| HeegnerError::Precondition(e.to_string()))?
        .len() as u64;
    if h != 1 {
        return Err(HeegnerError::ClassNumberNotOne(d_k, h));
    }
    let prec = bits_for(digits);
    let tol = 10f64.powi(-(digits as i32));
    let lat = period_lattice(&curve, digits)?;
    let b0 = sqrt_mod_4n(d_k, curve.conductor)?;
    let form = &heegner_taus(curve.conductor, d_k, b0)?[0];
    let z0 = modular_param(table, &form.tau(prec), tol, prec)?;
    // K-trace: z + conj(z) = 2 Re z, real by construction
    let z_tr = Complex::with_val(prec, (z0.real().clone() * 2u32, Float::new(prec)));
    let (x, y) = match elliptic_exp(&lat, &z_tr) {
        ComplexPoint::Infinity => {
            return Err(HeegnerError::RecognitionFailed(
                "trace is a lattice point (torsion image O)".into(),
            ))
        }
        ComplexPoint::Affine(x, y) => (x, y),
    };
    let imag_resid = x.imag().to_f64().abs().max(y.imag().to_f64().abs());
    let rec_tol = 10f64.powi(-(digits as i32 / 2));
    if imag_resid > rec_tol {
        return Err(HeegnerError::RecognitionFailed(format!(
            "trace point not real: imaginary residual {imag_resid:.3e}"
        )));
    }
    let max_den = Int::from(10).pow(digits / 3 + 2);
    let xr = recognize_rational(x.real(), &max_den, rec_tol).ok_or_else(|| {
        HeegnerError::RecognitionFailed(format!("x = {} has no small rational", x.real()))
    })?;
    let yr = recognize_rational(y.real(), &max_den, rec_tol).ok_or_else(|| {
        HeegnerError::RecognitionFailed(format!("y = {} has no small rational", y.real()))
    })?;
    // exact on-curve check
    let lhs = yr.clone().square();
    let rhs = xr.clone().pow(3) + Rat::from(curve.a.clone()) * &xr + Rat::from(curve.b.clone());
    if lhs != rhs {
        return Err(HeegnerError::RecognitionFailed(format!(
            "recognized point ({xr}, {yr}) fails the curve equation exactly"
        )));
    }
    Ok(TracePoint {
        x: xr,
        y: yr,
        residual: imag_resid,
        digits,
    })
}

fn field_of_disc(d_k: i64) -> Result<QuadField, HeegnerError> {
    let d = if d_k % 4 == 0 { d_k / 4 } else { d_k };
    let field = QuadField::from_i64(d).map_err(|e| HeegnerError::Precondition(e.to_string()))?;
    if field.fund_disc().to_i64() != Some(d_k) {
        return Err(HeegnerError::Precondition(format!(
            "{d_k} is not a fundamental discriminant"
        )));
    }
    Ok(field)
}

/// Outcome of a norm-relation verification.
#[derive(Debug, Clone)]
pub struct NormRelationReport {
    /// distance of the relation defect to the lattice
    pub residual: f64,
    /// number of conductor-raised points entering the trace sum
    pub trace_size: usize,
    pub digits: u32,
}

/// Verifies `sum_i z_i = a_ell * z_0 mod Lambda` where the z_i run over
/// oriented level-N representatives of all h(ell^2 D_K) conductor-ell
/// classes (one per class) and z_0 is the conductor-1 point.
///
/// `perturb` shifts a_ell (0 for the real check; nonzero for negative
/// controls, which must push the residual away from 0).
pub fn verify_norm_inert(
    table: &mut ApTable,
    d_k: i64,
    ell: u64,
    digits: u32,
    perturb: i64,
) -> Result<NormRelationReport, HeegnerError> {
    let curve = table.curve.clone();
    if kronecker(&Int::from(d_k), &Int::from(ell)) != -1 {
        return Err(HeegnerError::NotInert(ell, d_k));
    }
    if curve.conductor.is_multiple_of(ell) {
        return Err(HeegnerError::Precondition(format!(
            "ell = {ell} divides the conductor"
        )));
    }
    let prec = bits_for(digits);
    let tol = 10f64.powi(-(digits as i32));
    let lat = period_lattice(&curve, digits)?;
    let n = curve.conductor;
    let b0 = sqrt_mod_4n(d_k, n)?;
    let z0 = {
        let form0 = &heegner_taus(n, d_k, b0)?[0];
        modular_param(table, &form0.tau(prec), tol, prec)?
    };
    let disc_ell = (ell * ell) as i64 * d_k;
    let beta = (ell as i64 * b0).rem_euclid(2 * n as i64);
    let forms = heegner_taus(n, disc_ell, beta)?;
    let mut sum = Complex::new(prec);
    for f in &forms {
        sum += modular_param(table, &f.tau(prec), tol, prec)?;
    }
    let a_ell = table.ap_on_demand(ell)? + perturb;
    let defect = sum - z0 * Complex::with_val(prec, a_ell);
    Ok(NormRelationReport {
        residual: lat.dist(&defect).to_f64(),
        trace_size: forms.len(),
        digits,
    })
}

/// Fiber data for the tower relation at p.
#[derive(Debug, Clone)]
pub struct TowerRelationReport {
    pub residual: f64,
    /// p conductor-p^2 points above the target
    pub fiber_size: usize,
    /// h(p^4 D_K) / h(p^2 D_K), expected p
    pub class_ratio: u64,
    pub digits: u32,
}

/// Verifies the tower trace relation at an inert prime p:
/// `sum_{fiber} z_i = a_p z_p - z_1 mod Lambda`, where the fiber consists
/// of the p conductor-p^2 points lying above a fixed conductor-p point
/// (realized as the index-p sublattice points `(tau+j)/p`, `p tau`, with
/// the single conductor-1 member separated off as z_1).
pub fn verify_norm_tower(
    table: &mut ApTable,
    d_k: i64,
    p: u64,
    digits: u32,
) -> Result<TowerRelationReport, HeegnerError> {
    let curve = table.curve.clone();
    if kronecker(&Int::from(d_k), &Int::from(p)) != -1 {
        return Err(HeegnerError::NotInert(p, d_k));
    }
    if curve.conductor.is_multiple_of(p) {
        return Err(HeegnerError::Precondition(format!(
            "p = {p} divides the conductor"
        )));
    }
    let prec = bits_for(digits);
    let tol = 10f64.powi(-(digits as i32));
    let lat = period_lattice(&curve, digits)?;
    let n = curve.conductor;
    let b0 = sqrt_mod_4n(d_k, n)?;
    let disc_p = (p * p) as i64 * d_k;
    let disc_p2 = (p * p) as i64 * disc_p;
    // class-count ratio h(p^4 D_K) / h(p^2 D_K) (expected exactly p)
    let h_p = reduced_forms(disc_p)
        .map_err(|e| HeegnerError::Precondition(e.to_string()))?
        .len() as u64;
    let h_p2 = reduced_forms(disc_p2)
        .map_err(|e| HeegnerError::Precondition(e.to_string()))?
        .len() as u64;
    let class_ratio = h_p2 / h_p;
    // fixed conductor-p target with orientation p*B0
    let beta = (p as i64 * b0).rem_euclid(2 * n as i64);
    let target = heegner_taus(n, disc_p, beta)?
        .into_iter()
        .min_by_key(|f| f.a)
        .unwrap();
    let (ta, tb, tc) = (target.a, target.b, target.c);
    let pi64 = p as i64;
    // index-p sublattice points: (tau+j)/p for j = 0..p-1, and p*tau
    let mut candidates: Vec<(i64, i64, i64)> = (0..pi64)
        .map(|j| {
            (
                ta * pi64 * pi64,
                pi64 * (tb - 2 * ta * j),
                ta * j * j - tb * j + tc,
            )
        })
        .collect();
    candidates.push((ta, tb * pi64, tc * pi64 * pi64));
    let mut fiber: Vec<(i64, i64, i64)> = Vec::new();
    let mut up: Option<(i64, i64, i64)> = None;
    for (fa, fb, fc) in candidates {
        let g = gcd3(fa, fb, fc);
        let d = (fb * fb - 4 * fa * fc) / (g * g);
        if d == disc_p2 {
            fiber.push((fa / g, fb / g, fc / g));
        } else if d == d_k {
            up = Some((fa / g, fb / g, fc / g));
        } else {
            return Err(HeegnerError::Precondition(format!(
                "unexpected fiber discriminant {d}"
            )));
        }
    }
    let up =
        up.ok_or_else(|| HeegnerError::Precondition("no conductor-1 member in the fiber".into()))?;
    if fiber.len() != p as usize {
        return Err(HeegnerError::Precondition(format!(
            "fiber has {} conductor-p^2 members, expected {p}",
            fiber.len()
        )));
    }
    let eval = |table: &mut ApTable, f: &(i64, i64, i64)| -> Result<Complex, HeegnerError> {
        let form = HeegnerForm {
            a: f.0,
            b: f.1,
            c: f.2,
            disc: f.1 * f.1 - 4 * f.0 * f.2,
            level: n,
        };
        modular_param(table, &form.tau(prec), tol, prec)
    };
    let z_target = modular_param(table, &target.tau(prec), tol, prec)?;
    let z_up = eval(table, &up)?;
    let mut sum = Complex::new(prec);
    for f in &fiber {
        sum += eval(table, f)?;
    }
    let a_p = table.ap_on_demand(p)?;
    let defect = sum - (z_target * Complex::with_val(prec, a_p) - z_up);
    Ok(TowerRelationReport {
        residual: lat.dist(&defect).to_f64(),
        fiber_size: fiber.len(),
        class_ratio,
        digits,
    })
}
