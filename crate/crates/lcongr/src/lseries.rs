//! Central values L(E,1), L(E,chi,1), the real period, root numbers and algebraic L-values.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith;
use crate::cyclotomic::{self, root_of_unity, Cyc};
use crate::dirichlet::DirichletCharacter;
use crate::ec::{CoefficientTable, Curve, CurveData};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute truncation target for every series.
pub const SERIES_EPS: f64 = 1e-13;
/// Default tolerance for algebraic recognition.
pub const RECOGNITION_TOL: f64 = 1e-6;
/// Second evaluation point used to confirm functional-equation signs.
const T_CHECK: f64 = 1.2;

fn agm<R: Real>(mut a: R, mut b: R) -> R {
    for _ in 0..64 {
        if (a - b).abs() <= R::working_eps() * a.abs() {
            break;
        }
        let m = (a + b) / R::of(2.0);
        b = (a * b).sqrt();
        a = m;
    }
    a
}

/// Real roots of x^3 + b x^2 + c x + d, sorted in decreasing order.
fn real_cubic_roots<R: Real>(b: R, c: R, d: R, three_real: bool) -> Vec<R> {
    let three = R::of(3.0);
    let two = R::of(2.0);
    let p = c - b * b / three;
    let q = two * b * b * b / R::of(27.0) - b * c / three + d;
    let shift = b / three;
    let mut roots = if three_real {
        let r = (-p / three).sqrt();
        let arg = (R::of(3.0) * q / (two * p) * (-three / p).sqrt()).max(-R::one()).min(R::one());
        let phi = arg.acos() / three;
        (0..3)
            .map(|k| two * r * (phi - two * R::PI() * R::of_i64(k) / three).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        let disc = (q * q / R::of(4.0) + p * p * p / R::of(27.0)).max(R::zero()).sqrt();
        vec![(-q / two + disc).cbrt() + (-q / two - disc).cbrt() - shift]
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*x + b) * *x + c) * *x + d;
            let df = (three * *x + two * b) * *x + c;
            if df != R::zero() {
                *x = *x - f / df;
            }
        }
    }
    roots.sort_by(|u, v| v.partial_cmp(u).expect("finite roots"));
    roots
}

/// Omega(E): the integral of the Neron differential over E(R), computed by the AGM.
/// Counts both real components when the discriminant is positive.
pub fn real_period<R: Real>(e: &CurveData) -> R {
    let bi = e.b_invariants();
    let (b2, b4, b6) = (R::of_i64(bi.b2 as i64), R::of_i64(bi.b4 as i64), R::of_i64(bi.b6 as i64));
    let four = R::of(4.0);
    let two = R::of(2.0);
    if e.discriminant() > 0 {
        let r = real_cubic_roots(b2 / four, b4 / two, b6 / four, true);
        let (e1, e2, e3) = (r[0], r[1], r[2]);
        let w = R::PI() / agm((e1 - e3).sqrt(), (e1 - e2).sqrt());
        two * w
    } else {
        let e1 = real_cubic_roots(b2 / four, b4 / two, b6 / four, false)[0];
        let a = R::of(3.0) * e1 + b2 / four;
        let b = (R::of(3.0) * e1 * e1 + b2 / two * e1 + b4 / two).sqrt();
        two * R::PI() / agm(two * b.sqrt(), (two * b + a).sqrt())
    }
}

/// Smallest M with 2 x^(M+1) / (1 - x) < eps, the tail majorant for |a_n / n| <= 2.
pub fn terms_needed(x: f64, eps: f64) -> usize {
    let m = ((eps * (1.0 - x) / 2.0).ln() / x.ln()).ceil();
    m.max(1.0) as usize
}

pub fn tail_bound(x: f64, m: usize) -> f64 {
    2.0 * x.powi(m as i32 + 1) / (1.0 - x)
}

fn max_terms() -> usize {
    5_000_000
}

/// sum_{n <= m} a_n / n * x^n.
fn plain_sum<R: Real>(t: &CoefficientTable, x: R, m: usize) -> R {
    let mut acc = R::zero();
    let mut pw = R::one();
    for n in 1..=m {
        pw = if n % 256 == 0 { x.powi(n as i32) } else { pw * x };
        let a = t.get(n);
        if a != 0 {
            acc = acc + R::of_i64(a) / R::of_i64(n as i64) * pw;
        }
    }
    acc
}

/// Partial sums split by character value: out[e] = sum over n with chi(n) = zeta^e of a_n/n x^n.
fn class_sums<R: Real>(t: &CoefficientTable, chi: &DirichletCharacter, x: R, m: usize) -> Vec<R> {
    let mut out = vec![R::zero(); chi.order() as usize];
    let mut pw = R::one();
    for n in 1..=m {
        pw = if n % 256 == 0 { x.powi(n as i32) } else { pw * x };
        let a = t.get(n);
        if a == 0 {
            continue;
        }
        if let Some(e) = chi.exponent(n as i64) {
            out[e as usize] = out[e as usize] + R::of_i64(a) / R::of_i64(n as i64) * pw;
        }
    }
    out
}

/// sum_e sums[e] * zeta_q^(a e).
fn combine<R: Real>(sums: &[R], q: u64, a: i64) -> Complex<R> {
    sums.iter()
        .enumerate()
        .fold(Complex::new(R::zero(), R::zero()), |acc, (e, &s)| {
            acc + root_of_unity::<R>(q as i64, a * e as i64) * s
        })
}

/// Root number from the dataset when present, else from the functional-equation test.
pub fn root_number(curve: &Curve) -> Result<i8> {
    match curve.data.root_number {
        Some(w) => Ok(w),
        None => compute_root_number(curve),
    }
}

/// Chooses w so that S(t) + w S(1/t) takes the same value at t = 1.1 and t = 1.25,
/// with S(t) = sum a_n/n exp(-2 pi n t / sqrt N).
pub fn compute_root_number(curve: &Curve) -> Result<i8> {
    let sqrt_n = (curve.conductor() as f64).sqrt();
    let xs = |t: f64| (-std::f64::consts::TAU * t / sqrt_n).exp();
    let (t1, t2) = (1.1f64, 1.25f64);
    let m = terms_needed(xs(1.0 / t2), SERIES_EPS);
    let table = curve.coefficients(m);
    let s = |t: f64| plain_sum::<f64>(&table, xs(t), terms_needed(xs(t), SERIES_EPS));
    let (a1, b1, a2, b2) = (s(t1), s(1.0 / t1), s(t2), s(1.0 / t2));
    let fits: Vec<i8> = [1i8, -1]
        .into_iter()
        .filter(|&w| {
            let f1 = a1 + w as f64 * b1;
            let f2 = a2 + w as f64 * b2;
            (f1 - f2).abs() < 1e-8 * f1.abs().max(1.0)
        })
        .collect();
    match fits.as_slice() {
        [w] => Ok(*w),
        [] => Err(Error::Inconclusive(format!("{}: neither sign fits", curve.label()))),
        _ => Err(Error::Inconclusive(format!("{}: both signs fit", curve.label()))),
    }
}

/// L(E,1) = 2 sum a_n/n exp(-2 pi n / sqrt N), valid when w = +1.
pub fn lvalue_untwisted<R: Real>(curve: &Curve) -> Result<R> {
    if root_number(curve)? == -1 {
        return Err(Error::RankPositive);
    }
    let x = (-std::f64::consts::TAU / (curve.conductor() as f64).sqrt()).exp();
    let m = terms_needed(x, SERIES_EPS / 2.0);
    let table = curve.coefficients(m);
    let xr = (-R::TAU() / R::of(curve.conductor() as f64).sqrt()).exp();
    Ok(R::of(2.0) * plain_sum(&table, xr, m))
}

/// The rational L(E,1)/Omega(E); zero when the root number is -1.
pub fn algebraic_lvalue(curve: &Curve) -> Result<BigRational> {
    match lvalue_untwisted::<f64>(curve) {
        Err(Error::RankPositive) => Ok(BigRational::zero()),
        Err(e) => Err(e),
        Ok(l) => {
            let omega: f64 = real_period(&curve.data);
            cyclotomic::round_rational(l / omega, RECOGNITION_TOL)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LValueReport {
    pub curve: String,
    pub character: String,
    pub analytic: (f64, f64),
    pub period: f64,
    #[serde(serialize_with = "ser_display")]
    pub algebraic: Cyc,
    pub terms: usize,
    pub tail_bound: f64,
    /// Largest gap between the evaluations at t = 1 and t = 1.2 over all conjugates.
    pub consistency: f64,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

struct TwistedSums {
    q: u64,
    c: u64,
    m: usize,
    tail: f64,
    /// class sums at x_t and y_t for t = 1 and t = T_CHECK.
    at: Vec<(Vec<f64>, Vec<f64>)>,
}

fn twisted_sums(curve: &Curve, chi: &DirichletCharacter) -> Result<TwistedSums> {
    let c = chi.conductor();
    let n = curve.conductor();
    if !chi.coprime_to(n) {
        return Err(Error::ConductorClash { c, n });
    }
    let scale = c as f64 * (n as f64).sqrt();
    let ts = [1.0, T_CHECK];
    let worst = (-std::f64::consts::TAU / (T_CHECK * scale)).exp();
    let m = terms_needed(worst, SERIES_EPS);
    if m > max_terms() {
        return Err(Error::SlowConvergence(m));
    }
    let table = curve.coefficients(m);
    let at = ts
        .iter()
        .map(|&t| {
            let x = (-std::f64::consts::TAU * t / scale).exp();
            let y = (-std::f64::consts::TAU / (t * scale)).exp();
            (
                class_sums::<f64>(&table, chi, x, terms_needed(x, SERIES_EPS)),
                class_sums::<f64>(&table, chi, y, terms_needed(y, SERIES_EPS)),
            )
        })
        .collect();
    Ok(TwistedSums { q: chi.order(), c, m, tail: 2.0 * tail_bound(worst, m), at })
}

/// Root number of the twist by chi^a: w chi^a(N) tau(chi^a)^2 / c.
fn twisted_sign(w: i8, chi: &DirichletCharacter, n: u64) -> Complex<f64> {
    let tau: Complex<f64> = chi.gauss_sum();
    chi.value::<f64>(n as i64) * tau * tau * (w as f64 / chi.conductor() as f64)
}

fn eval_twisted(s: &TwistedSums, k: usize, a: i64, sign: Complex<f64>) -> Complex<f64> {
    let (xs, ys) = &s.at[k];
    combine(xs, s.q, a) + sign * combine(ys, s.q, -a)
}

/// L(E, chi, 1) by the approximate functional equation of the twisted form.
pub fn lvalue_twisted(curve: &Curve, chi: &DirichletCharacter) -> Result<Complex<f64>> {
    let s = twisted_sums(curve, chi)?;
    let w = root_number(curve)?;
    Ok(eval_twisted(&s, 0, 1, twisted_sign(w, chi, curve.conductor())))
}

/// L(E, chi, 1) c / (tau(chi) Omega) for every conjugate of chi, recognized in Q(zeta_q).
pub fn algebraic_twisted_lvalue(curve: &Curve, chi: &DirichletCharacter) -> Result<LValueReport> {
    let s = twisted_sums(curve, chi)?;
    let w = root_number(curve)?;
    let omega: f64 = real_period(&curve.data);
    let q = chi.order();
    let mut values = Vec::new();
    let mut consistency = 0.0f64;
    let mut analytic = Complex::new(0.0, 0.0);
    for a in 1..q as i64 {
        let ca = chi.power(a);
        let sign = twisted_sign(w, &ca, curve.conductor());
        let l1 = eval_twisted(&s, 0, a, sign);
        let l2 = eval_twisted(&s, 1, a, sign);
        consistency = consistency.max((l1 - l2).norm());
        if a == 1 {
            analytic = l1;
        }
        let tau: Complex<f64> = ca.gauss_sum();
        values.push((a, l1 * s.c as f64 / (tau * omega)));
    }
    if consistency > 1e-8 {
        return Err(Error::Mismatch(format!(
            "{} twisted by {}: functional equation inconsistent ({consistency:e})",
            curve.label(),
            chi
        )));
    }
    let algebraic = cyclotomic::recognize(q, &values, RECOGNITION_TOL)?;
    Ok(LValueReport {
        curve: curve.label().to_string(),
        character: chi.id(),
        analytic: (analytic.re, analytic.im),
        period: omega,
        algebraic,
        terms: s.m,
        tail_bound: s.tail,
        consistency,
    })
}

/// Embeddings of the algebraic twisted value for every conjugate, before rounding.
pub fn twisted_embeddings(curve: &Curve, chi: &DirichletCharacter) -> Result<Vec<(i64, Complex<f64>)>> {
    let s = twisted_sums(curve, chi)?;
    let w = root_number(curve)?;
    let omega: f64 = real_period(&curve.data);
    Ok((1..chi.order() as i64)
        .map(|a| {
            let ca = chi.power(a);
            let l = eval_twisted(&s, 0, a, twisted_sign(w, &ca, curve.conductor()));
            let tau: Complex<f64> = ca.gauss_sum();
            (a, l * s.c as f64 / (tau * omega))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ClashReport {
    pub curve: String,
    pub character: String,
    pub level: u64,
    pub root_number: i8,
    /// Trace at each prime dividing the character conductor.
    pub local_traces: Vec<(u64, i64)>,
    pub analytic: f64,
    #[serde(serialize_with = "ser_display")]
    pub algebraic: BigRational,
    pub integral: bool,
}

/// Twisted value for a quadratic character whose conductor divides N. The twisted form has
/// unknown level N' | N c^2, sign and local traces at p | c; every combination is tested with
/// the functional equation at two points and the consistent ones must agree.
pub fn twisted_lvalue_clash(curve: &Curve, chi: &DirichletCharacter) -> Result<ClashReport> {
    if chi.order() != 2 {
        return Err(Error::Invalid("conductor-clash evaluation supports quadratic characters only".into()));
    }
    let c = chi.conductor();
    let n = curve.conductor();
    let cp = arith::prime_divisors(c);
    let levels: Vec<u64> = arith::divisors(n * c * c);
    let max_level = *levels.last().expect("nonempty");
    let worst = (-std::f64::consts::TAU / (1.25 * (max_level as f64).sqrt())).exp();
    let m = terms_needed(worst, SERIES_EPS);
    let table = curve.coefficients(m);
    let mut choices: Vec<Vec<(u64, i64)>> = vec![vec![]];
    for &p in &cp {
        choices = choices
            .into_iter()
            .flat_map(|v| [0i64, 1, -1].into_iter().map(move |ap| [v.clone(), vec![(p, ap)]].concat()))
            .collect();
    }
    let mut hits: Vec<(u64, i8, Vec<(u64, i64)>, f64)> = Vec::new();
    for local in &choices {
        let b = twisted_coefficients(&table, chi, local, m);
        for &lev in &levels {
            let sq = (lev as f64).sqrt();
            let f = |t: f64, w: f64| {
                let x = (-std::f64::consts::TAU * t / sq).exp();
                let y = (-std::f64::consts::TAU / (t * sq)).exp();
                plain_sum::<f64>(&b, x, terms_needed(x, SERIES_EPS).min(m))
                    + w * plain_sum::<f64>(&b, y, terms_needed(y, SERIES_EPS).min(m))
            };
            for w in [1i8, -1] {
                let (f1, f2) = (f(1.0, w as f64), f(1.25, w as f64));
                if (f1 - f2).abs() < 1e-9 * f1.abs().max(1.0) {
                    hits.push((lev, w, local.clone(), f1));
                }
            }
        }
    }
    let first = hits
        .first()
        .cloned()
        .ok_or_else(|| Error::Inconclusive(format!("{}: no level fits the twist by {}", curve.label(), chi)))?;
    if hits.iter().any(|h| (h.3 - first.3).abs() > 1e-8) {
        return Err(Error::Inconclusive(format!("{}: several twisted levels fit with different values", curve.label())));
    }
    let omega: f64 = real_period(&curve.data);
    let tau: Complex<f64> = chi.gauss_sum();
    let v = first.3 * c as f64 / (tau.re * omega);
    let algebraic = cyclotomic::round_rational(v, RECOGNITION_TOL)?;
    let integral = algebraic.is_integer();
    Ok(ClashReport {
        curve: curve.label().to_string(),
        character: chi.id(),
        level: first.0,
        root_number: first.1,
        local_traces: first.2,
        analytic: first.3,
        algebraic,
        integral,
    })
}

/// b_n = chi(n) a_n away from the conductor of chi, with prescribed traces at its primes.
fn twisted_coefficients(t: &CoefficientTable, chi: &DirichletCharacter, local: &[(u64, i64)], m: usize) -> CoefficientTable {
    let mut values = vec![0i64; m + 1];
    for (n, slot) in values.iter_mut().enumerate().skip(1) {
        let mut k = n as u64;
        let mut factor = 1i64;
        for &(p, ap) in local {
            while k.is_multiple_of(p) {
                k /= p;
                factor *= ap;
            }
        }
        if factor == 0 {
            continue;
        }
        let s = match chi.exponent(k as i64) {
            Some(0) => 1,
            Some(_) => -1,
            None => 0,
        };
        *slot = factor * s * t.get(k as usize);
    }
    CoefficientTable { label: format!("{}-twist", t.label), values }
}

/// Nonzero value helper for callers that only need magnitudes.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn curve(label: &str, a: [i64; 5], n: u64) -> Curve {
        Curve::new(CurveData::new(label, a, n))
    }

    #[test]
    fn periods_match_reference_values() {
        // Reference periods from an independent computer-algebra evaluation.
        let cases: [(&str, [i64; 5], u64, f64); 5] = [
            ("11a1", [0, -1, 1, -10, -20], 11, 1.2692093042795534),
            ("15a1", [1, 1, 1, -10, -10], 15, 2.8012060846652043),
            ("37b1", [0, 1, 1, -23, -50], 37, 2.1770431858084582),
            ("50b4", [1, 1, 1, -3138, -68969], 50, 0.3189370755292093),
            ("1356d1", [0, 1, 0, -1, -4], 1356, 1.851145378269701),
        ];
        for (l, a, n, w) in cases {
            let got: f64 = real_period(&CurveData::new(l, a, n));
            assert!((got - w).abs() < 1e-12 * w, "{l}: {got} vs {w}");
            let got32: f32 = real_period(&CurveData::new(l, a, n));
            assert!((got32 as f64 - w).abs() < 1e-4 * w, "{l} f32");
        }
    }

    #[test]
    fn untwisted_values() {
        let e = curve("11a1", [0, -1, 1, -10, -20], 11);
        let l: f64 = lvalue_untwisted(&e).unwrap();
        assert!((l - 0.253_841_860_855_910_7).abs() < 1e-12);
        assert_eq!(algebraic_lvalue(&e).unwrap(), rat(1, 5));
        assert_eq!(compute_root_number(&e).unwrap(), 1);
        let r1 = curve("37a1", [0, 0, 1, -1, 0], 37);
        assert_eq!(compute_root_number(&r1).unwrap(), -1);
        assert_eq!(lvalue_untwisted::<f64>(&r1), Err(Error::RankPositive));
        let e = curve("50b4", [1, 1, 1, -3138, -68969], 50);
        assert_eq!(algebraic_lvalue(&e).unwrap(), rat(3, 1));
    }

    #[test]
    fn twisted_values_of_11a1() {
        let e = curve("11a1", [0, -1, 1, -10, -20], 11);
        let chi = DirichletCharacter::parse("7:3:chi(3)=z2").unwrap();
        let r = algebraic_twisted_lvalue(&e, &chi).unwrap();
        assert_eq!(r.algebraic, Cyc::parse(3, "-5*z").unwrap());
        let chi = DirichletCharacter::parse("13:3:chi(2)=z").unwrap();
        let r = algebraic_twisted_lvalue(&e, &chi).unwrap();
        assert_eq!(r.algebraic, Cyc::parse(3, "10*z^2").unwrap());
        assert!(r.tail_bound < 1e-9);
    }

    #[test]
    fn clash_refused_and_searched() {
        let e = curve("50b1", [1, 1, 1, -3, 1], 50);
        let chi = DirichletCharacter::quadratic_prime(5).unwrap();
        assert_eq!(lvalue_twisted(&e, &chi), Err(Error::ConductorClash { c: 5, n: 50 }));
        let r = twisted_lvalue_clash(&e, &chi).unwrap();
        assert_eq!(r.algebraic, rat(1, 3));
        assert!(!r.integral);
    }
}
