//! Numerical modular symbols and the identities they satisfy.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{self, gcd_i64, rat_int};
use crate::cyclotomic::Cyc;
use crate::dirichlet::DirichletCharacter;
use crate::ec::Curve;
use crate::error::{Error, Result};
use crate::lseries::{self, terms_needed};

/// Truncation target for the antiderivative series.
pub const SYMBOL_EPS: f64 = 1e-10;
/// Largest admissible series length.
pub const MAX_SYMBOL_TERMS: usize = 1_000_000;
/// Rounding threshold for mu-plus.
pub const ROUNDING_LIMIT: f64 = 1e-4;

/// delta = [[a', a], [c', m]] in Gamma_0(N) with delta(0) = a/m.
pub fn gamma_for_cusp(a: i64, m: i64, n: u64) -> Result<[[i64; 2]; 2]> {
    let nn = n as i64;
    if m <= 0 || gcd_i64(m, nn) != 1 || gcd_i64(a, m) != 1 {
        return Err(Error::BadCusp { m: m.unsigned_abs(), n });
    }
    if a == 0 {
        return Ok([[1, 0], [0, 1]]);
    }
    let modulus = a.abs() * nn;
    let ap = arith::inv_mod(m, modulus).ok_or(Error::BadCusp { m: m as u64, n })?;
    let ap = if modulus == 1 { 1 } else { ap };
    let cp = (ap as i128 * m as i128 - 1) / a as i128;
    let cp = i64::try_from(cp).map_err(|_| Error::BadCusp { m: m as u64, n })?;
    let mat = [[ap, a], [cp, m]];
    Ok(if cp < 0 { [[-ap, -a], [-cp, -m]] } else { mat })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolValue {
    pub curve: String,
    pub a: i64,
    pub m: i64,
    pub raw: (f64, f64),
    pub plus: i64,
    pub residual: f64,
}

/// P(z) = sum a_n/n e^(2 pi i n z) at z = (x + i)/c, with the phase taken exactly mod c.
fn antiderivative(curve: &Curve, x: i64, c: i64) -> Result<Complex<f64>> {
    let r = (-std::f64::consts::TAU / c as f64).exp();
    let len = terms_needed(r, SYMBOL_EPS);
    if len > MAX_SYMBOL_TERMS {
        return Err(Error::SlowConvergence(len));
    }
    let table = curve.coefficients(len);
    let x = arith::rem(x, c);
    let mut acc = Complex::new(0.0, 0.0);
    let mut rn = 1.0f64;
    let mut phase = 0i64;
    for n in 1..=len {
        rn = if n % 512 == 0 { r.powi(n as i32) } else { rn * r };
        phase = (phase + x) % c;
        let an = table.get(n);
        if an != 0 {
            let angle = std::f64::consts::TAU * phase as f64 / c as f64;
            acc += Complex::from_polar(rn * an as f64 / n as f64, angle);
        }
    }
    Ok(acc)
}

/// mu_E(a/m): the integral of 2 pi i f(z) dz from 0 to a/m.
pub fn mu(curve: &Curve, a: i64, m: i64) -> Result<Complex<f64>> {
    let [[ap, _], [cp, mm]] = gamma_for_cusp(a, m, curve.conductor())?;
    if cp == 0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    // z0 = (-m + i)/c' and delta z0 = (a' + i)/c'.
    Ok(antiderivative(curve, ap, cp)? - antiderivative(curve, -mm, cp)?)
}

/// mu^+(a/m) = round(c0 / Omega * 2 Re mu(a/m)).
pub fn mu_plus(curve: &Curve, a: i64, m: i64) -> Result<SymbolValue> {
    let a = arith::rem(a, m);
    let raw = mu(curve, a, m)?;
    let omega: f64 = lseries::real_period(&curve.data);
    let x = curve.data.c0 as f64 / omega * 2.0 * raw.re;
    let plus = x.round();
    let residual = (x - plus).abs();
    if residual >= ROUNDING_LIMIT {
        return Err(Error::NotIntegral(residual));
    }
    Ok(SymbolValue { curve: curve.label().to_string(), a, m, raw: (raw.re, raw.im), plus: plus as i64, residual })
}

fn mu_plus_int(curve: &Curve, a: i64, m: i64) -> Result<i64> {
    mu_plus(curve, a, m).map(|s| s.plus)
}

/// mu^+(a/m) after cancelling gcd(a, m).
fn mu_plus_reduced(curve: &Curve, a: i64, m: i64) -> Result<i64> {
    let g = gcd_i64(a, m);
    mu_plus_int(curve, a / g, m / g)
}

/// Sum of mu^+(a/m) over 1 <= a <= (m-1)/2.
fn block_sum(curve: &Curve, m: i64) -> Result<i64> {
    half_range(m).map(|a| mu_plus_reduced(curve, a, m)).sum()
}

/// sigma_1(n).
pub fn sigma1(n: u64) -> u64 {
    arith::divisors(n).iter().sum()
}

/// Number of even divisors of n.
pub fn sigma0_plus(n: u64) -> u64 {
    arith::divisors(n).iter().filter(|d| *d % 2 == 0).count() as u64
}

/// c0 * L(E) as an exact rational.
pub fn c0_lratio(curve: &Curve) -> Result<BigRational> {
    Ok(lseries::algebraic_lvalue(curve)? * rat_int(curve.data.c0 as i64))
}

/// c0 L(E) (a_n - sigma_1(n) + #E(F_2) sigma_0^+(n)). Needs no coprimality, so it also
/// exposes the non-integral values at n sharing a factor with N.
pub fn hecke_lhs(curve: &Curve, n: u64) -> Result<BigRational> {
    let an = curve.coefficients(n as usize).get(n as usize);
    let e2 = if n.is_multiple_of(2) { curve.data.count_points(2)? as i64 } else { 0 };
    let factor = an - sigma1(n) as i64 + e2 * sigma0_plus(n) as i64;
    Ok(c0_lratio(curve)? * rat_int(factor))
}

fn half_range(m: i64) -> std::ops::RangeInclusive<i64> {
    1..=(m - 1) / 2
}

#[derive(Debug, Clone, Serialize)]
pub struct HeckeReport {
    pub curve: String,
    pub n: u64,
    pub sigma1: u64,
    pub sigma0_plus: u64,
    pub lhs: String,
    pub rhs: i64,
    pub difference: String,
    pub holds: bool,
}

/// Both sides of the Hecke relation for mu^+ at level n.
pub fn hecke_identity(curve: &Curve, n: u64) -> Result<HeckeReport> {
    let lhs = hecke_lhs(curve, n)?;
    let mut rhs = 0i64;
    for m in arith::divisors(n) {
        rhs += block_sum(curve, m as i64)?;
    }
    let diff = lhs.clone() - rat_int(rhs);
    Ok(HeckeReport {
        curve: curve.label().to_string(),
        n,
        sigma1: sigma1(n),
        sigma0_plus: sigma0_plus(n),
        lhs: lhs.to_string(),
        rhs,
        difference: diff.to_string(),
        holds: diff.is_zero(),
    })
}

/// Sum of conj(chi(a)) mu^+(a/n) over 1 <= a <= (n-1)/2: the exact value of c0 L(E, chi).
pub fn birch_sum(curve: &Curve, chi: &DirichletCharacter) -> Result<Cyc> {
    let n = chi.conductor();
    if !chi.coprime_to(curve.conductor()) {
        return Err(Error::ConductorClash { c: n, n: curve.conductor() });
    }
    let conj = chi.conj();
    let mut acc = Cyc::zero(chi.order());
    for a in half_range(n as i64) {
        let v = conj.evaluate(a);
        if v.is_zero() {
            continue;
        }
        acc = acc + v.scale(&rat_int(mu_plus_int(curve, a, n as i64)?));
    }
    Ok(acc)
}

/// epsilon_{E,n}: the mu^+ values at a/n with gcd(a, n) > 1 plus all proper divisor blocks.
pub fn epsilon_term(curve: &Curve, n: u64) -> Result<i64> {
    let nn = n as i64;
    let mut total = 0i64;
    for a in half_range(nn) {
        if gcd_i64(a, nn) != 1 {
            total += mu_plus_reduced(curve, a, nn)?;
        }
    }
    for m in arith::divisors(n) {
        if m == n {
            continue;
        }
        total += block_sum(curve, m as i64)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct CongruenceReport {
    pub curve: String,
    pub character: String,
    pub q: u64,
    pub twisted: String,
    pub untwisted_side: String,
    pub lhs_residue: u64,
    pub rhs_residue: u64,
    #[serde(rename = "match")]
    pub matches: bool,
    /// Valuation at the prime above q of the difference of the two sides; None when equal.
    pub difference_valuation: Option<i64>,
}

/// Compares c0 L(E, chi) with its predicted residue mod (1 - zeta_q).
pub fn congruence_check(curve: &Curve, chi: &DirichletCharacter) -> Result<CongruenceReport> {
    let q = chi.order();
    let n = chi.conductor();
    let report = lseries::algebraic_twisted_lvalue(curve, chi)?;
    let c0 = rat_int(curve.data.c0 as i64);
    let lhs = report.algebraic.scale(&c0);
    let rhs = if arith::is_prime(n) {
        rat_int(-(curve.data.count_points(n)? as i64)) * c0_lratio(curve)?
    } else {
        hecke_lhs(curve, n)? - rat_int(epsilon_term(curve, n)?)
    };
    congruence_report(curve, chi, q, lhs, rhs)
}

/// Uses -L(E) #E(F_p) directly, without clearing c0 (the form valid when q does not divide c0).
pub fn congruence_check_unscaled(curve: &Curve, chi: &DirichletCharacter) -> Result<CongruenceReport> {
    let p = chi.conductor();
    if !arith::is_prime(p) {
        return Err(Error::Invalid("unscaled congruence needs a prime conductor".into()));
    }
    let lhs = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic;
    let rhs = rat_int(-(curve.data.count_points(p)? as i64)) * lseries::algebraic_lvalue(curve)?;
    congruence_report(curve, chi, chi.order(), lhs, rhs)
}

fn congruence_report(curve: &Curve, chi: &DirichletCharacter, q: u64, lhs: Cyc, rhs: BigRational) -> Result<CongruenceReport> {
    let rhs_c = Cyc::from_scalar(q, rhs.clone());
    let lhs_residue = lhs.reduce_mod_lambda()?;
    let rhs_residue = rhs_c.reduce_mod_lambda()?;
    Ok(CongruenceReport {
        curve: curve.label().to_string(),
        character: chi.id(),
        q,
        twisted: lhs.to_string(),
        untwisted_side: rhs.to_string(),
        lhs_residue,
        rhs_residue,
        matches: lhs_residue == rhs_residue,
        difference_valuation: (lhs - rhs_c).ord_lambda(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CubicSumReport {
    pub curve: String,
    pub character: String,
    /// c0 (L(E, chi) + L(E, conj chi)) + c0 L(E)(a_n - sigma_1(n) + #E(F_2) sigma_0^+(n)).
    pub lhs: String,
    /// Sum of mu^+(a/n) over cubic residues a <= (n-1)/2.
    pub cube_sum: i64,
    pub epsilon: i64,
    pub holds: bool,
    /// Whether the cube-residue symbols sum to a multiple of 3; only then does the
    /// congruence lift to the next power of 3.
    pub cube_sum_divisible_by_3: bool,
    /// Valuation at (1 - zeta_3) of the difference of the two sides of the congruence.
    pub congruence_depth: Option<i64>,
}

/// The identity obtained by summing the cubic character, its conjugate and the trivial one.
pub fn cubic_character_sum(curve: &Curve, chi: &DirichletCharacter) -> Result<CubicSumReport> {
    if chi.order() != 3 {
        return Err(Error::Invalid("cubic characters only".into()));
    }
    let n = chi.conductor();
    let c0 = rat_int(curve.data.c0 as i64);
    let l = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic.scale(&c0);
    let trace = (l.clone() + l.conjugate(-1))
        .as_scalar()
        .ok_or_else(|| Error::Mismatch("L(E, chi) + L(E, conj chi) is not rational".into()))?;
    let h = hecke_lhs(curve, n)?;
    let lhs = trace + h.clone();
    let mut cube_sum = 0i64;
    for a in half_range(n as i64) {
        if chi.exponent(a) == Some(0) {
            cube_sum += mu_plus_int(curve, a, n as i64)?;
        }
    }
    let epsilon = epsilon_term(curve, n)?;
    let rhs = rat_int(3 * cube_sum + epsilon);
    let predicted = Cyc::from_scalar(3, h - rat_int(epsilon));
    Ok(CubicSumReport {
        curve: curve.label().to_string(),
        character: chi.id(),
        lhs: lhs.to_string(),
        cube_sum,
        epsilon,
        holds: lhs == rhs,
        cube_sum_divisible_by_3: cube_sum % 3 == 0,
        congruence_depth: (l - predicted).ord_lambda(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParityKind {
    P1P2,
    Eight,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityReport {
    pub curve: String,
    pub kind: ParityKind,
    pub conductor: u64,
    pub twisted: String,
    pub predicted: String,
    pub lhs_mod2: u64,
    pub rhs_mod2: u64,
    pub epsilon: i64,
    pub holds: bool,
}

/// The mod 2 form of the congruence for quadratic characters.
pub fn quadratic_parity_check(curve: &Curve, kind: ParityKind, p1: u64, p2: u64) -> Result<ParityReport> {
    let (chi, factor) = match kind {
        ParityKind::P1P2 => {
            let chi = DirichletCharacter::quadratic_p1p2(p1, p2)?;
            let n = (p1 * p2) as i64;
            let f = curve.data.ap(p1) * curve.data.ap(p2) - n - p1 as i64 - p2 as i64 - 1;
            (chi, f)
        }
        ParityKind::Eight => {
            if curve.conductor().is_multiple_of(2) {
                return Err(Error::ConductorClash { c: 8, n: curve.conductor() });
            }
            let a2 = curve.data.ap(2);
            (DirichletCharacter::quadratic_eight(), (a2 + 1) * (a2 + 2) * (a2 - 3))
        }
    };
    let lval = lseries::algebraic_twisted_lvalue(curve, &chi)?.algebraic;
    let twisted = lval.coeffs()[0].clone() * rat_int(curve.data.c0 as i64);
    let predicted = c0_lratio(curve)? * rat_int(factor);
    let epsilon = epsilon_term(curve, chi.conductor())?;
    let lhs_mod2 = arith::rational_mod(&twisted, 2).ok_or(Error::NotLambdaIntegral(2))?;
    let rhs_mod2 = arith::rational_mod(&predicted, 2).ok_or(Error::NotLambdaIntegral(2))?;
    Ok(ParityReport {
        curve: curve.label().to_string(),
        kind,
        conductor: chi.conductor(),
        twisted: twisted.to_string(),
        predicted: predicted.to_string(),
        lhs_mod2,
        rhs_mod2,
        epsilon,
        holds: lhs_mod2 == rhs_mod2 && epsilon % 2 == 0,
    })
}

/// Float view used in reports.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::ec::CurveData;

    fn e11a1() -> Curve {
        Curve::new(CurveData::new("11a1", [0, -1, 1, -10, -20], 11))
    }

    fn act(g: [[i64; 2]; 2]) -> BigRational {
        if g[1][1] == 0 {
            panic!("cusp at infinity");
        }
        rat(g[0][1], g[1][1])
    }

    #[test]
    fn cusp_matrices() {
        assert_eq!(gamma_for_cusp(0, 1, 11).unwrap(), [[1, 0], [0, 1]]);
        for (a, m) in [(1, 7), (2, 7), (3, 7), (5, 12), (-3, 7)] {
            let g = gamma_for_cusp(a, m, 11).unwrap();
            assert_eq!(g[0][0] * g[1][1] - g[0][1] * g[1][0], 1);
            assert_eq!(g[1][0] % 11, 0);
            assert!(g[1][0] >= 0);
            assert_eq!(act(g), rat(a, m));
        }
        assert_eq!(gamma_for_cusp(1, 11, 11), Err(Error::BadCusp { m: 11, n: 11 }));
    }

    #[test]
    fn anchor_at_one_half() {
        let e = e11a1();
        let l: f64 = lseries::lvalue_untwisted(&e).unwrap();
        let m = mu(&e, 1, 2).unwrap();
        assert!((m.re + 5.0 * l).abs() < 1e-8, "{m} vs {}", -5.0 * l);
    }

    #[test]
    fn symmetry_and_translation() {
        let e = e11a1();
        let x = mu(&e, 1, 7).unwrap();
        let y = mu(&e, 6, 7).unwrap();
        assert!((x + y - 2.0 * x.re).norm() < 1e-7);
        let t = mu(&e, 8, 7).unwrap();
        assert!((t - x).norm() < 1e-7);
        assert_eq!(mu_plus(&e, 2, 7).unwrap().plus, mu_plus(&e, 5, 7).unwrap().plus);
    }

    #[test]
    fn hecke_at_seven() {
        let e = e11a1();
        let r = hecke_identity(&e, 7).unwrap();
        assert_eq!(r.lhs, "-2");
        assert!(r.holds, "{r:?}");
        let s: i64 = (1..=3).map(|a| mu_plus(&e, a, 7).unwrap().plus).sum();
        assert_eq!(s, -2);
        assert!(hecke_identity(&e, 1).unwrap().holds);
        assert!(hecke_identity(&e, 2).unwrap().holds);
    }

    #[test]
    fn birch_matches_series() {
        let e = e11a1();
        let chi = DirichletCharacter::parse("7:3:chi(3)=z2").unwrap();
        let b = birch_sum(&e, &chi).unwrap();
        assert_eq!(b, lseries::algebraic_twisted_lvalue(&e, &chi).unwrap().algebraic);
    }

    #[test]
    fn epsilon_values() {
        let e = e11a1();
        assert_eq!(epsilon_term(&e, 7).unwrap(), 0);
        assert_eq!(epsilon_term(&e, 1).unwrap(), 0);
    }

    #[test]
    fn congruence_for_11a1() {
        let e = e11a1();
        let chi = DirichletCharacter::parse("7:3:chi(3)=z2").unwrap();
        let r = congruence_check(&e, &chi).unwrap();
        assert_eq!(r.rhs_residue, 1);
        assert!(r.matches);
    }
}
