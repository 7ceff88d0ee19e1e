//! Kisilevsky-Nam normalization of cubic twisted L-values: L^+, the empirical gcd of its norms,
//! and residues of the normalized values against the Frobenius prediction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{self, rat};
use crate::cyclotomic::Cyc;
use crate::density;
use crate::dirichlet::DirichletCharacter;
use crate::ec::Curve;
use crate::error::{Error, Result};
use crate::lseries;
use crate::matgrp::{self, DensityProfile};

pub const DEFAULT_SAMPLE: usize = 20;
/// The gcd must be unchanged over this many trailing conductors.
pub const STABILITY_WINDOW: usize = 10;

/// L(E, chi) if chi(N) = 1, else L(E, chi) (1 + conj chi(N)); real by construction.
pub fn l_plus(curve: &Curve, chi: &DirichletCharacter) -> Result<Cyc> {
    let l = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic;
    l_plus_from(&l, chi, curve.conductor())
}

fn l_plus_from(l: &Cyc, chi: &DirichletCharacter, n: u64) -> Result<Cyc> {
    let q = chi.order();
    let chin = chi.evaluate(n as i64);
    let out = if chin == Cyc::one(q) {
        l.clone()
    } else {
        l.try_mul(&(Cyc::one(q) + chin.conjugate(q as i64 - 1)))?
    };
    if !out.is_real() {
        return Err(Error::NotReal);
    }
    Ok(out)
}

/// Norm from the real subfield of L^+, which must be an integer.
fn norm_plus_int(x: &Cyc) -> Result<BigInt> {
    let n = x.norm_plus()?;
    if !arith::is_integer(&n) {
        return Err(Error::NotLambdaIntegral(x.order()));
    }
    Ok(n.to_integer())
}

#[derive(Debug, Clone, Serialize)]
pub struct GcdEstimate {
    pub curve: String,
    pub q: u64,
    pub conductors: Vec<u64>,
    pub norms: Vec<String>,
    pub gcd: u64,
    /// Connected components of E(R): 2 when the discriminant is positive.
    pub real_components: u64,
    /// The gcd when values are normalized by the least positive real period instead,
    /// which multiplies every value by the number of real components.
    pub gcd_least_period: u64,
    /// Unchanged over the last STABILITY_WINDOW conductors.
    pub stable: bool,
    pub empirical: bool,
}

/// The first `sample` prime conductors p = 1 mod q with p not dividing N.
pub fn default_conductors(curve: &Curve, q: u64, sample: usize) -> Vec<u64> {
    let mut limit = 64;
    loop {
        let ps = density::eligible_primes(curve, q, limit);
        if ps.len() >= sample {
            return ps.into_iter().take(sample).collect();
        }
        limit *= 2;
    }
}

/// gcd of |Nm^+(L^+(E, chi))| over one character per conductor.
pub fn estimate_gcd(curve: &Curve, q: u64, conductors: &[u64]) -> Result<GcdEstimate> {
    let mut norms = Vec::new();
    let mut history = Vec::new();
    let mut g = BigInt::zero();
    for &p in conductors {
        let chi = DirichletCharacter::new(p, q, 1)?;
        let n = norm_plus_int(&l_plus(curve, &chi)?)?;
        g = g.gcd(&n);
        norms.push(n.to_string());
        history.push(g.clone());
    }
    if g.is_zero() {
        return Err(Error::AllZero);
    }
    let nonzero = norms.iter().filter(|s| s.as_str() != "0").count();
    if nonzero < STABILITY_WINDOW {
        return Err(Error::Invalid(format!("only {nonzero} nonvanishing values; need {STABILITY_WINDOW}")));
    }
    let gcd = g.abs().to_u64().ok_or_else(|| Error::Invalid("gcd too large".into()))?;
    let real_components = if curve.data.discriminant() > 0 { 2 } else { 1 };
    let stable = history.len() > STABILITY_WINDOW && history[history.len() - 1 - STABILITY_WINDOW] == g;
    Ok(GcdEstimate {
        curve: curve.label().to_string(),
        q,
        conductors: conductors.to_vec(),
        norms,
        gcd,
        real_components,
        gcd_least_period: gcd * real_components,
        stable,
        empirical: true,
    })
}

/// Nm^+(L^+) / gcd mod 3.
pub fn l_tilde_residue(curve: &Curve, chi: &DirichletCharacter, gcd: u64) -> Result<u64> {
    let l = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic;
    l_tilde_from(curve, chi, &l, gcd)
}

fn l_tilde_from(curve: &Curve, chi: &DirichletCharacter, l: &Cyc, gcd: u64) -> Result<u64> {
    if chi.order() != 3 {
        return Err(Error::Invalid(format!("{chi} is not cubic")));
    }
    if gcd.is_multiple_of(3) {
        return Err(Error::GcdDivisible(gcd));
    }
    if curve.data.c0.is_multiple_of(3) {
        return Err(Error::HypothesisFailed(format!("3 divides c0 = {}", curve.data.c0)));
    }
    let n = norm_plus_int(&l_plus_from(l, chi, curve.conductor())?)?;
    let x = BigRational::new(n, BigInt::from(gcd));
    if !arith::is_integer(&x) {
        return Err(Error::Mismatch(format!("gcd {gcd} does not divide {}", x.numer())));
    }
    Ok(arith::rational_mod(&x, 3).expect("integer"))
}

/// Delta = +-N^n with 3 not dividing n: the cube-root field of N lies in the 3-division field.
pub fn certified(curve: &Curve) -> bool {
    let n = curve.conductor() as i128;
    let mut d = curve.data.discriminant().abs();
    if n <= 1 {
        return false;
    }
    let mut e = 0u32;
    while d % n == 0 {
        d /= n;
        e += 1;
    }
    d == 1 && !e.is_multiple_of(3)
}

fn no_three_isogeny(curve: &Curve) -> bool {
    curve.data.isogeny_primes.as_ref().is_some_and(|ps| !ps.contains(&3))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResiduePrediction {
    pub p: u64,
    pub count: u64,
    pub split_in_k: bool,
    pub residue: u64,
    /// Which case fired: "zero", "split" or "other".
    pub case: &'static str,
    pub certified: bool,
}

/// 0 if 3 | #E(F_p); 2 if #E(F_p) = 1 mod 3 and p splits completely in the 3-division field; else 1.
pub fn predicted_residue(curve: &Curve, p: u64) -> Result<ResiduePrediction> {
    let count = curve.data.count_points(p)?;
    let (split_in_k, residue, case) = match count % 3 {
        0 => (curve.data.splits_completely_in_k3(p)?, 0, "zero"),
        1 if curve.data.splits_completely_in_k3(p)? => (true, 2, "split"),
        _ => (false, 1, "other"),
    };
    Ok(ResiduePrediction {
        p,
        count,
        split_in_k,
        residue,
        case,
        certified: certified(curve) && no_three_isogeny(curve),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KnRecord {
    pub curve: String,
    pub conductor: u64,
    pub chi_n: String,
    pub l_plus: String,
    pub norm_plus: String,
    pub residue: u64,
    pub predicted: u64,
    pub split_in_k: bool,
    pub holds: bool,
}

/// Full L-value path against the prediction at one conductor.
pub fn kn_record(curve: &Curve, chi: &DirichletCharacter, gcd: u64) -> Result<KnRecord> {
    let l = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic;
    let lp = l_plus_from(&l, chi, curve.conductor())?;
    let residue = l_tilde_from(curve, chi, &l, gcd)?;
    let pred = predicted_residue(curve, chi.conductor())?;
    Ok(KnRecord {
        curve: curve.label().to_string(),
        conductor: chi.conductor(),
        chi_n: chi.evaluate(curve.conductor() as i64).to_string(),
        norm_plus: norm_plus_int(&lp)?.to_string(),
        l_plus: lp.to_string(),
        residue,
        predicted: pred.residue,
        split_in_k: pred.split_in_k,
        holds: residue == pred.residue,
    })
}

fn check_supported(curve: &Curve) -> Result<()> {
    if curve.data.kn_out_of_method {
        return Err(Error::HypothesisFailed(format!("{} is outside the method: 3 divides its gcd", curve.label())));
    }
    Ok(())
}

/// Records for every eligible p <= limit, both characters per conductor.
pub fn verify_residues(curve: &Curve, gcd: u64, limit: u64) -> Result<Vec<KnRecord>> {
    check_supported(curve)?;
    let mut out = Vec::new();
    for p in density::eligible_primes(curve, 3, limit + 1) {
        for chi in DirichletCharacter::characters(p, 3)? {
            out.push(kn_record(curve, &chi, gcd)?);
        }
    }
    Ok(out)
}

/// Limiting profile from SL(2, 3): residue 0 for trace 2, residue 2 for -I, residue 1 otherwise.
pub fn delta_prime_target() -> DensityProfile {
    let g = matgrp::special_linear(3);
    let mut counts = [0i64; 3];
    for m in &g.elements {
        let k = match (m.trace(), m.rows()) {
            (2, _) => 0,
            (_, [[2, 0], [0, 2]]) => 2,
            _ => 1,
        };
        counts[k] += 1;
    }
    let n = g.order() as i64;
    DensityProfile::new(3, counts.iter().map(|&c| rat(c, n)).collect())
}

/// The profile as commonly quoted, (9/24, 15/24, 1/24); its entries sum to 25/24.
pub fn stated_delta_prime() -> DensityProfile {
    DensityProfile::new(3, vec![rat(9, 24), rat(15, 24), rat(1, 24)])
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaPrime {
    pub curve: String,
    pub limit: u64,
    pub eligible_primes: u64,
    pub counts: [u64; 3],
    pub empirical: DensityProfile,
    pub target: DensityProfile,
    pub max_abs_deviation: f64,
    pub stated: DensityProfile,
    pub stated_deviation: f64,
    pub certified: bool,
}

/// Tally of predicted residues over p < limit, p = 1 mod 3, p not dividing N.
pub fn delta_prime(curve: &Curve, limit: u64) -> Result<DeltaPrime> {
    check_supported(curve)?;
    let primes: Vec<u64> = density::eligible_primes(curve, 3, limit)
        .into_iter()
        .filter(|&p| curve.data.discriminant() % p as i128 != 0)
        .collect();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(16);
    let chunk = primes.len().div_ceil(workers).max(1);
    let counts = std::thread::scope(|s| -> Result<[u64; 3]> {
        let handles: Vec<_> = primes
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || -> Result<[u64; 3]> {
                    let mut c = [0u64; 3];
                    for &p in part {
                        c[predicted_residue(curve, p)?.residue as usize] += 1;
                    }
                    Ok(c)
                })
            })
            .collect();
        let mut total = [0u64; 3];
        for h in handles {
            let c = h.join().expect("worker panicked")?;
            for k in 0..3 {
                total[k] += c[k];
            }
        }
        Ok(total)
    })?;
    let n = primes.len() as i64;
    let empirical = DensityProfile::new(
        3,
        counts.iter().map(|&c| if n == 0 { BigRational::zero() } else { rat(c as i64, n) }).collect(),
    );
    let target = delta_prime_target();
    Ok(DeltaPrime {
        curve: curve.label().to_string(),
        limit,
        eligible_primes: n as u64,
        counts,
        max_abs_deviation: density::max_deviation(&empirical, &target),
        stated_deviation: density::max_deviation(&empirical, &stated_delta_prime()),
        stated: stated_delta_prime(),
        empirical,
        target,
        certified: certified(curve) && no_three_isogeny(curve),
    })
}
