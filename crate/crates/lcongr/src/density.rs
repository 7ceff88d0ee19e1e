//! Residual densities of twisted L-values: prime sweeps using the congruence
//! L(E, chi) = -L(E) #E(F_p) mod (1 - zeta_q), and the predicted profile from the mod-9 image.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::arith::{self, rat, rat_int};
use crate::dirichlet::DirichletCharacter;
use crate::ec::Curve;
use crate::error::{Error, Result};
use crate::lseries;
use crate::matgrp::{self, DensityProfile, Tables};

/// Default seed for spot checks.
pub const SPOT_SEED: u64 = 0x5eed_0003;
/// Spot checks sample characters of conductor below this bound.
pub const SPOT_CONDUCTOR_BOUND: u64 = 300;

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub curve: String,
    pub q: u64,
    pub limit: u64,
    pub counts: BTreeMap<u64, u64>,
    pub eligible_primes: u64,
    pub empirical: DensityProfile,
    pub predicted: Option<DensityProfile>,
    pub max_abs_deviation: Option<f64>,
}

/// Primes p < limit with p = 1 mod q and p not dividing N.
pub fn eligible_primes(curve: &Curve, q: u64, limit: u64) -> Vec<u64> {
    let n = curve.conductor();
    arith::primes_below(limit as usize)
        .into_iter()
        .filter(|&p| p % q == 1 && !n.is_multiple_of(p))
        .collect()
}

/// Residue of -L(E) #E(F_p) in F_q; the product is q-integral because q^(-ord L(E)) divides #E(F_p).
pub fn sweep_residue(curve: &Curve, lratio: &BigRational, q: u64, p: u64) -> Result<u64> {
    let count = curve.data.count_points(p)?;
    let x = -lratio * rat_int(count as i64);
    arith::rational_mod(&x, q).ok_or_else(|| {
        Error::HypothesisFailed(format!(
            "{}: L(E) #E(F_{p}) = {} is not {q}-integral",
            curve.label(),
            -x
        ))
    })
}

fn check_sweepable(curve: &Curve, lratio: &BigRational, q: u64) -> Result<()> {
    if curve.data.c0.is_multiple_of(q) {
        return Err(Error::HypothesisFailed(format!("{q} divides c0 = {}", curve.data.c0)));
    }
    match arith::ord_rational(lratio, q) {
        None => Err(Error::RankPositive),
        Some(v) if v < -1 => Err(Error::BoundViolated(format!("ord_{q} L(E) = {v}"))),
        _ => Ok(()),
    }
}

fn tally(curve: &Curve, lratio: &BigRational, q: u64, primes: &[u64]) -> Result<Vec<u64>> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(16);
    let chunk = primes.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = primes
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut counts = vec![0u64; q as usize];
                    for &p in part {
                        counts[sweep_residue(curve, lratio, q, p)? as usize] += 1;
                    }
                    Ok(counts)
                })
            })
            .collect();
        let mut total = vec![0u64; q as usize];
        for h in handles {
            let part: Result<Vec<u64>> = h.join().expect("sweep worker panicked");
            for (t, c) in total.iter_mut().zip(part?) {
                *t += c;
            }
        }
        Ok(total)
    })
}

/// Tallies residues of twisted L-values over prime conductors p < limit, p = 1 mod q.
pub fn sweep(curve: &Curve, q: u64, limit: u64) -> Result<SweepResult> {
    let lratio = lseries::algebraic_lvalue(curve)?;
    check_sweepable(curve, &lratio, q)?;
    let primes = eligible_primes(curve, q, limit);
    let counts = tally(curve, &lratio, q, &primes)?;
    let total = primes.len() as i64;
    let empirical = DensityProfile::new(
        q,
        counts.iter().map(|&c| if total == 0 { BigRational::zero() } else { rat(c as i64, total) }).collect(),
    );
    let predicted = if q == 3 { predict(curve, None, &Tables::bundled()).ok().map(|p| p.profile) } else { None };
    let max_abs_deviation = predicted.as_ref().map(|pr| max_deviation(&empirical, pr));
    Ok(SweepResult {
        curve: curve.label().to_string(),
        q,
        limit,
        counts: counts.iter().enumerate().map(|(k, &c)| (k as u64, c)).collect(),
        eligible_primes: primes.len() as u64,
        empirical,
        predicted,
        max_abs_deviation,
    })
}

/// Sweep with an explicit prediction in place of the dataset's image label.
pub fn sweep_against(curve: &Curve, q: u64, limit: u64, predicted: DensityProfile) -> Result<SweepResult> {
    let mut r = sweep(curve, q, limit)?;
    r.max_abs_deviation = Some(max_deviation(&r.empirical, &predicted));
    r.predicted = Some(predicted);
    Ok(r)
}

pub fn max_deviation(a: &DensityProfile, b: &DensityProfile) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| lseries::to_f64(&(x - y).abs()))
        .fold(0.0, f64::max)
}

/// Per-prime residues, for CSV output.
pub fn residues(curve: &Curve, q: u64, limit: u64) -> Result<Vec<(u64, u64)>> {
    let lratio = lseries::algebraic_lvalue(curve)?;
    check_sweepable(curve, &lratio, q)?;
    eligible_primes(curve, q, limit)
        .into_iter()
        .map(|p| Ok((p, sweep_residue(curve, &lratio, q, p)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Route {
    /// ord_3 L(E) > 0.
    PositiveValuation,
    /// ord_3 L(E) = 0 and 3 divides the torsion order.
    ThreeTorsion,
    /// ord_3 L(E) = 0: mod-3 image, unit L(E).
    LevelThree { row: String, unit: u64 },
    /// ord_3 L(E) = -1: mod-9 image, unit 3 L(E).
    LevelNine { row: String, unit: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub curve: String,
    pub lratio: String,
    pub route: Route,
    pub profile: DensityProfile,
}

fn normalize(label: &str) -> String {
    label.chars().filter(|c| !matches!(c, '(' | ')')).collect::<String>().to_uppercase()
}

fn find_row<'a>(tables: &'a Tables, label: &str) -> Option<(u8, &'a matgrp::TableRow)> {
    let key = normalize(label);
    tables
        .table1
        .iter()
        .map(|r| (1, r))
        .chain(tables.table2.iter().map(|r| (2, r)))
        .find(|(_, r)| normalize(&r.label) == key)
}

/// Predicted residual density at q = 3. `image` overrides the dataset's image label.
pub fn predict(curve: &Curve, image: Option<&str>, tables: &Tables) -> Result<Prediction> {
    let lratio = lseries::algebraic_lvalue(curve)?;
    if curve.data.c0.is_multiple_of(3) {
        return Err(Error::HypothesisFailed(format!("3 divides c0 = {}", curve.data.c0)));
    }
    let ord = arith::ord_rational(&lratio, 3).ok_or(Error::RankPositive)?;
    let torsion = match curve.data.torsion {
        Some(t) => t,
        None => curve.data.torsion_order()?,
    };
    let image_label = || {
        image
            .map(str::to_string)
            .or_else(|| curve.data.image.clone())
            .ok_or_else(|| Error::MissingImageData(curve.label().to_string()))
    };
    let (route, profile) = match ord {
        v if v > 0 => (Route::PositiveValuation, DensityProfile::point_mass()),
        0 if torsion % 3 == 0 => (Route::ThreeTorsion, DensityProfile::point_mass()),
        0 => {
            let label = image_label()?;
            let (which, row) = find_row(tables, &label).ok_or_else(|| Error::MissingImageData(label.clone()))?;
            let unit = arith::rational_mod(&lratio, 3).expect("3-adic unit");
            let slice = matgrp::det1_slice(&matgrp::reduce_to_modulus(&row.image(which)?, 3));
            (Route::LevelThree { row: row.label.clone(), unit }, matgrp::density_profile(&slice, unit, 1)?)
        }
        -1 => {
            let label = image_label()?;
            let (which, row) = find_row(tables, &label).ok_or_else(|| Error::MissingImageData(label.clone()))?;
            if which != 2 {
                return Err(Error::MissingImageData(format!("{label}: no mod-9 image")));
            }
            let unit = arith::rational_mod(&(&lratio * rat_int(3)), 3).expect("3-adic unit");
            (Route::LevelNine { row: row.label.clone(), unit }, matgrp::density_profile(&row.slice(2)?, unit, 2)?)
        }
        v => return Err(Error::BoundViolated(format!("ord_3 L(E) = {v}"))),
    };
    if !matgrp::twelve_triples().contains(&profile) {
        return Err(Error::Mismatch(format!("{}: {profile} is not an allowed triple", curve.label())));
    }
    Ok(Prediction { curve: curve.label().to_string(), lratio: lratio.to_string(), route, profile })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub conductor: u64,
    pub character: String,
    pub lvalue: String,
    pub observed: u64,
    pub predicted: u64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotReport {
    pub curve: String,
    pub q: u64,
    pub seed: u64,
    pub checks: Vec<SpotCheck>,
    pub holds: bool,
}

/// Compares sweep residues with fully evaluated twisted L-values on randomly sampled characters.
pub fn spot_check(curve: &Curve, q: u64, count: usize, seed: u64) -> Result<SpotReport> {
    let lratio = lseries::algebraic_lvalue(curve)?;
    check_sweepable(curve, &lratio, q)?;
    let mut pairs = Vec::new();
    for p in eligible_primes(curve, q, SPOT_CONDUCTOR_BOUND) {
        for chi in DirichletCharacter::characters(p, q)? {
            pairs.push(chi);
        }
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for chi in pairs.choose_multiple(&mut rng, count) {
        let lvalue = lseries::algebraic_twisted_lvalue(curve, chi)?.algebraic;
        let observed = lvalue.reduce_mod_lambda()?;
        let predicted = sweep_residue(curve, &lratio, q, chi.conductor())?;
        checks.push(SpotCheck {
            conductor: chi.conductor(),
            character: chi.id(),
            lvalue: lvalue.to_string(),
            observed,
            predicted,
            holds: observed == predicted,
        });
    }
    Ok(SpotReport { curve: curve.label().to_string(), q, seed, holds: checks.iter().all(|c| c.holds), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::CurveData;

    fn curve(label: &str, ainvs: [i64; 5], n: u64) -> Curve {
        Curve::new(CurveData::new(label, ainvs, n))
    }

    #[test]
    fn residues_cover_all_primes() {
        let e = curve("11a1", [0, -1, 1, -10, -20], 11);
        let r = sweep(&e, 3, 2000).unwrap();
        assert_eq!(r.counts.values().sum::<u64>(), r.eligible_primes);
        assert_eq!(r.empirical.total(), rat(1, 1));
    }

    #[test]
    fn eleven_a_one_prediction() {
        let mut data = CurveData::new("11a1", [0, -1, 1, -10, -20], 11);
        data.image = Some("GL3".into());
        let p = predict(&Curve::new(data), None, &Tables::bundled()).unwrap();
        assert_eq!(p.profile.to_string(), "(3/8, 3/8, 1/4)");
        assert_eq!(p.route, Route::LevelThree { row: "GL(3)".into(), unit: 2 });
    }

    #[test]
    fn missing_image() {
        let e = curve("11a1", [0, -1, 1, -10, -20], 11);
        assert!(matches!(predict(&e, None, &Tables::bundled()), Err(Error::MissingImageData(_))));
    }

    #[test]
    fn spot_checks_agree() {
        let e = curve("11a1", [0, -1, 1, -10, -20], 11);
        let r = spot_check(&e, 3, 4, SPOT_SEED).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
