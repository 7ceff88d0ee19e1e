//! Elliptic curves over Q: invariants, reduction, point counts, Fourier coefficients,
//! torsion and the 3-division polynomial.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Mutex};

use crate::arith::{self, gcd_i64};
use crate::bsgs;
use crate::error::{Error, Result};

/// Largest prime accepted by the O(p) point counter.
pub const MAX_COUNT_PRIME: u64 = 10_000_000;
/// Primes from here on are counted by baby-step giant-step.
pub const BSGS_THRESHOLD: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveData {
    pub label: String,
    pub ainvs: [i64; 5],
    pub conductor: u64,
    #[serde(default)]
    pub root_number: Option<i8>,
    #[serde(default = "one")]
    pub c0: u64,
    #[serde(default, with = "opt_rational")]
    pub lratio: Option<BigRational>,
    #[serde(default)]
    pub torsion: Option<u64>,
    /// Primes q for which the curve admits a rational q-isogeny.
    #[serde(default)]
    pub isogeny_primes: Option<Vec<u64>>,
    /// Galois image label (Table 1 row name or 3-adic label).
    #[serde(default)]
    pub image: Option<String>,
    /// 3 divides the empirical gcd of the cubic twisted values, so the residue rule does not apply.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub kn_out_of_method: bool,
}

fn one() -> u64 {
    1
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<BigRational>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|t| t.parse::<BigRational>().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BInvariants {
    pub b2: i128,
    pub b4: i128,
    pub b6: i128,
    pub b8: i128,
}

impl CurveData {
    pub fn new(label: &str, ainvs: [i64; 5], conductor: u64) -> Self {
        CurveData {
            label: label.to_string(),
            ainvs,
            conductor,
            root_number: None,
            c0: 1,
            lratio: None,
            torsion: None,
            isogeny_primes: None,
            image: None,
            kn_out_of_method: false,
        }
    }

    pub fn b_invariants(&self) -> BInvariants {
        let [a1, a2, a3, a4, a6] = self.ainvs.map(|v| v as i128);
        BInvariants {
            b2: a1 * a1 + 4 * a2,
            b4: 2 * a4 + a1 * a3,
            b6: a3 * a3 + 4 * a6,
            b8: a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4,
        }
    }

    pub fn c4(&self) -> i128 {
        let b = self.b_invariants();
        b.b2 * b.b2 - 24 * b.b4
    }

    pub fn c6(&self) -> i128 {
        let b = self.b_invariants();
        -b.b2 * b.b2 * b.b2 + 36 * b.b2 * b.b4 - 216 * b.b6
    }

    pub fn discriminant(&self) -> i128 {
        let b = self.b_invariants();
        -b.b2 * b.b2 * b.b8 - 8 * b.b4 * b.b4 * b.b4 - 27 * b.b6 * b.b6 + 9 * b.b2 * b.b4 * b.b6
    }

    pub fn is_good(&self, p: u64) -> bool {
        self.discriminant() % p as i128 != 0
    }

    pub fn bad_primes(&self) -> Vec<u64> {
        arith::prime_divisors(self.conductor)
    }

    /// Points on the reduction of the affine Weierstrass equation mod p, singular point included.
    fn affine_count(&self, p: u64) -> u64 {
        if p == 2 || p == 3 {
            return self.affine_count_naive(p);
        }
        let b = self.b_invariants();
        let m = p as i128;
        let r = |v: i128| v.rem_euclid(m) as u64;
        let (c2, c1, c0) = (r(b.b2), r(2 * b.b4), r(b.b6));
        let chi = quadratic_table(p);
        let mut total: i64 = 0;
        for x in 0..p {
            let f = (((4 * x % p + c2) % p * x % p + c1) % p * x % p + c0) % p;
            total += 1 + chi[f as usize] as i64;
        }
        total as u64
    }

    /// Brute-force count of affine solutions, used for tiny p and as an oracle.
    pub fn affine_count_naive(&self, p: u64) -> u64 {
        let m = p as i128;
        let a = self.ainvs.map(|v| (v as i128).rem_euclid(m));
        let mut n = 0;
        for x in 0..m {
            let rhs = (x * x * x + a[1] * x * x + a[3] * x + a[4]).rem_euclid(m);
            for y in 0..m {
                if (y * y + a[0] * x * y + a[2] * y - rhs).rem_euclid(m) == 0 {
                    n += 1;
                }
            }
        }
        n
    }

    /// #E(F_p) for a prime of good reduction.
    pub fn count_points(&self, p: u64) -> Result<u64> {
        if p > MAX_COUNT_PRIME {
            return Err(Error::Overflow(p));
        }
        if !self.is_good(p) {
            return Err(Error::BadReduction(p));
        }
        if p >= BSGS_THRESHOLD {
            let m = p as i128;
            let a = (-27 * self.c4()).rem_euclid(m) as u64;
            let b = (-54 * self.c6()).rem_euclid(m) as u64;
            if let Some(n) = bsgs::group_order(a, b, p) {
                return Ok(n);
            }
        }
        Ok(self.affine_count(p) + 1)
    }

    /// #E(F_p) by the direct character sum, kept as an oracle for the fast path.
    pub fn count_points_legendre(&self, p: u64) -> Result<u64> {
        if !self.is_good(p) {
            return Err(Error::BadReduction(p));
        }
        Ok(self.affine_count(p) + 1)
    }

    /// Trace of Frobenius, a_p = p + 1 - #(points of the reduced cubic, singular one included).
    /// This single formula gives the split (+1), non-split (-1) and additive (0) values at bad primes.
    pub fn ap(&self, p: u64) -> i64 {
        if !self.conductor.is_multiple_of(p) && p <= MAX_COUNT_PRIME {
            if let Ok(n) = self.count_points(p) {
                return p as i64 + 1 - n as i64;
            }
        }
        p as i64 - self.affine_count(p) as i64
    }

    pub fn an_table(&self, nmax: usize) -> CoefficientTable {
        self.extend_table(&CoefficientTable { label: self.label.clone(), values: vec![0, 1] }, nmax)
    }

    /// Table up to `nmax`, reusing the prime traces already present in `prev`.
    pub fn extend_table(&self, prev: &CoefficientTable, nmax: usize) -> CoefficientTable {
        let spf = arith::smallest_prime_factors(nmax + 1);
        let mut a = vec![0i64; nmax + 1];
        if nmax >= 1 {
            a[1] = 1;
        }
        let known = prev.nmax();
        for n in 2..=nmax {
            if n <= known && spf[n] as usize == n {
                a[n] = prev.values[n];
                continue;
            }
            let p = spf[n] as usize;
            let mut pk = p;
            while (n / pk).is_multiple_of(p) {
                pk *= p;
            }
            let m = n / pk;
            a[n] = if m > 1 {
                a[pk] * a[m]
            } else if pk == p {
                self.ap(p as u64)
            } else if self.conductor.is_multiple_of(p as u64) {
                a[p] * a[n / p]
            } else {
                a[p] * a[n / p] - p as i64 * a[n / p / p]
            };
        }
        CoefficientTable { label: self.label.clone(), values: a }
    }

    /// 3-division polynomial, ascending coefficients of 3x^4 + b2 x^3 + 3 b4 x^2 + 3 b6 x + b8.
    pub fn three_division_poly(&self) -> [i128; 5] {
        let b = self.b_invariants();
        [b.b8, 3 * b.b6, 3 * b.b4, b.b2, 3]
    }

    /// Whether p splits completely in the 3-division field, read off as four roots of psi_3 mod p.
    pub fn splits_completely_in_k3(&self, p: u64) -> Result<bool> {
        if p == 3 || p == 2 || (3 * self.discriminant()) % p as i128 == 0 {
            return Err(Error::BadPrime(p));
        }
        let m = p as i128;
        let c = self.three_division_poly().map(|v| v.rem_euclid(m));
        let roots = (0..m)
            .filter(|&x| {
                let mut acc = 0i128;
                for k in (0..5).rev() {
                    acc = (acc * x + c[k]) % m;
                }
                acc == 0
            })
            .count();
        Ok(roots == 4)
    }

    /// Rational torsion order: a gcd-of-point-counts bound, then Lutz-Nagell enumeration
    /// with exact multiples to confirm every point.
    pub fn torsion_order(&self) -> Result<u64> {
        let bound = self.torsion_bound(20);
        let pts = self.lutz_nagell_points()?;
        let order = 1 + pts.len() as u64;
        if !bound.is_multiple_of(order) {
            return Err(Error::Mismatch(format!(
                "{}: torsion {} does not divide point-count gcd {}",
                self.label, order, bound
            )));
        }
        Ok(order)
    }

    /// gcd of #E(F_p) over the first `count` good primes p > 3.
    pub fn torsion_bound(&self, count: usize) -> u64 {
        let mut g = 0i64;
        let mut used = 0;
        let mut p = 5u64;
        while used < count {
            if arith::is_prime(p) && self.is_good(p) {
                g = gcd_i64(g, self.count_points(p).expect("good prime") as i64);
                used += 1;
            }
            p += 2;
        }
        g as u64
    }

    /// Finite-order points on the integral model y^2 = x^3 - 27 c4 x - 54 c6, with their orders.
    pub fn lutz_nagell_points(&self) -> Result<Vec<((BigInt, BigInt), u64)>> {
        let a = -27 * self.c4();
        let b = -54 * self.c6();
        let ab = BigInt::from(a);
        let bb = BigInt::from(b);
        let d: BigInt = BigInt::from(4) * &ab * &ab * &ab + BigInt::from(27) * &bb * &bb;
        let mut rest = d.abs();
        let mut primes = vec![2u64, 3];
        primes.extend(self.bad_primes());
        primes.sort_unstable();
        primes.dedup();
        let mut fac = Vec::new();
        for &p in &primes {
            let pb = BigInt::from(p);
            let mut e = 0u32;
            while (&rest % &pb).is_zero() {
                rest /= &pb;
                e += 1;
            }
            if e > 0 {
                fac.push((p, e));
            }
        }
        if !rest.is_one() {
            let r = rest.to_u64().ok_or_else(|| {
                Error::Invalid(format!("{}: discriminant cofactor too large", self.label))
            })?;
            fac.extend(arith::factor(r));
        }
        let mut ys: Vec<BigInt> = vec![BigInt::one()];
        for (p, e) in fac {
            let mut next = Vec::new();
            for y in &ys {
                let mut pk = BigInt::one();
                for _ in 0..=(e / 2) {
                    next.push(y * &pk);
                    pk *= p;
                }
            }
            ys = next;
        }
        ys.push(BigInt::zero());
        let mut out = Vec::new();
        for y in ys {
            let c = &bb - &y * &y;
            for x in integer_cubic_roots(&ab, &c) {
                let signs: &[i32] = if y.is_zero() { &[1] } else { &[1, -1] };
                for &s in signs {
                    let pt = (BigRational::from_integer(x.clone()), BigRational::from_integer(&y * s));
                    if let Some(k) = finite_order(&pt, &ab, 12) {
                        out.push(((x.clone(), &y * s), k));
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// chi[x] = Legendre symbol (x/p) for every residue x, from a table of squares.
pub fn quadratic_table(p: u64) -> Vec<i8> {
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    for x in 1..=(p / 2) {
        chi[((x * x) % p) as usize] = 1;
    }
    chi
}

/// Integer roots of x^3 + a x + c.
fn integer_cubic_roots(a: &BigInt, c: &BigInt) -> Vec<BigInt> {
    let eval = |x: &BigInt| x * x * x + a * x + c;
    let af = a.to_f64().unwrap_or(f64::MAX);
    let cf = c.to_f64().unwrap_or(f64::MAX);
    let g = |x: f64| x * x * x + af * x + cf;
    let mut brackets = Vec::new();
    let r = 2.0 + af.abs().sqrt() + cf.abs().cbrt();
    if af >= 0.0 {
        brackets.push((-r, r));
    } else {
        let s = (-af / 3.0).sqrt();
        brackets.push((-r, -s));
        brackets.push((-s, s));
        brackets.push((s, r));
    }
    let mut out = Vec::new();
    for (mut lo, mut hi) in brackets {
        let (glo, ghi) = (g(lo), g(hi));
        if glo.signum() == ghi.signum() && glo != 0.0 && ghi != 0.0 {
            // No sign change, but a double root may touch zero at an endpoint.
            for t in [lo, hi] {
                push_near(&mut out, t, &eval);
            }
            continue;
        }
        let rising = ghi > glo;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        push_near(&mut out, 0.5 * (lo + hi), &eval);
    }
    out.sort();
    out.dedup();
    out
}

fn push_near(out: &mut Vec<BigInt>, t: f64, eval: &dyn Fn(&BigInt) -> BigInt) {
    let base = t.round() as i64;
    for dx in -2..=2 {
        let x = BigInt::from(base + dx);
        if eval(&x).is_zero() {
            out.push(x);
        }
    }
}

type Pt = (BigRational, BigRational);

/// Order of an integral point on y^2 = x^3 + a x + b if it is at most `max`; None otherwise.
/// Any non-integral multiple proves infinite order.
fn finite_order(p: &Pt, a: &BigInt, max: u64) -> Option<u64> {
    let a = BigRational::from_integer(a.clone());
    let mut acc: Option<Pt> = Some(p.clone());
    for k in 1..=max {
        match &acc {
            None => return Some(k),
            Some((x, y)) => {
                if !x.is_integer() || !y.is_integer() {
                    return None;
                }
            }
        }
        acc = add_points(acc.as_ref(), Some(p), &a);
        if acc.is_none() {
            return Some(k + 1);
        }
    }
    None
}

fn add_points(p: Option<&Pt>, q: Option<&Pt>, a: &BigRational) -> Option<Pt> {
    let (p, q) = match (p, q) {
        (None, q) => return q.cloned(),
        (p, None) => return p.cloned(),
        (Some(p), Some(q)) => (p, q),
    };
    let lam = if p.0 == q.0 {
        if (&p.1 + &q.1).is_zero() {
            return None;
        }
        let three = BigRational::from_integer(3.into());
        let two = BigRational::from_integer(2.into());
        (three * &p.0 * &p.0 + a) / (two * &p.1)
    } else {
        (&q.1 - &p.1) / (&q.0 - &p.0)
    };
    let x3 = &lam * &lam - &p.0 - &q.0;
    let y3 = &lam * (&p.0 - &x3) - &p.1;
    Some((x3, y3))
}

/// A curve together with a lazily grown table of Fourier coefficients.
#[derive(Debug)]
pub struct Curve {
    pub data: CurveData,
    table: Mutex<Arc<CoefficientTable>>,
}

impl Curve {
    pub fn new(data: CurveData) -> Self {
        let table = CoefficientTable { label: data.label.clone(), values: vec![0, 1] };
        Curve { data, table: Mutex::new(Arc::new(table)) }
    }

    /// Seeds the coefficient table, e.g. from an on-disk cache.
    pub fn with_table(data: CurveData, table: CoefficientTable) -> Self {
        Curve { data, table: Mutex::new(Arc::new(table)) }
    }

    /// Coefficients a_1..a_n for at least n = `nmax`, extending the table when needed.
    pub fn coefficients(&self, nmax: usize) -> Arc<CoefficientTable> {
        let mut guard = self.table.lock().expect("coefficient table lock");
        if guard.nmax() < nmax {
            let target = nmax.max(guard.nmax() + guard.nmax() / 2);
            *guard = Arc::new(self.data.extend_table(&guard, target));
        }
        Arc::clone(&guard)
    }

    pub fn label(&self) -> &str {
        &self.data.label
    }

    pub fn conductor(&self) -> u64 {
        self.data.conductor
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub label: String,
    /// `values[n]` is a_n; index 0 is unused and zero.
    pub values: Vec<i64>,
}

impl CoefficientTable {
    pub fn nmax(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> i64 {
        self.values[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e11a1() -> CurveData {
        CurveData::new("11a1", [0, -1, 1, -10, -20], 11)
    }

    #[test]
    fn invariants_of_11a1() {
        let e = e11a1();
        assert_eq!(e.discriminant(), -161051);
        let b = e.b_invariants();
        assert_eq!((b.b2, b.b4, b.b6, b.b8), (-4, -20, -79, -21));
        assert_eq!(e.three_division_poly(), [-21, -237, -60, -4, 3]);
    }

    #[test]
    fn counts_and_traces() {
        let e = e11a1();
        assert_eq!(e.count_points(7).unwrap(), 10);
        assert_eq!(e.ap(7), -2);
        assert_eq!(e.ap(11), 1);
        assert_eq!(e.ap(2), -2);
        assert_eq!(e.count_points(11), Err(Error::BadReduction(11)));
        let t = e.an_table(100);
        assert_eq!(t.get(4), t.get(2) * t.get(2) - 2);
        assert_eq!(t.get(77), t.get(7) * t.get(11));
    }

    #[test]
    fn additive_trace_is_zero() {
        // 27a1 has additive reduction at 3.
        let e = CurveData::new("27a1", [0, 0, 1, 0, -7], 27);
        assert_eq!(e.ap(3), 0);
        // 14a1 is non-split at 2 and split at 7.
        let e = CurveData::new("14a1", [1, 0, 1, 4, -6], 14);
        assert_eq!(e.ap(2), -1);
        assert_eq!(e.ap(7), 1);
    }

    #[test]
    fn torsion_examples() {
        assert_eq!(e11a1().torsion_order().unwrap(), 5);
        assert_eq!(CurveData::new("11a3", [0, -1, 1, 0, 0], 11).torsion_order().unwrap(), 5);
        assert_eq!(CurveData::new("1356d1", [0, 1, 0, -1, -4], 1356).torsion_order().unwrap(), 1);
        assert_eq!(CurveData::new("15a1", [1, 1, 1, -10, -10], 15).torsion_order().unwrap(), 8);
        assert_eq!(CurveData::new("54b3", [1, -1, 1, -14, 29], 54).torsion_order().unwrap(), 9);
    }

    #[test]
    fn split_completely_examples() {
        let e = e11a1();
        assert_eq!(e.count_points(337).unwrap(), 360);
        assert_eq!(e.count_points(193).unwrap(), 190);
        assert_eq!(e.count_points(19).unwrap(), 20);
        assert!(e.splits_completely_in_k3(337).unwrap());
        assert!(e.splits_completely_in_k3(193).unwrap());
        assert!(!e.splits_completely_in_k3(19).unwrap());
        assert_eq!(e.splits_completely_in_k3(11), Err(Error::BadPrime(11)));
    }

    #[test]
    fn fast_count_matches_character_sum() {
        for e in [e11a1(), CurveData::new("1356d1", [0, 1, 0, -1, -4], 1356)] {
            for p in arith::primes_below(40_000).into_iter().filter(|&p| p >= BSGS_THRESHOLD).step_by(97) {
                assert_eq!(e.count_points(p).unwrap(), e.count_points_legendre(p).unwrap(), "p = {p}");
            }
        }
    }

    #[test]
    fn extended_table_matches_fresh_table() {
        let e = e11a1();
        let small = e.an_table(500);
        assert_eq!(e.extend_table(&small, 3000), e.an_table(3000));
    }
}
