//! Dirichlet characters of prime order, stored as exponent tables: chi(a) = zeta_q^e(a).

use std::fmt;

use num_complex::Complex;

use crate::arith::{self, gcd_i64, rem};
use crate::cyclotomic::{root_of_unity, Cyc};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    conductor: u64,
    order: u64,
    /// Least primitive root when the conductor is prime.
    generator: Option<u64>,
    /// chi(g) = zeta_q^k for prime conductors.
    twist_exponent: Option<u64>,
    /// exps[a mod n] = Some(e) with chi(a) = zeta_q^e, or None when gcd(a, n) > 1.
    exps: Vec<Option<u32>>,
}

impl DirichletCharacter {
    /// The character of prime conductor p and prime order q with chi(g) = zeta_q^k,
    /// g the least primitive root mod p.
    pub fn new(p: u64, q: u64, k: u64) -> Result<Self> {
        if !arith::is_prime(p) || p == 2 || !arith::is_prime(q) || !(p - 1).is_multiple_of(q) || k.is_multiple_of(q) {
            return Err(Error::NoSuchCharacter { p, q });
        }
        let g = arith::primitive_root(p);
        let mut exps = vec![None; p as usize];
        let mut x = 1u64;
        for j in 0..(p - 1) {
            exps[x as usize] = Some(((j * k) % q) as u32);
            x = x * g % p;
        }
        Ok(DirichletCharacter { conductor: p, order: q, generator: Some(g), twist_exponent: Some(k % q), exps })
    }

    /// All q - 1 characters of conductor p and order q.
    pub fn characters(p: u64, q: u64) -> Result<Vec<Self>> {
        (1..q).map(|k| Self::new(p, q, k)).collect()
    }

    /// The character with chi(a) = zeta_q^e.
    pub fn by_value(p: u64, q: u64, a: u64, e: u64) -> Result<Self> {
        Self::characters(p, q)?
            .into_iter()
            .find(|c| c.exponent(a as i64) == Some((e % q) as u32))
            .ok_or(Error::NoSuchCharacter { p, q })
    }

    /// Even quadratic character of conductor p1*p2 (product of Legendre symbols).
    pub fn quadratic_p1p2(p1: u64, p2: u64) -> Result<Self> {
        let n = p1 * p2;
        if p1 == p2 || p1 == 2 || p2 == 2 || !arith::is_prime(p1) || !arith::is_prime(p2) || n % 4 != 1 {
            return Err(Error::NoSuchCharacter { p: n, q: 2 });
        }
        let exps = (0..n)
            .map(|a| match arith::legendre(a as i64, p1) * arith::legendre(a as i64, p2) {
                0 => None,
                1 => Some(0),
                _ => Some(1),
            })
            .collect();
        Ok(DirichletCharacter { conductor: n, order: 2, generator: None, twist_exponent: None, exps })
    }

    /// The even quadratic character of conductor 8: +1 on 1, 7 and -1 on 3, 5.
    pub fn quadratic_eight() -> Self {
        let exps = (0..8u64)
            .map(|a| match a {
                1 | 7 => Some(0),
                3 | 5 => Some(1),
                _ => None,
            })
            .collect();
        DirichletCharacter { conductor: 8, order: 2, generator: None, twist_exponent: None, exps }
    }

    /// The quadratic character of an odd prime conductor p (Legendre symbol).
    pub fn quadratic_prime(p: u64) -> Result<Self> {
        Self::new(p, 2, 1)
    }

    /// Parses "p:q:chi(a)=zE", e.g. "7:3:chi(3)=z2", or "p:q:k=K".
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("character spec {s:?}; expected p:q:chi(a)=zE"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let p: u64 = parts[0].trim().parse().map_err(|_| bad())?;
        let q: u64 = parts[1].trim().parse().map_err(|_| bad())?;
        let spec = parts[2].trim();
        if let Some(k) = spec.strip_prefix("k=") {
            return Self::new(p, q, k.parse().map_err(|_| bad())?);
        }
        let rest = spec.strip_prefix("chi(").ok_or_else(bad)?;
        let (a, val) = rest.split_once(")=").ok_or_else(bad)?;
        let a: u64 = a.parse().map_err(|_| bad())?;
        let e: u64 = match val.strip_prefix('z') {
            Some("") => 1,
            Some(e) => e.parse().map_err(|_| bad())?,
            None if val == "1" => 0,
            None if val == "-1" && q == 2 => 1,
            None => return Err(bad()),
        };
        Self::by_value(p, q, a, e)
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn generator(&self) -> Option<u64> {
        self.generator
    }

    pub fn twist_exponent(&self) -> Option<u64> {
        self.twist_exponent
    }

    pub fn exponent(&self, a: i64) -> Option<u32> {
        self.exps[rem(a, self.conductor as i64) as usize]
    }

    pub fn evaluate(&self, a: i64) -> Cyc {
        match self.exponent(a) {
            Some(e) => Cyc::zeta_pow(self.order, e as i64),
            None => Cyc::zero(self.order),
        }
    }

    pub fn value<R: Real>(&self, a: i64) -> Complex<R> {
        match self.exponent(a) {
            Some(e) => root_of_unity(self.order as i64, e as i64),
            None => Complex::new(R::zero(), R::zero()),
        }
    }

    /// chi^j, which realises the Galois conjugate sigma_j o chi.
    pub fn power(&self, j: i64) -> Self {
        let q = self.order as i64;
        let exps = self.exps.iter().map(|e| e.map(|e| rem(e as i64 * j, q) as u32)).collect();
        let twist_exponent = self.twist_exponent.map(|k| rem(k as i64 * j, q) as u64);
        DirichletCharacter { exps, twist_exponent, ..self.clone() }
    }

    pub fn conj(&self) -> Self {
        self.power(-1)
    }

    pub fn is_even(&self) -> bool {
        self.exponent(-1) == Some(0)
    }

    /// tau(chi) = sum_a chi(a) exp(2 pi i a / n) under zeta_q -> exp(2 pi i / q).
    pub fn gauss_sum<R: Real>(&self) -> Complex<R> {
        let n = self.conductor as i64;
        let mut acc = Complex::new(R::zero(), R::zero());
        for a in 1..n {
            if let Some(e) = self.exponent(a) {
                let angle = (e as i64 * n + a * self.order as i64) % (n * self.order as i64);
                acc = acc + root_of_unity::<R>(n * self.order as i64, angle);
            }
        }
        acc
    }

    pub fn coprime_to(&self, n: u64) -> bool {
        gcd_i64(self.conductor as i64, n as i64) == 1
    }

    pub fn id(&self) -> String {
        match (self.generator, self.twist_exponent) {
            (Some(g), Some(k)) => format!("{}:{}:chi({})=z{}", self.conductor, self.order, g, k),
            _ => format!("{}:{}:quadratic", self.conductor, self.order),
        }
    }
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Character({})", self.id())
    }
}

impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_lookup() {
        assert_eq!(DirichletCharacter::characters(7, 3).unwrap().len(), 2);
        assert_eq!(DirichletCharacter::characters(11, 5).unwrap().len(), 4);
        assert_eq!(DirichletCharacter::characters(7, 5), Err(Error::NoSuchCharacter { p: 7, q: 5 }));
        let c = DirichletCharacter::parse("7:3:chi(3)=z2").unwrap();
        assert_eq!(c.evaluate(3), Cyc::zeta_pow(3, 2));
        assert_eq!(c.evaluate(-1), Cyc::one(3));
        assert!(c.evaluate(14).is_zero());
        let c = DirichletCharacter::parse("11:5:chi(2)=z").unwrap();
        assert_eq!(c.evaluate(2), Cyc::zeta_pow(5, 1));
    }

    #[test]
    fn gauss_sum_modulus() {
        for (p, q) in [(7, 3), (11, 5), (13, 3), (31, 5), (29, 7)] {
            for c in DirichletCharacter::characters(p, q).unwrap() {
                let t: Complex<f64> = c.gauss_sum();
                assert!((t.norm_sqr() - p as f64).abs() < 1e-10 * p as f64);
                let s: Complex<f64> = c.conj().gauss_sum();
                let sign = if c.is_even() { 1.0 } else { -1.0 };
                assert!((t * s - Complex::new(sign * p as f64, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_characters() {
        let c = DirichletCharacter::quadratic_p1p2(3, 7).unwrap();
        assert!(c.is_even());
        assert!(DirichletCharacter::quadratic_p1p2(3, 5).is_err());
        let e = DirichletCharacter::quadratic_eight();
        assert!(e.is_even());
        let t: Complex<f64> = e.gauss_sum();
        assert!((t.re - 8f64.sqrt()).abs() < 1e-12 && t.im.abs() < 1e-12);
        let c5 = DirichletCharacter::quadratic_prime(5).unwrap();
        let t: Complex<f64> = c5.gauss_sum();
        assert!((t.re - 5f64.sqrt()).abs() < 1e-12);
    }
}
