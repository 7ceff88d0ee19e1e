//! Exact arithmetic in Q(zeta_q) for prime q, in the power basis 1, z, ..., z^(q-2).

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

use crate::arith::{self, rem};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub trait Coeff: Clone + PartialEq + Debug + Num + Neg<Output = Self> {}
impl<T: Clone + PartialEq + Debug + Num + Neg<Output = T>> Coeff for T {}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNumber<T> {
    q: u64,
    coeffs: Vec<T>,
}

/// Elements of Q(zeta_q) with exact rational coordinates.
pub type Cyc = CycNumber<BigRational>;

impl<T: Coeff> CycNumber<T> {
    pub fn zero(q: u64) -> Self {
        CycNumber { q, coeffs: vec![T::zero(); (q - 1) as usize] }
    }

    pub fn from_scalar(q: u64, c: T) -> Self {
        let mut z = Self::zero(q);
        z.coeffs[0] = c;
        z
    }

    pub fn one(q: u64) -> Self {
        Self::from_scalar(q, T::one())
    }

    /// Builds sum c_k z^k from coefficients indexed by exponent (any length).
    pub fn from_exponents(q: u64, cs: &[T]) -> Self {
        let mut full = vec![T::zero(); q as usize];
        for (k, c) in cs.iter().enumerate() {
            let i = k % q as usize;
            full[i] = full[i].clone() + c.clone();
        }
        Self::reduce_full(q, full)
    }

    /// z^k.
    pub fn zeta_pow(q: u64, k: i64) -> Self {
        let mut full = vec![T::zero(); q as usize];
        full[rem(k, q as i64) as usize] = T::one();
        Self::reduce_full(q, full)
    }

    /// Collapses a length-q vector using z^(q-1) = -(1 + z + ... + z^(q-2)).
    fn reduce_full(q: u64, mut full: Vec<T>) -> Self {
        let top = full.pop().expect("q >= 2");
        let coeffs = full.into_iter().map(|c| c - top.clone()).collect();
        CycNumber { q, coeffs }
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.q == other.q {
            Ok(())
        } else {
            Err(Error::OrderMismatch(self.q, other.q))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(CycNumber { q: self.q, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&-other.clone())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let q = self.q as usize;
        let mut full = vec![T::zero(); q];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = (i + j) % q;
                full[k] = full[k].clone() + a.clone() * b.clone();
            }
        }
        Ok(Self::reduce_full(self.q, full))
    }

    pub fn scale(&self, c: &T) -> Self {
        CycNumber { q: self.q, coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut acc = Self::one(self.q);
        for _ in 0..e {
            acc = acc.try_mul(self).expect("same order");
        }
        acc
    }

    /// sigma_a : z -> z^a.
    pub fn conjugate(&self, a: i64) -> Self {
        let q = self.q as i64;
        assert!(rem(a, q) != 0, "conjugation needs a unit mod q");
        let mut full = vec![T::zero(); self.q as usize];
        for (k, c) in self.coeffs.iter().enumerate() {
            let i = rem(a * k as i64, q) as usize;
            full[i] = full[i].clone() + c.clone();
        }
        Self::reduce_full(self.q, full)
    }

    /// Rational part when the value lies in Q.
    pub fn as_scalar(&self) -> Option<T> {
        self.coeffs[1..].iter().all(|c| c.is_zero()).then(|| self.coeffs[0].clone())
    }

    /// Product of all q-1 conjugates.
    pub fn norm(&self) -> T {
        let mut acc = self.clone();
        for a in 2..self.q as i64 {
            acc = acc.try_mul(&self.conjugate(a)).expect("same order");
        }
        acc.as_scalar().expect("norm lies in Q")
    }

    pub fn is_real(&self) -> bool {
        *self == self.conjugate(self.q as i64 - 1)
    }

    /// Norm from the maximal real subfield down to Q.
    pub fn norm_plus(&self) -> Result<T> {
        if !self.is_real() {
            return Err(Error::NotReal);
        }
        if self.q == 2 {
            return Ok(self.coeffs[0].clone());
        }
        let mut acc = self.clone();
        for a in 2..=((self.q - 1) / 2) as i64 {
            acc = acc.try_mul(&self.conjugate(a))?;
        }
        acc.as_scalar().ok_or(Error::NotReal)
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::NotUnit("zero has no inverse".into()));
        }
        let mut acc = Self::one(self.q);
        for a in 2..self.q as i64 {
            acc = acc.try_mul(&self.conjugate(a))?;
        }
        Ok(acc.scale(&(T::one() / n)))
    }
}

impl<T: Coeff> Add for CycNumber<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.try_add(&o).expect("orders agree")
    }
}

impl<T: Coeff> Sub for CycNumber<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.try_sub(&o).expect("orders agree")
    }
}

impl<T: Coeff> Mul for CycNumber<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.try_mul(&o).expect("orders agree")
    }
}

impl<T: Coeff> Neg for CycNumber<T> {
    type Output = Self;
    fn neg(self) -> Self {
        CycNumber { q: self.q, coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl<T: Coeff + ToPrimitive> CycNumber<T> {
    /// Complex value under z -> exp(2 pi i a / q).
    pub fn embed<R: Real>(&self, a: i64) -> Complex<R> {
        let q = self.q as i64;
        let mut acc = Complex::new(R::zero(), R::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            let c = R::of(c.to_f64().expect("finite coefficient"));
            acc = acc + root_of_unity::<R>(q, a * k as i64) * c;
        }
        acc
    }
}

/// exp(2 pi i k / n), reducing k first so the angle stays small.
pub fn root_of_unity<R: Real>(n: i64, k: i64) -> Complex<R> {
    let k = rem(k, n);
    let t = R::TAU() * R::of_i64(k) / R::of_i64(n);
    Complex::new(t.cos(), t.sin())
}

impl Cyc {
    pub fn from_ints(q: u64, cs: &[i64]) -> Self {
        let v: Vec<BigRational> = cs.iter().map(|&c| arith::rat_int(c)).collect();
        Self::from_exponents(q, &v)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(arith::is_integer)
    }

    /// Image under z -> 1 in F_q, inverting q-prime denominators.
    pub fn reduce_mod_lambda(&self) -> Result<u64> {
        let mut s = 0i64;
        let q = self.q;
        for c in &self.coeffs {
            let r = arith::rational_mod(c, q).ok_or(Error::NotLambdaIntegral(q))?;
            s += r as i64;
        }
        Ok(rem(s, q as i64) as u64)
    }

    /// Valuation at the prime above q, read off the norm since that prime is totally ramified.
    /// None for zero.
    pub fn ord_lambda(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        arith::ord_rational(&self.norm(), self.q)
    }

    /// Reads values like "-2*z^3-3*z^2-2*z", "z*(1+z^4)^2" or "1/3".
    pub fn parse(q: u64, s: &str) -> Result<Self> {
        let toks = tokenize(s)?;
        let mut p = Parser { toks, pos: 0, q };
        let v = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Invalid(format!("trailing input in {s:?}")));
        }
        Ok(v)
    }
}

impl<T: Coeff + Display + Signed> Display for CycNumber<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { "-" } else { "+" })?;
            }
            first = false;
            let unit = mag.is_one();
            match (k, unit) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "z")?,
                (1, false) => write!(f, "{mag}*z")?,
                (_, true) => write!(f, "z^{k}")?,
                (_, false) => write!(f, "{mag}*z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Coeff + Display + Signed> Debug for CycNumber<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyc{}({})", self.q, self)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Z,
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_ascii_digit() {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '/') {
                i += 1;
            }
            let lit: String = cs[start..i].iter().collect();
            let v = lit.parse::<BigRational>().map_err(|e| Error::Invalid(format!("{lit}: {e}")))?;
            out.push(Tok::Num(v));
            continue;
        }
        match c {
            'z' | 'ζ' => out.push(Tok::Z),
            '+' | '-' | '*' | '^' | '(' | ')' => out.push(Tok::Op(c)),
            _ => return Err(Error::Invalid(format!("unexpected {c:?} in {s:?}"))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    q: u64,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Cyc> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v = v + self.term()?;
            } else if self.eat('-') {
                v = v - self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<Cyc> {
        let mut v = self.unary()?;
        while self.eat('*') {
            v = v * self.unary()?;
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<Cyc> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            let e = match self.toks.get(self.pos) {
                Some(Tok::Num(n)) if n.is_integer() => n.to_integer(),
                _ => return Err(Error::Invalid("exponent must be an integer".into())),
            };
            self.pos += 1;
            let e = e.to_u64().ok_or_else(|| Error::Invalid("exponent too large".into()))?;
            let b = if neg { base.inverse()? } else { base };
            return Ok(b.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Cyc> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Cyc::from_scalar(self.q, n))
            }
            Some(Tok::Z) => {
                self.pos += 1;
                Ok(Cyc::zeta_pow(self.q, 1))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Invalid("missing ')'".into()));
                }
                Ok(v)
            }
            other => Err(Error::Invalid(format!("unexpected token {other:?}"))),
        }
    }
}

/// Largest denominator accepted when rounding recognized coordinates.
pub const MAX_DENOMINATOR: i64 = 120;

/// Recovers x in Q(zeta_q) from its embeddings `values[a] = embed(x, a)` for every unit a mod q.
/// Solves the Vandermonde system in the power basis, rounds each coordinate to a rational with
/// denominator at most 120 and rejects the result unless every embedding round-trips within `tol`.
pub fn recognize<R: Real>(q: u64, values: &[(i64, Complex<R>)], tol: R) -> Result<Cyc> {
    let n = (q - 1) as usize;
    if values.len() != n {
        return Err(Error::RecognitionFailed(format!("need {n} embeddings, got {}", values.len())));
    }
    let mut m: Vec<Vec<Complex<R>>> = values
        .iter()
        .map(|(a, v)| {
            let mut row: Vec<Complex<R>> = (0..n).map(|k| root_of_unity::<R>(q as i64, a * k as i64)).collect();
            row.push(*v);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).expect("finite"))
            .expect("nonempty");
        if m[piv][col].norm() < R::of(1e-12) {
            return Err(Error::RecognitionFailed("singular embedding matrix".into()));
        }
        m.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = m[i][col] / m[col][col];
                for j in col..=n {
                    let t = m[col][j] * f;
                    m[i][j] = m[i][j] - t;
                }
            }
        }
    }
    let mut coeffs = Vec::with_capacity(n);
    for (k, row) in m.iter().enumerate() {
        let c = row[n] / row[k];
        if c.im.abs() > tol.max(R::of(1e-6)) * (R::one() + c.re.abs()) {
            return Err(Error::RecognitionFailed(format!("coordinate {k} has imaginary part {}", c.im)));
        }
        coeffs.push(round_rational(c.re.to_f64().expect("finite"), tol.to_f64().expect("finite"))?);
    }
    let x = Cyc::from_exponents(q, &coeffs);
    let mut worst = 0.0f64;
    for (a, v) in values {
        let e: Complex<f64> = x.embed(*a);
        let v = Complex::new(v.re.to_f64().unwrap_or(f64::NAN), v.im.to_f64().unwrap_or(f64::NAN));
        worst = worst.max((e - v).norm());
    }
    if !(worst < tol.to_f64().expect("finite")) {
        return Err(Error::RecognitionFailed(format!("round-trip residual {worst:e}")));
    }
    Ok(x)
}

/// Nearest rational with denominator <= MAX_DENOMINATOR, preferring the smallest denominator.
pub fn round_rational(x: f64, tol: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::RecognitionFailed("non-finite coordinate".into()));
    }
    for d in 1..=MAX_DENOMINATOR {
        let n = (x * d as f64).round();
        if (x - n / d as f64).abs() < tol {
            return Ok(BigRational::new(BigInt::from(n as i64), BigInt::from(d)));
        }
    }
    Err(Error::RecognitionFailed(format!("{x} has no small-denominator approximation")))
}
