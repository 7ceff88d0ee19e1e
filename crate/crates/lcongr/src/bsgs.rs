//! Baby-step giant-step point counting on y^2 = x^3 + A x + B over F_p, p > 3.
//! Candidate group orders in the Hasse interval are intersected over random points of the curve
//! and of its quadratic twist until one remains.

use std::collections::HashMap;

use crate::arith::{inv_mod, legendre, modpow};

type Pt = Option<(u64, u64)>;

struct Weier {
    a: u64,
    b: u64,
    p: u64,
}

impl Weier {
    fn mul_mod(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.p as u128) as u64
    }

    fn inv(&self, x: u64) -> u64 {
        inv_mod(x as i64, self.p as i64).expect("nonzero residue") as u64
    }

    fn rhs(&self, x: u64) -> u64 {
        let x2 = self.mul_mod(x, x);
        (self.mul_mod(x2, x) + self.mul_mod(self.a, x) + self.b) % self.p
    }

    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        let ((x1, y1), (x2, y2)) = match (u, v) {
            (None, w) | (w, None) => return w,
            (Some(s), Some(t)) => (s, t),
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            let num = (3 * self.mul_mod(x1, x1) + self.a) % p;
            self.mul_mod(num, self.inv(2 * y1 % p))
        } else {
            self.mul_mod((y2 + p - y1) % p, self.inv((x2 + p - x1) % p))
        };
        let x3 = (self.mul_mod(lambda, lambda) + 2 * p - x1 - x2) % p;
        let y3 = (self.mul_mod(lambda, (x1 + p - x3) % p) + p - y1) % p;
        Some((x3, y3))
    }

    fn mul(&self, mut k: u64, u: Pt) -> Pt {
        let mut acc = None;
        let mut base = u;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// The point with least x >= start whose ordinate exists.
    fn point_from(&self, start: u64) -> (Pt, u64) {
        let mut x = start % self.p;
        loop {
            let r = self.rhs(x);
            if r == 0 {
                return (Some((x, 0)), x + 1);
            }
            if legendre(r as i64, self.p) == 1 {
                return (Some((x, sqrt_mod(r, self.p))), x + 1);
            }
            x = (x + 1) % self.p;
        }
    }

    /// Every n in [lo, hi] with n P = O.
    fn multiples_in(&self, pt: Pt, lo: u64, hi: u64) -> Vec<u64> {
        let width = hi - lo;
        let s = ((width + 1) as f64).sqrt().ceil() as u64;
        let mut table: HashMap<u64, u64> = HashMap::new();
        let mut cur = None;
        for j in 1..=2 * s {
            cur = self.add(cur, pt);
            match cur {
                None => return (lo..=hi).filter(|n| n % j == 0).collect(),
                Some((x, _)) if j <= s => {
                    table.entry(x).or_insert(j);
                }
                _ => {}
            }
        }
        // The order exceeds 2s, so each window [c - s, c + s] holds at most one multiple.
        let mut out = Vec::new();
        let step = self.mul(2 * s + 1, pt);
        let mut c = lo + s;
        let mut g = self.mul(c, pt);
        while c <= hi + s {
            let hit = match g {
                None => Some(c),
                Some((x, _)) => table.get(&x).map(|&j| {
                    if self.mul(j, pt) == g {
                        c - j
                    } else {
                        c + j
                    }
                }),
            };
            if let Some(n) = hit {
                if (lo..=hi).contains(&n) {
                    out.push(n);
                }
            }
            g = self.add(g, step);
            c += 2 * s + 1;
        }
        out
    }
}

/// Tonelli-Shanks square root of a quadratic residue r mod an odd prime p.
pub fn sqrt_mod(r: u64, p: u64) -> u64 {
    if p % 4 == 3 {
        return modpow(r, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| legendre(z as i64, p) == -1).expect("nonresidue");
    let mulm = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let mut m = s;
    let mut c = modpow(z, q, p);
    let mut t = modpow(r, q, p);
    let mut x = modpow(r, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulm(tt, tt);
            i += 1;
        }
        let mut b = c;
        for _ in 0..(m - i - 1) {
            b = mulm(b, b);
        }
        m = i;
        c = mulm(b, b);
        t = mulm(t, c);
        x = mulm(x, b);
    }
    x
}

/// #E(F_p) for y^2 = x^3 + a x + b with p > 3 prime and nonzero discriminant mod p.
/// Returns None if the candidate set does not shrink to one order (possible only for tiny p).
pub fn group_order(a: u64, b: u64, p: u64) -> Option<u64> {
    let e = Weier { a: a % p, b: b % p, p };
    let d = (2..p).find(|&z| legendre(z as i64, p) == -1)?;
    let d2 = e.mul_mod(d, d);
    let tw = Weier { a: e.mul_mod(e.a, d2), b: e.mul_mod(e.b, e.mul_mod(d2, d)), p };
    let w = (4.0 * p as f64).sqrt().floor() as u64;
    let (lo, hi) = (p + 1 - w, p + 1 + w);
    let mut cands: Vec<u64> = (lo..=hi).collect();
    let (mut xe, mut xt) = (0u64, 0u64);
    for round in 0..40 {
        let found: Vec<u64> = if round % 2 == 0 {
            let (pt, next) = e.point_from(xe);
            xe = next;
            e.multiples_in(pt, lo, hi)
        } else {
            let (pt, next) = tw.point_from(xt);
            xt = next;
            tw.multiples_in(pt, lo, hi).into_iter().map(|n| 2 * p + 2 - n).collect()
        };
        cands.retain(|n| found.contains(n));
        if cands.len() == 1 {
            return Some(cands[0]);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: u64, b: u64, p: u64) -> u64 {
        let e = Weier { a, b, p };
        1 + (0..p)
            .map(|x| match e.rhs(x) {
                0 => 1,
                r if legendre(r as i64, p) == 1 => 2,
                _ => 0,
            })
            .sum::<u64>()
    }

    #[test]
    fn square_roots() {
        for p in [13u64, 17, 41, 97, 10007] {
            for r in 1..p.min(200) {
                if legendre(r as i64, p) == 1 {
                    let s = sqrt_mod(r, p);
                    assert_eq!(s * s % p, r);
                }
            }
        }
    }

    #[test]
    fn agrees_with_naive_count() {
        for p in [1009u64, 2003, 5003, 10007, 65537] {
            for (a, b) in [(1u64, 1u64), (2, 7), (p - 3, 5), (0, 3), (5, 0)] {
                assert_eq!(group_order(a, b, p), Some(naive(a, b, p)), "p={p} a={a} b={b}");
            }
        }
    }
}
