//! Matrix groups over Z/q^m Z: closure, determinant slices, trace-determinant censuses,
//! density profiles, SL(2,q) conjugacy classes and the Galois-image tables.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, rat};
use crate::error::{Error, Result};

/// A 2x2 matrix [[a, b], [c, d]] over Z/nZ.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    pub n: u32,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl Mat2 {
    pub fn new(n: u32, rows: [[i64; 2]; 2]) -> Self {
        let r = |x: i64| arith::rem(x, n as i64) as u32;
        Mat2 { n, a: r(rows[0][0]), b: r(rows[0][1]), c: r(rows[1][0]), d: r(rows[1][1]) }
    }

    pub fn identity(n: u32) -> Self {
        Mat2 { n, a: 1 % n, b: 0, c: 0, d: 1 % n }
    }

    pub fn rows(&self) -> [[u32; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let n = self.n as u64;
        let f = |x: u32, y: u32, z: u32, w: u32| ((x as u64 * y as u64 + z as u64 * w as u64) % n) as u32;
        Mat2 {
            n: self.n,
            a: f(self.a, o.a, self.b, o.c),
            b: f(self.a, o.b, self.b, o.d),
            c: f(self.c, o.a, self.d, o.c),
            d: f(self.c, o.b, self.d, o.d),
        }
    }

    pub fn det(&self) -> u32 {
        let n = self.n as u64;
        ((self.a as u64 * self.d as u64 + n * n - (self.b as u64 * self.c as u64) % n) % n) as u32
    }

    pub fn trace(&self) -> u32 {
        (self.a + self.d) % self.n
    }

    /// 1 + det(M) - tr(M), which is #E(F_p) mod n when M is the Frobenius at p.
    pub fn frob_count(&self) -> u32 {
        (1 + self.det() + self.n - self.trace()) % self.n
    }

    pub fn is_invertible(&self, q: u32) -> bool {
        !self.det().is_multiple_of(q)
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let inv = arith::inv_mod(self.det() as i64, self.n as i64).ok_or(Error::NotInvertible(self.n as u64))?;
        Ok(Mat2::new(self.n, [[self.d as i64 * inv, -(self.b as i64) * inv], [-(self.c as i64) * inv, self.a as i64 * inv]])
            .reduce(self.n))
    }

    pub fn reduce(&self, m: u32) -> Mat2 {
        Mat2 { n: m, a: self.a % m, b: self.b % m, c: self.c % m, d: self.d % m }
    }

    fn key(&self) -> u64 {
        let n = self.n as u64;
        ((self.a as u64 * n + self.b as u64) * n + self.c as u64) * n + self.d as u64
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]] mod {}", self.a, self.b, self.c, self.d, self.n)
    }
}

/// Smallest prime dividing a prime power.
fn base_prime(n: u32) -> u32 {
    arith::prime_divisors(n as u64).first().copied().unwrap_or(1) as u32
}

#[derive(Debug, Clone)]
pub struct SubgroupCensus {
    pub modulus: u32,
    pub generators: Vec<Mat2>,
    pub elements: Vec<Mat2>,
    /// (trace, det) -> count.
    pub census: BTreeMap<(u32, u32), usize>,
}

impl SubgroupCensus {
    fn from_elements(modulus: u32, generators: Vec<Mat2>, elements: Vec<Mat2>) -> Self {
        let mut census = BTreeMap::new();
        for m in &elements {
            *census.entry((m.trace(), m.det())).or_insert(0) += 1;
        }
        SubgroupCensus { modulus, generators, elements, census }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        self.elements.binary_search(m).is_ok()
    }
}

/// Breadth-first closure of the generators; elements are returned sorted.
pub fn generate(generators: &[Mat2], modulus: u32) -> Result<SubgroupCensus> {
    let q = base_prime(modulus);
    for g in generators {
        if g.n != modulus || !g.is_invertible(q) {
            return Err(Error::NotInvertible(modulus as u64));
        }
    }
    let id = Mat2::identity(modulus);
    let mut seen: HashMap<u64, ()> = HashMap::new();
    let mut out = vec![id];
    seen.insert(id.key(), ());
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = x.mul(g);
            if seen.insert(y.key(), ()).is_none() {
                out.push(y);
                queue.push_back(y);
            }
        }
    }
    out.sort();
    Ok(SubgroupCensus::from_elements(modulus, generators.to_vec(), out))
}

/// Elements with det = 1 mod q.
pub fn det1_slice(g: &SubgroupCensus) -> SubgroupCensus {
    let q = base_prime(g.modulus);
    let els = g.elements.iter().filter(|m| m.det() % q == 1 % q).copied().collect();
    SubgroupCensus::from_elements(g.modulus, g.generators.clone(), els)
}

/// Full preimage of g under GL_2(Z/target) -> GL_2(Z/g.modulus).
pub fn lift_to_modulus(g: &SubgroupCensus, target: u32) -> Result<SubgroupCensus> {
    let n = g.modulus;
    if !target.is_multiple_of(n) || base_prime(target) != base_prime(n) {
        return Err(Error::Invalid(format!("cannot lift from {n} to {target}")));
    }
    let k = target / n;
    let mut els = Vec::with_capacity(g.order() * (k as usize).pow(4));
    for m in &g.elements {
        for i in 0..k.pow(4) {
            let (s, t, u, v) = (i % k, (i / k) % k, (i / k / k) % k, i / k / k / k);
            els.push(Mat2 { n: target, a: m.a + s * n, b: m.b + t * n, c: m.c + u * n, d: m.d + v * n });
        }
    }
    els.sort();
    Ok(SubgroupCensus::from_elements(target, g.generators.clone(), els))
}

/// Image of g under reduction to a divisor of its modulus.
pub fn reduce_to_modulus(g: &SubgroupCensus, target: u32) -> SubgroupCensus {
    let mut els: Vec<Mat2> = g.elements.iter().map(|m| m.reduce(target)).collect();
    els.sort();
    els.dedup();
    let gens = g.generators.iter().map(|m| m.reduce(target)).collect();
    SubgroupCensus::from_elements(target, gens, els)
}

/// delta(lambda) for lambda in F_q, exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DensityProfile {
    pub q: u64,
    #[serde(serialize_with = "ser_rationals")]
    pub values: Vec<BigRational>,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

impl DensityProfile {
    pub fn new(q: u64, values: Vec<BigRational>) -> Self {
        DensityProfile { q, values }
    }

    pub fn from_strs(q: u64, xs: &[&str]) -> Result<Self> {
        let values = xs
            .iter()
            .map(|s| s.parse::<BigRational>().map_err(|_| Error::Invalid(format!("bad rational {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityProfile { q, values })
    }

    pub fn point_mass() -> Self {
        DensityProfile { q: 3, values: vec![BigRational::one(), BigRational::zero(), BigRational::zero()] }
    }

    pub fn total(&self) -> BigRational {
        self.values.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn get(&self, lambda: u64) -> &BigRational {
        &self.values[lambda as usize]
    }
}

impl fmt::Display for DensityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// delta(lambda) = #{M in G : 1 + det M - tr M = -lambda u^(-1) q^(m-1) mod q^m} / #G.
/// `unit` is L(E) when m = 1 and q L(E) when m = 2, reduced mod q.
pub fn density_profile(g: &SubgroupCensus, unit: u64, m: u32) -> Result<DensityProfile> {
    let q = base_prime(g.modulus) as u64;
    let qm = q.pow(m);
    if g.modulus as u64 != qm {
        return Err(Error::Invalid(format!("census modulus {} is not {q}^{m}", g.modulus)));
    }
    let inv = arith::inv_mod(unit as i64, q as i64).ok_or_else(|| Error::NotUnit(format!("{unit} mod {q}")))? as u64;
    let scale = qm / q;
    let total = g.order() as i64;
    let mut values = Vec::with_capacity(q as usize);
    for lambda in 0..q {
        let target = (arith::rem(-((lambda * inv) as i64), q as i64) as u64 * scale) % qm;
        let count = g.elements.iter().filter(|x| x.frob_count() as u64 == target).count() as i64;
        values.push(rat(count, total));
    }
    Ok(DensityProfile { q, values })
}

/// Euler's criterion, returning -1, 0 or 1.
fn euler(a: u64, q: u64) -> i32 {
    arith::legendre(a as i64, q)
}

/// The closed form for a surjective mod-q image.
pub fn closed_form_density(q: u64, unit: u64) -> Result<DensityProfile> {
    let inv = arith::inv_mod(unit as i64, q as i64).ok_or_else(|| Error::NotUnit(format!("{unit} mod {q}")))? as u64;
    let qi = q as i64;
    let values = (0..q)
        .map(|lambda| {
            let x = lambda * inv % q;
            match euler(x, q) * euler((x + 4) % q, q) {
                1 => rat(1, qi - 1),
                0 => rat(qi, qi * qi - 1),
                _ => rat(1, qi + 1),
            }
        })
        .collect();
    Ok(DensityProfile { q, values })
}

/// SL_2(Z/qZ) as a census.
pub fn special_linear(q: u32) -> SubgroupCensus {
    let mut els = Vec::new();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    let m = Mat2 { n: q, a, b, c, d };
                    if m.det() == 1 {
                        els.push(m);
                    }
                }
            }
        }
    }
    els.sort();
    SubgroupCensus::from_elements(q, Vec::new(), els)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyClass {
    #[serde(serialize_with = "ser_mat")]
    pub representative: Mat2,
    pub order: u64,
    pub cardinality: usize,
    pub trace: u32,
}

fn ser_mat<S: serde::Serializer>(m: &Mat2, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.rows().serialize(s)
}

fn element_order(m: &Mat2) -> u64 {
    let id = Mat2::identity(m.n);
    let mut x = *m;
    let mut k = 1;
    while x != id {
        x = x.mul(m);
        k += 1;
    }
    k
}

/// Conjugacy classes of SL(2,q) by orbit partition, sorted by trace then size.
pub fn sl2_conjugacy_classes(q: u32) -> Vec<ConjugacyClass> {
    let g = special_linear(q);
    let invs: Vec<Mat2> = g.elements.iter().map(|m| m.inverse().expect("unit determinant")).collect();
    let mut assigned = vec![false; g.order()];
    let index: HashMap<Mat2, usize> = g.elements.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut classes = Vec::new();
    for i in 0..g.order() {
        if assigned[i] {
            continue;
        }
        let x = g.elements[i];
        let mut size = 0;
        for (h, hi) in g.elements.iter().zip(&invs) {
            let y = h.mul(&x).mul(hi);
            let j = index[&y];
            if !assigned[j] {
                assigned[j] = true;
                size += 1;
            }
        }
        classes.push(ConjugacyClass { representative: x, order: element_order(&x), cardinality: size, trace: x.trace() });
    }
    classes.sort_by_key(|c| (c.trace, c.cardinality, c.representative));
    classes
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyCheck {
    pub q: u32,
    pub classes: usize,
    pub central: usize,
    pub unipotent_like: usize,
    pub split: usize,
    pub nonsplit: usize,
    pub holds: bool,
    pub failures: Vec<String>,
}

/// Compares the brute-force classes of SL(2,q) with the trace-grouped class table.
pub fn verify_sl2_table(q: u32) -> ConjugacyCheck {
    let classes = sl2_conjugacy_classes(q);
    let qq = q as usize;
    let mut failures = Vec::new();
    let (mut central, mut unip, mut split, mut nonsplit) = (0, 0, 0, 0);
    for c in &classes {
        let t = c.trace;
        let ok = if t == 2 % q || t == q - 2 {
            let sign_order: u64 = if t == 2 % q { 1 } else { 2 };
            if c.cardinality == 1 {
                central += 1;
                c.order == sign_order
            } else {
                unip += 1;
                c.cardinality == (qq * qq - 1) / 2 && c.order == sign_order * q as u64
            }
        } else {
            let disc = (t as u64 * t as u64 + 4 * q as u64 - 4) % q as u64;
            if euler(disc, q as u64) == 1 {
                split += 1;
                c.cardinality == qq * (qq + 1)
            } else {
                nonsplit += 1;
                c.cardinality == qq * (qq - 1)
            }
        };
        if !ok {
            failures.push(format!("class {:?}: size {}, order {}", c.representative, c.cardinality, c.order));
        }
    }
    let counts_ok = central == 2 && unip == 4 && split == (qq - 3) / 2 && nonsplit == (qq - 1) / 2;
    if !counts_ok {
        failures.push(format!("class counts central {central}, unipotent {unip}, split {split}, nonsplit {nonsplit}"));
    }
    let total: usize = classes.iter().map(|c| c.cardinality).sum();
    if total != (qq - 1) * qq * (qq + 1) {
        failures.push(format!("class equation total {total}"));
    }
    ConjugacyCheck {
        q,
        classes: classes.len(),
        central,
        unipotent_like: unip,
        split,
        nonsplit,
        holds: failures.is_empty(),
        failures,
    }
}

/// The twelve triples allowed for (delta(0), delta(1), delta(2)) at q = 3.
pub fn twelve_triples() -> Vec<DensityProfile> {
    [
        ["1", "0", "0"],
        ["3/8", "3/8", "1/4"],
        ["3/8", "1/4", "3/8"],
        ["1/2", "1/2", "0"],
        ["1/2", "0", "1/2"],
        ["1/8", "3/4", "1/8"],
        ["1/8", "1/8", "3/4"],
        ["1/4", "1/2", "1/4"],
        ["1/4", "1/4", "1/2"],
        ["5/9", "2/9", "2/9"],
        ["1/3", "2/3", "0"],
        ["1/3", "0", "2/3"],
    ]
    .iter()
    .map(|t| DensityProfile::from_strs(3, t).expect("literal rationals"))
    .collect()
}

pub type RawMatrix = [[i64; 2]; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub level: u32,
    #[serde(default)]
    pub mod3_image: Option<String>,
    pub generators: Vec<RawMatrix>,
    #[serde(default)]
    pub expected_elements: Option<Vec<RawMatrix>>,
    #[serde(default)]
    pub expected_elements_note: Option<String>,
    #[serde(default, rename = "expected_M")]
    pub expected_m: Option<RawMatrix>,
    #[serde(rename = "expected_G_size")]
    pub expected_g_size: usize,
    pub expected_delta: Vec<String>,
    pub example_b1: Option<String>,
    pub example_b2: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tables {
    pub table1: Vec<TableRow>,
    pub table2: Vec<TableRow>,
}

pub const BUNDLED_TABLES: &str = include_str!("../data/tables.json");

impl Tables {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLES).expect("bundled table file parses")
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::ParseError { line: e.line(), msg: e.to_string() })
    }

    pub fn find(&self, label: &str) -> Option<(u8, &TableRow)> {
        self.table1
            .iter()
            .find(|r| r.label == label)
            .map(|r| (1, r))
            .or_else(|| self.table2.iter().find(|r| r.label == label).map(|r| (2, r)))
    }
}

impl TableRow {
    pub fn generator_mats(&self) -> Vec<Mat2> {
        self.generators.iter().map(|g| Mat2::new(self.level, *g)).collect()
    }

    /// The image at level 3 (Table 1) or 9 (Table 2), lifted or reduced as needed.
    pub fn image(&self, which: u8) -> Result<SubgroupCensus> {
        let target = if which == 1 { 3 } else { 9 };
        let g = generate(&self.generator_mats(), self.level)?;
        match self.level.cmp(&target) {
            std::cmp::Ordering::Equal => Ok(g),
            std::cmp::Ordering::Less => lift_to_modulus(&g, target),
            std::cmp::Ordering::Greater => Ok(reduce_to_modulus(&g, target)),
        }
    }

    /// The det = 1 mod 3 slice at the level the density computation uses.
    pub fn slice(&self, which: u8) -> Result<SubgroupCensus> {
        self.image(which).map(|g| det1_slice(&g))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowReport {
    pub label: String,
    pub image_order: usize,
    pub slice_order: usize,
    pub expected_slice_order: usize,
    pub delta: String,
    pub expected_delta: String,
    /// Table 2: whether the listed M lies in the image with 1 + det - tr = 3 mod 9,
    /// or for N/A rows whether no element of the image has that property.
    pub m_check: Option<bool>,
    pub elements_match: Option<bool>,
    pub holds: bool,
}

/// Regenerates every row of Table 1 or 2 and compares with the transcribed expectations.
pub fn verify_table(which: u8, tables: &Tables) -> Result<Vec<RowReport>> {
    let rows = match which {
        1 => &tables.table1,
        2 => &tables.table2,
        _ => return Err(Error::Invalid(format!("no table {which}"))),
    };
    rows.iter().map(|r| verify_row(which, r)).collect()
}

fn verify_row(which: u8, row: &TableRow) -> Result<RowReport> {
    let image = row.image(which)?;
    let slice = det1_slice(&image);
    let m = if which == 1 { 1 } else { 2 };
    let delta = density_profile(&slice, 2, m)?;
    let expected = DensityProfile::from_strs(3, &row.expected_delta.iter().map(|s| s.as_str()).collect::<Vec<_>>())?;
    let elements_match = match (&row.expected_elements, row.expected_elements_note.as_deref()) {
        (Some(els), _) => {
            let mut want: Vec<Mat2> = els.iter().map(|e| Mat2::new(3, *e)).collect();
            want.sort();
            Some(want == slice.elements)
        }
        (None, Some("SL(3)")) => Some(slice.elements == special_linear(3).elements),
        _ => None,
    };
    let m_check = if which == 2 {
        let three = |x: &Mat2| x.frob_count() == 3;
        Some(match row.expected_m {
            Some(mm) => {
                let mm = Mat2::new(9, mm);
                three(&mm) && image.contains(&mm)
            }
            None => !image.elements.iter().any(three),
        })
    } else {
        None
    };
    let holds = slice.order() == row.expected_g_size
        && delta == expected
        && m_check.unwrap_or(true)
        && elements_match.unwrap_or(true);
    Ok(RowReport {
        label: row.label.clone(),
        image_order: image.order(),
        slice_order: slice.order(),
        expected_slice_order: row.expected_g_size,
        delta: delta.to_string(),
        expected_delta: expected.to_string(),
        m_check,
        elements_match,
        holds,
    })
}
