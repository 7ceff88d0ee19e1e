use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bad reduction at p = {0}")]
    BadReduction(u64),
    #[error("prime {0} outside the supported range")]
    Overflow(u64),
    #[error("prime {0} divides 3 times the discriminant")]
    BadPrime(u64),
    #[error("no character of order {q} and conductor {p}")]
    NoSuchCharacter { p: u64, q: u64 },
    #[error("cyclotomic orders differ: {0} vs {1}")]
    OrderMismatch(u64, u64),
    #[error("denominator divisible by {0}")]
    NotLambdaIntegral(u64),
    #[error("value is not fixed by complex conjugation")]
    NotReal,
    #[error("recognition failed: {0}")]
    RecognitionFailed(String),
    #[error("root number inconclusive: {0}")]
    Inconclusive(String),
    #[error("root number is -1, so L(E,1) vanishes")]
    RankPositive,
    #[error("character conductor {c} shares a factor with N = {n}")]
    ConductorClash { c: u64, n: u64 },
    #[error("cusp denominator {m} is not coprime to N = {n}")]
    BadCusp { m: u64, n: u64 },
    #[error("series needs {0} terms, beyond the desk-scale cap")]
    SlowConvergence(usize),
    #[error("modular symbol not integral (residual {0:e})")]
    NotIntegral(f64),
    #[error("matrix not invertible modulo {0}")]
    NotInvertible(u64),
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("valuation bound violated: {0}")]
    BoundViolated(String),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("no Galois image data for {0}")]
    MissingImageData(String),
    #[error("3 divides gcd = {0}")]
    GcdDivisible(u64),
    #[error("every sampled twisted L-value vanished")]
    AllZero,
    #[error("parse error on line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("invalid field {field}: {msg}")]
    ValidationError { field: String, msg: String },
    #[error("label not in dataset: {0}")]
    UnknownLabel(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
