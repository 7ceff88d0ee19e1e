//! The bundled curve corpus, one JSON object per line.

use std::collections::HashSet;

use crate::arith;
use crate::ec::{Curve, CurveData};
use crate::error::{Error, Result};

pub const BUNDLED_CURVES: &str = include_str!("../data/curves.jsonl");

#[derive(Debug, Clone)]
pub struct Dataset {
    pub curves: Vec<CurveData>,
}

fn invalid(label: &str, field: &str, msg: impl Into<String>) -> Error {
    Error::ValidationError { field: format!("{label}.{field}"), msg: msg.into() }
}

/// Checks one record: nonsingular model, conductor supported on the discriminant, sane invariants.
pub fn validate(d: &CurveData) -> Result<()> {
    let disc = d.discriminant();
    if disc == 0 {
        return Err(invalid(&d.label, "ainvs", "singular model (discriminant 0)"));
    }
    if d.conductor == 0 {
        return Err(invalid(&d.label, "conductor", "must be positive"));
    }
    for p in arith::prime_divisors(d.conductor) {
        if disc % p as i128 != 0 {
            return Err(invalid(&d.label, "conductor", format!("prime {p} does not divide the discriminant {disc}")));
        }
    }
    if let Some(w) = d.root_number {
        if w != 1 && w != -1 {
            return Err(invalid(&d.label, "root_number", format!("{w} is not a sign")));
        }
    }
    if d.c0 == 0 {
        return Err(invalid(&d.label, "c0", "must be positive"));
    }
    Ok(())
}

impl Dataset {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CURVES).expect("bundled corpus is valid")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ParseError { line: 0, msg: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    /// Parses and validates; blank lines and lines starting with '#' are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut curves = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let d: CurveData =
                serde_json::from_str(line).map_err(|e| Error::ParseError { line: i + 1, msg: e.to_string() })?;
            validate(&d)?;
            if !seen.insert(d.label.clone()) {
                return Err(invalid(&d.label, "label", "duplicate label"));
            }
            curves.push(d);
        }
        Ok(Dataset { curves })
    }

    pub fn data(&self, label: &str) -> Result<&CurveData> {
        self.curves
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn curve(&self, label: &str) -> Result<Curve> {
        self.data(label).map(|d| Curve::new(d.clone()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.curves.iter().map(|c| c.label.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_loads() {
        let d = Dataset::bundled();
        assert!(d.curves.len() >= 40);
        assert_eq!(d.data("11a1").unwrap().conductor, 11);
        assert!(matches!(d.curve("9999z9"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn rejects_bad_lines() {
        let singular = r#"{"label": "x", "ainvs": [0, 0, 0, 0, 0], "conductor": 1}"#;
        assert!(matches!(Dataset::parse(singular), Err(Error::ValidationError { .. })));
        let wrong_n = r#"{"label": "11a1", "ainvs": [0, -1, 1, -10, -20], "conductor": 77}"#;
        assert!(matches!(Dataset::parse(wrong_n), Err(Error::ValidationError { .. })));
        let good = r#"{"label": "11a1", "ainvs": [0, -1, 1, -10, -20], "conductor": 11}"#;
        let dup = format!("{good}\n{good}\n");
        assert!(matches!(Dataset::parse(&dup), Err(Error::ValidationError { .. })));
        let broken = format!("{good}\n{{\"label\": 3}}\n");
        assert!(matches!(Dataset::parse(&broken), Err(Error::ParseError { line: 2, .. })));
    }
}
