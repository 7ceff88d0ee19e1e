//! On-disk coefficient tables: one "label.an" file per curve, lines "n,a_n" followed by a
//! checksum line over everything before it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lcongr::{CoefficientTable, Curve, CurveData};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ENV_VAR: &str = "LCONGR_CACHE_DIR";
const CHECKSUM_PREFIX: &str = "#sha256 ";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

fn digest(body: &str) -> String {
    Sha256::digest(body.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode(table: &CoefficientTable) -> String {
    let mut body = String::new();
    for (n, a) in table.values.iter().enumerate().skip(1) {
        body.push_str(&format!("{n},{a}\n"));
    }
    let sum = digest(&body);
    body.push_str(CHECKSUM_PREFIX);
    body.push_str(&sum);
    body.push('\n');
    body
}

pub fn decode(label: &str, text: &str) -> Result<CoefficientTable, CliError> {
    let corrupt = |why: &str| CliError::CorruptCache(format!("{label}: {why}"));
    let body_end = text.rfind(CHECKSUM_PREFIX).ok_or_else(|| corrupt("missing checksum line"))?;
    let (body, tail) = text.split_at(body_end);
    let stored = tail[CHECKSUM_PREFIX.len()..].trim();
    if stored != digest(body) {
        return Err(corrupt("checksum mismatch"));
    }
    let mut values = vec![0i64];
    for (i, line) in body.lines().enumerate() {
        let (n, a) = line.split_once(',').ok_or_else(|| corrupt("malformed line"))?;
        let n: usize = n.parse().map_err(|_| corrupt("bad index"))?;
        let a: i64 = a.parse().map_err(|_| corrupt("bad coefficient"))?;
        if n != i + 1 {
            return Err(corrupt("indices not consecutive"));
        }
        values.push(a);
    }
    Ok(CoefficientTable { label: label.to_string(), values })
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()).map(Cache::new)
    }

    pub fn path(&self, label: &str) -> PathBuf {
        self.dir.join(format!("{label}.an"))
    }

    /// Ok(None) when no file exists; CorruptCache when one exists but fails verification.
    pub fn load(&self, label: &str) -> Result<Option<CoefficientTable>, CliError> {
        let path = self.path(label);
        match fs::read_to_string(&path) {
            Ok(text) => decode(label, &text).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::Io(format!("{}: {e}", path.display()))),
        }
    }

    /// Writes through a temporary file and rename, so readers never see a partial table.
    pub fn store(&self, table: &CoefficientTable) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let path = self.path(&table.label);
        let tmp = tmp_path(&path);
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(encode(table).as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    /// A curve seeded from the cache; a corrupt file is reported on stderr and ignored.
    pub fn curve(&self, data: &CurveData) -> Curve {
        match self.load(&data.label) {
            Ok(Some(t)) => Curve::with_table(data.clone(), t),
            Ok(None) => Curve::new(data.clone()),
            Err(e) => {
                eprintln!("warning: {e}; rebuilding");
                Curve::new(data.clone())
            }
        }
    }

    /// Stores the curve's table if it grew past what is on disk.
    pub fn persist(&self, curve: &Curve) -> Result<(), CliError> {
        let current = curve.coefficients(0);
        let on_disk = self.load(curve.label()).ok().flatten().map_or(0, |t| t.nmax());
        if current.nmax() > on_disk {
            self.store(&current)?;
        }
        Ok(())
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".tmp{}", std::process::id()));
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let data = CurveData::new("11a1", [0, -1, 1, -10, -20], 11);
        let table = data.an_table(500);
        let back = decode("11a1", &encode(&table)).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn truncation_is_detected() {
        let data = CurveData::new("11a1", [0, -1, 1, -10, -20], 11);
        let text = encode(&data.an_table(100));
        let cut = &text[..text.len() / 2];
        assert!(matches!(decode("11a1", cut), Err(CliError::CorruptCache(_))));
        let tampered = text.replacen("2,-2", "2,-3", 1);
        assert!(matches!(decode("11a1", &tampered), Err(CliError::CorruptCache(_))));
    }

    proptest::proptest! {
        #[test]
        fn encode_decode_round_trip(values in proptest::collection::vec(-10_000i64..10_000, 1..200)) {
            let mut v = vec![0];
            v.extend(values);
            let table = CoefficientTable { label: "x".into(), values: v };
            proptest::prop_assert_eq!(decode("x", &encode(&table)).unwrap(), table);
        }
    }
}
