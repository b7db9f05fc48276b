//! On-disk family tables: one CSV per `(q, n)` with a version header.
//!
//! ```text
//! # ffmoments-lcache v1
//! q,n,poly,coeffs,class_num,class_den
//! 3,3,021,1 3 3,7,1
//! ```
//!
//! `poly` holds the non-leading coefficients of `P` as base-`q` digits
//! (highest first), `coeffs` the L-polynomial `a_0 .. a_d`, and the last two
//! columns `h` (odd degree) or `h R` (even degree) as a reduced fraction.
//! Every row is re-verified on load: `P` must be irreducible and the class
//! number must follow from the stored coefficients.

use std::io::Write;
use std::path::{Path, PathBuf};

use ffmoments_core::ffpoly::{Field, MonicPoly, PrimePoly};
use ffmoments_core::lfunction::{ClassNumberRecord, LPolynomial};
use ffmoments_core::moments::{FamilyRecord, FamilyTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const CACHE_HEADER: &str = "# ffmoments-lcache v1";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    q: u64,
    n: usize,
    poly: String,
    coeffs: String,
    class_num: String,
    class_den: String,
}

/// How a table was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
    /// An older or foreign version header was found and replaced.
    Stale,
}

pub fn cache_path(dir: &Path, q: u64, n: usize) -> PathBuf {
    dir.join(format!("lcache-q{q}-n{n}.csv"))
}

/// Writes `table` atomically (temporary file, then rename).
pub fn cache_store(dir: &Path, table: &FamilyTable) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let path = cache_path(dir, table.q, table.n);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    writeln!(tmp, "{CACHE_HEADER}")?;
    {
        let mut writer = csv::Writer::from_writer(&mut tmp);
        for record in &table.records {
            let class = ClassNumberRecord::from_lpoly(&record.lpoly)?.class_number.as_rational();
            let coeffs: Vec<String> = record.lpoly.coeffs().iter().map(i64::to_string).collect();
            writer
                .serialize(Row {
                    q: table.q,
                    n: table.n,
                    poly: record.prime().poly().to_digits(),
                    coeffs: coeffs.join(" "),
                    class_num: class.numer().to_string(),
                    class_den: class.denom().to_string(),
                })
                .map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        writer.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(path)
}

/// Loads the table for `(q, n)`. `Ok(None)` on a miss; a version mismatch is
/// an error that callers may downgrade to a recompute.
pub fn cache_load(dir: &Path, field: &Field, n: usize) -> Result<Option<FamilyTable>, HarnessError> {
    let path = cache_path(dir, field.order() as u64, n);
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let shown = path.display().to_string();
    let corrupt = |reason: String| HarnessError::CacheCorrupt {
        path: shown.clone(),
        reason,
    };
    let (header, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let header = header.trim_end_matches('\r');
    if header != CACHE_HEADER {
        if header.starts_with("# ffmoments-lcache") {
            return Err(HarnessError::CacheVersion {
                path: shown,
                found: header.to_string(),
            });
        }
        return Err(corrupt(format!("missing version header, found '{header}'")));
    }
    let q = field.order();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| corrupt(format!("row {}: {e}", i + 1)))?;
        let record = parse_row(field, n, &row).map_err(|reason| corrupt(format!("row {}: {reason}", i + 1)))?;
        records.push(record);
    }
    let table = FamilyTable {
        q: q as u64,
        n,
        records,
    };
    table.validate().map_err(|e| corrupt(e.to_string()))?;
    if table
        .records
        .windows(2)
        .any(|w| w[0].prime().poly().index(q) >= w[1].prime().poly().index(q))
    {
        return Err(corrupt("rows out of lexicographic order".into()));
    }
    Ok(Some(table))
}

fn parse_row(field: &Field, n: usize, row: &Row) -> Result<FamilyRecord, String> {
    let q = field.order();
    if row.q != q as u64 || row.n != n {
        return Err(format!("row is for q = {}, n = {}", row.q, row.n));
    }
    let poly = MonicPoly::from_digits(q, &row.poly).map_err(|e| e.to_string())?;
    if poly.degree() != n {
        return Err(format!("'{}' has degree {}", row.poly, poly.degree()));
    }
    let prime = PrimePoly::new(field, poly).map_err(|e| e.to_string())?;
    let coeffs = row
        .coeffs
        .split_whitespace()
        .map(|c| c.parse::<i64>().map_err(|e| format!("coefficient '{c}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let lpoly = LPolynomial::from_parts(prime, q, coeffs).map_err(|e| e.to_string())?;
    if lpoly.prime().is_imaginary() && !lpoly.satisfies_functional_equation() {
        return Err("stored L-polynomial fails the functional equation".into());
    }
    let parse = |s: &str| s.parse::<BigInt>().map_err(|e| format!("class number '{s}': {e}"));
    let den = parse(&row.class_den)?;
    if den == BigInt::from(0) {
        return Err("zero denominator".into());
    }
    let stored = BigRational::new(parse(&row.class_num)?, den);
    let check = ClassNumberRecord::from_lpoly(&lpoly).map_err(|e| e.to_string())?;
    if check.class_number.as_rational() != stored {
        return Err(format!("class number {stored} disagrees with the L-polynomial"));
    }
    Ok(FamilyRecord {
        lpoly,
        l_one: check.l_one,
    })
}

/// Cache-aware table access used by every subcommand.
pub struct TableSource {
    pub dir: Option<PathBuf>,
    pub strict: bool,
    pub warnings: Vec<String>,
    pub statuses: Vec<(u64, usize, CacheStatus)>,
}

impl TableSource {
    pub fn new(dir: Option<PathBuf>, strict: bool) -> Self {
        TableSource {
            dir,
            strict,
            warnings: Vec::new(),
            statuses: Vec::new(),
        }
    }

    pub fn table(&mut self, field: &Field, n: usize) -> Result<FamilyTable, HarnessError> {
        let q = field.order() as u64;
        let Some(dir) = self.dir.clone() else {
            self.statuses.push((q, n, CacheStatus::Disabled));
            return Ok(FamilyTable::compute(field, n));
        };
        let status = match cache_load(&dir, field, n) {
            Ok(Some(table)) => {
                self.statuses.push((q, n, CacheStatus::Hit));
                return Ok(table);
            }
            Ok(None) => CacheStatus::Miss,
            Err(e @ HarnessError::CacheVersion { .. }) if !self.strict => {
                self.warnings.push(format!("{e}; recomputing"));
                CacheStatus::Stale
            }
            Err(e) => return Err(e),
        };
        let table = FamilyTable::compute(field, n);
        cache_store(&dir, &table)?;
        self.statuses.push((q, n, status));
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (q, n) in [(3u64, 3usize), (3, 4), (5, 3), (9, 3)] {
            let field = Field::new(q).unwrap();
            let table = FamilyTable::compute(&field, n);
            cache_store(dir.path(), &table).unwrap();
            assert_eq!(cache_load(dir.path(), &field, n).unwrap().unwrap(), table);
        }
    }

    #[test]
    fn worked_row() {
        let dir = tempfile::tempdir().unwrap();
        let field = Field::new(3).unwrap();
        cache_store(dir.path(), &FamilyTable::compute(&field, 3)).unwrap();
        let text = std::fs::read_to_string(cache_path(dir.path(), 3, 3)).unwrap();
        assert!(text.lines().any(|l| l == "3,3,021,1 3 3,7,1"), "{text}");
    }

    #[test]
    fn miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let field = Field::new(3).unwrap();
        let mut source = TableSource::new(Some(dir.path().to_path_buf()), false);
        let cold = source.table(&field, 5).unwrap();
        let warm = source.table(&field, 5).unwrap();
        assert_eq!(cold, warm);
        assert_eq!(cold.len(), 48);
        let statuses: Vec<_> = source.statuses.iter().map(|s| s.2).collect();
        assert_eq!(statuses, [CacheStatus::Miss, CacheStatus::Hit]);
    }

    #[test]
    fn version_mismatch_recomputes_unless_strict() {
        let dir = tempfile::tempdir().unwrap();
        let field = Field::new(3).unwrap();
        std::fs::write(cache_path(dir.path(), 3, 3), "# ffmoments-lcache v0\nq,n\n").unwrap();
        let mut strict = TableSource::new(Some(dir.path().to_path_buf()), true);
        assert!(matches!(
            strict.table(&field, 3),
            Err(HarnessError::CacheVersion { .. })
        ));
        let mut lenient = TableSource::new(Some(dir.path().to_path_buf()), false);
        assert_eq!(lenient.table(&field, 3).unwrap().len(), 8);
        assert_eq!(lenient.warnings.len(), 1);
        assert!(cache_load(dir.path(), &field, 3).unwrap().is_some());
    }

    #[test]
    fn corruption_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let field = Field::new(3).unwrap();
        let path = cache_path(dir.path(), 3, 3);
        cache_store(dir.path(), &FamilyTable::compute(&field, 3)).unwrap();
        let good = std::fs::read_to_string(&path).unwrap();
        let cases = [
            good.replacen("# ffmoments-lcache v1", "garbage", 1),
            good.replacen("1 3 3,7,1", "1 3 3,8,1", 1),
            good.replacen("1 3 3,7,1", "1 3 4,7,1", 1),
            good.replacen("3,3,021", "3,3,000", 1),
            good.lines().take(4).collect::<Vec<_>>().join("\n"),
        ];
        for bad in cases {
            std::fs::write(&path, &bad).unwrap();
            let err = cache_load(dir.path(), &field, 3).unwrap_err();
            assert!(matches!(err, HarnessError::CacheCorrupt { .. }), "{bad}: {err}");
        }
    }
}
