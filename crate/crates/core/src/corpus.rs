//! Data model and ingestion: doculects, word lists, distance matrices and
//! geographic coordinates.
//!
//! All values are immutable after load; loading itself is single-threaded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::util::fmt_sig;

/// A documented language variety sampled at one town.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Doculect {
    pub id: String,
    pub dialect_name: String,
    pub town: String,
    /// Degrees; `None` excludes the doculect from homeland analysis.
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub coord_source: String,
}

impl Doculect {
    pub fn geo(&self) -> Option<GeoPoint> {
        match (self.latitude, self.longitude) {
            (Some(lat), Some(lon)) => Some(GeoPoint { lat, lon }),
            _ => None,
        }
    }
}

/// Location in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

/// doculect id -> coordinates.
pub type GeoTable = BTreeMap<String, GeoPoint>;

/// One doculect's Swadesh frame: concept id (1..=200) -> normalized form.
/// Entries may be absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordList {
    pub doculect_id: String,
    pub entries: BTreeMap<u16, String>,
}

pub const SWADESH_CONCEPTS: u16 = 200;

/// Symmetric zero-diagonal matrix of pairwise lexical distances in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>, // row-major n*n
}

const SYMMETRY_TOL: f64 = 1e-12;

impl DistanceMatrix {
    /// Validates symmetry (1e-12), zero diagonal and the [0,1] range.
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        assert_eq!(values.len(), n, "row count must match label count");
        let mut flat = vec![0.0; n * n];
        for (i, row) in values.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                flat[i * n + j] = v;
            }
        }
        let m = DistanceMatrix { labels, values: flat };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::NonzeroDiagonal(i));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(Error::EntryOutOfRange { i, j, value: v });
                }
                let w = self.get(j, i);
                if (v - w).abs() > SYMMETRY_TOL {
                    return Err(Error::Asymmetric { i, j, a: v, b: w });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n()..(i + 1) * self.n()]
    }

    /// Restrict to a subset of labels, in the given order.
    pub fn restrict(&self, keep: &[&str]) -> Result<DistanceMatrix> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        DistanceMatrix::new(keep.iter().map(|s| s.to_string()).collect(), rows)
    }

    /// Reorder rows/columns by a permutation of indices.
    pub fn permuted(&self, perm: &[usize]) -> DistanceMatrix {
        let labels: Vec<String> = perm.iter().map(|&i| self.labels[i].clone()).collect();
        let n = self.n();
        let mut values = vec![0.0; n * n];
        for (a, &i) in perm.iter().enumerate() {
            for (b, &j) in perm.iter().enumerate() {
                values[a * n + b] = self.get(i, j);
            }
        }
        DistanceMatrix { labels, values }
    }

    /// Full-square CSV, unit scale, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push(',');
        out.push_str(&self.labels.join(","));
        out.push('\n');
        for i in 0..self.n() {
            out.push_str(&self.labels[i]);
            for j in 0..self.n() {
                let _ = write!(out, ",{}", fmt_sig(self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

/// Scale of matrix entries on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Unit,
    Permille,
}

/// Canonicalize an orthographic form: NFC, lower-case, trim, drop internal
/// whitespace and punctuation except hyphens.
pub fn normalize_form(raw: &str) -> Result<String> {
    let composed: String = raw.nfc().collect();
    let lowered = composed.to_lowercase();
    let kept: String = lowered
        .chars()
        .filter(|&c| c.is_alphanumeric() || is_combining_mark(c) || c == '-')
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyForm(raw.to_string()));
    }
    Ok(kept)
}

/// Parse a labeled matrix CSV (full square or lower-triangular).
///
/// A `# scale: permille` directive divides entries by 1000; an explicit
/// `scale` argument overrides the directive.
pub fn load_matrix(src: &str, scale: Option<Scale>) -> Result<DistanceMatrix> {
    let mut directive = None;
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, String, Vec<Option<f64>>)> = Vec::new();

    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("scale:") {
                directive = Some(match v.trim() {
                    "permille" => Scale::Permille,
                    "unit" => Scale::Unit,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unknown scale directive {other:?}"),
                        })
                    }
                });
            }
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        if header.is_none() {
            if !cells[0].trim().is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "header must start with an empty cell".into(),
                });
            }
            header = Some(cells[1..].iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        let label = cells[0].trim().to_string();
        if label.is_empty() {
            return Err(Error::Parse { line: line_no, message: "missing row label".into() });
        }
        let mut vals = Vec::new();
        for (k, cell) in cells[1..].iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                vals.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad number {:?} in column {}", cell, k + 2),
                })?;
                vals.push(Some(v));
            }
        }
        rows.push((line_no, label, vals));
    }

    let labels = header.ok_or(Error::Parse { line: 1, message: "missing header row".into() })?;
    let n = labels.len();
    if rows.len() != n {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {n} data rows, found {}", rows.len()),
        });
    }
    let scale = scale.or(directive).unwrap_or(Scale::Unit);
    let div = match scale {
        Scale::Unit => 1.0,
        Scale::Permille => 1000.0,
    };

    let mut full = vec![vec![0.0f64; n]; n];
    let mut given = vec![vec![false; n]; n];
    for (i, (line_no, label, vals)) in rows.iter().enumerate() {
        if label != &labels[i] {
            return Err(Error::Parse {
                line: *line_no,
                message: format!("row label {label:?} does not match column label {:?}", labels[i]),
            });
        }
        if vals.len() > n {
            return Err(Error::Parse { line: *line_no, message: "too many cells".into() });
        }
        for (j, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                full[i][j] = v / div;
                given[i][j] = true;
            }
        }
    }

    // Lower-triangular input: mirror; full input: symmetry is validated below.
    for i in 0..n {
        for j in (i + 1)..n {
            match (given[i][j], given[j][i]) {
                (false, true) => full[i][j] = full[j][i],
                (true, false) => full[j][i] = full[i][j],
                _ => {}
            }
        }
    }
    DistanceMatrix::new(labels, full)
}

pub fn load_matrix_file<P: AsRef<Path>>(path: P, scale: Option<Scale>) -> Result<DistanceMatrix> {
    load_matrix(&std::fs::read_to_string(path)?, scale)
}

/// Convert a cognate-percentage matrix to distances: D = 1 - pct/100.
pub fn matrix_from_cognacy(labels: Vec<String>, percentages: Vec<Vec<f64>>) -> Result<DistanceMatrix> {
    let n = labels.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let p = percentages[i][j];
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::PercentageOutOfRange { i, j, value: p });
            }
            values[i][j] = 1.0 - p / 100.0;
        }
    }
    DistanceMatrix::new(labels, values)
}

/// Parse the word-list TSV (header `concept<TAB>doculect...`).
pub fn load_wordlists(src: &str, first_form: bool) -> Result<Vec<WordList>> {
    let mut lines = src.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols.first() != Some(&"concept") {
        return Err(Error::Parse { line: 1, message: "header must start with 'concept'".into() });
    }
    let ids = &cols[1..];
    for (k, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::Parse { line: 1, message: "empty doculect id".into() });
        }
        if ids[..k].contains(id) {
            return Err(Error::DuplicateDoculect(id.to_string()));
        }
    }
    let mut lists: Vec<WordList> = ids
        .iter()
        .map(|id| WordList { doculect_id: id.to_string(), entries: BTreeMap::new() })
        .collect();

    let mut seen = std::collections::BTreeSet::new();
    for (lineno, line) in lines {
        let line_no = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != ids.len() + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} cells, found {}", ids.len() + 1, cells.len()),
            });
        }
        let concept: u16 = cells[0]
            .trim()
            .parse()
            .map_err(|_| Error::UnknownConcept(cells[0].trim().to_string()))?;
        if concept == 0 || concept > SWADESH_CONCEPTS {
            return Err(Error::UnknownConcept(concept.to_string()));
        }
        if !seen.insert(concept) {
            return Err(Error::DuplicateConcept(concept));
        }
        for (k, cell) in cells[1..].iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            // Multi-form cells use '/' or ',' between variants.
            let form = if cell.contains('/') || cell.contains(',') {
                if !first_form {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "multiple forms {:?} for doculect {:?}; pass --first-form to select the first",
                            cell, ids[k]
                        ),
                    });
                }
                cell.split(['/', ',']).next().unwrap()
            } else {
                cell
            };
            lists[k].entries.insert(concept, normalize_form(form)?);
        }
    }
    Ok(lists)
}

/// Parse the locations CSV: `id,dialect_name,town,lat,lon,source`.
pub fn load_locations(src: &str) -> Result<Vec<Doculect>> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || line_no == 1 {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cells.len() < 6 {
            return Err(Error::Parse { line: line_no, message: "expected 6 columns".into() });
        }
        let id = cells[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty id".into() });
        }
        if out.iter().any(|d: &Doculect| d.id == id) {
            return Err(Error::DuplicateDoculect(id));
        }
        let (latitude, longitude) = if cells[3].is_empty() && cells[4].is_empty() {
            (None, None)
        } else {
            let lat: f64 = cells[3].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad latitude {:?}", cells[3]),
            })?;
            let lon: f64 = cells[4].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad longitude {:?}", cells[4]),
            })?;
            if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 || lon.abs() > 180.0 {
                return Err(Error::CoordinateOutOfRange { id, lat, lon });
            }
            (Some(lat), Some(lon))
        };
        out.push(Doculect {
            id,
            dialect_name: cells[1].to_string(),
            town: cells[2].to_string(),
            latitude,
            longitude,
            coord_source: cells[5..].join(","),
        });
    }
    Ok(out)
}

pub fn geo_table(doculects: &[Doculect]) -> GeoTable {
    doculects
        .iter()
        .filter_map(|d| d.geo().map(|g| (d.id.clone(), g)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_trims_and_casefolds() {
        assert_eq!(normalize_form("Maso ").unwrap(), "maso");
        assert_eq!(normalize_form("fito").unwrap(), "fito");
        assert_eq!(normalize_form("ra no").unwrap(), "rano");
    }

    #[test]
    fn normalize_keeps_hyphens_drops_punct() {
        assert_eq!(normalize_form("aka-ta").unwrap(), "aka-ta");
        assert_eq!(normalize_form("a'ka!").unwrap(), "aka");
    }

    #[test]
    fn normalize_rejects_empty() {
        assert!(matches!(normalize_form("  !? "), Err(Error::EmptyForm(_))));
    }

    #[test]
    fn normalize_idempotent() {
        for raw in ["Maso ", "ra no", "Vo√†y", "aka-ta"] {
            if let Ok(once) = normalize_form(raw) {
                assert_eq!(normalize_form(&once).unwrap(), once);
            }
        }
    }

    #[test]
    fn load_trivial_matrix() {
        let m = load_matrix(",X\nX,0\n", None).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn load_lower_triangular_mirrors() {
        let m = load_matrix(",a,b\na,0,\nb,0.3,0\n", None).unwrap();
        assert_eq!(m.get(0, 1), 0.3);
        assert_eq!(m.get(1, 0), 0.3);
    }

    #[test]
    fn asymmetric_full_matrix_rejected() {
        let r = load_matrix(",a,b\na,0,0.2\nb,0.3,0\n", None);
        assert!(matches!(r, Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn permille_directive() {
        let m = load_matrix("# scale: permille\n,a,b\na,0,\nb,323,0\n", None).unwrap();
        assert_eq!(m.get(1, 0), 0.323);
    }

    #[test]
    fn out_of_range_rejected() {
        let r = load_matrix(",a,b\na,0,1.2\nb,1.2,0\n", None);
        assert!(matches!(r, Err(Error::EntryOutOfRange { .. })));
    }

    #[test]
    fn nonzero_diagonal_rejected() {
        let r = load_matrix(",a,b\na,0.1,0.2\nb,0.2,0\n", None);
        assert!(matches!(r, Err(Error::NonzeroDiagonal(0))));
    }

    #[test]
    fn cognacy_conversion() {
        let m = matrix_from_cognacy(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![100.0, 92.0, 86.0],
                vec![92.0, 100.0, 92.0],
                vec![86.0, 92.0, 100.0],
            ],
        )
        .unwrap();
        assert!((m.get(0, 1) - 0.08).abs() < 1e-12);
        assert!((m.get(0, 2) - 0.14).abs() < 1e-12);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn cognacy_range_checked() {
        let r = matrix_from_cognacy(
            vec!["a".into(), "b".into()],
            vec![vec![100.0, 102.0], vec![102.0, 100.0]],
        );
        assert!(matches!(r, Err(Error::PercentageOutOfRange { .. })));
    }

    #[test]
    fn wordlists_parse() {
        let src = "concept\tx\ty\n1\tmaso\tmaso\n2\tfito\t\n3\trano\tranu\n";
        let lists = load_wordlists(src, false).unwrap();
        assert_eq!(lists.len(), 2);
        assert_eq!(lists[0].entries.len(), 3);
        assert_eq!(lists[1].entries.len(), 2);
        assert!(!lists[1].entries.contains_key(&2));
    }

    #[test]
    fn wordlists_duplicate_doculect() {
        let r = load_wordlists("concept\tx\tx\n1\ta\tb\n", false);
        assert!(matches!(r, Err(Error::DuplicateDoculect(id)) if id == "x"));
    }

    #[test]
    fn wordlists_multi_form() {
        let src = "concept\tx\n1\tmaso/fanenti\n";
        assert!(load_wordlists(src, false).is_err());
        let lists = load_wordlists(src, true).unwrap();
        assert_eq!(lists[0].entries[&1], "maso");
    }

    #[test]
    fn wordlists_unknown_concept() {
        assert!(matches!(
            load_wordlists("concept\tx\n201\ta\n", false),
            Err(Error::UnknownConcept(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let m = load_matrix("# scale: permille\n,a,b,c\na,0,,\nb,323,0,\nc,246,276,0\n", None).unwrap();
        let back = load_matrix(&m.to_csv(), None).unwrap();
        assert_eq!(m, back);
    }
}
