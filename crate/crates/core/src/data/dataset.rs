use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Features (`m x n`) with `±1` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one feature".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        crate::qp::check_labels(&labels)?;
        let bad: Vec<usize> = (0..features.nrows())
            .filter(|&i| features.row(i).iter().any(|v| !v.is_finite()))
            .collect();
        if !bad.is_empty() {
            return Err(Error::MissingValues(bad));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names: None,
        })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        let features = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Self::new(features, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        if names.len() == self.n_features() {
            self.feature_names = Some(names);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    /// Number of `+1` and `-1` labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y > 0.0).count();
        (pos, self.len() - pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (p, n) = self.class_counts();
        p > 0 && n > 0
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::SingleClass(self.labels[0]))
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = self.n_features();
        let features = DMatrix::from_fn(indices.len(), n, |i, j| self.features[(indices[i], j)]);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Dataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }

    /// Replaces the feature matrix (same shape), e.g. after scaling.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Dataset> {
        if features.shape() != self.features.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: features.ncols(),
            });
        }
        Ok(Dataset {
            features,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        })
    }
}

/// Which CSV column holds the labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

/// How raw label values were mapped onto `-1` / `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMapping {
    pub negative: String,
    pub positive: String,
}

impl std::fmt::Display for LabelMapping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> -1, {} -> +1", self.negative, self.positive)
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t == "?" || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        None
    } else {
        t.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t == "?" || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na")
}

/// Loads a comma-separated table. A first row containing any non-numeric
/// cell is treated as a header. Labels must take exactly two distinct
/// values; the numerically (or lexically) smaller one maps to `-1`.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<(Dataset, LabelMapping)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut records: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let header: Option<Vec<String>> = {
        let first = &records[0];
        if first.iter().any(|c| !is_missing(c) && c.parse::<f64>().is_err()) {
            Some(first.iter().map(str::to_string).collect())
        } else {
            None
        }
    };
    let body = if header.is_some() { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = header.as_ref().map_or(body[0].len(), Vec::len);
    if width < 2 {
        return Err(Error::InvalidParameter("CSV needs a label column and at least one feature".into()));
    }
    let label_idx = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => return Err(Error::LabelColumn(i.to_string())),
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::LabelColumn(name.clone()))?,
    };
    let column_name = |j: usize| -> String {
        header
            .as_ref()
            .map_or_else(|| j.to_string(), |h| h[j].clone())
    };

    let mut missing = Vec::new();
    let mut rows = Vec::with_capacity(body.len());
    let mut raw_labels = Vec::with_capacity(body.len());
    let row_offset = if header.is_some() { 2 } else { 1 };
    for (r, rec) in body.iter().enumerate() {
        let line = r + row_offset;
        if rec.len() != width || rec.iter().any(is_missing) {
            missing.push(line);
            continue;
        }
        let mut feats = Vec::with_capacity(width - 1);
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            match parse_cell(cell) {
                Some(v) => feats.push(v),
                None => {
                    return Err(Error::NonNumeric {
                        row: line,
                        column: column_name(j),
                        value: cell.to_string(),
                    })
                }
            }
        }
        rows.push(feats);
    }
    if !missing.is_empty() {
        return Err(Error::MissingValues(missing));
    }

    let mut classes: Vec<String> = raw_labels.clone();
    classes.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    });
    classes.dedup_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    });
    if classes.len() > 2 {
        return Err(Error::InvalidLabels(format!(
            "expected two label classes, found {}: {:?}",
            classes.len(),
            classes
        )));
    }
    let same = |a: &str, b: &str| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    };
    let mapping = if classes.len() == 2 {
        LabelMapping {
            negative: classes[0].clone(),
            positive: classes[1].clone(),
        }
    } else {
        // a single class: keep ±1 values as they are, otherwise call it +1
        let only = classes[0].clone();
        match only.parse::<f64>() {
            Ok(v) if v < 0.0 => LabelMapping {
                negative: only,
                positive: String::new(),
            },
            _ => LabelMapping {
                negative: String::new(),
                positive: only,
            },
        }
    };
    let labels = raw_labels
        .iter()
        .map(|l| if same(l, &mapping.positive) { 1.0 } else { -1.0 })
        .collect();

    let mut ds = Dataset::from_rows(&rows, labels)?;
    if let Some(h) = header {
        let names = h
            .into_iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .map(|(_, s)| s)
            .collect();
        ds = ds.with_feature_names(names);
    }
    Ok((ds, mapping))
}

/// Writes features followed by a `label` column (`-1`/`1`), with a header.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<String> = match dataset.feature_names() {
            Some(names) => names.to_vec(),
            None => (0..dataset.n_features()).map(|j| format!("x{j}")).collect(),
        };
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..dataset.len() {
            let mut rec: Vec<String> = dataset.features().row(i).iter().map(|v| v.to_string()).collect();
            rec.push(format!("{}", dataset.labels()[i] as i32));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)
}

/// Writes to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn zero_one_labels_map_to_signs() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,y\n1,2,0\n3,4,1\n5,6,1\n");
        let (ds, map) = load_csv(&p, &LabelColumn::Name("y".into())).unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0, 1.0]);
        assert_eq!(map.to_string(), "0 -> -1, 1 -> +1");
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.feature_names().unwrap(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn label_by_index_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "2,0.5,7\n1,0.25,8\n");
        let (ds, _) = load_csv(&p, &LabelColumn::Index(0)).unwrap();
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(ds.row(0), vec![0.5, 7.0]);
    }

    #[test]
    fn missing_cell_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,y\n1,2,0\n3,,1\n");
        match load_csv(&p, &LabelColumn::Last) {
            Err(Error::MissingValues(rows)) => assert_eq!(rows, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,y\n");
        let err = load_csv(&p, &LabelColumn::Last).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn non_numeric_and_multiclass_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,y\n1,0\nfoo,1\n");
        assert!(matches!(load_csv(&p, &LabelColumn::Last), Err(Error::NonNumeric { row: 3, .. })));
        let p = write(&dir, "b.csv", "1,0\n2,1\n3,2\n");
        assert!(matches!(load_csv(&p, &LabelColumn::Last), Err(Error::InvalidLabels(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::from_rows(&[vec![0.1, -2.5], vec![3.0, 1e-7]], vec![1.0, -1.0]).unwrap();
        let p = dir.path().join("out.csv");
        write_csv(&ds, &p).unwrap();
        let (back, _) = load_csv(&p, &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/file.csv", &LabelColumn::Last).unwrap_err();
        assert!(err.is_io());
    }
}
