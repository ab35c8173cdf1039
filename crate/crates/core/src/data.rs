//! Datasets: parity tables, IDX image/label files and CSV.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{DlgnError, Result};
use crate::matrix::Matrix;

/// Largest supported parity width.
pub const MAX_PARITY_BITS: usize = 20;

/// Real features in `[0, 1]` with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(DlgnError::Dataset(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
            return Err(DlgnError::Dataset(format!(
                "row {i}: label {l} outside 0..{classes}"
            )));
        }
        if let Some(pos) = features
            .as_slice()
            .iter()
            .position(|v| !(0.0..=1.0).contains(v))
        {
            return Err(DlgnError::Dataset(format!(
                "row {}: feature outside [0, 1]",
                pos / features.cols().max(1)
            )));
        }
        Ok(Dataset {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Row `i` goes to the test set iff `i % 5 == 4`.
    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.width() != other.width() {
            return Err(DlgnError::Dataset(format!(
                "cannot concatenate widths {} and {}",
                self.width(),
                other.width()
            )));
        }
        let mut data = self.features.as_slice().to_vec();
        data.extend_from_slice(other.features.as_slice());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(
            Matrix::from_vec(labels.len(), self.width(), data),
            labels,
            self.classes.max(other.classes),
        )
    }

    pub fn split_80_20(&self) -> (Dataset, Dataset) {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..self.len()).partition(|i| i % 5 == 4);
        (self.select(&train), self.select(&test))
    }
}

/// All `2^n` bit rows (row `i` is `i` in binary, most significant bit first),
/// labelled with their parity.
pub fn parity(n: usize) -> Result<Dataset> {
    if n == 0 || n > MAX_PARITY_BITS {
        return Err(DlgnError::Dataset(format!(
            "parity width {n} outside 1..={MAX_PARITY_BITS}"
        )));
    }
    let rows = 1usize << n;
    let mut features = Matrix::zeros(rows, n);
    let mut labels = Vec::with_capacity(rows);
    for i in 0..rows {
        for j in 0..n {
            features.set(i, j, ((i >> (n - 1 - j)) & 1) as f64);
        }
        labels.push((i.count_ones() % 2) as usize);
    }
    Dataset::new(features, labels, 2)
}

fn idx_header(bytes: &[u8], magic: u32, path: &Path) -> Result<Vec<usize>> {
    let err = |m: String| DlgnError::Dataset(format!("{}: {m}", path.display()));
    if bytes.len() < 4 {
        return Err(err("truncated IDX header".into()));
    }
    let found = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
    if found != magic {
        return Err(err(format!("magic {found:#x}, expected {magic:#x}")));
    }
    let ndim = (magic & 0xff) as usize;
    if bytes.len() < 4 + 4 * ndim {
        return Err(err("truncated IDX header".into()));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|d| {
            u32::from_be_bytes(bytes[4 + 4 * d..8 + 4 * d].try_into().expect("4 bytes")) as usize
        })
        .collect();
    let expected = 4 + 4 * ndim + dims.iter().product::<usize>();
    if bytes.len() != expected {
        return Err(err(format!(
            "payload has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    Ok(dims)
}

/// Unsigned-byte IDX images (magic `0x803`) scaled by `1/255`, one row per image.
pub fn read_idx_images(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path)?;
    let dims = idx_header(&bytes, 0x0803, path)?;
    let width = dims[1] * dims[2];
    let offset = 16;
    let data = bytes[offset..]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    Ok(Matrix::from_vec(dims[0], width, data))
}

/// Unsigned-byte IDX labels (magic `0x801`).
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fs::read(path)?;
    idx_header(&bytes, 0x0801, path)?;
    Ok(bytes[8..].iter().map(|&b| usize::from(b)).collect())
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let x = read_idx_images(images)?;
    let y = read_idx_labels(labels)?;
    if x.rows() != y.len() {
        return Err(DlgnError::Dataset(format!(
            "{} images but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let classes = y.iter().max().map_or(1, |m| m + 1);
    Dataset::new(x, y, classes)
}

/// Header row, feature columns in `[0, 1]`, integer label in the last column.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DlgnError::Dataset(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let record = record.map_err(|e| DlgnError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(DlgnError::Parse {
                line,
                message: "need at least one feature and a label".into(),
            });
        }
        let w = record.len() - 1;
        if *width.get_or_insert(w) != w {
            return Err(DlgnError::Parse {
                line,
                message: format!("row has {w} features, expected {}", width.unwrap_or(w)),
            });
        }
        for field in record.iter().take(w) {
            let v: f64 = field.parse().map_err(|_| DlgnError::Parse {
                line,
                message: format!("non-numeric feature `{field}`"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(DlgnError::Parse {
                    line,
                    message: format!("feature {v} outside [0, 1]"),
                });
            }
            data.push(v);
        }
        let label = &record[w];
        labels.push(label.parse::<usize>().map_err(|_| DlgnError::Parse {
            line,
            message: format!("non-numeric label `{label}`"),
        })?);
    }
    let width = width.ok_or_else(|| DlgnError::Dataset(format!("{}: no rows", path.display())))?;
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(Matrix::from_vec(labels.len(), width, data), labels, classes)
}

/// Dataset selector as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSpec {
    Parity(usize),
    /// Training files and optional separate test files.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        test: Option<(PathBuf, PathBuf)>,
    },
    Csv(PathBuf),
}

impl FromStr for DatasetSpec {
    type Err = DlgnError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || DlgnError::Config(format!("unrecognized dataset `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "parity" => Ok(DatasetSpec::Parity(rest.parse().map_err(|_| bad())?)),
            "csv" if !rest.is_empty() => Ok(DatasetSpec::Csv(rest.into())),
            "idx" => {
                let parts: Vec<&str> = rest.split(',').collect();
                match parts.as_slice() {
                    [i, l] => Ok(DatasetSpec::Idx {
                        images: i.into(),
                        labels: l.into(),
                        test: None,
                    }),
                    [i, l, ti, tl] => Ok(DatasetSpec::Idx {
                        images: i.into(),
                        labels: l.into(),
                        test: Some((ti.into(), tl.into())),
                    }),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Parity(n) => write!(f, "parity:{n}"),
            DatasetSpec::Csv(p) => write!(f, "csv:{}", p.display()),
            DatasetSpec::Idx {
                images,
                labels,
                test,
            } => {
                write!(f, "idx:{},{}", images.display(), labels.display())?;
                if let Some((ti, tl)) = test {
                    write!(f, ",{},{}", ti.display(), tl.display())?;
                }
                Ok(())
            }
        }
    }
}

/// Loads a dataset as `(train, test)`. Without separate test files the rows
/// are split 80/20.
pub fn ingest(spec: &DatasetSpec) -> Result<(Dataset, Dataset)> {
    match spec {
        DatasetSpec::Parity(n) => Ok(parity(*n)?.split_80_20()),
        DatasetSpec::Csv(path) => Ok(load_csv(path)?.split_80_20()),
        DatasetSpec::Idx {
            images,
            labels,
            test: None,
        } => Ok(load_idx(images, labels)?.split_80_20()),
        DatasetSpec::Idx {
            images,
            labels,
            test: Some((ti, tl)),
        } => {
            let mut train = load_idx(images, labels)?;
            let mut test = load_idx(ti, tl)?;
            let classes = train.classes.max(test.classes);
            train.classes = classes;
            test.classes = classes;
            if train.width() != test.width() {
                return Err(DlgnError::Dataset("train and test widths differ".into()));
            }
            Ok((train, test))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parity_table() {
        let d = parity(4).unwrap();
        assert_eq!((d.len(), d.classes, d.width()), (16, 2, 4));
        for i in 0..16 {
            let xor = d
                .features
                .row(i)
                .iter()
                .fold(0, |acc, &b| acc ^ (b as usize));
            assert_eq!(d.labels[i], xor);
        }
        assert!(parity(21).is_err());
        let (train, test) = d.split_80_20();
        assert_eq!((train.len(), test.len()), (13, 3));
    }

    fn write_idx(dir: &Path, n: usize, rows: usize, cols: usize) -> (PathBuf, PathBuf) {
        let img = dir.join("img.idx");
        let lbl = dir.join("lbl.idx");
        let mut f = fs::File::create(&img).unwrap();
        f.write_all(&0x0803u32.to_be_bytes()).unwrap();
        for d in [n, rows, cols] {
            f.write_all(&(d as u32).to_be_bytes()).unwrap();
        }
        let pixels: Vec<u8> = (0..n * rows * cols).map(|i| (i % 256) as u8).collect();
        f.write_all(&pixels).unwrap();
        let mut f = fs::File::create(&lbl).unwrap();
        f.write_all(&0x0801u32.to_be_bytes()).unwrap();
        f.write_all(&(n as u32).to_be_bytes()).unwrap();
        f.write_all(&(0..n).map(|i| (i % 10) as u8).collect::<Vec<_>>())
            .unwrap();
        (img, lbl)
    }

    #[test]
    fn idx_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = write_idx(dir.path(), 10_000, 28, 28);
        let d = load_idx(&img, &lbl).unwrap();
        assert_eq!((d.len(), d.width(), d.classes), (10_000, 784, 10));
        assert!(d
            .features
            .as_slice()
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(d.features.get(0, 255), 1.0);
        // labels file passed as images
        assert!(matches!(load_idx(&lbl, &lbl), Err(DlgnError::Dataset(_))));
    }

    #[test]
    fn idx_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lbl) = write_idx(dir.path(), 5, 2, 2);
        let bytes = fs::read(&img).unwrap();
        fs::write(&img, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_idx(&img, &lbl).is_err());
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,b,label\n0.1,0.9,1\n0.5,0.0,0\n").unwrap();
        let d = load_csv(&p).unwrap();
        assert_eq!((d.len(), d.width(), d.classes), (2, 2, 2));
        fs::write(&p, "a,b,label\n0.1,0.9,1\n0.5,0.0,x\n").unwrap();
        match load_csv(&p) {
            Err(DlgnError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("label"));
            }
            other => panic!("{other:?}"),
        }
        fs::write(&p, "a,label\n1.5,0\n").unwrap();
        assert!(load_csv(&p).is_err());
    }

    #[test]
    fn spec_parsing() {
        for s in ["parity:4", "csv:/tmp/x.csv", "idx:a,b", "idx:a,b,c,d"] {
            assert_eq!(s.parse::<DatasetSpec>().unwrap().to_string(), s);
        }
        assert!("mnist".parse::<DatasetSpec>().is_err());
        assert!("idx:a".parse::<DatasetSpec>().is_err());
    }
}
