//! Sample containers and CSV loading.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Real, Result};

/// Row-major matrix of `n` samples with `dim` coordinates each.
#[derive(Debug, Clone, PartialEq)]
pub struct Points<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Points<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("point dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    /// One-dimensional points from a slice of scalars.
    pub fn from_scalars(xs: &[T]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: rows[bad].len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Column-wise concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(Self {
            dim: self.dim + other.dim,
            data,
        })
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            data,
        }
    }

    /// Adds `shift[c]` to every entry of column `c`.
    pub fn translated(&self, shift: &[T]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(p, &v)| v + shift[p % self.dim])
            .collect();
        Ok(Self {
            dim: self.dim,
            data,
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Squared Euclidean norm of each row.
    pub fn squared_norms(&self) -> Vec<T> {
        self.rows()
            .map(|r| r.iter().fold(T::zero(), |s, &v| s + v * v))
            .collect()
    }

    /// Per-column (min, max).
    pub fn bounding_box(&self) -> Vec<(T, T)> {
        let mut bb = vec![(T::infinity(), T::neg_infinity()); self.dim];
        for r in self.rows() {
            for (b, &v) in bb.iter_mut().zip(r) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bb
    }
}

/// Paired real-vector samples `(X_i, Y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDataset<T> {
    x: Points<T>,
    y: Points<T>,
}

impl<T: Real> ContinuousDataset<T> {
    pub fn new(x: Points<T>, y: Points<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::Invalid(format!(
                "need N >= 2 samples, got {}",
                x.len()
            )));
        }
        Ok(Self { x, y })
    }

    /// Scalar `X` and scalar `Y`.
    pub fn from_pairs(xs: &[T], ys: &[T]) -> Result<Self> {
        Self::new(Points::from_scalars(xs)?, Points::from_scalars(ys)?)
    }

    pub fn x(&self) -> &Points<T> {
        &self.x
    }

    pub fn y(&self) -> &Points<T> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> usize {
        self.x.dim()
    }

    pub fn dy(&self) -> usize {
        self.y.dim()
    }

    pub fn joint(&self) -> Points<T> {
        self.x
            .hstack(&self.y)
            .expect("row counts checked at construction")
    }

    /// Same samples with the roles of `X` and `Y` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.x.select(idx), self.y.select(idx))
    }
}

/// Categorical `X` labels (dense indices) paired with real-vector `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteXDataset<T> {
    labels: Vec<usize>,
    names: Vec<String>,
    y: Points<T>,
}

impl<T: Real> DiscreteXDataset<T> {
    /// `labels[i] < names.len()` for all i; `names` fixes the alphabet.
    pub fn new(labels: Vec<usize>, names: Vec<String>, y: Points<T>) -> Result<Self> {
        if labels.len() != y.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                got: y.len(),
            });
        }
        if labels.len() < 2 {
            return Err(Error::Invalid(format!(
                "need N >= 2 samples, got {}",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= names.len()) {
            return Err(Error::Invalid(format!(
                "label index {bad} outside alphabet of size {}",
                names.len()
            )));
        }
        Ok(Self { labels, names, y })
    }

    /// Labels `0..alphabet` named by their index.
    pub fn from_indices(labels: Vec<usize>, alphabet: usize, y: Points<T>) -> Result<Self> {
        let names = (0..alphabet).map(|l| l.to_string()).collect();
        Self::new(labels, names, y)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_name(&self, l: usize) -> &str {
        &self.names[l]
    }

    pub fn label_names(&self) -> &[String] {
        &self.names
    }

    pub fn y(&self) -> &Points<T> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dy(&self) -> usize {
        self.y.dim()
    }

    /// Alphabet size |X|.
    pub fn alphabet_size(&self) -> usize {
        self.names.len()
    }

    /// Occurrences of each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Sample indices grouped by label.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.names.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.names.clone(),
            self.y.select(idx),
        )
    }
}

/// Which dataset shape a CSV file is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvSchema {
    /// Decide from the header: `xcat` present means discrete X.
    Auto,
    Continuous,
    DiscreteX,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset<T> {
    Continuous(ContinuousDataset<T>),
    DiscreteX(DiscreteXDataset<T>),
}

/// Numeric CSV table with named columns; string cells allowed only in the
/// columns listed as categorical.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub numeric: HashMap<String, Vec<f64>>,
    pub categorical: HashMap<String, Vec<String>>,
    pub rows: usize,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.numeric.get(name).map(Vec::as_slice)
    }

    fn column_index(&self, name: &str) -> usize {
        self.headers.iter().position(|h| h == name).unwrap_or(0)
    }
}

/// Reads a header-first CSV into named columns. Row numbers in errors are
/// 1-based data rows (the header is row 0).
pub fn read_table<R: std::io::Read>(reader: R, categorical: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 0))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 0,
            column: 0,
            msg: "missing header row".into(),
        });
    }
    let mut numeric: HashMap<String, Vec<f64>> = HashMap::new();
    let mut cats: HashMap<String, Vec<String>> = HashMap::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, r + 1))?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                row: r + 1,
                column: rec.len().min(headers.len()),
                msg: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (c, (h, cell)) in headers.iter().zip(rec.iter()).enumerate() {
            if categorical.contains(&h.as_str()) {
                cats.entry(h.clone()).or_default().push(cell.to_owned());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: c,
                msg: format!("non-numeric cell {cell:?} in column {h:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: c,
                    msg: format!("non-finite cell {cell:?} in column {h:?}"),
                });
            }
            numeric.entry(h.clone()).or_default().push(v);
        }
        rows += 1;
    }
    Ok(Table {
        headers,
        numeric,
        categorical: cats,
        rows,
    })
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Parse {
        row,
        column: 0,
        msg: e.to_string(),
    }
}

/// Columns `{prefix}0 .. {prefix}{d-1}`, which must be contiguous from 0.
fn indexed_columns(table: &Table, prefix: &str) -> Vec<String> {
    (0..)
        .map(|j| format!("{prefix}{j}"))
        .take_while(|name| table.headers.contains(name))
        .collect()
}

fn points_from_columns<T: Real>(table: &Table, cols: &[String]) -> Result<Points<T>> {
    let mut data = Vec::with_capacity(table.rows * cols.len());
    for r in 0..table.rows {
        for c in cols {
            let v = table.numeric[c][r];
            data.push(T::from_f64(v).ok_or_else(|| Error::Parse {
                row: r + 1,
                column: table.column_index(c),
                msg: format!("value {v} not representable"),
            })?);
        }
    }
    Points::new(cols.len(), data)
}

/// Parses a dataset CSV: `x0..`, `y0..` for continuous X, or `xcat`, `y0..`
/// for categorical X. A `t` column, if present, is ignored here.
pub fn parse_dataset<T: Real, R: std::io::Read>(
    reader: R,
    schema: CsvSchema,
) -> Result<Dataset<T>> {
    let table = read_table(reader, &["xcat"])?;
    let discrete = match schema {
        CsvSchema::Auto => table.headers.iter().any(|h| h == "xcat"),
        CsvSchema::Continuous => false,
        CsvSchema::DiscreteX => true,
    };
    let missing = |name: &str| Error::Parse {
        row: 0,
        column: table.headers.len(),
        msg: format!("missing column {name:?}"),
    };
    let ycols = indexed_columns(&table, "y");
    if ycols.is_empty() {
        return Err(missing("y0"));
    }
    if table.rows < 2 {
        return Err(Error::Parse {
            row: table.rows,
            column: 0,
            msg: format!("N < 2: found {} data row(s)", table.rows),
        });
    }
    let y = points_from_columns(&table, &ycols)?;
    if discrete {
        let cells = table
            .categorical
            .get("xcat")
            .ok_or_else(|| missing("xcat"))?;
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let labels = cells
            .iter()
            .map(|c| {
                *index.entry(c.as_str()).or_insert_with(|| {
                    names.push(c.clone());
                    names.len() - 1
                })
            })
            .collect();
        Ok(Dataset::DiscreteX(DiscreteXDataset::new(labels, names, y)?))
    } else {
        let xcols = indexed_columns(&table, "x");
        if xcols.is_empty() {
            return Err(missing("x0"));
        }
        let x = points_from_columns(&table, &xcols)?;
        Ok(Dataset::Continuous(ContinuousDataset::new(x, y)?))
    }
}

pub fn load_csv<T: Real>(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path)?;
    parse_dataset(std::io::BufReader::new(file), schema)
}
