//! Categorical tables: ingestion, imputation, encoding, and splitting.
//!
//! A [`CategoricalTable`] stores category-encoded records column by column.
//! Vocabularies are frozen at ingestion (first-appearance order); categories
//! seen later never extend them — how to treat unseen values is each model's
//! decision. Tables are immutable after construction; every operation returns
//! a new table.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{Prng, SeedableRng};

/// A cell is a category index into the column vocabulary, or missing.
pub type Cell = Option<usize>;

/// Options controlling CSV ingestion.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Name of the label column, removed from the features and stored as labels.
    pub label_column: Option<String>,
    /// Tokens treated as missing values.
    pub missing_tokens: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            label_column: None,
            missing_tokens: vec![String::new(), "NA".to_string()],
        }
    }
}

/// Optional per-row class labels with their own vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelColumn {
    pub name: String,
    pub vocabulary: Vec<String>,
    pub values: Vec<usize>,
}

/// Column-oriented table of category-encoded records.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalTable {
    column_names: Vec<String>,
    vocabularies: Vec<Vec<String>>,
    cells: Vec<Cell>, // row-major, row_count * column_count entries
    labels: Option<LabelColumn>,
    row_count: usize,
}

impl CategoricalTable {
    /// Builds a table from parts, validating every structural invariant.
    pub fn new(
        column_names: Vec<String>,
        vocabularies: Vec<Vec<String>>,
        cells: Vec<Cell>,
        labels: Option<LabelColumn>,
        row_count: usize,
    ) -> Result<Self> {
        let column_count = column_names.len();
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{name}'")));
            }
        }
        if vocabularies.len() != column_count {
            return Err(Error::Schema(format!(
                "{} vocabularies for {} columns",
                vocabularies.len(),
                column_count
            )));
        }
        for (name, vocab) in column_names.iter().zip(&vocabularies) {
            let mut entries = HashSet::new();
            for v in vocab {
                if !entries.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate vocabulary entry '{v}' in column '{name}'"
                    )));
                }
            }
        }
        if cells.len() != row_count * column_count {
            return Err(Error::Schema(format!(
                "{} cells for {} rows x {} columns",
                cells.len(),
                row_count,
                column_count
            )));
        }
        for (i, cell) in cells.iter().enumerate() {
            if let Some(idx) = cell {
                let col = i % column_count.max(1);
                if *idx >= vocabularies[col].len() {
                    return Err(Error::Schema(format!(
                        "cell index {idx} out of range for column '{}'",
                        column_names[col]
                    )));
                }
            }
        }
        if let Some(lab) = &labels {
            if lab.values.len() != row_count {
                return Err(Error::Schema(format!(
                    "{} labels for {} rows",
                    lab.values.len(),
                    row_count
                )));
            }
            let mut entries = HashSet::new();
            for v in &lab.vocabulary {
                if !entries.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate label vocabulary entry '{v}'"
                    )));
                }
            }
            if let Some(bad) = lab.values.iter().find(|v| **v >= lab.vocabulary.len()) {
                return Err(Error::Schema(format!("label index {bad} out of range")));
            }
        }
        Ok(CategoricalTable {
            column_names,
            vocabularies,
            cells,
            labels,
            row_count,
        })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_count(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Index of a column by name.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    /// Vocabulary of one column, in first-appearance order.
    pub fn vocabulary(&self, column: usize) -> &[String] {
        &self.vocabularies[column]
    }

    pub fn vocabularies(&self) -> &[Vec<String>] {
        &self.vocabularies
    }

    pub fn labels(&self) -> Option<&LabelColumn> {
        self.labels.as_ref()
    }

    pub fn cell(&self, row: usize, column: usize) -> Cell {
        self.cells[row * self.column_count() + column]
    }

    /// One row of cells as a slice.
    pub fn row(&self, row: usize) -> &[Cell] {
        let c = self.column_count();
        &self.cells[row * c..(row + 1) * c]
    }

    /// Decodes a category index back to its string.
    pub fn decode(&self, column: usize, index: usize) -> &str {
        &self.vocabularies[column][index]
    }

    /// Encodes a category string against the frozen vocabulary.
    pub fn encode(&self, column: usize, value: &str) -> Option<usize> {
        self.vocabularies[column].iter().position(|v| v == value)
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(|c| c.is_none())
    }

    /// New table keeping only the given feature columns (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Result<CategoricalTable> {
        for &c in columns {
            if c >= self.column_count() {
                return Err(Error::Argument(format!("column index {c} out of range")));
            }
        }
        let names = columns
            .iter()
            .map(|&c| self.column_names[c].clone())
            .collect();
        let vocabs = columns
            .iter()
            .map(|&c| self.vocabularies[c].clone())
            .collect();
        let mut cells = Vec::with_capacity(self.row_count * columns.len());
        for r in 0..self.row_count {
            let row = self.row(r);
            cells.extend(columns.iter().map(|&c| row[c]));
        }
        CategoricalTable::new(names, vocabs, cells, self.labels.clone(), self.row_count)
    }

    /// New table keeping only the given rows (in the given order), sharing
    /// the vocabularies and column order of `self`.
    pub fn take_rows(&self, rows: &[usize]) -> Result<CategoricalTable> {
        for &r in rows {
            if r >= self.row_count {
                return Err(Error::Argument(format!("row index {r} out of range")));
            }
        }
        let mut cells = Vec::with_capacity(rows.len() * self.column_count());
        for &r in rows {
            cells.extend_from_slice(self.row(r));
        }
        let labels = self.labels.as_ref().map(|lab| LabelColumn {
            name: lab.name.clone(),
            vocabulary: lab.vocabulary.clone(),
            values: rows.iter().map(|&r| lab.values[r]).collect(),
        });
        CategoricalTable::new(
            self.column_names.clone(),
            self.vocabularies.clone(),
            cells,
            labels,
            rows.len(),
        )
    }

    /// Replaces the label column.
    pub fn with_labels(&self, labels: LabelColumn) -> Result<CategoricalTable> {
        CategoricalTable::new(
            self.column_names.clone(),
            self.vocabularies.clone(),
            self.cells.clone(),
            Some(labels),
            self.row_count,
        )
    }

    /// Serializes to CSV in the loader's dialect (header row; labels last).
    pub fn to_csv_string(&self, missing_token: &str) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        if let Some(lab) = &self.labels {
            header.push(&lab.name);
        }
        wtr.write_record(&header)?;
        for r in 0..self.row_count {
            let mut record: Vec<&str> = self
                .row(r)
                .iter()
                .enumerate()
                .map(|(c, cell)| match cell {
                    Some(v) => self.decode(c, *v),
                    None => missing_token,
                })
                .collect();
            if let Some(lab) = &self.labels {
                record.push(&lab.vocabulary[lab.values[r]]);
            }
            wtr.write_record(&record)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Writes the table as CSV to a file.
    pub fn write_csv(&self, path: &Path, missing_token: &str) -> Result<()> {
        std::fs::write(path, self.to_csv_string(missing_token)?)?;
        Ok(())
    }
}

/// Loads a CSV file into a [`CategoricalTable`].
///
/// The first line is the header. Vocabularies are built in first-appearance
/// order. Cells matching one of `options.missing_tokens` are marked missing;
/// the label column (if named) is removed from the features.
pub fn load_csv(path: &Path, options: &IngestOptions) -> Result<CategoricalTable> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, options)
}

/// Same as [`load_csv`] but from any reader.
pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    options: &IngestOptions,
) -> Result<CategoricalTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(record) => record?,
        None => return Err(Error::Schema("empty file: no header row".to_string())),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("duplicate header name '{name}'")));
        }
    }

    let label_idx = match &options.label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("label column '{name}' not in header")))?,
        ),
        None => None,
    };

    let column_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let feature_count = column_names.len();
    let mut vocabularies: Vec<Vec<String>> = vec![Vec::new(); feature_count];
    let mut cells: Vec<Cell> = Vec::new();
    let mut label_vocab: Vec<String> = Vec::new();
    let mut label_values: Vec<usize> = Vec::new();
    let mut row_count = 0usize;

    let is_missing = |s: &str| options.missing_tokens.iter().any(|t| t == s);

    for (i, record) in records.enumerate() {
        let record = record?;
        let data_row = i + 1;
        if record.len() != header.len() {
            return Err(Error::Ingest {
                row: data_row,
                message: format!(
                    "ragged row: {} cells under a {}-column header",
                    record.len(),
                    header.len()
                ),
            });
        }
        let mut feature_pos = 0usize;
        for (col, value) in record.iter().enumerate() {
            if Some(col) == label_idx {
                if is_missing(value) {
                    return Err(Error::Ingest {
                        row: data_row,
                        message: "missing value in the label column".to_string(),
                    });
                }
                let idx = match label_vocab.iter().position(|v| v == value) {
                    Some(idx) => idx,
                    None => {
                        label_vocab.push(value.to_string());
                        label_vocab.len() - 1
                    }
                };
                label_values.push(idx);
            } else {
                if is_missing(value) {
                    cells.push(None);
                } else {
                    let vocab = &mut vocabularies[feature_pos];
                    let idx = match vocab.iter().position(|v| v == value) {
                        Some(idx) => idx,
                        None => {
                            vocab.push(value.to_string());
                            vocab.len() - 1
                        }
                    };
                    cells.push(Some(idx));
                }
                feature_pos += 1;
            }
        }
        row_count += 1;
    }

    let labels = label_idx.map(|idx| LabelColumn {
        name: header[idx].clone(),
        vocabulary: label_vocab,
        values: label_values,
    });
    CategoricalTable::new(column_names, vocabularies, cells, labels, row_count)
}

/// Forward-fill imputation.
///
/// Each missing cell takes the value of the nearest preceding non-missing cell
/// in the same column. Leading missing cells take the column mode over the
/// observed values (ties broken by lowest vocabulary index). The result has no
/// missing cells.
pub fn forward_fill(table: &CategoricalTable) -> Result<CategoricalTable> {
    let rows = table.row_count();
    let cols = table.column_count();
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        cells.extend_from_slice(table.row(r));
    }

    for c in 0..cols {
        let mut counts = vec![0usize; table.vocabulary(c).len()];
        let mut observed = 0usize;
        for r in 0..rows {
            if let Some(v) = cells[r * cols + c] {
                counts[v] += 1;
                observed += 1;
            }
        }
        if observed == rows {
            continue; // nothing to fill
        }
        if observed == 0 && rows > 0 {
            return Err(Error::Imputation(table.column_names()[c].clone()));
        }
        let mode = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("non-empty vocabulary for an observed column");
        let mut carry: Option<usize> = None;
        for r in 0..rows {
            let slot = &mut cells[r * cols + c];
            match *slot {
                Some(v) => carry = Some(v),
                None => *slot = Some(carry.unwrap_or(mode)),
            }
        }
    }

    CategoricalTable::new(
        table.column_names().to_vec(),
        table.vocabularies().to_vec(),
        cells,
        table.labels().cloned(),
        rows,
    )
}

/// Re-encodes a table's rows against a model's column schema.
///
/// Columns are matched by name (the table may carry extra columns, in any
/// order); cell strings are looked up in the model vocabularies. Missing
/// cells and categories unseen at fit time come out as `None`.
pub fn reencode_rows(
    table: &CategoricalTable,
    column_names: &[String],
    vocabularies: &[Vec<String>],
) -> Result<Vec<Vec<Cell>>> {
    let source_columns: Vec<usize> = column_names
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("input is missing column '{name}'")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(table.row_count());
    for r in 0..table.row_count() {
        let row: Vec<Cell> = source_columns
            .iter()
            .enumerate()
            .map(|(j, &src)| {
                table.cell(r, src).and_then(|v| {
                    let value = table.decode(src, v);
                    vocabularies[j].iter().position(|x| x == value)
                })
            })
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// Disjoint train/test partition of one source table.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: CategoricalTable,
    pub test: CategoricalTable,
    pub seed: u64,
    pub test_fraction: f64,
    /// Original row ids of the train rows, ascending.
    pub train_indices: Vec<usize>,
    /// Original row ids of the test rows, ascending.
    pub test_indices: Vec<usize>,
}

/// Splits a table into train and test partitions.
///
/// Rows are shuffled by the crate PRNG seeded with `seed`; the test set holds
/// `round(row_count * test_fraction)` rows. With `stratified`, per-class test
/// counts follow proportional targets via largest-remainder apportionment, so
/// each differs from its target by less than one row. Identical inputs produce
/// identical splits.
pub fn train_test_split(
    table: &CategoricalTable,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = table.row_count();
    let test_size = (n as f64 * test_fraction).round() as usize;
    let mut rng = Prng::seed_from_u64(seed);

    let mut test_indices: Vec<usize>;
    if stratified {
        let labels = table
            .labels()
            .ok_or_else(|| Error::Argument("stratified split requires labels".to_string()))?;
        let class_count = labels.vocabulary.len();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); class_count];
        for (r, &c) in labels.values.iter().enumerate() {
            groups[c].push(r);
        }
        // Largest-remainder apportionment of the test size across classes.
        let mut base: Vec<usize> = Vec::with_capacity(class_count);
        let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(class_count);
        for (c, group) in groups.iter().enumerate() {
            let target = group.len() as f64 * test_fraction;
            let floor = target.floor() as usize;
            base.push(floor.min(group.len()));
            remainders.push((target - floor as f64, c));
        }
        let assigned: usize = base.iter().sum();
        let mut extras = test_size.saturating_sub(assigned);
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut take: Vec<usize> = base;
        for &(_, c) in &remainders {
            if extras == 0 {
                break;
            }
            if take[c] < groups[c].len() {
                take[c] += 1;
                extras -= 1;
            }
        }
        test_indices = Vec::with_capacity(test_size);
        for (c, group) in groups.iter().enumerate() {
            let mut shuffled = group.clone();
            shuffled.shuffle(&mut rng);
            test_indices.extend_from_slice(&shuffled[..take[c]]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        test_indices = order[..test_size].to_vec();
    }

    test_indices.sort_unstable();
    let test_set: HashSet<usize> = test_indices.iter().copied().collect();
    let train_indices: Vec<usize> = (0..n).filter(|r| !test_set.contains(r)).collect();

    let train = table.take_rows(&train_indices)?;
    let test = table.take_rows(&test_indices)?;
    Ok(SplitPair {
        train,
        test,
        seed,
        test_fraction,
        train_indices,
        test_indices,
    })
}
