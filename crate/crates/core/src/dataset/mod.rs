//! Tabular cohorts: loading, validation, preprocessing, and splitting.
//!
//! A [`Dataset`] is immutable after construction; every operation returns a
//! new value, so datasets can be shared freely across threads.

pub mod synthetic;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::MISSING_CATEGORY;
use crate::error::{Error, Result};

pub use synthetic::{generate_synthetic, ManifestFeature, SyntheticManifest, SyntheticSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Column payload; `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    fn filter(&self, keep: &[bool]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(
                v.iter()
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .map(|(x, _)| *x)
                    .collect(),
            ),
            ColumnData::Categorical(v) => ColumnData::Categorical(
                v.iter()
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .map(|(x, _)| x.clone())
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
    Validation,
    Unassigned,
}

/// Column-typed records with a binary target and split tags.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<Column>,
    pub target: Vec<u8>,
    pub patient_id: Option<Vec<String>>,
    pub admit_time: Option<Vec<Option<i64>>>,
    pub split: Vec<SplitTag>,
}

impl Dataset {
    /// Validating constructor. The target must be 0/1 with both classes
    /// present; all columns must share the record count; numeric cells must
    /// be finite.
    pub fn new(
        columns: Vec<Column>,
        target: Vec<u8>,
        patient_id: Option<Vec<String>>,
        admit_time: Option<Vec<Option<i64>>>,
    ) -> Result<Dataset> {
        let n = target.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        for (row, &y) in target.iter().enumerate() {
            if y > 1 {
                return Err(Error::InvalidTarget(y.to_string(), row + 1));
            }
        }
        if !target.contains(&1) || !target.contains(&0) {
            return Err(Error::SingleClassTarget);
        }
        for column in &columns {
            if column.data.len() != n {
                return Err(Error::LengthMismatch {
                    column: column.name.clone(),
                    got: column.data.len(),
                    expected: n,
                });
            }
            if let ColumnData::Numeric(values) = &column.data {
                for (row, value) in values.iter().enumerate() {
                    if let Some(v) = value {
                        if !v.is_finite() {
                            return Err(Error::NonFiniteValue {
                                column: column.name.clone(),
                                row: row + 1,
                            });
                        }
                    }
                }
            }
        }
        if let Some(ids) = &patient_id {
            if ids.len() != n {
                return Err(Error::LengthMismatch {
                    column: "<patient_id>".into(),
                    got: ids.len(),
                    expected: n,
                });
            }
        }
        if let Some(times) = &admit_time {
            if times.len() != n {
                return Err(Error::LengthMismatch {
                    column: "<admit_time>".into(),
                    got: times.len(),
                    expected: n,
                });
            }
        }
        Ok(Dataset {
            columns,
            target,
            patient_id,
            admit_time,
            split: vec![SplitTag::Unassigned; n],
        })
    }

    pub fn n_records(&self) -> usize {
        self.target.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    }

    /// Record indices carrying the given split tag, in record order.
    pub fn split_indices(&self, tag: SplitTag) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == tag)
            .map(|(i, _)| i)
            .collect()
    }

    fn retain_records(&self, keep: &[bool]) -> Dataset {
        let pick = |v: &Vec<SplitTag>| -> Vec<SplitTag> {
            v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect()
        };
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.filter(keep),
                })
                .collect(),
            target: self
                .target
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(y, _)| *y)
                .collect(),
            patient_id: self.patient_id.as_ref().map(|ids| {
                ids.iter()
                    .zip(keep)
                    .filter(|(_, &k)| k)
                    .map(|(x, _)| x.clone())
                    .collect()
            }),
            admit_time: self.admit_time.as_ref().map(|ts| {
                ts.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect()
            }),
            split: pick(&self.split),
        }
    }
}

/// Column-kind declarations for CSV loading.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<(String, ColumnKind)>,
    pub target: String,
    pub patient_id: Option<String>,
    pub admit_time: Option<String>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Load a CSV cohort (RFC 4180, header row required, UTF-8; missing cells
/// are empty or the literal `NA`).
///
/// If the target column holds raw length-of-stay numbers instead of 0/1
/// labels, records become positive exactly when the value exceeds 7.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from_reader(file, schema)
}

pub fn load_csv_from_reader<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    };

    let column_indices: Vec<(usize, &String, ColumnKind)> = schema
        .columns
        .iter()
        .map(|(name, kind)| Ok((index_of(name)?, name, *kind)))
        .collect::<Result<_>>()?;
    let target_idx = index_of(&schema.target)?;
    let patient_idx = schema.patient_id.as_deref().map(index_of).transpose()?;
    let time_idx = schema.admit_time.as_deref().map(index_of).transpose()?;

    let mut builders: Vec<ColumnData> = schema
        .columns
        .iter()
        .map(|(_, kind)| match kind {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
        })
        .collect();
    let mut raw_target: Vec<String> = Vec::new();
    let mut patient_id: Vec<String> = Vec::new();
    let mut admit_time: Vec<Option<i64>> = Vec::new();

    for (row_idx, record) in csv_reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record?;
        for ((col, name, _), builder) in column_indices.iter().zip(&mut builders) {
            let cell = record.get(*col).unwrap_or("").trim();
            match builder {
                ColumnData::Numeric(values) => {
                    if is_missing(cell) {
                        values.push(None);
                    } else {
                        let v: f64 = cell.parse().map_err(|_| Error::NumericParse {
                            row,
                            column: (*name).clone(),
                            value: cell.to_string(),
                        })?;
                        values.push(Some(v));
                    }
                }
                ColumnData::Categorical(values) => {
                    if is_missing(cell) {
                        values.push(None);
                    } else {
                        values.push(Some(cell.to_string()));
                    }
                }
            }
        }
        raw_target.push(record.get(target_idx).unwrap_or("").trim().to_string());
        if let Some(i) = patient_idx {
            patient_id.push(record.get(i).unwrap_or("").trim().to_string());
        }
        if let Some(i) = time_idx {
            let cell = record.get(i).unwrap_or("").trim();
            if is_missing(cell) {
                admit_time.push(None);
            } else {
                let t: i64 = cell.parse().map_err(|_| Error::NumericParse {
                    row,
                    column: schema.admit_time.clone().unwrap(),
                    value: cell.to_string(),
                })?;
                admit_time.push(Some(t));
            }
        }
    }

    let target = parse_target(&raw_target, &schema.target)?;
    let columns = schema
        .columns
        .iter()
        .zip(builders)
        .map(|((name, _), data)| Column {
            name: name.clone(),
            data,
        })
        .collect();
    Dataset::new(
        columns,
        target,
        patient_idx.map(|_| patient_id),
        time_idx.map(|_| admit_time),
    )
}

/// Read only the feature columns of a CSV: the scoring path, where no
/// target column is required.
pub fn load_feature_columns<R: std::io::Read>(
    reader: R,
    columns: &[(String, ColumnKind)],
) -> Result<Vec<Column>> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let indices: Vec<usize> = columns
        .iter()
        .map(|(name, _)| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::ColumnNotFound(name.clone()))
        })
        .collect::<Result<_>>()?;
    let mut builders: Vec<ColumnData> = columns
        .iter()
        .map(|(_, kind)| match kind {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
        })
        .collect();
    for (row_idx, record) in csv_reader.records().enumerate() {
        let record = record?;
        for ((&col, (name, _)), builder) in indices.iter().zip(columns).zip(&mut builders) {
            let cell = record.get(col).unwrap_or("").trim();
            match builder {
                ColumnData::Numeric(values) => {
                    if is_missing(cell) {
                        values.push(None);
                    } else {
                        let v: f64 = cell.parse().map_err(|_| Error::NumericParse {
                            row: row_idx + 1,
                            column: name.clone(),
                            value: cell.to_string(),
                        })?;
                        values.push(Some(v));
                    }
                }
                ColumnData::Categorical(values) => {
                    if is_missing(cell) {
                        values.push(None);
                    } else {
                        values.push(Some(cell.to_string()));
                    }
                }
            }
        }
    }
    Ok(columns
        .iter()
        .zip(builders)
        .map(|((name, _), data)| Column {
            name: name.clone(),
            data,
        })
        .collect())
}

/// 0/1 labels pass through; otherwise values are read as length of stay in
/// days and a record is positive iff the stay exceeds 7 (a stay of exactly
/// 7 is negative).
fn parse_target(raw: &[String], column: &str) -> Result<Vec<u8>> {
    let missing_rows: Vec<usize> = raw
        .iter()
        .enumerate()
        .filter(|(_, cell)| is_missing(cell))
        .map(|(i, _)| i + 1)
        .collect();
    if !missing_rows.is_empty() {
        return Err(Error::MissingTarget { rows: missing_rows });
    }
    let mut numeric = Vec::with_capacity(raw.len());
    for (i, cell) in raw.iter().enumerate() {
        let v: f64 = cell.parse().map_err(|_| Error::NumericParse {
            row: i + 1,
            column: column.to_string(),
            value: cell.clone(),
        })?;
        numeric.push(v);
    }
    let already_binary = numeric.iter().all(|&v| v == 0.0 || v == 1.0);
    Ok(numeric
        .into_iter()
        .map(|v| {
            if already_binary {
                v as u8
            } else {
                u8::from(v > 7.0)
            }
        })
        .collect())
}

/// Outcome of [`handle_missing`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingReport {
    pub excluded_records: usize,
    pub imputed_cells: usize,
}

/// Exclude records with missing numeric cells; replace missing categorical
/// cells by the `"missing outcome"` category. Idempotent.
pub fn handle_missing(ds: &Dataset) -> Result<(Dataset, MissingReport)> {
    let n = ds.n_records();
    let mut keep = vec![true; n];
    for column in &ds.columns {
        if let ColumnData::Numeric(values) = &column.data {
            for (i, v) in values.iter().enumerate() {
                if v.is_none() {
                    keep[i] = false;
                }
            }
        }
    }
    let excluded_records = keep.iter().filter(|&&k| !k).count();
    let mut out = ds.retain_records(&keep);
    let mut imputed_cells = 0usize;
    for column in &mut out.columns {
        if let ColumnData::Categorical(values) = &mut column.data {
            for v in values.iter_mut() {
                if v.is_none() {
                    *v = Some(MISSING_CATEGORY.to_string());
                    imputed_cells += 1;
                }
            }
        }
    }
    for class in [0u8, 1u8] {
        if !out.target.contains(&class) {
            return Err(Error::DegenerateDataset {
                op: "handle_missing",
                class,
            });
        }
    }
    Ok((
        out,
        MissingReport {
            excluded_records,
            imputed_cells,
        },
    ))
}

/// Clamp an age column: values below 1 become 0, values above 90 become 90.
pub fn clip_age(ds: &Dataset, column: &str) -> Result<Dataset> {
    let mut out = ds.clone();
    let target = out
        .columns
        .iter_mut()
        .find(|c| c.name == column)
        .ok_or_else(|| Error::ColumnNotFound(column.to_string()))?;
    match &mut target.data {
        ColumnData::Numeric(values) => {
            for v in values.iter_mut().flatten() {
                if *v < 1.0 {
                    *v = 0.0;
                } else if *v > 90.0 {
                    *v = 90.0;
                }
            }
            Ok(out)
        }
        ColumnData::Categorical(_) => Err(Error::NotNumeric(column.to_string())),
    }
}

/// Requested split proportions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.67,
            test: 0.22,
            validation: 0.11,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitReport {
    pub train: usize,
    pub test: usize,
    pub validation: usize,
}

/// Chronological split: the latest `validation` fraction of records (by
/// admission time, ties resolved by record index) becomes the validation
/// set; the earlier remainder is divided between train and test by a seeded
/// permutation at the train:test ratio, hitting the requested counts exactly.
pub fn temporal_split(
    ds: &Dataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Dataset, SplitReport)> {
    let sum = fractions.train + fractions.test + fractions.validation;
    if (sum - 1.0).abs() > 1e-9
        || fractions.train < 0.0
        || fractions.test < 0.0
        || fractions.validation < 0.0
    {
        return Err(Error::BadFractions(sum));
    }
    let times = ds
        .admit_time
        .as_ref()
        .ok_or_else(|| Error::ColumnNotFound("<admit_time>".into()))?;
    let missing: Vec<usize> = times
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_none())
        .map(|(i, _)| i + 1)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingTimestamps { rows: missing });
    }

    let n = ds.n_records();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (times[i].unwrap(), i));

    let n_train = (fractions.train * n as f64).round() as usize;
    let n_test = ((fractions.test * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let n_val = n - n_train - n_test;

    let mut out = ds.clone();
    for &i in order.iter().skip(n - n_val) {
        out.split[i] = SplitTag::Validation;
    }
    let mut head: Vec<usize> = order[..n - n_val].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    head.shuffle(&mut rng);
    for (pos, &i) in head.iter().enumerate() {
        out.split[i] = if pos < n_train {
            SplitTag::Train
        } else {
            SplitTag::Test
        };
    }
    Ok((
        out,
        SplitReport {
            train: n_train,
            test: n_test,
            validation: n_val,
        },
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub patients_with_duplicates: usize,
    pub moved_to_test: usize,
}

/// For each patient with several training records, keep one (seeded choice)
/// and move the rest to the test set. Validation is untouched. Records with
/// an empty patient id are never grouped.
pub fn dedup_patients(ds: &Dataset, seed: u64) -> Result<(Dataset, DedupReport)> {
    let ids = ds
        .patient_id
        .as_ref()
        .ok_or_else(|| Error::ColumnNotFound("<patient_id>".into()))?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if ds.split[i] == SplitTag::Train && !id.is_empty() {
            groups.entry(id.as_str()).or_default().push(i);
        }
    }
    let mut out = ds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DedupReport::default();
    for (_, indices) in groups {
        if indices.len() < 2 {
            continue;
        }
        report.patients_with_duplicates += 1;
        let keep = indices[rng.random_range(0..indices.len())];
        for i in indices {
            if i != keep {
                out.split[i] = SplitTag::Test;
                report.moved_to_test += 1;
            }
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(values: &[Option<f64>]) -> ColumnData {
        ColumnData::Numeric(values.to_vec())
    }

    fn cat(values: &[Option<&str>]) -> ColumnData {
        ColumnData::Categorical(values.iter().map(|v| v.map(String::from)).collect())
    }

    fn simple_dataset(n: usize) -> Dataset {
        let ages: Vec<Option<f64>> = (0..n).map(|i| Some(20.0 + i as f64)).collect();
        let target: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let times: Vec<Option<i64>> = (0..n).map(|i| Some(i as i64)).collect();
        let ids: Vec<String> = (0..n).map(|i| format!("P{i:04}")).collect();
        Dataset::new(
            vec![Column {
                name: "age".into(),
                data: ColumnData::Numeric(ages),
            }],
            target,
            Some(ids),
            Some(times),
        )
        .unwrap()
    }

    #[test]
    fn load_csv_los_thresholding() {
        let csv = "los,age\n3,40\n7,50\n10,60\n";
        let schema = Schema {
            columns: vec![("age".into(), ColumnKind::Numeric)],
            target: "los".into(),
            patient_id: None,
            admit_time: None,
        };
        let ds = load_csv_from_reader(csv.as_bytes(), &schema).unwrap();
        assert_eq!(ds.target, vec![0, 0, 1]);
    }

    #[test]
    fn load_csv_binary_target_passthrough() {
        let csv = "y,age\n0,40\n1,50\n1,60\n";
        let schema = Schema {
            columns: vec![("age".into(), ColumnKind::Numeric)],
            target: "y".into(),
            patient_id: None,
            admit_time: None,
        };
        let ds = load_csv_from_reader(csv.as_bytes(), &schema).unwrap();
        assert_eq!(ds.target, vec![0, 1, 1]);
    }

    #[test]
    fn load_csv_bad_numeric_cell_names_coordinates() {
        let csv = "y,age\n0,40\n1,oops\n";
        let schema = Schema {
            columns: vec![("age".into(), ColumnKind::Numeric)],
            target: "y".into(),
            patient_id: None,
            admit_time: None,
        };
        match load_csv_from_reader(csv.as_bytes(), &schema) {
            Err(Error::NumericParse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "age");
                assert_eq!(value, "oops");
            }
            other => panic!("expected NumericParse, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_missing_target_lists_rows() {
        let csv = "y,age\n0,40\nNA,50\n,60\n1,70\n";
        let schema = Schema {
            columns: vec![("age".into(), ColumnKind::Numeric)],
            target: "y".into(),
            patient_id: None,
            admit_time: None,
        };
        match load_csv_from_reader(csv.as_bytes(), &schema) {
            Err(Error::MissingTarget { rows }) => assert_eq!(rows, vec![2, 3]),
            other => panic!("expected MissingTarget, got {other:?}"),
        }
    }

    #[test]
    fn handle_missing_clean_dataset_is_identity() {
        let ds = simple_dataset(6);
        let (out, report) = handle_missing(&ds).unwrap();
        assert_eq!(out.n_records(), 6);
        assert_eq!(report, MissingReport::default());
    }

    #[test]
    fn handle_missing_excludes_numeric_rows() {
        let mut ages: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        ages[3] = None;
        ages[7] = None;
        let ds = Dataset::new(
            vec![Column {
                name: "age".into(),
                data: num(&ages),
            }],
            (0..10).map(|i| (i % 2) as u8).collect(),
            None,
            None,
        )
        .unwrap();
        let (out, report) = handle_missing(&ds).unwrap();
        assert_eq!(out.n_records(), 8);
        assert_eq!(report.excluded_records, 2);
        assert_eq!(report.imputed_cells, 0);
    }

    #[test]
    fn handle_missing_imputes_categorical_cells() {
        let mut insurer: Vec<Option<&str>> = vec![Some("a"); 10];
        insurer[1] = None;
        insurer[4] = None;
        insurer[9] = None;
        let ds = Dataset::new(
            vec![Column {
                name: "insurer".into(),
                data: cat(&insurer),
            }],
            (0..10).map(|i| (i % 2) as u8).collect(),
            None,
            None,
        )
        .unwrap();
        let (out, report) = handle_missing(&ds).unwrap();
        assert_eq!(out.n_records(), 10);
        assert_eq!(report.imputed_cells, 3);
        match &out.column("insurer").unwrap().data {
            ColumnData::Categorical(values) => {
                assert_eq!(values[1].as_deref(), Some(MISSING_CATEGORY));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn handle_missing_is_idempotent() {
        let mut ages: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        ages[0] = None;
        let mut insurer: Vec<Option<&str>> = vec![Some("a"); 10];
        insurer[5] = None;
        let ds = Dataset::new(
            vec![
                Column {
                    name: "age".into(),
                    data: num(&ages),
                },
                Column {
                    name: "insurer".into(),
                    data: cat(&insurer),
                },
            ],
            (0..10).map(|i| (i % 2) as u8).collect(),
            None,
            None,
        )
        .unwrap();
        let (once, _) = handle_missing(&ds).unwrap();
        let (twice, report) = handle_missing(&once).unwrap();
        assert_eq!(report, MissingReport::default());
        assert_eq!(once.target, twice.target);
        assert_eq!(once.columns(), twice.columns());
    }

    #[test]
    fn handle_missing_degenerate_error() {
        // removing missing-age rows leaves only class 0
        let ages = vec![Some(1.0), None, Some(2.0), None];
        let ds = Dataset::new(
            vec![Column {
                name: "age".into(),
                data: num(&ages),
            }],
            vec![0, 1, 0, 1],
            None,
            None,
        )
        .unwrap();
        assert!(matches!(
            handle_missing(&ds),
            Err(Error::DegenerateDataset { class: 1, .. })
        ));
    }

    #[test]
    fn clip_age_bounds() {
        let ds = Dataset::new(
            vec![Column {
                name: "age".into(),
                data: num(&[Some(0.5), Some(45.0), Some(95.0)]),
            }],
            vec![0, 1, 0],
            None,
            None,
        )
        .unwrap();
        let out = clip_age(&ds, "age").unwrap();
        match &out.column("age").unwrap().data {
            ColumnData::Numeric(values) => {
                assert_eq!(values, &vec![Some(0.0), Some(45.0), Some(90.0)]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn clip_age_boundary_identity() {
        let ds = Dataset::new(
            vec![Column {
                name: "age".into(),
                data: num(&[Some(1.0), Some(90.0)]),
            }],
            vec![0, 1],
            None,
            None,
        )
        .unwrap();
        let out = clip_age(&ds, "age").unwrap();
        match &out.column("age").unwrap().data {
            ColumnData::Numeric(values) => assert_eq!(values, &vec![Some(1.0), Some(90.0)]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn clip_age_skips_missing_cells() {
        let ds = Dataset::new(
            vec![Column {
                name: "age".into(),
                data: num(&[None, None, None]),
            }],
            vec![0, 1, 0],
            None,
            None,
        )
        .unwrap();
        let out = clip_age(&ds, "age").unwrap();
        match &out.column("age").unwrap().data {
            ColumnData::Numeric(values) => assert_eq!(values, &vec![None, None, None]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn clip_age_wrong_column_errors() {
        let ds = simple_dataset(4);
        assert!(matches!(
            clip_age(&ds, "nope"),
            Err(Error::ColumnNotFound(_))
        ));
    }

    #[test]
    fn temporal_split_hits_exact_sizes() {
        let ds = simple_dataset(100);
        let (out, report) = temporal_split(&ds, SplitFractions::default(), 7).unwrap();
        assert_eq!(report, SplitReport { train: 67, test: 22, validation: 11 });
        assert_eq!(out.split_indices(SplitTag::Train).len(), 67);
        assert_eq!(out.split_indices(SplitTag::Test).len(), 22);
        assert_eq!(out.split_indices(SplitTag::Validation).len(), 11);
        assert!(out.split.iter().all(|&s| s != SplitTag::Unassigned));
    }

    #[test]
    fn temporal_split_validation_is_latest() {
        let ds = simple_dataset(100);
        let (out, _) = temporal_split(&ds, SplitFractions::default(), 7).unwrap();
        let times = out.admit_time.as_ref().unwrap();
        let max_head = out
            .split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != SplitTag::Validation)
            .map(|(i, _)| times[i].unwrap())
            .max()
            .unwrap();
        let min_val = out
            .split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == SplitTag::Validation)
            .map(|(i, _)| times[i].unwrap())
            .min()
            .unwrap();
        assert!(max_head <= min_val);
    }

    #[test]
    fn temporal_split_all_train() {
        let ds = simple_dataset(10);
        let fractions = SplitFractions {
            train: 1.0,
            test: 0.0,
            validation: 0.0,
        };
        let (out, report) = temporal_split(&ds, fractions, 7).unwrap();
        assert_eq!(report.train, 10);
        assert!(out.split.iter().all(|&s| s == SplitTag::Train));
    }

    #[test]
    fn temporal_split_ties_resolve_by_record_index() {
        // all records share one timestamp: the validation block must be the
        // records with the highest indices
        let n = 10;
        let ds = Dataset::new(
            vec![Column {
                name: "x".into(),
                data: ColumnData::Numeric(vec![Some(1.0); n]),
            }],
            (0..n).map(|i| (i % 2) as u8).collect(),
            None,
            Some(vec![Some(5); n]),
        )
        .unwrap();
        let fractions = SplitFractions {
            train: 0.5,
            test: 0.3,
            validation: 0.2,
        };
        let (out, _) = temporal_split(&ds, fractions, 7).unwrap();
        assert_eq!(out.split[8], SplitTag::Validation);
        assert_eq!(out.split[9], SplitTag::Validation);
        assert!(out.split[..8].iter().all(|&s| s != SplitTag::Validation));
    }

    #[test]
    fn temporal_split_missing_timestamps_listed() {
        let mut ds = simple_dataset(5);
        ds.admit_time.as_mut().unwrap()[2] = None;
        ds.admit_time.as_mut().unwrap()[4] = None;
        match temporal_split(&ds, SplitFractions::default(), 7) {
            Err(Error::MissingTimestamps { rows }) => assert_eq!(rows, vec![3, 5]),
            other => panic!("expected MissingTimestamps, got {other:?}"),
        }
    }

    #[test]
    fn temporal_split_bad_fractions() {
        let ds = simple_dataset(5);
        let fractions = SplitFractions {
            train: 0.5,
            test: 0.2,
            validation: 0.2,
        };
        assert!(matches!(
            temporal_split(&ds, fractions, 7),
            Err(Error::BadFractions(_))
        ));
    }

    #[test]
    fn temporal_split_deterministic() {
        let ds = simple_dataset(50);
        let (a, _) = temporal_split(&ds, SplitFractions::default(), 42).unwrap();
        let (b, _) = temporal_split(&ds, SplitFractions::default(), 42).unwrap();
        assert_eq!(a.split, b.split);
    }

    #[test]
    fn dedup_moves_extra_train_records() {
        let mut ds = simple_dataset(6);
        ds.patient_id = Some(vec![
            "P1".into(),
            "P1".into(),
            "P1".into(),
            "P2".into(),
            "P3".into(),
            "P4".into(),
        ]);
        ds.split = vec![SplitTag::Train; 6];
        let (out, report) = dedup_patients(&ds, 3).unwrap();
        assert_eq!(report.patients_with_duplicates, 1);
        assert_eq!(report.moved_to_test, 2);
        let kept: Vec<usize> = (0..3).filter(|&i| out.split[i] == SplitTag::Train).collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(out.split_indices(SplitTag::Test).len(), 2);
    }

    #[test]
    fn dedup_unique_patients_unchanged() {
        let mut ds = simple_dataset(5);
        ds.split = vec![SplitTag::Train; 5];
        let (out, report) = dedup_patients(&ds, 3).unwrap();
        assert_eq!(report, DedupReport::default());
        assert_eq!(out.split, ds.split);
    }

    #[test]
    fn dedup_same_seed_same_assignment() {
        let mut ds = simple_dataset(8);
        ds.patient_id = Some(vec![
            "P1".into(),
            "P1".into(),
            "P1".into(),
            "P1".into(),
            "P2".into(),
            "P2".into(),
            "P3".into(),
            "P3".into(),
        ]);
        ds.split = vec![SplitTag::Train; 8];
        let (a, _) = dedup_patients(&ds, 11).unwrap();
        let (b, _) = dedup_patients(&ds, 11).unwrap();
        assert_eq!(a.split, b.split);
        // no patient appears twice in train afterwards
        let ids = a.patient_id.as_ref().unwrap();
        let mut seen = std::collections::HashSet::new();
        for i in a.split_indices(SplitTag::Train) {
            assert!(seen.insert(ids[i].clone()), "duplicate patient in train");
        }
    }

    #[test]
    fn dedup_leaves_validation_untouched() {
        let mut ds = simple_dataset(4);
        ds.patient_id = Some(vec!["P1".into(), "P1".into(), "P1".into(), "P1".into()]);
        ds.split = vec![
            SplitTag::Train,
            SplitTag::Train,
            SplitTag::Validation,
            SplitTag::Validation,
        ];
        let (out, _) = dedup_patients(&ds, 5).unwrap();
        assert_eq!(out.split[2], SplitTag::Validation);
        assert_eq!(out.split[3], SplitTag::Validation);
    }
}
