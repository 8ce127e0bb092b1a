//! Dataset ingestion and the classification-to-bandit transform.
//!
//! A labelled row `x` with `K` classes becomes one bandit round with `K` arm
//! contexts: `x` is scaled to unit norm and placed in block `k` of an
//! otherwise-zero vector for arm `k`. Optionally each arm context `c` is then
//! mapped to `[c/√2; c/√2]`, so a block-initialised network outputs exactly
//! zero at initialisation. Every arm context is unit-norm. Arm `k` pays 1 when
//! `k` is the row's label and 0 otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub provenance: String,
    /// Rows dropped at ingestion because of missing values.
    pub dropped_rows: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let dim = features[0].len();
        if let Some(bad) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::OutOfRange(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            class_names: (0..num_classes).map(|k| k.to_string()).collect(),
            provenance: "in-memory".into(),
            dropped_rows: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn raw_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

// ---------------------------------------------------------------------------
// CSV

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Ignore,
}

/// A column named either by 0-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.trim().to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, path: &Path) -> Result<usize> {
        match self {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::format(path, format!("unknown column {name:?}"))),
        }
    }
}

/// Column typing for [`ingest_csv`].
///
/// The text form is one `key = value` per line, `#` starts a comment:
///
/// ```text
/// label = 0              # index or header name
/// header = false
/// delimiter = ,
/// default = categorical  # type of columns not listed below
/// numeric = 3, 4
/// ignore = 7
/// missing = ?, NA        # tokens treated as missing (empty always is)
/// labels = e, p          # optional: declared class values, in order
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: ColumnRef,
    pub header: bool,
    pub delimiter: u8,
    pub default_kind: ColumnKind,
    pub overrides: Vec<(ColumnRef, ColumnKind)>,
    pub missing: Vec<String>,
    pub labels: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label: ColumnRef::Index(0),
            header: false,
            delimiter: b',',
            default_kind: ColumnKind::Numeric,
            overrides: Vec::new(),
            missing: vec!["?".into(), "NA".into()],
            labels: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_kind(v: &str) -> Result<ColumnKind> {
    match v.to_ascii_lowercase().as_str() {
        "numeric" | "num" => Ok(ColumnKind::Numeric),
        "categorical" | "cat" => Ok(ColumnKind::Categorical),
        "ignore" => Ok(ColumnKind::Ignore),
        _ => Err(Error::InvalidConfig(format!("unknown column type {v:?}"))),
    }
}

impl CsvSchema {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let mut schema = CsvSchema::default();
        for (key, value) in &kv {
            match key.as_str() {
                "label" => schema.label = ColumnRef::parse(value),
                "header" => schema.header = parse_bool(key, value)?,
                "delimiter" => {
                    let d = match value.as_str() {
                        "tab" | "\\t" => b'\t',
                        "space" => b' ',
                        v if v.len() == 1 => v.as_bytes()[0],
                        v => {
                            return Err(Error::InvalidConfig(format!("bad delimiter {v:?}")));
                        }
                    };
                    schema.delimiter = d;
                }
                "default" => schema.default_kind = parse_kind(value)?,
                "numeric" | "categorical" | "ignore" => {
                    let kind = parse_kind(key)?;
                    for c in split_list(value) {
                        schema.overrides.push((ColumnRef::parse(&c), kind));
                    }
                }
                "missing" => schema.missing = split_list(value),
                "labels" => schema.labels = Some(split_list(value)),
                other => {
                    return Err(Error::InvalidConfig(format!("unknown schema key {other:?}")));
                }
            }
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Schema for the UCI `agaricus-lepiota.data` file: class in column 0,
    /// 22 categorical attributes, `?` kept as its own level.
    pub fn uci_mushroom() -> Self {
        Self {
            label: ColumnRef::Index(0),
            header: false,
            delimiter: b',',
            default_kind: ColumnKind::Categorical,
            overrides: Vec::new(),
            missing: Vec::new(),
            labels: Some(vec!["e".into(), "p".into()]),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads a delimited file into a dataset. Categorical columns are one-hot
/// encoded over their sorted levels; rows with a missing value in any used
/// column are dropped and counted. Row order follows the file.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<LabeledDataset> {
    let bytes = read_bytes(path)?;
    ingest_csv_bytes(&bytes, path, schema)
}

fn ingest_csv_bytes(bytes: &[u8], path: &Path, schema: &CsvSchema) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let header: Option<Vec<String>> = if schema.header {
        Some(reader.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(csv::StringRecord::len))
        .ok_or_else(|| Error::format(path, "file has no rows"))?;

    let label_col = schema.label.resolve(header.as_deref(), path)?;
    if label_col >= width {
        return Err(Error::format(path, format!("label column {label_col} out of range")));
    }
    let mut kinds = vec![schema.default_kind; width];
    for (col, kind) in &schema.overrides {
        let idx = col.resolve(header.as_deref(), path)?;
        if idx >= width {
            return Err(Error::format(path, format!("column {idx} out of range")));
        }
        kinds[idx] = *kind;
    }
    kinds[label_col] = ColumnKind::Ignore;

    let is_missing = |v: &str| v.is_empty() || schema.missing.iter().any(|m| m == v);

    // Keep rows whose label and used columns are all present.
    let mut kept: Vec<&csv::StringRecord> = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for rec in &records {
        if rec.len() != width {
            return Err(Error::format(path, format!("row has {} fields, expected {width}", rec.len())));
        }
        let missing = is_missing(&rec[label_col])
            || (0..width).any(|c| kinds[c] != ColumnKind::Ignore && is_missing(&rec[c]));
        if missing {
            dropped += 1;
        } else {
            kept.push(rec);
        }
    }
    if kept.is_empty() {
        return Err(Error::format(path, "no usable rows"));
    }

    let class_names: Vec<String> = match &schema.labels {
        Some(declared) => declared.clone(),
        None => {
            let set: BTreeSet<&str> = kept.iter().map(|r| &r[label_col]).collect();
            let mut names: Vec<String> = set.into_iter().map(str::to_string).collect();
            if names.iter().all(|n| n.parse::<f64>().is_ok()) {
                names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
            }
            names
        }
    };
    let class_index: BTreeMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let levels: Vec<Vec<String>> = (0..width)
        .map(|c| {
            if kinds[c] == ColumnKind::Categorical {
                let set: BTreeSet<&str> = kept.iter().map(|r| &r[c]).collect();
                set.into_iter().map(str::to_string).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    let mut features = Vec::with_capacity(kept.len());
    let mut labels = Vec::with_capacity(kept.len());
    for (row, rec) in kept.iter().enumerate() {
        let label = *class_index
            .get(&rec[label_col])
            .ok_or_else(|| Error::format(path, format!("row {row}: unknown label {:?}", &rec[label_col])))?;
        let mut x = Vec::new();
        for c in 0..width {
            match kinds[c] {
                ColumnKind::Ignore => {}
                ColumnKind::Numeric => {
                    let v: f64 = rec[c].parse().map_err(|_| {
                        Error::format(path, format!("row {row}, column {c}: not a number: {:?}", &rec[c]))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::format(path, format!("row {row}, column {c}: non-finite value")));
                    }
                    x.push(v);
                }
                ColumnKind::Categorical => {
                    let lv = &levels[c];
                    let pos = lv.iter().position(|l| l == &rec[c]).expect("level collected above");
                    x.extend((0..lv.len()).map(|i| if i == pos { 1.0 } else { 0.0 }));
                }
            }
        }
        features.push(x);
        labels.push(label);
    }

    Ok(LabeledDataset {
        features,
        labels,
        num_classes: class_names.len(),
        class_names,
        provenance: format!("csv:{}", path.display()),
        dropped_rows: dropped,
    })
}

// ---------------------------------------------------------------------------
// IDX

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = read_bytes(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(path, "truncated IDX header"))
}

/// Reads an IDX image file and its label file (either may be gzip-compressed).
/// Pixels are scaled to `[0, 1]`.
pub fn ingest_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let images = read_maybe_gz(images_path)?;
    let labels = read_maybe_gz(labels_path)?;

    let magic = be_u32(&images, 0, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(images_path, format!("bad image magic {magic:#010x}")));
    }
    let n = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    let dim = rows * cols;
    let pixels = &images[16..];
    if pixels.len() < n * dim {
        return Err(Error::format(images_path, "truncated image data"));
    }

    let magic = be_u32(&labels, 0, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(labels_path, format!("bad label magic {magic:#010x}")));
    }
    let n_labels = be_u32(&labels, 4, labels_path)? as usize;
    if n_labels != n {
        return Err(Error::format(labels_path, format!("{n_labels} labels for {n} images")));
    }
    let label_bytes = labels
        .get(8..8 + n)
        .ok_or_else(|| Error::format(labels_path, "truncated label data"))?;
    if n == 0 {
        return Err(Error::format(images_path, "no images"));
    }

    let features = pixels[..n * dim]
        .chunks_exact(dim)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    let labels: Vec<usize> = label_bytes.iter().map(|&l| l as usize).collect();
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    Ok(LabeledDataset {
        features,
        labels,
        num_classes,
        class_names: (0..num_classes).map(|k| k.to_string()).collect(),
        provenance: format!("idx:{}", images_path.display()),
        dropped_rows: 0,
    })
}

// ---------------------------------------------------------------------------
// Transforms

/// `x/‖x‖`. A zero vector maps to `e₁`; the flag reports that substitution.
pub fn normalize_unit(x: &[f64]) -> (Vec<f64>, bool) {
    let n = linalg::norm(x);
    if n > 0.0 && n.is_finite() {
        (x.iter().map(|v| v / n).collect(), false)
    } else {
        let mut e1 = vec![0.0; x.len().max(1)];
        e1[0] = 1.0;
        (e1, true)
    }
}

/// `[x/√2; x/√2]` for unit `x`.
pub fn duplicate_half(x: &[f64]) -> Result<Vec<f64>> {
    let norm = linalg::norm(x);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitNorm { index: 0, norm });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(x.iter().chain(x).map(|v| v * s).collect())
}

/// One block-sparse context per arm: arm `k` carries `x` in block `k`.
pub fn disjoint_encode(x: &[f64], arms: usize) -> Result<Vec<Vec<f64>>> {
    if arms < 2 {
        return Err(Error::InvalidConfig(format!("disjoint encoding needs at least 2 arms, got {arms}")));
    }
    let d = x.len();
    Ok((0..arms)
        .map(|k| {
            let mut v = vec![0.0; arms * d];
            v[k * d..(k + 1) * d].copy_from_slice(x);
            v
        })
        .collect())
}

/// Fisher–Yates shuffle of the rows on the ChaCha8 data stream for `seed`.
pub fn shuffle(dataset: &LabeledDataset, seed: u64) -> LabeledDataset {
    use rand::Rng;
    let mut rng = stream_rng(seed, Stream::Data, 0);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    LabeledDataset {
        features: order.iter().map(|&i| dataset.features[i].clone()).collect(),
        labels: order.iter().map(|&i| dataset.labels[i]).collect(),
        ..dataset.clone()
    }
}

/// One bandit round: a context per arm, the realised reward of each arm, and
/// each arm's expected reward (used for regret).
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRound {
    pub contexts: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub expected: Vec<f64>,
    /// The correct class, for classification rounds.
    pub label: Option<usize>,
}

impl BanditRound {
    pub fn arms(&self) -> usize {
        self.contexts.len()
    }

    pub fn best_expected(&self) -> f64 {
        self.expected.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_k E[r_k] − E[r_arm]`.
    pub fn regret(&self, arm: usize) -> f64 {
        self.best_expected() - self.expected[arm]
    }
}

/// Row-level preprocessing shared by every round built from a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRows {
    /// Unit-norm rows.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Rows that were all-zero and replaced by `e₁`.
    pub zero_rows: usize,
    pub duplicate_half: bool,
}

impl PreparedRows {
    pub fn new(dataset: &LabeledDataset, duplicate: bool) -> Self {
        let mut zero_rows = 0;
        let rows = dataset
            .features
            .iter()
            .map(|x| {
                let (u, degenerate) = normalize_unit(x);
                if degenerate {
                    zero_rows += 1;
                }
                u
            })
            .collect();
        if zero_rows > 0 {
            log::warn!("{zero_rows} all-zero rows replaced by e1");
        }
        Self {
            rows,
            labels: dataset.labels.clone(),
            num_classes: dataset.num_classes,
            zero_rows,
            duplicate_half: duplicate,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dimension of each arm context.
    pub fn context_dim(&self) -> usize {
        let d = self.rows.first().map_or(0, Vec::len) * self.num_classes;
        if self.duplicate_half {
            2 * d
        } else {
            d
        }
    }

    /// Round `i`: disjoint-encoded contexts (each then duplicated-half if
    /// enabled), reward 1 for the labelled arm.
    pub fn round(&self, i: usize) -> Result<BanditRound> {
        let label = self.labels[i];
        let mut contexts = disjoint_encode(&self.rows[i], self.num_classes)?;
        if self.duplicate_half {
            contexts = contexts.iter().map(|c| duplicate_half(c)).collect::<Result<_>>()?;
        }
        let rewards: Vec<f64> = (0..self.num_classes)
            .map(|k| if k == label { 1.0 } else { 0.0 })
            .collect();
        Ok(BanditRound {
            contexts,
            expected: rewards.clone(),
            rewards,
            label: Some(label),
        })
    }
}

// ---------------------------------------------------------------------------
// Manifest

/// Summary of one ingested dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub source: String,
    pub files: Vec<PathBuf>,
    pub n: usize,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub raw_dim: usize,
    pub dropped_rows: usize,
    pub zero_rows: usize,
    pub duplicate_half: bool,
    pub context_dim: usize,
    /// SHA-256 over the input files' bytes, in order.
    pub checksum: String,
}

impl Manifest {
    pub fn build(dataset: &LabeledDataset, files: &[PathBuf], duplicate: bool) -> Result<Self> {
        let mut hasher = Sha256::new();
        for f in files {
            hasher.update(read_bytes(f)?);
        }
        let prepared = PreparedRows::new(dataset, duplicate);
        Ok(Self {
            source: dataset.provenance.clone(),
            files: files.to_vec(),
            n: dataset.len(),
            num_classes: dataset.num_classes,
            class_names: dataset.class_names.clone(),
            raw_dim: dataset.raw_dim(),
            dropped_rows: dataset.dropped_rows,
            zero_rows: prepared.zero_rows,
            duplicate_half: duplicate,
            context_dim: prepared.context_dim(),
            checksum: hex::encode(hasher.finalize()),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Checksum of a single file, as recorded in manifests.
pub fn file_checksum(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}
