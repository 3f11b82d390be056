//! Tabular data loading, immutability masks, rating scales, and feature
//! standardization.
//!
//! File formats:
//! - data: comma-separated UTF-8, first row header, decimal-point reals,
//!   required rating column (default name `rating`), optional `entity_id`
//!   and `period` columns; every remaining column is a feature.
//! - mask: plain text, one feature name per line, `#` comments allowed.
//! - rating scale: ordered symbol list, one per line, best grade first.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Column names with special meaning in data files.
pub const ENTITY_COLUMN: &str = "entity_id";
pub const PERIOD_COLUMN: &str = "period";
pub const DEFAULT_RATING_COLUMN: &str = "rating";

// ---------------------------------------------------------------------------
// Rating scale
// ---------------------------------------------------------------------------

/// Ordered grade symbols, best first; ordinal 1 is the best grade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingScale {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

const SP_SYMBOLS: [&str; 22] = [
    "AAA", "AA+", "AA", "AA-", "A+", "A", "A-", "BBB+", "BBB", "BBB-", "BB+", "BB", "BB-", "B+",
    "B", "B-", "CCC+", "CCC", "CCC-", "CC", "C", "D",
];

impl RatingScale {
    /// The Standard & Poor's long-term scale, AAA (ordinal 1) down to D (22).
    pub fn default_sp() -> Self {
        Self::from_symbols(SP_SYMBOLS.iter().map(|s| s.to_string()).collect())
            .expect("builtin scale is valid")
    }

    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("rating scale has no symbols".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i + 1).is_some() {
                return Err(Error::InvalidInput(format!(
                    "rating scale repeats symbol '{s}'"
                )));
            }
        }
        Ok(Self { symbols, index })
    }

    /// Parses a scale file: one symbol per line, best first, `#` comments.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let symbols: Vec<String> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_string())
            .collect();
        Self::from_symbols(symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Symbol to 1-based ordinal (1 = best grade).
    pub fn to_ordinal(&self, symbol: &str) -> Result<usize> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("unknown rating symbol '{symbol}'")))
    }

    /// 1-based ordinal to symbol.
    pub fn to_symbol(&self, ordinal: usize) -> Result<&str> {
        if ordinal == 0 || ordinal > self.symbols.len() {
            return Err(Error::Lookup(format!(
                "ordinal {ordinal} outside scale of {} grades",
                self.symbols.len()
            )));
        }
        Ok(&self.symbols[ordinal - 1])
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self::default_sp()
    }
}

// ---------------------------------------------------------------------------
// Tabular dataset
// ---------------------------------------------------------------------------

/// An in-memory table: feature matrix, rating ordinals, optional panel keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub ratings: Vec<usize>,
    pub entity_ids: Option<Vec<String>>,
    pub periods: Option<Vec<String>>,
    /// True when the source file spelled ratings as symbols rather than ordinals.
    pub symbolic_ratings: bool,
}

impl TabularDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Loads a CSV data file. `rating_column` names the required label column;
/// rating cells may be ordinals or symbols of `scale`.
pub fn load_table(path: &Path, rating_column: &str, scale: &RatingScale) -> Result<TabularDataset> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: e.to_string(),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.clone()) {
            return Err(Error::Schema {
                path: path_str,
                message: format!("duplicate column name '{h}'"),
            });
        }
    }

    let rating_idx = headers
        .iter()
        .position(|h| h == rating_column)
        .ok_or_else(|| Error::Schema {
            path: path_str.clone(),
            message: format!("missing required rating column '{rating_column}'"),
        })?;
    let entity_idx = headers.iter().position(|h| h == ENTITY_COLUMN);
    let period_idx = headers.iter().position(|h| h == PERIOD_COLUMN);

    let special = [Some(rating_idx), entity_idx, period_idx];
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|i| !special.contains(&Some(*i)))
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut rows = Vec::new();
    let mut ratings = Vec::new();
    let mut entity_ids = entity_idx.map(|_| Vec::new());
    let mut periods = period_idx.map(|_| Vec::new());
    let mut symbolic = false;

    for (row_i, record) in reader.records().enumerate() {
        let row_no = row_i + 1; // 1-based data row
        let record = record.map_err(|e| Error::Schema {
            path: path_str.clone(),
            message: format!("row {row_no}: {e}"),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Schema {
                path: path_str,
                message: format!(
                    "row {row_no} has {} cells, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        for &col in &feature_cols {
            let cell = &record[col];
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                row: row_no,
                column: col + 1,
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            row.push(value);
        }
        let rating_cell = &record[rating_idx];
        let ordinal = match rating_cell.parse::<usize>() {
            Ok(ord) => {
                if ord == 0 || ord > scale.len() {
                    return Err(Error::Parse {
                        path: path_str,
                        row: row_no,
                        column: rating_idx + 1,
                        message: format!(
                            "rating ordinal {ord} outside scale of {} grades",
                            scale.len()
                        ),
                    });
                }
                ord
            }
            Err(_) => {
                symbolic = true;
                scale.to_ordinal(rating_cell).map_err(|_| Error::Parse {
                    path: path_str.clone(),
                    row: row_no,
                    column: rating_idx + 1,
                    message: format!("unknown rating symbol '{rating_cell}'"),
                })?
            }
        };
        ratings.push(ordinal);
        if let (Some(ids), Some(idx)) = (entity_ids.as_mut(), entity_idx) {
            ids.push(record[idx].to_string());
        }
        if let (Some(ps), Some(idx)) = (periods.as_mut(), period_idx) {
            ps.push(record[idx].to_string());
        }
        rows.push(row);
    }

    Ok(TabularDataset {
        feature_names,
        rows,
        ratings,
        entity_ids,
        periods,
        symbolic_ratings: symbolic,
    })
}

/// Writes a dataset back to CSV (cells are quoted only when they need it).
/// Ratings are spelled as symbols when the dataset was loaded from symbols,
/// otherwise as ordinals.
pub fn save_table(ds: &TabularDataset, path: &Path, scale: &RatingScale) -> Result<()> {
    let path_str = path.display().to_string();
    let io_err = |e: csv::Error| Error::InvalidInput(format!("writing {path_str}: {e}"));
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("writing {path_str}: {e}")))?;

    let mut header: Vec<&str> = Vec::new();
    if ds.entity_ids.is_some() {
        header.push(ENTITY_COLUMN);
    }
    if ds.periods.is_some() {
        header.push(PERIOD_COLUMN);
    }
    for name in &ds.feature_names {
        header.push(name);
    }
    header.push(DEFAULT_RATING_COLUMN);
    writer.write_record(&header).map_err(io_err)?;

    for i in 0..ds.n_rows() {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ids) = &ds.entity_ids {
            cells.push(ids[i].clone());
        }
        if let Some(ps) = &ds.periods {
            cells.push(ps[i].clone());
        }
        for v in &ds.rows[i] {
            let mut s = String::new();
            write!(s, "{v}").expect("write to string");
            cells.push(s);
        }
        if ds.symbolic_ratings {
            cells.push(scale.to_symbol(ds.ratings[i])?.to_string());
        } else {
            cells.push(ds.ratings[i].to_string());
        }
        writer.write_record(&cells).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path_str, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Immutability mask
// ---------------------------------------------------------------------------

/// Resolved immutability mask: `w[i] = 0` exactly when feature i is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub immutable_names: BTreeSet<String>,
    pub w: Vec<f64>,
    /// Immutable names that matched no feature; warnings, never errors.
    pub missing: Vec<String>,
}

impl MaskSpec {
    pub fn modifiable_count(&self) -> usize {
        self.w.iter().filter(|&&v| v == 1.0).count()
    }
}

/// Builds the mask vector from named immutable features. Order-independent;
/// names absent from `feature_names` are reported in `missing`.
pub fn build_mask(feature_names: &[String], immutable_names: &BTreeSet<String>) -> MaskSpec {
    let present: BTreeSet<&String> = feature_names.iter().collect();
    let w = feature_names
        .iter()
        .map(|n| {
            if immutable_names.contains(n) {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let missing = immutable_names
        .iter()
        .filter(|n| !present.contains(n))
        .cloned()
        .collect();
    MaskSpec {
        immutable_names: immutable_names.clone(),
        w,
        missing,
    }
}

/// Parses a mask list: one feature name per line, `#` comments, blank lines ok.
pub fn parse_mask_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect()
}

pub fn load_mask_file(path: &Path) -> Result<BTreeSet<String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(parse_mask_list(&text))
}

// ---------------------------------------------------------------------------
// Feature scaler
// ---------------------------------------------------------------------------

/// Per-feature standardization fitted on a training split.
///
/// Uses the population standard deviation (n denominator); constant columns
/// are assigned std 1 and pass through shifted only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler> {
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "scaler fit needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Contract(format!(
                "row {i} has {} features, expected {d}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "row {i} contains a non-finite value"
            )));
        }
    }
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; d];
    for r in rows {
        for ((var, v), m) in vars.iter_mut().zip(r).zip(&means) {
            let c = v - m;
            *var += c * c;
        }
    }
    let stds = vars
        .iter()
        .map(|&v| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Ok(Scaler { means, stds })
}

impl Scaler {
    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.means.len() {
            return Err(Error::Contract(format!(
                "row has {} features, scaler has {}",
                row.len(),
                self.means.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    /// Maps a standardized difference vector back to original units.
    /// Means cancel in differences, so this is a pure rescale by stds.
    pub fn invert_delta(&self, delta: &[f64]) -> Result<Vec<f64>> {
        if delta.len() != self.stds.len() {
            return Err(Error::Contract(format!(
                "delta has {} features, scaler has {}",
                delta.len(),
                self.stds.len()
            )));
        }
        Ok(delta.iter().zip(&self.stds).map(|(d, s)| d * s).collect())
    }
}
