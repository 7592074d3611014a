//! Dataset schema and file I/O.
//!
//! Datasets are JSON Lines, one construct per line, with field names
//! matching the public competition release so real data loads unmodified.
//! Base-pair probability matrices live in sidecar `<id>.bpp` text files
//! (n rows of n space-separated reals). Predictions travel as CSV keyed by
//! `<id>_<position>`.
//!
//! Round-1 (107 nt) and round-2 (130 nt) constructs are treated as sharing
//! one measurement scale; the round is implicit in `seq_length` and never
//! interpreted by this module.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::{structfeat, Error, Result};

/// The five measured per-nucleotide data types, in canonical order.
pub const DATA_TYPES: [&str; 5] = [
    "reactivity",
    "deg_Mg_pH10",
    "deg_pH10",
    "deg_Mg_50C",
    "deg_50C",
];

/// The three data types used for scoring.
pub const SCORED_COLUMNS: [&str; 3] = ["reactivity", "deg_Mg_pH10", "deg_Mg_50C"];

/// Alphabet of per-nucleotide loop-context labels.
pub const LOOP_ALPHABET: [char; 7] = ['S', 'H', 'B', 'I', 'M', 'E', 'X'];

/// One RNA design with its measured per-nucleotide profiles.
///
/// Profile arrays hold only scored positions, listed in sequence order;
/// `scored_mask` marks which positions those are. For constructs read from
/// disk the mask is always the prefix `[0, seq_scored)`; reversal
/// augmentation produces suffix masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Construct {
    pub id: String,
    pub sequence: String,
    pub structure: String,
    pub loop_string: String,
    pub seq_length: usize,
    pub seq_scored: usize,
    pub scored_mask: Vec<bool>,
    pub profiles: BTreeMap<String, Vec<f64>>,
    pub profile_errors: BTreeMap<String, Vec<f64>>,
    pub signal_to_noise: f64,
    pub sn_pass: bool,
    /// True when profiles were attached by pseudo-labeling rather than measured.
    pub synthetic: bool,
}

impl Construct {
    /// Sequence indices of scored positions, in order.
    pub fn scored_positions(&self) -> Vec<usize> {
        self.scored_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    /// Prefix mask of length `seq_length` with the first `seq_scored` set.
    pub fn prefix_mask(seq_length: usize, seq_scored: usize) -> Vec<bool> {
        (0..seq_length).map(|i| i < seq_scored).collect()
    }

    /// Check every schema invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(field_err("id", "must be non-empty"));
        }
        if let Some(c) = self.sequence.chars().find(|c| !"ACGU".contains(*c)) {
            return Err(field_err("sequence", format!("illegal nucleotide '{c}'")));
        }
        if self.sequence.len() != self.seq_length {
            return Err(field_err(
                "seq_length",
                format!(
                    "declared {} but sequence has {} characters",
                    self.seq_length,
                    self.sequence.len()
                ),
            ));
        }
        if self.structure.len() != self.seq_length {
            return Err(field_err(
                "structure",
                format!(
                    "length {} does not match sequence length {}",
                    self.structure.len(),
                    self.seq_length
                ),
            ));
        }
        if let Err(e) = structfeat::pair_table(&self.structure) {
            return Err(field_err("structure", e.to_string()));
        }
        if self.loop_string.len() != self.seq_length {
            return Err(field_err(
                "predicted_loop_type",
                format!(
                    "length {} does not match sequence length {}",
                    self.loop_string.len(),
                    self.seq_length
                ),
            ));
        }
        if let Some(c) = self.loop_string.chars().find(|c| !LOOP_ALPHABET.contains(c)) {
            return Err(field_err(
                "predicted_loop_type",
                format!("illegal loop label '{c}'"),
            ));
        }
        if self.seq_scored == 0 || self.seq_scored > self.seq_length {
            return Err(field_err(
                "seq_scored",
                format!(
                    "must satisfy 0 < seq_scored <= seq_length, got {} (length {})",
                    self.seq_scored, self.seq_length
                ),
            ));
        }
        if self.scored_mask.len() != self.seq_length
            || self.scored_mask.iter().filter(|&&m| m).count() != self.seq_scored
        {
            return Err(field_err(
                "seq_scored",
                "scored mask does not match seq_length/seq_scored",
            ));
        }
        for (name, values) in &self.profiles {
            if !DATA_TYPES.contains(&name.as_str()) {
                return Err(field_err(name, "unknown data type"));
            }
            if values.len() != self.seq_scored {
                return Err(field_err(
                    name,
                    format!("array length {} != seq_scored {}", values.len(), self.seq_scored),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(field_err(name, "non-finite value"));
            }
        }
        for (name, errs) in &self.profile_errors {
            let field = error_field_name(name);
            if !self.profiles.contains_key(name) {
                return Err(field_err(field, "error array without value array"));
            }
            if errs.len() != self.seq_scored {
                return Err(field_err(
                    field,
                    format!("array length {} != seq_scored {}", errs.len(), self.seq_scored),
                ));
            }
            if errs.iter().any(|e| !e.is_finite() || *e < 0.0) {
                return Err(field_err(field, "errors must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

/// Canonical JSONL field name for a profile's error array.
pub fn error_field_name(data_type: &str) -> String {
    format!("{data_type}_error")
}

/// Base-pair probability matrix over a thermodynamic ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct BppMatrix {
    n: usize,
    p: Vec<f64>, // row-major n*n, symmetrized
}

impl BppMatrix {
    /// Validate and symmetrize a raw row-major matrix.
    ///
    /// Entries must lie in `[0, 1]`, the diagonal must be zero, row sums may
    /// not exceed `1 + 1e-3`, and asymmetry beyond `1e-6` is an error;
    /// smaller asymmetry is averaged away.
    pub fn new(n: usize, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != n * n {
            return Err(Error::Dimension(format!(
                "BPP matrix expected {}x{} = {} entries, got {}",
                n,
                n,
                n * n,
                raw.len()
            )));
        }
        for (k, &v) in raw.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation {
                    field: "bpp".into(),
                    msg: format!("entry ({},{}) = {} outside [0,1]", k / n, k % n, v),
                });
            }
        }
        for i in 0..n {
            if raw[i * n + i].abs() > 1e-9 {
                return Err(Error::Validation {
                    field: "bpp".into(),
                    msg: format!("diagonal entry ({i},{i}) must be 0"),
                });
            }
            for j in (i + 1)..n {
                let d = (raw[i * n + j] - raw[j * n + i]).abs();
                if d > 1e-6 {
                    return Err(Error::Validation {
                        field: "bpp".into(),
                        msg: format!("asymmetry {d:.2e} at ({i},{j}) exceeds 1e-6"),
                    });
                }
            }
        }
        let mut p = raw;
        for i in 0..n {
            p[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (p[i * n + j] + p[j * n + i]);
                p[i * n + j] = avg;
                p[j * n + i] = avg;
            }
            let row_sum: f64 = p[i * n..(i + 1) * n].iter().sum();
            if row_sum > 1.0 + 1e-3 {
                return Err(Error::Validation {
                    field: "bpp".into(),
                    msg: format!("row {i} sums to {row_sum}, above 1 + 1e-3"),
                });
            }
        }
        Ok(Self { n, p })
    }

    /// All-zero matrix (fully unpaired ensemble).
    pub fn zeros(n: usize) -> Self {
        Self { n, p: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }
}

/// Per-construct, per-data-type predicted value arrays from one model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub model_name: String,
    /// construct id -> data type -> values (scored-window or full length).
    pub entries: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl PredictionSet {
    pub fn new(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Check that every referenced construct exists and array lengths match
    /// either the scored window or the full length of that construct.
    pub fn validate_against(&self, constructs: &[Construct]) -> Result<()> {
        let by_id: BTreeMap<&str, &Construct> =
            constructs.iter().map(|c| (c.id.as_str(), c)).collect();
        for (id, cols) in &self.entries {
            let c = by_id.get(id.as_str()).ok_or_else(|| Error::Validation {
                field: "id".into(),
                msg: format!("prediction references unknown construct '{id}'"),
            })?;
            for (col, values) in cols {
                if values.len() != c.seq_scored && values.len() != c.seq_length {
                    return Err(Error::Dimension(format!(
                        "prediction for '{id}' column '{col}' has length {}, expected {} or {}",
                        values.len(),
                        c.seq_scored,
                        c.seq_length
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A parsed dataset: constructs in file order plus any sidecar BPP matrices.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub constructs: Vec<Construct>,
    pub bpps: BTreeMap<String, BppMatrix>,
}

impl Dataset {
    pub fn bpp(&self, id: &str) -> Option<&BppMatrix> {
        self.bpps.get(id)
    }
}

/// Raw JSONL record; unknown fields are ignored for forward compatibility.
#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    sequence: Option<String>,
    structure: Option<String>,
    predicted_loop_type: Option<String>,
    seq_length: Option<usize>,
    seq_scored: Option<usize>,
    signal_to_noise: Option<f64>,
    #[serde(rename = "SN_filter")]
    sn_filter: Option<f64>,
    reactivity: Option<Vec<f64>>,
    #[serde(rename = "deg_Mg_pH10")]
    deg_mg_ph10: Option<Vec<f64>>,
    #[serde(rename = "deg_pH10")]
    deg_ph10: Option<Vec<f64>>,
    #[serde(rename = "deg_Mg_50C")]
    deg_mg_50c: Option<Vec<f64>>,
    #[serde(rename = "deg_50C")]
    deg_50c: Option<Vec<f64>>,
    // Error arrays: canonical "<profile>_error" names with the public
    // release's "deg_error_*" spellings accepted as aliases.
    #[serde(rename = "reactivity_error")]
    reactivity_error: Option<Vec<f64>>,
    #[serde(rename = "deg_Mg_pH10_error", alias = "deg_error_Mg_pH10")]
    deg_mg_ph10_error: Option<Vec<f64>>,
    #[serde(rename = "deg_pH10_error", alias = "deg_error_pH10")]
    deg_ph10_error: Option<Vec<f64>>,
    #[serde(rename = "deg_Mg_50C_error", alias = "deg_error_Mg_50C")]
    deg_mg_50c_error: Option<Vec<f64>>,
    #[serde(rename = "deg_50C_error", alias = "deg_error_50C")]
    deg_50c_error: Option<Vec<f64>>,
}

impl RawRecord {
    fn into_construct(self) -> Result<Construct> {
        let id = self.id.ok_or_else(|| field_err("id", "missing"))?;
        let sequence = self.sequence.ok_or_else(|| field_err("sequence", "missing"))?;
        let structure = self.structure.ok_or_else(|| field_err("structure", "missing"))?;
        let loop_string = self
            .predicted_loop_type
            .ok_or_else(|| field_err("predicted_loop_type", "missing"))?;
        let seq_length = self.seq_length.unwrap_or(sequence.len());
        let seq_scored = self.seq_scored.unwrap_or(seq_length);

        let mut profiles = BTreeMap::new();
        let mut profile_errors = BTreeMap::new();
        let pairs: [(&str, Option<Vec<f64>>, Option<Vec<f64>>); 5] = [
            ("reactivity", self.reactivity, self.reactivity_error),
            ("deg_Mg_pH10", self.deg_mg_ph10, self.deg_mg_ph10_error),
            ("deg_pH10", self.deg_ph10, self.deg_ph10_error),
            ("deg_Mg_50C", self.deg_mg_50c, self.deg_mg_50c_error),
            ("deg_50C", self.deg_50c, self.deg_50c_error),
        ];
        for (name, values, errors) in pairs {
            match (values, errors) {
                (Some(v), Some(e)) => {
                    profiles.insert(name.to_string(), v);
                    profile_errors.insert(name.to_string(), e);
                }
                (Some(_), None) => {
                    return Err(field_err(error_field_name(name), "missing"));
                }
                (None, Some(_)) => {
                    return Err(field_err(name, "error array without value array"));
                }
                (None, None) => {}
            }
        }

        let c = Construct {
            id,
            sequence,
            structure,
            loop_string,
            seq_length,
            seq_scored,
            scored_mask: Construct::prefix_mask(seq_length, seq_scored),
            profiles,
            profile_errors,
            signal_to_noise: self.signal_to_noise.unwrap_or(0.0),
            sn_pass: self.sn_filter.map(|v| v != 0.0).unwrap_or(false),
            synthetic: false,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Parse a JSONL dataset file, optionally loading `<id>.bpp` sidecars.
///
/// Constructs come back in file order. Any malformed line or invariant
/// violation aborts with the offending line number.
pub fn parse_dataset(path: &Path, bpp_dir: Option<&Path>) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    let mut constructs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let c = raw.into_construct().map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        constructs.push(c);
    }

    let mut bpps = BTreeMap::new();
    if let Some(dir) = bpp_dir {
        for c in &constructs {
            let bpp_path = dir.join(format!("{}.bpp", c.id));
            if !bpp_path.exists() {
                return Err(Error::MissingFile(bpp_path));
            }
            bpps.insert(c.id.clone(), load_bpp(&bpp_path, c.seq_length)?);
        }
    }
    Ok(Dataset { constructs, bpps })
}

/// Serialize constructs back to canonical JSONL.
///
/// Only the schema fields are written; in-memory flags (`synthetic`,
/// non-prefix masks) are not representable and are rejected.
pub fn write_dataset(constructs: &[Construct], path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in constructs {
        if c.scored_mask != Construct::prefix_mask(c.seq_length, c.seq_scored) {
            return Err(Error::Validation {
                field: "seq_scored".into(),
                msg: format!("construct '{}' has a non-prefix scored mask", c.id),
            });
        }
        out.push_str(&construct_to_json(c).to_string());
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn construct_to_json(c: &Construct) -> serde_json::Value {
    use serde_json::{json, Map, Value};
    let mut m = Map::new();
    m.insert("id".into(), json!(c.id));
    m.insert("sequence".into(), json!(c.sequence));
    m.insert("structure".into(), json!(c.structure));
    m.insert("predicted_loop_type".into(), json!(c.loop_string));
    m.insert("seq_length".into(), json!(c.seq_length));
    m.insert("seq_scored".into(), json!(c.seq_scored));
    m.insert("signal_to_noise".into(), json!(c.signal_to_noise));
    m.insert("SN_filter".into(), json!(if c.sn_pass { 1 } else { 0 }));
    for name in DATA_TYPES {
        if let Some(v) = c.profiles.get(name) {
            m.insert(name.into(), json!(v));
            m.insert(error_field_name(name), json!(c.profile_errors[name]));
        }
    }
    Value::Object(m)
}

/// Load an `n`-by-`n` BPP matrix from whitespace-separated text.
pub fn load_bpp(path: &Path, n: usize) -> Result<BppMatrix> {
    let text = fs::read_to_string(path)?;
    let mut raw = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = raw.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad number '{tok}'"),
            })?;
            raw.push(v);
        }
        if raw.len() - before != n {
            return Err(Error::Dimension(format!(
                "{}: row {} has {} entries, expected {}",
                path.display(),
                rows,
                raw.len() - before,
                n
            )));
        }
    }
    if rows != n {
        return Err(Error::Dimension(format!(
            "{}: {} rows, expected {}",
            path.display(),
            rows,
            n
        )));
    }
    BppMatrix::new(n, raw)
}

/// Write a BPP matrix in the sidecar text format.
pub fn write_bpp(bpp: &BppMatrix, path: &Path) -> Result<()> {
    let n = bpp.n();
    let mut out = String::new();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", bpp.get(i, j));
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Fixed header of the prediction CSV format.
pub const PREDICTION_HEADER: &str = "id_seqpos,reactivity,deg_Mg_pH10,deg_Mg_50C";

/// Write predictions as CSV: `<id>_<pos>` keys, the three scored columns,
/// values formatted to 6 significant digits.
///
/// The set must contain all three scored columns per construct, with equal
/// lengths; any further columns are simply not written.
pub fn write_predictions(preds: &PredictionSet, path: &Path) -> Result<()> {
    let mut out = String::from(PREDICTION_HEADER);
    out.push('\n');
    for (id, cols) in &preds.entries {
        if id.contains(',') {
            return Err(Error::Validation {
                field: "id".into(),
                msg: format!("construct id '{id}' contains a comma"),
            });
        }
        let mut arrays = Vec::with_capacity(SCORED_COLUMNS.len());
        for col in SCORED_COLUMNS {
            let v = cols.get(col).ok_or_else(|| {
                Error::CoverageMismatch(format!("construct '{id}' lacks column '{col}'"))
            })?;
            arrays.push(v);
        }
        let len = arrays[0].len();
        if arrays.iter().any(|a| a.len() != len) {
            return Err(Error::CoverageMismatch(format!(
                "construct '{id}' has unequal column lengths"
            )));
        }
        for pos in 0..len {
            let _ = write!(out, "{id}_{pos}");
            for a in &arrays {
                let v = a[pos];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("prediction for '{id}' position {pos}")));
                }
                let _ = write!(out, ",{}", format_sig6(v));
            }
            out.push('\n');
        }
    }
    atomic_write(path, out.as_bytes())
}

/// Read a prediction CSV written by [`write_predictions`].
///
/// `model_name` defaults to the file stem. Positions must be contiguous
/// from zero for every construct.
pub fn read_predictions(path: &Path, model_name: Option<&str>) -> Result<PredictionSet> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == PREDICTION_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("bad header '{h}', expected '{PREDICTION_HEADER}'"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty prediction file".into(),
            })
        }
    }
    let name = model_name
        .map(str::to_owned)
        .or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "predictions".into());
    let mut preds = PredictionSet::new(name);
    // (id, pos) -> per-column values, gathered then checked for contiguity
    let mut staged: BTreeMap<String, BTreeMap<usize, [f64; 3]>> = BTreeMap::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 4 fields, got {}", parts.len()),
            });
        }
        let key = parts[0];
        let us = key.rfind('_').ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("row key '{key}' lacks '_<position>' suffix"),
        })?;
        let (id, pos_str) = (&key[..us], &key[us + 1..]);
        let pos: usize = pos_str.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad position '{pos_str}'"),
        })?;
        let mut vals = [0.0f64; 3];
        for (k, tok) in parts[1..].iter().enumerate() {
            vals[k] = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number '{tok}'"),
            })?;
        }
        if staged.entry(id.to_string()).or_default().insert(pos, vals).is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("duplicate row for '{key}'"),
            });
        }
    }
    for (id, rows) in staged {
        let len = rows.len();
        let mut cols: BTreeMap<String, Vec<f64>> = SCORED_COLUMNS
            .iter()
            .map(|c| (c.to_string(), Vec::with_capacity(len)))
            .collect();
        for (expect, (pos, vals)) in rows.into_iter().enumerate() {
            if pos != expect {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("construct '{id}': positions not contiguous from 0 (missing {expect})"),
                });
            }
            for (k, col) in SCORED_COLUMNS.iter().enumerate() {
                cols.get_mut(*col).unwrap().push(vals[k]);
            }
        }
        preds.entries.insert(id, cols);
    }
    Ok(preds)
}

/// Format a value with 6 significant digits, C `%.6g` style.
///
/// Formatting is idempotent through a parse cycle: `format_sig6(parse(s)) == s`
/// for any `s` this function produces.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..=5).contains(&exp) {
        let prec = (5 - exp).max(0) as usize;
        let fixed = format!("{v:.prec$}");
        trim_trailing_zeros(fixed)
    } else {
        let (mantissa, e) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_trailing_zeros(mantissa.to_string()), e)
    }
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Write `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => Path::new(&format!(".degkit.tmp{}", std::process::id())).to_path_buf(),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn field_err(field: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn valid_line() -> serde_json::Value {
        serde_json::json!({
            "id": "c1",
            "sequence": "GGGAAACCC",
            "structure": "(((...)))",
            "predicted_loop_type": "SSSHHHSSS",
            "seq_length": 9,
            "seq_scored": 9,
            "signal_to_noise": 2.5,
            "SN_filter": 1,
            "reactivity": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            "reactivity_error": vec![0.1; 9],
            "deg_Mg_pH10": vec![0.0; 9],
            "deg_Mg_pH10_error": vec![0.1; 9],
            "deg_pH10": vec![0.0; 9],
            "deg_pH10_error": vec![0.1; 9],
            "deg_Mg_50C": vec![0.0; 9],
            "deg_Mg_50C_error": vec![0.1; 9],
            "deg_50C": vec![0.0; 9],
            "deg_50C_error": vec![0.1; 9]
        })
    }

    fn write_jsonl(lines: &[serde_json::Value]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn parses_valid_single_construct() {
        let f = write_jsonl(&[valid_line()]);
        let ds = parse_dataset(f.path(), None).unwrap();
        assert_eq!(ds.constructs.len(), 1);
        let c = &ds.constructs[0];
        assert_eq!(c.id, "c1");
        assert_eq!(c.seq_scored, 9);
        assert!(c.sn_pass);
        assert_eq!(c.profiles.len(), 5);
    }

    #[test]
    fn rejects_structure_length_mismatch() {
        let mut rec = valid_line();
        rec["structure"] = serde_json::json!("(((...))");
        let f = write_jsonl(&[rec]);
        let err = parse_dataset(f.path(), None).unwrap_err().to_string();
        assert!(err.contains("structure"), "{err}");
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn scored_prefix_lengths_enforced() {
        // 107-nt record with 68 scored positions parses; 67 is rejected.
        let n = 107;
        let seq: String = "ACGU".chars().cycle().take(n).collect();
        let mut rec = serde_json::json!({
            "id": "r1",
            "sequence": seq,
            "structure": ".".repeat(n),
            "predicted_loop_type": "E".repeat(n),
            "seq_length": n,
            "seq_scored": 68,
            "reactivity": vec![0.5; 68],
            "reactivity_error": vec![0.1; 68],
        });
        let f = write_jsonl(&[rec.clone()]);
        assert_eq!(parse_dataset(f.path(), None).unwrap().constructs.len(), 1);

        rec["reactivity"] = serde_json::json!(vec![0.5; 67]);
        let f = write_jsonl(&[rec]);
        let err = parse_dataset(f.path(), None).unwrap_err().to_string();
        assert!(err.contains("reactivity"), "{err}");
    }

    #[test]
    fn malformed_json_reports_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{}", valid_line()).unwrap();
        writeln!(f, "{{not json").unwrap();
        let err = parse_dataset(f.path(), None).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_fields_ignored() {
        let mut rec = valid_line();
        rec["index"] = serde_json::json!(17);
        rec["mystery"] = serde_json::json!({"a": 1});
        let f = write_jsonl(&[rec]);
        assert!(parse_dataset(f.path(), None).is_ok());
    }

    #[test]
    fn kaggle_error_aliases_accepted() {
        let mut rec = valid_line();
        let obj = rec.as_object_mut().unwrap();
        let e = obj.remove("deg_Mg_pH10_error").unwrap();
        obj.insert("deg_error_Mg_pH10".into(), e);
        let f = write_jsonl(&[rec]);
        let ds = parse_dataset(f.path(), None).unwrap();
        assert!(ds.constructs[0].profile_errors.contains_key("deg_Mg_pH10"));
    }

    #[test]
    fn rejection_completeness_single_field_corruptions() {
        let cases: Vec<(&str, serde_json::Value, &str)> = vec![
            ("sequence", serde_json::json!("GGGAAACCT"), "sequence"),
            ("sequence", serde_json::json!("GGGAAACC"), "seq_length"),
            ("structure", serde_json::json!("((((..)))"), "structure"),
            ("structure", serde_json::json!("(((..))))"), "structure"),
            ("predicted_loop_type", serde_json::json!("SSSHHHSS"), "predicted_loop_type"),
            ("predicted_loop_type", serde_json::json!("SSSQHHSSS"), "predicted_loop_type"),
            ("seq_scored", serde_json::json!(10), "seq_scored"),
            ("seq_scored", serde_json::json!(0), "seq_scored"),
            ("reactivity", serde_json::json!(vec![0.1; 8]), "reactivity"),
            ("reactivity_error", serde_json::json!(vec![-0.1; 9]), "reactivity_error"),
        ];
        for (field, bad, expect) in cases {
            let mut rec = valid_line();
            rec[field] = bad;
            let f = write_jsonl(&[rec]);
            let err = parse_dataset(f.path(), None).unwrap_err().to_string();
            assert!(
                err.contains(expect),
                "corrupting '{field}' should name '{expect}', got: {err}"
            );
        }
    }

    #[test]
    fn missing_bpp_file_reported() {
        let f = write_jsonl(&[valid_line()]);
        let dir = tempfile::tempdir().unwrap();
        let err = parse_dataset(f.path(), Some(dir.path())).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn bpp_sidecar_loaded_and_validated() {
        let f = write_jsonl(&[valid_line()]);
        let dir = tempfile::tempdir().unwrap();
        let mut rows = String::new();
        for i in 0..9 {
            for j in 0..9 {
                let v = if (i, j) == (0, 8) || (i, j) == (8, 0) { 0.9 } else { 0.0 };
                rows.push_str(&format!("{v} "));
            }
            rows.push('\n');
        }
        std::fs::write(dir.path().join("c1.bpp"), rows).unwrap();
        let ds = parse_dataset(f.path(), Some(dir.path())).unwrap();
        assert!((ds.bpp("c1").unwrap().get(0, 8) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn load_bpp_small_cases() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bpp");
        std::fs::write(&p, "0 0.9\n0.9 0\n").unwrap();
        let m = load_bpp(&p, 2).unwrap();
        assert_eq!(m.get(0, 1), 0.9);

        std::fs::write(&p, "0 0\n0 0\n").unwrap();
        assert!(load_bpp(&p, 2).is_ok(), "all-zero matrix is a valid ensemble");

        // row sums 1.2 -> error
        std::fs::write(&p, "0 0.6 0.6\n0.6 0 0.6\n0.6 0.6 0\n").unwrap();
        assert!(load_bpp(&p, 3).is_err());

        // wrong dimensions
        std::fs::write(&p, "0 0.9\n").unwrap();
        assert!(load_bpp(&p, 2).is_err());

        // asymmetry above tolerance
        std::fs::write(&p, "0 0.5\n0.4 0\n").unwrap();
        assert!(load_bpp(&p, 2).is_err());
    }

    #[test]
    fn prediction_csv_round_trip() {
        let mut preds = PredictionSet::new("m");
        let mut cols = BTreeMap::new();
        cols.insert("reactivity".to_string(), vec![0.123456789, -1.5]);
        cols.insert("deg_Mg_pH10".to_string(), vec![2.0, 0.0]);
        cols.insert("deg_Mg_50C".to_string(), vec![1e-7, 12345.678]);
        preds.entries.insert("c1".to_string(), cols);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_predictions(&preds, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(PREDICTION_HEADER));
        assert_eq!(text.lines().count(), 3, "header + 2 data rows");
        assert!(text.lines().nth(1).unwrap().starts_with("c1_0,"));

        let back = read_predictions(&p, None).unwrap();
        assert_eq!(back.model_name, "m");
        // writing again reproduces the file byte for byte
        let p2 = dir.path().join("m2.csv");
        write_predictions(&back, &p2).unwrap();
        assert_eq!(text, std::fs::read_to_string(&p2).unwrap());
    }

    #[test]
    fn empty_prediction_set_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_predictions(&PredictionSet::new("e"), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, format!("{PREDICTION_HEADER}\n"));
        assert!(read_predictions(&p, None).unwrap().entries.is_empty());
    }

    #[test]
    fn ids_with_underscores_round_trip() {
        let mut preds = PredictionSet::new("m");
        let mut cols = BTreeMap::new();
        for c in SCORED_COLUMNS {
            cols.insert(c.to_string(), vec![1.0, 2.0]);
        }
        preds.entries.insert("id_001f94081".to_string(), cols);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write_predictions(&preds, &p).unwrap();
        let back = read_predictions(&p, None).unwrap();
        assert!(back.entries.contains_key("id_001f94081"));
        assert_eq!(back.entries["id_001f94081"]["reactivity"], vec![1.0, 2.0]);
    }

    #[test]
    fn format_sig6_cases() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(-0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.5), "0.5");
        assert_eq!(format_sig6(0.123456789), "0.123457");
        assert_eq!(format_sig6(-1.5), "-1.5");
        assert_eq!(format_sig6(12345.678), "12345.7");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(1e-7), "1e-7");
        assert_eq!(format_sig6(0.000123456), "0.000123456");
    }

    #[test]
    fn dataset_round_trip() {
        let f = write_jsonl(&[valid_line()]);
        let ds = parse_dataset(f.path(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.jsonl");
        write_dataset(&ds.constructs, &p).unwrap();
        let ds2 = parse_dataset(&p, None).unwrap();
        assert_eq!(ds.constructs, ds2.constructs);
    }

    #[test]
    fn validate_against_checks_ids_and_lengths() {
        let f = write_jsonl(&[valid_line()]);
        let ds = parse_dataset(f.path(), None).unwrap();
        let mut preds = PredictionSet::new("m");
        let mut cols = BTreeMap::new();
        cols.insert("reactivity".to_string(), vec![0.0; 9]);
        preds.entries.insert("c1".to_string(), cols.clone());
        assert!(preds.validate_against(&ds.constructs).is_ok());

        preds.entries.insert("ghost".to_string(), cols);
        assert!(preds.validate_against(&ds.constructs).is_err());

        let mut preds = PredictionSet::new("m");
        let mut cols = BTreeMap::new();
        cols.insert("reactivity".to_string(), vec![0.0; 5]);
        preds.entries.insert("c1".to_string(), cols);
        assert!(preds.validate_against(&ds.constructs).is_err());
    }
}
