//! CSV ingestion and export.
//!
//! Column kinds come from [`SchemaHints`]; columns without a hint are
//! numerical when every cell parses as a finite number and categorical
//! otherwise.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tabppo_core::data::DataError;
use tabppo_core::{Dataset, FeatureSchema, RawTable};

use crate::error::{Error, Result};

/// Label column written by [`write_csv`].
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Column layout of the TON_IoT network telemetry CSVs.
    TonIot,
}

const TON_IOT_NUMERICAL: &[&str] = &[
    "duration",
    "src_bytes",
    "dst_bytes",
    "missed_bytes",
    "src_pkts",
    "src_ip_bytes",
    "dst_pkts",
    "dst_ip_bytes",
    "http_request_body_len",
    "http_response_body_len",
];

const TON_IOT_CATEGORICAL: &[&str] = &[
    "proto",
    "service",
    "conn_state",
    "dns_query",
    "dns_qclass",
    "dns_qtype",
    "dns_rcode",
    "dns_AA",
    "dns_RD",
    "dns_RA",
    "dns_rejected",
    "ssl_version",
    "ssl_cipher",
    "ssl_resumed",
    "ssl_established",
    "ssl_subject",
    "ssl_issuer",
    "http_trans_depth",
    "http_method",
    "http_uri",
    "http_version",
    "http_status_code",
    "http_user_agent",
    "http_orig_mime_types",
    "http_resp_mime_types",
    "weird_name",
    "weird_addl",
    "weird_notice",
    "src_port",
    "dst_port",
];

// identifiers plus both target columns; whichever one is the label is
// taken out before hints apply, the other would leak the answer
const TON_IOT_DROP: &[&str] = &["ts", "src_ip", "dst_ip", "label", "type"];

/// Per-column kind overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaHints {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub categorical: Vec<String>,
    pub numerical: Vec<String>,
    pub drop: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Categorical,
    Numerical,
    Drop,
}

impl SchemaHints {
    pub fn ton_iot() -> Self {
        Self {
            preset: Some(Preset::TonIot),
            ..Self::default()
        }
    }

    /// Explicit kinds, preset first and then the lists (later wins).
    fn kinds(&self) -> Result<Vec<(String, Kind)>> {
        let mut out = Vec::new();
        if let Some(Preset::TonIot) = self.preset {
            out.extend(TON_IOT_CATEGORICAL.iter().map(|c| (c.to_string(), Kind::Categorical)));
            out.extend(TON_IOT_NUMERICAL.iter().map(|c| (c.to_string(), Kind::Numerical)));
            out.extend(TON_IOT_DROP.iter().map(|c| (c.to_string(), Kind::Drop)));
        }
        let mut listed = BTreeSet::new();
        for (names, kind) in [
            (&self.categorical, Kind::Categorical),
            (&self.numerical, Kind::Numerical),
            (&self.drop, Kind::Drop),
        ] {
            for name in names {
                if !listed.insert(name.as_str()) {
                    return Err(Error::Config(format!("column `{name}` is listed under more than one hint")));
                }
                out.retain(|(n, _)| n != name);
                out.push((name.clone(), kind));
            }
        }
        Ok(out)
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<Table> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(Error::io(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if headers.iter().all(String::is_empty) {
        return Err(DataError::Empty.into());
    }
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateField(h.clone()).into());
        }
    }
    let rows = reader.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
    if rows.is_empty() {
        return Err(DataError::Empty.into());
    }
    Ok(Table { headers, rows })
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl Table {
    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()).into())
    }

    fn numeric(&self, col: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let cell = rec.get(col).unwrap_or("");
                parse_finite(cell).ok_or_else(|| {
                    DataError::BadNumeric {
                        row: r + 1,
                        column: self.headers[col].clone(),
                        value: cell.to_string(),
                    }
                    .into()
                })
            })
            .collect()
    }

    /// Builds a raw table from the given columns. Labels are indexed in
    /// sorted order of their values.
    fn to_raw(&self, label: usize, categorical: &[usize], numerical: &[usize]) -> Result<RawTable> {
        let names = |cols: &[usize]| cols.iter().map(|&c| self.headers[c].clone()).collect::<Vec<_>>();
        let n = self.rows.len();
        let mut cat = Vec::with_capacity(n * categorical.len());
        for rec in &self.rows {
            cat.extend(categorical.iter().map(|&c| rec.get(c).unwrap_or("").to_string()));
        }
        let columns = numerical.iter().map(|&c| self.numeric(c)).collect::<Result<Vec<_>>>()?;
        let mut num = Vec::with_capacity(n * numerical.len());
        for r in 0..n {
            num.extend(columns.iter().map(|col| col[r]));
        }
        let label_names: Vec<String> = self
            .rows
            .iter()
            .map(|rec| rec.get(label).unwrap_or("").to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, usize> = label_names.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let labels = self.rows.iter().map(|rec| index[rec.get(label).unwrap_or("")]).collect();
        Ok(RawTable {
            categorical_names: names(categorical),
            numerical_names: names(numerical),
            label_names,
            categorical: cat,
            numerical: num,
            labels,
        })
    }
}

/// Reads a CSV, deciding column kinds from `hints` and the cell contents.
pub fn read_raw(path: &Path, label_column: &str, hints: &SchemaHints) -> Result<RawTable> {
    let table = read_table(path)?;
    let label = table.column(label_column)?;
    let explicit = hints.kinds()?;
    for (name, kind) in &explicit {
        // presets may name identifier columns a given export lacks
        if *kind != Kind::Drop && name != label_column {
            table.column(name)?;
        }
    }
    let (mut categorical, mut numerical) = (Vec::new(), Vec::new());
    for (col, header) in table.headers.iter().enumerate() {
        if col == label {
            continue;
        }
        let kind = match explicit.iter().find(|(n, _)| n == header) {
            Some((_, k)) => *k,
            None if table.rows.iter().all(|r| parse_finite(r.get(col).unwrap_or("")).is_some()) => Kind::Numerical,
            None => Kind::Categorical,
        };
        match kind {
            Kind::Categorical => categorical.push(col),
            Kind::Numerical => numerical.push(col),
            Kind::Drop => {}
        }
    }
    if categorical.is_empty() && numerical.is_empty() {
        return Err(DataError::Invalid("no feature columns besides the label".to_string()).into());
    }
    log::info!(
        "{}: {} rows, {} categorical and {} numerical columns",
        path.display(),
        table.rows.len(),
        categorical.len(),
        numerical.len()
    );
    table.to_raw(label, &categorical, &numerical)
}

/// Reads a CSV laid out for an existing schema and encodes it. Every schema
/// field must be present; other columns are ignored.
pub fn read_with_schema(path: &Path, label_column: &str, schema: &FeatureSchema) -> Result<Dataset> {
    let table = read_table(path)?;
    let label = table.column(label_column)?;
    let present: BTreeSet<&str> = table.headers.iter().map(String::as_str).collect();
    let missing: Vec<String> = schema
        .field_names()
        .filter(|f| !present.contains(f))
        .map(|f| format!("field `{f}` missing from {}", path.display()))
        .collect();
    if !missing.is_empty() {
        let known: BTreeSet<&str> = schema.field_names().collect();
        let mut diff = missing;
        diff.extend(
            table
                .headers
                .iter()
                .filter(|h| h.as_str() != label_column && !known.contains(h.as_str()))
                .map(|h| format!("column `{h}` not in schema")),
        );
        return Err(DataError::SchemaMismatch(diff).into());
    }
    let cols = |names: Vec<&str>| names.into_iter().map(|n| table.column(n)).collect::<Result<Vec<_>>>();
    let categorical = cols(schema.categorical.iter().map(|f| f.name.as_str()).collect())?;
    let numerical = cols(schema.numerical.iter().map(|f| f.name.as_str()).collect())?;
    let raw = table.to_raw(label, &categorical, &numerical)?;
    Ok(schema.encode(&raw)?)
}

/// Writes `raw` as CSV: categorical columns, numerical columns, then the
/// label under [`LABEL_COLUMN`].
pub fn write_csv(raw: &RawTable, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let header: Vec<&str> = raw
        .categorical_names
        .iter()
        .chain(&raw.numerical_names)
        .map(String::as_str)
        .chain([LABEL_COLUMN])
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    let (c, m) = (raw.categorical_names.len(), raw.numerical_names.len());
    let mut record = Vec::with_capacity(c + m + 1);
    for r in 0..raw.n_rows() {
        record.clear();
        record.extend(raw.categorical[r * c..(r + 1) * c].iter().cloned());
        record.extend(raw.numerical[r * m..(r + 1) * m].iter().map(|v| v.to_string()));
        record.push(raw.label_names[raw.labels[r]].clone());
        w.write_record(&record).map_err(csv_err)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    inner.flush().map_err(Error::io(path))
}
