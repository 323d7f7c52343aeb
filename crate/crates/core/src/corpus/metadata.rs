use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Catalogue entry for one artwork.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub object_id: String,
    pub title: String,
    #[serde(default)]
    pub painter: String,
    #[serde(default)]
    pub format: String,
    #[serde(default)]
    pub year: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetadataFormat {
    Csv,
    Jsonl,
}

/// Non-fatal problem found while parsing a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub object_id: String,
    pub message: String,
}

pub const MIN_YEAR: i32 = 1000;
pub const MAX_YEAR: i32 = 2100;

/// Accepts exactly four ASCII digits within `MIN_YEAR..=MAX_YEAR`.
pub fn parse_year(cell: &str) -> Option<i32> {
    let cell = cell.trim();
    if cell.len() != 4 || !cell.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: i32 = cell.parse().ok()?;
    (MIN_YEAR..=MAX_YEAR).contains(&year).then_some(year)
}

// Rows are read with the year as text so that malformed years degrade to a
// warning rather than failing the whole file.
#[derive(Deserialize)]
struct RawRow {
    object_id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    painter: String,
    #[serde(default)]
    format: String,
    #[serde(default, deserialize_with = "year_cell")]
    year: String,
}

fn year_cell<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    Ok(match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    })
}

/// Parses a metadata catalogue. Returns the records in input order together
/// with the warnings raised for unusable year cells.
pub fn parse_metadata<R: Read>(
    stream: R,
    format: MetadataFormat,
) -> Result<(Vec<MetadataRecord>, Vec<ParseWarning>), CorpusError> {
    let rows = match format {
        MetadataFormat::Csv => read_csv(stream)?,
        MetadataFormat::Jsonl => read_jsonl(stream)?,
    };

    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(rows.len());
    let mut warnings = Vec::new();
    for (line, row) in rows {
        let object_id = row.object_id.trim().to_string();
        if object_id.is_empty() {
            return Err(CorpusError::MalformedRecord { line, message: "empty object_id".into() });
        }
        if !seen.insert(object_id.clone()) {
            return Err(CorpusError::DuplicateObjectId { line, object_id });
        }
        let year = parse_year(&row.year);
        if year.is_none() {
            let message = if row.year.trim().is_empty() {
                "year missing".to_string()
            } else {
                format!("unusable year {:?}", row.year)
            };
            warnings.push(ParseWarning { line, object_id: object_id.clone(), message });
        }
        records.push(MetadataRecord {
            object_id,
            title: row.title,
            painter: row.painter.trim().to_string(),
            format: row.format,
            year,
        });
    }
    Ok((records, warnings))
}

fn read_csv<R: Read>(stream: R) -> Result<Vec<(usize, RawRow)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(stream);
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::UnreadableStream(e.to_string()))?
        .clone();
    if !headers.iter().any(|h| h.trim() == "object_id") {
        return Err(CorpusError::UnreadableStream("CSV header lacks an object_id column".into()));
    }
    let mut rows = Vec::new();
    for result in reader.deserialize::<RawRow>() {
        match result {
            Ok(row) => rows.push((rows.len() + 2, row)),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                return Err(match e.kind() {
                    csv::ErrorKind::Io(_) | csv::ErrorKind::Utf8 { .. } => {
                        CorpusError::UnreadableStream(e.to_string())
                    }
                    _ => CorpusError::MalformedRecord { line, message: e.to_string() },
                });
            }
        }
    }
    Ok(rows)
}

fn read_jsonl<R: Read>(stream: R) -> Result<Vec<(usize, RawRow)>, CorpusError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(stream).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::UnreadableStream(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: RawRow = serde_json::from_str(&line)
            .map_err(|e| CorpusError::MalformedRecord { line: i + 1, message: e.to_string() })?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}
