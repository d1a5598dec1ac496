//! Confidence files: line-delimited `{id, confidences[]}` records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::ConfidenceSet;
use crate::io::{format_error, numbered_lines, read_file, write_file};
use crate::scalar::{cast, Scalar};
use crate::Result;

#[derive(Debug, Serialize, Deserialize)]
struct ConfidenceRecord {
    id: String,
    confidences: Vec<f64>,
}

/// Loads and validates a confidence file. Values must sum to 1 within the
/// ingestion tolerance (they are renormalized); duplicate ids are rejected.
pub fn load_confidences<S: Scalar>(path: &Path) -> Result<BTreeMap<String, ConfidenceSet<S>>> {
    let text = read_file(path)?;
    let mut out = BTreeMap::new();
    for (line_no, line) in numbered_lines(&text) {
        let record: ConfidenceRecord = serde_json::from_str(line)
            .map_err(|e| format_error(path, line_no, format!("bad confidence record: {e}")))?;
        if out.contains_key(&record.id) {
            return Err(format_error(path, line_no, format!("duplicate id {:?}", record.id)));
        }
        let values: Vec<S> = record.confidences.iter().map(|&v| cast::<S, _>(v)).collect();
        let set = ConfidenceSet::new(record.id.clone(), values)
            .map_err(|e| format_error(path, line_no, e.to_string()))?;
        out.insert(record.id, set);
    }
    Ok(out)
}

/// Writes confidence sets in the same line-delimited layout the loader reads.
pub fn write_confidences<'a, S, I>(path: &Path, sets: I) -> Result<usize>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ConfidenceSet<S>>,
{
    let mut out = String::new();
    let mut written = 0;
    for set in sets {
        let record = ConfidenceRecord {
            id: set.instance_id().to_string(),
            confidences: set.values().iter().map(|v| v.to_f64().expect("finite confidence")).collect(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
        written += 1;
    }
    write_file(path, out.as_bytes())?;
    Ok(written)
}
