//! Benchmark ingestion: four native multi-choice layouts plus the canonical
//! line-delimited format this pipeline round-trips through.
//!
//! Native files are JSON-lines in each benchmark's published layout. Answer
//! keys are taken from an inline `label` field when present, otherwise from
//! the sibling labels file that the official distributions ship
//! (`dev.jsonl` -> `dev-labels.lst`, one label per line).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{Benchmark, Instance, Split};
use crate::error::Error;
use crate::io::{format_error, numbered_lines, read_file, write_file};
use crate::Result;

pub const BENCHMARK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Anli,
    Hellaswag,
    Piqa,
    Socialiqa,
    Canonical,
}

impl BenchmarkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkKind::Anli => "anli",
            BenchmarkKind::Hellaswag => "hellaswag",
            BenchmarkKind::Piqa => "piqa",
            BenchmarkKind::Socialiqa => "socialiqa",
            BenchmarkKind::Canonical => "canonical",
        }
    }
}

impl std::fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anli" => Ok(BenchmarkKind::Anli),
            "hellaswag" => Ok(BenchmarkKind::Hellaswag),
            "piqa" => Ok(BenchmarkKind::Piqa),
            "socialiqa" => Ok(BenchmarkKind::Socialiqa),
            "canonical" => Ok(BenchmarkKind::Canonical),
            other => Err(Error::InvalidParams(format!(
                "unknown benchmark kind {other:?} (expected anli, hellaswag, piqa, socialiqa, or canonical)"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalHeader {
    format: String,
    version: u32,
    name: String,
    split: Split,
    cardinality: usize,
}

/// Parses a benchmark file in the declared layout into canonical instances.
pub fn parse_benchmark(path: &Path, kind: BenchmarkKind) -> Result<Benchmark> {
    let text = read_file(path)?;
    match kind {
        BenchmarkKind::Canonical => parse_canonical(path, &text),
        native => parse_native(path, &text, native),
    }
}

/// Writes a benchmark in the canonical layout: a header line with the
/// benchmark metadata, then one instance record per line.
pub fn write_benchmark(path: &Path, benchmark: &Benchmark) -> Result<()> {
    let mut out = String::new();
    let header = CanonicalHeader {
        format: "benchmark".into(),
        version: BENCHMARK_FORMAT_VERSION,
        name: benchmark.name.clone(),
        split: benchmark.split,
        cardinality: benchmark.cardinality,
    };
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for instance in &benchmark.instances {
        out.push_str(&serde_json::to_string(instance)?);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

fn parse_canonical(path: &Path, text: &str) -> Result<Benchmark> {
    let mut lines = numbered_lines(text);
    let (line_no, header_line) = lines
        .next()
        .ok_or_else(|| format_error(path, 1, "empty benchmark file"))?;
    let header: CanonicalHeader = serde_json::from_str(header_line)
        .map_err(|e| format_error(path, line_no, format!("bad header: {e}")))?;
    if header.format != "benchmark" {
        return Err(format_error(path, line_no, format!("not a benchmark file (format {:?})", header.format)));
    }
    if header.version != BENCHMARK_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: header.version,
            supported: BENCHMARK_FORMAT_VERSION,
        });
    }
    let mut instances = Vec::new();
    for (line_no, line) in lines {
        let instance: Instance = serde_json::from_str(line)
            .map_err(|e| format_error(path, line_no, format!("bad instance record: {e}")))?;
        instance
            .validate()
            .map_err(|e| format_error(path, line_no, e.to_string()))?;
        instances.push(instance);
    }
    let benchmark = Benchmark::new(header.name, header.split, instances)?;
    if benchmark.cardinality != header.cardinality {
        return Err(format_error(
            path,
            1,
            format!(
                "header cardinality {} does not match instances ({})",
                header.cardinality, benchmark.cardinality
            ),
        ));
    }
    Ok(benchmark)
}

/// The sibling labels file used by the official distributions:
/// `dev.jsonl` -> `dev-labels.lst`.
fn sidecar_labels(path: &Path) -> Result<Option<Vec<String>>> {
    let stem = match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => stem,
        None => return Ok(None),
    };
    let candidate = path.with_file_name(format!("{stem}-labels.lst"));
    if !candidate.exists() {
        return Ok(None);
    }
    let text = read_file(&candidate)?;
    Ok(Some(text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect()))
}

struct NativeRecord {
    prompt: String,
    choices: Vec<String>,
    id: Option<String>,
    inline_label: Option<i64>,
}

fn get_str<'v>(record: &'v Value, field: &str) -> Option<&'v str> {
    record.get(field).and_then(Value::as_str)
}

fn require_str(path: &Path, line: usize, record: &Value, field: &str) -> Result<String> {
    get_str(record, field)
        .map(str::to_string)
        .ok_or_else(|| format_error(path, line, format!("missing or non-string field {field:?}")))
}

fn extract_native(path: &Path, line: usize, record: &Value, kind: BenchmarkKind) -> Result<NativeRecord> {
    match kind {
        BenchmarkKind::Anli => Ok(NativeRecord {
            prompt: format!(
                "{} {}",
                require_str(path, line, record, "obs1")?,
                require_str(path, line, record, "obs2")?
            ),
            choices: vec![
                require_str(path, line, record, "hyp1")?,
                require_str(path, line, record, "hyp2")?,
            ],
            id: get_str(record, "story_id").map(str::to_string),
            inline_label: record.get("label").and_then(Value::as_i64),
        }),
        BenchmarkKind::Hellaswag => {
            let endings = record
                .get("endings")
                .and_then(Value::as_array)
                .ok_or_else(|| format_error(path, line, "missing endings array"))?;
            let mut choices = Vec::with_capacity(endings.len());
            for (i, ending) in endings.iter().enumerate() {
                choices.push(
                    ending
                        .as_str()
                        .map(str::to_string)
                        .ok_or_else(|| format_error(path, line, format!("ending {i} is not a string")))?,
                );
            }
            Ok(NativeRecord {
                prompt: require_str(path, line, record, "ctx")?,
                choices,
                id: record.get("ind").and_then(Value::as_i64).map(|i| format!("hellaswag-{i}")),
                inline_label: record.get("label").and_then(Value::as_i64),
            })
        }
        BenchmarkKind::Piqa => Ok(NativeRecord {
            prompt: require_str(path, line, record, "goal")?,
            choices: vec![
                require_str(path, line, record, "sol1")?,
                require_str(path, line, record, "sol2")?,
            ],
            id: get_str(record, "id").map(str::to_string),
            inline_label: record.get("label").and_then(Value::as_i64),
        }),
        BenchmarkKind::Socialiqa => Ok(NativeRecord {
            prompt: format!(
                "{} {}",
                require_str(path, line, record, "context")?,
                require_str(path, line, record, "question")?
            ),
            choices: vec![
                require_str(path, line, record, "answerA")?,
                require_str(path, line, record, "answerB")?,
                require_str(path, line, record, "answerC")?,
            ],
            id: get_str(record, "id").map(str::to_string),
            inline_label: record.get("label").and_then(Value::as_i64),
        }),
        BenchmarkKind::Canonical => unreachable!("canonical handled separately"),
    }
}

/// Converts a raw label to a choice index. aNLI and SocialIQA number
/// choices from 1; HellaSwag and PIQA from 0.
fn answer_index(kind: BenchmarkKind, label: i64, cardinality: usize) -> Option<usize> {
    let index = match kind {
        BenchmarkKind::Anli | BenchmarkKind::Socialiqa => label.checked_sub(1)?,
        _ => label,
    };
    if index >= 0 && (index as usize) < cardinality {
        Some(index as usize)
    } else {
        None
    }
}

fn parse_native(path: &Path, text: &str, kind: BenchmarkKind) -> Result<Benchmark> {
    let labels = sidecar_labels(path)?;
    let mut instances = Vec::new();
    for (record_no, (line_no, line)) in numbered_lines(text).enumerate() {
        let record: Value = serde_json::from_str(line)
            .map_err(|e| format_error(path, line_no, format!("bad JSON record: {e}")))?;
        let native = extract_native(path, line_no, &record, kind)?;

        let raw_label = match native.inline_label {
            Some(label) => label,
            None => {
                let sidecar = labels.as_ref().and_then(|l| l.get(record_no)).ok_or_else(|| {
                    format_error(
                        path,
                        line_no,
                        "no label: record has no inline `label` and no sidecar labels file entry",
                    )
                })?;
                sidecar.parse::<i64>().map_err(|_| {
                    format_error(path, line_no, format!("sidecar label {sidecar:?} is not an integer"))
                })?
            }
        };
        let answer = answer_index(kind, raw_label, native.choices.len()).ok_or_else(|| {
            format_error(path, line_no, format!("label {raw_label} out of range for {} choices", native.choices.len()))
        })?;

        let id = native.id.unwrap_or_else(|| format!("{kind}-{record_no}"));
        let instance = Instance::risk_free(id, native.prompt, native.choices, answer)
            .map_err(|e| format_error(path, line_no, e.to_string()))?;
        instances.push(instance);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("benchmark");
    Benchmark::new(format!("{kind}:{stem}"), Split::Validation, instances)
}
