//! Decision-dataset files: a header line describing the construction, then
//! one `{label, instance}` record per line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{format_error, numbered_lines, read_file, write_file};
use crate::rif::{DatasetRif, DecisionDataset, DecisionItem};
use crate::Result;

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    source_benchmark: String,
    rif: DatasetRif,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_fingerprint: Option<String>,
}

pub fn write_decision_dataset(
    path: &Path,
    dataset: &DecisionDataset,
    config_fingerprint: Option<&str>,
) -> Result<()> {
    let header = DatasetHeader {
        format: "decision-dataset".into(),
        version: DATASET_FORMAT_VERSION,
        source_benchmark: dataset.source_benchmark.clone(),
        rif: dataset.rif,
        seed: dataset.seed,
        config_fingerprint: config_fingerprint.map(str::to_string),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for item in &dataset.items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn load_decision_dataset(path: &Path) -> Result<DecisionDataset> {
    let text = read_file(path)?;
    let mut lines = numbered_lines(&text);
    let (line_no, header_line) =
        lines.next().ok_or_else(|| format_error(path, 1, "empty dataset file"))?;
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| format_error(path, line_no, format!("bad header: {e}")))?;
    if header.format != "decision-dataset" {
        return Err(format_error(
            path,
            line_no,
            format!("not a decision dataset (format {:?})", header.format),
        ));
    }
    if header.version != DATASET_FORMAT_VERSION {
        return Err(crate::error::Error::UnsupportedVersion {
            found: header.version,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    let mut items = Vec::new();
    for (line_no, line) in lines {
        let item: DecisionItem = serde_json::from_str(line)
            .map_err(|e| format_error(path, line_no, format!("bad item record: {e}")))?;
        if item.label > 1 {
            return Err(format_error(path, line_no, format!("label {} is not 0 or 1", item.label)));
        }
        item.instance
            .validate()
            .map_err(|e| format_error(path, line_no, e.to_string()))?;
        items.push(item);
    }
    if items.is_empty() {
        return Err(format_error(path, 1, "dataset has a header but no items"));
    }
    Ok(DecisionDataset {
        source_benchmark: header.source_benchmark,
        rif: header.rif,
        seed: header.seed,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Benchmark, Instance, Split};
    use crate::rif::{build_decision_set, RifKind};
    use tempfile::tempdir;

    #[test]
    fn dataset_round_trip() {
        let instances = (0..4)
            .map(|i| {
                Instance::risk_free(
                    format!("i{i}"),
                    format!("prompt {i}"),
                    vec![format!("yes {i}"), format!("no {i}")],
                    0,
                )
                .unwrap()
            })
            .collect();
        let bench = Benchmark::new("rt", Split::Train, instances).unwrap();
        let dataset = build_decision_set(&bench, RifKind::Nra, 3).unwrap();

        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        write_decision_dataset(&path, &dataset, Some("fp123")).unwrap();
        let loaded = load_decision_dataset(&path).unwrap();
        assert_eq!(loaded, dataset);
    }

    #[test]
    fn bad_label_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"format":"decision-dataset","version":1,"source_benchmark":"x","rif":"NQ","seed":1}"#,
                "\n",
                r#"{"instance":{"id":"a","prompt":"p","choices":["x","y"],"answer_index":0,"ambiguous":false},"label":7}"#,
                "\n",
            ),
        )
        .unwrap();
        assert!(load_decision_dataset(&path).is_err());
    }
}
