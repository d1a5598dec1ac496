//! Embedding sources: precomputed files keyed by text digest, and an
//! embeddings endpoint client.
//!
//! Files are line-delimited with a `{dimension}` header; rows hold the
//! SHA-256 digest of the text (so arbitrary prompt text needs no escaping)
//! and its unit vector.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::Embedder;
use crate::io::http::{build_client, post_json, resolve_token, RetryPolicy};
use crate::io::{format_error, numbered_lines, read_file, sha256_hex, write_file};
use crate::scalar::{cast, Scalar};
use crate::Result;

pub const EMBEDDINGS_FORMAT_VERSION: u32 = 1;

/// Content digest used as the embedding key for a text.
pub fn text_digest(text: &str) -> String {
    sha256_hex(text.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingsHeader {
    format: String,
    version: u32,
    dimension: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingRow {
    digest: String,
    vector: Vec<f64>,
}

/// Embedder backed by a precomputed file; errors on any text that was not
/// precomputed rather than inventing a vector.
pub struct FileEmbeddings<S: Scalar> {
    dimension: usize,
    vectors: HashMap<String, Vec<S>>,
    label: String,
}

impl<S: Scalar> FileEmbeddings<S> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl<S: Scalar> Embedder<S> for FileEmbeddings<S> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<S>> {
        let digest = text_digest(text);
        self.vectors
            .get(&digest)
            .cloned()
            .ok_or(Error::MissingEmbedding { digest })
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Loads a precomputed embeddings file, enforcing one dimension and unit
/// norms throughout.
pub fn load_embeddings<S: Scalar>(path: &Path) -> Result<FileEmbeddings<S>> {
    let text = read_file(path)?;
    let mut lines = numbered_lines(&text);
    let (line_no, header_line) =
        lines.next().ok_or_else(|| format_error(path, 1, "empty embeddings file"))?;
    let header: EmbeddingsHeader = serde_json::from_str(header_line)
        .map_err(|e| format_error(path, line_no, format!("bad header: {e}")))?;
    if header.format != "embeddings" {
        return Err(format_error(path, line_no, format!("not an embeddings file (format {:?})", header.format)));
    }
    if header.version != EMBEDDINGS_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: header.version,
            supported: EMBEDDINGS_FORMAT_VERSION,
        });
    }
    if header.dimension == 0 {
        return Err(format_error(path, line_no, "dimension must be positive"));
    }

    let mut vectors = HashMap::new();
    for (line_no, line) in lines {
        let row: EmbeddingRow = serde_json::from_str(line)
            .map_err(|e| format_error(path, line_no, format!("bad embedding row: {e}")))?;
        if row.vector.len() != header.dimension {
            return Err(format_error(
                path,
                line_no,
                format!("vector has dimension {}, header says {}", row.vector.len(), header.dimension),
            ));
        }
        let norm: f64 = row.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(format_error(
                path,
                line_no,
                format!("vector norm {norm} is not 1 within 1e-6"),
            ));
        }
        if vectors.contains_key(&row.digest) {
            return Err(format_error(path, line_no, format!("duplicate digest {}", row.digest)));
        }
        vectors.insert(row.digest, row.vector.iter().map(|&v| cast::<S, _>(v)).collect());
    }
    let label = format!(
        "file:{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("embeddings")
    );
    Ok(FileEmbeddings { dimension: header.dimension, vectors, label })
}

/// Writes an embeddings file covering `texts` using `embedder` to produce
/// the vectors (texts with equal digests are written once). Returns the row
/// count.
pub fn write_embeddings_for_texts<'a, S, I>(
    path: &Path,
    texts: I,
    embedder: &dyn Embedder<S>,
) -> Result<usize>
where
    S: Scalar,
    I: IntoIterator<Item = &'a str>,
{
    let header = EmbeddingsHeader {
        format: "embeddings".into(),
        version: EMBEDDINGS_FORMAT_VERSION,
        dimension: embedder.dimension(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    let mut seen = std::collections::HashSet::new();
    let mut rows = 0;
    for text in texts {
        let digest = text_digest(text);
        if !seen.insert(digest.clone()) {
            continue;
        }
        let vector = embedder.embed(text)?;
        let row = EmbeddingRow {
            digest,
            vector: vector.iter().map(|v| v.to_f64().expect("finite embedding")).collect(),
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
        rows += 1;
    }
    write_file(path, out.as_bytes())?;
    Ok(rows)
}

/// Configuration for an embeddings endpoint (OpenAI-compatible `/embeddings`
/// route). The auth token is read from the named environment variable at
/// request time and never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingEndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub auth_token_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_max_attempts() -> u32 {
    3
}

/// Embedder backed by an HTTP endpoint. Vectors are L2-normalized on
/// receipt; the dimension is pinned by the first reply and enforced after.
/// Requests go out one at a time through the shared client.
pub struct HttpEmbedder<S: Scalar> {
    config: EmbeddingEndpointConfig,
    client: reqwest::blocking::Client,
    dimension: OnceLock<usize>,
    _marker: std::marker::PhantomData<fn() -> S>,
}

impl<S: Scalar> HttpEmbedder<S> {
    /// Builds the embedder and probes the endpoint with the empty string,
    /// which both checks connectivity and pins the dimension (NQ-injected
    /// prompts are empty, so the endpoint must handle that text anyway).
    pub fn connect(config: EmbeddingEndpointConfig) -> Result<Self> {
        let client = build_client(config.timeout_secs)?;
        let embedder = HttpEmbedder {
            config,
            client,
            dimension: OnceLock::new(),
            _marker: std::marker::PhantomData,
        };
        embedder.embed("")?;
        Ok(embedder)
    }

    fn request_vector(&self, text: &str) -> Result<Vec<f64>> {
        let url = format!("{}/embeddings", self.config.base_url.trim_end_matches('/'));
        let token = resolve_token(&self.config.auth_token_env, &url)?;
        let body = serde_json::json!({ "model": self.config.model, "input": text });
        let policy = RetryPolicy { max_attempts: self.config.max_attempts, ..RetryPolicy::default() };
        let reply = post_json(&self.client, &url, token.as_deref(), &body, &policy)?;
        let vector = reply
            .get("data")
            .and_then(|d| d.get(0))
            .and_then(|d| d.get("embedding"))
            .and_then(|e| e.as_array())
            .ok_or_else(|| Error::Transport {
                attempts: 1,
                reason: "reply missing data[0].embedding".into(),
            })?;
        vector
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| Error::Transport {
                    attempts: 1,
                    reason: "embedding contained a non-numeric entry".into(),
                })
            })
            .collect()
    }
}

impl<S: Scalar> Embedder<S> for HttpEmbedder<S> {
    fn dimension(&self) -> usize {
        *self.dimension.get().expect("connect() pins the dimension")
    }

    fn embed(&self, text: &str) -> Result<Vec<S>> {
        let raw = self.request_vector(text)?;
        let pinned = *self.dimension.get_or_init(|| raw.len());
        if raw.len() != pinned {
            return Err(Error::DimensionMismatch { expected: pinned, got: raw.len() });
        }
        let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroNormVector);
        }
        Ok(raw.iter().map(|&v| cast::<S, _>(v / norm)).collect())
    }

    fn describe(&self) -> String {
        format!("http:{}", self.config.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TrigramEmbedder;
    use tempfile::tempdir;

    #[test]
    fn file_round_trip_and_missing_text() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let trigram = TrigramEmbedder::new(16).unwrap();
        let texts = ["hello world", "speak friend", ""];
        let rows = write_embeddings_for_texts::<f64, _>(
            &path,
            texts.iter().copied(),
            &trigram,
        )
        .unwrap();
        assert_eq!(rows, 3);

        let file = load_embeddings::<f64>(&path).unwrap();
        assert_eq!(file.dimension(), 16);
        let direct: Vec<f64> = trigram.embed("hello world").unwrap();
        assert_eq!(file.embed("hello world").unwrap(), direct);

        let err = file.embed("never stored").unwrap_err();
        match err {
            Error::MissingEmbedding { digest } => {
                assert_eq!(digest, text_digest("never stored"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn mixed_dimensions_and_non_unit_rows_rejected() {
        let dir = tempdir().unwrap();
        let mixed = dir.path().join("mixed.jsonl");
        std::fs::write(
            &mixed,
            concat!(
                r#"{"format":"embeddings","version":1,"dimension":2}"#,
                "\n",
                r#"{"digest":"d1","vector":[1.0,0.0]}"#,
                "\n",
                r#"{"digest":"d2","vector":[1.0,0.0,0.0]}"#,
                "\n",
            ),
        )
        .unwrap();
        assert!(load_embeddings::<f64>(&mixed).is_err());

        let non_unit = dir.path().join("nonunit.jsonl");
        std::fs::write(
            &non_unit,
            concat!(
                r#"{"format":"embeddings","version":1,"dimension":2}"#,
                "\n",
                r#"{"digest":"d1","vector":[2.0,0.0]}"#,
                "\n",
            ),
        )
        .unwrap();
        assert!(load_embeddings::<f64>(&non_unit).is_err());
    }
}
