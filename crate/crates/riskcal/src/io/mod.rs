//! All file and network I/O: benchmark ingestion, confidence and embedding
//! files, decision-dataset persistence, rule artifacts, reports and curves,
//! and confidence elicitation from chat-completion endpoints.
//!
//! Readers reject structural violations instead of repairing them; writers
//! produce files their paired readers accept. Line-delimited formats carry a
//! one-line self-describing header where round-tripping needs it.

pub mod artifacts;
pub mod benchmarks;
pub mod confidences;
pub mod datasets;
pub mod elicit;
pub mod embeddings;
pub(crate) mod http;
pub mod reports;

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::Result;

pub(crate) fn path_str(path: &Path) -> String {
    path.display().to_string()
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File { path: path_str(path), source })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|source| Error::File { path: path_str(path), source })?;
        }
    }
    let mut file =
        fs::File::create(path).map_err(|source| Error::File { path: path_str(path), source })?;
    file.write_all(contents).map_err(|source| Error::File { path: path_str(path), source })?;
    Ok(())
}

pub(crate) fn format_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::FileFormat { path: path_str(path), line, reason: reason.into() }
}

/// Non-empty lines with their 1-based line numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            None
        } else {
            Some((i + 1, trimmed))
        }
    })
}

/// SHA-256 hex digest of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// SHA-256 hex digest of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::File { path: path_str(path), source })?;
    Ok(sha256_hex(&bytes))
}
