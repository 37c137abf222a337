//! On-disk dataset layout: one JSON file per entry.

use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::{CorpusError, DrbMlEntry};

static ENTRY_FILE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^DRB-ML-\d+\.json$").unwrap());

/// File name for an entry id, zero-padded to three digits.
pub fn entry_filename(id: u32) -> String {
    format!("DRB-ML-{id:03}.json")
}

/// Writes one pretty-printed JSON file per entry into `dir`.
pub fn write_dataset(entries: &[DrbMlEntry], dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let path = dir.join(entry_filename(entry.id));
        let mut json = serde_json::to_string_pretty(entry).map_err(|source| CorpusError::Json {
            path: path.clone(),
            source,
        })?;
        json.push('\n');
        fs::write(&path, json).map_err(|source| CorpusError::Io { path, source })?;
    }
    Ok(())
}

/// Loads every `DRB-ML-*.json` file in `dir`, sorted by entry id.
pub fn load_dataset(dir: &Path) -> Result<Vec<DrbMlEntry>, CorpusError> {
    let read_dir = fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for item in read_dir {
        let item = item.map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = item.file_name().to_string_lossy().into_owned();
        if !ENTRY_FILE.is_match(&name) {
            continue;
        }
        let path = item.path();
        let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let entry: DrbMlEntry =
            serde_json::from_str(&text).map_err(|source| CorpusError::Json { path, source })?;
        entries.push(entry);
    }
    entries.sort_by_key(|e| e.id);
    for window in entries.windows(2) {
        if window[0].id == window[1].id {
            return Err(CorpusError::DuplicateId { id: window[0].id });
        }
    }
    Ok(entries)
}
