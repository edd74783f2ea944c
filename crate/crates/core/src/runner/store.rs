use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::backends::{Origin, Usage};
use crate::corpus::HaystackConfig;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::runner::PromptMode;
use crate::util;

/// One prompt/response exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub run_id: String,
    pub config_id: String,
    #[serde(flatten)]
    pub config: HaystackConfig,
    pub prompt_lang: LanguageCode,
    pub backend_id: String,
    pub origin: Origin,
    pub mode: PromptMode,
    pub strict_format: bool,
    pub prompt_hash: String,
    pub response_text: Option<String>,
    #[serde(default)]
    pub usage: Option<Usage>,
    pub attempt_count: u32,
    pub started_ms: u64,
    pub finished_ms: u64,
    /// Transport failure after retries, if any.
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordKey {
    pub run_id: String,
    pub config_id: String,
    pub size: usize,
    pub prompt_lang: LanguageCode,
    pub backend_id: String,
}

impl QueryRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            run_id: self.run_id.clone(),
            config_id: self.config_id.clone(),
            size: self.config.size_budget,
            prompt_lang: self.prompt_lang.clone(),
            backend_id: self.backend_id.clone(),
        }
    }
}

/// Parses a JSONL store. A torn final line (no trailing newline) is the
/// residue of an interrupted append and is dropped; anything else that
/// fails to parse is corruption. Returns the records and the byte length
/// of the valid prefix.
fn parse_store(path: &Path, text: &str) -> Result<(Vec<QueryRecord>, usize)> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut valid_len = 0;
    for (index, line) in text.split_inclusive('\n').enumerate() {
        offset += line.len();
        let complete = line.ends_with('\n');
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            if complete {
                valid_len = offset;
            }
            continue;
        }
        if !complete {
            warn!("{}: dropping unterminated final line {}", path.display(), index + 1);
            break;
        }
        match serde_json::from_str::<QueryRecord>(body) {
            Ok(record) => {
                records.push(record);
                valid_len = offset;
            }
            Err(e) => {
                return Err(Error::StoreCorrupt {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((records, valid_len))
}

/// Reads every record of a store file (read-only).
pub fn load_records(path: &Path) -> Result<Vec<QueryRecord>> {
    let text = util::read_to_string(path)?;
    Ok(parse_store(path, &text)?.0)
}

/// Append-only JSON Lines store for one backend of one run.
#[derive(Debug)]
pub struct ResultStore {
    path: PathBuf,
    file: File,
    keys: HashSet<RecordKey>,
}

impl ResultStore {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut keys = HashSet::new();
        if path.exists() {
            let text = util::read_to_string(path)?;
            let (records, valid_len) = parse_store(path, &text)?;
            if valid_len < text.len() {
                let file = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                file.set_len(valid_len as u64).map_err(|e| Error::io(path, e))?;
            }
            keys.extend(records.iter().map(QueryRecord::key));
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            keys,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Writes the record as one line in a single write call. Returns false
    /// (and writes nothing) if the key is already stored.
    pub fn append(&mut self, record: &QueryRecord) -> Result<bool> {
        let key = record.key();
        if self.keys.contains(&key) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.keys.insert(key);
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompactStats {
    pub before: usize,
    pub after: usize,
}

/// Rewrites a store with duplicates removed (first occurrence wins) and
/// records sorted by key.
pub fn compact(path: &Path) -> Result<CompactStats> {
    let records = load_records(path)?;
    let before = records.len();
    let mut seen = HashSet::new();
    let mut kept: Vec<QueryRecord> = records
        .into_iter()
        .filter(|r| seen.insert(r.key()))
        .collect();
    kept.sort_by_key(QueryRecord::key);
    let mut out = String::new();
    for record in &kept {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    util::write_atomic(path, out.as_bytes())?;
    Ok(CompactStats {
        before,
        after: kept.len(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(config_id: &str, lang: &str) -> QueryRecord {
        let eng = LanguageCode::new("eng").unwrap();
        QueryRecord {
            run_id: "r1".into(),
            config_id: config_id.into(),
            config: HaystackConfig {
                category: 1,
                l1: eng.clone(),
                l2: eng,
                x1: "Delcroft".into(),
                x2: "Quellman".into(),
                y: "Cinderfax".into(),
                size_budget: 1000,
                seed: u64::MAX - 3,
            },
            prompt_lang: LanguageCode::new(lang).unwrap(),
            backend_id: "mock".into(),
            origin: Origin::West,
            mode: PromptMode::Chat,
            strict_format: true,
            prompt_hash: "00".into(),
            response_text: Some("John Delcroft".into()),
            usage: None,
            attempt_count: 1,
            started_ms: 1,
            finished_ms: 2,
            error: None,
        }
    }

    #[test]
    fn roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r1/mock.jsonl");
        {
            let mut store = ResultStore::open(&path).unwrap();
            assert!(store.append(&record("a", "eng")).unwrap());
            assert!(store.append(&record("a", "deu")).unwrap());
            assert!(!store.append(&record("a", "eng")).unwrap());
        }
        let store = ResultStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert!(store.contains(&record("a", "deu").key()));
        let loaded = load_records(&path).unwrap();
        assert_eq!(loaded, vec![record("a", "eng"), record("a", "deu")]);
    }

    #[test]
    fn torn_final_line_is_dropped_and_overwritten() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let full = serde_json::to_string(&record("a", "eng")).unwrap();
        let torn = &serde_json::to_string(&record("b", "eng")).unwrap()[..40];
        fs::write(&path, format!("{full}\n{torn}")).unwrap();
        let mut store = ResultStore::open(&path).unwrap();
        assert_eq!(store.len(), 1);
        store.append(&record("b", "eng")).unwrap();
        drop(store);
        assert_eq!(load_records(&path).unwrap().len(), 2);
    }

    #[test]
    fn malformed_middle_line_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let full = serde_json::to_string(&record("a", "eng")).unwrap();
        fs::write(&path, format!("{full}\n{{not json\n{full}\n")).unwrap();
        match ResultStore::open(&path).unwrap_err() {
            Error::StoreCorrupt { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn compaction_dedups_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let lines: Vec<String> = [("b", "eng"), ("a", "eng"), ("b", "eng")]
            .iter()
            .map(|(id, l)| serde_json::to_string(&record(id, l)).unwrap())
            .collect();
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        let stats = compact(&path).unwrap();
        assert_eq!(stats, CompactStats { before: 3, after: 2 });
        let ids: Vec<String> = load_records(&path).unwrap().into_iter().map(|r| r.config_id).collect();
        assert_eq!(ids, ["a", "b"]);
    }
}
