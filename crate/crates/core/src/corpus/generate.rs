//! Writes `corpus/<size>/<config-id>.txt` and `corpus/<size>/manifest.jsonl`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::assemble::{assemble_haystack, Haystack, NeedlePosition, Slot};
use crate::corpus::config::{enumerate_configs, group_counts, ConfigGroup, HaystackConfig};
use crate::corpus::needles::NeedleSet;
use crate::corpus::pairs::make_contrastive_pairs;
use crate::corpus::pool::ArticlePool;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::util;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(flatten)]
    pub config: HaystackConfig,
    pub group: ConfigGroup,
    /// Path relative to the corpus root.
    pub text_file: String,
    pub text_sha256: String,
    pub slots: Vec<Slot>,
    pub needle_positions: [NeedlePosition; 2],
    pub total_english_words: usize,
}

impl ManifestEntry {
    fn from_haystack(haystack: &Haystack) -> Self {
        let id = haystack.config.id();
        Self {
            text_file: format!("{}/{id}.txt", haystack.config.size_budget),
            id,
            config: haystack.config.clone(),
            group: haystack.config.group(),
            text_sha256: util::sha256_hex(haystack.rendered_text.as_bytes()),
            slots: haystack.slots.clone(),
            needle_positions: haystack.needle_positions,
            total_english_words: haystack.total_english_words,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeSummary {
    pub size: usize,
    pub configs: usize,
    /// bilingual-conflicting, monolingual-conflicting,
    /// bilingual-non-conflicting, monolingual-non-conflicting
    pub groups: [usize; 4],
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub sizes: Vec<SizeSummary>,
    pub checksum: String,
}

pub fn manifest_path(corpus_dir: &Path, size: usize) -> PathBuf {
    corpus_dir.join(size.to_string()).join(MANIFEST_FILE)
}

/// Builds every haystack for every size and writes them under `corpus_dir`.
pub fn generate_corpus(
    corpus_dir: &Path,
    pool: &ArticlePool,
    needles: &NeedleSet,
    languages: &[LanguageCode],
    sizes: &[usize],
) -> Result<CorpusSummary> {
    if sizes.is_empty() {
        return Err(Error::Config("no haystack sizes requested".into()));
    }
    let sets = needles.value_sets();
    let mut summaries = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let configs = enumerate_configs(&sets, languages, size)?;
        let pairs = make_contrastive_pairs(&configs)?;
        let haystacks = configs
            .par_iter()
            .map(|config| assemble_haystack(config, pool, needles))
            .collect::<Result<Vec<_>>>()?;

        haystacks.par_iter().try_for_each(|haystack| {
            let path = corpus_dir
                .join(size.to_string())
                .join(format!("{}.txt", haystack.config.id()));
            util::write_atomic(&path, haystack.rendered_text.as_bytes())
        })?;

        let mut manifest = String::new();
        for haystack in &haystacks {
            manifest.push_str(&serde_json::to_string(&ManifestEntry::from_haystack(haystack))?);
            manifest.push('\n');
        }
        util::write_atomic(&manifest_path(corpus_dir, size), manifest.as_bytes())?;
        log::info!("size {size}: wrote {} haystacks", haystacks.len());

        summaries.push(SizeSummary {
            size,
            configs: configs.len(),
            groups: group_counts(&configs),
            pairs: pairs.len(),
        });
    }
    Ok(CorpusSummary {
        sizes: summaries,
        checksum: corpus_checksum(corpus_dir)?,
    })
}

pub fn load_manifest(corpus_dir: &Path, size: usize) -> Result<Vec<ManifestEntry>> {
    let path = manifest_path(corpus_dir, size);
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path,
            subcommand: "generate".into(),
        });
    }
    util::read_to_string(&path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| serde_json::from_str(line).map_err(Error::from))
        .collect()
}

/// Sizes present under a corpus directory, ascending.
pub fn corpus_sizes(corpus_dir: &Path) -> Result<Vec<usize>> {
    let entries = fs::read_dir(corpus_dir).map_err(|e| Error::io(corpus_dir, e))?;
    let mut sizes = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(corpus_dir, e))?;
        if let Ok(size) = entry.file_name().to_string_lossy().parse::<usize>() {
            if entry.path().join(MANIFEST_FILE).exists() {
                sizes.push(size);
            }
        }
    }
    sizes.sort_unstable();
    Ok(sizes)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// SHA-256 over every corpus file: relative path, length and bytes, in
/// sorted path order.
pub fn corpus_checksum(corpus_dir: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(corpus_dir, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for file in files {
        let rel = file
            .strip_prefix(corpus_dir)
            .unwrap_or(&file)
            .to_string_lossy()
            .replace('\\', "/");
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        hasher.update(rel.as_bytes());
        hasher.update([0]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
