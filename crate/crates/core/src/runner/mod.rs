//! Prompt construction and the resumable query matrix.

mod prompt;
mod store;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use log::info;
use serde::Serialize;

use crate::backends::{Backend, BackendConfig, QueryRequest};
use crate::corpus::{ManifestEntry, NeedleSet};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::util;

pub use prompt::{build_prompt, Prompt, PromptMode};
pub use store::{compact, load_records, CompactStats, QueryRecord, RecordKey, ResultStore};

/// A configured backend together with its live client.
#[derive(Clone)]
pub struct RunTarget {
    pub config: BackendConfig,
    pub backend: Arc<dyn Backend>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub run_id: String,
    pub prompt_langs: Vec<LanguageCode>,
    pub strict_format: bool,
    /// In-flight requests per backend.
    pub parallel: usize,
    /// Stop after issuing this many new queries in total.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub planned: usize,
    pub skipped: usize,
    pub issued: usize,
    /// Issued queries whose transport failed after all retries.
    pub failed: usize,
}

pub fn store_path(run_dir: &Path, backend_id: &str) -> PathBuf {
    run_dir.join(format!("{backend_id}.jsonl"))
}

fn query_one(
    corpus_dir: &Path,
    entry: &ManifestEntry,
    needles: &NeedleSet,
    target: &RunTarget,
    prompt_lang: &LanguageCode,
    options: &RunOptions,
) -> Result<QueryRecord> {
    let text = util::read_to_string(&corpus_dir.join(&entry.text_file))?;
    let mode = if target.config.uses_completion_prompt() {
        PromptMode::Completion
    } else {
        PromptMode::Chat
    };
    let prompt = build_prompt(&text, &entry.config, needles, prompt_lang, mode, options.strict_format)?;
    let first_name = &needles.category(entry.config.category)?.first_name;
    let started_ms = util::unix_millis();
    let reply = target.backend.send(&QueryRequest {
        text: &prompt.text,
        config: &entry.config,
        first_name,
        prompt_lang,
    })?;
    Ok(QueryRecord {
        run_id: options.run_id.clone(),
        config_id: entry.id.clone(),
        config: entry.config.clone(),
        prompt_lang: prompt_lang.clone(),
        backend_id: target.config.id.clone(),
        origin: target.config.origin,
        mode,
        strict_format: options.strict_format,
        prompt_hash: util::sha256_hex(prompt.text.as_bytes()),
        response_text: reply.text,
        usage: reply.usage,
        attempt_count: reply.attempts,
        started_ms,
        finished_ms: util::unix_millis(),
        error: reply.error,
    })
}

/// Issues every (haystack, prompt language, backend) query not already in
/// the run's stores. Records are appended by a single writer per backend.
pub fn run_matrix(
    corpus_dir: &Path,
    haystacks: &[ManifestEntry],
    needles: &NeedleSet,
    targets: &[RunTarget],
    run_dir: &Path,
    options: &RunOptions,
) -> Result<RunStats> {
    if options.prompt_langs.is_empty() {
        return Err(Error::Config("no prompt languages given".into()));
    }
    let parallel = options.parallel.max(1);
    let mut stats = RunStats::default();
    let mut budget = options.limit.unwrap_or(usize::MAX);

    for target in targets {
        let mut store = ResultStore::open(&store_path(run_dir, &target.config.id))?;
        let mut tasks = Vec::new();
        for entry in haystacks {
            for lang in &options.prompt_langs {
                stats.planned += 1;
                let key = RecordKey {
                    run_id: options.run_id.clone(),
                    config_id: entry.id.clone(),
                    size: entry.config.size_budget,
                    prompt_lang: lang.clone(),
                    backend_id: target.config.id.clone(),
                };
                if store.contains(&key) {
                    stats.skipped += 1;
                } else {
                    tasks.push((entry, lang));
                }
            }
        }
        tasks.truncate(budget);
        budget -= tasks.len();
        info!(
            "{}: {} queries to issue, {} already stored",
            target.config.id,
            tasks.len(),
            store.len()
        );

        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let mut first_error = None;
        let (tx, rx) = mpsc::sync_channel::<Result<QueryRecord>>(parallel * 2);
        std::thread::scope(|scope| {
            for _ in 0..parallel.min(tasks.len()) {
                let tx = tx.clone();
                let (next, abort, tasks) = (&next, &abort, &tasks);
                scope.spawn(move || loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some((entry, lang)) = tasks.get(i) else { break };
                    let result = query_one(corpus_dir, entry, needles, target, lang, options);
                    if tx.send(result).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for message in rx {
                let outcome = message.and_then(|record| {
                    let failed = record.error.is_some();
                    store.append(&record)?;
                    Ok(failed)
                });
                match outcome {
                    Ok(failed) => {
                        stats.issued += 1;
                        stats.failed += usize::from(failed);
                        if stats.issued % 1000 == 0 {
                            info!("{} queries issued", stats.issued);
                        }
                    }
                    Err(e) => {
                        abort.store(true, Ordering::Relaxed);
                        first_error.get_or_insert(e);
                    }
                }
            }
        });
        if let Some(e) = first_error {
            return Err(e);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{mock_answer, BackendKind, MockBackend, MockBiasSpec, Origin};
    use crate::corpus::{generate_corpus, load_manifest, ArticlePool};

    fn data(rel: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
    }

    fn mock_target(id: &str, spec: MockBiasSpec) -> RunTarget {
        let config = BackendConfig {
            id: id.into(),
            kind: BackendKind::MockBiased,
            endpoint_url: None,
            model: String::new(),
            decoding: Default::default(),
            rate_limit: None,
            retry: Default::default(),
            origin: Origin::East,
            mock: Some(spec.clone()),
        };
        RunTarget {
            backend: Arc::new(MockBackend::new(id.into(), spec)),
            config,
        }
    }

    #[test]
    fn records_match_direct_mock_calls_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let needles = NeedleSet::load(&data("needles.toml")).unwrap();
        let pool = ArticlePool::load(&data("pool")).unwrap();
        let langs = vec![LanguageCode::new("eng").unwrap(), LanguageCode::new("rus").unwrap()];
        let corpus = dir.path().join("corpus");
        generate_corpus(&corpus, &pool, &needles, &langs, &[1000]).unwrap();
        let manifest = load_manifest(&corpus, 1000).unwrap();
        let two: Vec<_> = manifest
            .iter()
            .filter(|e| e.config.is_conflicting() && !e.config.is_monolingual())
            .take(2)
            .cloned()
            .collect();

        let mut spec = MockBiasSpec::unbiased(9).with_bias("eng", "rus", 0.7);
        spec.detection_rate = 0.2;
        let target = mock_target("m", spec.clone());
        let options = RunOptions {
            run_id: "t".into(),
            prompt_langs: langs.clone(),
            strict_format: true,
            parallel: 3,
            limit: Some(3),
        };
        let run_dir = dir.path().join("results/t");
        let first = run_matrix(&corpus, &two, &needles, std::slice::from_ref(&target), &run_dir, &options).unwrap();
        assert_eq!((first.planned, first.issued, first.skipped), (4, 3, 0));

        let options = RunOptions { limit: None, ..options };
        let second = run_matrix(&corpus, &two, &needles, &[target], &run_dir, &options).unwrap();
        assert_eq!((second.issued, second.skipped), (1, 3));

        let records = load_records(&store_path(&run_dir, "m")).unwrap();
        assert_eq!(records.len(), 4);
        for record in records {
            let first_name = &needles.category(record.config.category).unwrap().first_name;
            let direct = mock_answer(&spec, &record.config, first_name, &record.prompt_lang);
            assert_eq!(record.response_text.as_deref(), Some(direct.as_str()));
            assert_eq!(record.attempt_count, 1);
        }
    }
}
