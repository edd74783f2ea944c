//! Stage orchestration over a working directory.
//!
//! Artifact layout below the working directory:
//!
//! ```text
//! corpus/<size>/{manifest.jsonl,<config-id>.txt}
//! results/<run_id>/{manifest.json,<backend_id>.jsonl}
//! classified/<run_id>.jsonl
//! pairs/<run_id>.jsonl
//! analysis/<run_id>/{analysis.json,posterior.tsv,binomial.tsv,origin_contrast.tsv}
//! reports/<run_id>/
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::backends::{build_backend, BackendKind, BackendsFile, Origin};
use crate::classify::{
    build_pair_results, classify_records, outcome_summary, read_jsonl, write_jsonl,
    ClassifiedRecord, PairResult,
};
use crate::corpus::{
    corpus_checksum, generate_corpus, load_manifest, ArticlePool, CorpusSummary, NeedleSet,
    DEFAULT_SIZES,
};
use crate::error::{Error, Result};
use crate::inference::{
    build_cells, fit_hierarchical, origin_contrast, pairwise_tests, win_counts, McmcConfig,
    OriginContrast, Variant,
};
use crate::lang::{check_language_set, LanguageCode};
use crate::report::{render_outcomes, Format, OriginMatrix, PosteriorTable, WinMatrix};
use crate::runner::{compact as compact_store, load_records, run_matrix, store_path, RunOptions, RunStats, RunTarget};
use crate::util;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_languages() -> Vec<LanguageCode> {
    LanguageCode::standard_set()
}

fn default_sizes() -> Vec<usize> {
    DEFAULT_SIZES.to_vec()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub run_id: String,
    /// Defaults to the corpus languages.
    pub prompt_langs: Option<Vec<LanguageCode>>,
    pub strict_format: bool,
    pub parallel: usize,
    /// Backend ids to query; empty means every backend in the file.
    pub backends: Vec<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            run_id: "default".into(),
            prompt_langs: None,
            strict_format: true,
            parallel: 8,
            backends: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub variants: Vec<Variant>,
    pub bonferroni_family: usize,
    pub alpha: f64,
    pub mcmc: McmcConfig,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            variants: vec![Variant::Pooled, Variant::ByOrigin],
            bonferroni_family: 20,
            alpha: 0.05,
            mcmc: McmcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            format: Format::Tsv,
            out: None,
        }
    }
}

/// The declarative pipeline configuration. Relative paths in a config file
/// resolve against the file's directory; `workdir` defaults to the current
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub pool: Option<PathBuf>,
    pub needles: Option<PathBuf>,
    pub backends: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
    /// Defaults to `<workdir>/corpus`.
    pub corpus: Option<PathBuf>,
    #[serde(default = "default_languages")]
    pub languages: Vec<LanguageCode>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Restrict languages to the reference set.
    #[serde(default = "default_true")]
    pub paper_mode: bool,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub report: ReportSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pool: None,
            needles: None,
            backends: None,
            workdir: None,
            corpus: None,
            languages: default_languages(),
            sizes: default_sizes(),
            paper_mode: true,
            run: RunSection::default(),
            analysis: AnalysisSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        Self::from_toml_str(path, &text)
    }

    /// Parses `text` as if read from `path`.
    pub fn from_toml_str(path: &Path, text: &str) -> Result<Self> {
        let mut config: PipelineConfig = util::parse_toml(path, text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for slot in [
            &mut config.pool,
            &mut config.needles,
            &mut config.backends,
            &mut config.workdir,
            &mut config.corpus,
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if let Some(p) = config.report.out.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_language_set(&self.languages, self.paper_mode)?;
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Config("sizes must be a non-empty list of positive word budgets".into()));
        }
        if self.run.run_id.is_empty()
            || !self.run.run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            || self.run.run_id.starts_with('.')
        {
            return Err(Error::Config(format!(
                "run id `{}` must be non-empty and use only letters, digits, `-`, `_` and `.`",
                self.run.run_id
            )));
        }
        if self.analysis.variants.is_empty() {
            return Err(Error::Config("analysis.variants must not be empty".into()));
        }
        if self.analysis.bonferroni_family == 0 || !(self.analysis.alpha > 0.0 && self.analysis.alpha < 1.0) {
            return Err(Error::Config("bonferroni family must be positive and alpha in (0, 1)".into()));
        }
        self.analysis.mcmc.validate()
    }

    pub fn layout(&self) -> Layout {
        let root = self.workdir.clone().unwrap_or_else(|| PathBuf::from("."));
        Layout {
            corpus: self.corpus.clone().unwrap_or_else(|| root.join("corpus")),
            root,
        }
    }

    pub fn prompt_langs(&self) -> Vec<LanguageCode> {
        let mut langs = self.run.prompt_langs.clone().unwrap_or_else(|| self.languages.clone());
        langs.sort();
        langs.dedup();
        langs
    }

    fn sorted_sizes(&self) -> Vec<usize> {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    fn required(&self, path: &Option<PathBuf>, key: &str, flag: &str) -> Result<PathBuf> {
        path.clone().ok_or_else(|| {
            Error::Config(format!("no `{key}` path configured (set it in --config or pass {flag})"))
        })
    }

    fn load_needles(&self) -> Result<NeedleSet> {
        NeedleSet::load(&self.required(&self.needles, "needles", "--needles")?)
    }

    fn load_backends(&self) -> Result<BackendsFile> {
        BackendsFile::load(&self.required(&self.backends, "backends", "--backends")?)
    }
}

/// Artifact paths; each is a pure function of the run id.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
    corpus: PathBuf,
}

impl Layout {
    pub fn corpus_dir(&self) -> PathBuf {
        self.corpus.clone()
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("results").join(run_id)
    }

    pub fn run_manifest(&self, run_id: &str) -> PathBuf {
        self.run_dir(run_id).join("manifest.json")
    }

    pub fn classified(&self, run_id: &str) -> PathBuf {
        self.root.join("classified").join(format!("{run_id}.jsonl"))
    }

    pub fn pairs(&self, run_id: &str) -> PathBuf {
        self.root.join("pairs").join(format!("{run_id}.jsonl"))
    }

    pub fn analysis_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("analysis").join(run_id)
    }

    pub fn analysis_json(&self, run_id: &str) -> PathBuf {
        self.analysis_dir(run_id).join("analysis.json")
    }

    pub fn report_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("reports").join(run_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBackend {
    pub id: String,
    pub kind: BackendKind,
    pub model: String,
    pub origin: Origin,
    /// Seed of a mock backend's response stream.
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub corpus_checksum: String,
    pub backends: Vec<ManifestBackend>,
    pub languages: Vec<LanguageCode>,
    pub prompt_langs: Vec<LanguageCode>,
    pub sizes: Vec<usize>,
    pub strict_format: bool,
    pub bonferroni_family: usize,
    pub alpha: f64,
    pub mcmc: McmcConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                subcommand: "run".into(),
            });
        }
        Ok(serde_json::from_str(&util::read_to_string(path)?)?)
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        util::write_atomic(path, text.as_bytes())
    }

    /// Recomputes the corpus checksum and compares it with the recorded one.
    pub fn verify_corpus(&self, corpus_dir: &Path) -> Result<()> {
        let actual = checksum_of(corpus_dir)?;
        if actual != self.corpus_checksum {
            return Err(Error::Checksum {
                expected: self.corpus_checksum.clone(),
                actual,
            });
        }
        Ok(())
    }
}

fn checksum_of(corpus_dir: &Path) -> Result<String> {
    if !corpus_dir.is_dir() {
        return Err(Error::MissingArtifact {
            path: corpus_dir.to_path_buf(),
            subcommand: "generate".into(),
        });
    }
    corpus_checksum(corpus_dir)
}

pub fn generate(config: &PipelineConfig) -> Result<CorpusSummary> {
    config.validate()?;
    let pool = ArticlePool::load(&config.required(&config.pool, "pool", "--pool")?)?;
    let needles = config.load_needles()?;
    generate_corpus(
        &config.layout().corpus_dir(),
        &pool,
        &needles,
        &config.languages,
        &config.sorted_sizes(),
    )
}

/// Queries every configured backend; `limit` caps the number of new
/// queries (an interrupted run is resumed by calling again).
pub fn run(config: &PipelineConfig, limit: Option<usize>) -> Result<RunStats> {
    config.validate()?;
    let backends = config.load_backends()?.select(&config.run.backends)?;
    if backends.is_empty() {
        return Err(Error::Config("the backends file defines no backend".into()));
    }
    let needles = config.load_needles()?;
    let layout = config.layout();
    let run_id = &config.run.run_id;
    let corpus_dir = layout.corpus_dir();
    let manifest_path = layout.run_manifest(run_id);

    let mut manifest = RunManifest {
        run_id: run_id.clone(),
        tool_version: TOOL_VERSION.into(),
        corpus_checksum: checksum_of(&corpus_dir)?,
        backends: Vec::new(),
        languages: config.languages.clone(),
        prompt_langs: config.prompt_langs(),
        sizes: config.sorted_sizes(),
        strict_format: config.run.strict_format,
        bonferroni_family: config.analysis.bonferroni_family,
        alpha: config.analysis.alpha,
        mcmc: config.analysis.mcmc.clone(),
    };
    if manifest_path.exists() {
        let previous = RunManifest::load(&manifest_path)?;
        previous.verify_corpus(&corpus_dir)?;
        if (&previous.prompt_langs, &previous.sizes, previous.strict_format)
            != (&manifest.prompt_langs, &manifest.sizes, manifest.strict_format)
        {
            return Err(Error::Config(format!(
                "run `{run_id}` was started with different languages, sizes or answer format; use a new --run-id"
            )));
        }
        manifest.backends = previous.backends;
    }
    for backend in &backends {
        if !manifest.backends.iter().any(|b| b.id == backend.id) {
            manifest.backends.push(ManifestBackend {
                id: backend.id.clone(),
                kind: backend.kind,
                model: backend.model.clone(),
                origin: backend.origin,
                rng_seed: backend.mock.as_ref().map(|m| m.rng_seed),
            });
        }
    }
    manifest.write(&manifest_path)?;

    let mut haystacks = Vec::new();
    for size in &manifest.sizes {
        haystacks.extend(load_manifest(&corpus_dir, *size)?);
    }
    let targets = backends
        .into_iter()
        .map(|config| Ok(RunTarget { backend: build_backend(&config)?, config }))
        .collect::<Result<Vec<_>>>()?;
    let options = RunOptions {
        run_id: run_id.clone(),
        prompt_langs: manifest.prompt_langs.clone(),
        strict_format: manifest.strict_format,
        parallel: config.run.parallel,
        limit,
    };
    run_matrix(&corpus_dir, &haystacks, &needles, &targets, &layout.run_dir(run_id), &options)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassifyStats {
    pub records: usize,
    pub transport_failures: usize,
    pub pairs: usize,
    pub unmatched: usize,
}

pub fn classify(config: &PipelineConfig) -> Result<ClassifyStats> {
    let layout = config.layout();
    let run_id = &config.run.run_id;
    let manifest = RunManifest::load(&layout.run_manifest(run_id))?;
    manifest.verify_corpus(&layout.corpus_dir())?;
    let needles = config.load_needles()?;

    let mut records = Vec::new();
    for backend in &manifest.backends {
        let path = store_path(&layout.run_dir(run_id), &backend.id);
        if !path.exists() {
            return Err(Error::MissingArtifact { path, subcommand: "run".into() });
        }
        records.extend(load_records(&path)?);
    }
    let transport_failures = records.iter().filter(|r| r.error.is_some()).count();
    let classified = classify_records(&records, &needles)?;
    write_jsonl(&layout.classified(run_id), &classified)?;
    let (pairs, stats) = build_pair_results(&classified)?;
    write_jsonl(&layout.pairs(run_id), &pairs)?;
    Ok(ClassifyStats {
        records: records.len(),
        transport_failures,
        pairs: stats.pairs,
        unmatched: stats.unmatched,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastTable {
    pub size: usize,
    pub first: Origin,
    pub second: Origin,
    pub rows: Vec<OriginContrast>,
}

/// Everything `report` needs from `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisArtifact {
    pub run_id: String,
    pub tool_version: String,
    pub bonferroni_family: usize,
    pub alpha: f64,
    pub mcmc: McmcConfig,
    pub posteriors: Vec<PosteriorTable>,
    pub contrasts: Vec<ContrastTable>,
}

/// Binomial tests and model fits per size; `pairs_file` overrides the
/// run's pairs artifact.
pub fn analyze(config: &PipelineConfig, pairs_file: Option<&Path>) -> Result<AnalysisArtifact> {
    config.validate()?;
    let layout = config.layout();
    let run_id = &config.run.run_id;
    let manifest_path = layout.run_manifest(run_id);
    if manifest_path.exists() {
        RunManifest::load(&manifest_path)?.verify_corpus(&layout.corpus_dir())?;
    } else if pairs_file.is_some() {
        warn!("no run manifest at {}; corpus not re-verified", manifest_path.display());
    } else {
        return Err(Error::MissingArtifact { path: manifest_path, subcommand: "run".into() });
    }
    let default_pairs = layout.pairs(run_id);
    let pairs: Vec<PairResult> = read_jsonl(pairs_file.unwrap_or(&default_pairs), "classify")?;
    let settings = &config.analysis;

    let counts = win_counts(&pairs);
    let tests = pairwise_tests(&counts, settings.bonferroni_family, settings.alpha);
    let mut binomial = String::from("backend\tsize\twinner\tloser\tk\tn\tp_value\tsignificant\n");
    for t in &tests {
        let _ = writeln!(
            binomial,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.backend_id, t.size, t.winner, t.loser, t.test.k, t.test.n, t.test.p_value, t.test.significant
        );
    }

    let sizes: BTreeSet<usize> = pairs.iter().map(|p| p.size).collect();
    let mut posteriors = Vec::new();
    let mut contrasts = Vec::new();
    for &size in &sizes {
        let cells = build_cells(&pairs, size);
        for &variant in &settings.variants {
            info!("fitting {} model for size {size} ({} cells)", variant.as_str(), cells.len());
            let fit = fit_hierarchical(&cells, variant, &settings.mcmc)?;
            posteriors.extend(PosteriorTable::from_fit(size, &fit));
            if variant == Variant::ByOrigin {
                let origins: BTreeSet<Origin> = cells.iter().map(|c| c.key.origin).collect();
                if origins.contains(&Origin::East) && origins.contains(&Origin::West) {
                    contrasts.push(ContrastTable {
                        size,
                        first: Origin::East,
                        second: Origin::West,
                        rows: origin_contrast(&fit, Origin::East, Origin::West)?,
                    });
                }
            }
        }
    }

    let artifact = AnalysisArtifact {
        run_id: run_id.clone(),
        tool_version: TOOL_VERSION.into(),
        bonferroni_family: settings.bonferroni_family,
        alpha: settings.alpha,
        mcmc: settings.mcmc.clone(),
        posteriors,
        contrasts,
    };
    let dir = layout.analysis_dir(run_id);
    util::write_atomic(&dir.join("binomial.tsv"), binomial.as_bytes())?;
    util::write_atomic(&dir.join("posterior.tsv"), posterior_tsv(&artifact.posteriors).as_bytes())?;
    util::write_atomic(&dir.join("origin_contrast.tsv"), contrast_tsv(&artifact.contrasts).as_bytes())?;
    let mut json = serde_json::to_string_pretty(&artifact)?;
    json.push('\n');
    util::write_atomic(&layout.analysis_json(run_id), json.as_bytes())?;
    Ok(artifact)
}

fn origin_label(origin: Option<Origin>) -> &'static str {
    origin.map_or("all", Origin::as_str)
}

fn posterior_tsv(tables: &[PosteriorTable]) -> String {
    let mut out = String::from(
        "size\tvariant\torigin\tparameter\tl1\tl2\tcells\twins_l1\twins_l2\tmedian\tmean\tci_low\tci_high\tp_positive\trhat\tess\tconverged\n",
    );
    for t in tables {
        let prefix = format!("{}\t{}\t{}", t.size, t.variant.as_str(), origin_label(t.origin));
        for g in &t.groups {
            let b = &g.b;
            let _ = writeln!(
                out,
                "{prefix}\tb\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                g.key.l1, g.key.l2, g.cells, g.wins_l1, g.wins_l2, b.median, b.mean, b.ci_low, b.ci_high,
                b.p_positive, b.rhat, b.ess, t.converged
            );
        }
        let s = &t.scale;
        let _ = writeln!(
            out,
            "{prefix}\ts\t\t\t\t\t\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.median, s.mean, s.ci_low, s.ci_high, s.p_positive, s.rhat, s.ess, t.converged
        );
    }
    out
}

fn contrast_tsv(tables: &[ContrastTable]) -> String {
    let mut out = String::from("size\tfirst\tsecond\tl1\tl2\tmedian\tci_low\tci_high\tp_sign\ttier\n");
    for t in tables {
        for r in &t.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.size,
                t.first.as_str(),
                t.second.as_str(),
                r.l1,
                r.l2,
                r.difference.median,
                r.difference.ci_low,
                r.difference.ci_high,
                r.p_sign,
                r.tier.as_str()
            );
        }
    }
    out
}

/// Renders every table family into `out` (default `reports/<run_id>`).
/// Returns the written files in order.
pub fn report(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let layout = config.layout();
    let run_id = &config.run.run_id;
    let format = config.report.format;
    let out_dir = config.report.out.clone().unwrap_or_else(|| layout.report_dir(run_id));
    let classified: Vec<ClassifiedRecord> = read_jsonl(&layout.classified(run_id), "classify")?;
    let pairs: Vec<PairResult> = read_jsonl(&layout.pairs(run_id), "classify")?;
    let analysis_path = layout.analysis_json(run_id);
    if !analysis_path.exists() {
        return Err(Error::MissingArtifact { path: analysis_path, subcommand: "analyze".into() });
    }
    let analysis: AnalysisArtifact = serde_json::from_str(&util::read_to_string(&analysis_path)?)?;
    render_tables(&classified, &pairs, &analysis, format, &out_dir)
}

/// Writes outcome tables, win matrices, posterior tables and origin
/// matrices for the given inputs.
pub fn render_tables(
    classified: &[ClassifiedRecord],
    pairs: &[PairResult],
    analysis: &AnalysisArtifact,
    format: Format,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let ext = format.extension();
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(format!("{name}.{ext}"));
        util::write_atomic(&path, body.as_bytes())?;
        written.push(path);
        Ok(())
    };

    let summary = outcome_summary(classified);
    let sizes: BTreeSet<usize> = summary.keys().map(|(_, size, _)| *size).collect();
    for size in sizes {
        let subset = summary
            .iter()
            .filter(|((_, s, _), _)| *s == size)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        emit(format!("outcomes_{size}"), render_outcomes(&subset, format))?;
    }

    for ((backend, size), counts) in &win_counts(pairs) {
        let matrix = WinMatrix::from_counts(backend, *size, counts, analysis.bonferroni_family, analysis.alpha);
        emit(format!("wins_{backend}_{size}"), matrix.render(format))?;
    }

    for table in &analysis.posteriors {
        let mut name = format!("posterior_{}_{}", table.size, table.variant.as_str());
        if let Some(origin) = table.origin {
            name.push('_');
            name.push_str(origin.as_str());
        }
        emit(name, table.render(format))?;
        if let Some(origin) = table.origin {
            emit(
                format!("origin_{}_{}", table.size, origin.as_str()),
                OriginMatrix::from_groups(&table.groups).render(format),
            )?;
        }
    }

    for contrast in &analysis.contrasts {
        emit(
            format!(
                "origin_{}_{}_minus_{}",
                contrast.size,
                contrast.first.as_str(),
                contrast.second.as_str()
            ),
            OriginMatrix::from_contrast(&contrast.rows).render(format),
        )?;
    }
    Ok(written)
}

/// `run`, `classify`, `analyze` and `report` in sequence, preceded by
/// `generate` when the corpus directory does not exist yet.
pub fn all(config: &PipelineConfig, limit: Option<usize>) -> Result<AllSummary> {
    let corpus = if config.layout().corpus_dir().is_dir() {
        None
    } else {
        Some(generate(config)?)
    };
    let run = run(config, limit)?;
    let classify = classify(config)?;
    let analysis = analyze(config, None)?;
    let files = report(config)?;
    Ok(AllSummary {
        corpus,
        run,
        classify,
        analysis,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct AllSummary {
    pub corpus: Option<CorpusSummary>,
    pub run: RunStats,
    pub classify: ClassifyStats,
    pub analysis: AnalysisArtifact,
    pub files: Vec<PathBuf>,
}

/// Deduplicates and sorts every result store of the run.
pub fn compact(config: &PipelineConfig) -> Result<Vec<(String, crate::runner::CompactStats)>> {
    let layout = config.layout();
    let run_id = &config.run.run_id;
    let manifest = RunManifest::load(&layout.run_manifest(run_id))?;
    manifest
        .backends
        .iter()
        .filter_map(|b| {
            let path = store_path(&layout.run_dir(run_id), &b.id);
            path.exists().then(|| compact_store(&path).map(|s| (b.id.clone(), s)))
        })
        .collect()
}
