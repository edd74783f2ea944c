//! Corpus synthesis: article pool, needle templates, configuration
//! enumeration, haystack assembly and contrastive pairs.

mod assemble;
mod config;
mod generate;
mod needles;
mod pairs;
mod pool;

pub use assemble::{
    article_order, assemble_haystack, assign_languages, select_within_budget, Haystack,
    NeedlePosition, Slot,
};
pub use config::{
    choose_entity, derive_seed, enumerate_configs, group_counts, ConfigGroup, HaystackConfig,
    DEFAULT_SIZES,
};
pub use generate::{
    corpus_checksum, corpus_sizes, generate_corpus, load_manifest, manifest_path, CorpusSummary,
    ManifestEntry, SizeSummary,
};
pub use needles::{Category, LanguageInfo, NeedleSet, NeedleTemplate, Surname, ValueSets};
pub use pairs::{make_contrastive_pairs, ContrastivePair};
pub use pool::{split_paragraphs, Article, ArticlePool};
