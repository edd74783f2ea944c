//! Language assignment, article permutation and haystack rendering.
//!
//! Draw order on the splitmix64 stream seeded with `config.seed`:
//! one coin per non-needle article in pool (id) order, then a
//! Fisher–Yates shuffle of the pool indices. A coin of 0 selects the
//! lexicographically smaller language of the pair and 1 the larger one,
//! so a configuration and its language-swapped twin put every non-needle
//! article in the same language.

use serde::{Deserialize, Serialize};

use crate::corpus::config::HaystackConfig;
use crate::corpus::needles::NeedleSet;
use crate::corpus::pool::ArticlePool;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub article_id: String,
    pub language: LanguageCode,
    /// 1 or 2 when this article carries a needle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub needle: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedlePosition {
    pub slot: usize,
    /// 1-based paragraph index inside the article.
    pub paragraph: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Haystack {
    pub config: HaystackConfig,
    pub slots: Vec<Slot>,
    pub rendered_text: String,
    /// Needle 1 then needle 2.
    pub needle_positions: [NeedlePosition; 2],
    pub total_english_words: usize,
}

struct Layout {
    languages: Vec<LanguageCode>,
    order: Vec<usize>,
}

fn draw_layout(config: &HaystackConfig, n_slots: usize, needle_slots: [usize; 2]) -> Layout {
    let mut rng = SplitMix64::new(config.seed);
    let (low, high) = if config.l1 <= config.l2 {
        (&config.l1, &config.l2)
    } else {
        (&config.l2, &config.l1)
    };
    let languages = (0..n_slots)
        .map(|slot| {
            if slot == needle_slots[0] {
                config.l1.clone()
            } else if slot == needle_slots[1] {
                config.l2.clone()
            } else if rng.coin() {
                high.clone()
            } else {
                low.clone()
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n_slots).collect();
    rng.shuffle(&mut order);
    Layout { languages, order }
}

/// Language of every slot (indexed in pool order).
pub fn assign_languages(
    config: &HaystackConfig,
    n_slots: usize,
    needle_slots: [usize; 2],
) -> Vec<LanguageCode> {
    draw_layout(config, n_slots, needle_slots).languages
}

/// Pool-order indices in presentation order.
pub fn article_order(config: &HaystackConfig, n_slots: usize, needle_slots: [usize; 2]) -> Vec<usize> {
    draw_layout(config, n_slots, needle_slots).order
}

/// Selects articles from `order`: needle articles always, others as a
/// greedy prefix while the English word budget holds. Returns the kept
/// positions in presentation order and their total word count.
pub fn select_within_budget(
    order: &[usize],
    words: &[usize],
    needle_slots: [usize; 2],
    budget: usize,
) -> Result<(Vec<usize>, usize)> {
    let needle_words = words[needle_slots[0]] + words[needle_slots[1]];
    if needle_words > budget {
        return Err(Error::Budget(format!(
            "needle articles alone have {needle_words} English words, budget is {budget}"
        )));
    }
    let mut total = needle_words;
    let mut open = true;
    let mut kept = Vec::new();
    for &slot in order {
        if needle_slots.contains(&slot) {
            kept.push(slot);
        } else if open && total + words[slot] <= budget {
            total += words[slot];
            kept.push(slot);
        } else {
            open = false;
        }
    }
    Ok((kept, total))
}

pub fn assemble_haystack(
    config: &HaystackConfig,
    pool: &ArticlePool,
    needles: &NeedleSet,
) -> Result<Haystack> {
    let category = needles.category(config.category)?;
    let mut needle_slots = [0usize; 2];
    for (i, template) in category.templates.iter().enumerate() {
        needle_slots[i] = pool.index_of(&template.target_article).ok_or_else(|| {
            Error::Corpus(format!(
                "needle article {} (category {}) is not in the pool",
                template.target_article, config.category
            ))
        })?;
    }

    let articles: Vec<_> = pool.articles().collect();
    let layout = draw_layout(config, articles.len(), needle_slots);
    let words: Vec<usize> = articles.iter().map(|a| a.english_word_count).collect();
    let (kept, total_english_words) =
        select_within_budget(&layout.order, &words, needle_slots, config.size_budget)?;

    let needle_texts = [
        needles.render_needle(config.category, 0, &config.l1, &config.x1, &config.y)?,
        needles.render_needle(config.category, 1, &config.l2, &config.x2, &config.y)?,
    ];

    let mut slots = Vec::with_capacity(kept.len());
    let mut blocks = Vec::with_capacity(kept.len());
    let mut positions = [None, None];
    for (slot_index, &pool_index) in kept.iter().enumerate() {
        let article = articles[pool_index];
        let language = &layout.languages[pool_index];
        let mut paragraphs = article.paragraphs_in(language)?.to_vec();
        let needle = needle_slots.iter().position(|&s| s == pool_index);
        if let Some(which) = needle {
            let paragraph = category.templates[which].target_paragraph;
            let target = paragraphs.get_mut(paragraph - 1).ok_or_else(|| {
                Error::Corpus(format!(
                    "article {} has {} paragraphs, needle targets paragraph {paragraph}",
                    article.id,
                    article.paragraphs_in(language).map(|p| p.len()).unwrap_or(0)
                ))
            })?;
            target.push_str(needles.separator(language));
            target.push_str(&needle_texts[which]);
            positions[which] = Some(NeedlePosition {
                slot: slot_index,
                paragraph,
            });
        }
        slots.push(Slot {
            article_id: article.id.clone(),
            language: language.clone(),
            needle: needle.map(|w| w as u8 + 1),
        });
        blocks.push(paragraphs.join("\n\n"));
    }

    let needle_positions = match positions {
        [Some(a), Some(b)] => [a, b],
        _ => return Err(Error::Invariant("needle article dropped from haystack".into())),
    };

    Ok(Haystack {
        config: config.clone(),
        slots,
        rendered_text: blocks.join("\n\n"),
        needle_positions,
        total_english_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::config::{derive_seed, enumerate_configs};
    use crate::corpus::needles::ValueSets;
    use std::path::Path;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn config(l1: &str, l2: &str) -> HaystackConfig {
        let sets = ValueSets::standard();
        HaystackConfig {
            category: 1,
            l1: lang(l1),
            l2: lang(l2),
            x1: "Delcroft".into(),
            x2: "Quellman".into(),
            y: "Cinderfax".into(),
            size_budget: 1000,
            seed: derive_seed(&sets, 1, "Delcroft", "Quellman", "Cinderfax").unwrap(),
        }
    }

    fn fixtures() -> (ArticlePool, NeedleSet) {
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        (
            ArticlePool::load(&data.join("pool")).unwrap(),
            NeedleSet::load(&data.join("needles.toml")).unwrap(),
        )
    }

    #[test]
    fn monolingual_assigns_one_language() {
        let langs = assign_languages(&config("rus", "rus"), 34, [3, 7]);
        assert!(langs.iter().all(|l| l.as_str() == "rus"));
    }

    #[test]
    fn golden_assignment_over_32_free_slots() {
        // Reference splitmix64 run once with seed 9910767469420047518;
        // bit 0 -> cmn, bit 1 -> eng.
        let expected_bits = "10110110000010101101001101001010";
        let langs = assign_languages(&config("eng", "cmn"), 34, [0, 1]);
        assert_eq!(langs[0].as_str(), "eng");
        assert_eq!(langs[1].as_str(), "cmn");
        let bits: String = langs[2..]
            .iter()
            .map(|l| if l.as_str() == "eng" { '1' } else { '0' })
            .collect();
        assert_eq!(bits, expected_bits);
    }

    #[test]
    fn golden_permutation_after_draws() {
        let order = article_order(&config("eng", "cmn"), 34, [0, 1]);
        let expected = [
            29, 33, 28, 6, 27, 15, 22, 5, 10, 2, 0, 12, 21, 14, 11, 24, 13, 4, 8, 25, 7, 20, 26, 1,
            9, 19, 17, 32, 16, 18, 3, 30, 31, 23,
        ];
        assert_eq!(order, expected);
    }

    #[test]
    fn swapped_twin_keeps_non_needle_languages() {
        let a = assign_languages(&config("eng", "cmn"), 34, [4, 9]);
        let b = assign_languages(&config("cmn", "eng"), 34, [4, 9]);
        for slot in 0..34 {
            if slot == 4 || slot == 9 {
                assert_ne!(a[slot], b[slot]);
            } else {
                assert_eq!(a[slot], b[slot]);
            }
        }
    }

    #[test]
    fn english_needle_text_is_appended() {
        let (pool, needles) = fixtures();
        let mut cfg = config("eng", "cmn");
        cfg.size_budget = 1_000_000_000;
        let haystack = assemble_haystack(&cfg, &pool, &needles).unwrap();
        assert!(haystack.rendered_text.contains(
            "John Delcroft, the original lead vocalist of Cinderfax, praised Rondell's work on the album cover picture."
        ));
        assert!(haystack.rendered_text.contains("Cinderfax的原主唱John Quellman"));
        assert_eq!(haystack.slots.len(), pool.len());
        assert_eq!(haystack.total_english_words, pool.total_english_words());
        let needle_slot = &haystack.slots[haystack.needle_positions[0].slot];
        assert_eq!(needle_slot.article_id, "wn250819");
        assert_eq!(needle_slot.language.as_str(), "eng");
        assert_eq!(haystack.needle_positions[0].paragraph, 3);
    }

    #[test]
    fn needle_is_last_sentence_of_target_paragraph() {
        let (pool, needles) = fixtures();
        let haystack = assemble_haystack(&config("eng", "deu"), &pool, &needles).unwrap();
        let position = haystack.needle_positions[0];
        let article = pool.get("wn250819").unwrap();
        let original = &article.paragraphs_in(&lang("eng")).unwrap()[position.paragraph - 1];
        let needle = needles.render_needle(1, 0, &lang("eng"), "Delcroft", "Cinderfax").unwrap();
        assert!(haystack.rendered_text.contains(&format!("{original} {needle}\n")));
    }

    /// Independent replay of the greedy rule over the documented stream.
    fn greedy_oracle(cfg: &HaystackConfig, pool: &ArticlePool, needle_ids: [&str; 2]) -> Vec<String> {
        let ids: Vec<&str> = pool.articles().map(|a| a.id.as_str()).collect();
        let mut rng = SplitMix64::new(cfg.seed);
        for id in &ids {
            if !needle_ids.contains(id) {
                rng.next_u64();
            }
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        let mut budget_left = cfg.size_budget as i64;
        for id in needle_ids {
            budget_left -= pool.get(id).unwrap().english_word_count as i64;
        }
        let mut stopped = false;
        let mut out = Vec::new();
        for idx in order {
            let id = ids[idx];
            if needle_ids.contains(&id) {
                out.push(id.to_string());
                continue;
            }
            let w = pool.get(id).unwrap().english_word_count as i64;
            if !stopped && w <= budget_left {
                budget_left -= w;
                out.push(id.to_string());
            } else {
                stopped = true;
            }
        }
        out
    }

    #[test]
    fn small_budget_matches_greedy_oracle() {
        let (pool, needles) = fixtures();
        let configs = enumerate_configs(&needles.value_sets(), &LanguageCode::standard_set(), 1000).unwrap();
        for cfg in configs.iter().step_by(7) {
            let haystack = assemble_haystack(cfg, &pool, &needles).unwrap();
            assert!(haystack.total_english_words <= 1000);
            let cat = needles.category(cfg.category).unwrap();
            let needle_ids = [
                cat.templates[0].target_article.as_str(),
                cat.templates[1].target_article.as_str(),
            ];
            let ids: Vec<String> = haystack.slots.iter().map(|s| s.article_id.clone()).collect();
            assert_eq!(ids, greedy_oracle(cfg, &pool, needle_ids), "config {}", cfg.id());
        }
    }

    #[test]
    fn budget_below_needle_articles_fails() {
        let (pool, needles) = fixtures();
        let mut cfg = config("eng", "cmn");
        cfg.size_budget = 100;
        assert!(matches!(
            assemble_haystack(&cfg, &pool, &needles),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn missing_translation_names_article_and_language() {
        let (pool, needles) = fixtures();
        let mut cfg = config("eng", "fin");
        cfg.size_budget = 1_000_000;
        let err = assemble_haystack(&cfg, &pool, &needles).unwrap_err();
        assert!(err.to_string().contains("fin"), "{err}");
    }

    #[test]
    fn rendering_is_bit_identical() {
        let (pool, needles) = fixtures();
        let cfg = config("rus", "tur");
        let a = assemble_haystack(&cfg, &pool, &needles).unwrap();
        let b = assemble_haystack(&cfg, &pool, &needles).unwrap();
        assert_eq!(a, b);
    }
}
