//! Haystack configurations, seed derivation and the configuration matrix.

use serde::{Deserialize, Serialize};

use crate::corpus::needles::ValueSets;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::rng::{fnv1a64, SplitMix64};

/// Haystack sizes in English words.
pub const DEFAULT_SIZES: [usize; 5] = [1000, 2500, 5000, 10000, 25000];

/// Recipe fully determining one haystack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaystackConfig {
    pub category: u8,
    pub l1: LanguageCode,
    pub l2: LanguageCode,
    pub x1: String,
    pub x2: String,
    pub y: String,
    pub size_budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigGroup {
    BilingualConflicting,
    MonolingualConflicting,
    BilingualNonConflicting,
    MonolingualNonConflicting,
}

impl HaystackConfig {
    pub fn is_conflicting(&self) -> bool {
        self.x1 != self.x2
    }

    pub fn is_monolingual(&self) -> bool {
        self.l1 == self.l2
    }

    pub fn group(&self) -> ConfigGroup {
        match (self.is_monolingual(), self.is_conflicting()) {
            (false, true) => ConfigGroup::BilingualConflicting,
            (true, true) => ConfigGroup::MonolingualConflicting,
            (false, false) => ConfigGroup::BilingualNonConflicting,
            (true, false) => ConfigGroup::MonolingualNonConflicting,
        }
    }

    /// Stable identifier, unique within one size.
    pub fn id(&self) -> String {
        format!(
            "c{}-{}-{}-{}-{}",
            self.category,
            self.x1.to_lowercase(),
            self.x2.to_lowercase(),
            self.l1,
            self.l2
        )
    }

    /// The same configuration with the two needle languages swapped.
    pub fn swapped(&self) -> Self {
        Self {
            l1: self.l2.clone(),
            l2: self.l1.clone(),
            ..self.clone()
        }
    }
}

/// Seed for a needle: FNV-1a 64 over `"category|x1|x2|y"`.
///
/// Languages and size are deliberately not inputs, so every language pair
/// and every size of one needle share language draws and article order.
pub fn derive_seed(sets: &ValueSets, category: u8, x1: &str, x2: &str, y: &str) -> Result<u64> {
    sets.check_category(category)?;
    sets.check_surname(x1)?;
    sets.check_surname(x2)?;
    sets.check_entity(y)?;
    Ok(fnv1a64(&format!("{category}|{x1}|{x2}|{y}")))
}

/// Entity for a (category, surname pair): first splitmix64 output seeded
/// with FNV-1a of `"category|x1|x2"`, reduced modulo the entity count.
pub fn choose_entity<'a>(sets: &'a ValueSets, category: u8, x1: &str, x2: &str) -> Result<&'a str> {
    if sets.entities.is_empty() {
        return Err(Error::Config("no entities registered".into()));
    }
    let mut rng = SplitMix64::new(fnv1a64(&format!("{category}|{x1}|{x2}")));
    let index = rng.next_u64() % sets.entities.len() as u64;
    Ok(&sets.entities[index as usize])
}

/// All configurations for one size: category × ordered surname pair ×
/// ordered language pair (including the monolingual diagonal).
pub fn enumerate_configs(
    sets: &ValueSets,
    languages: &[LanguageCode],
    size_budget: usize,
) -> Result<Vec<HaystackConfig>> {
    if languages.is_empty() {
        return Err(Error::Config("language set is empty".into()));
    }
    let mut languages = languages.to_vec();
    languages.sort();
    languages.dedup();

    let mut configs = Vec::with_capacity(
        sets.categories.len() * sets.surnames.len().pow(2) * languages.len().pow(2),
    );
    for &category in &sets.categories {
        for x1 in &sets.surnames {
            for x2 in &sets.surnames {
                let y = choose_entity(sets, category, x1, x2)?;
                let seed = derive_seed(sets, category, x1, x2, y)?;
                for l1 in &languages {
                    for l2 in &languages {
                        configs.push(HaystackConfig {
                            category,
                            l1: l1.clone(),
                            l2: l2.clone(),
                            x1: x1.clone(),
                            x2: x2.clone(),
                            y: y.to_string(),
                            size_budget,
                            seed,
                        });
                    }
                }
            }
        }
    }
    Ok(configs)
}

/// Counts per group in the order bilingual-conflicting,
/// monolingual-conflicting, bilingual-non-conflicting,
/// monolingual-non-conflicting.
pub fn group_counts(configs: &[HaystackConfig]) -> [usize; 4] {
    let mut counts = [0; 4];
    for config in configs {
        let slot = match config.group() {
            ConfigGroup::BilingualConflicting => 0,
            ConfigGroup::MonolingualConflicting => 1,
            ConfigGroup::BilingualNonConflicting => 2,
            ConfigGroup::MonolingualNonConflicting => 3,
        };
        counts[slot] += 1;
    }
    counts
}
