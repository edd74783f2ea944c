use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::config::{ConfigGroup, HaystackConfig};
use crate::error::{Error, Result};

/// Two bilingual conflicting haystacks differing only in needle language
/// order. `a` is the member whose `l1` sorts first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastivePair {
    pub a: HaystackConfig,
    pub b: HaystackConfig,
}

impl ContrastivePair {
    pub fn id(&self) -> String {
        self.a.id()
    }
}

type TwinKey = (u8, String, String, usize, String, String);

fn twin_key(config: &HaystackConfig, swap: bool) -> TwinKey {
    let (l1, l2) = if swap {
        (&config.l2, &config.l1)
    } else {
        (&config.l1, &config.l2)
    };
    (
        config.category,
        config.x1.clone(),
        config.x2.clone(),
        config.size_budget,
        l1.to_string(),
        l2.to_string(),
    )
}

pub fn make_contrastive_pairs(configs: &[HaystackConfig]) -> Result<Vec<ContrastivePair>> {
    let candidates: Vec<&HaystackConfig> = configs
        .iter()
        .filter(|c| c.group() == ConfigGroup::BilingualConflicting)
        .collect();
    let by_key: HashMap<TwinKey, &HaystackConfig> =
        candidates.iter().map(|c| (twin_key(c, false), *c)).collect();
    if by_key.len() != candidates.len() {
        return Err(Error::Invariant("duplicate configuration in enumeration".into()));
    }

    let mut pairs = Vec::with_capacity(candidates.len() / 2);
    for config in &candidates {
        if config.l1 > config.l2 {
            continue;
        }
        let twin = by_key.get(&twin_key(config, true)).ok_or_else(|| {
            Error::Invariant(format!("configuration {} has no language-swapped twin", config.id()))
        })?;
        if twin.seed != config.seed {
            return Err(Error::Invariant(format!(
                "twins of {} have different seeds",
                config.id()
            )));
        }
        pairs.push(ContrastivePair {
            a: (*config).clone(),
            b: (*twin).clone(),
        });
    }
    if pairs.len() * 2 != candidates.len() {
        return Err(Error::Invariant(format!(
            "{} bilingual conflicting configurations formed {} pairs",
            candidates.len(),
            pairs.len()
        )));
    }
    Ok(pairs)
}
